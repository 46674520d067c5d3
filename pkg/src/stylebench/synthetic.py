"""Procedural desk-scale image datasets.

Ten shape classes rendered as small RGB images, with per-sample jitter in
position, scale, foreground/background color, contrast, and pixel noise.
Three palettes cover the experiment roles:

* ``photo`` — the in-distribution palette used for training and clean tests;
* ``ood`` — the same shapes under a shifted color/lighting distribution,
  standing in for an out-of-distribution photo test set;
* ``painting`` — smoothed, posterized renditions with a warmer palette,
  standing in for the painting domain.

Everything is a pure function of the seed, so datasets regenerate
bit-identically.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .datamodel import DomainDataset, ImageSample
from .seeding import rng_for

NUM_SHAPE_CLASSES = 10


def _shape_mask(cls: int, resolution: int, cx: float, cy: float, scale: float) -> np.ndarray:
    """Boolean foreground mask for one of the ten shape classes."""
    yy, xx = np.mgrid[0:resolution, 0:resolution].astype(np.float64)
    u = (xx - cx) / (scale * resolution)
    v = (yy - cy) / (scale * resolution)
    r = np.hypot(u, v)
    if cls == 0:  # disk
        return r < 0.5
    if cls == 1:  # square
        return np.maximum(np.abs(u), np.abs(v)) < 0.45
    if cls == 2:  # triangle
        return (v > -0.4) & (np.abs(u) < 0.5 * (0.45 - v))
    if cls == 3:  # ring
        return (r < 0.5) & (r > 0.28)
    if cls == 4:  # cross
        return ((np.abs(u) < 0.15) | (np.abs(v) < 0.15)) & (np.maximum(np.abs(u), np.abs(v)) < 0.5)
    if cls == 5:  # horizontal stripes
        return (np.sin(v * 14.0) > 0.2) & (np.abs(u) < 0.5) & (np.abs(v) < 0.5)
    if cls == 6:  # vertical stripes
        return (np.sin(u * 14.0) > 0.2) & (np.abs(u) < 0.5) & (np.abs(v) < 0.5)
    if cls == 7:  # diamond
        return (np.abs(u) + np.abs(v)) < 0.55
    if cls == 8:  # checkerboard
        return ((np.sin(u * 10.0) * np.sin(v * 10.0)) > 0.0) & (np.maximum(np.abs(u), np.abs(v)) < 0.5)
    if cls == 9:  # dot grid
        du = np.abs(((u * 4.0) % 1.0) - 0.5)
        dv = np.abs(((v * 4.0) % 1.0) - 0.5)
        return (np.hypot(du, dv) < 0.28) & (np.maximum(np.abs(u), np.abs(v)) < 0.5)
    raise ValueError(f"no shape for class {cls}")


def _render(cls: int, resolution: int, rng: np.random.Generator, palette: str) -> np.ndarray:
    cx = resolution * (0.5 + rng.uniform(-0.12, 0.12))
    cy = resolution * (0.5 + rng.uniform(-0.12, 0.12))
    scale = rng.uniform(0.55, 0.85)
    mask = _shape_mask(cls, resolution, cx, cy, scale)

    if palette == "photo":
        bg = rng.uniform(0.15, 0.45, size=3)
        fg = rng.uniform(0.55, 0.9, size=3)
        noise_amp = rng.uniform(0.02, 0.05)
    elif palette == "ood":
        # Brighter backgrounds, cooler foregrounds, stronger lighting gradient.
        bg = rng.uniform(0.45, 0.75, size=3)
        fg = rng.uniform(0.1, 0.45, size=3)
        noise_amp = rng.uniform(0.01, 0.03)
    elif palette == "painting":
        bg = rng.uniform(0.25, 0.55, size=3) * np.array([1.1, 0.95, 0.8])
        fg = rng.uniform(0.45, 0.85, size=3) * np.array([1.1, 0.95, 0.8])
        noise_amp = rng.uniform(0.0, 0.02)
    else:
        raise ValueError(f"unknown palette {palette!r}")

    img = np.where(mask[:, :, None], fg[None, None, :], bg[None, None, :])

    # Diagonal lighting gradient; stronger and direction-flipped for OOD.
    yy, xx = np.mgrid[0:resolution, 0:resolution].astype(np.float64) / resolution
    if palette == "ood":
        grad = 0.25 * (1.0 - xx - yy + 1.0) / 2.0
    else:
        grad = rng.uniform(0.0, 0.12) * (xx + yy) / 2.0
    img = img + grad[:, :, None]

    img = img + rng.normal(scale=noise_amp, size=img.shape)

    if palette == "painting":
        # Brush-like smoothing followed by coarse tonal posterization.
        img = ndimage.gaussian_filter(img, sigma=(0.9, 0.9, 0.0))
        img = np.round(img * 7.0) / 7.0

    return np.clip(img, 0.0, 1.0)


def make_synthetic_dataset(
    num_samples: int,
    seed: int,
    *,
    resolution: int = 32,
    num_classes: int = NUM_SHAPE_CLASSES,
    palette: str = "photo",
    domain: str | None = None,
    id_prefix: str | None = None,
) -> DomainDataset:
    """Generate a class-balanced synthetic dataset.

    Labels cycle through the classes, so any ``num_samples`` divisible by
    ``num_classes`` is exactly balanced.
    """
    if not 1 <= num_classes <= NUM_SHAPE_CLASSES:
        raise ValueError(f"num_classes must be in [1, {NUM_SHAPE_CLASSES}]")
    if domain is None:
        domain = "painting" if palette == "painting" else "photo"
    if id_prefix is None:
        id_prefix = palette
    samples = []
    for i in range(num_samples):
        cls = i % num_classes
        rng = rng_for(seed, "synthetic", palette, i)
        samples.append(
            ImageSample(
                id=f"{id_prefix}_{i:05d}",
                pixels=_render(cls, resolution, rng, palette),
                label=cls,
                domain=domain,
                provenance=f"synthetic/{palette}",
            )
        )
    return DomainDataset(samples=samples, num_classes=num_classes, domain=domain)
