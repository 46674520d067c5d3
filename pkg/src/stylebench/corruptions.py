"""Self-contained common-corruption suite: 15 corruptions × 5 severities.

All corruptions operate on square H×W×3 float images in [0, 1] and return the
same.  Arithmetic stays in floating point; quantization to 8 bits happens only
at PNG export.

Stochastic corruptions (the three noises, glass blur, snow, frost) consume
randomness exclusively from the seed passed to :func:`apply_corruption`.  Fog
and the elastic transform use randomized fields, but those fields are drawn
from a fixed internal seed per severity, so both are deterministic functions
of the input image and do not respond to the caller's seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from io import BytesIO

import numpy as np
from PIL import Image
from scipy import ndimage

from .datamodel import DomainDataset, ImageSample
from .seeding import derive_seed
from .severity_params import SEVERITY, spatial_scale

CATEGORY_MEMBERS = {
    "noise": ("gaussian_noise", "shot_noise", "impulse_noise"),
    "blur": ("defocus_blur", "glass_blur", "motion_blur", "zoom_blur"),
    "weather": ("snow", "frost", "fog", "brightness"),
    "digital": ("contrast", "elastic_transform", "pixelate", "jpeg_compression"),
}
CATEGORIES = tuple(CATEGORY_MEMBERS)
CORRUPTION_NAMES = tuple(name for members in CATEGORY_MEMBERS.values() for name in members)
CATEGORY_OF = {name: cat for cat, members in CATEGORY_MEMBERS.items() for name in members}

#: Corruptions that draw from the caller-provided seed.
STOCHASTIC = frozenset(
    {"gaussian_noise", "shot_noise", "impulse_noise", "glass_blur", "snow", "frost"}
)

# Internal seed root for the fixed fog / elastic fields.
_FIXED_FIELD_SEED = 0x5EED_F1E1D


class CorruptionError(ValueError):
    """Unknown corruption name or severity outside [1, 5]."""


@dataclass(frozen=True)
class CorruptionSpec:
    """A (corruption, category, severity) descriptor."""

    name: str
    severity: int

    def __post_init__(self):
        if self.name not in CATEGORY_OF:
            raise CorruptionError(f"unknown corruption {self.name!r}")
        if not 1 <= self.severity <= 5:
            raise CorruptionError(f"severity must be in [1, 5], got {self.severity}")

    @property
    def category(self) -> str:
        return CATEGORY_OF[self.name]

    @property
    def params(self):
        return SEVERITY[self.name][self.severity - 1]


def all_specs() -> list[CorruptionSpec]:
    """All 75 (corruption, severity) combinations, grouped by category."""
    return [CorruptionSpec(name, s) for name in CORRUPTION_NAMES for s in range(1, 6)]


@dataclass
class CorruptedSet:
    """A clean test set transformed by one corruption spec."""

    spec: CorruptionSpec
    samples: list[ImageSample]


# ---------------------------------------------------------------------------
# helpers


def _clipped_zoom(channel: np.ndarray, factor: float) -> np.ndarray:
    """Zoom a 2-D array about its center and crop back to the original size."""
    n = channel.shape[0]
    zoomed = ndimage.zoom(channel, factor, order=1, mode="nearest")
    m = zoomed.shape[0]
    if m < n:
        out = np.zeros_like(channel)
        off = (n - m) // 2
        out[off : off + m, off : off + m] = zoomed
        return out
    off = (m - n) // 2
    return zoomed[off : off + n, off : off + n]


def _motion_kernel(length: int, angle_deg: float) -> np.ndarray:
    length = max(int(round(length)), 1)
    kernel = np.zeros((length, length))
    theta = np.deg2rad(angle_deg)
    cx = cy = (length - 1) / 2.0
    for t in np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, 2 * length):
        i = int(round(cy + t * np.sin(theta)))
        j = int(round(cx + t * np.cos(theta)))
        if 0 <= i < length and 0 <= j < length:
            kernel[i, j] = 1.0
    return kernel / kernel.sum()


def _convolve_rgb(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return np.stack(
        [ndimage.convolve(x[:, :, c], kernel, mode="reflect") for c in range(3)], axis=2
    )


def _plasma_fractal(size: int, wibbledecay: float, rng: np.random.Generator) -> np.ndarray:
    """Diamond-square heightmap in [0, 1] on a power-of-two grid >= size."""
    mapsize = 1
    while mapsize < size:
        mapsize *= 2
    maparray = np.zeros((mapsize, mapsize), dtype=np.float64)
    maparray[0, 0] = 0.0
    stepsize = mapsize
    wibble = 100.0

    def wibbled_mean(array):
        return array / 4.0 + wibble * rng.uniform(-wibble, wibble, array.shape) / wibble

    while stepsize >= 2:
        half = stepsize // 2
        # square step
        corners = (
            maparray[0::stepsize, 0::stepsize]
            + np.roll(maparray[0::stepsize, 0::stepsize], -1, axis=0)
            + np.roll(maparray[0::stepsize, 0::stepsize], -1, axis=1)
            + np.roll(np.roll(maparray[0::stepsize, 0::stepsize], -1, axis=0), -1, axis=1)
        )
        maparray[half::stepsize, half::stepsize] = wibbled_mean(corners)
        # diamond step
        centers = maparray[half::stepsize, half::stepsize]
        up = (
            maparray[0::stepsize, 0::stepsize]
            + np.roll(maparray[0::stepsize, 0::stepsize], -1, axis=1)
            + centers
            + np.roll(centers, 1, axis=0)
        )
        maparray[0::stepsize, half::stepsize] = wibbled_mean(up)
        left = (
            maparray[0::stepsize, 0::stepsize]
            + np.roll(maparray[0::stepsize, 0::stepsize], -1, axis=0)
            + centers
            + np.roll(centers, 1, axis=1)
        )
        maparray[half::stepsize, 0::stepsize] = wibbled_mean(left)
        stepsize = half
        wibble /= wibbledecay

    lo, hi = maparray.min(), maparray.max()
    if hi > lo:
        maparray = (maparray - lo) / (hi - lo)
    return maparray[:size, :size]


def _rgb_to_hsv(x: np.ndarray) -> np.ndarray:
    r, g, b = x[:, :, 0], x[:, :, 1], x[:, :, 2]
    v = x.max(axis=2)
    c = v - x.min(axis=2)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_c = np.where(c > 0, c, 1.0)
        h = np.select(
            [c == 0, v == r, v == g],
            [0.0, ((g - b) / safe_c) % 6.0, (b - r) / safe_c + 2.0],
            default=(r - g) / safe_c + 4.0,
        )
    return np.stack([h / 6.0, s, v], axis=2)


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[:, :, 0] * 6.0, hsv[:, :, 1], hsv[:, :, 2]
    i = np.floor(h).astype(int) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=2)


# ---------------------------------------------------------------------------
# corruption transforms


def _gaussian_noise(x, sigma, rng):
    return x + rng.normal(scale=sigma, size=x.shape)


def _shot_noise(x, photons, rng):
    return rng.poisson(x * photons) / photons


def _impulse_noise(x, amount, rng):
    hit = rng.random(x.shape) < amount
    salt = rng.random(x.shape) < 0.5
    out = x.copy()
    out[hit & salt] = 1.0
    out[hit & ~salt] = 0.0
    return out


def _defocus_blur(x, params, scale):
    radius, alias = params
    r = max(radius * scale, 1.0)
    size = int(np.ceil(r)) * 2 + 1
    yy, xx = np.mgrid[:size, :size] - (size - 1) / 2.0
    kernel = (np.hypot(yy, xx) <= r).astype(np.float64)
    kernel = ndimage.gaussian_filter(kernel, alias)
    kernel /= kernel.sum()
    return _convolve_rgb(x, kernel)


def _glass_blur(x, params, scale, rng):
    sigma, max_delta, iterations = params
    sigma_eff = max(sigma * scale, 0.3)
    delta = max(int(round(max_delta * scale)), 1)
    n = x.shape[0]
    out = np.stack([ndimage.gaussian_filter(x[:, :, c], sigma_eff) for c in range(3)], axis=2)
    ii, jj = np.mgrid[:n, :n]
    for _ in range(iterations):
        di = rng.integers(-delta, delta + 1, size=(n, n))
        dj = rng.integers(-delta, delta + 1, size=(n, n))
        src_i = np.clip(ii + di, 0, n - 1)
        src_j = np.clip(jj + dj, 0, n - 1)
        out = out[src_i, src_j]
    return np.stack([ndimage.gaussian_filter(out[:, :, c], sigma_eff) for c in range(3)], axis=2)


def _motion_blur(x, params, scale):
    length, angle = params
    return _convolve_rgb(x, _motion_kernel(max(length * scale, 3), angle))


def _zoom_blur(x, max_zoom, _scale):
    factors = np.arange(1.0, max_zoom + 1e-9, 0.01)
    acc = x.copy()
    for z in factors[1:]:
        acc += np.stack([_clipped_zoom(x[:, :, c], z) for c in range(3)], axis=2)
    return acc / len(factors)


def _snow(x, params, scale, rng):
    density, flake_zoom, motion_len, blend = params
    n = x.shape[0]
    flakes = (rng.random((n, n)) < density).astype(np.float64)
    flakes = _clipped_zoom(flakes, flake_zoom)
    angle = rng.uniform(-135.0, -45.0)
    flakes = ndimage.convolve(
        flakes, _motion_kernel(max(motion_len * scale, 3), angle), mode="constant"
    )
    flakes = np.clip(flakes * 3.0, 0.0, 1.0)
    gray = x.mean(axis=2, keepdims=True)
    whitened = blend * x + (1.0 - blend) * np.maximum(x, gray * 1.5 + 0.5)
    return whitened + flakes[:, :, None] + np.rot90(flakes, k=2)[:, :, None] * 0.5


def _frost(x, params, rng):
    clean_w, frost_w = params
    n = x.shape[0]
    # Fractal 1/f^1.6 field shaped into icy streaks; no texture assets needed.
    noise = rng.normal(size=(n, n))
    fy = np.fft.fftfreq(n)[:, None]
    fx = np.fft.fftfreq(n)[None, :]
    freq = np.hypot(fy, fx)
    freq[0, 0] = 1.0
    field = np.real(np.fft.ifft2(np.fft.fft2(noise) / freq**1.6))
    field = (field - field.min()) / (field.max() - field.min() + 1e-12)
    crystals = np.clip(1.6 * np.abs(field - 0.5) * 2.0, 0.0, 1.0)
    tint = np.array([0.9, 0.95, 1.0])
    return clean_w * x + frost_w * crystals[:, :, None] * tint[None, None, :]


def _fog(x, params, severity):
    intensity, wibbledecay = params
    n = x.shape[0]
    # One fixed field per (decay, resolution): severity varies only the
    # intensity, which keeps mean distortion monotone in severity.
    rng = np.random.default_rng(derive_seed(_FIXED_FIELD_SEED, "fog", str(wibbledecay), n))
    plasma = _plasma_fractal(n, wibbledecay, rng)
    # Fix the field's RMS so distortion grows with intensity, not with the
    # luck of the realized fractal.
    rms = np.sqrt(np.mean(plasma**2))
    if rms > 0:
        plasma = plasma * (0.5 / rms)
    max_val = x.max()
    out = x + intensity * plasma[:, :, None]
    return out * max_val / (max_val + intensity) if max_val > 0 else out / (1.0 + intensity)


def _brightness(x, offset):
    hsv = _rgb_to_hsv(np.clip(x, 0, 1))
    hsv[:, :, 2] = np.clip(hsv[:, :, 2] + offset, 0.0, 1.0)
    return _hsv_to_rgb(hsv)


def _contrast(x, factor):
    means = x.mean(axis=(0, 1), keepdims=True)
    return (x - means) * factor + means


def _elastic_transform(x, params, scale, severity):
    alpha, sigma = params
    n = x.shape[0]
    rng = np.random.default_rng(derive_seed(_FIXED_FIELD_SEED, "elastic", severity, n))
    sigma_eff = max(sigma * scale, 2.0)
    alpha_eff = alpha * scale
    dx = ndimage.gaussian_filter(rng.uniform(-1, 1, (n, n)), sigma_eff)
    dy = ndimage.gaussian_filter(rng.uniform(-1, 1, (n, n)), sigma_eff)
    dx *= alpha_eff / (np.abs(dx).max() + 1e-12)
    dy *= alpha_eff / (np.abs(dy).max() + 1e-12)
    ii, jj = np.mgrid[:n, :n].astype(np.float64)
    coords = np.stack([ii + dy, jj + dx])
    return np.stack(
        [ndimage.map_coordinates(x[:, :, c], coords, order=1, mode="reflect") for c in range(3)],
        axis=2,
    )


def _pixelate(x, factor):
    n = x.shape[0]
    small = max(int(n * factor), 1)
    channels = []
    for c in range(3):
        im = Image.fromarray(x[:, :, c].astype(np.float32), mode="F")
        im = im.resize((small, small), resample=Image.BOX)
        im = im.resize((n, n), resample=Image.NEAREST)
        channels.append(np.asarray(im, dtype=np.float64))
    return np.stack(channels, axis=2)


def _jpeg_compression(x, quality):
    quantized = np.round(np.clip(x, 0, 1) * 255.0).astype(np.uint8)
    buf = BytesIO()
    Image.fromarray(quantized, mode="RGB").save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    with Image.open(buf) as im:
        out = np.asarray(im.convert("RGB"), dtype=np.float64)
    return out / 255.0


# ---------------------------------------------------------------------------
# public API


def apply_corruption(image: np.ndarray, spec: CorruptionSpec, seed: int) -> np.ndarray:
    """Apply one corruption spec; pure function of (image, spec, seed)."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 3 or x.shape[2] != 3 or x.shape[0] != x.shape[1]:
        raise CorruptionError("image must be a square H×W×3 array")
    params = spec.params
    scale = spatial_scale(x.shape[0])
    rng = np.random.default_rng(seed) if spec.name in STOCHASTIC else None

    if spec.name == "gaussian_noise":
        out = _gaussian_noise(x, params, rng)
    elif spec.name == "shot_noise":
        out = _shot_noise(x, params, rng)
    elif spec.name == "impulse_noise":
        out = _impulse_noise(x, params, rng)
    elif spec.name == "defocus_blur":
        out = _defocus_blur(x, params, scale)
    elif spec.name == "glass_blur":
        out = _glass_blur(x, params, scale, rng)
    elif spec.name == "motion_blur":
        out = _motion_blur(x, params, scale)
    elif spec.name == "zoom_blur":
        out = _zoom_blur(x, params, scale)
    elif spec.name == "snow":
        out = _snow(x, params, scale, rng)
    elif spec.name == "frost":
        out = _frost(x, params, rng)
    elif spec.name == "fog":
        out = _fog(x, params, spec.severity)
    elif spec.name == "brightness":
        out = _brightness(x, params)
    elif spec.name == "contrast":
        out = _contrast(x, params)
    elif spec.name == "elastic_transform":
        out = _elastic_transform(x, params, scale, spec.severity)
    elif spec.name == "pixelate":
        out = _pixelate(x, params)
    elif spec.name == "jpeg_compression":
        out = _jpeg_compression(x, params)
    else:  # pragma: no cover - spec validation makes this unreachable
        raise CorruptionError(spec.name)

    return np.clip(out, 0.0, 1.0)


def sample_seed(master_seed: int, spec: CorruptionSpec, sample_id: str) -> int:
    """Per-image seed so each corrupted set is independently reproducible."""
    return derive_seed(master_seed, spec.name, spec.severity, sample_id)


def corrupt_dataset(
    test: DomainDataset,
    specs: list[CorruptionSpec] | None = None,
    master_seed: int = 0,
) -> list[CorruptedSet]:
    """Transform the test set by each spec (default: all 75)."""
    if len(test) == 0:
        raise CorruptionError("test dataset is empty")
    if specs is None:
        specs = all_specs()
    sets = []
    for spec in specs:
        samples = [
            ImageSample(
                id=s.id,
                pixels=apply_corruption(s.pixels, spec, sample_seed(master_seed, spec, s.id)),
                label=s.label,
                domain=s.domain,
                provenance=s.provenance,
            )
            for s in test.samples
        ]
        sets.append(CorruptedSet(spec=spec, samples=samples))
    return sets


def output_hash(image: np.ndarray, spec: CorruptionSpec, seed: int) -> str:
    """SHA-256 of the 8-bit quantized corruption output (golden-image key)."""
    out = apply_corruption(image, spec, seed)
    quantized = np.round(out * 255.0).astype(np.uint8)
    return hashlib.sha256(quantized.tobytes()).hexdigest()
