"""Style-pool sampling policies and the moment-matching stylizer.

The built-in stylizer transfers per-channel feature statistics: features of
the content image are re-centered and re-scaled to match the mean and
standard deviation of the style image's features, then mapped back to pixel
space.  With the default ``decorrelated_color`` feature space this is a
classical color-statistics transfer needing no pretrained weights; a plugin
feature space can substitute any invertible extractor.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .datamodel import DomainDataset, ImageSample, load_png, resize_image
from .seeding import rng_for

logger = logging.getLogger(__name__)

POLICY_KINDS = ("painting_pool", "intradomain_unrestricted", "intradomain_intraclass")

#: Guard for degenerate (zero-variance) feature channels.
SIGMA_FLOOR = 1e-6


class StylizationError(ValueError):
    pass


@dataclass(frozen=True)
class StylePolicy:
    """Rule for drawing a style image for a given content image."""

    kind: str
    exclude_self: bool = True

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise StylizationError(f"unknown policy kind {self.kind!r}")


# ---------------------------------------------------------------------------
# feature spaces

# Orthonormal opponent-color basis: brightness, red-blue, yellowness.
_DECORRELATION = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, 0.0, -1.0],
        [1.0, -2.0, 1.0],
    ]
) / np.sqrt([3.0, 2.0, 6.0])[:, None]


class FeatureSpace:
    """Invertible map between pixel space and a channels-last feature space."""

    def forward(self, image: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, features: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class RawPixels(FeatureSpace):
    def forward(self, image):
        return np.asarray(image, dtype=np.float64)

    def inverse(self, features):
        return features


class DecorrelatedColor(FeatureSpace):
    def forward(self, image):
        return np.asarray(image, dtype=np.float64) @ _DECORRELATION.T

    def inverse(self, features):
        return features @ _DECORRELATION


_SPACES = {"raw_pixels": RawPixels, "decorrelated_color": DecorrelatedColor}


@dataclass
class Stylizer:
    """Stylization mechanism plus interpolation strength.

    ``strength`` interpolates between the content image (0) and the fully
    moment-transferred image (1).
    """

    kind: str = "moment_match"
    feature_space: str = "decorrelated_color"
    strength: float = 1.0
    plugin: FeatureSpace | None = None

    def __post_init__(self):
        if self.kind not in ("moment_match", "external"):
            raise StylizationError(f"unknown stylizer kind {self.kind!r}")
        if not 0.0 <= self.strength <= 1.0:
            raise StylizationError("strength must lie in [0, 1]")
        if self.feature_space == "plugin_features":
            if self.plugin is None:
                raise StylizationError("plugin_features requires a plugin FeatureSpace")
        elif self.feature_space not in _SPACES:
            raise StylizationError(f"unknown feature space {self.feature_space!r}")

    def space(self) -> FeatureSpace:
        if self.feature_space == "plugin_features":
            return self.plugin
        return _SPACES[self.feature_space]()


# ---------------------------------------------------------------------------
# sampling


def eligible_styles(content: ImageSample, pool: DomainDataset, policy: StylePolicy) -> list[int]:
    """Indices into ``pool.samples`` that the policy admits for ``content``."""
    if policy.kind == "painting_pool":
        if pool.domain != "painting":
            raise StylizationError("painting_pool policy requires a painting dataset")
        return list(range(len(pool.samples)))
    idx = [
        i
        for i, s in enumerate(pool.samples)
        if not (policy.exclude_self and s.id == content.id)
        and (policy.kind == "intradomain_unrestricted" or s.label == content.label)
    ]
    return idx


def sample_style(
    content: ImageSample,
    pool: DomainDataset,
    policy: StylePolicy,
    rng: np.random.Generator,
) -> ImageSample:
    """Uniform draw from the policy's eligible set."""
    idx = eligible_styles(content, pool, policy)
    if not idx:
        raise StylizationError(
            f"no eligible style image for content {content.id!r} "
            f"(policy {policy.kind}, class {content.label})"
        )
    return pool.samples[int(rng.choice(idx))]


# ---------------------------------------------------------------------------
# moment matching


def channel_moments(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel spatial mean and population std of channels-last features."""
    flat = features.reshape(-1, features.shape[-1])
    return flat.mean(axis=0), flat.std(axis=0)


def moment_match_stylize(
    content: np.ndarray,
    style: np.ndarray,
    stylizer: Stylizer,
    *,
    clamp: bool = True,
) -> np.ndarray:
    """Match content feature moments to the style image's.

    With strength 0 the content is returned bit-exactly.  Zero-variance
    content channels are floored at SIGMA_FLOOR and logged.
    """
    content = np.asarray(content, dtype=np.float64)
    style = np.asarray(style, dtype=np.float64)
    if content.shape != style.shape:
        raise StylizationError(f"shape mismatch {content.shape} vs {style.shape}")
    if stylizer.strength == 0.0:
        return content.copy()

    space = stylizer.space()
    fc = space.forward(content)
    fs = space.forward(style)
    mu_c, sigma_c = channel_moments(fc)
    mu_s, sigma_s = channel_moments(fs)
    degenerate = sigma_c < SIGMA_FLOOR
    if degenerate.any():
        logger.warning(
            "degenerate content channels %s: std floored at %.0e",
            np.flatnonzero(degenerate).tolist(),
            SIGMA_FLOOR,
        )
        sigma_c = np.where(degenerate, SIGMA_FLOOR, sigma_c)

    transferred = space.inverse(sigma_s * (fc - mu_c) / sigma_c + mu_s)
    out = stylizer.strength * transferred + (1.0 - stylizer.strength) * content
    return np.clip(out, 0.0, 1.0) if clamp else out


# ---------------------------------------------------------------------------
# dataset-level operations

_PAIRING_TAG = "stylized:"


def stylize_dataset(
    content: DomainDataset,
    pool: DomainDataset,
    policy: StylePolicy,
    stylizer: Stylizer,
    master_seed: int,
) -> DomainDataset:
    """Stylize every content sample exactly once, offline.

    The (content, style) pairing is deterministic given ``master_seed`` and is
    persisted in each output sample's provenance as
    ``stylized:<content_id><-<style_id>``; recover it with
    :func:`pairing_table`.
    """
    samples = []
    for s in content.samples:
        rng = rng_for(master_seed, "style-pairing", s.id)
        try:
            style = sample_style(s, pool, policy, rng)
        except StylizationError as exc:
            raise StylizationError(f"content {s.id!r}: {exc}") from exc
        samples.append(
            ImageSample(
                id=f"{s.id}_sty",
                pixels=moment_match_stylize(s.pixels, style.pixels, stylizer),
                label=s.label,
                domain="stylized",
                provenance=f"{_PAIRING_TAG}{s.id}<-{style.id}",
            )
        )
    return DomainDataset(samples=samples, num_classes=content.num_classes, domain="stylized")


def pairing_table(stylized: DomainDataset) -> list[tuple[str, str]]:
    """(content_id, style_id_or_tag) pairs recorded by stylization/import."""
    pairs = []
    for s in stylized.samples:
        if not (s.provenance or "").startswith(_PAIRING_TAG):
            raise StylizationError(f"sample {s.id} carries no pairing record")
        content_id, style_id = s.provenance[len(_PAIRING_TAG) :].split("<-", 1)
        pairs.append((content_id, style_id))
    return pairs


def import_external_stylized(pairing_manifest: str, content: DomainDataset) -> DomainDataset:
    """Ingest externally produced stylizations.

    The manifest holds tab-separated records
    ``content_id\tstyle_id_or_tag\tstylized_image_path`` with paths relative
    to the manifest.  Labels are copied from the named content samples; images
    larger than the content resolution are downsampled to it.  Any bad record
    fails the whole load.
    """
    base = os.path.dirname(os.path.abspath(pairing_manifest))
    by_id = content.by_id()
    resolution = content.samples[0].resolution if content.samples else None

    with open(pairing_manifest, encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]

    samples, problems = [], []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split("\t")
        if len(fields) != 3:
            problems.append(f"line {lineno}: expected 3 fields, got {len(fields)}")
            continue
        content_id, style_tag, img_path = fields
        if content_id not in by_id:
            problems.append(f"line {lineno}: unknown content id {content_id!r}")
            continue
        full = os.path.join(base, img_path)
        if not os.path.isfile(full):
            problems.append(f"line {lineno}: missing image file {img_path}")
            continue
        pixels = load_png(full)
        if resolution is not None and pixels.shape[0] > resolution:
            pixels = resize_image(pixels, resolution)
        samples.append(
            ImageSample(
                id=f"{content_id}_ext",
                pixels=pixels,
                label=by_id[content_id].label,
                domain="stylized",
                provenance=f"{_PAIRING_TAG}{content_id}<-{style_tag}",
            )
        )
    if problems:
        raise StylizationError(
            f"{pairing_manifest}: {len(problems)} bad record(s):\n" + "\n".join(problems)
        )
    return DomainDataset(samples=samples, num_classes=content.num_classes, domain="stylized")
