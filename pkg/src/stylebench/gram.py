"""Gram-matrix style distance between images.

A feature extractor maps an image to one or more channels-last feature maps.
For each layer the Gram matrix is computed from features flattened over space
and normalized by channel count × spatial size:

    G = F Fᵀ / (C · H · W),   F of shape (C, H·W)

which keeps magnitudes comparable across layers.  The style distance is the
sum over layers of the Frobenius distance between the two images' Gram
matrices.
"""

from __future__ import annotations

import numpy as np


class GramError(ValueError):
    pass


def default_feature_extractor(image: np.ndarray) -> dict[str, np.ndarray]:
    """Deterministic weight-free multi-layer features.

    Layers: raw colors, 2×2 box-pooled colors, and horizontal/vertical color
    gradients.  Enough texture sensitivity for desk-scale style comparisons
    without pretrained weights; swap in a learned extractor for fidelity work.
    """
    x = np.asarray(image, dtype=np.float64)
    n = x.shape[0] - x.shape[0] % 2
    pooled = x[:n:2, :n:2] + x[1:n:2, :n:2] + x[:n:2, 1:n:2] + x[1:n:2, 1:n:2]
    grad = np.concatenate(
        [np.diff(x, axis=0)[:, :-1], np.diff(x, axis=1)[:-1, :]], axis=2
    )
    return {"color": x, "pooled": pooled / 4.0, "grad": grad}


def gram_matrix(features: np.ndarray) -> np.ndarray:
    """Normalized Gram matrix of a channels-last feature map."""
    f = np.asarray(features, dtype=np.float64)
    flat = f.reshape(-1, f.shape[-1]).T  # (C, H*W)
    c, hw = flat.shape
    return flat @ flat.T / (c * hw)


def gram_distance(a: np.ndarray, b: np.ndarray, features=default_feature_extractor) -> float:
    """Sum over layers of Frobenius distance between Gram matrices."""
    if a.shape != b.shape:
        raise GramError(f"shape mismatch {a.shape} vs {b.shape}")
    feats_a = features(a)
    feats_b = features(b)
    if isinstance(feats_a, np.ndarray):
        feats_a, feats_b = {"layer0": feats_a}, {"layer0": feats_b}
    if not feats_a:
        raise GramError("feature extractor yielded no layers")
    total = 0.0
    for layer in feats_a:
        try:
            ga = gram_matrix(feats_a[layer])
            gb = gram_matrix(feats_b[layer])
        except Exception as exc:
            raise GramError(f"feature layer {layer!r} failed: {exc}") from exc
        total += float(np.linalg.norm(ga - gb, ord="fro"))
    return total


def mean_pair_distance(pairs, features=default_feature_extractor) -> tuple[float, float]:
    """Arithmetic mean and population std of gram_distance over image pairs."""
    distances = [gram_distance(a, b, features) for a, b in pairs]
    if not distances:
        raise GramError("no pairs given")
    arr = np.asarray(distances)
    return float(arr.mean()), float(arr.std())
