"""Versioned severity parameter tables for the corruption suite.

One entry per corruption, five parameter sets ordered severity 1..5.  Values
follow the published common-corruptions benchmark constants wherever the
operation is reproducible from its description (noise scales, blur radii,
jpeg qualities, pixelate factors, contrast/brightness offsets).  Corruptions
that depend on binary texture assets (frost) or under-specified randomized
kernels (glass blur iterations, snow particle fields, elastic fields) use
procedural parameter sets chosen so distortion grows monotonically with
severity.

Spatial parameters (blur radii, kernel lengths, displacement scales) are
stated at the 224×224 reference resolution and multiplied by
``spatial_scale(resolution)`` when applied, so severities stay meaningfully
separated at desk-scale resolutions.

Golden-image fixtures are keyed to TABLE_VERSION; bump it on any change.
"""

from __future__ import annotations

TABLE_VERSION = 1

#: Reference resolution at which the spatial parameters are stated.
REFERENCE_RESOLUTION = 224

#: Lower clamp on the spatial scale so small images keep distinct severities.
MIN_SPATIAL_SCALE = 0.5


def spatial_scale(resolution: int) -> float:
    return max(resolution / REFERENCE_RESOLUTION, MIN_SPATIAL_SCALE)


SEVERITY = {
    # noise -----------------------------------------------------------------
    "gaussian_noise": [0.08, 0.12, 0.18, 0.26, 0.38],  # stddev
    "shot_noise": [60.0, 25.0, 12.0, 5.0, 3.0],  # photons per unit intensity
    "impulse_noise": [0.03, 0.06, 0.09, 0.17, 0.27],  # salt&pepper fraction
    # blur ------------------------------------------------------------------
    # (disk radius, kernel anti-alias sigma), radius at reference resolution
    "defocus_blur": [(3, 0.1), (4, 0.5), (6, 0.5), (8, 0.5), (10, 0.5)],
    # (pre/post gaussian sigma, max pixel displacement, shuffle iterations)
    "glass_blur": [(0.6, 1, 1), (0.7, 2, 2), (0.8, 2, 3), (0.9, 3, 5), (1.0, 6, 8)],
    # (kernel length, angle degrees), length at reference resolution
    "motion_blur": [(8, 45.0), (11, 45.0), (14, 45.0), (17, 45.0), (20, 45.0)],
    # maximum zoom factor; frames averaged in steps of 0.01
    "zoom_blur": [1.11, 1.16, 1.21, 1.26, 1.31],
    # weather ---------------------------------------------------------------
    # (flake density, flake zoom, motion length, clean-image blend weight)
    "snow": [
        (0.02, 2.0, 8, 0.90),
        (0.04, 2.0, 10, 0.85),
        (0.06, 2.5, 12, 0.80),
        (0.09, 2.5, 14, 0.72),
        (0.13, 3.0, 16, 0.65),
    ],
    # (clean-image weight, frost-field weight)
    "frost": [(1.0, 0.25), (0.9, 0.35), (0.8, 0.45), (0.72, 0.55), (0.65, 0.65)],
    # (fog intensity, plasma wibble decay)
    "fog": [(1.5, 1.7), (2.0, 1.7), (2.5, 1.7), (2.75, 1.7), (3.0, 1.7)],
    # additive offset in HSV value space
    "brightness": [0.1, 0.2, 0.3, 0.4, 0.5],
    # digital ---------------------------------------------------------------
    # multiplier toward the per-channel mean
    "contrast": [0.4, 0.3, 0.2, 0.1, 0.05],
    # (displacement magnitude, field smoothing sigma), at reference resolution
    "elastic_transform": [(12, 18), (18, 18), (26, 18), (36, 18), (48, 18)],
    # downsampling factor
    "pixelate": [0.6, 0.5, 0.4, 0.3, 0.25],
    # JPEG quality
    "jpeg_compression": [25, 18, 15, 10, 7],
}
