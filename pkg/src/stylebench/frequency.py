"""Ideal circular low-pass filtering and radial power-spectrum analysis.

Transform conventions, declared once so the invariants are exact:

* forward 2-D DFT is unnormalized; the inverse carries the 1/N² factor
  (numpy's default), so Parseval reads  Σ|pixels|² = (1/N²)·Σ‖X‖².
* spectra are laid out DC-centered via fftshift; for even N the DC bin sits
  at index N/2.
* the low-pass mask keeps radii strictly below the cutoff.
* clamping to [0, 1] happens after the inverse transform; spectral assertions
  are evaluated pre-clamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import DomainDataset, ImageSample

#: Published cutoff radius at the reference 224×224 resolution.
DEFAULT_TAU = 60.0
TAU_REFERENCE_RESOLUTION = 224


class FrequencyError(ValueError):
    """Non-square input or inconsistent dataset resolutions."""


@dataclass(frozen=True)
class LowPassSpec:
    """Cutoff radius in frequency pixels, stated at ``reference_resolution``.

    The effective radius scales linearly with image resolution, so the
    default τ=60 at 224×224 becomes ≈8.6 at 32×32.
    """

    tau: float = DEFAULT_TAU
    reference_resolution: int = TAU_REFERENCE_RESOLUTION

    def __post_init__(self):
        if self.tau <= 0:
            raise FrequencyError("tau must be positive")

    def effective_tau(self, resolution: int) -> float:
        return self.tau * resolution / self.reference_resolution


@dataclass
class RadialSpectrum:
    """power(r) per integer radial frequency bin, r covering [r, r+1)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if (self.values < 0).any():
            raise FrequencyError("spectrum values must be non-negative")

    @property
    def radii(self) -> np.ndarray:
        return np.arange(len(self.values))


def _check_square(image: np.ndarray) -> np.ndarray:
    x = np.asarray(image, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.shape[0] != x.shape[1]:
        raise FrequencyError("image must be square")
    return x


def radius_grid(n: int) -> np.ndarray:
    """Distance of each DC-centered frequency bin from the DC bin."""
    center = n // 2
    idx = np.arange(n) - center
    return np.hypot(idx[:, None], idx[None, :])


def lowpass_mask(n: int, tau_eff: float) -> np.ndarray:
    """Indicator of radii strictly below the cutoff, DC-centered layout."""
    return (radius_grid(n) < tau_eff).astype(np.float64)


def lowpass_filter(image: np.ndarray, spec: LowPassSpec, *, clamp: bool = True) -> np.ndarray:
    """Zero all frequency components at radius ≥ τ_eff, per channel."""
    x = _check_square(image)
    n = x.shape[0]
    mask = lowpass_mask(n, spec.effective_tau(n))
    out = np.empty_like(x)
    for c in range(x.shape[2]):
        spectrum = np.fft.fftshift(np.fft.fft2(x[:, :, c]))
        out[:, :, c] = np.real(np.fft.ifft2(np.fft.ifftshift(spectrum * mask)))
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out[:, :, 0] if image.ndim == 2 else out


def compute_spectrum(image: np.ndarray) -> RadialSpectrum:
    """Radial power spectrum, averaged over channels.

    Per channel: bin the DC-centered magnitudes ‖X_ij‖ by integer radius
    (bin r covers √(i²+j²) ∈ [r, r+1)), take the mean magnitude per bin, and
    square it.  Channel spectra are then averaged.
    """
    x = _check_square(image)
    n = x.shape[0]
    radii = radius_grid(n)
    bins = np.floor(radii).astype(int)
    r_max = bins.max()
    counts = np.bincount(bins.ravel(), minlength=r_max + 1)

    per_channel = []
    for c in range(x.shape[2]):
        mags = np.abs(np.fft.fftshift(np.fft.fft2(x[:, :, c])))
        sums = np.bincount(bins.ravel(), weights=mags.ravel(), minlength=r_max + 1)
        per_channel.append((sums / counts) ** 2)
    return RadialSpectrum(values=np.mean(per_channel, axis=0))


def mean_spectrum(dataset: DomainDataset) -> RadialSpectrum:
    """Bin-wise arithmetic mean of per-image spectra."""
    if len(dataset) == 0:
        raise FrequencyError("dataset is empty")
    resolutions = {s.resolution for s in dataset.samples}
    if len(resolutions) > 1:
        raise FrequencyError(f"mixed resolutions {sorted(resolutions)}")
    stacked = np.stack([compute_spectrum(s.pixels).values for s in dataset.samples])
    return RadialSpectrum(values=stacked.mean(axis=0))


def filter_dataset(dataset: DomainDataset, spec: LowPassSpec) -> DomainDataset:
    """Low-pass filter every image; ids and labels preserved, domain=filtered."""
    samples = [
        ImageSample(
            id=s.id,
            pixels=lowpass_filter(s.pixels, spec),
            label=s.label,
            domain="filtered",
            provenance=s.provenance,
        )
        for s in dataset.samples
    ]
    return DomainDataset(samples=samples, num_classes=dataset.num_classes, domain="filtered")
