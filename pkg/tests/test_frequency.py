import numpy as np
import pytest

from stylebench.datamodel import DomainDataset, ImageSample
from stylebench.frequency import (
    FrequencyError,
    LowPassSpec,
    compute_spectrum,
    filter_dataset,
    lowpass_filter,
    lowpass_mask,
    mean_spectrum,
    radius_grid,
)
from stylebench.synthetic import make_synthetic_dataset


def brute_force_spectrum(image):
    """O(N^4) direct-DFT radial power spectrum oracle."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, None]
    n = x.shape[0]
    center = n // 2
    per_channel = []
    for c in range(x.shape[2]):
        mags = np.zeros((n, n))
        for u in range(n):
            for v in range(n):
                acc = 0.0 + 0.0j
                for a in range(n):
                    for b in range(n):
                        acc += x[a, b, c] * np.exp(-2j * np.pi * (u * a + v * b) / n)
                mags[u, v] = abs(acc)
        # DC-centered layout: frequency (u, v) maps to shifted index
        shifted = np.roll(np.roll(mags, center, axis=0), center, axis=1)
        radii = np.hypot(*np.meshgrid(np.arange(n) - center, np.arange(n) - center, indexing="ij"))
        bins = np.floor(radii).astype(int)
        values = np.zeros(bins.max() + 1)
        for r in range(bins.max() + 1):
            sel = bins == r
            values[r] = shifted[sel].mean() ** 2
        per_channel.append(values)
    return np.mean(per_channel, axis=0)


def tau_at(tau_eff, n):
    """LowPassSpec whose effective radius at resolution n equals tau_eff."""
    return LowPassSpec(tau=tau_eff * 224 / n)


class TestLowPassSpec:
    def test_tau_positive(self):
        with pytest.raises(FrequencyError):
            LowPassSpec(tau=0)

    def test_effective_tau_scaling(self):
        spec = LowPassSpec(tau=60.0)
        assert spec.effective_tau(224) == 60.0
        assert abs(spec.effective_tau(32) - 8.571428571428571) < 1e-12


class TestLowPassFilter:
    def test_full_mask_is_identity(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(size=(16, 16, 3))
        spec = tau_at(np.sqrt(2) * 8 + 1, 16)
        np.testing.assert_allclose(lowpass_filter(img, spec), img, atol=1e-6)

    def test_constant_image_unchanged(self):
        img = np.full((16, 16, 3), 0.4)
        np.testing.assert_allclose(lowpass_filter(img, tau_at(1.0, 16)), img, atol=1e-10)

    def test_single_sinusoid_removed(self):
        # pure horizontal frequency k=3 on 8x8; tau_eff=2 removes it,
        # leaving the constant mean image
        n = 8
        cols = np.arange(n)
        img = 0.5 + 0.25 * np.cos(2 * np.pi * 3 * cols / n)
        img = np.tile(img[None, :, None], (n, 1, 3))
        out = lowpass_filter(img, tau_at(2.0, n), clamp=False)
        np.testing.assert_allclose(out, np.full_like(img, 0.5), atol=1e-9)

    def test_mask_exactness_pre_clamp(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(32, 32, 3))
        tau_eff = 8.6
        out = lowpass_filter(img, tau_at(tau_eff, 32), clamp=False)
        radii = radius_grid(32)
        for c in range(3):
            mags = np.abs(np.fft.fftshift(np.fft.fft2(out[:, :, c])))
            assert mags[radii >= tau_eff].max() < 1e-8

    def test_idempotence_pre_clamp(self):
        rng = np.random.default_rng(2)
        img = rng.uniform(size=(24, 24, 3))
        spec = tau_at(5.0, 24)
        once = lowpass_filter(img, spec, clamp=False)
        twice = lowpass_filter(np.clip(once, 0, 1), spec, clamp=False)
        # idempotence modulo the clamp between applications
        np.testing.assert_allclose(lowpass_filter(once, spec, clamp=False), once, atol=1e-6)
        assert np.abs(twice - once).max() < 1e-3

    def test_non_square_rejected(self):
        with pytest.raises(FrequencyError):
            lowpass_filter(np.zeros((8, 9, 3)), LowPassSpec())

    def test_parseval(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(size=(16, 16))
        spectrum = np.fft.fft2(img)
        lhs = np.sum(img**2)
        rhs = np.sum(np.abs(spectrum) ** 2) / img.size
        assert abs(lhs - rhs) / lhs < 1e-6


class TestComputeSpectrum:
    def test_constant_image_dc_only(self):
        n, c = 16, 0.3
        img = np.full((n, n, 3), c)
        spectrum = compute_spectrum(img)
        assert abs(spectrum.values[0] - (n * n * c) ** 2) < 1e-6
        np.testing.assert_allclose(spectrum.values[1:], 0.0, atol=1e-12)

    def test_dc_bin_is_center_for_even_n(self):
        grid = radius_grid(8)
        assert grid[4, 4] == 0.0

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(4)
        for n in (2, 3, 4, 5, 8):
            for _ in range(4):
                img = rng.uniform(size=(n, n, 3))
                fast = compute_spectrum(img).values
                slow = brute_force_spectrum(img)
                assert np.abs(fast - slow).max() < 1e-9, n

    def test_noise_raises_high_frequency_power(self):
        n = 16
        rng = np.random.default_rng(5)
        base = np.full((n, n, 3), 0.5)
        wins = 0
        for _ in range(100):
            noisy = np.clip(base + rng.normal(0, 0.1, size=base.shape), 0, 1)
            hi = slice(n // 4 + 1, None)
            if compute_spectrum(noisy).values[hi].mean() > compute_spectrum(base).values[hi].mean():
                wins += 1
        assert wins == 100


class TestMeanSpectrum:
    def _dataset(self, images):
        samples = [
            ImageSample(id=f"s{i}", pixels=img, label=0, domain="photo")
            for i, img in enumerate(images)
        ]
        return DomainDataset(samples=samples, num_classes=1, domain="photo")

    def test_single_image_equals_compute(self):
        img = np.random.default_rng(6).uniform(size=(8, 8, 3))
        ds = self._dataset([img])
        np.testing.assert_allclose(mean_spectrum(ds).values, compute_spectrum(img).values)

    def test_copies_equal_single(self):
        img = np.random.default_rng(7).uniform(size=(8, 8, 3))
        ds = self._dataset([img.copy() for _ in range(4)])
        np.testing.assert_allclose(mean_spectrum(ds).values, compute_spectrum(img).values)

    def test_filtered_dataset_loses_high_bins(self):
        ds = make_synthetic_dataset(10, 8, resolution=32)
        tau_eff = 8.6
        filtered = filter_dataset(ds, tau_at(tau_eff, 32))
        unfiltered_power = mean_spectrum(ds).values
        filtered_power = mean_spectrum(filtered).values
        for r in range(int(np.ceil(tau_eff)), len(unfiltered_power)):
            if unfiltered_power[r] > 1e-3:
                assert filtered_power[r] < unfiltered_power[r]

    def test_mixed_resolution_errors(self):
        a = ImageSample(id="a", pixels=np.zeros((8, 8, 3)), label=0, domain="photo")
        b = ImageSample(id="b", pixels=np.zeros((16, 16, 3)), label=0, domain="photo")
        ds = DomainDataset(samples=[a, b], num_classes=1, domain="photo")
        with pytest.raises(FrequencyError):
            mean_spectrum(ds)


class TestFilterDataset:
    def test_ids_labels_preserved_domain_filtered(self):
        ds = make_synthetic_dataset(6, 9, resolution=16)
        out = filter_dataset(ds, LowPassSpec())
        assert out.domain == "filtered"
        assert [s.id for s in out.samples] == [s.id for s in ds.samples]
        assert [s.label for s in out.samples] == [s.label for s in ds.samples]

    def test_deterministic(self):
        ds = make_synthetic_dataset(3, 9, resolution=16)
        a = filter_dataset(ds, LowPassSpec())
        b = filter_dataset(ds, LowPassSpec())
        for x, y in zip(a.samples, b.samples):
            assert np.array_equal(x.pixels, y.pixels)


class TestMask:
    def test_strict_inequality(self):
        # tau exactly on an integer radius excludes that ring
        mask = lowpass_mask(8, 2.0)
        grid = radius_grid(8)
        assert mask[grid == 2.0].sum() == 0
        assert mask[grid < 2.0].all()
