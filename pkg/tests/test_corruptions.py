import json
import os

import numpy as np
import pytest

from stylebench import corruptions
from stylebench.corruptions import (
    CATEGORIES,
    CATEGORY_MEMBERS,
    CATEGORY_OF,
    CORRUPTION_NAMES,
    STOCHASTIC,
    CorruptionError,
    CorruptionSpec,
    all_specs,
    apply_corruption,
    corrupt_dataset,
    output_hash,
    sample_seed,
)
from stylebench.synthetic import make_synthetic_dataset

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="module")
def reference_images():
    ds = make_synthetic_dataset(2, 123, resolution=32)
    g = np.random.default_rng(99)
    return {
        "shape0": ds.samples[0].pixels,
        "shape1": ds.samples[1].pixels,
        "noisegrid": g.uniform(size=(32, 32, 3)),
    }


@pytest.fixture(scope="module")
def probe_images():
    return [s.pixels for s in make_synthetic_dataset(8, 31, resolution=32).samples]


class TestSpec:
    def test_category_membership(self):
        assert CATEGORY_MEMBERS["noise"] == ("gaussian_noise", "shot_noise", "impulse_noise")
        assert len(CATEGORY_MEMBERS["blur"]) == 4
        assert len(CATEGORY_MEMBERS["weather"]) == 4
        assert len(CATEGORY_MEMBERS["digital"]) == 4
        assert len(CORRUPTION_NAMES) == 15
        assert CATEGORY_OF["snow"] == "weather"

    def test_all_specs_cardinality(self):
        specs = all_specs()
        assert len(specs) == 75
        assert len(set((s.name, s.severity) for s in specs)) == 75

    def test_invalid_name_and_severity(self):
        with pytest.raises(CorruptionError):
            CorruptionSpec("salt_noise", 1)
        with pytest.raises(CorruptionError):
            CorruptionSpec("gaussian_noise", 0)
        with pytest.raises(CorruptionError):
            CorruptionSpec("gaussian_noise", 6)


class TestApplyCorruption:
    def test_determinism_all_75(self, reference_images):
        img = reference_images["shape0"]
        for spec in all_specs():
            a = apply_corruption(img, spec, 7)
            b = apply_corruption(img, spec, 7)
            assert np.array_equal(a, b), spec

    def test_range_containment(self, probe_images):
        for spec in all_specs():
            out = apply_corruption(probe_images[0], spec, 3)
            assert out.min() >= 0.0 and out.max() <= 1.0, spec

    def test_brightness_mean_increases_with_severity(self):
        gray = np.full((32, 32, 3), 0.5)
        means = [apply_corruption(gray, CorruptionSpec("brightness", s), 0).mean() for s in range(1, 6)]
        assert all(b > a for a, b in zip(means, means[1:]))

    def test_noise_mse_strictly_increasing(self, probe_images):
        for name in CATEGORY_MEMBERS["noise"]:
            mse = []
            for s in range(1, 6):
                spec = CorruptionSpec(name, s)
                errs = [
                    np.mean((apply_corruption(img, spec, seed) - img) ** 2)
                    for img in probe_images[:4]
                    for seed in range(25)
                ]
                mse.append(np.mean(errs))
            assert all(b > a for a, b in zip(mse, mse[1:])), name

    def test_severity_monotone_nondecreasing(self, probe_images):
        tol = 1e-9
        for name in CORRUPTION_NAMES:
            mse = []
            for s in range(1, 6):
                spec = CorruptionSpec(name, s)
                errs = [
                    np.mean((apply_corruption(img, spec, seed) - img) ** 2)
                    for img in probe_images
                    for seed in range(3)
                ]
                mse.append(np.mean(errs))
            assert all(b >= a - tol for a, b in zip(mse, mse[1:])), (name, mse)


class TestCorruptDataset:
    def test_cardinality_and_label_preservation(self):
        test = make_synthetic_dataset(6, 4, resolution=32, id_prefix="t")
        sets = corrupt_dataset(test, master_seed=0)
        assert len(sets) == 75
        for cs in sets:
            assert [s.id for s in cs.samples] == [s.id for s in test.samples]
            assert [s.label for s in cs.samples] == [s.label for s in test.samples]

    def test_rerun_bitwise_identical(self):
        test = make_synthetic_dataset(3, 4, resolution=32)
        specs = [CorruptionSpec("glass_blur", 2), CorruptionSpec("jpeg_compression", 4)]
        a = corrupt_dataset(test, specs, master_seed=5)
        b = corrupt_dataset(test, specs, master_seed=5)
        for sa, sb in zip(a, b):
            for x, y in zip(sa.samples, sb.samples):
                assert np.array_equal(x.pixels, y.pixels)

    def test_master_seed_changes_only_stochastic(self, reference_images):
        img = reference_images["noisegrid"]
        for name in CORRUPTION_NAMES:
            spec = CorruptionSpec(name, 3)
            a = apply_corruption(img, spec, sample_seed(0, spec, "x"))
            b = apply_corruption(img, spec, sample_seed(1, spec, "x"))
            if name in STOCHASTIC:
                assert not np.array_equal(a, b), name
            else:
                assert np.array_equal(a, b), name

    def test_empty_dataset_errors(self):
        from stylebench.datamodel import DomainDataset

        with pytest.raises(CorruptionError):
            corrupt_dataset(DomainDataset([], 2, "photo"))


class TestGoldenHashes:
    def test_outputs_match_recorded_hashes(self, reference_images):
        with open(os.path.join(FIXTURES, "corruption_hashes.json")) as f:
            table = json.load(f)
        assert len(table) == 225
        mismatches = []
        for key, expected in table.items():
            ref, name, severity = key.split("|")
            spec = CorruptionSpec(name, int(severity))
            got = output_hash(reference_images[ref], spec, 42)
            if got != expected:
                mismatches.append(key)
        assert mismatches == []
