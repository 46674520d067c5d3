"""Scikit-learn compatible wrappers around the core operations.

These adapters expose the corruption suite, the low-pass filter, the
moment-matching stylizer, and the training schemes through the familiar
fit/transform/predict + get_params surface, so they can sit inside sklearn
pipelines and grid searches.  Inputs are stacks of square RGB images shaped
(n_samples, H, W, 3) with values in [0, 1].
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import corruptions, frequency, stylization, training
from .datamodel import DomainDataset, ImageSample
from .seeding import derive_seed


def _check_images(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 4 or X.shape[3] != 3 or X.shape[1] != X.shape[2]:
        raise ValueError(f"expected (n_samples, H, H, 3) image stack, got shape {X.shape}")
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise ValueError("pixel values must lie in [0, 1]")
    return X


def _as_dataset(X, y, domain: str) -> DomainDataset:
    X = _check_images(X)
    y = np.asarray(y, dtype=int)
    if len(y) != len(X):
        raise ValueError("X and y length mismatch")
    num_classes = int(y.max()) + 1 if len(y) else 1
    samples = [
        ImageSample(id=f"{domain}_{i:06d}", pixels=X[i], label=int(y[i]), domain=domain)
        for i in range(len(X))
    ]
    return DomainDataset(samples=samples, num_classes=num_classes, domain=domain)


class CorruptionTransformer(TransformerMixin, BaseEstimator):
    """Apply one corruption spec to every image, seeded per sample index."""

    def __init__(self, name: str = "gaussian_noise", severity: int = 3, seed: int = 0):
        self.name = name
        self.severity = severity
        self.seed = seed

    def fit(self, X, y=None):
        corruptions.CorruptionSpec(self.name, self.severity)  # validate params
        self.n_features_in_ = np.prod(np.asarray(X).shape[1:])
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = _check_images(X)
        spec = corruptions.CorruptionSpec(self.name, self.severity)
        return np.stack(
            [
                corruptions.apply_corruption(img, spec, derive_seed(self.seed, self.name, i))
                for i, img in enumerate(X)
            ]
        )


class LowPassTransformer(TransformerMixin, BaseEstimator):
    """Ideal circular low-pass filter; tau stated at the reference resolution."""

    def __init__(self, tau: float = frequency.DEFAULT_TAU, reference_resolution: int = 224):
        self.tau = tau
        self.reference_resolution = reference_resolution

    def fit(self, X, y=None):
        self.spec_ = frequency.LowPassSpec(self.tau, self.reference_resolution)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = _check_images(X)
        return np.stack([frequency.lowpass_filter(img, self.spec_) for img in X])


class MomentMatchingTransformer(TransformerMixin, BaseEstimator):
    """Stylize images by moment transfer against a fitted style pool.

    ``fit`` stores the style pool; ``transform`` pairs each input with a
    seeded uniform draw from the pool and transfers feature moments.
    """

    def __init__(self, feature_space: str = "decorrelated_color", strength: float = 1.0, seed: int = 0):
        self.feature_space = feature_space
        self.strength = strength
        self.seed = seed

    def fit(self, X, y=None):
        self.style_pool_ = _check_images(X)
        if len(self.style_pool_) == 0:
            raise ValueError("style pool is empty")
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = _check_images(X)
        stylizer = stylization.Stylizer(
            kind="moment_match", feature_space=self.feature_space, strength=self.strength
        )
        out = []
        for i, img in enumerate(X):
            rng = np.random.default_rng(derive_seed(self.seed, "pair", i))
            style = self.style_pool_[int(rng.integers(len(self.style_pool_)))]
            out.append(stylization.moment_match_stylize(img, style, stylizer))
        return np.stack(out)


class SchemeClassifier(ClassifierMixin, BaseEstimator):
    """Image classifier trained under one of the multi-domain schemes.

    ``fit(X, y, domain=...)`` takes an optional 0/1 array marking auxiliary-
    domain samples (paintings); schemes other than ``joint`` require both
    domains to be present.
    """

    def __init__(
        self,
        scheme: str = "joint",
        epochs: int = 10,
        base_lr: float = 1e-3,
        batch_size: int = 64,
        backbone: str = "small_resnet",
        augment: bool = True,
        lr_normalization: bool = False,
        adversary_weight: float = 1.0,
        seed: int = 0,
    ):
        self.scheme = scheme
        self.epochs = epochs
        self.base_lr = base_lr
        self.batch_size = batch_size
        self.backbone = backbone
        self.augment = augment
        self.lr_normalization = lr_normalization
        self.adversary_weight = adversary_weight
        self.seed = seed

    def _config(self) -> training.TrainingConfig:
        return training.TrainingConfig(
            epochs=self.epochs,
            base_lr=self.base_lr,
            lr_drop_epoch=max(int(self.epochs * 0.8), 1),
            batch_size=self.batch_size,
            backbone=self.backbone,
            augment=self.augment,
            lr_normalization=self.lr_normalization,
            seed=self.seed,
        )

    def fit(self, X, y, domain=None):
        X = _check_images(X)
        y = np.asarray(y, dtype=int)
        if domain is None:
            domain = np.zeros(len(X), dtype=int)
        domain = np.asarray(domain, dtype=int)
        photos = _as_dataset(X[domain == 0], y[domain == 0], "photo")
        num_classes = int(y.max()) + 1
        paintings = None
        if (domain == 1).any():
            paintings = _as_dataset(X[domain == 1], y[domain == 1], "painting")
            # schemes share one class vocabulary
            photos.num_classes = paintings.num_classes = num_classes
        photos.num_classes = num_classes
        self.model_ = training.train_scheme(
            self.scheme,
            self._config(),
            photos=photos,
            paintings=paintings,
            adversary_weight=self.adversary_weight,
        )
        self.classes_ = np.arange(num_classes)
        self.n_features_in_ = np.prod(X.shape[1:])
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = _check_images(X)
        dataset = _as_dataset(X, np.zeros(len(X), dtype=int), "photo")
        dataset.num_classes = len(self.classes_)
        return training.predict_batch(self.model_, dataset)
