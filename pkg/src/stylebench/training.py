"""Training schemes over a shared convolutional feature extractor.

Five schemes are supported:

* ``joint`` — one linear head over the merged training set;
* ``stylized`` — joint training on the union of photos and their stylized
  counterparts (equivalent in expectation to the paired half-weighted loss,
  with the pairing retained for diagnostics);
* ``multitask`` — domain-specific linear heads over a shared backbone, photo
  samples routed through the photo head only;
* ``finetune`` — joint single-head training, then the photo head re-fit on
  photos with the backbone frozen;
* ``adversarial`` — joint training plus a gradient-reversed domain
  discriminator on the pooled features.

At inference only the photo head is used.  Every run is a pure function of
its config seed: parameter init, shuffling, and augmentation draw from
derived generators, and deterministic torch kernels are enforced, so repeated
runs reproduce final weights bitwise on the same platform.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import torch
from scipy import ndimage
from torch import nn

from .datamodel import DataError, DomainDataset
from .seeding import derive_seed, rng_for
from .stylization import pairing_table

logger = logging.getLogger(__name__)

SCHEMES = ("joint", "stylized", "multitask", "finetune", "adversarial")

#: Channel normalization applied to inputs at train and inference time.
NORM_MEAN = 0.5
NORM_STD = 0.25


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class BackboneSpec:
    """Named feature-extractor preset."""

    architecture: str = "small_resnet"
    pretrained: bool = False

    @property
    def feature_dim(self) -> int:
        return {"tiny": 24, "small_resnet": 64, "resnet18": 512}[self.architecture]


@dataclass
class TrainingConfig:
    epochs: int = 30
    base_lr: float = 1e-3
    lr_drop_epoch: int = 24
    dropped_lr: float = 1e-4
    momentum: float = 0.9
    head_lr_multiplier: float = 10.0
    batch_size: int = 64
    seed: int = 0
    augment: bool = True
    lr_normalization: bool = False
    backbone: str = "small_resnet"
    finetune_epochs: int = 5
    finetune_lr: float = 1e-4
    adversary_warmup_epochs: int = 3

    def __post_init__(self):
        if self.epochs <= 0 or self.base_lr <= 0 or self.dropped_lr <= 0:
            raise TrainingError("epochs and learning rates must be positive")
        if self.lr_drop_epoch >= self.epochs and self.epochs > 1:
            logger.warning(
                "lr_drop_epoch %d >= epochs %d; schedule never drops",
                self.lr_drop_epoch,
                self.epochs,
            )

    def lr_at(self, epoch: int) -> float:
        """Backbone learning rate for a 1-based epoch index."""
        return self.base_lr if epoch < self.lr_drop_epoch else self.dropped_lr


@dataclass
class TrainedModel:
    """Frozen result of a training run; inference is head_photo ∘ backbone."""

    backbone: nn.Module
    head_photo: nn.Module
    scheme: str
    config: TrainingConfig
    num_classes: int
    input_resolution: int
    head_painting: nn.Module | None = None
    discriminator: nn.Module | None = None
    log: list[dict] = field(default_factory=list)

    def eval(self) -> "TrainedModel":
        self.backbone.eval()
        self.head_photo.eval()
        if self.head_painting is not None:
            self.head_painting.eval()
        return self


# ---------------------------------------------------------------------------
# backbones


class _ResidualBlock(nn.Module):
    def __init__(self, cin, cout, stride=1):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(cout)
        self.relu = nn.ReLU(inplace=True)
        if stride != 1 or cin != cout:
            self.shortcut = nn.Sequential(
                nn.Conv2d(cin, cout, 1, stride=stride, bias=False), nn.BatchNorm2d(cout)
            )
        else:
            self.shortcut = nn.Identity()

    def forward(self, x):
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(out + self.shortcut(x))


class SmallResNet(nn.Module):
    """Desk-scale residual backbone; pooled feature vector of size 64."""

    feature_dim = 64

    def __init__(self):
        super().__init__()
        self.stem = nn.Sequential(
            nn.Conv2d(3, 16, 3, padding=1, bias=False), nn.BatchNorm2d(16), nn.ReLU(inplace=True)
        )
        self.layer1 = _ResidualBlock(16, 16)
        self.layer2 = _ResidualBlock(16, 32, stride=2)
        self.layer3 = _ResidualBlock(32, 64, stride=2)
        self.pool = nn.AdaptiveAvgPool2d(1)

    def forward(self, x):
        x = self.layer3(self.layer2(self.layer1(self.stem(x))))
        return self.pool(x).flatten(1)


class TinyBackbone(nn.Module):
    """Minimal smooth backbone for gradient-correctness checks (no BN)."""

    feature_dim = 24

    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 6, 3, stride=2, padding=1)
        self.pool = nn.AdaptiveAvgPool2d(2)

    def forward(self, x):
        return self.pool(torch.tanh(self.conv(x))).flatten(1)


def build_backbone(spec: BackboneSpec | str) -> nn.Module:
    if isinstance(spec, str):
        spec = BackboneSpec(architecture=spec)
    if spec.architecture == "small_resnet":
        return SmallResNet()
    if spec.architecture == "tiny":
        return TinyBackbone()
    if spec.architecture == "resnet18":
        # Full-scale preset for users with the compute (and, for pretrained
        # weights, network access); not exercised by the desk-scale suite.
        from torchvision.models import resnet18

        net = resnet18(weights="IMAGENET1K_V1" if spec.pretrained else None)
        net.fc = nn.Identity()
        net.feature_dim = 512
        return net
    raise TrainingError(f"unknown backbone {spec.architecture!r}")


def _init_module(module: nn.Module, seed: int) -> None:
    """Deterministic parameter init from a private generator."""
    gen = torch.Generator().manual_seed(seed % (2**63))
    for name, p in module.named_parameters():
        with torch.no_grad():
            if p.dim() >= 2:
                fan_in = p[0].numel()
                p.normal_(0.0, 1.0 / math.sqrt(fan_in), generator=gen)
            elif "bias" in name or "bn" in name and name.endswith("bias"):
                p.zero_()
            else:  # 1-d weights (batch norm scales)
                p.fill_(1.0)


def set_deterministic() -> None:
    torch.use_deterministic_algorithms(True)


# ---------------------------------------------------------------------------
# data plumbing


def _merge(datasets) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, int]:
    """Stack samples from one or more datasets into arrays.

    Returns (pixels, labels, domain codes, num_classes, resolution) where the
    domain code is 0 for photo-like inference-domain samples and 1 for the
    auxiliary domain (painting / stylized / filtered).
    """
    if isinstance(datasets, DomainDataset):
        datasets = [datasets]
    datasets = [d for d in datasets if len(d) > 0]
    if not datasets:
        raise TrainingError("no training samples")
    num_classes = datasets[0].num_classes
    for d in datasets:
        if d.num_classes != num_classes:
            raise TrainingError("class vocabulary mismatch between datasets")
    pixels = np.stack([s.pixels for d in datasets for s in d.samples])
    labels = np.array([s.label for d in datasets for s in d.samples])
    domains = np.array(
        [0 if d.domain == "photo" else 1 for d in datasets for _ in d.samples]
    )
    present = set(labels.tolist())
    missing = [c for c in range(num_classes) if c not in present]
    if missing:
        logger.warning("classes absent from training data: %s", missing)
    return pixels, labels, domains, num_classes, pixels.shape[1]


def _augment_one(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = img
    if rng.random() < 0.5:
        out = out[:, ::-1]
    scale = rng.uniform(0.85, 1.15)
    n = out.shape[0]
    zoomed = ndimage.zoom(out, (scale, scale, 1.0), order=1, mode="nearest")
    m = zoomed.shape[0]
    if m >= n:
        off = (m - n) // 2
        out = zoomed[off : off + n, off : off + n]
    else:
        pad = np.zeros_like(out)
        off = (n - m) // 2
        pad[off : off + m, off : off + m] = zoomed
        out = pad
    # color jitter: brightness offset plus contrast about the image mean
    out = out + rng.uniform(-0.1, 0.1)
    mean = out.mean()
    out = (out - mean) * rng.uniform(0.8, 1.2) + mean
    return np.clip(out, 0.0, 1.0)


def _batch_tensor(
    pixels: np.ndarray,
    indices: np.ndarray,
    *,
    augment: bool,
    seed: int,
    epoch: int,
) -> torch.Tensor:
    imgs = []
    for i in indices:
        img = pixels[i]
        if augment:
            img = _augment_one(img, rng_for(seed, "aug", epoch, int(i)))
        imgs.append(img)
    arr = (np.stack(imgs) - NORM_MEAN) / NORM_STD
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2))).float()


def _shuffled_batches(n: int, batch_size: int, seed: int, epoch: int, tag: str = "shuffle"):
    order = rng_for(seed, tag, epoch).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _make_optimizer(config: TrainingConfig, backbone_params, head_params, *, heads: int = 1):
    lr_scale = 1.0 / heads if config.lr_normalization else 1.0
    groups = [
        {"params": list(backbone_params), "lr": config.base_lr * lr_scale, "role": "backbone"},
        {
            "params": list(head_params),
            "lr": config.base_lr * config.head_lr_multiplier,
            "role": "head",
        },
    ]
    return torch.optim.SGD(groups, lr=config.base_lr, momentum=config.momentum), lr_scale


def _set_epoch_lr(optimizer, config: TrainingConfig, epoch: int, lr_scale: float) -> float:
    lr = config.lr_at(epoch)
    for group in optimizer.param_groups:
        if group["role"] == "backbone":
            group["lr"] = lr * lr_scale
        else:
            group["lr"] = lr * config.head_lr_multiplier
    return lr


# ---------------------------------------------------------------------------
# gradient reversal


class _GradReverse(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, coeff):
        ctx.coeff = coeff
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad):
        return grad.neg() * ctx.coeff, None


def grad_reverse(x: torch.Tensor, coeff: float) -> torch.Tensor:
    """Identity forward; gradients scaled by -coeff on the way back."""
    return _GradReverse.apply(x, coeff)


class DomainDiscriminator(nn.Module):
    """Small feedforward head predicting photo vs auxiliary domain."""

    def __init__(self, feature_dim: int, hidden: int = 32):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(feature_dim, hidden), nn.ReLU(), nn.Linear(hidden, 2))

    def forward(self, features):
        return self.net(features)


# ---------------------------------------------------------------------------
# schemes


def _zero_head(head: nn.Linear) -> nn.Linear:
    # Zero-initialized heads give exactly-uniform softmax at init, so the
    # starting loss equals ln(num_classes) on balanced data.
    with torch.no_grad():
        head.weight.zero_()
        head.bias.zero_()
    return head


def _fresh_parts(config: TrainingConfig, num_classes: int, *, heads: int = 1):
    backbone = build_backbone(config.backbone)
    _init_module(backbone, derive_seed(config.seed, "init", "backbone"))
    head_n = _zero_head(nn.Linear(backbone.feature_dim, num_classes))
    head_p = None
    if heads == 2:
        head_p = _zero_head(nn.Linear(backbone.feature_dim, num_classes))
    return backbone, head_n, head_p


def _domain_means(losses: torch.Tensor, domains: torch.Tensor) -> dict[str, float]:
    out = {}
    for code, name in ((0, "photo"), (1, "aux")):
        mask = domains == code
        if mask.any():
            out[name] = float(losses[mask].mean())
    return out


def train_joint(data, config: TrainingConfig, *, scheme_tag: str = "joint") -> TrainedModel:
    """Single-head cross-entropy training over the merged dataset(s)."""
    set_deterministic()
    pixels, labels, domains, num_classes, resolution = _merge(data)
    backbone, head, _ = _fresh_parts(config, num_classes)
    optimizer, lr_scale = _make_optimizer(
        config, backbone.parameters(), head.parameters()
    )
    labels_t = torch.from_numpy(labels).long()
    domains_t = torch.from_numpy(domains).long()
    log = []
    backbone.train(), head.train()
    for epoch in range(1, config.epochs + 1):
        lr = _set_epoch_lr(optimizer, config, epoch, lr_scale)
        epoch_losses, epoch_domains = [], []
        for idx in _shuffled_batches(len(labels), config.batch_size, config.seed, epoch):
            batch = _batch_tensor(
                pixels, idx, augment=config.augment, seed=config.seed, epoch=epoch
            )
            optimizer.zero_grad()
            logits = head(backbone(batch))
            per_sample = nn.functional.cross_entropy(
                logits, labels_t[idx], reduction="none"
            )
            per_sample.mean().backward()
            optimizer.step()
            epoch_losses.append(per_sample.detach())
            epoch_domains.append(domains_t[idx])
        all_losses = torch.cat(epoch_losses)
        record = {"epoch": epoch, "lr": lr, "loss": float(all_losses.mean())}
        record.update(
            {f"loss_{k}": v for k, v in _domain_means(all_losses, torch.cat(epoch_domains)).items()}
        )
        log.append(record)
    return TrainedModel(
        backbone=backbone,
        head_photo=head,
        scheme=scheme_tag,
        config=config,
        num_classes=num_classes,
        input_resolution=resolution,
        log=log,
    ).eval()


def train_with_stylization(
    photos: DomainDataset, stylized: DomainDataset, config: TrainingConfig
) -> TrainedModel:
    """Train on the union of photos and their stylized counterparts.

    Each image is weighted once per epoch, which matches the paired
    half-weighted objective in expectation.  Requires every stylized sample
    to carry a pairing record naming a photo in ``photos``.
    """
    photo_ids = {s.id for s in photos.samples}
    unpaired = [cid for cid, _ in pairing_table(stylized) if cid not in photo_ids]
    if unpaired:
        raise TrainingError(f"stylized samples paired to unknown photos: {unpaired[:5]}")
    return train_joint([photos, stylized], config, scheme_tag="stylized")


def train_multitask(
    photos: DomainDataset, paintings: DomainDataset, config: TrainingConfig
) -> TrainedModel:
    """Shared backbone with domain-specific heads.

    Each step interleaves one photo half-batch through the photo head and one
    painting half-batch through the painting head, averaging the two losses;
    the smaller dataset is cycled.  With ``config.lr_normalization`` the
    backbone learning rate is divided by the number of heads.
    """
    set_deterministic()
    if len(photos) == 0 or len(paintings) == 0:
        raise TrainingError("multitask training needs both domains non-empty")
    px_n, y_n, _, num_classes, resolution = _merge(photos)
    px_p, y_p, _, nc_p, _ = _merge(paintings)
    if nc_p != num_classes:
        raise TrainingError("class vocabulary mismatch between photos and paintings")

    backbone, head_n, head_p = _fresh_parts(config, num_classes, heads=2)
    optimizer, lr_scale = _make_optimizer(
        config,
        backbone.parameters(),
        list(head_n.parameters()) + list(head_p.parameters()),
        heads=2,
    )
    y_n_t = torch.from_numpy(y_n).long()
    y_p_t = torch.from_numpy(y_p).long()
    half = max(config.batch_size // 2, 1)
    steps = math.ceil(max(len(y_n), len(y_p)) / half)
    log = []
    backbone.train(), head_n.train(), head_p.train()
    for epoch in range(1, config.epochs + 1):
        lr = _set_epoch_lr(optimizer, config, epoch, lr_scale)
        order_n = rng_for(config.seed, "shuffle-photo", epoch).permutation(len(y_n))
        order_p = rng_for(config.seed, "shuffle-painting", epoch).permutation(len(y_p))
        sum_n = sum_p = 0.0
        for step in range(steps):
            idx_n = order_n[(step * half + np.arange(half)) % len(y_n)]
            idx_p = order_p[(step * half + np.arange(half)) % len(y_p)]
            batch_n = _batch_tensor(px_n, idx_n, augment=config.augment, seed=config.seed, epoch=epoch)
            batch_p = _batch_tensor(
                px_p, idx_p, augment=config.augment, seed=derive_seed(config.seed, "p"), epoch=epoch
            )
            optimizer.zero_grad()
            loss_n = nn.functional.cross_entropy(head_n(backbone(batch_n)), y_n_t[idx_n])
            loss_p = nn.functional.cross_entropy(head_p(backbone(batch_p)), y_p_t[idx_p])
            (0.5 * (loss_n + loss_p)).backward()
            optimizer.step()
            sum_n += float(loss_n.detach())
            sum_p += float(loss_p.detach())
        log.append(
            {
                "epoch": epoch,
                "lr": lr,
                "loss": 0.5 * (sum_n + sum_p) / steps,
                "loss_photo": sum_n / steps,
                "loss_aux": sum_p / steps,
            }
        )
    return TrainedModel(
        backbone=backbone,
        head_photo=head_n,
        head_painting=head_p,
        scheme="multitask",
        config=config,
        num_classes=num_classes,
        input_resolution=resolution,
        log=log,
    ).eval()


def train_finetuned(
    photos: DomainDataset,
    paintings: DomainDataset,
    config: TrainingConfig,
    finetune_epochs: int | None = None,
) -> TrainedModel:
    """Joint single-head training, then photo-head refit with frozen backbone."""
    if finetune_epochs is None:
        finetune_epochs = config.finetune_epochs
    model = train_joint([photos, paintings], config, scheme_tag="finetune")
    if finetune_epochs == 0:
        return model

    set_deterministic()
    pixels, labels, _, _, _ = _merge(photos)
    labels_t = torch.from_numpy(labels).long()
    backbone, head = model.backbone, model.head_photo
    backbone.eval()  # freeze: no parameter updates, no BN statistics drift
    for p in backbone.parameters():
        p.requires_grad_(False)
    head.train()
    optimizer = torch.optim.SGD(head.parameters(), lr=config.finetune_lr, momentum=config.momentum)
    for epoch in range(1, finetune_epochs + 1):
        epoch_losses = []
        for idx in _shuffled_batches(
            len(labels), config.batch_size, config.seed, epoch, tag="shuffle-finetune"
        ):
            batch = _batch_tensor(
                pixels, idx, augment=config.augment, seed=derive_seed(config.seed, "ft"), epoch=epoch
            )
            with torch.no_grad():
                features = backbone(batch)
            optimizer.zero_grad()
            loss = nn.functional.cross_entropy(head(features), labels_t[idx])
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
        model.log.append(
            {
                "epoch": config.epochs + epoch,
                "lr": config.finetune_lr,
                "loss": float(np.mean(epoch_losses)),
                "loss_photo": float(np.mean(epoch_losses)),
                "stage": "finetune",
            }
        )
    for p in backbone.parameters():
        p.requires_grad_(True)
    return model.eval()


def train_domain_adversarial(
    photos: DomainDataset,
    paintings: DomainDataset,
    config: TrainingConfig,
    adversary_weight: float = 1.0,
) -> TrainedModel:
    """Joint training plus a gradient-reversed domain discriminator.

    The reversal coefficient ramps linearly from 0 to ``adversary_weight``
    over the first ``config.adversary_warmup_epochs`` epochs.  With weight 0
    the backbone/head trajectory is identical to :func:`train_joint` on the
    merged data (the discriminator still trains, but contributes exact zeros
    to the shared gradients).
    """
    if adversary_weight < 0:
        raise TrainingError("adversary_weight must be non-negative")
    set_deterministic()
    pixels, labels, domains, num_classes, resolution = _merge([photos, paintings])
    backbone, head, _ = _fresh_parts(config, num_classes)
    discriminator = DomainDiscriminator(backbone.feature_dim)
    _init_module(discriminator, derive_seed(config.seed, "init", "discriminator"))
    optimizer, lr_scale = _make_optimizer(config, backbone.parameters(), head.parameters())
    disc_opt = torch.optim.SGD(
        discriminator.parameters(), lr=config.base_lr * config.head_lr_multiplier,
        momentum=config.momentum,
    )
    labels_t = torch.from_numpy(labels).long()
    domains_t = torch.from_numpy(domains).long()
    log = []
    backbone.train(), head.train(), discriminator.train()
    for epoch in range(1, config.epochs + 1):
        lr = _set_epoch_lr(optimizer, config, epoch, lr_scale)
        warmup = min(epoch / max(config.adversary_warmup_epochs, 1), 1.0)
        coeff = adversary_weight * warmup
        cls_losses, disc_losses = [], []
        for idx in _shuffled_batches(len(labels), config.batch_size, config.seed, epoch):
            batch = _batch_tensor(
                pixels, idx, augment=config.augment, seed=config.seed, epoch=epoch
            )
            optimizer.zero_grad()
            disc_opt.zero_grad()
            features = backbone(batch)
            # Same per-sample-then-mean arithmetic as train_joint so the
            # weight-0 trajectory matches it bitwise.
            cls_loss = nn.functional.cross_entropy(
                head(features), labels_t[idx], reduction="none"
            ).mean()
            disc_logits = discriminator(grad_reverse(features, coeff))
            disc_loss = nn.functional.cross_entropy(disc_logits, domains_t[idx])
            (cls_loss + disc_loss).backward()
            optimizer.step()
            disc_opt.step()
            cls_losses.append(float(cls_loss.detach()))
            disc_losses.append(float(disc_loss.detach()))
        log.append(
            {
                "epoch": epoch,
                "lr": lr,
                "loss": float(np.mean(cls_losses)),
                "loss_discriminator": float(np.mean(disc_losses)),
                "adversary_coeff": coeff,
            }
        )
    return TrainedModel(
        backbone=backbone,
        head_photo=head,
        scheme="adversarial",
        config=config,
        num_classes=num_classes,
        input_resolution=resolution,
        discriminator=discriminator,
        log=log,
    ).eval()


def train_scheme(
    scheme: str,
    config: TrainingConfig,
    *,
    photos: DomainDataset,
    paintings: DomainDataset | None = None,
    stylized: DomainDataset | None = None,
    adversary_weight: float = 1.0,
) -> TrainedModel:
    """Dispatch a training scheme by name."""
    if scheme == "joint":
        extra = [d for d in (paintings, stylized) if d is not None]
        return train_joint([photos, *extra], config)
    if scheme == "stylized":
        if stylized is None:
            raise TrainingError("stylized scheme requires a stylized dataset")
        return train_with_stylization(photos, stylized, config)
    if scheme == "multitask":
        if paintings is None:
            raise TrainingError("multitask scheme requires a painting dataset")
        return train_multitask(photos, paintings, config)
    if scheme == "finetune":
        if paintings is None:
            raise TrainingError("finetune scheme requires a painting dataset")
        return train_finetuned(photos, paintings, config)
    if scheme == "adversarial":
        if paintings is None:
            raise TrainingError("adversarial scheme requires a painting dataset")
        return train_domain_adversarial(photos, paintings, config, adversary_weight)
    raise TrainingError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# inference


def _logits(model: TrainedModel, pixels: np.ndarray) -> np.ndarray:
    arr = (pixels - NORM_MEAN) / NORM_STD
    batch = torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2))).float()
    model.eval()
    with torch.no_grad():
        return model.head_photo(model.backbone(batch)).numpy()


def predict(model: TrainedModel, image: np.ndarray) -> int:
    """Argmax class of the photo head; ties break to the lowest index."""
    image = np.asarray(image, dtype=np.float64)
    if image.shape[0] != model.input_resolution:
        raise TrainingError(
            f"image resolution {image.shape[0]} != model resolution {model.input_resolution}"
        )
    return int(np.argmax(_logits(model, image[None])[0]))


def predict_batch(model: TrainedModel, dataset: DomainDataset, batch_size: int = 256) -> np.ndarray:
    """Predicted labels in dataset order."""
    if len(dataset) == 0:
        return np.array([], dtype=int)
    if dataset.samples[0].resolution != model.input_resolution:
        raise TrainingError("dataset resolution does not match model")
    pixels = np.stack([s.pixels for s in dataset.samples])
    out = []
    for start in range(0, len(pixels), batch_size):
        out.append(np.argmax(_logits(model, pixels[start : start + batch_size]), axis=1))
    return np.concatenate(out)


def model_hash(model: TrainedModel) -> str:
    """SHA-256 over backbone and head parameters/buffers."""
    h = hashlib.sha256()
    for module in (model.backbone, model.head_photo, model.head_painting):
        if module is None:
            continue
        for key, tensor in sorted(module.state_dict().items()):
            h.update(key.encode())
            h.update(tensor.numpy().tobytes())
    return h.hexdigest()


def backbone_hash(backbone: nn.Module) -> str:
    h = hashlib.sha256()
    for key, tensor in sorted(backbone.state_dict().items()):
        h.update(key.encode())
        h.update(tensor.numpy().tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: TrainedModel, path: str) -> None:
    payload = {
        "scheme": model.scheme,
        "config": vars(model.config),
        "num_classes": model.num_classes,
        "input_resolution": model.input_resolution,
        "backbone": model.backbone.state_dict(),
        "head_photo": model.head_photo.state_dict(),
        "head_painting": None
        if model.head_painting is None
        else model.head_painting.state_dict(),
        "log": model.log,
    }
    torch.save(payload, path)


def load_checkpoint(path: str) -> TrainedModel:
    payload = torch.load(path, weights_only=False)
    config = TrainingConfig(**payload["config"])
    backbone = build_backbone(config.backbone)
    backbone.load_state_dict(payload["backbone"])
    head = nn.Linear(backbone.feature_dim, payload["num_classes"])
    head.load_state_dict(payload["head_photo"])
    head_p = None
    if payload["head_painting"] is not None:
        head_p = nn.Linear(backbone.feature_dim, payload["num_classes"])
        head_p.load_state_dict(payload["head_painting"])
    return TrainedModel(
        backbone=backbone,
        head_photo=head,
        head_painting=head_p,
        scheme=payload["scheme"],
        config=config,
        num_classes=payload["num_classes"],
        input_resolution=payload["input_resolution"],
        log=payload["log"],
    ).eval()
