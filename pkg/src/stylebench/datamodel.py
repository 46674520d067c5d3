"""Labeled, domain-tagged image patch datasets.

Datasets are flat collections of square RGB patches with a class label and a
domain tag (photo / painting / stylized / filtered).  Patches are cut from
larger annotated images, class-balanced subsets are drawn for training, and
everything round-trips through tab-separated manifests plus PNG files on disk.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)

DOMAINS = ("photo", "painting", "stylized", "filtered")

#: Minimum tight-bbox area (pixels) for painting patches.
MIN_PAINTING_BBOX_AREA = 128 * 128


class DataError(ValueError):
    """Malformed dataset, record, or manifest."""


class ManifestError(DataError):
    """Manifest could not be loaded; message lists per-record diagnostics."""


@dataclass
class ImageSample:
    """One labeled, domain-tagged square image patch.

    ``pixels`` is an H×W×3 float array with values in [0, 1].
    """

    id: str
    pixels: np.ndarray
    label: int
    domain: str
    provenance: str | None = None

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise DataError(f"unknown domain {self.domain!r}")
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise DataError(f"sample {self.id}: pixels must be H×W×3")
        if self.pixels.shape[0] != self.pixels.shape[1]:
            raise DataError(f"sample {self.id}: image must be square")
        lo, hi = float(self.pixels.min(initial=0.0)), float(self.pixels.max(initial=0.0))
        if lo < 0.0 or hi > 1.0:
            raise DataError(f"sample {self.id}: pixel values outside [0, 1] ({lo}, {hi})")

    @property
    def resolution(self) -> int:
        return self.pixels.shape[0]


@dataclass
class DomainDataset:
    """A list of samples from one domain sharing a class vocabulary."""

    samples: list[ImageSample]
    num_classes: int
    domain: str

    def __post_init__(self):
        if self.num_classes <= 0:
            raise DataError("num_classes must be positive")
        if self.domain not in DOMAINS:
            raise DataError(f"unknown domain {self.domain!r}")
        for s in self.samples:
            if s.domain != self.domain:
                raise DataError(f"sample {s.id} has domain {s.domain}, dataset is {self.domain}")
            if not 0 <= s.label < self.num_classes:
                raise DataError(f"sample {s.id}: label {s.label} out of range [0, {self.num_classes})")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def class_index(self) -> dict[int, list[str]]:
        """Mapping class label -> ids of samples with that label, in dataset order."""
        index: dict[int, list[str]] = {c: [] for c in range(self.num_classes)}
        for s in self.samples:
            index[s.label].append(s.id)
        return index

    def by_id(self) -> dict[int, ImageSample]:
        return {s.id: s for s in self.samples}

    def subset(self, ids) -> "DomainDataset":
        wanted = set(ids)
        return DomainDataset(
            samples=[s for s in self.samples if s.id in wanted],
            num_classes=self.num_classes,
            domain=self.domain,
        )

    def with_domain(self, domain: str) -> "DomainDataset":
        return DomainDataset(
            samples=[replace(s, domain=domain) for s in self.samples],
            num_classes=self.num_classes,
            domain=domain,
        )


@dataclass
class BudgetSplit:
    """A fixed annotation budget split between photos and paintings.

    ``painting_count`` uses round-half-to-even so the split is unbiased and
    deterministic; ``photo_count`` takes the remainder, so the two always sum
    to the budget.
    """

    budget: int
    painting_fraction: float
    photo_count: int = field(init=False)
    painting_count: int = field(init=False)

    def __post_init__(self):
        if self.budget <= 0:
            raise DataError("budget must be positive")
        if not 0.0 <= self.painting_fraction <= 1.0:
            raise DataError("painting_fraction must lie in [0, 1]")
        self.painting_count = round(self.painting_fraction * self.budget)
        self.photo_count = self.budget - self.painting_count


# ---------------------------------------------------------------------------
# image helpers


def resize_image(pixels: np.ndarray, resolution: int) -> np.ndarray:
    """Resize an H×W×3 float image with PIL's area-weighted bilinear filter."""
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.shape[:2] == (resolution, resolution):
        return pixels
    channels = []
    for c in range(3):
        im = Image.fromarray(pixels[:, :, c].astype(np.float32), mode="F")
        im = im.resize((resolution, resolution), resample=Image.BILINEAR)
        channels.append(np.asarray(im, dtype=np.float64))
    return np.clip(np.stack(channels, axis=2), 0.0, 1.0)


def load_png(path: str) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_png(pixels: np.ndarray, path: str) -> None:
    arr = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    quantized = np.round(arr * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")


# ---------------------------------------------------------------------------
# patch extraction


def extract_patches(
    segments,
    images,
    pad_value=None,
    *,
    resolution: int = 224,
    paintings: bool = False,
    diagnostics: list[str] | None = None,
    domain: str = "photo",
) -> list[ImageSample]:
    """Cut square context patches around tight segment bounding boxes.

    ``segments`` is an iterable of ``(image_id, (x0, y0, w, h), label)``;
    ``images`` maps image ids to H×W×3 float arrays.  Each patch is a square
    of side ``ceil(1.5 * min(w, h))`` centered on the bbox center; regions
    outside the source image are filled with ``pad_value`` (default: channel
    mean over the image store).  Patches are resized to ``resolution``.

    With ``paintings=True``, segments whose tight bbox covers less than
    128×128 source pixels are rejected.  Rejected records are logged and, if
    ``diagnostics`` is given, appended to it; they never raise.
    """
    if pad_value is None:
        if images:
            pad_value = np.mean(
                [img.reshape(-1, 3).mean(axis=0) for img in images.values()], axis=0
            )
        else:
            pad_value = np.zeros(3)
    pad_value = np.asarray(pad_value, dtype=np.float64)

    def reject(idx, msg):
        note = f"segment {idx}: {msg}"
        logger.warning("rejected %s", note)
        if diagnostics is not None:
            diagnostics.append(note)

    patches = []
    for idx, (image_id, bbox, label) in enumerate(segments):
        x0, y0, w, h = bbox
        if image_id not in images:
            reject(idx, f"unknown image {image_id!r}")
            continue
        img = np.asarray(images[image_id], dtype=np.float64)
        H, W = img.shape[:2]
        if w <= 0 or h <= 0:
            reject(idx, f"zero-area bbox {bbox}")
            continue
        if x0 < 0 or y0 < 0 or x0 + w > W or y0 + h > H:
            reject(idx, f"bbox {bbox} outside image of size {W}×{H}")
            continue
        if paintings and w * h < MIN_PAINTING_BBOX_AREA:
            reject(idx, f"bbox area {w * h} below painting minimum {MIN_PAINTING_BBOX_AREA}")
            continue

        side = math.ceil(1.5 * min(w, h))
        cx = x0 + w / 2.0
        cy = y0 + h / 2.0
        xs = int(math.floor(cx - side / 2.0))
        ys = int(math.floor(cy - side / 2.0))

        patch = np.tile(pad_value, (side, side, 1))
        sx0, sy0 = max(xs, 0), max(ys, 0)
        sx1, sy1 = min(xs + side, W), min(ys + side, H)
        if sx1 > sx0 and sy1 > sy0:
            patch[sy0 - ys : sy1 - ys, sx0 - xs : sx1 - xs] = img[sy0:sy1, sx0:sx1]
        patch = np.clip(patch, 0.0, 1.0)

        patches.append(
            ImageSample(
                id=f"{image_id}_seg{idx}",
                pixels=resize_image(patch, resolution),
                label=int(label),
                domain=domain,
                provenance=str(image_id),
            )
        )
    return patches


def crop_geometry(bbox) -> tuple[int, int, int]:
    """Square crop (x_start, y_start, side) for a tight bbox ``(x0, y0, w, h)``."""
    x0, y0, w, h = bbox
    side = math.ceil(1.5 * min(w, h))
    xs = int(math.floor(x0 + w / 2.0 - side / 2.0))
    ys = int(math.floor(y0 + h / 2.0 - side / 2.0))
    return xs, ys, side


# ---------------------------------------------------------------------------
# class-balanced subsampling


def balance_classes(dataset: DomainDataset, target_total: int, rng_seed: int) -> DomainDataset:
    """Draw an as-class-balanced-as-possible subset of ``target_total`` samples.

    Classes whose whole supply is needed are exhausted (all samples taken) and
    their shortfall is spread over the remaining classes, largest remaining
    supply first, so non-exhausted class counts differ by at most one.
    Selection within a class is a seeded uniform draw without replacement.
    """
    if target_total > len(dataset):
        raise DataError(
            f"target_total {target_total} exceeds available {len(dataset)} "
            f"(deficit {target_total - len(dataset)})"
        )
    index = dataset.class_index
    supply = {c: len(ids) for c, ids in index.items()}
    counts = {c: 0 for c in supply}

    remaining_target = target_total
    open_classes = [c for c in supply if supply[c] > 0]
    # Exhaust classes that cannot reach the fair share, then re-split.
    while open_classes:
        share = remaining_target // len(open_classes)
        exhausted = [c for c in open_classes if supply[c] <= share]
        if not exhausted:
            break
        for c in exhausted:
            counts[c] = supply[c]
            remaining_target -= supply[c]
            open_classes.remove(c)
    if open_classes:
        base, extra = divmod(remaining_target, len(open_classes))
        for c in open_classes:
            counts[c] = base
        # +1 for the remainder, largest remaining supply first (ties by class index).
        for c in sorted(open_classes, key=lambda c: (-(supply[c] - base), c))[:extra]:
            counts[c] += 1
    elif remaining_target:
        raise DataError("internal: unassigned target after exhausting all classes")

    rng = np.random.default_rng(rng_seed)
    chosen: set[str] = set()
    for c in sorted(counts):
        ids = index[c]
        if counts[c] == len(ids):
            chosen.update(ids)
        elif counts[c] > 0:
            picked = rng.choice(len(ids), size=counts[c], replace=False)
            chosen.update(ids[i] for i in sorted(picked))
    return dataset.subset(chosen)


def make_budget_split(
    photos: DomainDataset,
    paintings: DomainDataset,
    split: BudgetSplit,
    rng_seed: int,
) -> tuple[DomainDataset, DomainDataset]:
    """Class-balanced photo/painting subsets of the sizes fixed by ``split``."""
    if split.photo_count > len(photos):
        raise DataError(
            f"budget needs {split.photo_count} photos, only {len(photos)} available"
        )
    if split.painting_count > len(paintings):
        raise DataError(
            f"budget needs {split.painting_count} paintings, only {len(paintings)} available"
        )
    photo_part = (
        balance_classes(photos, split.photo_count, rng_seed)
        if split.photo_count
        else DomainDataset([], photos.num_classes, photos.domain)
    )
    painting_part = (
        balance_classes(paintings, split.painting_count, rng_seed + 1)
        if split.painting_count
        else DomainDataset([], paintings.num_classes, paintings.domain)
    )
    return photo_part, painting_part


# ---------------------------------------------------------------------------
# manifest I/O
#
# Format: UTF-8, tab-separated.  First line declares the dataset:
#     num_classes=<K>\tresolution=<N>
# Each following line is one sample:
#     id\timage_path\tlabel\tdomain\tprovenance
# image_path is relative to the manifest file; provenance may be empty.


def save_manifest(dataset: DomainDataset, path: str, *, images_dir: str | None = None) -> None:
    """Write a manifest and the referenced PNG images.

    Images go to ``images_dir`` (default: ``<manifest stem>_images`` next to
    the manifest), one 8-bit RGB PNG per sample named by sample id.
    """
    path = os.path.abspath(path)
    base = os.path.dirname(path)
    os.makedirs(base, exist_ok=True)
    if images_dir is None:
        images_dir = os.path.splitext(path)[0] + "_images"
    os.makedirs(images_dir, exist_ok=True)

    resolution = dataset.samples[0].resolution if dataset.samples else 0
    lines = [f"num_classes={dataset.num_classes}\tresolution={resolution}"]
    for s in dataset.samples:
        img_path = os.path.join(images_dir, f"{s.id}.png")
        save_png(s.pixels, img_path)
        rel = os.path.relpath(img_path, base)
        lines.append(f"{s.id}\t{rel}\t{s.label}\t{s.domain}\t{s.provenance or ''}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_manifest(path: str, *, domain: str | None = None) -> DomainDataset:
    """Load a manifest written by :func:`save_manifest`.

    Every record is validated; if any record is malformed (bad field count,
    label out of range, unknown domain, missing image file) the whole load
    fails with a :class:`ManifestError` listing each offending line.
    """
    path = os.path.abspath(path)
    base = os.path.dirname(path)
    with open(path, encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if not lines:
        raise ManifestError(f"{path}: empty file, header missing")

    header = dict(item.split("=", 1) for item in lines[0].split("\t") if "=" in item)
    try:
        num_classes = int(header["num_classes"])
    except (KeyError, ValueError):
        raise ManifestError(f"{path}: header must declare num_classes") from None

    samples = []
    problems = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 5:
            problems.append(f"line {lineno}: expected 5 tab-separated fields, got {len(fields)}")
            continue
        sid, img_path, label_str, rec_domain, provenance = fields
        try:
            label = int(label_str)
        except ValueError:
            problems.append(f"line {lineno}: label {label_str!r} is not an integer")
            continue
        if not 0 <= label < num_classes:
            problems.append(f"line {lineno}: label {label} out of range [0, {num_classes})")
            continue
        if rec_domain not in DOMAINS:
            problems.append(f"line {lineno}: unknown domain {rec_domain!r}")
            continue
        full = os.path.join(base, img_path)
        if not os.path.isfile(full):
            problems.append(f"line {lineno}: missing image file {img_path}")
            continue
        samples.append(
            ImageSample(
                id=sid,
                pixels=load_png(full),
                label=label,
                domain=rec_domain,
                provenance=provenance or None,
            )
        )

    if problems:
        raise ManifestError(f"{path}: {len(problems)} malformed record(s):\n" + "\n".join(problems))

    if domain is None:
        domains = {s.domain for s in samples}
        if len(domains) > 1:
            raise ManifestError(f"{path}: mixed domains {sorted(domains)}; pass domain= explicitly")
        domain = domains.pop() if domains else "photo"
    return DomainDataset(samples=samples, num_classes=num_classes, domain=domain)


def dataset_hash(dataset: DomainDataset) -> str:
    """Content hash over ids, labels, domains, and 8-bit quantized pixels."""
    import hashlib

    h = hashlib.sha256()
    for s in dataset.samples:
        h.update(s.id.encode())
        h.update(str(s.label).encode())
        h.update(s.domain.encode())
        h.update(np.round(np.clip(s.pixels, 0, 1) * 255).astype(np.uint8).tobytes())
    h.update(str(dataset.num_classes).encode())
    return h.hexdigest()
