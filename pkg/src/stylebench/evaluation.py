"""Robustness metrics: clean, per-corruption, per-category, mean-corruption,
OOD, and combined accuracies, plus cross-seed aggregation.

Accuracies are fractions in [0, 1] internally; rendering as percent happens
only in reports.  The mean corruption accuracy weights the four corruption
categories equally (each category is itself a mean over its corruptions × 5
severities), so categories with fewer corruptions are *not* down-weighted.
Cross-seed spread is the population standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corruptions import CATEGORIES, CATEGORY_MEMBERS, CorruptedSet
from .datamodel import DomainDataset
from .training import TrainedModel, predict_batch

SEVERITIES = (1, 2, 3, 4, 5)

_CONSISTENCY_TOL = 1e-9


class EvaluationError(ValueError):
    pass


@dataclass
class EvalReport:
    """One model's full robustness report; invariants checked on construction."""

    clean_acc: float
    per_corruption: dict[tuple[str, int], float]
    per_category: dict[str, float]
    mean_corruption_acc: float
    ood_acc: float | None = None
    combined_mean: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for category in CATEGORIES:
            expected = float(
                np.mean(
                    [
                        self.per_corruption[(name, s)]
                        for name in CATEGORY_MEMBERS[category]
                        for s in SEVERITIES
                    ]
                )
            )
            if abs(self.per_category[category] - expected) > _CONSISTENCY_TOL:
                raise EvaluationError(
                    f"per_category[{category}] inconsistent with per_corruption entries"
                )
        expected_mean = float(np.mean([self.per_category[c] for c in CATEGORIES]))
        if abs(self.mean_corruption_acc - expected_mean) > _CONSISTENCY_TOL:
            raise EvaluationError("mean_corruption_acc inconsistent with category accuracies")

    def metrics(self) -> dict[str, float]:
        """Flat metric map for aggregation and CSV output."""
        out = {"clean_acc": self.clean_acc, "mean_corruption_acc": self.mean_corruption_acc}
        out.update({f"category_{c}": v for c, v in self.per_category.items()})
        out.update({f"{name}:{s}": v for (name, s), v in self.per_corruption.items()})
        if self.ood_acc is not None:
            out["ood_acc"] = self.ood_acc
        if self.combined_mean is not None:
            out["combined_mean"] = self.combined_mean
        return out


@dataclass
class RunAggregate:
    """Per-metric mean and population std over independent seeded runs."""

    num_runs: int
    mean: dict[str, float]
    std: dict[str, float]


# ---------------------------------------------------------------------------


def _predicted_labels(model, dataset: DomainDataset) -> np.ndarray:
    if isinstance(model, TrainedModel):
        return predict_batch(model, dataset)
    # Duck-typed stub: anything exposing predict_batch(dataset) -> labels.
    return np.asarray(model.predict_batch(dataset))


def accuracy(model, dataset: DomainDataset) -> float:
    """Fraction of samples whose prediction matches the label."""
    if len(dataset) == 0:
        raise EvaluationError("cannot evaluate on an empty dataset")
    predicted = _predicted_labels(model, dataset)
    truth = np.array([s.label for s in dataset.samples])
    return float(np.mean(predicted == truth))


def _accuracy_table(model, corrupted_sets) -> dict[tuple[str, int], float]:
    return {(cs.spec.name, cs.spec.severity): accuracy(model, _as_dataset(cs)) for cs in corrupted_sets}


def _as_dataset(corrupted: CorruptedSet) -> DomainDataset:
    domain = corrupted.samples[0].domain if corrupted.samples else "photo"
    num_classes = max(s.label for s in corrupted.samples) + 1 if corrupted.samples else 1
    return DomainDataset(samples=corrupted.samples, num_classes=num_classes, domain=domain)


def category_accuracy_from_table(table: dict[tuple[str, int], float], category: str) -> float:
    """Unweighted mean over the category's corruptions × severities."""
    if category not in CATEGORY_MEMBERS:
        raise EvaluationError(f"unknown category {category!r}")
    values = []
    for name in CATEGORY_MEMBERS[category]:
        for s in SEVERITIES:
            if (name, s) not in table:
                raise EvaluationError(f"missing corrupted set ({name}, severity {s})")
            values.append(table[(name, s)])
    return float(np.mean(values))


def mean_corruption_accuracy_from_table(table: dict[tuple[str, int], float]) -> float:
    """Mean of the four category accuracies (not the mean over all 75 sets)."""
    return float(np.mean([category_accuracy_from_table(table, c) for c in CATEGORIES]))


def category_accuracy(model, corrupted_sets, category: str) -> float:
    return category_accuracy_from_table(_accuracy_table(model, corrupted_sets), category)


def mean_corruption_accuracy(model, corrupted_sets) -> float:
    return mean_corruption_accuracy_from_table(_accuracy_table(model, corrupted_sets))


def combined_mean(corruption_acc: float, ood_acc: float | None) -> float:
    """Arithmetic mean of corruption and OOD accuracy."""
    if ood_acc is None:
        raise EvaluationError("combined mean requires an OOD accuracy")
    return 0.5 * (corruption_acc + ood_acc)


def evaluate(
    model,
    clean_test: DomainDataset,
    corrupted_sets,
    ood_test: DomainDataset | None = None,
    metadata: dict | None = None,
) -> EvalReport:
    """Assemble the full report for one model."""
    table = _accuracy_table(model, corrupted_sets)
    per_category = {c: category_accuracy_from_table(table, c) for c in CATEGORIES}
    mean_corr = float(np.mean(list(per_category.values())))
    ood = accuracy(model, ood_test) if ood_test is not None else None
    return EvalReport(
        clean_acc=accuracy(model, clean_test),
        per_corruption=table,
        per_category=per_category,
        mean_corruption_acc=mean_corr,
        ood_acc=ood,
        combined_mean=combined_mean(mean_corr, ood) if ood is not None else None,
        metadata=dict(metadata or {}),
    )


def aggregate_runs(reports: list[EvalReport]) -> RunAggregate:
    """Mean and population std per metric over ≥2 independent-seed reports."""
    if len(reports) < 2:
        raise EvaluationError("aggregation needs at least 2 reports")
    reference = {
        k: v for k, v in reports[0].metadata.items() if k not in ("seed", "model_hash")
    }
    for r in reports[1:]:
        other = {k: v for k, v in r.metadata.items() if k not in ("seed", "model_hash")}
        if other != reference:
            raise EvaluationError("reports disagree on metadata beyond the seed")
    tables = [r.metrics() for r in reports]
    keys = tables[0].keys()
    if any(t.keys() != keys for t in tables):
        raise EvaluationError("reports carry different metric sets")
    mean = {k: float(np.mean([t[k] for t in tables])) for k in keys}
    std = {k: float(np.std([t[k] for t in tables])) for k in keys}
    return RunAggregate(num_runs=len(reports), mean=mean, std=std)


# ---------------------------------------------------------------------------
# (de)serialization for report files


def report_to_dict(report: EvalReport) -> dict:
    return {
        "clean_acc": report.clean_acc,
        "per_corruption": {f"{n}:{s}": v for (n, s), v in report.per_corruption.items()},
        "per_category": report.per_category,
        "mean_corruption_acc": report.mean_corruption_acc,
        "ood_acc": report.ood_acc,
        "combined_mean": report.combined_mean,
        "metadata": report.metadata,
    }


def report_from_dict(doc: dict) -> EvalReport:
    per_corruption = {}
    for key, value in doc["per_corruption"].items():
        name, severity = key.rsplit(":", 1)
        per_corruption[(name, int(severity))] = value
    return EvalReport(
        clean_acc=doc["clean_acc"],
        per_corruption=per_corruption,
        per_category=dict(doc["per_category"]),
        mean_corruption_acc=doc["mean_corruption_acc"],
        ood_acc=doc.get("ood_acc"),
        combined_mean=doc.get("combined_mean"),
        metadata=dict(doc.get("metadata", {})),
    )
