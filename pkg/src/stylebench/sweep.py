"""Experiment sweeps: build data, train, evaluate over one swept axis.

A sweep config is a JSON document naming the data sources, the training
configuration, the stylization policy, and a seed list.  ``run_sweep``
executes every (axis value × seed) cell, writes one report per cell, and
aggregates each axis value across seeds into a summary CSV + JSON suitable
for plotting.  Cells are independent: a failing cell records a diagnostic
and the rest proceed.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import traceback

from . import corruptions, evaluation, frequency, stylization, synthetic, training
from .datamodel import BudgetSplit, DomainDataset, dataset_hash, load_manifest, make_budget_split
from .evaluation import EvalReport, aggregate_runs, report_to_dict
from .seeding import derive_seed

logger = logging.getLogger(__name__)

SWEEP_AXES = (
    "style_policy",
    "classifier_scheme",
    "painting_fraction",
    "lf_ablation",
    "combined_sources",
)

DEFAULT_AXIS_VALUES = {
    "style_policy": ["none", "painting", "intradomain", "intraclass"],
    "classifier_scheme": ["joint", "multitask", "finetune", "adversarial"],
    "painting_fraction": [0.0, 0.25, 0.5],
    "lf_ablation": ["none", "stylized", "stylized_lf"],
    "combined_sources": ["photo", "photo+stylized", "photo+painting", "photo+stylized+painting"],
}

_POLICY_BY_NAME = {
    "painting": "painting_pool",
    "intradomain": "intradomain_unrestricted",
    "intraclass": "intradomain_intraclass",
}

SUMMARY_METRICS = (
    "clean_acc",
    "mean_corruption_acc",
    "category_noise",
    "category_blur",
    "category_weather",
    "category_digital",
    "ood_acc",
    "combined_mean",
)


class SweepError(ValueError):
    pass


def load_experiment_config(path: str) -> dict:
    """Load a config file; relative paths resolve against its directory."""
    with open(path, encoding="utf-8") as f:
        config = json.load(f)
    config.setdefault("_base_dir", os.path.dirname(os.path.abspath(path)))
    validate_config(config)
    return config


def validate_config(config: dict) -> None:
    if not config.get("seed_list"):
        raise SweepError("config must name a non-empty seed_list")
    data = config.get("data", {})
    if data.get("kind", "synthetic") == "manifests":
        base = _data_root(config)
        for key in ("photos", "test"):
            if key not in data:
                raise SweepError(f"manifest data config missing {key!r}")
        for key in ("photos", "paintings", "test", "ood"):
            if key in data and not os.path.isfile(os.path.join(base, data[key])):
                raise SweepError(f"manifest {data[key]!r} does not exist")


def _data_root(config: dict) -> str:
    return os.environ.get("STYLEBENCH_DATA_ROOT", config.get("_base_dir", "."))


def build_data(config: dict) -> dict[str, DomainDataset]:
    """Materialize the photo/painting/test/ood datasets named by the config."""
    data = config.get("data", {})
    kind = data.get("kind", "synthetic")
    if kind == "synthetic":
        seed = data.get("seed", 7)
        resolution = data.get("resolution", 32)
        num_classes = data.get("num_classes", 10)
        common = {"resolution": resolution, "num_classes": num_classes}
        return {
            "photos": synthetic.make_synthetic_dataset(
                data.get("train_size", 500), derive_seed(seed, "train"), **common
            ),
            "paintings": synthetic.make_synthetic_dataset(
                data.get("painting_size", data.get("train_size", 500)),
                derive_seed(seed, "paintings"),
                palette="painting",
                **common,
            ),
            "test": synthetic.make_synthetic_dataset(
                data.get("test_size", 100), derive_seed(seed, "test"), id_prefix="test", **common
            ),
            "ood": synthetic.make_synthetic_dataset(
                data.get("ood_size", 100), derive_seed(seed, "ood"), palette="ood", **common
            ),
        }
    if kind == "manifests":
        base = _data_root(config)
        out = {}
        for key in ("photos", "paintings", "test", "ood"):
            if key in data:
                out[key] = load_manifest(os.path.join(base, data[key]))
        return out
    raise SweepError(f"unknown data kind {kind!r}")


def _stylize(photos, pool, policy_name, config, seed):
    policy = stylization.StylePolicy(kind=_POLICY_BY_NAME[policy_name])
    stylizer_cfg = config.get("stylizer", {})
    stylizer = stylization.Stylizer(
        feature_space=stylizer_cfg.get("feature_space", "decorrelated_color"),
        strength=stylizer_cfg.get("strength", 1.0),
    )
    return stylization.stylize_dataset(photos, pool, policy, stylizer, seed)


def _training_config(config: dict, seed: int) -> training.TrainingConfig:
    overrides = dict(config.get("training", {}))
    overrides["seed"] = seed
    return training.TrainingConfig(**overrides)


def _lowpass_spec(config: dict) -> frequency.LowPassSpec:
    lp = config.get("lowpass", {})
    return frequency.LowPassSpec(tau=lp.get("tau", frequency.DEFAULT_TAU))


def run_cell(config: dict, axis: str, value, seed: int, data: dict) -> EvalReport:
    """Train and evaluate one (axis value, seed) cell."""
    photos, paintings = data["photos"], data.get("paintings")
    tcfg = _training_config(config, seed)
    style_seed = derive_seed(seed, "stylize", str(value))

    if axis == "style_policy":
        if value == "none":
            model = training.train_joint(photos, tcfg)
        else:
            pool = paintings if value == "painting" else photos
            stylized = _stylize(photos, pool, value, config, style_seed)
            model = training.train_with_stylization(photos, stylized, tcfg)
    elif axis == "classifier_scheme":
        model = training.train_scheme(value, tcfg, photos=photos, paintings=paintings)
    elif axis == "painting_fraction":
        split = BudgetSplit(budget=config.get("budget", len(photos)), painting_fraction=float(value))
        photo_part, painting_part = make_budget_split(
            photos, paintings, split, derive_seed(seed, "budget", value)
        )
        if len(painting_part) == 0:
            model = training.train_joint(photo_part, tcfg)
        else:
            model = training.train_multitask(photo_part, painting_part, tcfg)
    elif axis == "lf_ablation":
        if value == "none":
            model = training.train_joint(photos, tcfg)
        else:
            stylized = _stylize(photos, photos, "intradomain", config, style_seed)
            if value == "stylized_lf":
                stylized = frequency.filter_dataset(stylized, _lowpass_spec(config)).with_domain(
                    "stylized"
                )
            model = training.train_joint([photos, stylized], tcfg, scheme_tag="stylized")
    elif axis == "combined_sources":
        parts = str(value).split("+")
        photo_stream = [photos]
        if "stylized" in parts:
            photo_stream.append(_stylize(photos, photos, "intradomain", config, style_seed))
        if "painting" in parts:
            model = training.train_multitask(
                _merge_stream(photo_stream), paintings, tcfg
            )
        else:
            model = training.train_joint(photo_stream, tcfg)
    else:
        raise SweepError(f"unknown sweep axis {axis!r}")

    corrupted = corrupted_sets_for(config, data["test"])
    metadata = {
        "axis": axis,
        "value": str(value),
        "seed": seed,
        "test_hash": dataset_hash(data["test"]),
        "model_hash": training.model_hash(model),
    }
    return evaluation.evaluate(model, data["test"], corrupted, data.get("ood"), metadata)


def _merge_stream(datasets: list[DomainDataset]) -> DomainDataset:
    if len(datasets) == 1:
        return datasets[0]
    samples = [s for d in datasets for s in d.samples]
    # unified photo-stream dataset; stylized images keep their ids/labels
    samples = [
        s if s.domain == "photo" else type(s)(s.id, s.pixels, s.label, "photo", s.provenance)
        for s in samples
    ]
    return DomainDataset(samples=samples, num_classes=datasets[0].num_classes, domain="photo")


_corrupted_cache: dict[tuple, list] = {}


def corrupted_sets_for(config: dict, test: DomainDataset):
    """All-75 corrupted sets for the test set, cached per (hash, seed)."""
    key = (dataset_hash(test), config.get("corruption_seed", 0))
    if key not in _corrupted_cache:
        _corrupted_cache[key] = corruptions.corrupt_dataset(
            test, master_seed=config.get("corruption_seed", 0)
        )
    return _corrupted_cache[key]


def run_sweep(config: dict, sweep_axis: str, output_dir: str | None = None) -> dict:
    """Run every (axis value × seed) cell and write reports + summary files.

    Returns the summary document: per axis value, per-metric mean and
    population std over the seeds that completed, plus diagnostics for any
    failed cells.
    """
    if sweep_axis not in SWEEP_AXES:
        raise SweepError(f"sweep_axis must be one of {SWEEP_AXES}")
    if output_dir is None:
        output_dir = config.get("output_dir", "sweep_out")
    os.makedirs(output_dir, exist_ok=True)

    values = config.get("axis_values", DEFAULT_AXIS_VALUES[sweep_axis])
    seeds = config["seed_list"]
    data = build_data(config)

    summary = {"axis": sweep_axis, "rows": [], "failures": []}
    for value in values:
        reports = []
        for seed in seeds:
            cell_dir = os.path.join(output_dir, f"{sweep_axis}={value}", f"seed={seed}")
            try:
                report = run_cell(config, sweep_axis, value, seed, data)
            except Exception as exc:  # noqa: BLE001 - cells are isolated by design
                logger.error("cell (%s=%s, seed %s) failed: %s", sweep_axis, value, seed, exc)
                summary["failures"].append(
                    {
                        "value": str(value),
                        "seed": seed,
                        "error": f"{type(exc).__name__}: {exc}",
                        "traceback": traceback.format_exc(),
                    }
                )
                continue
            os.makedirs(cell_dir, exist_ok=True)
            with open(os.path.join(cell_dir, "report.json"), "w", encoding="utf-8") as f:
                json.dump(report_to_dict(report), f, indent=2, sort_keys=True)
            reports.append(report)

        if not reports:
            continue
        if len(reports) >= 2:
            agg = aggregate_runs(reports)
            mean, std = agg.mean, agg.std
        else:
            mean = reports[0].metrics()
            std = {k: 0.0 for k in mean}
        row = {"value": str(value), "n_runs": len(reports)}
        for metric in SUMMARY_METRICS:
            if metric in mean:
                row[f"{metric}_mean"] = mean[metric]
                row[f"{metric}_std"] = std[metric]
        summary["rows"].append(row)

    _write_summary(summary, output_dir)
    return summary


def _write_summary(summary: dict, output_dir: str) -> None:
    with open(os.path.join(output_dir, "summary.json"), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
    rows = summary["rows"]
    if not rows:
        return
    fieldnames = list(rows[0].keys())
    with open(os.path.join(output_dir, "summary.csv"), "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
