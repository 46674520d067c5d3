"""Command-line surface tying the pipeline together.

Every subcommand prints its resolved configuration, writes a machine-readable
run descriptor (JSON, including content hashes of every input dataset), and on
failure exits non-zero with a single machine-parsable ``error code=... :``
line on stderr.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import sys

import click
import numpy as np

from . import corruptions, evaluation, frequency, gram, stylization, sweep, synthetic, training
from .datamodel import (
    DomainDataset,
    dataset_hash,
    load_manifest,
    load_png,
    save_manifest,
)
from .evaluation import report_from_dict, report_to_dict
from .seeding import derive_seed


def _fail(exc: Exception) -> None:
    code = type(exc).__name__
    click.echo(f"error code={code}: {exc}", err=True)
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - reported as a structured error line
            _fail(exc)

    return wrapper


def _emit_descriptor(command: str, config: dict, hashes: dict, out_dir: str) -> None:
    """Print the resolved config and write the run descriptor."""
    resolved = {k: v for k, v in config.items() if not k.startswith("_")}
    click.echo("resolved config:")
    click.echo(json.dumps(resolved, indent=2, sort_keys=True, default=str))
    descriptor = {"command": command, "config": resolved, "input_hashes": hashes}
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "run_descriptor.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(descriptor, f, indent=2, sort_keys=True, default=str)
    click.echo(f"run descriptor: {path}")


@click.group()
def main():
    """Desk-scale workbench for style-driven robustness experiments."""


# ---------------------------------------------------------------------------


@main.command("prepare-data")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--train-size", default=500, show_default=True)
@click.option("--painting-size", default=500, show_default=True)
@click.option("--test-size", default=100, show_default=True)
@click.option("--ood-size", default=100, show_default=True)
@click.option("--resolution", default=32, show_default=True)
@click.option("--num-classes", default=10, show_default=True)
@click.option("--seed", default=7, show_default=True)
@handle_errors
def prepare_data(out_dir, train_size, painting_size, test_size, ood_size, resolution, num_classes, seed):
    """Generate the synthetic photo/painting/test/OOD datasets as manifests."""
    config = dict(
        out=out_dir, train_size=train_size, painting_size=painting_size,
        test_size=test_size, ood_size=ood_size, resolution=resolution,
        num_classes=num_classes, seed=seed,
    )
    common = {"resolution": resolution, "num_classes": num_classes}
    parts = {
        "photos": synthetic.make_synthetic_dataset(train_size, derive_seed(seed, "train"), **common),
        "paintings": synthetic.make_synthetic_dataset(
            painting_size, derive_seed(seed, "paintings"), palette="painting", **common
        ),
        "test": synthetic.make_synthetic_dataset(
            test_size, derive_seed(seed, "test"), id_prefix="test", **common
        ),
        "ood": synthetic.make_synthetic_dataset(
            ood_size, derive_seed(seed, "ood"), palette="ood", **common
        ),
    }
    hashes = {}
    for name, dataset in parts.items():
        save_manifest(dataset, os.path.join(out_dir, f"{name}.tsv"))
        hashes[name] = dataset_hash(dataset)
        click.echo(f"wrote {name}: {len(dataset)} samples")
    _emit_descriptor("prepare-data", config, hashes, out_dir)


@main.command("corrupt")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--spec", "spec_str", default=None, help="Single name:severity; default all 75.")
@handle_errors
def corrupt(manifest, out_dir, seed, spec_str):
    """Corrupt a test manifest; writes DIR/<name>/<severity>/<id>.png per set."""
    dataset = load_manifest(manifest)
    specs = None
    if spec_str is not None:
        name, _, severity = spec_str.partition(":")
        specs = [corruptions.CorruptionSpec(name, int(severity))]
    sets = corruptions.corrupt_dataset(dataset, specs, master_seed=seed)
    for cs in sets:
        set_dir = os.path.join(out_dir, cs.spec.name, str(cs.spec.severity))
        corrupted = DomainDataset(
            samples=cs.samples, num_classes=dataset.num_classes, domain=dataset.domain
        )
        save_manifest(corrupted, os.path.join(set_dir, "manifest.tsv"), images_dir=set_dir)
    config = dict(manifest=manifest, out=out_dir, seed=seed, spec=spec_str)
    _emit_descriptor("corrupt", config, {"test": dataset_hash(dataset)}, out_dir)
    click.echo(f"wrote {len(sets)} corrupted set(s)")


@main.command("stylize")
@click.option("--content", required=True, type=click.Path(exists=True))
@click.option("--pool", required=True, type=click.Path(exists=True))
@click.option("--policy", required=True, type=click.Choice(["painting", "intradomain", "intraclass"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--strength", default=1.0, show_default=True)
@click.option("--feature-space", default="decorrelated_color", show_default=True)
@handle_errors
def stylize_cmd(content, pool, policy, seed, out_dir, strength, feature_space):
    """Stylize a content manifest against a style pool manifest."""
    content_ds = load_manifest(content)
    pool_ds = load_manifest(pool)
    policy_obj = stylization.StylePolicy(kind=sweep._POLICY_BY_NAME[policy])
    stylizer = stylization.Stylizer(feature_space=feature_space, strength=strength)
    stylized = stylization.stylize_dataset(content_ds, pool_ds, policy_obj, stylizer, seed)
    save_manifest(stylized, os.path.join(out_dir, "stylized.tsv"))
    with open(os.path.join(out_dir, "pairing.tsv"), "w", encoding="utf-8") as f:
        for cid, sid in stylization.pairing_table(stylized):
            f.write(f"{cid}\t{sid}\tstylized_images/{cid}_sty.png\n")
    config = dict(
        content=content, pool=pool, policy=policy, seed=seed, out=out_dir,
        strength=strength, feature_space=feature_space,
    )
    hashes = {
        "content": dataset_hash(content_ds),
        "pool": dataset_hash(pool_ds),
        "stylized": dataset_hash(stylized),
    }
    _emit_descriptor("stylize", config, hashes, out_dir)


@main.command("lowpass")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--tau", default=frequency.DEFAULT_TAU, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@handle_errors
def lowpass(manifest, tau, out_dir):
    """Ideal circular low-pass filter every image in a manifest."""
    dataset = load_manifest(manifest)
    spec = frequency.LowPassSpec(tau=tau)
    filtered = frequency.filter_dataset(dataset, spec)
    save_manifest(filtered, os.path.join(out_dir, "filtered.tsv"))
    config = dict(manifest=manifest, tau=tau, out=out_dir, effective_tau=spec.effective_tau(dataset.samples[0].resolution) if dataset.samples else None)
    hashes = {"input": dataset_hash(dataset), "filtered": dataset_hash(filtered)}
    _emit_descriptor("lowpass", config, hashes, out_dir)


@main.command("analyze-spectrum")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def analyze_spectrum(manifest, out_path):
    """Write the dataset's mean radial power spectrum as (r, mean_power) CSV."""
    dataset = load_manifest(manifest)
    spectrum = frequency.mean_spectrum(dataset)
    out_dir = os.path.dirname(os.path.abspath(out_path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["r", "mean_power"])
        for r, power in zip(spectrum.radii, spectrum.values):
            writer.writerow([r, repr(float(power))])
    config = dict(manifest=manifest, out=out_path)
    _emit_descriptor("analyze-spectrum", config, {"input": dataset_hash(dataset)}, out_dir)


@main.command("analyze-gram")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="TSV of image-path pairs: path_a<tab>path_b per line.")
@click.option("--features", default="default", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path())
@handle_errors
def analyze_gram(pairs_path, features, out_path):
    """Mean ± std Gram-matrix style distance over a list of image pairs."""
    if features != "default":
        raise ValueError(f"unknown feature extractor {features!r}")
    base = os.path.dirname(os.path.abspath(pairs_path))
    pairs = []
    with open(pairs_path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            a, b = line.rstrip("\n").split("\t")[:2]
            pairs.append((load_png(os.path.join(base, a)), load_png(os.path.join(base, b))))
    mean, std = gram.mean_pair_distance(pairs)
    click.echo(f"gram distance: mean={mean:.6f} std={std:.6f} over {len(pairs)} pair(s)")
    result = {"mean": mean, "std": std, "num_pairs": len(pairs), "features": features}
    out_dir = os.path.dirname(os.path.abspath(out_path)) if out_path else base
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            json.dump(result, f, indent=2, sort_keys=True)
    _emit_descriptor("analyze-gram", dict(pairs=pairs_path, features=features, out=out_path), {}, out_dir)


@main.command("train")
@click.option("--scheme", required=True,
              type=click.Choice(["joint", "stylized", "multitask", "finetune", "adversarial"]))
@click.option("--photos", required=True, type=click.Path(exists=True))
@click.option("--paintings", default=None, type=click.Path(exists=True))
@click.option("--stylized", default=None, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="JSON of TrainingConfig field overrides.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@handle_errors
def train(scheme, photos, paintings, stylized, config_path, seed, out_dir):
    """Train one classifier scheme; emits checkpoint, epoch log, descriptor."""
    overrides = {}
    if config_path:
        with open(config_path, encoding="utf-8") as f:
            overrides = json.load(f)
    overrides["seed"] = seed
    tcfg = training.TrainingConfig(**overrides)

    photo_ds = load_manifest(photos)
    painting_ds = load_manifest(paintings) if paintings else None
    stylized_ds = load_manifest(stylized, domain="stylized") if stylized else None
    model = training.train_scheme(
        scheme, tcfg, photos=photo_ds, paintings=painting_ds, stylized=stylized_ds
    )

    os.makedirs(out_dir, exist_ok=True)
    training.save_checkpoint(model, os.path.join(out_dir, "model.pt"))
    with open(os.path.join(out_dir, "train_log.jsonl"), "w", encoding="utf-8") as f:
        for record in model.log:
            f.write(json.dumps(record, sort_keys=True) + "\n")

    config = dict(scheme=scheme, photos=photos, paintings=paintings, stylized=stylized,
                  seed=seed, out=out_dir, training=vars(tcfg))
    hashes = {"photos": dataset_hash(photo_ds), "model": training.model_hash(model)}
    if painting_ds is not None:
        hashes["paintings"] = dataset_hash(painting_ds)
    if stylized_ds is not None:
        hashes["stylized"] = dataset_hash(stylized_ds)
    _emit_descriptor("train", config, hashes, out_dir)


class _StoredPredictionModel:
    """Stub model backed by a stored id → predicted-label table."""

    def __init__(self, table: dict[str, int]):
        self.table = table

    def predict_batch(self, dataset: DomainDataset) -> np.ndarray:
        try:
            return np.array([self.table[s.id] for s in dataset.samples])
        except KeyError as exc:
            raise evaluation.EvaluationError(f"stub has no prediction for id {exc}") from exc


def _load_model(path: str):
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as f:
            return _StoredPredictionModel({k: int(v) for k, v in json.load(f).items()})
    return training.load_checkpoint(path)


@main.command("evaluate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--clean", required=True, type=click.Path(exists=True))
@click.option("--corrupted", "corrupted_dir", required=True, type=click.Path(exists=True))
@click.option("--ood", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def evaluate_cmd(model_path, clean, corrupted_dir, ood, out_path):
    """Full robustness report for one model; --model may be a .pt checkpoint
    or a .json stored-prediction stub."""
    model = _load_model(model_path)
    clean_ds = load_manifest(clean)
    ood_ds = load_manifest(ood) if ood else None

    corrupted_sets = []
    for spec in corruptions.all_specs():
        manifest = os.path.join(corrupted_dir, spec.name, str(spec.severity), "manifest.tsv")
        if not os.path.isfile(manifest):
            raise evaluation.EvaluationError(
                f"missing corrupted set ({spec.name}, severity {spec.severity}) under {corrupted_dir}"
            )
        ds = load_manifest(manifest)
        corrupted_sets.append(corruptions.CorruptedSet(spec=spec, samples=ds.samples))

    metadata = {"model": os.path.basename(model_path), "test_hash": dataset_hash(clean_ds)}
    report = evaluation.evaluate(model, clean_ds, corrupted_sets, ood_ds, metadata)
    out_dir = os.path.dirname(os.path.abspath(out_path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(report_to_dict(report), f, indent=2, sort_keys=True)
    config = dict(model=model_path, clean=clean, corrupted=corrupted_dir, ood=ood, out=out_path)
    _emit_descriptor("evaluate", config, {"clean": dataset_hash(clean_ds)}, out_dir)
    click.echo(
        f"clean={report.clean_acc:.4f} mean_corruption={report.mean_corruption_acc:.4f}"
        + (f" ood={report.ood_acc:.4f} combined={report.combined_mean:.4f}" if ood_ds else "")
    )


@main.command("report")
@click.option("--runs", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def report_cmd(runs, out_path):
    """Aggregate per-run report JSONs into a results-table CSV (mean ± std)."""
    reports = []
    for path in runs:
        with open(path, encoding="utf-8") as f:
            reports.append(report_from_dict(json.load(f)))
    if len(reports) >= 2:
        agg = evaluation.aggregate_runs(reports)
        mean, std, n = agg.mean, agg.std, agg.num_runs
    else:
        mean = reports[0].metrics()
        std = {k: 0.0 for k in mean}
        n = 1
    columns = [
        "clean_acc", "category_noise", "category_blur", "category_weather",
        "category_digital", "mean_corruption_acc", "ood_acc", "combined_mean",
    ]
    columns = [c for c in columns if c in mean]
    out_dir = os.path.dirname(os.path.abspath(out_path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "mean", "std", "n_runs"])
        for c in columns:
            writer.writerow([c, f"{mean[c]:.6f}", f"{std[c]:.6f}", n])
    _emit_descriptor("report", dict(runs=list(runs), out=out_path), {}, out_dir)


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--axis", required=True, type=click.Choice(list(sweep.SWEEP_AXES)))
@click.option("--out", "out_dir", default=None, type=click.Path())
@handle_errors
def sweep_cmd(config_path, axis, out_dir):
    """Run a full experiment sweep over one axis."""
    config = sweep.load_experiment_config(config_path)
    summary = sweep.run_sweep(config, axis, out_dir)
    resolved = dict(config=config_path, axis=axis, out=out_dir or config.get("output_dir", "sweep_out"))
    _emit_descriptor("sweep", resolved, {}, resolved["out"])
    click.echo(f"{len(summary['rows'])} axis value(s) completed, {len(summary['failures'])} cell failure(s)")


if __name__ == "__main__":
    main()
