import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from stylebench.cli import main
from stylebench.corruptions import CORRUPTION_NAMES, all_specs
from stylebench.datamodel import dataset_hash, load_manifest, save_manifest
from stylebench.evaluation import SEVERITIES
from stylebench.synthetic import make_synthetic_dataset


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args):
    return runner.invoke(main, args, catch_exceptions=False)


def write_dataset(path, n=4, seed=5, resolution=8, num_classes=2, **kwargs):
    ds = make_synthetic_dataset(n, seed, resolution=resolution, num_classes=num_classes, **kwargs)
    save_manifest(ds, str(path))
    return ds


class TestHelpAndErrors:
    def test_top_level_help(self, runner):
        result = invoke(runner, ["--help"])
        assert result.exit_code == 0
        for name in (
            "prepare-data", "corrupt", "stylize", "lowpass", "analyze-spectrum",
            "analyze-gram", "train", "evaluate", "report", "sweep",
        ):
            assert name in result.output

    def test_subcommand_help_exits_zero(self, runner):
        for name in ("corrupt", "train", "evaluate", "sweep"):
            assert invoke(runner, [name, "--help"]).exit_code == 0

    def test_unknown_flag_exits_two(self, runner):
        result = runner.invoke(main, ["corrupt", "--bogus-flag"])
        assert result.exit_code == 2

    def test_domain_error_line_format(self, runner, tmp_path):
        manifest = tmp_path / "test.tsv"
        write_dataset(manifest)
        result = runner.invoke(
            main,
            [
                "corrupt", "--manifest", str(manifest),
                "--out", str(tmp_path / "c"), "--spec", "vignette:3",
            ],
        )
        assert result.exit_code == 1
        err_lines = [l for l in result.output.splitlines() if l.startswith("error code=")]
        assert len(err_lines) == 1
        assert err_lines[0].startswith("error code=CorruptionError:")

    def test_missing_manifest_reports_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["lowpass", "--manifest", str(tmp_path / "nope.tsv"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 2  # click's Path(exists=True) rejects it


class TestPrepareData:
    def test_writes_four_manifests_and_descriptor(self, runner, tmp_path):
        out = tmp_path / "data"
        result = invoke(
            runner,
            [
                "prepare-data", "--out", str(out), "--train-size", "6",
                "--painting-size", "6", "--test-size", "4", "--ood-size", "4",
                "--resolution", "8", "--num-classes", "2", "--seed", "3",
            ],
        )
        assert result.exit_code == 0
        for name in ("photos", "paintings", "test", "ood"):
            assert (out / f"{name}.tsv").is_file()
        descriptor = json.loads((out / "run_descriptor.json").read_text())
        assert descriptor["command"] == "prepare-data"
        assert set(descriptor["input_hashes"]) == {"photos", "paintings", "test", "ood"}

    def test_deterministic_across_invocations(self, runner, tmp_path):
        args = lambda d: [
            "prepare-data", "--out", str(d), "--train-size", "4",
            "--painting-size", "4", "--test-size", "3", "--ood-size", "3",
            "--resolution", "8", "--num-classes", "2", "--seed", "9",
        ]
        invoke(runner, args(tmp_path / "a"))
        invoke(runner, args(tmp_path / "b"))
        a = json.loads((tmp_path / "a" / "run_descriptor.json").read_text())
        b = json.loads((tmp_path / "b" / "run_descriptor.json").read_text())
        assert a["input_hashes"] == b["input_hashes"]


class TestCorrupt:
    def test_single_spec_layout(self, runner, tmp_path):
        manifest = tmp_path / "test.tsv"
        ds = write_dataset(manifest)
        out = tmp_path / "corr"
        result = invoke(
            runner,
            ["corrupt", "--manifest", str(manifest), "--out", str(out), "--spec", "fog:2"],
        )
        assert result.exit_code == 0
        set_manifest = out / "fog" / "2" / "manifest.tsv"
        assert set_manifest.is_file()
        loaded = load_manifest(str(set_manifest))
        assert [s.id for s in loaded.samples] == [s.id for s in ds.samples]
        # every image file lands under the per-set directory
        pngs = list((out / "fog" / "2").rglob("*.png"))
        assert len(pngs) == len(ds)

    def test_deterministic_under_seed(self, runner, tmp_path):
        manifest = tmp_path / "test.tsv"
        write_dataset(manifest)
        for d in ("a", "b"):
            invoke(
                runner,
                [
                    "corrupt", "--manifest", str(manifest), "--out", str(tmp_path / d),
                    "--seed", "4", "--spec", "gaussian_noise:3",
                ],
            )
        ha = dataset_hash(load_manifest(str(tmp_path / "a/gaussian_noise/3/manifest.tsv")))
        hb = dataset_hash(load_manifest(str(tmp_path / "b/gaussian_noise/3/manifest.tsv")))
        assert ha == hb


class TestStylize:
    def test_outputs_and_pairing(self, runner, tmp_path):
        content = tmp_path / "content.tsv"
        ds = write_dataset(content, n=6, seed=1)
        out = tmp_path / "sty"
        result = invoke(
            runner,
            [
                "stylize", "--content", str(content), "--pool", str(content),
                "--policy", "intradomain", "--seed", "2", "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        stylized = load_manifest(str(out / "stylized.tsv"), domain="stylized")
        assert len(stylized) == len(ds)
        pairing = (out / "pairing.tsv").read_text().strip().splitlines()
        assert len(pairing) == len(ds)
        for line in pairing:
            cid, sid, _ = line.split("\t")
            assert cid != sid

    def test_policy_choice_enforced(self, runner, tmp_path):
        content = tmp_path / "content.tsv"
        write_dataset(content)
        result = runner.invoke(
            main,
            [
                "stylize", "--content", str(content), "--pool", str(content),
                "--policy", "fresco", "--out", str(tmp_path / "o"),
            ],
        )
        assert result.exit_code == 2


class TestLowpassAndSpectrum:
    def test_lowpass_then_spectrum(self, runner, tmp_path):
        manifest = tmp_path / "test.tsv"
        write_dataset(manifest, resolution=16)
        out = tmp_path / "lp"
        result = invoke(
            runner, ["lowpass", "--manifest", str(manifest), "--tau", "28.0", "--out", str(out)]
        )
        assert result.exit_code == 0
        csv_path = tmp_path / "spectrum.csv"
        result = invoke(
            runner,
            ["analyze-spectrum", "--manifest", str(out / "filtered.tsv"), "--out", str(csv_path)],
        )
        assert result.exit_code == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "r,mean_power"
        # 16x16 images: radial bins 0..ceil(max radius)
        assert len(lines) > 8

    def test_invalid_tau_reports_error(self, runner, tmp_path):
        manifest = tmp_path / "test.tsv"
        write_dataset(manifest)
        result = runner.invoke(
            main, ["lowpass", "--manifest", str(manifest), "--tau", "0", "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 1
        assert "error code=FrequencyError:" in result.output


class TestAnalyzeGram:
    def test_identical_pair_zero(self, runner, tmp_path):
        from stylebench.datamodel import save_png

        img = np.random.default_rng(0).uniform(size=(8, 8, 3))
        save_png(img, str(tmp_path / "a.png"))
        (tmp_path / "pairs.tsv").write_text("a.png\ta.png\n")
        out = tmp_path / "gram.json"
        result = invoke(
            runner,
            ["analyze-gram", "--pairs", str(tmp_path / "pairs.tsv"), "--out", str(out)],
        )
        assert result.exit_code == 0
        doc = json.loads(out.read_text())
        assert doc["mean"] == 0.0 and doc["std"] == 0.0 and doc["num_pairs"] == 1


class TestTrainEvaluateReport:
    def _train(self, runner, tmp_path, seed=0):
        photos = tmp_path / "photos.tsv"
        write_dataset(photos, n=8, seed=11, resolution=8)
        out = tmp_path / f"run{seed}"
        cfg = tmp_path / "tcfg.json"
        cfg.write_text(json.dumps({"epochs": 1, "batch_size": 4, "augment": False}))
        result = invoke(
            runner,
            [
                "train", "--scheme", "joint", "--photos", str(photos),
                "--config", str(cfg), "--seed", str(seed), "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        return out

    def test_train_outputs(self, runner, tmp_path):
        out = self._train(runner, tmp_path)
        assert (out / "model.pt").is_file()
        log_lines = (out / "train_log.jsonl").read_text().strip().splitlines()
        assert len(log_lines) == 1
        record = json.loads(log_lines[0])
        assert {"epoch", "lr", "loss"} <= set(record)
        descriptor = json.loads((out / "run_descriptor.json").read_text())
        assert "model" in descriptor["input_hashes"]

    def test_evaluate_stub_and_report(self, runner, tmp_path):
        test_manifest = tmp_path / "test.tsv"
        test_ds = write_dataset(test_manifest, n=3, seed=13, resolution=8)
        corr_dir = tmp_path / "corr"
        invoke(runner, ["corrupt", "--manifest", str(test_manifest), "--out", str(corr_dir)])
        assert all(
            (corr_dir / name / str(s) / "manifest.tsv").is_file()
            for name in CORRUPTION_NAMES
            for s in SEVERITIES
        )

        # stub predicting every label correctly => all accuracies exactly 1
        stub = tmp_path / "stub.json"
        stub.write_text(json.dumps({s.id: s.label for s in test_ds.samples}))
        report_path = tmp_path / "report.json"
        result = invoke(
            runner,
            [
                "evaluate", "--model", str(stub), "--clean", str(test_manifest),
                "--corrupted", str(corr_dir), "--out", str(report_path),
            ],
        )
        assert result.exit_code == 0
        doc = json.loads(report_path.read_text())
        assert doc["clean_acc"] == 1.0
        assert doc["mean_corruption_acc"] == 1.0
        assert len(doc["per_corruption"]) == len(all_specs())

        csv_path = tmp_path / "table.csv"
        result = invoke(
            runner, ["report", "--runs", str(report_path), "--out", str(csv_path)]
        )
        assert result.exit_code == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "metric,mean,std,n_runs"
        rows = {l.split(",")[0]: l.split(",")[1:] for l in lines[1:]}
        assert rows["mean_corruption_acc"] == ["1.000000", "0.000000", "1"]

    def test_evaluate_trained_checkpoint(self, runner, tmp_path):
        run = self._train(runner, tmp_path)
        test_manifest = tmp_path / "test.tsv"
        write_dataset(test_manifest, n=3, seed=14, resolution=8)
        corr_dir = tmp_path / "corr2"
        invoke(runner, ["corrupt", "--manifest", str(test_manifest), "--out", str(corr_dir)])
        report_path = tmp_path / "report2.json"
        result = invoke(
            runner,
            [
                "evaluate", "--model", str(run / "model.pt"), "--clean", str(test_manifest),
                "--corrupted", str(corr_dir), "--out", str(report_path),
            ],
        )
        assert result.exit_code == 0
        doc = json.loads(report_path.read_text())
        assert 0.0 <= doc["mean_corruption_acc"] <= 1.0


class TestSweep:
    def test_style_policy_axis_end_to_end(self, runner, tmp_path):
        cfg = tmp_path / "exp.json"
        cfg.write_text(
            json.dumps(
                {
                    "data": {
                        "kind": "synthetic",
                        "train_size": 8,
                        "painting_size": 8,
                        "test_size": 4,
                        "ood_size": 4,
                        "resolution": 8,
                        "num_classes": 2,
                    },
                    "training": {"epochs": 1, "batch_size": 4, "augment": False},
                    "seed_list": [0],
                    "axis_values": ["none", "intradomain"],
                    "output_dir": str(tmp_path / "sweep_out"),
                }
            )
        )
        result = invoke(runner, ["sweep", "--config", str(cfg), "--axis", "style_policy"])
        assert result.exit_code == 0
        out = tmp_path / "sweep_out"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["failures"] == []
        assert {row["value"] for row in summary["rows"]} == {"none", "intradomain"}
        assert (out / "summary.csv").is_file()
