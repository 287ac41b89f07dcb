"""Subcommand round trips on the bundled fixture and exit-code mapping."""

import json
import shutil
import struct
import subprocess
import sys

import numpy as np
import pytest

from embmix.cli import main
from embmix.io import load_embeddings, write_embeddings_block


@pytest.fixture(scope="module")
def bundle(tmp_path_factory, e2e_dir):
    dest = tmp_path_factory.mktemp("cli") / "bundle"
    shutil.copytree(e2e_dir, dest)
    return dest


def read_lines(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestPipelineCommand:
    def test_runs_and_reports_metrics(self, bundle, capsys):
        assert main(["pipeline", "--config", str(bundle / "config.json")]) == 0
        out = capsys.readouterr().out
        assert "accuracy 1.0000" in out
        assert "artifacts in" in out
        assert (bundle / "out" / "metrics.json").exists()

    def test_missing_config_exits_2(self, bundle, capsys):
        assert main(["pipeline", "--config", str(bundle / "absent.json")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text('{"bogus": 1}')
        assert main(["pipeline", "--config", str(path)]) == 2
        assert "unknown config keys" in capsys.readouterr().err


class TestExpandCommand:
    def setup_files(self, tmp_path):
        vectors = tmp_path / "v.txt"
        vectors.write_text(
            "red 1 0\ncrimson 0.9 0.1\nblue 0 1\nnavy 0.1 0.9\n"
        )
        classes = tmp_path / "c.json"
        classes.write_text('["red", "blue"]')
        return vectors, classes

    def test_writes_expansion_map(self, tmp_path):
        vectors, classes = self.setup_files(tmp_path)
        out = tmp_path / "expanded.json"
        code = main(
            [
                "expand",
                "--word-vectors", str(vectors),
                "--classes", str(classes),
                "--words-per-class", "2",
                "--out", str(out),
            ]
        )
        assert code == 0
        expanded = json.loads(out.read_text())
        assert expanded == {"0": ["red", "crimson"], "1": ["blue", "navy"]}

    def test_prints_to_stdout_without_out(self, tmp_path, capsys):
        vectors, classes = self.setup_files(tmp_path)
        code = main(
            [
                "expand",
                "--word-vectors", str(vectors),
                "--classes", str(classes),
                "--words-per-class", "2",
            ]
        )
        assert code == 0
        assert json.loads(capsys.readouterr().out)["0"] == ["red", "crimson"]

    def test_bad_classes_file_exits_2(self, tmp_path, capsys):
        vectors, _ = self.setup_files(tmp_path)
        classes = tmp_path / "bad.json"
        classes.write_text("[]")
        code = main(
            ["expand", "--word-vectors", str(vectors), "--classes", str(classes)]
        )
        assert code == 2
        assert "non-empty JSON array" in capsys.readouterr().err


class TestAnchorsCommands:
    def test_render_fills_templates(self, tmp_path):
        classes = tmp_path / "c.json"
        classes.write_text('[["alpha"], ["beta"]]')
        templates = tmp_path / "t.json"
        templates.write_text('["About ⟨mask⟩.", "⟨mask⟩ here."]')
        out = tmp_path / "rendered.jsonl"
        code = main(
            [
                "anchors", "render",
                "--classes", str(classes),
                "--templates", str(templates),
                "--out", str(out),
            ]
        )
        assert code == 0
        rows = read_lines(out)
        assert rows[0] == {"class_id": 0, "sentence": "About alpha."}
        assert {r["sentence"] for r in rows if r["class_id"] == 1} == {
            "About beta.",
            "beta here.",
        }

    def test_render_uses_expanded_tokens_when_given(self, tmp_path):
        classes = tmp_path / "c.json"
        classes.write_text('[["alpha"]]')
        templates = tmp_path / "t.json"
        templates.write_text('["About ⟨mask⟩."]')
        expanded = tmp_path / "e.json"
        expanded.write_text('{"0": ["first", "second"]}')
        out = tmp_path / "rendered.jsonl"
        code = main(
            [
                "anchors", "render",
                "--classes", str(classes),
                "--templates", str(templates),
                "--expanded", str(expanded),
                "--out", str(out),
            ]
        )
        assert code == 0
        assert [r["sentence"] for r in read_lines(out)] == [
            "About first.",
            "About second.",
        ]

    def test_match_labels_the_fixture_rows(self, bundle, tmp_path):
        out = tmp_path / "match.jsonl"
        code = main(
            [
                "anchors", "match",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--anchors", str(bundle / "anchor_manifest.json"),
                "--texts", str(bundle / "texts.jsonl"),
                "--out", str(out),
            ]
        )
        assert code == 0
        rows = read_lines(out)
        assert len(rows) == 90
        gold = {r["id"]: r["label"] for r in read_lines(bundle / "texts.jsonl")}
        names = ["alpha", "beta", "gamma"]
        agree = sum(names[r["label"]] == gold[r["id"]] for r in rows)
        assert agree >= 89

    def test_match_without_texts_numbers_the_rows(self, bundle, tmp_path):
        out = tmp_path / "match.jsonl"
        code = main(
            [
                "anchors", "match",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--anchors", str(bundle / "anchor_manifest.json"),
                "--out", str(out),
            ]
        )
        assert code == 0
        assert [r["id"] for r in read_lines(out)][:3] == ["0", "1", "2"]

    def test_match_alignment_error_exits_3(self, bundle, tmp_path, capsys):
        texts = tmp_path / "short.jsonl"
        texts.write_text('{"id": "only"}\n')
        code = main(
            [
                "anchors", "match",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--anchors", str(bundle / "anchor_manifest.json"),
                "--texts", str(texts),
                "--out", str(tmp_path / "m.jsonl"),
            ]
        )
        assert code == 3
        assert "alignment error" in capsys.readouterr().err


class TestPcaCommand:
    def test_fixed_dims_reduction(self, bundle, tmp_path, capsys):
        out = tmp_path / "reduced.sptc"
        code = main(
            [
                "pca",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--out", str(out),
                "--dims", "2",
            ]
        )
        assert code == 0
        assert "kept 2 of 24 dimensions" in capsys.readouterr().out
        assert load_embeddings(out).shape == (90, 2)

    def test_also_projects_extra_matrices(self, bundle, tmp_path):
        out = tmp_path / "reduced.sptc"
        extra_out = tmp_path / "anchors0.sptc"
        code = main(
            [
                "pca",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--out", str(out),
                "--dims", "3",
                "--also", str(bundle / "anchors" / "class0.sptc"), str(extra_out),
            ]
        )
        assert code == 0
        assert load_embeddings(extra_out).shape == (4, 3)


class TestFitPredictEvalChain:
    @pytest.fixture(scope="class")
    def products(self, bundle, tmp_path_factory):
        work = tmp_path_factory.mktemp("chain")
        match = work / "match.jsonl"
        assert main(
            [
                "anchors", "match",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--anchors", str(bundle / "anchor_manifest.json"),
                "--texts", str(bundle / "texts.jsonl"),
                "--out", str(match),
            ]
        ) == 0
        model = work / "model.bmm"
        assert main(
            [
                "fit",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--init", str(match),
                "--max-iter", "20",
                "--out", str(model),
            ]
        ) == 0
        pred = work / "pred.jsonl"
        assert main(
            [
                "predict",
                "--model", str(model),
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--texts", str(bundle / "texts.jsonl"),
                "--out", str(pred),
            ]
        ) == 0
        return {"match": match, "model": model, "pred": pred, "work": work}

    def test_fit_reports_components_and_iterations(self, products, capsys):
        assert products["model"].exists()

    def test_predictions_cover_all_rows(self, products):
        rows = read_lines(products["pred"])
        assert len(rows) == 90
        assert all(0.0 < r["max_responsibility"] <= 1.0 for r in rows)

    def test_eval_on_test_split(self, bundle, products, tmp_path, capsys):
        classes = tmp_path / "c.json"
        classes.write_text('["alpha", "beta", "gamma"]')
        out = tmp_path / "metrics.json"
        code = main(
            [
                "eval",
                "--pred", str(products["pred"]),
                "--texts", str(bundle / "texts.jsonl"),
                "--classes", str(classes),
                "--split", "test",
                "--out", str(out),
            ]
        )
        assert code == 0
        metrics = json.loads(out.read_text())
        assert metrics["accuracy"] == 1.0
        assert np.array(metrics["confusion"]).sum() == 30

    def test_eval_all_split_scores_every_row(self, bundle, products, tmp_path):
        classes = tmp_path / "c.json"
        classes.write_text('["alpha", "beta", "gamma"]')
        out = tmp_path / "metrics.json"
        code = main(
            [
                "eval",
                "--pred", str(products["pred"]),
                "--texts", str(bundle / "texts.jsonl"),
                "--classes", str(classes),
                "--split", "all",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert np.array(json.loads(out.read_text())["confusion"]).sum() == 90

    def test_eval_unknown_id_exits_3(self, bundle, products, tmp_path, capsys):
        classes = tmp_path / "c.json"
        classes.write_text('["alpha", "beta", "gamma"]')
        pred = tmp_path / "pred.jsonl"
        pred.write_text('{"id": "ghost", "label": 0}\n')
        code = main(
            [
                "eval",
                "--pred", str(pred),
                "--texts", str(bundle / "texts.jsonl"),
                "--classes", str(classes),
            ]
        )
        assert code == 3
        assert "no gold label for id 'ghost'" in capsys.readouterr().err

    def test_predict_with_corrupt_model_exits_4(self, bundle, tmp_path, capsys):
        header = {
            "format": 1,
            "n_components": 2,
            "n_features": 24,
            "cov_mode": "full",
            "alpha": [1.0, 1.0],
            "beta": [1.0, 1.0],
            "nu": [24.0, 24.0],
            "n_scale_matrices": 2,
        }
        blob = json.dumps(header, sort_keys=True).encode()
        model = tmp_path / "bad.bmm"
        with open(model, "wb") as fh:
            fh.write(b"BMM1")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            write_embeddings_block(fh, np.zeros((2, 24)))
            write_embeddings_block(fh, np.eye(24))
            write_embeddings_block(fh, np.zeros((24, 24)))
        code = main(
            [
                "predict",
                "--model", str(model),
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--out", str(tmp_path / "p.jsonl"),
            ]
        )
        assert code == 4
        assert "not positive definite" in capsys.readouterr().err


class TestAblateCommand:
    def test_prints_table_and_writes_json(self, bundle, tmp_path, capsys):
        classes = tmp_path / "c.json"
        classes.write_text('["alpha", "beta", "gamma"]')
        out = tmp_path / "table.json"
        code = main(
            [
                "ablate",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--texts", str(bundle / "texts.jsonl"),
                "--classes", str(classes),
                "--anchors", str(bundle / "anchor_manifest.json"),
                "--algorithms", "kmeans,bgmm",
                "--max-iter", "20",
                "--out", str(out),
            ]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "algorithm" in text and "macro_f1" in text
        assert "kmeans" in text and "bgmm" in text
        table = json.loads(out.read_text())
        assert set(table) == {"kmeans", "bgmm"}
        assert table["bgmm"]["accuracy"] >= 0.99

    def test_unknown_algorithm_exits_2(self, bundle, tmp_path, capsys):
        classes = tmp_path / "c.json"
        classes.write_text('["alpha", "beta", "gamma"]')
        code = main(
            [
                "ablate",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--texts", str(bundle / "texts.jsonl"),
                "--classes", str(classes),
                "--anchors", str(bundle / "anchor_manifest.json"),
                "--algorithms", "spectral",
            ]
        )
        assert code == 2
        assert "unknown algorithms" in capsys.readouterr().err


class TestUnbalanceCommand:
    def test_explicit_ratio_sweep(self, bundle, tmp_path, capsys):
        classes = tmp_path / "c.json"
        classes.write_text('["alpha", "beta", "gamma"]')
        out_dir = tmp_path / "sweep"
        code = main(
            [
                "unbalance",
                "--texts", str(bundle / "texts.jsonl"),
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--classes", str(classes),
                "--target-class", "0",
                "--ratio", "0.5",
                "--ratio", "0.2",
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        half = read_lines(out_dir / "ratio_0.5" / "texts.jsonl")
        fifth = read_lines(out_dir / "ratio_0.2" / "texts.jsonl")
        assert sum(r["label"] == "alpha" for r in half) == 15
        assert sum(r["label"] == "alpha" for r in fifth) == 6
        assert load_embeddings(out_dir / "ratio_0.5" / "embeddings.sptc").shape == (75, 24)
        assert "kept 75 of 90 rows" in capsys.readouterr().out

    def test_ratio_that_empties_the_class_exits_3(self, bundle, tmp_path, capsys):
        classes = tmp_path / "c.json"
        classes.write_text('["alpha", "beta", "gamma"]')
        code = main(
            [
                "unbalance",
                "--texts", str(bundle / "texts.jsonl"),
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--classes", str(classes),
                "--target-class", "0",
                "--ratio", "0.01",
                "--out-dir", str(tmp_path / "sweep"),
            ]
        )
        assert code == 3
        assert "empties class 0" in capsys.readouterr().err


class TestProjectCommand:
    def test_two_d_export(self, bundle, tmp_path):
        out = tmp_path / "points.jsonl"
        code = main(
            [
                "project",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--texts", str(bundle / "texts.jsonl"),
                "--dims", "2",
                "--out", str(out),
            ]
        )
        assert code == 0
        rows = read_lines(out)
        assert len(rows) == 90
        assert all(len(r["coords"]) == 2 for r in rows)

    def test_invalid_dims_is_an_argparse_error(self, bundle, tmp_path, capsys):
        with pytest.raises(SystemExit) as err:
            main(
                [
                    "project",
                    "--embeddings", str(bundle / "embeddings.sptc"),
                    "--texts", str(bundle / "texts.jsonl"),
                    "--dims", "4",
                    "--out", str(tmp_path / "p.jsonl"),
                ]
            )
        assert err.value.code == 2

    def test_pred_length_mismatch_exits_3(self, bundle, tmp_path, capsys):
        pred = tmp_path / "pred.jsonl"
        pred.write_text('{"label": 0}\n')
        code = main(
            [
                "project",
                "--embeddings", str(bundle / "embeddings.sptc"),
                "--texts", str(bundle / "texts.jsonl"),
                "--dims", "2",
                "--pred", str(pred),
                "--out", str(tmp_path / "p.jsonl"),
            ]
        )
        assert code == 3
        assert "has 1 rows, dataset has 90" in capsys.readouterr().err


class TestEntryPoint:
    def test_console_script_help(self):
        out = subprocess.run(
            [sys.executable, "-m", "embmix.cli", "--help"],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0
        for name in ("expand", "anchors", "pca", "fit", "predict", "eval",
                     "ablate", "unbalance", "pipeline", "project"):
            assert name in out.stdout

    def test_missing_subcommand_exits_2(self):
        out = subprocess.run(
            [sys.executable, "-m", "embmix.cli"], capture_output=True, text=True
        )
        assert out.returncode == 2
