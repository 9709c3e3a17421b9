import csv
import json
import re

import pytest

from pbrc.cli import (
    BENCH_FIELDS,
    LAMBDA_SWEEP_GRID,
    RunConfig,
    format_mmss,
    main,
    parse_config_file,
)

MMSS = re.compile(r"^\d{2,}:\d{2}\.\d{2}$")


def _synth(tmp_path, name="data", **over):
    args = {
        "classes": 3,
        "per-class": 10,
        "t-len": 8,
        "dim": 4,
        "noise-sd": 0.05,
        "seed": 0,
    }
    args.update(over)
    out = tmp_path / name
    argv = ["synth", "--out", str(out)]
    for key, value in args.items():
        argv += [f"--{key}", str(value)]
    assert main(argv) == 0
    return out / "manifest.json", out / "data.jsonl"


def _train(tmp_path, manifest, data, out_name="model.json", *extra):
    out = tmp_path / out_name
    argv = [
        "train",
        "--manifest",
        str(manifest),
        "--data",
        str(data),
        "--out",
        str(out),
        "--topology",
        "esn",
        "--nodes",
        "8",
        *extra,
    ]
    assert main(argv) == 0
    return out


# ---------------------------------------------------- helpers


def test_format_mmss():
    assert format_mmss(0) == "00:00.00"
    assert format_mmss(18670) == "00:18.67"
    assert format_mmss(61000) == "01:01.00"
    assert format_mmss(59999.9) == "01:00.00"  # carry propagates into minutes
    assert format_mmss(3_600_000) == "60:00.00"
    with pytest.raises(ValueError):
        format_mmss(-1)
    with pytest.raises(ValueError):
        format_mmss(float("nan"))


def test_run_config_validation():
    assert RunConfig().lam == "1e-3"
    with pytest.raises(ValueError, match="topology"):
        RunConfig(topology="ring")
    with pytest.raises(ValueError, match="repeats"):
        RunConfig(repeats=0)
    with pytest.raises(ValueError, match="workers"):
        RunConfig(workers=0)
    with pytest.raises(ValueError, match="resample"):
        RunConfig(resample=-1)
    with pytest.raises(ValueError):
        RunConfig(lam="abc")
    with pytest.raises(ValueError, match="lambda"):
        RunConfig(lam="-0.5")
    RunConfig(lam="sweep")  # accepted


def test_parse_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment line\n"
        "\n"
        "topology = brc   # trailing comment\n"
        "input-scaling = 0.5\n"
        "lambda = sweep\n"
        "nodes=12\n"
    )
    values = parse_config_file(cfg)
    assert values == {
        "topology": "brc",
        "input_scaling": "0.5",
        "lam": "sweep",
        "nodes": "12",
    }


def test_parse_config_file_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("volume = 11\n")
    with pytest.raises(ValueError, match="unknown config key"):
        parse_config_file(cfg)
    cfg.write_text("just words\n")
    with pytest.raises(ValueError, match="key = value"):
        parse_config_file(cfg)


# ---------------------------------------------------- synth + train + eval


def test_synth_writes_dataset(tmp_path, capsys):
    manifest, data = _synth(tmp_path)
    assert manifest.exists() and data.exists()
    doc = json.loads(manifest.read_text())
    assert doc["dim"] == 4
    assert len(doc["classes"]) == 3
    assert "synth: 30 sequences" in capsys.readouterr().out


def test_train_writes_model_and_report(tmp_path, capsys):
    manifest, data = _synth(tmp_path)
    model = _train(tmp_path, manifest, data)
    out = capsys.readouterr().out
    assert model.exists()
    report_path = tmp_path / "model.json.metrics.json"
    assert report_path.exists()
    report = json.loads(report_path.read_text())
    assert report["topology"] == "esn"
    assert report["nodes"] == 8
    assert report["encoded_dim"] == 8
    assert report["n_train"] == 21
    assert report["n_val"] == 3
    assert report["lambda"] == [1e-3]
    assert report["lambda_swept"] is False
    assert len(report["val_top1"]) == 1
    assert "val_metrics" in report
    assert "val top-1:" in out
    assert re.search(r"\(\d{2,}:\d{2}\.\d{2}\)", out)


def test_train_is_deterministic(tmp_path):
    manifest, data = _synth(tmp_path)
    m1 = _train(tmp_path, manifest, data, "m1.json", "--report", str(tmp_path / "r1.json"))
    m2 = _train(tmp_path, manifest, data, "m2.json", "--report", str(tmp_path / "r2.json"))
    assert m1.read_bytes() == m2.read_bytes()
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


def test_train_repeats_report_statistics(tmp_path):
    manifest, data = _synth(tmp_path)
    _train(tmp_path, manifest, data, "m.json", "--repeats", "3", "--report", str(tmp_path / "r.json"))
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["repeats"] == 3
    assert len(report["lambda"]) == 3
    assert len(report["val_top1"]) == 3
    assert 0.0 <= report["val_top1_mean"] <= 1.0
    assert report["val_top1_sd"] >= 0.0


def test_train_lambda_sweep_uses_grid(tmp_path):
    manifest, data = _synth(tmp_path)
    _train(
        tmp_path, manifest, data, "m.json", "--lambda", "sweep", "--report", str(tmp_path / "r.json")
    )
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["lambda_swept"] is True
    assert report["lambda"][0] in LAMBDA_SWEEP_GRID


def test_train_sweep_without_val_split_fails(tmp_path, capsys):
    manifest, data = _synth(tmp_path, name="noval", **{"per-class": 4})  # val split empty
    code = main(
        [
            "train",
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--out",
            str(tmp_path / "m.json"),
            "--lambda",
            "sweep",
        ]
    )
    assert code == 3
    assert "val split" in capsys.readouterr().err


def test_train_config_file_and_flag_precedence(tmp_path):
    manifest, data = _synth(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("topology = esn\nnodes = 5\nseed = 9\n")
    main(
        [
            "train",
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--out",
            str(tmp_path / "m.json"),
            "--config",
            str(cfg),
            "--nodes",
            "7",
            "--report",
            str(tmp_path / "r.json"),
        ]
    )
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["topology"] == "esn"  # from file
    assert report["nodes"] == 7  # flag overrides file
    assert report["seed"] == 9  # from file
    assert report["encoded_dim"] == 7


def test_train_resample_roundtrips_through_eval(tmp_path, capsys):
    manifest, data = _synth(tmp_path)
    model = _train(tmp_path, manifest, data, "m.json", "--resample", "6")
    capsys.readouterr()
    code = main(
        [
            "eval",
            "--model",
            str(model),
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--split",
            "test",
        ]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["n_samples"] == 6


def test_eval_reports_metrics(tmp_path, capsys):
    manifest, data = _synth(tmp_path)
    model = _train(tmp_path, manifest, data)
    capsys.readouterr()
    out_path = tmp_path / "eval.json"
    code = main(
        [
            "eval",
            "--model",
            str(model),
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--split",
            "val",
            "--ks",
            "1,2",
            "--out",
            str(out_path),
        ]
    )
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(out_path.read_text())
    assert printed["topology"] == "esn"
    assert printed["split"] == "val"
    assert set(printed["top_k"]) == {"1", "2"}
    assert printed["top_k"]["1"] <= printed["top_k"]["2"]
    assert printed["n_samples"] == 3


def test_eval_empty_split_is_a_data_error(tmp_path, capsys):
    manifest, data = _synth(tmp_path, name="noval", **{"per-class": 4})
    model = _train(tmp_path, manifest, data)
    capsys.readouterr()
    code = main(
        [
            "eval",
            "--model",
            str(model),
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--split",
            "val",
        ]
    )
    assert code == 3
    assert "empty" in capsys.readouterr().err


# ---------------------------------------------------- exit codes


def test_missing_dataset_exits_3(tmp_path, capsys):
    code = main(
        [
            "train",
            "--manifest",
            str(tmp_path / "nope.json"),
            "--data",
            str(tmp_path / "nope.jsonl"),
            "--out",
            str(tmp_path / "m.json"),
        ]
    )
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_bad_lambda_exits_2(tmp_path, capsys):
    manifest, data = _synth(tmp_path)
    code = main(
        [
            "train",
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--out",
            str(tmp_path / "m.json"),
            "--lambda",
            "abc",
        ]
    )
    assert code == 2


def test_singular_fit_exits_4(tmp_path, capsys):
    manifest, data = _synth(tmp_path, name="tiny", **{"classes": 2, "per-class": 2})
    code = main(
        [
            "train",
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--out",
            str(tmp_path / "m.json"),
            "--topology",
            "esn",
            "--nodes",
            "6",
            "--lambda",
            "0",
        ]
    )
    assert code == 4
    assert "singular" in capsys.readouterr().err


# ---------------------------------------------------- bench


def test_bench_writes_csv_grid(tmp_path):
    manifest, data = _synth(tmp_path)
    out = tmp_path / "bench.csv"
    code = main(
        [
            "bench",
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--out",
            str(out),
            "--grid",
            "esn:6,pbrc:4",
            "--bench-workers",
            "1",
            "--repeats",
            "2",
        ]
    )
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(BENCH_FIELDS)
    assert len(rows) == 4  # 2 grid cells x 1 worker count x 2 repeats
    assert [r["topology"] for r in rows] == ["esn", "esn", "pbrc", "pbrc"]
    assert {r["encoded_dim"] for r in rows} == {"6", "16"}
    assert [r["seed"] for r in rows] == ["0", "1", "0", "1"]
    for r in rows:
        assert MMSS.match(r["train_time"])
        assert r["error"] == ""
        assert 0.0 <= float(r["top1"]) <= 1.0


def test_bench_keeps_failures_in_row(tmp_path):
    manifest, data = _synth(tmp_path, name="tiny", **{"classes": 2, "per-class": 2})
    out = tmp_path / "bench.csv"
    code = main(
        [
            "bench",
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--out",
            str(out),
            "--grid",
            "esn:2,esn:8",
            "--bench-workers",
            "1",
            "--lambda",
            "0",
        ]
    )
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert rows[1]["error"] != ""  # 2 train samples cannot support 8 features at lambda 0
    assert rows[1]["train_time"] == ""


def test_bench_bad_grid_exits_2(tmp_path, capsys):
    manifest, data = _synth(tmp_path)
    code = main(
        [
            "bench",
            "--manifest",
            str(manifest),
            "--data",
            str(data),
            "--out",
            str(tmp_path / "b.csv"),
            "--grid",
            "esn:banana",
        ]
    )
    assert code == 2
    assert "grid" in capsys.readouterr().err
