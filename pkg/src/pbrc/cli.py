"""Command-line surface: train, eval, bench, synth.

Training timing covers sequence encoding plus the readout fit only; file
I/O, normalization and the optional lambda sweep are outside the timed
region, and timing is reported on stdout and in the bench CSV rather than
in the metrics report so reruns with one config+seed are bit-identical.

Exit codes: 0 success, 2 usage, 3 data/file errors, 4 numeric errors,
1 unexpected failure.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, fields, replace

import numpy as np

from .dataset import (
    apply_norm,
    fit_norm,
    load_dataset,
    resample_sequence,
    save_dataset,
    synth_generate,
)
from .errors import DataError, EmptyInputError, EncodingError, NumericError, PbrcError
from .model import (
    TOPOLOGIES,
    ModelArtifact,
    ReservoirConfig,
    build_encoder,
    load_model,
    save_model,
)
from .parallel import encode_dataset
from .readout import evaluate, fit_readout

LAMBDA_SWEEP_GRID = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class RunConfig:
    """Resolved training configuration (defaults < config file < CLI flags)."""

    topology: str = "pbrc"
    nodes: int = 70
    alpha: float = 0.6
    rho: float = 0.3
    input_scaling: float = 1.0
    washout: int = 0
    lam: str = "1e-3"
    pooling: str = "mean"
    seed: int = 0
    repeats: int = 1
    workers: int = 1
    resample: int = 0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.resample < 0:
            raise ValueError("resample must be 0 (native length) or a positive frame count")
        if self.lam != "sweep":
            value = float(self.lam)  # raises ValueError if unparsable
            if value < 0:
                raise ValueError("lambda must be nonnegative or 'sweep'")

    def reservoir_config(self, seed=None):
        return ReservoirConfig(
            n_r=self.nodes,
            alpha=self.alpha,
            rho=self.rho,
            input_scaling=self.input_scaling,
            seed=self.seed if seed is None else seed,
            washout=self.washout,
        )


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def parse_config_file(path):
    """Flat ``key = value`` config; '#' comments and blank lines ignored."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "lambda":
                key = "lam"
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value
    return values


def resolve_run_config(args):
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    typed = {}
    for f in fields(RunConfig):
        if f.name not in values:
            continue
        raw = values[f.name]
        if f.name == "lam" or f.type is str:
            typed[f.name] = str(raw)
        elif f.type is int:
            typed[f.name] = int(raw)
        else:
            typed[f.name] = float(raw)
    return RunConfig(**typed)


def format_mmss(ms):
    """Milliseconds to the mm:ss.ff training-time format, e.g. 18670 -> '00:18.67'.

    Rounds to centiseconds before splitting so carries propagate into the
    minutes field (59999.9 ms is '01:00.00', never '00:60.00').
    """
    if ms < 0 or not math.isfinite(ms):
        raise ValueError(f"duration must be a finite nonnegative ms count, got {ms}")
    minutes, cs = divmod(round(ms / 10.0), 6000)
    return f"{minutes:02d}:{cs // 100:02d}.{cs % 100:02d}"


@dataclass
class TrainOutcome:
    artifact: ModelArtifact
    lam: float
    swept: bool
    encode_ms: float
    fit_ms: float
    val_metrics: object  # Metrics or None

    @property
    def train_time_ms(self):
        return self.encode_ms + self.fit_ms


def train_pipeline(ds, cfg, seed=None, ks=(1, 5, 10)):
    """Fit norm -> encode train split -> fit readout; evaluate on val if present."""
    train_seqs = ds.split("train")
    if not train_seqs:
        raise EmptyInputError("train split is empty")
    val_seqs = ds.split("val")
    if cfg.resample > 0:
        train_seqs = [resample_sequence(s, cfg.resample) for s in train_seqs]
        val_seqs = [resample_sequence(s, cfg.resample) for s in val_seqs]

    encoder = build_encoder(
        cfg.topology, cfg.reservoir_config(seed), n_in=ds.manifest.dim, pooling=cfg.pooling
    )
    stats = fit_norm(train_seqs)
    norm_train = [apply_norm(s, stats) for s in train_seqs]
    norm_val = [apply_norm(s, stats) for s in val_seqs]
    labels_train = [s.label for s in norm_train]
    labels_val = [s.label for s in norm_val]

    t0 = time.perf_counter()
    x_train = encode_dataset(encoder, norm_train, cfg.pooling, cfg.workers)
    encode_ms = (time.perf_counter() - t0) * 1000.0

    x_val = None
    if norm_val:
        x_val = encode_dataset(encoder, norm_val, cfg.pooling, cfg.workers)

    swept = cfg.lam == "sweep"
    if swept:
        lam = _sweep_lambda(x_train, labels_train, x_val, labels_val)
    else:
        lam = float(cfg.lam)

    t1 = time.perf_counter()
    readout = fit_readout(x_train, labels_train, lam)
    fit_ms = (time.perf_counter() - t1) * 1000.0

    val_metrics = evaluate(readout, x_val, labels_val, ks) if x_val is not None else None
    if val_metrics is not None:
        val_metrics.train_time_ms = encode_ms + fit_ms
    artifact = ModelArtifact(
        encoder=encoder, norm=stats, readout=readout, resample=cfg.resample
    )
    return TrainOutcome(
        artifact=artifact,
        lam=lam,
        swept=swept,
        encode_ms=encode_ms,
        fit_ms=fit_ms,
        val_metrics=val_metrics,
    )


def _sweep_lambda(x_train, labels_train, x_val, labels_val):
    """Best validation top-1 over the log grid; ties keep the smaller lambda."""
    if x_val is None:
        raise EmptyInputError("lambda sweep requires a nonempty val split")
    best_lam, best_acc = None, -1.0
    for lam in LAMBDA_SWEEP_GRID:
        readout = fit_readout(x_train, labels_train, lam)
        acc = evaluate(readout, x_val, labels_val, ks=(1,)).top_k[1]
        if acc > best_acc:
            best_lam, best_acc = lam, acc
    return best_lam


def cmd_train(args):
    cfg = resolve_run_config(args)
    ds = load_dataset(args.manifest, args.data)
    outcomes = []
    for i in range(cfg.repeats):
        outcomes.append(train_pipeline(ds, cfg, seed=cfg.seed + i))

    base = outcomes[0]
    save_model(base.artifact, args.out)

    report = {
        "topology": cfg.topology,
        "nodes": cfg.nodes,
        "pooling": cfg.pooling,
        "seed": cfg.seed,
        "repeats": cfg.repeats,
        "lambda": [o.lam for o in outcomes],
        "lambda_swept": base.swept,
        "encoded_dim": base.artifact.encoder.feature_dim,
        "n_train": len(ds.split("train")),
        "n_val": len(ds.split("val")),
    }
    top1 = [o.val_metrics.top_k[1] for o in outcomes if o.val_metrics is not None]
    if top1:
        mean = float(np.mean(top1))
        sd = float(np.std(top1, ddof=1)) if len(top1) > 1 else 0.0
        report["val_top1"] = top1
        report["val_top1_mean"] = mean
        report["val_top1_sd"] = sd
        report["val_metrics"] = outcomes[0].val_metrics.to_dict()
        print(f"val top-1: {100 * mean:.2f} ± {100 * sd:.2f} ({cfg.repeats} runs)")

    mean_ms = float(np.mean([o.train_time_ms for o in outcomes]))
    print(f"training time: {mean_ms:.2f} ms ({format_mmss(mean_ms)}) over {cfg.repeats} run(s)")

    report_path = args.report or f"{args.out}.metrics.json"
    _write_json(report, report_path)
    print(f"model: {args.out}")
    print(f"report: {report_path}")
    return 0


def cmd_eval(args):
    artifact = load_model(args.model)
    ds = load_dataset(args.manifest, args.data)
    seqs = ds.split(args.split) if args.split != "all" else ds.sequences
    if not seqs:
        raise EmptyInputError(f"split {args.split!r} is empty")
    ks = _parse_int_list(args.ks)
    if artifact.resample > 0:
        seqs = [resample_sequence(s, artifact.resample) for s in seqs]
    normalized = [apply_norm(s, artifact.norm) for s in seqs]
    x = encode_dataset(artifact.encoder, normalized, artifact.encoder.pooling, args.workers)
    metrics = evaluate(artifact.readout, x, [s.label for s in seqs], ks)
    report = {"topology": artifact.encoder.topology, "split": args.split}
    report.update(metrics.to_dict())
    text = json.dumps(report)
    if args.out:
        _write_json(report, args.out)
    print(text)
    return 0


BENCH_FIELDS = (
    "topology",
    "nodes",
    "workers",
    "repeat",
    "seed",
    "encoded_dim",
    "encode_ms",
    "fit_ms",
    "train_time_ms",
    "train_time",
    "top1",
    "error",
)


def bench_run(ds, grid, workers_list, repeats, base_cfg):
    """One row per (topology, nodes) x workers x repeat; failures stay in-row.

    Seeds are identical across topologies for fairness: repeat i always
    uses ``base_cfg.seed + i``.
    """
    rows = []
    for topology, nodes in grid:
        for workers in workers_list:
            for rep in range(repeats):
                cfg = replace(
                    base_cfg, topology=topology, nodes=nodes, workers=workers, repeats=1
                )
                row = {
                    "topology": topology,
                    "nodes": nodes,
                    "workers": workers,
                    "repeat": rep,
                    "seed": base_cfg.seed + rep,
                    "encoded_dim": "",
                    "encode_ms": "",
                    "fit_ms": "",
                    "train_time_ms": "",
                    "train_time": "",
                    "top1": "",
                    "error": "",
                }
                try:
                    out = train_pipeline(ds, cfg, seed=base_cfg.seed + rep, ks=(1,))
                    row["encoded_dim"] = out.artifact.encoder.feature_dim
                    row["encode_ms"] = f"{out.encode_ms:.2f}"
                    row["fit_ms"] = f"{out.fit_ms:.2f}"
                    row["train_time_ms"] = f"{out.train_time_ms:.2f}"
                    row["train_time"] = format_mmss(out.train_time_ms)
                    if out.val_metrics is not None:
                        row["top1"] = f"{out.val_metrics.top_k[1]:.4f}"
                except PbrcError as exc:
                    row["error"] = str(exc)
                rows.append(row)
    return rows


def _parse_grid(text):
    grid = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        topology, _, nodes = item.partition(":")
        if topology not in TOPOLOGIES or not nodes.isdigit():
            raise ValueError(f"bad grid cell {item!r}, expected e.g. 'pbrc:70'")
        grid.append((topology, int(nodes)))
    if not grid:
        raise ValueError("grid is empty")
    return grid


def _parse_int_list(text):
    try:
        values = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise ValueError(f"expected at least one integer in {text!r}")
    return values


def cmd_bench(args):
    cfg = resolve_run_config(args)
    ds = load_dataset(args.manifest, args.data)
    grid = _parse_grid(args.grid)
    workers_list = _parse_int_list(args.bench_workers)
    rows = bench_run(ds, grid, workers_list, cfg.repeats, cfg)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    print(f"bench: {len(rows)} rows -> {args.out}")
    return 0


def cmd_synth(args):
    ds = synth_generate(
        n_classes=args.classes,
        per_class=args.per_class,
        t_len=args.t_len,
        dim=args.dim,
        noise_sd=args.noise_sd,
        seed=args.seed,
        train_frac=args.train_frac,
        val_frac=args.val_frac,
    )
    out = args.out
    os.makedirs(out, exist_ok=True)
    manifest_path = os.path.join(out, "manifest.json")
    data_path = os.path.join(out, "data.jsonl")
    save_dataset(ds, manifest_path, data_path)
    counts = {name: len(ds.manifest.splits[name]) for name in ("train", "val", "test")}
    print(f"synth: {len(ds.sequences)} sequences {counts} -> {out}")
    return 0


def _write_json(doc, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _add_run_config_flags(p):
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--topology", choices=TOPOLOGIES)
    p.add_argument("--nodes", type=int, help="reservoir nodes per unit (esn 4n, brc 2n, pbrc n for parity)")
    p.add_argument("--alpha", type=float, help="leak rate in (0, 1]")
    p.add_argument("--rho", type=float, help="target spectral radius in (0, 1]")
    p.add_argument("--input-scaling", dest="input_scaling", type=float)
    p.add_argument("--washout", type=int, help="leading states dropped before pooling")
    p.add_argument(
        "--resample",
        type=int,
        help="uniformly resample every sequence to this many frames (default: native length)",
    )
    p.add_argument("--lambda", dest="lam", help="ridge lambda, or 'sweep' for a val-split grid search")
    p.add_argument("--pooling", choices=("mean", "last"))
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int, help="runs with seeds seed..seed+repeats-1")
    p.add_argument("--workers", type=int, help="process workers for encoding")


def build_parser():
    parser = argparse.ArgumentParser(prog="pbrc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write the artifact + metrics report")
    _add_run_config_flags(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model artifact path")
    p.add_argument("--report", help="metrics report path (default: <out>.metrics.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test", "all"))
    p.add_argument("--ks", default="1,5,10", help="comma-separated k values")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here as well as stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="training-time benchmark grid, CSV output")
    _add_run_config_flags(p)
    p.add_argument("--grid", default="esn:280,brc:140,pbrc:70", help="topology:nodes cells")
    p.add_argument(
        "--bench-workers",
        default="1",
        help="comma-separated worker counts crossed with the grid",
    )
    p.add_argument("--manifest", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic dataset (manifest.json + data.jsonl)")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--per-class", dest="per_class", type=int, default=30)
    p.add_argument("--t-len", dest="t_len", type=int, default=64)
    p.add_argument("--dim", type=int, default=24)
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-frac", dest="train_frac", type=float, default=0.7)
    p.add_argument("--val-frac", dest="val_frac", type=float, default=0.15)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, EncodingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
