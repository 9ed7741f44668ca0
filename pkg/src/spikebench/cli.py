"""Command-line entry point: ``spikebench <command> ...``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import learning as L
from .bench import ConfigError, emit_report, load_config, render_report, report_from_journal, run_experiment
from .complexity import complexity
from .network import load_network, save_network
from .neuron import LifParams
from .pipeline import Calibration, TrainConfig, predict, train
from .sources import DEFAULT_PAIRS, make_dataset


def read_bits(path) -> np.ndarray:
    """0/1 characters from a text file; whitespace is ignored."""
    text = Path(path).read_text()
    chars = "".join(text.split())
    if not chars:
        raise ValueError(f"{path}: no bits found")
    bad = set(chars) - {"0", "1"}
    if bad:
        raise ValueError(f"{path}: unexpected characters {sorted(bad)}")
    return np.frombuffer(chars.encode("ascii"), dtype=np.uint8) - ord("0")


def _cmd_bench_run(args) -> int:
    cfg = load_config(args.config)
    if args.fast:
        cfg = dataclasses.replace(cfg, fast=True)
    journal = args.resume or cfg.output

    def progress(rec):
        c = rec["cell"]
        status = f"acc {rec['accuracy']:.2f}% {rec['time_s']:.2f}s" if rec["status"] == "ok" else rec["error"]
        print(f"{c['rule']:<12} {c['source']:<10} n={c['n']:<5} seed={rec['seed']}: {status}", file=sys.stderr)

    report = run_experiment(cfg, journal, resume=args.resume is not None, progress=progress)
    sys.stdout.write(render_report(report, "markdown"))
    if report.failures:
        print(f"{len(report.failures)} cell(s) failed; see {journal}", file=sys.stderr)
    return 0


def _cmd_bench_report(args) -> int:
    report = report_from_journal(args.input)
    emit_report(report, args.format, args.out, all_rows=args.all)
    return 0


def _cmd_complexity(args) -> int:
    res = complexity(read_bits(args.bits))
    print(json.dumps({"n": res.n, "c_raw": res.c_raw, "c_norm": res.c_norm}))
    return 0


def _cmd_train(args) -> int:
    if args.source not in DEFAULT_PAIRS:
        raise ValueError(f"unknown source {args.source!r}; choose from {sorted(DEFAULT_PAIRS)}")
    rule = L.make_rule(args.rule)
    if args.lr is not None:
        rule = L.with_rate(rule, args.lr)
    cfg = TrainConfig(
        epochs=args.epochs,
        n=args.n,
        rule=rule,
        lif=LifParams(threshold=args.threshold, decay=args.decay),
        seed=args.seed,
    )
    c0, c1 = DEFAULT_PAIRS[args.source]
    dataset = make_dataset(c0, c1, args.per_class, args.length, args.seed)
    result = train(dataset, cfg)
    save_network(args.save, result.network, result.calibration.threshold, result.calibration.swapped)
    print(
        json.dumps(
            {
                "train_accuracy": result.train_accuracy,
                "lzc_threshold": result.calibration.threshold,
                "swapped": result.calibration.swapped,
                "updates": result.updates,
                "model": str(args.save),
            }
        )
    )
    return 0


def _cmd_predict(args) -> int:
    net, meta = load_network(args.model)
    if math.isnan(meta["lzc_threshold"]):
        raise ValueError(f"{args.model}: checkpoint carries no calibrated threshold")
    calib = Calibration(meta["lzc_threshold"], meta["swapped"])
    print(predict(net, calib, read_bits(args.bits)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikebench", description="Spiking-network learning-rule benchmark with LZC readout.")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run sweeps and build reports")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    run = bench_sub.add_parser("run", help="run the grid described by a config file")
    run.add_argument("--config", required=True, help="TOML experiment file")
    run.add_argument("--fast", action="store_true", help="single seed per cell")
    run.add_argument("--resume", metavar="JOURNAL", help="continue an interrupted sweep from its journal")
    run.set_defaults(func=_cmd_bench_run)
    rep = bench_sub.add_parser("report", help="render a journal as a table")
    rep.add_argument("--in", dest="input", required=True, help="journal written by 'bench run'")
    rep.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    rep.add_argument("--out", required=True)
    rep.add_argument("--all", action="store_true", help="every grid cell instead of the best row per rule and source")
    rep.set_defaults(func=_cmd_bench_report)

    cx = sub.add_parser("complexity", help="LZ76 complexity of a bit file")
    cx.add_argument("--bits", required=True)
    cx.set_defaults(func=_cmd_complexity)

    tr = sub.add_parser("train", help="train one network and save it with its LZC threshold")
    tr.add_argument("--rule", required=True, choices=sorted(L.RULES))
    tr.add_argument("--source", required=True, choices=sorted(DEFAULT_PAIRS))
    tr.add_argument("--n", type=int, default=32)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--save", required=True)
    tr.add_argument("--epochs", type=int, default=10)
    tr.add_argument("--threshold", type=float, default=0.2)
    tr.add_argument("--decay", type=float, default=0.05)
    tr.add_argument("--lr", type=float, default=None, help="override the rule's learning rate")
    tr.add_argument("--per-class", type=int, default=100)
    tr.add_argument("--length", type=int, default=1024)
    tr.set_defaults(func=_cmd_train)

    pr = sub.add_parser("predict", help="classify a bit file with a saved network")
    pr.add_argument("--model", required=True)
    pr.add_argument("--bits", required=True)
    pr.set_defaults(func=_cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"spikebench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
