"""Experiment runner: grid sweeps, a resumable journal, and table-shaped reports."""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import platform
import statistics
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from . import __version__
from . import learning as L
from .network import WIDTHS
from .neuron import LifParams
from .pipeline import TrainConfig, run_trial
from .sources import DEFAULT_PAIRS, SourceSpec, make_dataset, make_rng, spec_from_dict

CONFIG_VERSION = 1
JOURNAL_VERSION = 1
REPORT_VERSION = 1

# parameter grids swept for the published tables
PAPER_THRESHOLDS = (1.00, 0.50, 0.40, 0.30, 0.20, 0.10, 0.05)
PAPER_DECAYS = (0.100, 0.05, 0.03, 0.01)
PAPER_RATES = (0.0500, 0.0100, 0.0010, 0.0098, 0.0001)
PAPER_WIDTHS = WIDTHS

# table layout: group order, rule order within a group, dataset order
TYPE_ORDER = ("unsupervised", "supervised", "hybrid")
RULE_ORDER = (
    "hebbian", "stdp", "sdsp",
    "bp", "stbp", "tempotron", "spikeprop", "chronotron", "resume",
    "ann_snn", "reward_stdp", "bal",
)
DATASET_ORDER = ("bernoulli", "markov", "poisson")

COLUMNS = ("type", "subtype", "dataset", "bio_inspired", "epochs", "n", "time_s", "accuracy_pct", "mse", "mae", "r2")

SCHEMA_PATH = Path(__file__).with_name("schemas") / "report.schema.json"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    """One point of the sweep grid. ``learning_rate`` None keeps the rule's default."""

    rule: str
    source: str
    n: int
    threshold: float
    decay: float
    learning_rate: float | None

    def key(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class ExperimentConfig:
    rules: tuple[str, ...] = RULE_ORDER
    sources: tuple[str, ...] = ("bernoulli", "markov", "poisson")
    n: tuple[int, ...] = PAPER_WIDTHS
    threshold: tuple[float, ...] = PAPER_THRESHOLDS
    decay: tuple[float, ...] = PAPER_DECAYS
    learning_rate: tuple[float, ...] = PAPER_RATES  # empty -> rule defaults
    epochs: int = 10
    seeds: tuple[int, ...] = (0, 1, 2)
    fast: bool = False
    repeat: int = 1
    output: str = "journal.jsonl"
    train_per_class: int = 100
    test_per_class: int = 100
    length: int = 1024
    custom_sources: dict = field(default_factory=dict)  # name -> (class0 dict, class1 dict)

    def __post_init__(self):
        for name in self.rules:
            if name not in L.RULES:
                raise ConfigError(f"unknown rule {name!r}")
        for name in self.sources:
            if name not in DEFAULT_PAIRS and name not in self.custom_sources:
                raise ConfigError(f"unknown source {name!r}")
        for w in self.n:
            if w not in WIDTHS:
                raise ConfigError(f"n={w} not in {WIDTHS}")
        for th in self.threshold:
            if not (math.isfinite(th) and th > 0):
                raise ConfigError(f"threshold must be > 0, got {th}")
        for d in self.decay:
            if not 0 < d <= 1:
                raise ConfigError(f"decay must lie in (0, 1], got {d}")
        for lr in self.learning_rate:
            if not (math.isfinite(lr) and lr > 0):
                raise ConfigError(f"learning rate must be > 0, got {lr}")
        if self.epochs < 1 or self.repeat < 1:
            raise ConfigError("epochs and repeat must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.fast and len(self.seeds) < 3:
            raise ConfigError("paper-repro mode needs >= 3 seeds; use fast mode for a single seed")
        if min(self.train_per_class, self.test_per_class) < 1 or self.length < 2:
            raise ConfigError("dataset sizes must be positive and length >= 2")

    @property
    def run_seeds(self) -> tuple[int, ...]:
        return self.seeds[:1] if self.fast else self.seeds

    def source_pair(self, name: str) -> tuple[SourceSpec, SourceSpec]:
        if name in self.custom_sources:
            c0, c1 = self.custom_sources[name]
            return spec_from_dict(c0), spec_from_dict(c1)
        return DEFAULT_PAIRS[name]

    def cells(self) -> list[Cell]:
        rates = self.learning_rate or (None,)
        return [
            Cell(r, s, n, th, d, lr)
            for r, s, n, th, d, lr in itertools.product(self.rules, self.sources, self.n, self.threshold, self.decay, rates)
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["custom_sources"] = {k: [dict(a), dict(b)] for k, (a, b) in self.custom_sources.items()}
        return d

    def fingerprint(self) -> str:
        # output path and worker-facing flags do not change results
        d = self.to_dict()
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


_LIST_KEYS = ("rules", "sources", "n", "threshold", "decay", "learning_rate")
_EXPERIMENT_KEYS = ("epochs", "seeds", "repeat", "output", "train_per_class", "test_per_class", "length")


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse a TOML experiment file. It must start with ``[spikebench] config_version = 1``."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    header = doc.get("spikebench", {})
    if header.get("config_version") != CONFIG_VERSION:
        raise ConfigError(f"missing or unsupported [spikebench] config_version (need {CONFIG_VERSION})")
    unknown = set(doc) - {"spikebench", "experiment", "grid", "sources"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    kw: dict = {}
    grid = doc.get("grid", {})
    for key, value in grid.items():
        if key not in _LIST_KEYS:
            raise ConfigError(f"unknown grid key {key!r}")
        if not isinstance(value, list):
            raise ConfigError(f"grid.{key} must be a list")
        kw[key] = tuple(value)
    exp = doc.get("experiment", {})
    for key, value in exp.items():
        if key == "mode":
            if value not in ("fast", "paper"):
                raise ConfigError("experiment.mode must be 'fast' or 'paper'")
            kw["fast"] = value == "fast"
        elif key in _EXPERIMENT_KEYS:
            kw[key] = tuple(value) if key == "seeds" else value
        else:
            raise ConfigError(f"unknown experiment key {key!r}")
    if "output" in kw and base_dir is not None and not os.path.isabs(kw["output"]):
        kw["output"] = str(base_dir / kw["output"])
    custom = {}
    for name, pair in doc.get("sources", {}).items():
        try:
            c0, c1 = pair["class0"], pair["class1"]
            spec_from_dict(c0), spec_from_dict(c1)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"source {name!r}: {exc}") from None
        custom[name] = (c0, c1)
    kw["custom_sources"] = custom
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


# -- running -----------------------------------------------------------------

def _trial_seeds(seed: int) -> tuple[int, int]:
    train_seed = int(make_rng(seed, 1).integers(0, 2**63))
    test_seed = int(make_rng(seed, 2).integers(0, 2**63))
    return train_seed, test_seed


def run_cell(cfg: ExperimentConfig, cell: Cell, seed: int) -> dict:
    """Train and evaluate one (cell, seed); never raises, failures become records."""
    record = {"cell": asdict(cell), "seed": seed}
    try:
        c0, c1 = cfg.source_pair(cell.source)
        train_seed, test_seed = _trial_seeds(seed)
        train_set = make_dataset(c0, c1, cfg.train_per_class, cfg.length, train_seed)
        test_set = make_dataset(c0, c1, cfg.test_per_class, cfg.length, test_seed)
        rule = L.make_rule(cell.rule)
        if cell.learning_rate is not None:
            rule = L.with_rate(rule, cell.learning_rate)
        tcfg = TrainConfig(
            epochs=cfg.epochs,
            n=cell.n,
            rule=rule,
            lif=LifParams(threshold=cell.threshold, decay=cell.decay),
            seed=seed,
        )
        times, metrics = [], None
        for _ in range(cfg.repeat):
            rep = run_trial(train_set, test_set, tcfg, cell.source)
            m = (rep.accuracy, rep.mse, rep.mae, rep.r2, rep.train_accuracy)
            if metrics is not None and not _same_metrics(m, metrics):
                raise RuntimeError("repeated trial gave different metrics")
            metrics = m
            times.append(rep.wall_time)
        acc, mse, mae, r2, train_acc = metrics
        record.update(
            status="ok",
            accuracy=acc,
            mse=mse,
            mae=mae,
            r2=None if math.isnan(r2) else r2,
            train_accuracy=train_acc,
            time_s=statistics.median(times),
        )
    except Exception as exc:  # a failing cell must not abort the sweep
        record.update(status="error", error=f"{type(exc).__name__}: {exc}", traceback=traceback.format_exc(limit=3))
    return record


def _same_metrics(a, b) -> bool:
    return all((x == y) or (math.isnan(x) and math.isnan(y)) for x, y in zip(a, b))


def _worker_count() -> int:
    raw = os.environ.get("SPIKEBENCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SPIKEBENCH_THREADS must be an integer, got {raw!r}") from None


def _run_cell_args(args):
    return run_cell(*args)


def read_journal(path) -> tuple[dict, list[dict]]:
    """Header and trial records of a journal; a torn last line is ignored."""
    header, records = None, []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                break  # interrupted mid-write
            if header is None:
                if obj.get("journal_version") != JOURNAL_VERSION:
                    raise ConfigError(f"{path}: not a spikebench journal")
                header = obj
            else:
                records.append(obj)
    if header is None:
        raise ConfigError(f"{path}: empty journal")
    return header, records


def _record_key(rec: dict) -> tuple[str, int]:
    return json.dumps(rec["cell"], sort_keys=True), rec["seed"]


def run_experiment(cfg: ExperimentConfig, journal=None, resume: bool = False, progress=None) -> "BenchmarkReport":
    """Sweep every (cell, seed); checkpoint each finished trial to a JSONL journal.

    With ``resume`` the journal is read first and completed trials are skipped,
    so an interrupted sweep picks up where it stopped.
    """
    path = Path(journal or cfg.output)
    header = {"journal_version": JOURNAL_VERSION, "fingerprint": cfg.fingerprint(), "config": cfg.to_dict()}
    done: dict[tuple[str, int], dict] = {}
    if resume and path.exists():
        old_header, records = read_journal(path)
        if old_header["fingerprint"] != header["fingerprint"]:
            raise ConfigError("journal was written by a different configuration")
        done = {_record_key(r): r for r in records}
        # rewrite without any torn tail so appends stay line-aligned
        _write_journal(path, old_header, list(done.values()))
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_journal(path, header, [])

    todo = [(cfg, cell, s) for cell in cfg.cells() for s in cfg.run_seeds if (cell.key(), s) not in done]
    records = list(done.values())
    workers = _worker_count()
    with open(path, "a") as journal_file:
        if workers == 1 or len(todo) <= 1:
            _drain(map(_run_cell_args, todo), journal_file, records, progress)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                _drain(pool.map(_run_cell_args, todo), journal_file, records, progress)
    return build_report(records, cfg.run_seeds, cfg.epochs)


def _drain(results: Iterable[dict], journal_file, records: list, progress) -> None:
    # the journal writer is the single serialization point
    for rec in results:
        journal_file.write(json.dumps(rec, sort_keys=True) + "\n")
        journal_file.flush()
        records.append(rec)
        if progress is not None:
            progress(rec)


def _write_journal(path: Path, header: dict, records: list[dict]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    os.replace(tmp, path)


# -- aggregation and reporting ----------------------------------------------

@dataclass
class Row:
    rule: str
    source: str
    n: int
    threshold: float
    decay: float
    learning_rate: float | None
    epochs: int
    time_s: float
    accuracy: float
    mse: float
    mae: float
    r2: float | None
    seeds: int

    @property
    def type(self) -> str:
        return L.CATEGORY[self.rule][0]

    @property
    def bio_inspired(self) -> bool:
        return L.CATEGORY[self.rule][1]


@dataclass
class BenchmarkReport:
    rows: list[Row]
    best: list[Row]
    failures: list[dict]
    environment: dict


def _median(values):
    return float(statistics.median(values))


def build_report(records: Sequence[dict], seeds: Sequence[int], epochs: int) -> BenchmarkReport:
    """Per-cell medians over seeds, best row per (rule, source), failures listed.

    A cell with any failed seed is reported as a failure and left out of the rows.
    """
    by_cell: dict[str, list[dict]] = {}
    for rec in records:
        if rec["seed"] in seeds:
            by_cell.setdefault(json.dumps(rec["cell"], sort_keys=True), []).append(rec)
    rows, failures = [], []
    for key, recs in by_cell.items():
        cell = recs[0]["cell"]
        bad = [r for r in recs if r["status"] != "ok"]
        if bad:
            failures.append({"cell": cell, "seed": bad[0]["seed"], "error": bad[0]["error"]})
            continue
        r2s = [r["r2"] for r in recs]
        rows.append(
            Row(
                rule=cell["rule"],
                source=cell["source"],
                n=cell["n"],
                threshold=cell["threshold"],
                decay=cell["decay"],
                learning_rate=cell["learning_rate"],
                epochs=epochs,
                time_s=_median([r["time_s"] for r in recs]),
                accuracy=_median([r["accuracy"] for r in recs]),
                mse=_median([r["mse"] for r in recs]),
                mae=_median([r["mae"] for r in recs]),
                r2=None if any(v is None for v in r2s) else _median(r2s),
                seeds=len(recs),
            )
        )
    rows = sort_rows(rows)
    return BenchmarkReport(rows, select_best(rows), failures, environment_note())


def _order(seq, value):
    return seq.index(value) if value in seq else len(seq)


def sort_rows(rows: Iterable[Row]) -> list[Row]:
    """Stable sort by (type, subtype, dataset) in the order of the published tables."""
    return sorted(
        rows,
        key=lambda r: (_order(TYPE_ORDER, r.type), _order(RULE_ORDER, r.rule), _order(DATASET_ORDER, r.source), r.source),
    )


def select_best(rows: Iterable[Row]) -> list[Row]:
    """Highest accuracy per (rule, source); ties go to lower time, then smaller n."""
    best: dict[tuple[str, str], Row] = {}
    for row in rows:
        k = (row.rule, row.source)
        cur = best.get(k)
        if cur is None or (-row.accuracy, row.time_s, row.n) < (-cur.accuracy, cur.time_s, cur.n):
            best[k] = row
    return sort_rows(best.values())


def build_hash() -> str:
    """Digest of the package sources, identifying the code that produced a report."""
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.rglob("*.py")):
        h.update(str(p.relative_to(root)).encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:12]


def _cpu_name() -> str:
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return platform.processor() or platform.machine()


def environment_note() -> dict:
    return {
        "cpu": _cpu_name(),
        "cpu_count": os.cpu_count(),
        "workers": _worker_count(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "spikebench": __version__,
        "build_hash": build_hash(),
    }


def _fmt_row(row: Row) -> dict:
    return {
        "type": row.type,
        "subtype": row.rule,
        "dataset": row.source,
        "bio_inspired": "yes" if row.bio_inspired else "no",
        "epochs": str(row.epochs),
        "n": str(row.n),
        "time_s": f"{row.time_s:.2f}",
        "accuracy_pct": f"{row.accuracy:.2f}",
        "mse": f"{row.mse:.4f}",
        "mae": f"{row.mae:.4f}",
        "r2": "nan" if row.r2 is None else f"{row.r2:.4f}",
    }


def _json_row(row: Row) -> dict:
    return {
        "type": row.type,
        "subtype": row.rule,
        "dataset": row.source,
        "bio_inspired": row.bio_inspired,
        "epochs": row.epochs,
        "n": row.n,
        "time_s": round(row.time_s, 2),
        "accuracy_pct": round(row.accuracy, 2),
        "mse": round(row.mse, 4),
        "mae": round(row.mae, 4),
        "r2": None if row.r2 is None else round(row.r2, 4),
        "threshold": row.threshold,
        "decay": row.decay,
        "learning_rate": row.learning_rate,
        "seeds": row.seeds,
    }


def render_report(report: BenchmarkReport, fmt: str, all_rows: bool = False, allow_empty: bool = True) -> str:
    rows = report.rows if all_rows else report.best
    if not rows and not allow_empty:
        raise ValueError("report has no rows")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(_fmt_row(row))
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "|".join("---" for _ in COLUMNS) + "|"]
        for row in rows:
            f = _fmt_row(row)
            lines.append("| " + " | ".join(f[c] for c in COLUMNS) + " |")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "report_version": REPORT_VERSION,
            "columns": list(COLUMNS),
            "environment": report.environment,
            "rows": [_json_row(r) for r in rows],
            "failures": report.failures,
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose csv, json or markdown")


def emit_report(report: BenchmarkReport, fmt: str, path, all_rows: bool = False, allow_empty: bool = True) -> Path:
    text = render_report(report, fmt, all_rows, allow_empty)
    path = Path(path)
    with open(path, "w") as f:  # OSError propagates for unwritable paths
        f.write(text)
    return path


def report_from_journal(path) -> BenchmarkReport:
    header, records = read_journal(path)
    cfg = header["config"]
    seeds = cfg["seeds"][:1] if cfg["fast"] else cfg["seeds"]
    return build_report(records, seeds, cfg["epochs"])


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())

