import csv
import dataclasses
import io
import json

import jsonschema
import pytest

from spikebench import bench
from spikebench.bench import (
    COLUMNS,
    BenchmarkReport,
    ConfigError,
    ExperimentConfig,
    Row,
    build_report,
    emit_report,
    parse_config,
    read_journal,
    render_report,
    report_from_journal,
    run_experiment,
    select_best,
    sort_rows,
)


def tiny(tmp_path, **kw):
    base = dict(
        rules=("hebbian",),
        sources=("bernoulli",),
        n=(16,),
        threshold=(0.2,),
        decay=(0.05,),
        learning_rate=(),
        epochs=1,
        seeds=(0,),
        fast=True,
        output=str(tmp_path / "j.jsonl"),
        train_per_class=4,
        test_per_class=4,
        length=128,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def row(rule="hebbian", source="bernoulli", n=128, acc=99.0, time_s=1.0, r2=0.96):
    err = 1 - acc / 100
    return Row(rule, source, n, 0.2, 0.05, None, 10, time_s, acc, err, err, r2, 3)


def metric_rows(report):
    return [(r.rule, r.source, r.n, r.accuracy, r.mse, r.mae, r.r2) for r in report.rows]


# -- configuration ------------------------------------------------------------

CONFIG = """
[spikebench]
config_version = 1

[experiment]
mode = "fast"
epochs = 2
seeds = [4]
output = "out/j.jsonl"

[grid]
rules = ["stdp", "bp"]
sources = ["bernoulli", "mine"]
n = [16]
threshold = [0.2]
decay = [0.05]
learning_rate = []

[sources.mine]
class0 = { kind = "bernoulli", p = 0.2 }
class1 = { kind = "bernoulli", p = 0.4 }
"""


def test_parse_config(tmp_path):
    cfg = parse_config(CONFIG, tmp_path)
    assert cfg.rules == ("stdp", "bp") and cfg.fast and cfg.seeds == (4,) and cfg.epochs == 2
    assert cfg.output == str(tmp_path / "out/j.jsonl")
    assert len(cfg.cells()) == 4 and cfg.cells()[0].learning_rate is None
    assert cfg.source_pair("mine")[1].p == 0.4


def test_defaults_mirror_published_grids():
    cfg = ExperimentConfig()
    assert cfg.threshold == (1.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05)
    assert cfg.decay == (0.1, 0.05, 0.03, 0.01)
    assert cfg.learning_rate == (0.05, 0.01, 0.001, 0.0098, 0.0001)
    assert cfg.n == (16, 32, 64, 128, 256, 512, 1024)


@pytest.mark.parametrize(
    "text",
    [
        "[experiment]\nepochs = 1",
        "[spikebench]\nconfig_version = 2",
        CONFIG.replace('"bp"', '"backprop"'),
        CONFIG.replace("n = [16]", "n = [48]"),
        CONFIG.replace("decay = [0.05]", "decay = [1.5]"),
        CONFIG.replace('mode = "fast"', 'mode = "paper"'),  # paper mode needs >= 3 seeds
        CONFIG.replace("epochs = 2", "epochs = 2\nworkers = 3"),
        CONFIG.replace("p = 0.4", "p = 1.4"),
        CONFIG + "\n[extra]\nx = 1\n",
        "not toml [",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_fingerprint_ignores_output_path(tmp_path):
    a = tiny(tmp_path)
    assert a.fingerprint() == dataclasses.replace(a, output="elsewhere").fingerprint()
    assert a.fingerprint() != dataclasses.replace(a, epochs=2).fingerprint()


# -- running ------------------------------------------------------------------

def test_empty_grid(tmp_path):
    report = run_experiment(tiny(tmp_path, rules=()))
    assert report.rows == [] and report.failures == []
    assert render_report(report, "csv") == ",".join(COLUMNS) + "\n"
    with pytest.raises(ValueError):
        render_report(report, "csv", allow_empty=False)


def test_one_cell_rerun_is_identical(tmp_path):
    cfg = tiny(tmp_path)
    a = run_experiment(cfg, tmp_path / "a.jsonl")
    b = run_experiment(cfg, tmp_path / "b.jsonl")
    assert metric_rows(a) == metric_rows(b) and len(a.rows) == 1
    assert a.rows[0].time_s >= 0


def test_resume_matches_uninterrupted(tmp_path):
    cfg = tiny(tmp_path, rules=("hebbian", "sdsp", "tempotron"), sources=("bernoulli", "poisson"))
    full = run_experiment(cfg, tmp_path / "full.jsonl")
    lines = (tmp_path / "full.jsonl").read_text().splitlines(keepends=True)
    part = tmp_path / "part.jsonl"
    part.write_text("".join(lines[:3]) + lines[3][:20])  # two records plus a torn line
    seen = []
    resumed = run_experiment(cfg, part, resume=True, progress=seen.append)
    assert len(seen) == 4
    assert metric_rows(resumed) == metric_rows(full)
    _, records = read_journal(part)
    assert len(records) == 6


def test_resume_rejects_other_config(tmp_path):
    cfg = tiny(tmp_path)
    run_experiment(cfg, tmp_path / "j.jsonl")
    with pytest.raises(ConfigError):
        run_experiment(dataclasses.replace(cfg, epochs=2), tmp_path / "j.jsonl", resume=True)


def test_failing_cell_is_recorded(tmp_path, monkeypatch):
    real = bench.run_trial

    def flaky(train_set, test_set, tcfg, source_name):
        if tcfg.rule.name == "sdsp":
            raise RuntimeError("boom")
        return real(train_set, test_set, tcfg, source_name)

    monkeypatch.setattr(bench, "run_trial", flaky)
    report = run_experiment(tiny(tmp_path, rules=("hebbian", "sdsp")))
    assert [r.rule for r in report.rows] == ["hebbian"]
    assert report.failures[0]["cell"]["rule"] == "sdsp" and "boom" in report.failures[0]["error"]


def test_cell_fails_if_any_seed_fails():
    cell = {"rule": "hebbian", "source": "bernoulli", "n": 16, "threshold": 0.2, "decay": 0.05, "learning_rate": None}
    ok = dict(cell=cell, status="ok", accuracy=90.0, mse=0.1, mae=0.1, r2=0.6, time_s=1.0)
    recs = [dict(ok, seed=0), dict(ok, seed=1), dict(cell=cell, seed=2, status="error", error="x")]
    report = build_report(recs, (0, 1, 2), 10)
    assert report.rows == [] and len(report.failures) == 1


def test_medians_over_seeds():
    cell = {"rule": "bp", "source": "markov", "n": 16, "threshold": 0.2, "decay": 0.05, "learning_rate": 0.01}
    recs = [
        dict(cell=cell, seed=s, status="ok", accuracy=a, mse=1 - a / 100, mae=1 - a / 100, r2=1 - 4 * (1 - a / 100), time_s=t)
        for s, a, t in [(0, 90.0, 3.0), (1, 95.0, 1.0), (2, 99.0, 2.0)]
    ]
    (r,) = build_report(recs, (0, 1, 2), 10).rows
    assert (r.accuracy, r.time_s, r.seeds) == (95.0, 2.0, 3)
    assert build_report(recs, (0,), 10).rows[0].accuracy == 90.0


def test_best_row_selection():
    rows = [row(n=16, acc=95.0), row(n=32, acc=99.0, time_s=2.0), row(n=64, acc=99.0, time_s=1.0), row(n=128, acc=99.0, time_s=1.0)]
    (best,) = select_best(rows)
    assert best.n == 64


def test_rows_sorted_in_table_order():
    rows = [row("bal", "poisson"), row("bp", "markov"), row("hebbian", "poisson"), row("hebbian", "bernoulli"), row("stdp", "markov")]
    order = [(r.rule, r.source) for r in sort_rows(rows)]
    assert order == [("hebbian", "bernoulli"), ("hebbian", "poisson"), ("stdp", "markov"), ("bp", "markov"), ("bal", "poisson")]


# -- reports ------------------------------------------------------------------

def report_of(*rows):
    rows = sort_rows(rows)
    return BenchmarkReport(rows, select_best(rows), [], bench.environment_note())


def test_csv_fragment():
    text = render_report(report_of(row(time_s=5.804)), "csv")
    header, line = text.splitlines()
    assert header == ",".join(COLUMNS)
    assert line.startswith("unsupervised,hebbian,bernoulli,yes,10,128,5.80,")
    assert line.endswith("99.00,0.0100,0.0100,0.9600")


def test_undefined_r2_renders_nan():
    text = render_report(report_of(row(r2=None)), "csv")
    assert text.splitlines()[1].endswith(",nan")


def test_markdown_round_trips_through_csv():
    rep = report_of(row(), row("bp", "markov", acc=100.0, r2=1.0), row("bal", "poisson", acc=50.0, r2=0.0))
    md = render_report(rep, "markdown")
    body = [line.strip().strip("|").split("|") for line in md.splitlines() if not line.startswith("|---")]
    as_csv = "\n".join(",".join(c.strip() for c in cells) for cells in body) + "\n"
    assert list(csv.reader(io.StringIO(as_csv))) == list(csv.reader(io.StringIO(render_report(rep, "csv"))))


def test_json_validates_against_schema(tmp_path):
    report = run_experiment(tiny(tmp_path, rules=("hebbian", "bp")))
    doc = json.loads(render_report(report, "json", all_rows=True))
    jsonschema.validate(doc, bench.load_schema())
    assert doc["columns"] == list(COLUMNS) and len(doc["rows"]) == 2
    assert len(doc["environment"]["build_hash"]) == 12
    bad = dict(doc, rows=[dict(doc["rows"][0], n=48)])
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, bench.load_schema())


def test_report_from_journal(tmp_path):
    cfg = tiny(tmp_path)
    live = run_experiment(cfg)
    assert metric_rows(report_from_journal(cfg.output)) == metric_rows(live)


def test_emit_report_writes_and_raises(tmp_path):
    rep = report_of(row())
    out = emit_report(rep, "csv", tmp_path / "r.csv")
    assert out.read_text() == render_report(rep, "csv")
    with pytest.raises(OSError):
        emit_report(rep, "csv", tmp_path / "missing" / "dir" / "r.csv")
    with pytest.raises(ValueError):
        render_report(rep, "xlsx")


def test_worker_pool_gives_same_rows(tmp_path, monkeypatch):
    cfg = tiny(tmp_path, rules=("hebbian", "sdsp"))
    serial = run_experiment(cfg, tmp_path / "s.jsonl")
    monkeypatch.setenv("SPIKEBENCH_THREADS", "2")
    pooled = run_experiment(cfg, tmp_path / "p.jsonl")
    assert metric_rows(pooled) == metric_rows(serial)
