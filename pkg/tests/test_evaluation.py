import csv
import io
import math

import numpy as np
import pytest

from ndvest.baselines import EstimatorId
from ndvest.datagen import GeneratorConfig, generate_dataset
from ndvest.evaluation import (
    ColumnSource,
    EvalConfig,
    EvalReport,
    SyntheticSource,
    _Estimators,
    draw_eval_sample,
    emit_records,
    evaluate,
    ingest_column,
    record_rng,
    render_report,
)
from ndvest.profile import Profile


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        w.writerows(rows)
    return str(path)


@pytest.fixture
def table(tmp_path):
    rng = np.random.default_rng(4)
    rows = [[f"k{int(v)}", str(i % 7), "" if i % 3 == 0 else "x"] for i, v in enumerate(rng.zipf(1.6, 3000) % 500)]
    return write_csv(tmp_path / "t.csv", ["key", "mod", "sparse"], rows)


def test_ingest_examples(tmp_path):
    assert ingest_column(ColumnSource(write_csv(tmp_path / "a.csv", ["c"], [["x"], ["x"]]), "c")) == Profile({2: 1})
    distinct = write_csv(tmp_path / "b.csv", ["c"], [[str(i)] for i in range(9)])
    assert ingest_column(ColumnSource(distinct, "c")) == Profile({1: 9})
    assert ingest_column(ColumnSource(distinct, "c")) == ingest_column(ColumnSource(distinct, "c"))


def test_ingest_quoting_and_index(tmp_path):
    path = tmp_path / "q.csv"
    path.write_text('a,b\n"x,y",1\n"x,y",2\n"x, y",3\n', encoding="utf-8")
    assert ingest_column(ColumnSource(str(path), "a")) == Profile({2: 1, 1: 1})
    assert ingest_column(ColumnSource(str(path), 1)) == Profile({1: 3})
    bare = write_csv(tmp_path / "h.csv", None, [["p", "1"], ["p", "2"]])
    assert ingest_column(ColumnSource(bare, 0, header=False)) == Profile({2: 1})


def test_ingest_null_policy(table):
    keep = ingest_column(ColumnSource(table, "sparse"))
    drop = ingest_column(ColumnSource(table, "sparse", "drop"))
    assert keep.ndv == 2 and keep.size == 3000
    assert drop == Profile({2000: 1})


def test_ingest_errors(tmp_path, table):
    with pytest.raises(ValueError, match="not found"):
        ingest_column(ColumnSource(table, "nope"))
    with pytest.raises(ValueError, match="out of range"):
        ingest_column(ColumnSource(table, 9))
    with pytest.raises(OSError):
        ingest_column(ColumnSource(str(tmp_path / "missing.csv"), "c"))
    with pytest.raises(ValueError, match="no rows"):
        ingest_column(ColumnSource(write_csv(tmp_path / "e.csv", ["c"], []), "c"))
    with pytest.raises(ValueError):
        ColumnSource(table, "key", "ignore")


def test_draw_eval_sample():
    pop = Profile({1: 300, 4: 100, 50: 2})
    assert draw_eval_sample(pop, 1.0, np.random.default_rng(0)) == (pop, 0)
    sizes = [draw_eval_sample(pop, 0.2, np.random.default_rng([1, i]))[0].size for i in range(2000)]
    # size ~ Binomial(800, 0.2): mean 160, sd of the mean ~ 0.25
    assert abs(np.mean(sizes) - 160) < 1.5
    a = draw_eval_sample(pop, 0.05, record_rng(3, "t.csv:key", 2, 4))
    b = draw_eval_sample(pop, 0.05, record_rng(3, "t.csv:key", 2, 4))
    assert a == b
    assert draw_eval_sample(Profile({1: 1}), 1e-9, np.random.default_rng(0), max_retries=5) == (None, 5)


def test_gee_at_full_rate_scores_one(table):
    report = evaluate([ColumnSource(table, "key"), ColumnSource(table, "mod")], EvalConfig(rates=[1.0], repeats=2, methods=["gee"]))
    assert report.overall() == {"gee": 1.0}


def test_perfect_oracle_scores_one(table, monkeypatch):
    truth = ingest_column(ColumnSource(table, "key")).ndv
    monkeypatch.setattr(_Estimators, "run", lambda self, m, f, N: (float(truth), False))
    report = evaluate([ColumnSource(table, "key")], EvalConfig(rates=[0.01, 0.1], repeats=3, methods=["chao"]))
    assert all(row.mean_ratio_error == 1.0 for row in report.rows())


def test_aggregation_contract(table):
    cfg = EvalConfig(rates=[0.01, 0.05], repeats=4, methods=["gee", "chao", "shlosser", "chaolee"], seed=2)
    report = evaluate([ColumnSource(table, "key"), ColumnSource(table, "mod")], cfg)
    rows = report.rows()
    for row in rows:
        assert row.mean_ratio_error == float(np.mean(row.errors))
        assert all(e >= 1.0 for e in row.errors)
    per_source = {(r.source, r.method): r for r in rows if r.rate == "all" and r.source != "all"}
    for row in rows:
        if row.source == "all":
            parts = [r for (s, m), r in per_source.items() if m == row.method]
            weighted = sum(r.mean_ratio_error * r.repeats for r in parts) / sum(r.repeats for r in parts)
            assert row.mean_ratio_error == pytest.approx(weighted, rel=1e-12)
    assert {r.method for r in rows} == {"gee", "chao", "shlosser", "chaolee"}


def test_report_rendering(table):
    cfg = EvalConfig(rates=[0.02], repeats=3, methods=["gee", "shlosser"], seed=5)
    report = evaluate([ColumnSource(table, "key")], cfg)
    text = render_report(report)
    assert text == render_report(evaluate([ColumnSource(table, "key")], cfg))
    assert text.splitlines()[0] == "source,method,rate,repeats,mean_ratio_error,true_ndv,mean_estimate"
    md = render_report(report, "markdown").splitlines()
    assert len(md) - 2 == len(text.splitlines()) - 1
    assert render_report(EvalReport()) == "source,method,rate,repeats,mean_ratio_error,true_ndv,mean_estimate\n"
    with pytest.raises(ValueError):
        render_report(report, "html")


def test_failed_records_are_excluded(tmp_path):
    # two rows: any nonempty sample has n < 2 or is exact; chaolee fails on n = 1
    path = write_csv(tmp_path / "s.csv", ["c"], [["a"], ["b"]])
    report = evaluate([ColumnSource(path, "c")], EvalConfig(rates=[0.5], repeats=20, methods=["chaolee", "gee"], seed=1))
    failed = [r for r in report.records if r.status == "failed"]
    assert failed and report.failures == len(failed)
    assert all(r.method == "chaolee" and r.ratio_error is None for r in failed)
    ok = [r for r in report.records if r.method == "chaolee" and r.status != "failed"]
    rows = {(r.method, r.rate): r for r in report.rows() if r.source != "all"}
    assert rows[("chaolee", "all")].repeats == len(ok)


def test_synthetic_source(tmp_path):
    path = tmp_path / "d.jsonl"
    generate_dataset(GeneratorConfig(B=5, min_population=100, seed=3), 40, path)
    report = evaluate([SyntheticSource(str(path))], EvalConfig(methods=["gee", "chao"]))
    assert len([r for r in report.records if r.method == "gee"]) == 40
    assert {r.rate for r in report.rows()} == {"all"}
    records = tmp_path / "r.csv"
    emit_records(report, records)
    assert len(records.read_text().splitlines()) == 81


def test_learned_requires_model(table):
    with pytest.raises(ValueError, match="model"):
        evaluate([ColumnSource(table, "key")], EvalConfig(methods=[EstimatorId.LEARNED]))


def test_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(rates=[0.0])
    with pytest.raises(ValueError):
        EvalConfig(repeats=0)
    with pytest.raises(ValueError):
        EvalConfig(methods=[])
