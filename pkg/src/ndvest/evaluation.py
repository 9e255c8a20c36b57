"""Benchmark harness: sample real or synthetic columns, run estimators, aggregate ratio errors."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import EstimatorId, estimate_baseline
from .datagen import TrainingPoint, sample_profile
from .model import Mlp, estimate
from .profile import Profile, ratio_error

log = logging.getLogger(__name__)

DEFAULT_RATES = (1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2)
REPORT_COLUMNS = ("source", "method", "rate", "repeats", "mean_ratio_error", "true_ndv", "mean_estimate")
ALL = "all"


@dataclass(frozen=True)
class ColumnSource:
    path: str
    column: str | int
    null_policy: str = "keep"
    header: bool = True

    def __post_init__(self):
        if self.null_policy not in ("keep", "drop"):
            raise ValueError(f"null policy must be 'keep' or 'drop', got {self.null_policy!r}")
        if not self.header and not isinstance(self.column, int):
            raise ValueError("a headerless CSV needs a zero-based column index")

    @property
    def name(self) -> str:
        return f"{Path(self.path).name}:{self.column}"


@dataclass(frozen=True)
class SyntheticSource:
    """A dataset JSONL file; each line is one evaluation record with its own ``f``, ``N`` and ``D``."""

    path: str

    @property
    def name(self) -> str:
        return Path(self.path).name


@dataclass
class EvalConfig:
    rates: Sequence[float] = DEFAULT_RATES
    repeats: int = 10
    seed: int = 0
    methods: Sequence[EstimatorId] = (EstimatorId.GEE,)
    model_path: str | None = None
    max_retries: int = 100

    def __post_init__(self):
        self.methods = tuple(EstimatorId.parse(m) if isinstance(m, str) else m for m in self.methods)
        if not self.methods:
            raise ValueError("at least one method is required")
        if any(not 0.0 < r <= 1.0 for r in self.rates):
            raise ValueError(f"sampling rates must lie in (0, 1], got {list(self.rates)}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass(frozen=True)
class EvalRecord:
    source: str
    method: str
    rate: float
    repeat: int
    true_ndv: int
    sample_size: int
    sample_ndv: int
    estimate: float | None
    ratio_error: float | None
    status: str = "ok"  # ok | failed | fallback
    note: str = ""


@dataclass(frozen=True)
class ReportRow:
    source: str
    method: str
    rate: str
    errors: tuple[float, ...]
    true_ndv: float
    mean_estimate: float

    @property
    def repeats(self) -> int:
        return len(self.errors)

    @property
    def mean_ratio_error(self) -> float:
        return float(np.mean(self.errors))


@dataclass
class EvalReport:
    records: list[EvalRecord] = field(default_factory=list)
    skipped: list[tuple[str, float, int, str]] = field(default_factory=list)
    null_policy: str = "keep"
    per_rate_sources: set[str] = field(default_factory=set)

    @property
    def failures(self) -> int:
        return sum(rec.status == "failed" for rec in self.records)

    def rows(self) -> list[ReportRow]:
        """Per (source, method, rate), per (source, method) and overall per method.

        Synthetic sources carry one rate per record and only get the
        per-source rows. Every mean is over the individual record errors, so
        the overall row weights sources by their record counts.
        """
        ok = [rec for rec in self.records if rec.ratio_error is not None]
        per_rate: dict[tuple[str, str, str], list[EvalRecord]] = {}
        per_source: dict[tuple[str, str, str], list[EvalRecord]] = {}
        overall: dict[tuple[str, str, str], list[EvalRecord]] = {}
        for rec in ok:
            if rec.source in self.per_rate_sources:
                per_rate.setdefault((rec.source, rec.method, repr(rec.rate)), []).append(rec)
            per_source.setdefault((rec.source, rec.method, ALL), []).append(rec)
            overall.setdefault((ALL, rec.method, ALL), []).append(rec)
        return [_row(key, recs) for groups in (per_rate, per_source, overall) for key, recs in groups.items()]

    def overall(self) -> dict[str, float]:
        return {row.method: row.mean_ratio_error for row in self.rows() if row.source == ALL}


def _row(key: tuple[str, str, str], recs: list[EvalRecord]) -> ReportRow:
    source, method, rate = key
    return ReportRow(
        source,
        method,
        rate,
        tuple(rec.ratio_error for rec in recs),  # type: ignore[misc]
        float(np.mean([rec.true_ndv for rec in recs])),
        float(np.mean([rec.estimate for rec in recs])),
    )


def _column_values(src: ColumnSource):
    try:
        fh = open(src.path, newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {src.path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        idx = src.column
        if src.header:
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{src.path} is empty") from None
            if isinstance(idx, str):
                if idx not in header:
                    raise ValueError(f"column {idx!r} not found in {src.path}; header is {header}")
                idx = header.index(idx)
            elif not 0 <= idx < len(header):
                raise ValueError(f"column index {idx} out of range for {len(header)} columns in {src.path}")
        for lineno, row in enumerate(reader, start=2 if src.header else 1):
            if not row:
                continue
            if idx >= len(row):
                raise ValueError(f"{src.path}:{lineno}: row has {len(row)} fields, column {src.column} missing")
            value = row[idx]
            if value == "" and src.null_policy == "drop":
                continue
            yield value


def ingest_column(src: ColumnSource) -> Profile:
    """Exact population profile of one CSV column."""
    counts = Counter(_column_values(src))
    if not counts:
        raise ValueError(f"column {src.column!r} of {src.path} has no rows")
    return Profile(Counter(counts.values()))


def _stream_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")


def record_rng(seed: int, source: str, rate_index: int, repeat: int) -> np.random.Generator:
    return np.random.default_rng([seed, _stream_key(source), rate_index, repeat])


def draw_eval_sample(
    population: Profile, r: float, rng: np.random.Generator, max_retries: int = 100
) -> tuple[Profile | None, int]:
    """Bernoulli(r) row sample; redrawn while empty. Returns ``(sample or None, retries)``."""
    for attempt in range(max_retries + 1):
        f = sample_profile(population, r, rng)
        if f:
            return f, attempt
    return None, max_retries


class _Estimators:
    def __init__(self, methods: Sequence[EstimatorId], model: Mlp | None):
        if EstimatorId.LEARNED in methods and model is None:
            raise ValueError("method 'learned' needs a model")
        self.methods = methods
        self.model = model

    def run(self, method: EstimatorId, f: Profile, N: int) -> tuple[float, bool]:
        if method is EstimatorId.LEARNED:
            return estimate(self.model, f, N), False  # type: ignore[arg-type]
        return estimate_baseline(method, f, N)


def _score(report: EvalReport, est: _Estimators, source: str, rate: float, repeat: int, f: Profile, N: int, D: int):
    for method in est.methods:
        try:
            value, fell_back = est.run(method, f, N)
            err = ratio_error(value, D)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            report.records.append(EvalRecord(source, method.value, rate, repeat, D, f.size, f.ndv, None, None, "failed", str(exc)))
            continue
        status = "fallback" if fell_back else "ok"
        report.records.append(EvalRecord(source, method.value, rate, repeat, D, f.size, f.ndv, value, err, status))


def evaluate(
    sources: Sequence[ColumnSource | SyntheticSource], cfg: EvalConfig, model: Mlp | None = None
) -> EvalReport:
    """Run every method on every (source, rate, repeat) record."""
    if not sources:
        raise ValueError("at least one source is required")
    if model is None and cfg.model_path and EstimatorId.LEARNED in cfg.methods:
        from .model import load_model

        model = load_model(cfg.model_path)
    est = _Estimators(cfg.methods, model)
    report = EvalReport()
    policies = {s.null_policy for s in sources if isinstance(s, ColumnSource)}
    report.null_policy = ",".join(sorted(policies)) if policies else "n/a"
    for src in sources:
        if isinstance(src, SyntheticSource):
            with open(src.path, encoding="utf-8") as fh:
                for i, line in enumerate(fh):
                    if line.strip():
                        p = TrainingPoint.from_json(line)
                        _score(report, est, src.name, p.r, i, p.f, p.N, p.D)
            continue
        population = ingest_column(src)
        report.per_rate_sources.add(src.name)
        N, D = population.size, population.ndv
        for ri, r in enumerate(cfg.rates):
            for rep in range(cfg.repeats):
                f, retries = draw_eval_sample(population, r, record_rng(cfg.seed, src.name, ri, rep), cfg.max_retries)
                if f is None:
                    report.skipped.append((src.name, r, rep, f"sample empty after {retries} retries"))
                    continue
                _score(report, est, src.name, r, rep, f, N, D)
    if report.skipped:
        log.warning("%d records skipped because every sample was empty", len(report.skipped))
    return report


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 2**53 else repr(float(x))


def _table(report: EvalReport) -> list[list[str]]:
    return [
        [row.source, row.method, row.rate, str(row.repeats), repr(row.mean_ratio_error), _fmt(row.true_ndv), repr(row.mean_estimate)]
        for row in report.rows()
    ]


def render_report(report: EvalReport, fmt: str = "csv") -> str:
    rows = _table(report)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(REPORT_COLUMNS) + " |", "|" + "---|" * len(REPORT_COLUMNS)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: EvalReport, fmt: str, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_report(report, fmt))


def emit_records(report: EvalReport, path: str | os.PathLike) -> None:
    """Per-record CSV, including the true NDV for external bucketing."""
    cols = ("source", "method", "rate", "repeat", "true_ndv", "sample_size", "sample_ndv", "estimate", "ratio_error", "status", "note")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for rec in report.records:
            writer.writerow([
                rec.source, rec.method, repr(rec.rate), rec.repeat, rec.true_ndv, rec.sample_size, rec.sample_ndv,
                "" if rec.estimate is None else repr(rec.estimate),
                "" if rec.ratio_error is None else repr(rec.ratio_error),
                rec.status, rec.note,
            ])


def report_summary(report: EvalReport) -> str:
    return json.dumps(
        {"records": len(report.records), "failed": report.failures, "skipped": len(report.skipped), "null_policy": report.null_policy},
        sort_keys=True,
    )
