"""Command line entry point: ``ndvest {gen,train,estimate,eval,bound,model-info}``.

Exit codes: 0 success, 1 runtime or domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import bounds
from .baselines import EstimatorId, estimate_baseline
from .datagen import GeneratorConfig, generate_dataset, read_dataset
from .evaluation import (
    DEFAULT_RATES,
    ColumnSource,
    EvalConfig,
    SyntheticSource,
    emit_records,
    emit_report,
    evaluate,
    report_summary,
)
from .features import FeatureConfig
from .model import TrainConfig, estimate, load_model, save_model, train
from .profile import Profile, profile_from_values

log = logging.getLogger("ndvest")


class UsageError(Exception):
    pass


def _num(x: float) -> str:
    return f"{x:.17g}"


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("NDV_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise UsageError(f"NDV_THREADS must be an integer, got {env!r}") from None


def run_gen(args) -> int:
    cfg = GeneratorConfig(B=args.B, B_prime=args.b_prime, min_population=args.min_n, diversify=not args.no_diversify, seed=args.seed)
    stats = generate_dataset(cfg, args.count, args.out, workers=_threads(args))
    print(f"generated={stats.generated} dropped={stats.dropped} dropped_small={stats.dropped_small} dropped_empty={stats.dropped_empty}")
    if stats.generated < args.count:
        print(f"requested {args.count} points, accepted {stats.generated} after {stats.attempts} attempts", file=sys.stderr)
    return 0


def run_train(args) -> int:
    points = read_dataset(args.data)
    if not points:
        raise ValueError(f"dataset {args.data} is empty")
    cfg = TrainConfig(
        lr=args.lr,
        lam=args.lam,
        bound_params=bounds.BoundParams(args.gamma, args.c),
        batch_size=args.batch,
        epochs=args.epochs,
        seed=args.seed,
        n_layers=args.nl,
        n_summary=args.ns,
        clamp_output=not args.no_clamp,
    )
    model, _ = train(points, cfg, FeatureConfig(m=args.m), on_epoch=lambda k, v: print(f"epoch={k} loss={v!r}", flush=True))
    save_model(model, args.out)
    return 0


def _read_profile(spec: str) -> Profile:
    text = spec if spec.lstrip().startswith("{") else open(spec, encoding="utf-8").read()
    return Profile.from_json(text)


def run_estimate(args) -> int:
    if (args.model is None) == (args.method is None):
        raise UsageError("give exactly one of --model or --method")
    if (args.profile is None) == (args.sample is None):
        raise UsageError("give exactly one of --profile or --sample")
    if args.profile is not None:
        f = _read_profile(args.profile)
    else:
        with open(args.sample, encoding="utf-8") as fh:
            f = profile_from_values(line.rstrip("\r\n") for line in fh)
    N = args.population_size
    if not f:
        raise ValueError("sample profile is empty")
    if f.size > N:
        raise ValueError(f"sample size {f.size} exceeds population size {N}")
    if args.model is not None:
        value = estimate(load_model(args.model), f, N)
    else:
        method = EstimatorId.parse(args.method)
        if method is EstimatorId.LEARNED:
            raise UsageError("--method learned needs --model instead")
        value = estimate_baseline(method, f, N)[0]
    print(_num(value))
    return 0


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def run_eval(args) -> int:
    try:
        methods = [EstimatorId.parse(m) for m in _split(args.methods)]
        rates = [float(r) for r in _split(args.rates)] if args.rates else list(DEFAULT_RATES)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if EstimatorId.LEARNED in methods and not args.model:
        raise UsageError("method 'learned' requires --model")
    sources: list = []
    for path in args.csv or []:
        if not args.columns:
            raise UsageError("--csv needs --columns")
        for col in _split(args.columns):
            column: str | int = col
            if args.no_header or args.by_index:
                if not col.isdigit():
                    raise UsageError(f"column {col!r} is not a zero-based index")
                column = int(col)
            sources.append(ColumnSource(path, column, args.null_policy, header=not args.no_header))
    sources += [SyntheticSource(p) for p in args.synthetic or []]
    if not sources:
        raise UsageError("give at least one --csv or --synthetic source")
    cfg = EvalConfig(rates=rates, repeats=args.repeats, seed=args.seed, methods=methods, model_path=args.model)
    report = evaluate(sources, cfg)
    emit_report(report, args.format, args.out)
    if args.records_out:
        emit_records(report, args.records_out)
    for method, err in report.overall().items():
        print(f"method={method} mean_ratio_error={err!r}")
    print(report_summary(report), file=sys.stderr)
    return 0


def run_bound(args) -> int:
    if args.global_:
        if args.N is None or args.n is None:
            raise UsageError("--global needs --N and --n")
        print(_num(bounds.global_lower_bound(args.N, args.n, args.gamma)))
        return 0
    if args.d is None or args.n is None or args.N is None:
        raise UsageError("bound needs --d, --n and --N")
    print(_num(bounds.instance_lower_bound(args.d, args.n, args.N, bounds.BoundParams(args.gamma, args.c))))
    return 0


def run_model_info(args) -> int:
    model = load_model(args.model)
    info = {
        "dims": model.dims,
        "m": model.feature_config.m,
        "eps": model.feature_config.eps,
        "leaky_slope": model.leaky_slope,
        "clamp": model.clamp_output,
        "parameters": int(sum(w.size + b.size for w, b in zip(model.weights, model.biases))),
        "train_meta": model.train_meta,
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _non_negative_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndvest", description="Learned and classical estimators of the number of distinct values.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic training dataset (JSONL)")
    p.add_argument("--count", type=_non_negative_int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--B", type=float, default=6, help="max log10 population size (6 at desk scale)")
    p.add_argument("--b-prime", type=float, default=4, help="max negative log10 sampling rate")
    p.add_argument("--min-n", type=_non_negative_int, default=10_000, help="drop points with fewer rows")
    p.add_argument("--seed", type=_non_negative_int, default=0)
    p.add_argument("--no-diversify", action="store_true")
    p.add_argument("--threads", type=_positive_int, default=None)
    p.set_defaults(func=run_gen)

    p = sub.add_parser("train", help="train the learned estimator")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.6)
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--epochs", type=_non_negative_int, default=30)
    p.add_argument("--batch", type=_positive_int, default=256)
    p.add_argument("--m", type=_positive_int, default=100)
    p.add_argument("--nl", type=_non_negative_int, default=5)
    p.add_argument("--ns", type=_positive_int, default=2)
    p.add_argument("--seed", type=_non_negative_int, default=0)
    p.add_argument("--no-clamp", action="store_true", help="do not clamp estimates to [d, N]")
    p.add_argument("--threads", type=_positive_int, default=None, help="accepted for symmetry; training is single-threaded")
    p.set_defaults(func=run_train)

    p = sub.add_parser("estimate", help="estimate NDV from a sample or sample profile")
    p.add_argument("--profile", help="profile JSON inline or a path to a JSON file")
    p.add_argument("--sample", help="file with one sampled value per line")
    p.add_argument("--population-size", type=_positive_int, required=True)
    p.add_argument("--model")
    p.add_argument("--method", help="gee | chao | chaolee | shlosser")
    p.set_defaults(func=run_estimate)

    p = sub.add_parser("eval", help="benchmark estimators on CSV columns or synthetic records")
    p.add_argument("--csv", action="append")
    p.add_argument("--columns", help="comma-separated column names (or indices with --no-header / --by-index)")
    p.add_argument("--by-index", action="store_true", help="treat numeric --columns as zero-based indices")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--null-policy", choices=("keep", "drop"), default="keep")
    p.add_argument("--synthetic", action="append")
    p.add_argument("--rates", help="comma-separated sampling rates")
    p.add_argument("--repeats", type=_positive_int, default=10)
    p.add_argument("--methods", default="gee,chao,chaolee,shlosser")
    p.add_argument("--model")
    p.add_argument("--out", required=True)
    p.add_argument("--records-out", help="optional per-record CSV")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--seed", type=_non_negative_int, default=0)
    p.add_argument("--threads", type=_positive_int, default=None, help="accepted for symmetry; evaluation is sequential")
    p.set_defaults(func=run_eval)

    p = sub.add_parser("bound", help="instance-wise or global ratio error lower bound")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--gamma", type=float, default=0.6)
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--global", dest="global_", action="store_true")
    p.set_defaults(func=run_bound)

    p = sub.add_parser("model-info", help="print the layout and training metadata of a model file")
    p.add_argument("model")
    p.set_defaults(func=run_model_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ndvest {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"ndvest {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
