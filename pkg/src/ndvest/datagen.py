"""Synthetic training data: random population profiles and their sample profiles.

One training point is produced per population profile:

1. draw ``N`` and ``M`` log-uniformly on ``[1, 10**B]``;
2. draw a uniformly random composition of ``N`` into ``M`` non-negative parts
   (stars and bars), sort it into a non-increasing suffix-sum vector ``SF``
   and take ``F_i = SF_i - SF_{i+1}``;
3. optionally add a single random spike ``F[i_p] += D'``;
4. draw ``r`` with ``log10 r ~ U(-B', -1)`` and toss a ``Binomial(j, r)`` coin
   for every distinct value of frequency ``j`` to get the sample profile.

The ``SF`` vector is never materialized for profile generation; only the
histogram of part sizes is built, which costs ``O(min(N, M))`` memory.
"""

from __future__ import annotations

import json
import logging
import math
import os
from collections.abc import Iterable, Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO

import numpy as np

from .profile import Profile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorConfig:
    B: float = 9
    B_prime: float = 4
    min_population: int = 10_000
    diversify: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.B < 0:
            raise ValueError(f"B must be >= 0, got {self.B}")
        if self.B_prime < 1:
            raise ValueError(f"B_prime must be >= 1, got {self.B_prime}")
        if self.min_population < 0:
            raise ValueError("min_population must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class TrainingPoint:
    """One labelled record ``((f, N, r), D)``."""

    f: Profile
    N: int
    r: float
    D: int

    def __post_init__(self):
        if not 0.0 < self.r <= 1.0:
            raise ValueError(f"sampling rate must lie in (0, 1], got {self.r}")
        if not self.f.ndv <= self.D <= self.N:
            raise ValueError(f"need ndv(f) <= D <= N, got {self.f.ndv}, {self.D}, {self.N}")
        if self.f.size > self.N:
            raise ValueError(f"sample size {self.f.size} exceeds population size {self.N}")

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "D": self.D, "r": self.r, "f": self.f.to_dict()})

    @classmethod
    def from_json(cls, line: str) -> TrainingPoint:
        obj = json.loads(line)
        try:
            return cls(f=Profile.from_dict(obj["f"]), N=int(obj["N"]), r=float(obj["r"]), D=int(obj["D"]))
        except KeyError as exc:
            raise ValueError(f"dataset record is missing field {exc}") from None


@dataclass
class GenerationStats:
    requested: int = 0
    generated: int = 0
    dropped_small: int = 0
    dropped_empty: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_small + self.dropped_empty

    @property
    def attempts(self) -> int:
        return self.generated + self.dropped


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for point ``index``; stable across processes."""
    return np.random.default_rng([int(seed), int(index)])


def sample_log_uniform(lo_exp: float, hi_exp: float, rng: np.random.Generator) -> int:
    """``round(10**u)`` with ``u ~ U(lo_exp, hi_exp)``, never below 1.

    A degenerate range ``lo_exp == hi_exp`` returns ``round(10**lo_exp)``.
    """
    if not lo_exp <= hi_exp or not math.isfinite(lo_exp) or not math.isfinite(hi_exp):
        raise ValueError(f"invalid exponent range [{lo_exp}, {hi_exp}]")
    u = lo_exp if lo_exp == hi_exp else rng.uniform(lo_exp, hi_exp)
    return max(1, round(10.0**u))


def _cuts(N: int, M: int, rng: np.random.Generator) -> tuple[str, np.ndarray]:
    # Stars and bars over N + M - 1 slots. Choosing the smaller of the two
    # sets (M - 1 bars or N stars) keeps memory at O(min(N, M)).
    slots = N + M - 1
    if M - 1 <= N:
        return "bars", np.sort(rng.choice(slots, size=M - 1, replace=False))
    return "stars", np.sort(rng.choice(slots, size=N, replace=False))


def random_fixed_sum(N: int, M: int, rng: np.random.Generator, *, sort: bool = True) -> np.ndarray:
    """Uniformly random composition of ``N`` into ``M`` non-negative integer parts.

    Every ordered composition is equally likely before sorting. With
    ``sort=True`` (the default) the parts come back in non-increasing order,
    which is the suffix-sum vector ``SF`` of a population profile.
    """
    if N < 0 or M < 1:
        raise ValueError(f"need N >= 0 and M >= 1, got N={N}, M={M}")
    if M == 1:
        return np.array([N], dtype=np.int64)
    if N == 0:
        return np.zeros(M, dtype=np.int64)
    kind, pos = _cuts(N, M, rng)
    if kind == "bars":
        parts = np.diff(np.concatenate(([-1], pos, [N + M - 1]))) - 1
    else:
        parts = np.bincount(pos - np.arange(N), minlength=M)
    parts = parts.astype(np.int64)
    return np.sort(parts)[::-1].copy() if sort else parts


def _part_histogram(N: int, M: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of positive part sizes of ``random_fixed_sum(N, M)``.

    Consumes the generator exactly like ``random_fixed_sum`` so both paths
    agree draw for draw.
    """
    if M == 1 or N == 0:
        return (np.array([N]), np.array([1])) if N > 0 else (np.array([], int), np.array([], int))
    kind, pos = _cuts(N, M, rng)
    if kind == "bars":
        parts = np.diff(np.concatenate(([-1], pos, [N + M - 1]))) - 1
        parts = parts[parts > 0]
    else:
        _, parts = np.unique(pos - np.arange(N), return_counts=True)
    return np.unique(parts, return_counts=True)


def _profile_from_part_histogram(values: np.ndarray, counts: np.ndarray) -> Profile:
    # Sorted descending, a run of c equal parts v followed by next value v'
    # contributes F[k] = v - v' at k = number of parts >= v.
    pairs = sorted(zip(values.tolist(), counts.tolist()), reverse=True)
    out: dict[int, int] = {}
    k = 0
    for t, (v, c) in enumerate(pairs):
        k += c
        nxt = pairs[t + 1][0] if t + 1 < len(pairs) else 0
        out[k] = v - nxt
    return Profile(out)


def profile_from_sf(sf: Iterable[int]) -> Profile:
    """Profile with ``F_i = SF_i - SF_{i+1}`` (``SF_{M+1} = 0``)."""
    sf = [int(x) for x in sf]
    if any(x < 0 for x in sf) or any(a < b for a, b in zip(sf, sf[1:])):
        raise ValueError("SF must be non-negative and non-increasing")
    sf.append(0)
    return Profile({i + 1: sf[i] - sf[i + 1] for i in range(len(sf) - 1)})


def generate_population_profile(
    cfg: GeneratorConfig, rng: np.random.Generator, *, with_draws: bool = False
) -> Profile | tuple[Profile, int, int]:
    """Random population profile; with ``with_draws`` also return ``(N, M)``."""
    N = sample_log_uniform(0, cfg.B, rng)
    M = sample_log_uniform(0, cfg.B, rng)
    prof = _profile_from_part_histogram(*_part_histogram(N, M, rng))
    return (prof, N, M) if with_draws else prof


def spike_frequency(n_prime: int, d_prime: int) -> int:
    """``i_p = round(N'/D')`` (half to even), at least 1."""
    return max(1, round(n_prime / d_prime))


def diversify(p: Profile, cfg: GeneratorConfig, rng: np.random.Generator) -> Profile:
    """Add ``D'`` values of frequency ``round(N'/D')`` to ``p``."""
    n_prime = sample_log_uniform(0, cfg.B, rng)
    d_prime = sample_log_uniform(0, math.log10(n_prime), rng)
    return p.add(spike_frequency(n_prime, d_prime), d_prime)


def binomial(K: int, r: float, rng: np.random.Generator) -> int:
    """Exact ``Binomial(K, r)`` variate.

    numpy's generator uses inversion when ``K * min(r, 1 - r) <= 30`` and the
    BTPE rejection sampler otherwise; neither approximates the tails.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {r}")
    if K < 0:
        raise ValueError(f"number of trials must be >= 0, got {K}")
    return int(rng.binomial(K, r))


def sample_profile(population: Profile, r: float, rng: np.random.Generator) -> Profile:
    """Profile of a Bernoulli(r) row sample, drawn with one binomial toss per distinct value."""
    if not 0.0 < r <= 1.0:
        raise ValueError(f"sampling rate must lie in (0, 1], got {r}")
    if r == 1.0:
        return population
    draws = [rng.binomial(j, r, size=cnt) for j, cnt in population.items()]
    if not draws:
        return Profile()
    k = np.concatenate(draws)
    freqs, counts = np.unique(k[k > 0], return_counts=True)
    return Profile(zip(freqs.tolist(), counts.tolist()))


def _draw_point(cfg: GeneratorConfig, rng: np.random.Generator) -> tuple[TrainingPoint | None, str]:
    pop = generate_population_profile(cfg, rng)
    if cfg.diversify:
        pop = diversify(pop, cfg, rng)
    if pop.size < cfg.min_population:
        return None, "small"
    r = float(10.0 ** rng.uniform(-cfg.B_prime, -1.0))
    f = sample_profile(pop, r, rng)
    if not f:
        return None, "empty"
    return TrainingPoint(f=f, N=pop.size, r=r, D=pop.ndv), ""


def generate_training_point(cfg: GeneratorConfig, rng: np.random.Generator) -> TrainingPoint | None:
    """One i.i.d. training point, or ``None`` if it is dropped.

    Points are dropped when the final population has fewer than
    ``cfg.min_population`` rows or when the drawn sample is empty.
    """
    return _draw_point(cfg, rng)[0]


def _point_at(args: tuple[GeneratorConfig, int]) -> tuple[TrainingPoint | None, str]:
    cfg, index = args
    return _draw_point(cfg, point_rng(cfg.seed, index))


def iter_points(
    cfg: GeneratorConfig,
    count: int,
    *,
    workers: int = 1,
    max_attempts: int | None = None,
    stats: GenerationStats | None = None,
    chunk: int = 256,
) -> Iterator[TrainingPoint]:
    """Yield up to ``count`` accepted points in index order.

    Point ``i`` always uses the stream ``point_rng(cfg.seed, i)``, so the
    output does not depend on ``workers``. Generation stops early after
    ``max_attempts`` indices (default ``100 * count + 1000``).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    stats = stats if stats is not None else GenerationStats()
    stats.requested = count
    if max_attempts is None:
        max_attempts = 100 * count + 1000
    if count == 0:
        return
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        start = 0
        while stats.generated < count and start < max_attempts:
            stop = min(start + chunk * max(workers, 1), max_attempts)
            jobs = [(cfg, i) for i in range(start, stop)]
            results = pool.map(_point_at, jobs, chunksize=chunk // 4 or 1) if pool else map(_point_at, jobs)
            for point, reason in results:
                if stats.generated >= count:
                    break
                if point is None:
                    if reason == "small":
                        stats.dropped_small += 1
                    else:
                        stats.dropped_empty += 1
                    continue
                stats.generated += 1
                yield point
            start = stop
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    if stats.generated < count:
        log.info("only %d of %d points accepted after %d attempts", stats.generated, count, stats.attempts)


def generate_dataset(
    cfg: GeneratorConfig,
    count: int,
    sink: IO[str] | str | os.PathLike,
    *,
    workers: int = 1,
    max_attempts: int | None = None,
) -> GenerationStats:
    """Write ``count`` accepted points as JSONL to ``sink``.

    On a write failure the file may hold a prefix of the dataset.
    """
    stats = GenerationStats()
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            return generate_dataset(cfg, count, fh, workers=workers, max_attempts=max_attempts)
    for point in iter_points(cfg, count, workers=workers, max_attempts=max_attempts, stats=stats):
        sink.write(point.to_json() + "\n")
    log.info("generated=%d dropped_small=%d dropped_empty=%d", stats.generated, stats.dropped_small, stats.dropped_empty)
    return stats


def read_dataset(path: str | os.PathLike) -> list[TrainingPoint]:
    with open(path, encoding="utf-8") as fh:
        return [TrainingPoint.from_json(line) for line in fh if line.strip()]
