"""Closed-form sample-based NDV estimators used as baselines.

All take a sample profile ``f``; the sampling rate is ``r = n / N``.
"""

from __future__ import annotations

import math
from enum import Enum

from .profile import Profile


class EstimatorId(str, Enum):
    GEE = "gee"
    CHAO = "chao"
    CHAO_LEE = "chaolee"
    SHLOSSER = "shlosser"
    LEARNED = "learned"

    @classmethod
    def parse(cls, name: str) -> EstimatorId:
        key = name.strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown estimator {name!r}; choose from {', '.join(m.value for m in cls)}")


def _check(f: Profile) -> None:
    if not f:
        raise ValueError("sample profile is empty")


def gee(f: Profile, r: float) -> float:
    """Guaranteed-error estimator: ``sqrt(1/r) f_1 + sum_{i>=2} f_i``."""
    _check(f)
    if not 0.0 < r <= 1.0:
        raise ValueError(f"sampling rate must lie in (0, 1], got {r}")
    f1 = f.get(1)
    return math.sqrt(1.0 / r) * f1 + (f.ndv - f1)


def _chao(f: Profile, r: float | None, strict: bool) -> tuple[float, bool]:
    _check(f)
    f1, f2 = f.get(1), f.get(2)
    if f2 > 0:
        return f.ndv + f1 * f1 / (2.0 * f2), False
    if f1 == 0:
        return float(f.ndv), False
    if strict:
        raise ValueError("Chao estimate is unbounded when f_2 = 0 and f_1 > 0")
    if r is None:
        raise ValueError("sampling rate is required for the GEE fallback when f_2 = 0")
    return gee(f, r), True


def chao(f: Profile, r: float | None = None, *, strict: bool = False) -> float:
    """Chao (1984): ``d + f_1^2 / (2 f_2)``.

    When ``f_2 = 0`` the estimate is unbounded; GEE at rate ``r`` is returned
    instead unless ``strict`` is set, which raises ``ValueError``.
    """
    return _chao(f, r, strict)[0]


def _chao_lee(f: Profile, N: int) -> tuple[float, bool]:
    _check(f)
    n, d = f.size, f.ndv
    if n < 2:
        raise ValueError(f"Chao-Lee needs a sample of at least 2 rows, got {n}")
    if N < n:
        raise ValueError(f"population size {N} is smaller than sample size {n}")
    coverage = 1.0 - f.get(1) / n
    if coverage <= 0.0:
        return gee(f, n / N), True
    pairs = sum(i * (i - 1) * c for i, c in f.items())
    cv2 = max((d / coverage) * pairs / (n * (n - 1)) - 1.0, 0.0)
    return d / coverage + n * (1.0 - coverage) / coverage * cv2, False


def chao_lee(f: Profile, N: int) -> float:
    r"""Coverage-based estimator of Chao and Lee (JASA 87, 1992).

    .. math::

       \hat C = 1 - f_1/n, \quad
       \hat\gamma^2 = \max\Big(\frac{d}{\hat C}
           \frac{\sum_i i(i-1) f_i}{n(n-1)} - 1, 0\Big), \quad
       \hat D = \frac{d}{\hat C} + \frac{n (1 - \hat C)}{\hat C} \hat\gamma^2

    An all-singleton sample has zero estimated coverage; GEE is used then.
    """
    return _chao_lee(f, N)[0]


def _shlosser(f: Profile, r: float) -> tuple[float, bool]:
    _check(f)
    if not 0.0 < r <= 1.0:
        raise ValueError(f"sampling rate must lie in (0, 1], got {r}")
    q = 1.0 - r
    num = sum(q**i * c for i, c in f.items())
    den = sum(i * r * q ** (i - 1) * c for i, c in f.items())
    f1 = f.get(1)
    if den == 0.0:
        return float(f.ndv), True
    return f.ndv + f1 * num / den, False


def shlosser(f: Profile, r: float) -> float:
    """Shlosser (1981): ``d + f_1 sum_i (1-r)^i f_i / sum_i i r (1-r)^(i-1) f_i``.

    Falls back to ``d`` if the denominator vanishes.
    """
    return _shlosser(f, r)[0]


def estimate_baseline(method: EstimatorId | str, f: Profile, N: int) -> tuple[float, bool]:
    """Run a baseline with ``r = n / N``; returns ``(estimate, used_fallback)``."""
    method = EstimatorId.parse(method) if isinstance(method, str) else method
    if f.size > N:
        raise ValueError(f"sample size {f.size} exceeds population size {N}")
    r = f.size / N
    if method is EstimatorId.GEE:
        return gee(f, r), False
    if method is EstimatorId.CHAO:
        return _chao(f, r, False)
    if method is EstimatorId.CHAO_LEE:
        return _chao_lee(f, N)
    if method is EstimatorId.SHLOSSER:
        return _shlosser(f, r)
    raise ValueError(f"{method.value} is not a closed-form baseline")
