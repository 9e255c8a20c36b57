"""Lower bounds on the ratio error of any sample-based NDV estimator.

``global_lower_bound`` is the worst case over all columns of size ``N``.
``instance_lower_bound`` conditions on the observed sample: two columns that
share every value seen in the sample but differ in NDV (``hard_instance_pair``)
produce indistinguishable samples with probability ``gamma``, so no estimate
can beat the geometric midpoint of their NDVs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundParams:
    gamma: float = 0.6
    c: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")


def global_lower_bound(N: int, n: int, gamma: float) -> float:
    """``sqrt((N - n) / (2n) * ln(1/gamma))``."""
    if not 0 < n <= N:
        raise ValueError(f"need 0 < n <= N, got n={n}, N={N}")
    if not math.exp(-n) < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (e^-n, 1], got {gamma}")
    return math.sqrt((N - n) / (2 * n) * math.log(1 / gamma))


def coverage_holds(d: int, n: int, c: float) -> bool:
    """Whether ``n >= d (ln d + c)``, the regime where the instance bound applies."""
    return n >= d * (math.log(d) + c)


def _spread(n: int, N: int, params: BoundParams) -> int:
    term = (N - n) / (4 * n) * (math.log(1 / params.gamma) - 2 / math.exp(params.c))
    # gamma close to 1 makes the bracket negative; no pair below d exists.
    return max(math.floor(term), 0)


def hard_instance_pair(d: int, n: int, N: int, params: BoundParams = BoundParams()) -> tuple[int, int]:
    """NDVs ``(D1, D2)`` of two columns a size-``n`` sample cannot tell apart.

    Raises ``ValueError`` naming the violated condition.
    """
    if d < 1 or n < d:
        raise ValueError(f"need 1 <= d <= n, got d={d}, n={n}")
    if not N > n:
        raise ValueError(f"condition N > n violated: N={N}, n={n}")
    if not coverage_holds(d, n, params.c):
        raise ValueError(f"condition n >= d(ln d + c) violated: n={n}, d(ln d + c)={d * (math.log(d) + params.c):.6g}")
    if params.gamma < math.exp(-4 * n - 2 * math.exp(-params.c)):
        raise ValueError(f"condition gamma >= e^(-4n - 2e^-c) violated: gamma={params.gamma}")
    return _spread(n, N, params) + d, d


def instance_lower_bound(d: int, n: int, N: int, params: BoundParams = BoundParams()) -> float:
    """Instance-wise bound ``b(d, n)``; 1 when ``n < d (ln d + c)``."""
    if d < 1 or n < d or N < n:
        raise ValueError(f"need 1 <= d <= n <= N, got d={d}, n={n}, N={N}")
    if not coverage_holds(d, n, params.c):
        return 1.0
    return math.sqrt((_spread(n, N, params) + d) / d)
