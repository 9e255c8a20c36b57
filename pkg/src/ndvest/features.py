"""Log-domain feature vector for a (sample profile, population size) pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profile import Profile

FEATURE_NAMES_HEAD = ("N", "n", "n_c", "d", "d_c", "inv_r")


@dataclass(frozen=True)
class FeatureConfig:
    m: int = 100
    eps: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")

    @property
    def n_features(self) -> int:
        return self.m + 6


def raw_features(f: Profile, N: int, m: int) -> np.ndarray:
    """``[N, n, n_c, d, d_c, 1/r, f_1, ..., f_m]`` before the log transform.

    ``n_c`` and ``d_c`` collect the sample size and distinct count of the
    frequencies above ``m``; missing ``f_i`` are zero.
    """
    n, d = f.size, f.ndv
    if n < 1:
        raise ValueError("cannot featurize an empty sample profile")
    if N < n:
        raise ValueError(f"population size {N} is smaller than sample size {n}")
    x = np.zeros(m + 6)
    n_c = d_c = 0
    for j, c in f.items():
        if j <= m:
            x[5 + j] = c
        else:
            n_c += j * c
            d_c += c
    x[:6] = (N, n, n_c, d, d_c, N / n)
    return x


def featurize(f: Profile, N: int, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    return np.log(raw_features(f, N, cfg.m) + cfg.eps)


def featurize_many(profiles, populations, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    return np.stack([featurize(f, N, cfg) for f, N in zip(profiles, populations)])
