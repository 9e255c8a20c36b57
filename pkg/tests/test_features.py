import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ndvest.features import FeatureConfig, featurize, raw_features
from ndvest.profile import Profile


def test_worked_example():
    f = Profile({1: 2, 3: 1})
    raw = raw_features(f, 100, 3)
    assert raw.tolist() == [100, 5, 0, 3, 0, 20, 2, 0, 1]
    x = featurize(f, 100, FeatureConfig(m=3, eps=1.0))
    np.testing.assert_array_equal(x, np.log([101, 6, 1, 4, 1, 21, 3, 1, 2]))


def test_cutoff_features():
    raw = raw_features(Profile({1: 1, 5: 2}), 50, 2)
    assert raw[2] == 10 and raw[4] == 2  # n_c, d_c
    assert raw[6:].tolist() == [1, 0]


def test_full_sample_inverse_rate_is_one():
    raw = raw_features(Profile({1: 7}), 7, 4)
    assert raw[5] == 1.0


def test_errors():
    with pytest.raises(ValueError):
        featurize(Profile(), 10)
    with pytest.raises(ValueError):
        featurize(Profile({1: 5}), 4)
    with pytest.raises(ValueError):
        FeatureConfig(m=0)
    with pytest.raises(ValueError):
        FeatureConfig(eps=0)


profiles = st.dictionaries(st.integers(1, 300), st.integers(1, 1000), min_size=1, max_size=12).map(Profile)


@given(profiles, st.integers(0, 10**7), st.integers(1, 150))
def test_shape_finiteness_and_reconstruction(f, extra, m):
    N = f.size + extra
    x = featurize(f, N, FeatureConfig(m=m))
    assert x.shape == (m + 6,)
    assert np.all(np.isfinite(x))
    if max(f) <= m:
        raw = np.rint(np.exp(x) - 1.0)
        assert raw[1] == f.size and raw[3] == f.ndv
        assert sum(j * raw[5 + j] for j in range(1, m + 1)) == f.size


@given(profiles, st.integers(0, 10**6), st.integers(1, 10**6))
def test_monotone_in_population_size(f, extra, step):
    N = f.size + extra
    a, b = featurize(f, N), featurize(f, N + step)
    assert b[0] > a[0] and b[5] > a[5]
    np.testing.assert_array_equal(np.delete(a, [0, 5]), np.delete(b, [0, 5]))
