import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndvest.baselines import EstimatorId, chao, chao_lee, estimate_baseline, gee, shlosser
from ndvest.profile import Profile

mpmath.mp.dps = 50


# Literal transcriptions over the dense range i = 1..n, evaluated in exact
# rational arithmetic (GEE needs one high-precision square root).

def dense(f):
    n = f.size
    return n, [Fraction(f.get(i)) for i in range(0, n + 1)]


def oracle_gee(f, r):
    n, F = dense(f)
    r = Fraction(r)
    return mpmath.sqrt(mpmath.mpf(1 / r.numerator) * r.denominator) * F[1] + float(sum(F[2:]))


def oracle_chao(f):
    n, F = dense(f)
    return sum(F[1:]) + F[1] ** 2 / (2 * F[2])


def oracle_chao_lee(f):
    n, F = dense(f)
    d = sum(F[1:])
    C = 1 - F[1] / n
    g2 = max(d / C * sum(i * (i - 1) * F[i] for i in range(1, n + 1)) / (n * (n - 1)) - 1, Fraction(0))
    return d / C + n * (1 - C) / C * g2


def oracle_shlosser(f, r):
    n, F = dense(f)
    r = Fraction(r)
    num = sum((1 - r) ** i * F[i] for i in range(1, n + 1))
    den = sum(i * r * (1 - r) ** (i - 1) * F[i] for i in range(1, n + 1))
    return sum(F[1:]) + F[1] * num / den


def close(a, b, rel=1e-12):
    return abs(float(a) - float(b)) <= rel * abs(float(b))


# --- worked examples ---

def test_gee_examples():
    assert gee(Profile({1: 4, 2: 3}), 1.0) == 7
    assert gee(Profile({1: 4, 2: 3}), 0.25) == 11
    assert gee(Profile({2: 5}), 0.001) == 5
    with pytest.raises(ValueError):
        gee(Profile({1: 1}), 0.0)
    with pytest.raises(ValueError):
        gee(Profile(), 0.5)


def test_chao_examples():
    assert chao(Profile({1: 2, 2: 1})) == 5
    assert chao(Profile({3: 4, 5: 1})) == 5
    f = Profile({1: 3})
    assert chao(f, 0.25) == gee(f, 0.25) == 6
    with pytest.raises(ValueError):
        chao(f, 0.25, strict=True)
    with pytest.raises(ValueError):
        chao(f)


def test_chao_lee_examples():
    assert chao_lee(Profile({2: 3}), 100) == 3
    f = Profile({1: 2, 2: 1})
    assert chao_lee(f, 40) == 6
    singletons = Profile({1: 5})
    assert chao_lee(singletons, 500) == gee(singletons, 5 / 500)
    with pytest.raises(ValueError):
        chao_lee(Profile({1: 1}), 10)


def test_shlosser_examples():
    assert shlosser(Profile({1: 2}), 0.5) == 4
    assert shlosser(Profile({2: 3, 4: 1}), 0.01) == 4
    assert shlosser(Profile({1: 3, 2: 2}), 1.0) == 5


def test_estimate_baseline_uses_sample_fraction():
    f = Profile({1: 4, 2: 3})
    value, fell_back = estimate_baseline("gee", f, 28)
    assert value == pytest.approx(math.sqrt(2.8) * 4 + 3, rel=1e-15)
    assert not fell_back
    assert estimate_baseline(EstimatorId.CHAO, Profile({1: 3}), 12) == (gee(Profile({1: 3}), 0.25), True)
    with pytest.raises(ValueError):
        estimate_baseline("learned", f, 28)
    with pytest.raises(ValueError):
        estimate_baseline("gee", f, 5)


def test_estimator_id_parsing():
    assert EstimatorId.parse("Chao-Lee") is EstimatorId.CHAO_LEE
    assert EstimatorId.parse("chao_lee") is EstimatorId.CHAO_LEE
    with pytest.raises(ValueError):
        EstimatorId.parse("hybgee")


# --- properties ---

small_profiles = st.dictionaries(st.integers(1, 12), st.integers(1, 9), min_size=1, max_size=6).map(Profile)
rates = st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000), max_denominator=1000)


@given(small_profiles, rates)
@settings(max_examples=200)
def test_formulas_match_literal_transcription(f, r):
    assert close(gee(f, float(r)), oracle_gee(f, r))
    assert close(shlosser(f, float(r)), oracle_shlosser(f, r))
    if f.get(2):
        assert close(chao(f), oracle_chao(f))
    if f.size >= 2 and f.get(1) < f.size:
        assert close(chao_lee(f, 10**6), oracle_chao_lee(f))


@given(small_profiles, st.floats(1e-4, 1.0))
def test_estimates_at_least_sample_ndv(f, r):
    d = f.ndv
    assert gee(f, r) >= d
    assert chao(f, r) >= d
    assert shlosser(f, r) >= d
    if f.size >= 2:
        assert chao_lee(f, math.ceil(f.size / r)) >= d * (1 - 1e-12)


@given(st.dictionaries(st.integers(1, 10**6), st.integers(1, 10**6), min_size=1, max_size=20).map(Profile))
def test_gee_exact_on_full_sample(f):
    assert gee(f, 1.0) == f.ndv
