import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from varsnn.errors import StatisticsError
from varsnn.stats import betainc, five_number, welch_t_test

# values frozen from scipy
BETAINC_ORACLE = [
    ((0.5, 0.5, 0.3), 0.36901011956554536),
    ((4.0, 0.5, 0.9), 0.37337491740225975),
    ((50.0, 0.5, 0.999), 0.7523690199653766),
    ((2.5, 7.0, 0.2), 0.36749651990402316),
    ((0.1, 10.0, 0.01), 0.8244896709066988),
]


@pytest.mark.parametrize("args, expected", BETAINC_ORACLE)
def test_betainc_frozen(args, expected):
    assert betainc(*args) == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_welch_equal_spread():
    t, p = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert t == pytest.approx(-1.0, abs=1e-12)
    assert p == pytest.approx(0.34659350708733416, abs=1e-10)


def test_welch_unequal_samples():
    t, p = welch_t_test([1.1, 2.5, 2.9, 4.4, 7.0], [3.0, 3.5, 5.9, 6.1, 6.8])
    assert t == pytest.approx(-1.1766802817509276, abs=1e-10)
    assert p == pytest.approx(0.27558041141761264, abs=1e-10)


def test_welch_unequal_sizes_and_variances():
    t, p = welch_t_test([10, 12, 14, 15, 19, 22], [3.0, 3.1, 2.9, 3.05])
    assert t == pytest.approx(6.7691430033549285, abs=1e-10)
    assert p == pytest.approx(0.0010646486048486302, abs=1e-10)


def test_identical_samples():
    assert welch_t_test([3.0, 3.0, 3.0], [3.0, 3.0]) == (0.0, 1.0)


def test_zero_variance_different_means_rejected():
    with pytest.raises(StatisticsError):
        welch_t_test([1.0, 1.0], [2.0, 2.0])


@pytest.mark.parametrize("a, b", [([1.0], [1.0, 2.0]), ([1.0, float("nan")], [1.0, 2.0]), ([], [])])
def test_bad_samples_rejected(a, b):
    with pytest.raises(StatisticsError):
        welch_t_test(a, b)


samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@settings(max_examples=200, deadline=None)
@given(samples, samples)
def test_welch_symmetric_and_matches_scipy(a, b):
    if np.var(a) == 0 and np.var(b) == 0:
        return
    t1, p1 = welch_t_test(a, b)
    t2, p2 = welch_t_test(b, a)
    assert t1 == pytest.approx(-t2, rel=1e-12, abs=1e-12) and p1 == pytest.approx(p2, abs=1e-12)
    assert 0.0 <= p1 <= 1.0
    ref = stats.ttest_ind(a, b, equal_var=False)
    if math.isfinite(ref.pvalue):
        assert p1 == pytest.approx(ref.pvalue, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.05, 200), st.floats(0.05, 50), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(float(special.betainc(a, b, x)), abs=1e-10)


def test_five_number():
    assert five_number([5, 1, 3, 2, 4]) == (1.0, 2.0, 3.0, 4.0, 5.0)
    with pytest.raises(StatisticsError):
        five_number([])
