import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qgan.metrics import ks_bound, ks_statistic, relative_entropy


def test_bound_at_500():
    assert round(ks_bound(500, 0.05), 4) == 0.0859


def test_ks_identical_sets():
    res = ks_statistic([0, 1, 2], [0, 1, 2])
    assert res.statistic == 0 and res.accepted


def test_ks_disjoint_sets():
    assert ks_statistic([0, 0, 0], [7, 7, 7]).statistic == 1


def test_ks_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.integers(0, 8, rng.integers(5, 400))
        b = rng.integers(0, 8, rng.integers(5, 400))
        assert ks_statistic(a, b).statistic == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_ks_bound_uses_smaller_size():
    res = ks_statistic(np.zeros(500), np.zeros(2000))
    assert res.sample_size == 500
    assert res.bound == pytest.approx(ks_bound(500))


def test_ks_empty_raises():
    with pytest.raises(ValueError):
        ks_statistic([], [1])


def test_re_examples():
    assert relative_entropy([0.5, 0.5], [0.5, 0.5]) == 0
    assert relative_entropy([1, 0], [0.5, 0.5]) == pytest.approx(np.log(2))
    assert relative_entropy(np.eye(8)[0], np.full(8, 1 / 8)) == pytest.approx(2.0794, abs=1e-4)
    assert relative_entropy([0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.1308, abs=1e-4)


def test_re_smoothing_keeps_value_finite():
    value = relative_entropy([0.5, 0.5], [1.0, 0.0])
    assert np.isfinite(value) and value > 5


def test_re_length_mismatch():
    with pytest.raises(ValueError):
        relative_entropy([1.0], [0.5, 0.5])


def test_re_matches_scipy_entropy():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p, q = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
        assert relative_entropy(p, q) == pytest.approx(stats.entropy(p, q), rel=1e-12)


def test_re_nonnegative_on_random_pairs():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        alpha = rng.uniform(0.05, 2)
        p, q = rng.dirichlet(np.full(8, alpha)), rng.dirichlet(np.full(8, alpha))
        assert relative_entropy(p, q) >= 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=1, max_size=60), st.lists(st.integers(0, 7), min_size=1, max_size=60))
def test_ks_properties(a, b):
    res = ks_statistic(a, b)
    assert 0 <= res.statistic <= 1
    assert res.statistic == ks_statistic(b, a).statistic
    # acceptance is monotone in the statistic
    if res.accepted:
        assert all(s <= res.bound for s in [res.statistic * f for f in (0.0, 0.5, 1.0)])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=16))
def test_re_self_is_zero(ws):
    p = np.array(ws)
    if p.sum() == 0:
        return
    assert relative_entropy(p, p) == pytest.approx(0, abs=1e-12)
