import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srlp_lab import (
    NonComparable,
    ResourceLimit,
    WindowedKernel,
    km_representation_residual,
    n_step,
    quadrature_measure,
    ratio_trace,
)
from srlp_lab.transitions import default_ratio_grid, n_step_many, resource_cap

from conftest import constant


def dense_power(walk, n, W):
    """Independent oracle: dense matrix power of the W x W corner."""
    P = WindowedKernel.from_walk(walk, W).dense()
    return np.linalg.matrix_power(P, n)


def test_basic_values(walks, periodic):
    for w in walks.values():
        assert n_step(w, 2, 2, 0) == 1.0 and n_step(w, 2, 3, 0) == 0.0
        assert n_step(w, 0, 0, 1) == pytest.approx(w.r(0))
    assert n_step(periodic, 0, 0, 2) == pytest.approx(0.5)


def test_matches_dense_power(walks):
    for w in walks.values():
        ref = dense_power(w, 60, 80)
        got = n_step_many(w, 3, [60], list(range(10)))[0]
        assert np.allclose(got, ref[3, :10], rtol=1e-12, atol=1e-300)


def test_exact_mode_fractions():
    w = constant("1/3", "1/3", "1/3")
    v = n_step(w, 0, 0, 2)
    assert isinstance(v, Fraction)
    # paths 0-0-0 and 0-1-0 with r_0 = 2/3 under the index-0 rule
    assert v == Fraction(2, 3) ** 2 + Fraction(1, 3) ** 2
    assert float(v) == pytest.approx(n_step(w, 0, 0, 2, exact=False), rel=1e-15)


def test_row_sums_of_window(walks):
    for w in walks.values():
        s = WindowedKernel.from_walk(w, 50).row_sums()
        assert np.allclose(s[:-1], 1.0, atol=1e-15)


def test_long_run_does_not_underflow(drift_out):
    v = n_step(drift_out, 0, 0, 6000)
    assert 0.0 < v < 1e-90


def test_resource_cap(monkeypatch, symmetric_hold):
    with pytest.raises(ResourceLimit):
        n_step(symmetric_hold, 0, 0, 500, cap=100)
    monkeypatch.setenv("SRLP_LAB_CAP", "50")
    assert resource_cap() == 50
    with pytest.raises(ResourceLimit):
        n_step(symmetric_hold, 0, 0, 60)


def test_km_residual(walks, periodic):
    for w in walks.values():
        m = quadrature_measure(w, 20)
        assert km_representation_residual(w, m, 0, 0, 0) < 1e-12
        for n in (1, 7, 39):
            assert km_representation_residual(w, m, 0, 0, n) <= 1e-9
        assert km_representation_residual(w, m, 2, 5, 20) <= 1e-9
    m = quadrature_measure(periodic, 20)
    assert n_step(periodic, 0, 0, 7) == 0.0
    assert abs(np.sum(m.weights * m.nodes**7)) < 1e-12


def test_ratio_trace_examples(symmetric_hold, periodic):
    tr = ratio_trace(symmetric_hold, 0, 0, 0, 0, n_grid=[5, 50])
    assert tr.ratios == [1.0, 1.0] and tr.predicted_limit == pytest.approx(1.0)
    tr = ratio_trace(symmetric_hold, 0, 1, 0, 0, n_grid=[128, 2000], eta=1.0)
    assert abs(tr.ratios[-1] - 1.0) < 0.05
    assert abs(tr.ratios[-1] - 1.0) < abs(tr.ratios[0] - 1.0)
    with pytest.raises(NonComparable):
        ratio_trace(periodic, 0, 0, 0, 1)


def test_ratio_trace_predicted_limit_transient(drift_out):
    # pi_j Q_i(eta) Q_j(eta) / pi_l Q_k(eta) Q_l(eta) with i=k=0, l=0, j=1
    eta = 0.4 + 2 * math.sqrt(0.08)
    tr = ratio_trace(drift_out, 0, 1, 0, 0, n_grid=[64, 4096], eta=eta)
    expected = math.exp(drift_out.log_pi(1)) * (eta - drift_out.r(0)) / drift_out.p(0)
    assert tr.predicted_limit == pytest.approx(expected, rel=1e-12)
    assert abs(tr.ratios[-1] - expected) < abs(tr.ratios[0] - expected)


def test_ratio_trace_csv(symmetric_hold):
    tr = ratio_trace(symmetric_hold, 0, 1, 0, 0, n_grid=[16, 17], eta=1.0)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "n,ratio,predicted_limit" and len(lines) == 3


def test_default_grid():
    assert default_ratio_grid(64) == [16, 17, 32, 33, 64]


@given(st.integers(0, 40), st.integers(0, 6), st.integers(0, 6))
def test_chapman_kolmogorov_and_reversibility(n, i, j):
    w = constant(0.35, 0.25, 0.4)
    # pi_i P_ij(n) = pi_j P_ji(n)
    a = math.exp(w.log_pi(i)) * n_step(w, i, j, n)
    b = math.exp(w.log_pi(j)) * n_step(w, j, i, n)
    assert a == pytest.approx(b, rel=1e-11, abs=1e-300)
    row = n_step_many(w, i, [n], list(range(i + n + 1)))[0]
    assert math.fsum(row) == pytest.approx(1.0, abs=1e-12)
