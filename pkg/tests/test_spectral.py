import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from srlp_lab import (
    DiscreteMeasure,
    NotConverged,
    c_n_sequence,
    eigen_decompose,
    estimate_eta,
    jacobi_truncation,
    quadrature_measure,
    whitehurst_check,
)
from srlp_lab.spectral import JacobiTruncation, eigenvalues, finite_horizon_edge
from srlp_lab.transitions import n_step_many

from conftest import constant

# band edge r + 2 sqrt(pq) of the constant drift_out walk
DRIFT_OUT_EDGE = 0.4 + 2 * math.sqrt(0.08)


def test_jacobi_truncation_small(periodic):
    J = jacobi_truncation(periodic, 2)
    assert np.array_equal(J.diagonal, [0.0, 0.0])
    # p_0 = 1 under the index-0 rule, so the entry is sqrt(p_0 q_1) = sqrt(1/2)
    assert J.offdiagonal == pytest.approx([math.sqrt(0.5)])
    J1 = jacobi_truncation(constant(0.3, 0.4, 0.3), 1)
    assert J1.diagonal == pytest.approx([0.7]) and J1.offdiagonal.size == 0


def test_jacobi_offdiagonal_definition(walks):
    for w in walks.values():
        J = jacobi_truncation(w, 3)
        assert J.offdiagonal[1] == pytest.approx(math.sqrt(w.p(1) * w.q(2)), rel=1e-15)


def test_eigen_decompose_tiny(periodic):
    J = JacobiTruncation(1, np.array([0.4]), np.array([]), np.array([]))
    lam, w = eigen_decompose(J)
    assert lam == pytest.approx([0.4]) and w == pytest.approx([1.0])
    lam, w = eigen_decompose(jacobi_truncation(periodic, 2))
    assert lam == pytest.approx([-math.sqrt(0.5), math.sqrt(0.5)], abs=1e-13)
    assert w == pytest.approx([0.5, 0.5], abs=1e-12)


def test_periodic_spectrum_symmetric(periodic):
    lam, w = eigen_decompose(jacobi_truncation(periodic, 40))
    assert np.max(np.abs(lam + lam[::-1])) < 1e-10
    assert np.max(np.abs(w - w[::-1])) < 1e-10


@pytest.mark.parametrize("name", ["symmetric_hold", "drift_out", "rational_drift", "edge_recurrent"])
def test_eigen_decompose_matches_scipy(walks, name):
    J = jacobi_truncation(walks[name], 120)
    lam, w = eigen_decompose(J)
    ref_lam, vec = eigh_tridiagonal(J.diagonal, J.offdiagonal)
    assert np.max(np.abs(lam - ref_lam)) < 1e-12
    assert np.max(np.abs(w - vec[0] ** 2)) < 1e-10
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-13)


def test_estimate_eta_constant_walks(symmetric_hold, drift_out):
    assert estimate_eta(symmetric_hold).value == pytest.approx(1.0, abs=1e-8)
    est = estimate_eta(drift_out)
    assert est.value == pytest.approx(DRIFT_OUT_EDGE, abs=1e-8)
    J = jacobi_truncation(drift_out, 5000)
    oracle = eigvalsh_tridiagonal(J.diagonal, J.offdiagonal, select="i", select_range=(4999, 4999))[0]
    assert abs(est.value - oracle) < 1e-6


def test_estimate_eta_recurrent_edge(walks):
    # fading_hold has bounded p_j and L diverges, so its edge is 1
    assert estimate_eta(walks["fading_hold"]).value == pytest.approx(1.0, abs=1e-8)


def test_estimate_eta_edge_recurrent_walk(edge_recurrent):
    assert estimate_eta(edge_recurrent).value == pytest.approx(0.8, abs=1e-6)


def test_estimate_eta_not_converged_carries_partial(drift_out):
    with pytest.raises(NotConverged) as info:
        estimate_eta(drift_out, tol=1e-15, N0=16, Nmax=64)
    est = info.value.estimate
    assert est.truncation_orders == [16, 32, 64]
    assert est.raw < DRIFT_OUT_EDGE


def test_largest_zeros_increase(drift_out):
    est = estimate_eta(drift_out)
    assert np.all(np.diff(est.largest_zeros) > 0)


def test_finite_horizon_edge_below_eta(drift_out):
    th = finite_horizon_edge(drift_out, 4096)
    assert DRIFT_OUT_EDGE - 1e-5 < th < DRIFT_OUT_EDGE


def test_quadrature_small_orders(walks):
    for w in walks.values():
        m1 = quadrature_measure(w, 1)
        assert m1.nodes == pytest.approx([w.r(0)]) and m1.weights == pytest.approx([1.0])
        m = quadrature_measure(w, 30)
        assert m.moment(1) == pytest.approx(w.r(0), abs=1e-10)
        P = n_step_many(w, 0, [59], [0])[0, 0]
        assert abs(m.moment(59) - P) <= 1e-9


def test_measure_json_round_trip(drift_out):
    m = quadrature_measure(drift_out, 12)
    back = DiscreteMeasure.from_json(m.to_json())
    assert np.array_equal(back.nodes, m.nodes) and back.exactness_degree == 23


def test_c_n_periodic_and_positive(periodic):
    c = c_n_sequence(quadrature_measure(periodic, 40), 60)
    assert np.max(np.abs(c - 1.0)) < 1e-9
    pos = DiscreteMeasure(np.array([0.2, 0.7]), np.array([0.5, 0.5]), 2)
    assert np.all(c_n_sequence(pos, 10) == 0.0)


def test_c_n_decays_for_symmetric_hold(symmetric_hold):
    c = c_n_sequence(quadrature_measure(symmetric_hold, 60), 200)
    assert c[200] < 1e-6
    assert np.all(np.diff(c[1:]) < 0)


def test_first_moment_integrals(walks, symmetric_hold, periodic):
    for w in walks.values():
        m = quadrature_measure(w, 60)
        vals = whitehurst_check(w, m, 59)
        assert vals[0] == pytest.approx(w.r(0), abs=1e-13)
        # exact value r_n / pi_n of the integral
        for n in (1, 10, 40):
            assert vals[n] == pytest.approx(w.r(n) * math.exp(-w.log_pi(n)), rel=1e-8, abs=1e-12)
    assert np.max(np.abs(whitehurst_check(periodic, quadrature_measure(periodic, 60), 59))) < 1e-10
    assert whitehurst_check(symmetric_hold, quadrature_measure(symmetric_hold, 60), 10)[10] >= 0


triples = st.tuples(st.floats(0.05, 0.9), st.floats(0.0, 0.9)).filter(
    lambda t: t[0] + t[1] < 0.95
).map(lambda t: (t[0], t[1], 1.0 - t[0] - t[1]))


@given(triples, st.integers(2, 80))
def test_eigenvalues_match_scipy_property(t, N):
    J = jacobi_truncation(constant(*t), N)
    ref = eigvalsh_tridiagonal(J.diagonal, J.offdiagonal)
    assert np.max(np.abs(eigenvalues(J) - ref)) < 1e-11


@given(triples, st.integers(2, 40))
def test_quadrature_weights_form_probability(t, N):
    m = quadrature_measure(constant(*t), N)
    assert np.all(m.weights >= 0)
    assert math.fsum(m.weights) == pytest.approx(1.0, abs=1e-13)
    assert np.all((m.nodes >= -1 - 1e-12) & (m.nodes <= 1 + 1e-12))
