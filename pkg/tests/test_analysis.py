import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srlp_lab import (
    DiagnoseConfig,
    diagnose,
    series_L,
    series_L_eta,
    series_M1,
    series_M_theta,
    series_r_over_p,
)
from srlp_lab.analysis import SCHEMA_VERSION, series_terms, theta_sweep
from srlp_lab.serialize import dumps
from srlp_lab.spectral import finite_horizon_edge

from conftest import constant

CPS = [2**k for k in range(6, 15)]
DRIFT_OUT_EDGE = 0.4 + 2 * math.sqrt(0.08)


def brute_M1_terms(walk, N):
    """Independent oracle: the first-moment terms by plain summation."""
    p, r, _ = walk.arrays(N + 1)
    pi = np.exp(walk.log_pi_array(N + 1))
    return [sum(r[k] * pi[k] for k in range(j + 1)) / (p[j] * pi[j]) for j in range(N + 1)]


def test_m1_terms_match_brute_force(walks):
    for name in ("symmetric_hold", "fading_hold", "edge_recurrent"):
        w = walks[name]
        got = np.exp(series_terms(w, "M1", 200))
        assert np.allclose(got, brute_M1_terms(w, 200), rtol=1e-12)


def test_m1_examples(periodic, symmetric_hold, edge_recurrent):
    rep = series_M1(periodic, CPS)
    assert rep.verdict == "converges" and all(s == 0.0 for _, s in rep.checkpoints)
    rep = series_M1(symmetric_hold, CPS)
    assert rep.verdict == "diverges"
    # each term is at least r/p = 4/3
    assert rep.checkpoints[-1][1] >= 4 / 3 * CPS[-1]
    rep = series_M1(edge_recurrent, CPS)
    assert rep.verdict == "converges" and "geometric" in rep.evidence
    assert rep.tail_bound < 1e-9 * rep.checkpoints[-1][1]


def test_l_examples(symmetric_hold, drift_out, walks):
    assert series_L(symmetric_hold, CPS).verdict == "diverges"
    rep = series_L(drift_out, CPS)
    assert rep.verdict == "converges" and "0.5" in rep.evidence
    assert series_L(walks["drift_in"], CPS).verdict == "diverges"


def test_l_eta_examples(symmetric_hold, drift_out, edge_recurrent):
    assert series_L_eta(symmetric_hold, 1.0, CPS).verdict == "diverges"
    rep = series_L_eta(drift_out, DRIFT_OUT_EDGE, CPS)
    plain = series_L(drift_out, CPS)
    assert all(a >= b for a, b in zip(rep.log_partial_sums, plain.log_partial_sums))
    assert "dominates L at every checkpoint: True" in rep.evidence
    H = 4 * CPS[-1]
    theta = finite_horizon_edge(edge_recurrent, H)
    assert series_L_eta(edge_recurrent, theta, CPS, H).verdict == "diverges"


def test_r_over_p_examples(periodic, symmetric_hold, walks):
    rep = series_r_over_p(periodic, CPS)
    assert rep.verdict == "converges" and rep.tail_bound == 0.0
    assert series_r_over_p(symmetric_hold, CPS).verdict == "diverges"
    rep = series_r_over_p(walks["fading_hold"], [2**k for k in range(6, 21)])
    assert rep.verdict == "converges" and "power-law" in rep.evidence


def test_m_theta_at_one_equals_m1(walks):
    for w in walks.values():
        a = series_M_theta(w, 1.0, CPS)
        b = series_M1(w, CPS)
        for (_, x), (_, y) in zip(a.checkpoints, b.checkpoints):
            assert x == pytest.approx(y, rel=1e-12, abs=1e-300)


def test_m_theta_periodic_zero(periodic):
    rep = series_M_theta(periodic, 1.0, CPS)
    assert rep.verdict == "converges" and all(s == 0.0 for _, s in rep.checkpoints)


def test_m_theta_exploratory_note(symmetric_hold):
    assert "exploratory" in series_M_theta(symmetric_hold, 1.2, CPS).evidence


def test_short_grid_is_inconclusive(drift_out):
    rep = series_M1(drift_out, [64, 128])
    assert rep.verdict == "inconclusive"


def test_checkpoints_validated(symmetric_hold):
    with pytest.raises(ValueError):
        series_M1(symmetric_hold, [128, 64])


def test_theta_sweep():
    assert theta_sweep(1.0) == [1.0]
    assert theta_sweep(1.0 - 1e-9) == [1.0]
    g = theta_sweep(0.9)
    assert len(g) == 8 and g[0] == 0.9 and g[-1] == 1.0


def test_diagnose_examples(periodic, symmetric_hold, edge_recurrent):
    cfg = DiagnoseConfig(checkpoints=tuple(2**k for k in range(6, 17)))
    rep = diagnose(periodic, cfg)
    assert rep.verdict == "srlp_fails_periodic"
    rep = diagnose(symmetric_hold, cfg)
    assert rep.verdict == "srlp_established"
    assert {"M1", "L", "R_over_P"} <= set(rep.reasons)
    rep = diagnose(edge_recurrent, cfg)
    assert rep.verdict == "srlp_established"
    crit = {c.name: c.verdict for c in rep.criteria}
    assert crit["M1"] == "converges" and crit["M_theta"] == "diverges"


def test_diagnose_report_shape(drift_out):
    cfg = DiagnoseConfig(checkpoints=tuple(2**k for k in range(6, 13)), qratio_n=2000)
    rep = diagnose(drift_out, cfg)
    data = json.loads(dumps(rep.to_json()))
    assert data["schema_version"] == SCHEMA_VERSION
    assert [c["name"] for c in data["criteria"]] == ["M1", "L", "L_eta", "R_over_P", "M_theta"]
    assert len(data["c_n_tail"]) == 8
    assert data["edge_theta"] < DRIFT_OUT_EDGE


def test_diagnose_resource_limit(symmetric_hold):
    cfg = DiagnoseConfig(checkpoints=tuple(2**k for k in range(6, 12)), max_horizon=1000)
    rep = diagnose(symmetric_hold, cfg)
    assert rep.resource_limited
    assert rep.edge_theta is None
    assert any("horizon" in n for n in rep.notes)
    # the criteria at 1 still decide
    assert rep.verdict == "srlp_established"


@given(st.floats(0.05, 0.45), st.floats(0.05, 0.85))
def test_m_theta_monotone_in_theta(p, r):
    if p + r > 0.95:
        return
    w = constant(p, r, 1 - p - r)
    cps = [64, 256, 1024]
    a = series_M_theta(w, 1.0, cps).log_partial_sums
    b = series_M_theta(w, 1.1, cps).log_partial_sums
    assert all(x >= y - 1e-10 * abs(y) for x, y in zip(a, b))
