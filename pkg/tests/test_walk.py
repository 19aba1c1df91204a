import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srlp_lab import InvalidSpec, WalkSpec, log_pi, make_walk
from srlp_lab.corpus import SPECS

from conftest import constant, tabular


def test_constant_walk_accessors():
    w = constant(0.3, 0.4, 0.3)
    assert w.r(5) == pytest.approx(0.4)
    assert w.q(0) == 0.0
    # index-0 rule with r > 0: the down mass of state 0 goes to holding
    assert w.triple(0) == pytest.approx((0.3, 0.7, 0.0))
    assert not w.periodic


def test_periodic_flag():
    w = constant(0.5, 0, 0.5)
    assert w.periodic
    assert w.triple(0) == pytest.approx((1.0, 0.0, 0.0))


def test_tabular_lookup():
    w = tabular([[1.0, 0.0, 0.0]], [0.3, 0.4, 0.3])
    assert w.p(0) == 1.0
    assert w.r(3) == pytest.approx(0.4)


def test_log_pi_values():
    w = constant(0.4, 0.4, 0.2)
    assert log_pi(w, 0) == 0.0
    # pi_2 = p_0 p_1 / (q_1 q_2) with p_0 = 0.4
    assert log_pi(w, 2) == pytest.approx(math.log(0.4 * 0.4 / (0.2 * 0.2)), abs=1e-14)
    sym = constant(0.3, 0.4, 0.3)
    assert all(abs(log_pi(sym, n)) < 1e-13 for n in range(1, 50))


def test_canonical_rows_sum_to_one(walks):
    for w in walks.values():
        p, r, q = w.arrays(2000)
        assert np.array_equal(p, (1.0 - r) - q)
        assert q[0] == 0.0
        assert np.all(p > 0) and np.all(r >= 0) and np.all(q[1:] > 0)


def test_linear_rational_values():
    w = make_walk(SPECS["rational_drift"])
    for j in (1, 5, 40):
        assert w.p(j) == pytest.approx((2 + 3 * j) / (4 + 5 * j), rel=1e-14)
        assert w.r(j) == pytest.approx((1 + j) / (10 + 5 * j), rel=1e-14)


@pytest.mark.parametrize(
    "spec, fragment",
    [
        ({"family": "constant", "tail": [0.5, 0.2, 0.4]}, "off from 1"),
        ({"family": "tabular_with_constant_tail", "prefix": [[0.5, 0.3, 0.2]], "tail": [0.3, 0.4, 0.3]}, "q_0 must be 0"),
        ({"family": "constant", "tail": [0, 0.5, 0.5]}, "p must be > 0"),
        ({"family": "constant", "tail": [0.5, 0.5, 0]}, "q must be > 0"),
        ({"family": "bogus"}, "family"),
        ({"family": "constant", "tail": [0.3, 0.4, 0.3], "extra": 1}, "unknown"),
        ({"family": "linear_rational", "params": {"p": {"num": [1], "den": [2]}, "r": {"num": [1], "den": [1]}}}, "invalid triple"),
    ],
)
def test_invalid_specs(spec, fragment):
    with pytest.raises(InvalidSpec, match=fragment):
        make_walk(spec)


def test_exact_specs_keep_fractions():
    w = make_walk({"family": "constant", "tail": ["1/3", "1/3", "1/3"]})
    assert w.exact
    assert w.exact_triple(0) == (Fraction(1, 3), Fraction(2, 3), Fraction(0))
    assert w.exact_triple(7) == (Fraction(1, 3),) * 3


def test_spec_round_trip():
    spec = WalkSpec.from_dict(SPECS["rational_drift"])
    assert WalkSpec.from_dict(spec.to_dict()) == spec


triples = st.tuples(
    st.floats(0.01, 0.98), st.floats(0.0, 0.98)
).filter(lambda t: t[0] + t[1] < 0.99).map(lambda t: (t[0], t[1], 1.0 - t[0] - t[1]))


@given(triples)
def test_constant_log_pi_is_geometric(t):
    p, r, q = t
    w = constant(p, r, q)
    n = 30
    # pi_n = p_0 p^{n-1} / q^n, p_0 from the index-0 rule
    p0 = w.p(0)
    expected = math.log(p0) + (n - 1) * math.log(w.p(1)) - n * math.log(w.q(1))
    assert log_pi(w, n) == pytest.approx(expected, rel=1e-11, abs=1e-11)


@given(triples)
def test_rows_are_probabilities(t):
    w = constant(*t)
    p, r, q = w.arrays(10)
    assert np.allclose(p + r + q, 1.0, atol=1e-15)
    assert q[0] == 0.0
