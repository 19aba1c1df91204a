"""The theta-transformed walk and the edge-recurrent counterexample built from it.

For theta at or above the spectral edge every Q_j(theta) is positive, and

    r_j(theta)     = r_j / theta
    q_{j+1}(theta) = q_{j+1} / (theta * rho_j)
    p_j(theta)     = rho_j * p_j / theta,       rho_j = Q_{j+1}(theta) / Q_j(theta)

are again one-step probabilities.  The transformed polynomials are
Q_n(theta x) / Q_n(theta) and the transformed pi_n is pi_n Q_n(theta)^2.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import InvalidBase, ThetaBelowEta
from .polynomials import edge_ratios, eval_Q, eval_Q_many, successive_ratios
from .walk import Walk, WalkSpec, make_walk

CHECK_HORIZON = 10_000
PROVENANCES = ("theta_transform", "example_44")


class TransformedWalk(Walk):
    """Walk whose parameters are derived lazily from ``base`` at ``theta``.

    Ratios ``Q_{j+1}(theta)/Q_j(theta)`` come from the ratio form of the
    recurrence; the prefix is memoized (under the base class lock) as it grows.
    """

    def __init__(self, base, theta, provenance="theta_transform", label=None, edge_horizon=None):
        if provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if not theta > 0:
            raise ValueError("theta must be > 0")
        super().__init__(
            label or f"{base.label}@theta={theta:.12g}",
            periodic=base.periodic,
            r_zero_from=base.r_zero_from,
        )
        self.base = base
        self.theta = float(theta)
        self.provenance = provenance
        # at the spectral edge itself the ratios come from the backward form,
        # which resolves only indices well below the anchoring horizon
        self.edge_horizon = edge_horizon
        if edge_horizon is not None:
            self.max_length = edge_horizon // 4

    def _ratios(self, n):
        if self.edge_horizon is None:
            return successive_ratios(self.base, self.theta, n)
        return edge_ratios(self.base, self.theta, n, self.edge_horizon)

    def _generate(self, lo, hi):
        rho = self._ratios(hi)
        _, r, q = self.base.arrays(hi)
        rt = r[lo:hi] / self.theta
        qt = np.zeros(hi - lo)
        js = np.arange(max(lo, 1), hi)
        qt[js - lo] = q[js] / (self.theta * rho[js - 1])
        return rt, qt

    def p_direct(self, n):
        """``rho_j p_j / theta`` for j < n, independent of the row-sum closure."""
        rho = self._ratios(n)
        p, _, _ = self.base.arrays(n)
        return rho * p / self.theta


def transform(walk, theta, horizon=CHECK_HORIZON, provenance="theta_transform", edge_horizon=None):
    """Build the theta-transform, checking Q_j(theta) > 0 for j <= horizon.

    For theta at the spectral edge itself pass ``edge_horizon`` (see
    :func:`~srlp_lab.polynomials.edge_ratios`); the walk is then resolved for
    ``j < edge_horizon // 4`` only.
    """
    theta = float(theta)
    if not theta > 0:
        raise ThetaBelowEta(f"theta must be > 0, got {theta!r}")
    if edge_horizon is not None:
        horizon = min(horizon, edge_horizon // 4)
    tw = TransformedWalk(walk, theta, provenance, edge_horizon=edge_horizon)
    tw._ratios(horizon)
    p, r, q = tw.arrays(horizon)
    if not (np.all(p > 0) and np.all(r >= 0) and np.all(q[1:] > 0)):
        j = int(np.flatnonzero(~((p > 0) & (r >= 0) & (np.r_[1.0, q[1:]] > 0)))[0])
        raise ThetaBelowEta(f"transformed parameters invalid at j={j}", index=j)
    return tw


def _relgap(sa, la, sb, lb):
    if sa == 0 and sb == 0:
        return 0.0
    if sa != sb or sa == 0 or sb == 0:
        return math.inf if (sa == 0) != (sb == 0) else 2.0
    return abs(math.expm1(la - lb))


def transformed_Q_identity_residual(tw, n, x):
    """Relative gap between Q_n(x; theta) and Q_n(theta x) / Q_n(theta)."""
    if abs(x) > 1:
        raise ValueError("|x| must be <= 1")
    lhs = eval_Q(tw, n, x)[n]
    sign, la = eval_Q_many(tw.base, n, [tw.theta * x, tw.theta])
    rs = int(sign[0, n] * sign[1, n])
    rl = float(la[0, n] - la[1, n]) if rs else -math.inf
    return _relgap(lhs.sign, lhs.log_mag, rs, rl)


def transformed_pi_identity_residual(tw, n):
    """Gap between log pi_n(theta) and log pi_n + 2 log Q_n(theta), relative to max(1, |rhs|)."""
    lhs = tw.log_pi(n)
    sign, la = eval_Q_many(tw.base, n, [tw.theta])
    if sign[0, n] <= 0:
        raise ThetaBelowEta(f"Q_{n}({tw.theta!r}) <= 0", index=n)
    rhs = tw.base.log_pi(n) + 2.0 * float(la[0, n])
    return abs(lhs - rhs) / max(1.0, abs(rhs))


def eta_of_transform(tw, **kwargs):
    """Spectral edge of the transformed walk (expected: eta(base) / theta)."""
    from .spectral import estimate_eta

    return estimate_eta(tw, **kwargs).value


def _has_single_holding_state(walk):
    return walk.r_zero_from == 1


def example_44(base, alpha, checkpoints=None):
    """Transient walk whose edge is 1/alpha and which is recurrent at its edge.

    ``base`` must hold only at state 0 (r_0 > 0, r_j = 0 beyond) and be
    recurrent; with alpha > 1 the alpha-transform of such a walk has a
    convergent first-moment series at 1 and a divergent one at its edge.
    """
    if isinstance(base, (dict, WalkSpec)):
        base = make_walk(base)
    if not base.r(0) > 0:
        raise InvalidBase("base walk needs r_0 > 0")
    if not _has_single_holding_state(base):
        raise InvalidBase("base walk must have r_j = 0 for every j > 0")
    alpha = float(alpha)
    if not alpha > 1:
        raise ThetaBelowEta(f"alpha must exceed the base edge 1, got {alpha!r}")
    from .analysis import series_L

    rep = series_L(base, checkpoints)
    if rep.verdict != "diverges":
        raise InvalidBase(f"base walk is not certified recurrent (L verdict: {rep.verdict})")
    tw = transform(base, alpha, provenance="example_44")
    tw.label = f"example44({base.label}, alpha={alpha:.12g})"
    return tw


def export_tabular(tw, prefix_len=64):
    """Tabular spec reproducing the first ``prefix_len`` rows; the tail is approximate.

    The constant tail is the transformed triple at ``4 * prefix_len``, which
    is only as good as the rate at which the parameters settle.
    """
    if prefix_len < 1:
        raise ValueError("prefix_len must be >= 1")
    far = 4 * prefix_len
    p, r, q = tw.arrays(far + 1)
    prefix = [[float(p[j]), float(r[j]), float(q[j])] for j in range(prefix_len)]
    tail = [float(p[far]), float(r[far]), float(q[far])]
    warnings.warn(
        f"exported tail is the triple at j={far}; rows past {prefix_len} are approximate",
        stacklevel=2,
    )
    return WalkSpec(
        family="tabular_with_constant_tail",
        prefix=prefix,
        tail=tail,
        params={},
        label=f"{tw.label} (tail approximate)",
    )
