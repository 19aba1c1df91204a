"""Birth-death polynomials Q_n(x) and the identities they satisfy.

Values are carried as sign + natural-log magnitude because ``(-1)^n Q_n(-1)``
and friends grow far past the double range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInput, ThetaBelowEta


@dataclass(frozen=True)
class ScaledValue:
    sign: int
    log_mag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if (self.sign == 0) != (self.log_mag == -math.inf):
            raise ValueError("sign is 0 exactly when log_mag is -inf")

    @classmethod
    def from_float(cls, v):
        if v == 0:
            return cls(0, -math.inf)
        return cls(1 if v > 0 else -1, math.log(abs(v)))

    @classmethod
    def zero(cls):
        return cls(0, -math.inf)

    def __mul__(self, other):
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        if self.sign == 0 or other.sign == 0:
            return ScaledValue.zero()
        return ScaledValue(self.sign * other.sign, self.log_mag + other.log_mag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_float(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero ScaledValue")
        if self.sign == 0:
            return ScaledValue.zero()
        return ScaledValue(self.sign * other.sign, self.log_mag - other.log_mag)

    def __neg__(self):
        return ScaledValue(-self.sign, self.log_mag)

    def __float__(self):
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_mag)
        except OverflowError:
            return self.sign * math.inf


@dataclass(frozen=True)
class PolySequence:
    """``Q_0(x) .. Q_N(x)`` as parallel sign / log-magnitude arrays."""

    x: float
    sign: np.ndarray
    log_abs: np.ndarray

    @property
    def N(self):
        return len(self.sign) - 1

    def __len__(self):
        return len(self.sign)

    def __getitem__(self, n):
        s = int(self.sign[n])
        return ScaledValue(s, float(self.log_abs[n]) if s else -math.inf)

    @property
    def values(self):
        return [self[n] for n in range(len(self))]

    def to_float(self):
        with np.errstate(over="ignore"):
            return self.sign * np.exp(self.log_abs)


def _split(mant, lsc):
    sign = np.sign(mant).astype(np.int8)
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(mant)) + lsc
    log_abs[sign == 0] = -np.inf
    return sign, log_abs


def eval_Q_many(walk, N, xs):
    """Sign and log|Q_n(x)| arrays, shape ``(len(xs), N + 1)``."""
    p, r, q = walk.arrays(max(N, 1))
    mant, lsc = kernels.recurrence(p, r, q, np.asarray(xs, dtype=np.float64), N)
    return _split(mant, lsc)


def eval_Q(walk, N, x):
    """Q_0(x)..Q_N(x) by the forward recurrence with joint rescaling."""
    if N < 0:
        raise ValueError("N must be >= 0")
    sign, log_abs = eval_Q_many(walk, N, [float(x)])
    return PolySequence(float(x), sign[0], log_abs[0])


def q_at_minus_one(walk, N):
    """``(-1)^n Q_n(-1)`` for n <= N via the cumulative-sum form.

    Every summand is positive, so the whole computation runs on logs without
    cancellation.  Returned as a :class:`PolySequence` at x = -1 whose
    entries are the sign-corrected values (all >= 1).
    """
    p, r, _ = walk.arrays(max(N, 1))
    logpi = walk.log_pi_array(max(N, 1))
    logq = kernels.qbar_summation(np.log(p), logpi, r, N)
    return PolySequence(-1.0, np.ones(N + 1, dtype=np.int8), logq)


def q_at_minus_one_direct(walk, N):
    """Same quantity as :func:`q_at_minus_one`, from the plain recurrence."""
    seq = eval_Q(walk, N, -1.0)
    flip = np.where(np.arange(N + 1) % 2 == 0, 1, -1).astype(np.int8)
    return PolySequence(-1.0, seq.sign * flip, seq.log_abs)


def qbar_cross_check(walk, N):
    """Largest relative gap between the two routes to (-1)^n Q_n(-1)."""
    a = q_at_minus_one(walk, N)
    b = q_at_minus_one_direct(walk, N)
    if np.any(b.sign != 1):
        return math.inf
    return float(np.max(np.abs(np.expm1(a.log_abs - b.log_abs))))


def christoffel_darboux_residual(walk, n, x, y):
    """Relative defect of the Christoffel-Darboux identity at (n, x, y).

    Left side ``p_n pi_n (Q_n(x) Q_{n+1}(y) - Q_n(y) Q_{n+1}(x))``, right side
    ``(y - x) sum_{j<=n} pi_j Q_j(x) Q_j(y)``.  The defect is divided by the
    larger of the two sides' absolute term sums, which is the size rounding
    acts on.
    """
    if x == y:
        raise DegenerateInput("x and y must differ")
    if n < 0:
        raise ValueError("n must be >= 0")
    sign, la = eval_Q_many(walk, n + 1, [x, y])
    sx, sy = sign[0].astype(float), sign[1].astype(float)
    lx, ly = la[0], la[1]
    p, _, _ = walk.arrays(n + 1)
    logpi = walk.log_pi_array(n + 1)
    base = math.log(p[n]) + logpi[n]
    lhs_logs = np.array([base + lx[n] + ly[n + 1], base + ly[n] + lx[n + 1]])
    lhs_signs = np.array([sx[n] * sy[n + 1], -sy[n] * sx[n + 1]])
    rhs_logs = math.log(abs(y - x)) + logpi[: n + 1] + lx[: n + 1] + ly[: n + 1]
    rhs_signs = math.copysign(1.0, y - x) * sx[: n + 1] * sy[: n + 1]
    finite = np.concatenate([lhs_logs, rhs_logs])
    finite = finite[np.isfinite(finite)]
    if finite.size == 0:
        return 0.0
    m = float(finite.max())
    with np.errstate(under="ignore"):
        lhs_terms = lhs_signs * np.exp(lhs_logs - m)
        rhs_terms = rhs_signs * np.exp(rhs_logs - m)
    lhs = math.fsum(lhs_terms.tolist())
    rhs = math.fsum(rhs_terms.tolist())
    scale = max(float(np.abs(lhs_terms).sum()), float(np.abs(rhs_terms).sum()))
    if scale == 0.0:
        return 0.0
    return abs(lhs - rhs) / scale


def successive_ratios(walk, x, N):
    """``Q_{j+1}(x) / Q_j(x)`` for j < N, required positive (x at or above the edge)."""
    p, r, q = walk.arrays(max(N, 1))
    rho, bad = kernels.ratio_recurrence(p, r, q, float(x), N)
    if bad >= 0:
        raise ThetaBelowEta(
            f"Q_{bad + 1}({x!r}) <= 0: theta is below the spectral edge", index=bad + 1
        )
    return rho


EDGE_BOUNDARY_TOL = 1e-9
EDGE_DRIFT = 2.0


def edge_ratios(walk, x, N, horizon):
    """``Q_{j+1}(x) / Q_j(x)`` for j < N with x at the spectral edge.

    When the edge is an isolated eigenvalue, Q_j(edge) is the recessive
    solution of the recurrence and the forward ratio form loses it to
    rounding.  The ratio recursion run downward from ``Q_horizon(x) = 0`` is
    stable for that solution.  It is used when its values satisfy the
    boundary equation at state 0 (relative defect below
    ``EDGE_BOUNDARY_TOL``) and the forward ratios either turn nonpositive or
    end more than a factor ``EDGE_DRIFT`` above it, the signature of a lost
    recessive solution.  Otherwise, as at a soft edge, the forward ratios are
    returned.  ``x`` must lie above the largest zero of ``Q_horizon`` and
    ``N`` well below ``horizon``.
    """
    if N >= horizon:
        raise ValueError("N must be below the horizon")
    p, r, q = walk.arrays(horizon)
    x = float(x)
    rho, bad = kernels.backward_ratio(p, r, q, x, horizon)
    if bad >= 0:
        raise ThetaBelowEta(f"{x!r} is not above the largest zero of Q_{horizon}", index=bad)
    lead = p[0] * rho[0]
    defect = abs((x - r[0]) - lead) / (abs(x) + abs(r[0]) + lead)
    if defect > EDGE_BOUNDARY_TOL:
        return successive_ratios(walk, x, N)
    back = rho[:N]
    fwd, fbad = kernels.ratio_recurrence(p, r, q, x, N)
    if fbad >= 0:
        return back
    if float(np.sum(np.log(fwd)) - np.sum(np.log(back))) > math.log(EDGE_DRIFT):
        return back
    return fwd


def log_Q_positive(walk, x, N, horizon=None):
    """log Q_0(x)..log Q_N(x) through the ratio form; x must lie at/above the edge.

    With ``horizon`` the ratios come from :func:`edge_ratios`.
    """
    if horizon is None:
        rho = successive_ratios(walk, x, N)
    else:
        rho = edge_ratios(walk, x, N, horizon)
    return np.concatenate([[0.0], np.cumsum(np.log(rho))])


def q_ratio_sequence(walk, theta, N, log=False, horizon=None):
    """``|Q_n(theta) / Q_n(-theta)|`` for n <= N.

    Nonincreasing for aperiodic walks and identically 1 for periodic ones when
    theta is at or above the spectral edge.  Pass ``horizon`` when theta sits
    at the edge itself (see :func:`edge_ratios`).
    """
    if not theta > 0:
        raise ValueError("theta must be > 0")
    if horizon is not None:
        num = log_Q_positive(walk, theta, N, horizon)
        sign, den = eval_Q_many(walk, N, [-float(theta)])
        out = num - den[0]
    else:
        p, r, q = walk.arrays(max(N, 1))
        out, bad = kernels.pm_log_ratio(p, r, q, float(theta), N)
        if bad >= 0:
            raise ThetaBelowEta(f"Q_{bad}({theta!r}) <= 0: theta is below the spectral edge", index=bad)
    if log:
        return out
    with np.errstate(under="ignore"):
        return np.exp(out)
