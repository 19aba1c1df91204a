"""Spectral edge and Gaussian quadrature of the random-walk measure.

The N-point quadrature comes from the symmetrized truncation of the
transition matrix: diagonal ``r_j``, off-diagonal ``sqrt(p_j q_{j+1})``.  Its
eigenvalues are the zeros of ``Q_N`` and the squared first eigenvector
components are the quadrature weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceFailure, NotConverged, ThetaBelowEta
from .polynomials import edge_ratios, eval_Q_many

EIG_TOL = 1e-13
CLUSTER_TOL = 1e-3
RESIDUAL_TOL = 1e-9

DEFAULT_ETA_TOL = 1e-8
DEFAULT_N0 = 16
DEFAULT_NMAX = 4096


@dataclass(frozen=True)
class JacobiTruncation:
    N: int
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    offdiagonal_sq: np.ndarray = field(repr=False)

    def matvec(self, v):
        out = self.diagonal * v
        out[1:] += self.offdiagonal * v[:-1]
        out[:-1] += self.offdiagonal * v[1:]
        return out

    def dense(self):
        return np.diag(self.diagonal) + np.diag(self.offdiagonal, 1) + np.diag(self.offdiagonal, -1)

    def bracket(self):
        """Interval holding every eigenvalue: Gershgorin cut down to [-1, 1]."""
        rad = np.zeros(self.N)
        rad[1:] += self.offdiagonal
        rad[:-1] += self.offdiagonal
        lo = max(-1.0 - 1e-9, float(np.min(self.diagonal - rad)) - 1e-12)
        hi = min(1.0 + 1e-9, float(np.max(self.diagonal + rad)) + 1e-12)
        return lo, hi

    def _kernel_args(self):
        # kernels read off-diagonal squares as p[i-1] * q[i]
        p = np.ones(self.N)
        p[: self.N - 1] = self.offdiagonal_sq
        return self.diagonal, p, np.ones(self.N)


def jacobi_truncation(walk, N):
    if N < 1:
        raise ValueError("N must be >= 1")
    p, r, q = walk.arrays(N)
    off2 = p[: N - 1] * q[1:N]
    return JacobiTruncation(N, np.array(r), np.sqrt(off2), off2)


def eigenvalues(J, tol=EIG_TOL):
    """All eigenvalues, ascending, by Sturm-count bisection."""
    lo, hi = J.bracket()
    d, p, q = J._kernel_args()
    return kernels.bisect_all(d, p, q, J.N, lo, hi, tol)


def _start_vector(N):
    rng = np.random.default_rng(20180515)
    v = rng.uniform(0.5, 1.5, N)
    return v / np.linalg.norm(v)


def eigen_decompose(J, tol=EIG_TOL):
    """Eigenvalues and squared first eigenvector components.

    Eigenvectors come from inverse iteration (three sweeps; stopping at a
    small residual leaves weight errors near 1e-12), with
    Gram-Schmidt against earlier vectors whose eigenvalues sit within
    ``CLUSTER_TOL``.
    """
    lam = eigenvalues(J, tol)
    N = J.N
    if N == 1:
        return lam, np.ones(1)
    weights = np.empty(N)
    start = _start_vector(N)
    cluster = []
    for k in range(N):
        if cluster and lam[k] - lam[k - 1] > CLUSTER_TOL:
            cluster = []
        v = start.copy()
        resid = math.inf
        for _ in range(3):
            x = kernels.tridiag_solve(J.diagonal, J.offdiagonal, lam[k], v)
            for u in cluster:
                x -= np.dot(u, x) * u
            nrm = np.linalg.norm(x)
            if not np.isfinite(nrm) or nrm == 0.0:
                break
            v = x / nrm
            resid = float(np.linalg.norm(J.matvec(v) - lam[k] * v))
        if not resid <= RESIDUAL_TOL:
            raise ConvergenceFailure(
                f"inverse iteration residual {resid:.3e} at eigenvalue {lam[k]!r} (k={k})"
            )
        cluster.append(v)
        weights[k] = v[0] ** 2
    return lam, weights


# ---------------------------------------------------------------------------
# spectral edge


@dataclass
class EtaEstimate:
    value: float
    raw: float
    truncation_orders: list
    largest_zeros: list
    converged: bool
    tol: float
    extrapolated: float | None = None
    extrapolation_converged: bool = False

    def to_json(self):
        return {
            "value": self.value,
            "raw": self.raw,
            "extrapolated": self.extrapolated,
            "converged": self.converged,
            "extrapolation_converged": self.extrapolation_converged,
            "tol": self.tol,
            "truncation_orders": list(self.truncation_orders),
            "largest_zeros": list(self.largest_zeros),
        }


def largest_zero(walk, N, tol=EIG_TOL):
    """Bracket ``(lo, hi)`` around the largest zero of Q_N."""
    p, r, q = walk.arrays(N)
    off = np.sqrt(p[: N - 1] * q[1:N])
    rad = np.zeros(N)
    rad[1:] += off
    rad[:-1] += off
    lo = max(-1.0 - 1e-9, float(np.min(r - rad)) - 1e-12)
    hi = min(1.0 + 1e-9, float(np.max(r + rad)) + 1e-12)
    return kernels.bisect_k(r, p, q, N, N - 1, lo, hi, tol)


def _aitken(x1, x2, x3):
    d1 = x2 - x1
    d2 = x3 - x2
    if d1 <= 0.0 or d2 <= 0.0 or d2 >= d1:
        return None
    rho = d2 / d1
    return x3 + d2 * rho / (1.0 - rho)


def estimate_eta(walk, tol=DEFAULT_ETA_TOL, N0=DEFAULT_N0, Nmax=DEFAULT_NMAX):
    """sup supp(psi) from largest zeros of Q_N along N = N0, 2 N0, ..., <= Nmax.

    The reported ``value`` is the geometric (Aitken) extrapolation through the
    last three orders when that is well defined, else the last raw zero.
    Raises :class:`NotConverged` (carrying the partial estimate) when neither
    the raw zeros nor the extrapolated limits settle within ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if N0 < 4 or Nmax < 2 * N0:
        raise ValueError("need N0 >= 4 and Nmax >= 2 * N0")
    orders, zeros, extrap = [], [], []
    converged = False
    N = N0
    while N <= Nmax:
        lo, hi = largest_zero(walk, N, min(tol * 1e-3, EIG_TOL))
        orders.append(N)
        zeros.append(0.5 * (lo + hi))
        if len(zeros) >= 3:
            extrap.append(_aitken(*zeros[-3:]))
        if len(zeros) >= 2 and abs(zeros[-1] - zeros[-2]) < tol:
            converged = True
            break
        N *= 2
    raw = zeros[-1]
    ex = extrap[-1] if extrap else None
    ex_conv = (
        len(extrap) >= 2 and None not in extrap[-2:] and abs(extrap[-1] - extrap[-2]) < tol
    )
    value = min(raw, 1.0)
    if ex is not None:
        value = min(max(ex, raw), 1.0)
    est = EtaEstimate(value, raw, orders, zeros, converged, tol, ex, bool(ex_conv))
    if not (converged or ex_conv):
        raise NotConverged(
            f"largest zeros did not settle within tol={tol} up to N={orders[-1]}", estimate=est
        )
    return est


def finite_horizon_edge(walk, horizon):
    """Smallest float theta above every zero of Q_horizon.

    It approaches the spectral edge from below as the horizon grows; series
    evaluated at it up to ``horizon / 4`` with :func:`edge_ratios` see the
    edge values of Q_j.
    """
    _, hi = largest_zero(walk, horizon, 0.0)
    theta = hi
    step = max(math.ulp(hi), 1e-300)
    for _ in range(200):
        try:
            edge_ratios(walk, theta, 1, horizon)
            return theta
        except ThetaBelowEta:
            theta = hi + step
            step *= 2.0
    raise ConvergenceFailure(f"no theta above the zeros of Q_{horizon} found near {hi!r}")

# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def exactness_degree(self):
        return 2 * self.order - 1

    def moment(self, m):
        return float(np.sum(self.weights * self.nodes**m))

    def abs_moment(self, m):
        return float(np.sum(self.weights * np.abs(self.nodes) ** m))

    def to_json(self):
        return {
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "order": self.order,
        }

    @classmethod
    def from_json(cls, raw):
        return cls(np.asarray(raw["nodes"], float), np.asarray(raw["weights"], float), int(raw["order"]))


def quadrature_measure(walk, N):
    J = jacobi_truncation(walk, N)
    nodes, weights = eigen_decompose(J)
    return DiscreteMeasure(nodes, weights, N)


def _logsumexp(a):
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if m == -math.inf:
        return m
    return m + math.log(float(np.sum(np.exp(a - m))))


def c_n_sequence(measure, n_max):
    """Approximants of C_n for n = 0..n_max.

    Entries with n beyond ``measure.exactness_degree`` are extrapolations.
    """
    x = measure.nodes
    w = measure.weights
    neg = x < 0
    pos = x > 0
    lwn, lxn = np.log(w[neg]), np.log(-x[neg])
    lwp, lxp = np.log(w[pos]), np.log(x[pos])
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        num = _logsumexp(lwn + n * lxn)
        den = _logsumexp(lwp + n * lxp)
        out[n] = math.exp(num - den) if num > -math.inf else 0.0
    return out


def whitehurst_check(walk, measure, n_max):
    """Quadrature values of the integral of x Q_n(x)^2 for n = 0..n_max."""
    sign, la = eval_Q_many(walk, n_max, measure.nodes)
    lw = np.log(measure.weights)[:, None]
    with np.errstate(divide="ignore"):
        lx = np.log(np.abs(measure.nodes))[:, None]
    logs = lw + lx + 2.0 * la
    sx = np.sign(measure.nodes)[:, None] * np.ones_like(logs)
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        col = logs[:, n]
        fin = np.isfinite(col)
        if not fin.any():
            out[n] = 0.0
            continue
        m = float(col[fin].max())
        terms = sx[fin, n] * np.exp(col[fin] - m)
        s = math.fsum(terms.tolist())
        out[n] = s * math.exp(m) if m < 700 else math.copysign(math.inf, s) if s else 0.0
    return out
