"""n-step transition probabilities by windowed band products.

A path of length n started at state i stays inside ``[0, i + n]``, so the
window ``W = max(i, j) + n + 1`` makes the truncated powers exact.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from . import kernels
from .errors import NonComparable, ResourceLimit
from .polynomials import eval_Q_many

DEFAULT_CAP = 20000
OPS_CAP = 10**8
CHUNK = 256


def resource_cap(cap=None):
    """Window cap: explicit argument, else ``SRLP_LAB_CAP``, else the default."""
    if cap is not None:
        return int(cap)
    env = os.environ.get("SRLP_LAB_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"SRLP_LAB_CAP must be an integer, got {env!r}") from None
    return DEFAULT_CAP


def _check_budget(W, work, cap):
    cap = resource_cap(cap)
    if W > cap:
        raise ResourceLimit(f"window {W} exceeds the state cap {cap}; use a smaller n")
    if work > OPS_CAP:
        raise ResourceLimit(f"{work} band operations exceed the cap {OPS_CAP}; use a smaller n")


@dataclass(frozen=True)
class WindowedKernel:
    """The W x W corner of the transition matrix, stored as its three bands."""

    window: int
    p: object
    r: object
    q: object
    exact_mode: bool = False

    @classmethod
    def from_walk(cls, walk, W, exact=False):
        if exact:
            trip = walk.exact_triples(W)
            p, r, q = (np.array([t[k] for t in trip], dtype=object) for k in range(3))
            return cls(W, p, r, q, True)
        p, r, q = walk.arrays(W)
        return cls(W, p, r, q, False)

    def dense(self):
        W = self.window
        M = np.zeros((W, W), dtype=object if self.exact_mode else np.float64)
        for j in range(W):
            M[j, j] = self.r[j]
            if j + 1 < W:
                M[j, j + 1] = self.p[j]
                M[j + 1, j] = self.q[j + 1]
        return M

    def row_sums(self):
        return self.dense().sum(axis=1)


def _exact_propagate(kern, i, steps, targets):
    # integer numerators over the common denominator D ** n
    W = kern.window
    D = 1
    for arr in (kern.p, kern.r, kern.q):
        for v in arr:
            D = lcm(D, Fraction(v).denominator)
    P = np.array([int(Fraction(v) * D) for v in kern.p], dtype=object)
    R = np.array([int(Fraction(v) * D) for v in kern.r], dtype=object)
    Q = np.array([int(Fraction(v) * D) for v in kern.q], dtype=object)
    cur = np.zeros(W, dtype=object)
    cur[i] = 1
    out = []
    t = 0
    for n in steps:
        while t < n:
            nxt = cur * R
            nxt[1:] += cur[:-1] * P[: W - 1]
            nxt[:-1] += cur[1:] * Q[1:W]
            cur = nxt
            t += 1
        den = D**t
        out.append([Fraction(int(cur[k]), den) for k in targets])
    return out


def _scaled_propagate(p, r, q, W, i, steps, targets):
    """Rows of P^n restricted to ``targets`` as (mantissa, log scale) pairs.

    The vector is renormalized every CHUNK steps so long runs on walks with
    edge below 1 do not underflow.
    """
    v = np.zeros(W)
    v[i] = 1.0
    mant = np.empty((len(steps), len(targets)))
    logs = np.empty(len(steps))
    tg = np.asarray(targets, dtype=np.int64)
    lsc = 0.0
    t = 0
    for s, n in enumerate(steps):
        while t < n:
            stop = min(n, t + CHUNK)
            _, v = kernels.propagate(v, p, r, q, np.array([stop - t], dtype=np.int64), tg)
            t = stop
            m = float(v.max())
            if m > 0 and (m < 1e-100 or m > 1e100):
                v = v / m
                lsc += math.log(m)
        mant[s] = v[tg]
        logs[s] = lsc
    return mant, logs


def n_step_many(walk, i, steps, targets, exact=False, cap=None):
    """``P_{i,t}(n)`` for every n in ``steps`` (ascending) and t in ``targets``.

    Returns a float array of shape ``(len(steps), len(targets))``, or nested
    lists of Fractions in exact mode.
    """
    steps = [int(n) for n in steps]
    targets = [int(t) for t in targets]
    if i < 0 or any(n < 0 for n in steps) or any(t < 0 for t in targets):
        raise ValueError("states and step counts must be >= 0")
    if any(b < a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be ascending")
    n_max = steps[-1] if steps else 0
    W = max([i] + targets) + n_max + 1
    _check_budget(W, n_max * W, cap)
    if exact:
        if not walk.exact:
            raise ValueError("exact mode needs a walk specified with rational strings")
        return _exact_propagate(WindowedKernel.from_walk(walk, W, exact=True), i, steps, targets)
    p, r, q = walk.arrays(W)
    mant, logs = _scaled_propagate(p, r, q, W, i, steps, targets)
    with np.errstate(under="ignore", over="ignore"):
        return mant * np.exp(logs)[:, None]


def n_step(walk, i, j, n, exact=None, cap=None):
    """``(P^n)_{ij}``; a Fraction when the walk is exact (or ``exact=True``)."""
    if exact is None:
        exact = walk.exact
    res = n_step_many(walk, i, [n], [j], exact=exact, cap=cap)
    return res[0][0] if exact else float(res[0, 0])


def km_representation_residual(walk, measure, i, j, n):
    """Relative gap between P_ij(n) and its spectral-integral form under ``measure``.

    The gap is divided by the larger of |P_ij(n)| and the absolute quadrature
    sum, which is the size of the numbers that rounding acts on.
    """
    P = n_step(walk, i, j, n, exact=False)
    x, w = measure.nodes, measure.weights
    sign, la = eval_Q_many(walk, max(i, j), x)
    with np.errstate(divide="ignore"):
        lx = np.log(np.abs(x))
    lt = np.log(w) + la[:, i] + la[:, j] + (n * lx if n else 0.0)
    st = sign[:, i] * sign[:, j] * (np.sign(x) ** n if n else 1.0)
    lpj = walk.log_pi(j)
    fin = np.isfinite(lt)
    if not fin.any():
        rhs, absum = 0.0, 0.0
    else:
        m = float(lt[fin].max())
        terms = st[fin] * np.exp(lt[fin] - m)
        c = math.exp(m + lpj)
        rhs = math.fsum(terms.tolist()) * c
        absum = float(np.abs(terms).sum()) * c
    scale = max(abs(P), absum)
    if scale == 0.0:
        return 0.0
    return abs(P - rhs) / scale


# ---------------------------------------------------------------------------
# ratio traces


@dataclass
class RatioTrace:
    indices: tuple
    n_grid: list
    ratios: list
    predicted_limit: float
    eta: float = 1.0
    notes: list = field(default_factory=list)

    def to_json(self):
        return {
            "indices": list(self.indices),
            "n_grid": list(self.n_grid),
            "ratios": list(self.ratios),
            "predicted_limit": self.predicted_limit,
            "eta": self.eta,
            "notes": list(self.notes),
        }

    def to_csv(self, fmt="%.12e"):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "ratio", "predicted_limit"])
        for n, v in zip(self.n_grid, self.ratios):
            wr.writerow([n, "nan" if v is None or math.isnan(v) else fmt % v, fmt % self.predicted_limit])
        return buf.getvalue()


def default_ratio_grid(n_max):
    """16, 32, ... up to n_max, each paired with its odd neighbour n + 1."""
    grid = []
    n = 16
    while n <= n_max:
        grid.extend([n, n + 1])
        n *= 2
    return [g for g in grid if g <= n_max] or [n_max]


def predicted_ratio_limit(walk, i, j, k, l, eta):
    sign, la = eval_Q_many(walk, max(i, j, k, l), [eta])
    s, a = sign[0], la[0]
    num_s, den_s = s[i] * s[j], s[k] * s[l]
    if den_s == 0:
        return math.inf
    if num_s == 0:
        return 0.0
    lv = walk.log_pi(j) + a[i] + a[j] - walk.log_pi(l) - a[k] - a[l]
    return float(num_s * den_s) * math.exp(lv)


def ratio_trace(walk, i, j, k, l, n_grid=None, n_max=2048, eta=None, cap=None):
    """P_ij(n) / P_kl(n) along ``n_grid`` plus the limit the SRLP predicts.

    The limit is pi_j Q_i(eta) Q_j(eta) / (pi_l Q_k(eta) Q_l(eta)).  When
    ``eta`` is not given it is estimated from the walk.
    """
    if walk.periodic and (i + j) % 2 != (k + l) % 2:
        raise NonComparable(
            f"periodic walk: P_{i}{j}(n) and P_{k}{l}(n) never share a nonzero parity"
        )
    grid = sorted(set(default_ratio_grid(n_max) if n_grid is None else (int(n) for n in n_grid)))
    if not grid:
        raise ValueError("empty n grid")
    n_top = grid[-1]
    W = max(i, j, k, l) + n_top + 1
    _check_budget(W, 2 * n_top * W, cap)
    if eta is None:
        from .spectral import estimate_eta
        from .errors import NotConverged

        try:
            eta = estimate_eta(walk).value
        except NotConverged as exc:
            eta = exc.estimate.value
    p, r, q = walk.arrays(W)
    mn, ln = _scaled_propagate(p, r, q, W, i, grid, [j])
    md, ld = _scaled_propagate(p, r, q, W, k, grid, [l])
    ratios = []
    for s in range(len(grid)):
        a, b = mn[s, 0], md[s, 0]
        if b > 0:
            ratios.append(float(a / b * math.exp(ln[s] - ld[s])))
        else:
            ratios.append(math.nan)
    notes = []
    if walk.periodic:
        notes.append("periodic walk: ratios reported only on the shared parity")
    return RatioTrace((i, j, k, l), grid, ratios, predicted_ratio_limit(walk, i, j, k, l, eta), eta, notes)
