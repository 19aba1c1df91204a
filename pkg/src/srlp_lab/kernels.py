"""Hot inner loops.

Every kernel exists twice: a scalar-loop version compiled with numba and a
numpy version (vectorized over the independent axis where one exists).  The
public names bind to one of them according to :mod:`srlp_lab.accel`; both
are kept in :data:`IMPLEMENTATIONS` for cross-checks and benchmarks.

Parameter arrays are the float64 ``p, r, q`` sequences of a walk; ``q[0]``
is zero and only ``p[i-1] * q[i]`` enters the symmetrized Jacobi matrix.
"""

import math

import numpy as np

from .accel import USE_NUMBA, njit

RESCALE_HI = 1e100
RESCALE_LO = 1e-100
PIVMIN = 1e-290
PIVFLOOR = 1e-300
LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# three-term recurrence with joint renormalization


def _recurrence_loop(p, r, q, xs, N):
    m = xs.shape[0]
    mant = np.empty((m, N + 1))
    lsc = np.zeros((m, N + 1))
    for i in range(m):
        x = xs[i]
        mant[i, 0] = 1.0
        if N == 0:
            continue
        a = 1.0
        b = (x - r[0]) / p[0]
        scale = 0.0
        mant[i, 1] = b
        for n in range(1, N):
            c = ((x - r[n]) * b - q[n] * a) / p[n]
            a = b
            b = c
            big = max(abs(a), abs(b))
            if big > RESCALE_HI or big < RESCALE_LO:
                a /= big
                b /= big
                scale += math.log(big)
            mant[i, n + 1] = b
            lsc[i, n + 1] = scale
    return mant, lsc


def _recurrence_np(p, r, q, xs, N):
    xs = np.asarray(xs, dtype=np.float64)
    m = xs.shape[0]
    mant = np.empty((m, N + 1))
    lsc = np.zeros((m, N + 1))
    mant[:, 0] = 1.0
    if N == 0:
        return mant, lsc
    a = np.ones(m)
    b = (xs - r[0]) / p[0]
    scale = np.zeros(m)
    mant[:, 1] = b
    for n in range(1, N):
        c = ((xs - r[n]) * b - q[n] * a) / p[n]
        a = b
        b = c
        big = np.maximum(np.abs(a), np.abs(b))
        bad = (big > RESCALE_HI) | (big < RESCALE_LO)
        if bad.any():
            f = big[bad]
            a = a.copy()
            b = b.copy()
            a[bad] /= f
            b[bad] /= f
            scale[bad] += np.log(f)
        mant[:, n + 1] = b
        lsc[:, n + 1] = scale
    return mant, lsc


# ---------------------------------------------------------------------------
# successive ratios Q_{j+1}(x) / Q_j(x)


def _ratio_loop(p, r, q, x, N):
    rho = np.empty(N)
    if N == 0:
        return rho, -1
    rho[0] = (x - r[0]) / p[0]
    if not rho[0] > 0.0:
        return rho, 0
    for n in range(1, N):
        rho[n] = ((x - r[n]) - q[n] / rho[n - 1]) / p[n]
        if not rho[n] > 0.0:
            return rho, n
    return rho, -1


def _ratio_np(p, r, q, x, N):
    # sequential by nature; plain floats are faster than numpy scalars here
    rho = np.empty(N)
    if N == 0:
        return rho, -1
    pl = p[:N].tolist()
    rl = r[:N].tolist()
    ql = q[:N].tolist()
    x = float(x)
    prev = (x - rl[0]) / pl[0]
    rho[0] = prev
    if not prev > 0.0:
        return rho, 0
    out = [prev]
    for n in range(1, N):
        prev = ((x - rl[n]) - ql[n] / prev) / pl[n]
        out.append(prev)
        if not prev > 0.0:
            rho[: n + 1] = out
            return rho, n
    rho[:] = out
    return rho, -1


def _backward_ratio_loop(p, r, q, x, H):
    # minimal solution anchored at Q_H(x) = 0: rho_{j-1} = q_j / (x - r_j - p_j rho_j)
    rho = np.zeros(H)
    for j in range(H - 1, 0, -1):
        d = (x - r[j]) - p[j] * rho[j]
        if not d > 0.0:
            return rho, j
        rho[j - 1] = q[j] / d
    return rho, -1


def _backward_ratio_np(p, r, q, x, H):
    rho = np.zeros(H)
    pl = p[:H].tolist()
    rl = r[:H].tolist()
    ql = q[:H].tolist()
    x = float(x)
    cur = 0.0
    out = [0.0] * H
    for j in range(H - 1, 0, -1):
        d = (x - rl[j]) - pl[j] * cur
        if not d > 0.0:
            rho[:] = out
            return rho, j
        cur = ql[j] / d
        out[j - 1] = cur
    rho[:] = out
    return rho, -1


# ---------------------------------------------------------------------------
# log |Q_n(x) / Q_n(-x)|, both recurrences run side by side


def _pm_ratio_loop(p, r, q, x, N):
    out = np.zeros(N + 1)
    if N == 0:
        return out, -1
    a1 = 1.0
    b1 = (x - r[0]) / p[0]
    a2 = 1.0
    b2 = (-x - r[0]) / p[0]
    s1 = 0.0
    s2 = 0.0
    if not b1 > 0.0:
        return out, 1
    out[1] = math.log(abs(b1)) - math.log(abs(b2))
    for n in range(1, N):
        c1 = ((x - r[n]) * b1 - q[n] * a1) / p[n]
        c2 = ((-x - r[n]) * b2 - q[n] * a2) / p[n]
        a1 = b1
        b1 = c1
        a2 = b2
        b2 = c2
        if not b1 > 0.0:
            return out, n + 1
        big = max(abs(a1), abs(b1))
        if big > RESCALE_HI or big < RESCALE_LO:
            a1 /= big
            b1 /= big
            s1 += math.log(big)
        big = max(abs(a2), abs(b2))
        if big > RESCALE_HI or big < RESCALE_LO:
            a2 /= big
            b2 /= big
            s2 += math.log(big)
        out[n + 1] = (math.log(b1) + s1) - (math.log(abs(b2)) + s2)
    return out, -1


def _pm_ratio_np(p, r, q, x, N):
    mant, lsc = _recurrence_np(p, r, q, np.array([x, -x]), N)
    pos = mant[0]
    bad = np.flatnonzero(~(pos > 0.0))
    out = np.zeros(N + 1)
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(mant)) + lsc
    if bad.size:
        k = int(bad[0])
        out[:k] = la[0, :k] - la[1, :k]
        return out, k
    out[:] = la[0] - la[1]
    return out, -1


# ---------------------------------------------------------------------------
# (-1)^n Q_n(-1) through the summation form, in logs (all terms positive)


def _lae(a, b):
    m = max(a, b)
    if m == -np.inf:
        return -np.inf
    return m + math.log1p(math.exp(-abs(a - b)))


def _qbar_loop(logp, logpi, r, N):
    out = np.zeros(N + 1)
    logS = -np.inf
    for n in range(N):
        if r[n] > 0.0:
            logS = _lae_j(logS, math.log(r[n]) + logpi[n] + out[n])
        if logS == -np.inf:
            out[n + 1] = out[n]
        else:
            out[n + 1] = _lae_j(out[n], LOG2 + logS - logp[n] - logpi[n])
    return out


def _qbar_np(logp, logpi, r, N):
    out = np.zeros(N + 1)
    logS = -math.inf
    lp = logp[:N].tolist()
    lpi = logpi[:N].tolist()
    rr = r[:N].tolist()
    cur = 0.0
    lae = np.logaddexp
    for n in range(N):
        if rr[n] > 0.0:
            logS = float(lae(logS, math.log(rr[n]) + lpi[n] + cur))
        if logS != -math.inf:
            cur = float(lae(cur, LOG2 + logS - lp[n] - lpi[n]))
        out[n + 1] = cur
    return out


# ---------------------------------------------------------------------------
# Sturm counts and bisection on the symmetric tridiagonal truncation


def _sturm_loop(r, p, q, N, x):
    count = 0
    d = r[0] - x
    if abs(d) < PIVMIN:
        d = -PIVMIN
    if d < 0.0:
        count += 1
    for i in range(1, N):
        d = (r[i] - x) - (p[i - 1] * q[i]) / d
        if abs(d) < PIVMIN:
            d = -PIVMIN
        if d < 0.0:
            count += 1
    return count


def _sturm_np(r, p, q, N, xs):
    """Counts of eigenvalues below each entry of ``xs`` (vectorized over xs)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    off2 = p[: N - 1] * q[1:N]
    d = r[0] - xs
    d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
    count = (d < 0.0).astype(np.int64)
    for i in range(1, N):
        d = (r[i] - xs) - off2[i - 1] / d
        d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
        count += d < 0.0
    return count


def _bisect_k_loop(r, p, q, N, k, lo, hi, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_j(r, p, q, N, mid) <= k:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _bisect_all_loop(r, p, q, N, lo, hi, tol):
    out = np.empty(N)
    for k in range(N):
        a, b = _bisect_k_j(r, p, q, N, k, lo, hi, tol)
        out[k] = 0.5 * (a + b)
    return out


def _bisect_k_np(r, p, q, N, k, lo, hi, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_np(r, p, q, N, mid)[0] <= k:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _bisect_all_np(r, p, q, N, lo, hi, tol):
    ks = np.arange(N)
    lo = np.full(N, float(lo))
    hi = np.full(N, float(hi))
    while True:
        mid = 0.5 * (lo + hi)
        active = (hi - lo > tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        below = _sturm_np(r, p, q, N, mid[active]) <= ks[active]
        idx = np.flatnonzero(active)
        lo[idx[below]] = mid[idx[below]]
        hi[idx[~below]] = mid[idx[~below]]
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# band products: row vector times the windowed tridiagonal kernel


def _propagate_loop(v, p, r, q, steps, targets):
    W = v.shape[0]
    out = np.empty((steps.shape[0], targets.shape[0]))
    cur = v.copy()
    nxt = np.empty(W)
    t = 0
    for s in range(steps.shape[0]):
        while t < steps[s]:
            for j in range(W):
                acc = cur[j] * r[j]
                if j > 0:
                    acc += cur[j - 1] * p[j - 1]
                if j < W - 1:
                    acc += cur[j + 1] * q[j + 1]
                nxt[j] = acc
            tmp = cur
            cur = nxt
            nxt = tmp
            t += 1
        for k in range(targets.shape[0]):
            out[s, k] = cur[targets[k]]
    return out, cur


def _propagate_np(v, p, r, q, steps, targets):
    W = v.shape[0]
    out = np.empty((len(steps), len(targets)))
    cur = np.array(v, dtype=np.float64)
    pw = p[: W - 1]
    rw = r[:W]
    qw = q[1:W]
    t = 0
    for s, n in enumerate(steps):
        while t < n:
            nxt = cur * rw
            nxt[1:] += cur[:-1] * pw
            nxt[:-1] += cur[1:] * qw
            cur = nxt
            t += 1
        out[s] = cur[targets]
    return out, cur


# ---------------------------------------------------------------------------
# inverse iteration building block: tridiagonal solve with partial pivoting


def _tridiag_solve_loop(diag, off, lam, rhs):
    # (T - lam I) x = rhs for symmetric tridiagonal T, Gaussian elimination
    # with row interchanges; tiny pivots are floored so the solve never fails.
    n = diag.shape[0]
    d = diag - lam
    dl = np.zeros(max(n - 1, 0))
    du = np.zeros(max(n - 1, 0))
    du2 = np.zeros(max(n - 2, 0))
    swap = np.zeros(max(n - 1, 0), dtype=np.bool_)
    for i in range(n - 1):
        dl[i] = off[i]
        du[i] = off[i]
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if abs(d[i]) < PIVFLOOR:
                d[i] = PIVFLOOR
            fact = dl[i] / d[i]
            dl[i] = fact
            d[i + 1] -= fact * du[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            dl[i] = fact
            temp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = temp - fact * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            swap[i] = True
    if abs(d[n - 1]) < PIVFLOOR:
        d[n - 1] = PIVFLOOR
    x = rhs.copy()
    for i in range(n - 1):
        if swap[i]:
            temp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = temp - dl[i] * x[i]
        else:
            x[i + 1] -= dl[i] * x[i]
    x[n - 1] /= d[n - 1]
    if n > 1:
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return x


# ---------------------------------------------------------------------------
# binding

_recurrence_nb = njit(_recurrence_loop)
_ratio_nb = njit(_ratio_loop)
_backward_ratio_nb = njit(_backward_ratio_loop)
_pm_ratio_nb = njit(_pm_ratio_loop)
_lae_j = njit(_lae)
_qbar_nb = njit(_qbar_loop)
_sturm_j = njit(_sturm_loop)
_bisect_k_j = njit(_bisect_k_loop)
_bisect_k_nb = _bisect_k_j
_bisect_all_nb = njit(_bisect_all_loop)
_propagate_nb = njit(_propagate_loop)
_tridiag_solve_nb = njit(_tridiag_solve_loop)


def _sturm_nb_vec(r, p, q, N, xs):
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    return np.array([_sturm_j(r, p, q, N, float(x)) for x in xs], dtype=np.int64)


IMPLEMENTATIONS = {
    "recurrence": (_recurrence_nb, _recurrence_np),
    "ratio": (_ratio_nb, _ratio_np),
    "backward_ratio": (_backward_ratio_nb, _backward_ratio_np),
    "pm_ratio": (_pm_ratio_nb, _pm_ratio_np),
    "qbar": (_qbar_nb, _qbar_np),
    "sturm": (_sturm_nb_vec, _sturm_np),
    "bisect_k": (_bisect_k_nb, _bisect_k_np),
    "bisect_all": (_bisect_all_nb, _bisect_all_np),
    "propagate": (_propagate_nb, _propagate_np),
    "tridiag_solve": (_tridiag_solve_nb, _tridiag_solve_loop),
}

_pick = 0 if USE_NUMBA else 1

recurrence = IMPLEMENTATIONS["recurrence"][_pick]
ratio_recurrence = IMPLEMENTATIONS["ratio"][_pick]
backward_ratio = IMPLEMENTATIONS["backward_ratio"][_pick]
pm_log_ratio = IMPLEMENTATIONS["pm_ratio"][_pick]
qbar_summation = IMPLEMENTATIONS["qbar"][_pick]
sturm_count = IMPLEMENTATIONS["sturm"][_pick]
bisect_k = IMPLEMENTATIONS["bisect_k"][_pick]
bisect_all = IMPLEMENTATIONS["bisect_all"][_pick]
propagate = IMPLEMENTATIONS["propagate"][_pick]
tridiag_solve = IMPLEMENTATIONS["tridiag_solve"][_pick]
