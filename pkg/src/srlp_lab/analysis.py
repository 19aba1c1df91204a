"""Series criteria for the strong ratio limit property and the combined diagnosis.

Every series here has nonnegative terms, evaluated in log space so that
pi_j spanning hundreds of orders of magnitude costs nothing.  Verdicts are
three-valued: convergence needs a certified tail bound, divergence needs
sustained growth over the last three checkpoint doublings, and anything
else is reported as inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotConverged, ResourceLimit, SrlpLabError, ThetaBelowEta
from .polynomials import log_Q_positive, q_ratio_sequence
from .spectral import (
    DEFAULT_ETA_TOL,
    DEFAULT_N0,
    DEFAULT_NMAX,
    c_n_sequence,
    estimate_eta,
    finite_horizon_edge,
    quadrature_measure,
)

SCHEMA_VERSION = "1"
SERIES_NAMES = ("M1", "L", "L_eta", "R_over_P", "M_theta")
DEFAULT_CHECKPOINTS = tuple(2**k for k in range(6, 21))

DELTA_ABS = 1e-6
GROWTH_FRACTION = 0.1
GEOMETRIC_REL_TAIL = 1e-9
POWER_REL_TAIL = 1e-3
POWER_MIN_EXPONENT = 1.25


@dataclass
class SeriesReport:
    name: str
    checkpoints: list
    log_partial_sums: list
    verdict: str
    evidence: str
    theta: float | None = None
    tail_bound: float | None = None

    @property
    def partial_sums(self):
        return [s for _, s in self.checkpoints]

    def to_json(self):
        return {
            "name": self.name,
            "theta": self.theta,
            "verdict": self.verdict,
            "evidence": self.evidence,
            "tail_bound": self.tail_bound,
            "checkpoints": [[n, s] for n, s in self.checkpoints],
            "log_partial_sums": list(self.log_partial_sums),
        }


def _exp(v):
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _fmt_log(v):
    return f"{math.exp(v):.4g}" if v < 700 else f"e^{v:.6g}"


def _lse(a):
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if m == -math.inf:
        return m
    return m + math.log(float(np.sum(np.exp(a - m))))


def _checkpoints(checkpoints):
    cps = list(DEFAULT_CHECKPOINTS if checkpoints is None else checkpoints)
    if not cps:
        raise ValueError("need at least one checkpoint")
    cps = [int(n) for n in cps]
    if any(n < 0 for n in cps) or any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be ascending nonnegative integers")
    return cps


def _geometric_certificate(lt, J, logS):
    lo = max(J // 2, 1)
    w = lt[lo : J + 1]
    if not np.all(np.isfinite(w)):
        return None
    log_rho = float(np.max(np.diff(w)))
    if not log_rho < 0:
        return None
    rho = math.exp(log_rho)
    log_tail = float(lt[J]) + log_rho - math.log1p(-rho)
    if log_tail - logS < math.log(GEOMETRIC_REL_TAIL):
        return _exp(log_tail), f"geometric tail: term ratio <= {rho:.6g} on [{lo}, {J}]"
    return None


def _power_certificate(lt, J, logS):
    if J < 16:
        return None
    w = lt[J // 4 : J + 1]
    if not np.all(np.isfinite(w)) or np.any(np.diff(w) > 0):
        return None
    s1 = (lt[J // 4] - lt[J // 2]) / math.log(2.0)
    s2 = (lt[J // 2] - lt[J]) / math.log(2.0)
    s = float(min(s1, s2))
    if not s >= POWER_MIN_EXPONENT:
        return None
    js = np.arange(J // 2, J + 1)
    logC = float(np.max(lt[J // 2 : J + 1] + s * np.log(js)))
    log_tail = logC + (1.0 - s) * math.log(J) - math.log(s - 1.0)
    if log_tail - logS < math.log(POWER_REL_TAIL):
        return _exp(log_tail), f"power-law tail: terms <= C j^-{s:.4g} on [{J // 2}, {J}]"
    return None


def _verdict(lt, cps, logS, zero_from):
    """Apply the divergence policy to log terms ``lt`` (indices 0..cps[-1])."""
    J = cps[-1]
    if zero_from is not None and zero_from <= J:
        if np.all(lt[zero_from : J + 1] == -np.inf):
            return "converges", f"terms vanish identically from j={zero_from}", 0.0
    if logS[-1] == -math.inf:
        return "inconclusive", "all computed terms are zero but no structural zero tail", None
    for cert in (_geometric_certificate, _power_certificate):
        got = cert(lt, J, logS[-1])
        if got is not None:
            return "converges", got[1], got[0]
    if len(cps) >= 5:
        # block sums between consecutive checkpoints, computed without cancellation
        blocks = [_lse(lt[a + 1 : b + 1]) for a, b in zip(cps[-5:], cps[-4:])]
        ok = all(
            blocks[i + 1] >= max(blocks[i] + math.log(GROWTH_FRACTION), math.log(DELTA_ABS))
            for i in range(3)
        )
        if ok:
            incs = ", ".join(_fmt_log(b) for b in blocks)
            return "diverges", f"sustained growth over the last checkpoints (increments {incs})", None
        return "inconclusive", "increments shrink but no tail bound could be certified", None
    return "inconclusive", "too few checkpoints for the growth test", None


def _report(name, lt, cps, theta=None, zero_from=None, extra=""):
    lS = np.logaddexp.accumulate(lt)
    logS = [float(lS[n]) for n in cps]
    verdict, evidence, tail = _verdict(lt, cps, logS, zero_from)
    if extra:
        evidence = f"{evidence}; {extra}"
    return SeriesReport(
        name=name,
        checkpoints=[(n, _exp(v)) for n, v in zip(cps, logS)],
        log_partial_sums=logS,
        verdict=verdict,
        evidence=evidence,
        theta=theta,
        tail_bound=tail,
    )


def _base_logs(walk, N):
    p, r, _ = walk.arrays(N + 1)
    logpi = walk.log_pi_array(N + 1)
    with np.errstate(divide="ignore"):
        return np.log(p), np.log(r), logpi


def series_terms(walk, name, N, theta=None, horizon=None):
    """Log terms j = 0..N of the named series.

    ``horizon`` switches the Q_j(theta) values to the edge evaluation of
    :func:`~srlp_lab.polynomials.edge_ratios`.
    """
    logp, logr, logpi = _base_logs(walk, N)
    if name == "L":
        return -(logp + logpi)
    if name == "R_over_P":
        return logr - logp
    if name == "M1":
        return np.logaddexp.accumulate(logr + logpi) - logp - logpi
    if name in ("L_eta", "M_theta"):
        lq = log_Q_positive(walk, theta, N + 1, horizon)
        pair = lq[: N + 1] + lq[1 : N + 2]
        if name == "L_eta":
            return -(logp + logpi + pair)
        inner = np.logaddexp.accumulate(logr - math.log(theta) + logpi + 2.0 * lq[: N + 1])
        return math.log(theta) + inner - logp - logpi - pair
    raise ValueError(f"unknown series {name!r}")


def series_M1(walk, checkpoints=None):
    cps = _checkpoints(checkpoints)
    zero = 0 if walk.periodic else None
    return _report("M1", series_terms(walk, "M1", cps[-1]), cps, zero_from=zero)


def series_L(walk, checkpoints=None):
    cps = _checkpoints(checkpoints)
    return _report("L", series_terms(walk, "L", cps[-1]), cps)


def series_r_over_p(walk, checkpoints=None):
    cps = _checkpoints(checkpoints)
    return _report("R_over_P", series_terms(walk, "R_over_P", cps[-1]), cps, zero_from=walk.r_zero_from)


def series_L_eta(walk, eta, checkpoints=None, horizon=None):
    """L at the edge; also records whether it dominates L at every checkpoint."""
    cps = _checkpoints(checkpoints)
    lt = series_terms(walk, "L_eta", cps[-1], float(eta), horizon)
    lL = np.logaddexp.accumulate(series_terms(walk, "L", cps[-1]))
    lE = np.logaddexp.accumulate(lt)
    dominates = bool(np.all(lE[cps] >= lL[cps] - 1e-12 * np.maximum(1.0, np.abs(lL[cps]))))
    return _report("L_eta", lt, cps, theta=float(eta), extra=f"dominates L at every checkpoint: {dominates}")


def series_M_theta(walk, theta, checkpoints=None, horizon=None):
    cps = _checkpoints(checkpoints)
    theta = float(theta)
    if not theta > 0:
        raise ThetaBelowEta("theta must be > 0")
    zero = 0 if walk.periodic else None
    extra = "exploratory: theta > 1" if theta > 1 else ""
    return _report("M_theta", series_terms(walk, "M_theta", cps[-1], theta, horizon), cps, theta, zero, extra)


def theta_sweep(eta, points=8, upper=1.0, min_gap=1e-6):
    """Evenly spaced theta grid on [eta, upper].

    A single point when eta is within ``min_gap`` of ``upper``: an edge
    estimate just under 1 may sit below the true edge, where Q_j changes sign.
    """
    if upper - eta < min_gap:
        return [upper]
    return list(np.linspace(eta, upper, points))


# ---------------------------------------------------------------------------
# diagnosis


@dataclass
class DiagnoseConfig:
    checkpoints: tuple = DEFAULT_CHECKPOINTS
    eta_tol: float = DEFAULT_ETA_TOL
    N0: int = DEFAULT_N0
    Nmax: int = DEFAULT_NMAX
    qratio_n: int = 10_000
    measure_order: int = 60
    max_horizon: int = 2**23

    def __post_init__(self):
        self.checkpoints = tuple(_checkpoints(self.checkpoints))
        if not self.eta_tol > 0:
            raise ValueError("eta_tol must be > 0")
        if self.qratio_n < 1 or self.measure_order < 1:
            raise ValueError("qratio_n and measure_order must be >= 1")


@dataclass
class SrlpReport:
    label: str
    eta: object
    periodic: bool
    criteria: list
    q_ratio_limit_estimate: float | None
    c_n_tail: list
    verdict: str
    reasons: list
    edge_theta: float | None = None
    notes: list = field(default_factory=list)
    resource_limited: bool = False

    def to_json(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "verdict": self.verdict,
            "reasons": list(self.reasons),
            "periodic": self.periodic,
            "eta": None if self.eta is None else self.eta.to_json(),
            "edge_theta": self.edge_theta,
            "q_ratio_limit_estimate": self.q_ratio_limit_estimate,
            "c_n_tail": list(self.c_n_tail),
            "criteria": [c.to_json() for c in self.criteria],
            "notes": list(self.notes),
            "resource_limited": self.resource_limited,
        }


def _skipped(name, theta, why):
    return SeriesReport(name, [], [], "inconclusive", f"not evaluated: {why}", theta)


def diagnose(walk, config=None):
    """Run every criterion and combine them into an SRLP verdict.

    Aperiodic walks are declared to have the SRLP when any sufficient
    criterion diverges; periodic walks never have it.  Nothing here ever
    claims failure for an aperiodic walk.
    """
    cfg = config or DiagnoseConfig()
    cps = list(cfg.checkpoints)
    notes = []
    limited = False

    eta = None
    try:
        eta = estimate_eta(walk, cfg.eta_tol, cfg.N0, cfg.Nmax)
    except NotConverged as exc:
        eta = exc.estimate
        notes.append(f"eta: {exc}")

    results = {
        "M1": series_M1(walk, cps),
        "L": series_L(walk, cps),
        "R_over_P": series_r_over_p(walk, cps),
    }

    theta = None
    horizon = 4 * max(cps[-1], cfg.qratio_n)
    try:
        if horizon > cfg.max_horizon:
            raise ResourceLimit(f"edge horizon {horizon} exceeds {cfg.max_horizon}")
        theta = finite_horizon_edge(walk, horizon)
    except ResourceLimit as exc:
        limited = True
        notes.append(f"edge: {exc}")
    except SrlpLabError as exc:
        notes.append(f"edge: {exc}")

    for name, fn in (("L_eta", series_L_eta), ("M_theta", series_M_theta)):
        if theta is None:
            results[name] = _skipped(name, None, "no edge theta")
            continue
        try:
            results[name] = fn(walk, theta, cps, horizon)
        except ThetaBelowEta as exc:
            results[name] = _skipped(name, theta, str(exc))

    qlim = None
    if theta is not None:
        try:
            qlim = float(q_ratio_sequence(walk, theta, cfg.qratio_n, horizon=horizon)[-1])
        except ThetaBelowEta as exc:
            notes.append(f"q ratio: {exc}")

    c_tail = []
    try:
        meas = quadrature_measure(walk, cfg.measure_order)
        top = meas.exactness_degree
        c_tail = [float(v) for v in c_n_sequence(meas, top)[max(0, top - 7) :]]
    except SrlpLabError as exc:
        notes.append(f"measure: {exc}")

    criteria = [results[n] for n in SERIES_NAMES]
    if walk.periodic:
        verdict, reasons = "srlp_fails_periodic", ["periodic"]
    else:
        reasons = [c.name for c in criteria if c.verdict == "diverges"]
        verdict = "srlp_established" if reasons else "inconclusive"
    return SrlpReport(
        label=walk.label,
        eta=eta,
        periodic=walk.periodic,
        criteria=criteria,
        q_ratio_limit_estimate=qlim,
        c_n_tail=c_tail,
        verdict=verdict,
        reasons=reasons,
        edge_theta=theta,
        notes=notes,
        resource_limited=limited,
    )
