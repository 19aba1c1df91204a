"""Birth-death walks on {0, 1, 2, ...}: specs, validation, resolved parameters.

A walk is described by one-step probabilities ``p_j`` (up), ``r_j`` (hold) and
``q_j`` (down) with ``q_0 = 0``.  Triples in specs and JSON are ordered
``(p, r, q)``.

Stored float parameters are canonicalized so that ``p = (1 - r) - q`` holds
bit for bit.  With that choice the recurrence for the polynomials returns
``Q_n(1) = 1`` exactly, which the numerics lean on at ``x = 1``.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidSpec

FAMILIES = ("constant", "tabular_with_constant_tail", "linear_rational")
RENORM_TOL = 1e-12
DEFAULT_HORIZON = 100_000

_SPEC_KEYS = {"family", "prefix", "tail", "params", "label"}


def _parse_number(value, where):
    if isinstance(value, bool):
        raise InvalidSpec(f"{where}: booleans are not probabilities")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidSpec(f"{where}: non-finite value {value!r}")
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidSpec(f"{where}: cannot parse {value!r}") from exc
    if isinstance(value, Fraction):
        return value
    raise InvalidSpec(f"{where}: expected a number or 'a/b' string, got {type(value).__name__}")


def _parse_triple(raw, where):
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise InvalidSpec(f"{where}: expected a [p, r, q] triple")
    return tuple(_parse_number(v, f"{where}[{i}]") for i, v in enumerate(raw))


def _is_exact(values):
    return all(isinstance(v, Fraction) for v in values)


def _normalize(triple, where, index0=False):
    p, r, q = triple
    exact = _is_exact(triple)
    if p <= 0:
        raise InvalidSpec(f"{where}: p must be > 0 (got {float(p)!r})")
    if r < 0 or q < 0:
        raise InvalidSpec(f"{where}: r and q must be >= 0")
    if index0 and q != 0:
        raise InvalidSpec(f"{where}: q_0 must be 0 (the walk cannot step below state 0)")
    s = p + r + q
    if abs(float(s) - 1.0) > RENORM_TOL:
        raise InvalidSpec(f"{where}: p + r + q = {float(s)!r}, off from 1 by more than {RENORM_TOL}")
    if s != 1:
        if exact:
            p, r, q = p / s, r / s, q / s
        else:
            p, r, q = float(p) / float(s), float(r) / float(s), float(q) / float(s)
    return (p, r, q)


def _index0_rule(triple):
    """Move the down-mass of state 0 so that q_0 = 0.

    The mass goes to holding when r > 0 (p_0 stays equal to p), and to the up
    move when r = 0 so that a periodic tail stays periodic.
    """
    p, r, q = triple
    zero = q - q
    if r > 0:
        return (p, r + q, zero)
    return (p + q, r, zero)


@dataclass(frozen=True)
class RationalFn:
    """Ratio of two polynomials in j; coefficients in ascending powers."""

    num: tuple
    den: tuple

    @classmethod
    def from_json(cls, raw, where):
        if not isinstance(raw, dict) or set(raw) - {"num", "den"} or "num" not in raw:
            raise InvalidSpec(f"{where}: expected {{'num': [...], 'den': [...]}}")
        num = tuple(_parse_number(c, f"{where}.num") for c in raw["num"])
        den = tuple(_parse_number(c, f"{where}.den") for c in raw.get("den", [1]))
        if not num or not den or all(c == 0 for c in den):
            raise InvalidSpec(f"{where}: empty numerator or zero denominator")
        return cls(num, den)

    def to_json(self):
        return {"num": [_num_out(c) for c in self.num], "den": [_num_out(c) for c in self.den]}

    @property
    def exact(self):
        return _is_exact(self.num + self.den)

    def is_zero(self):
        return all(c == 0 for c in self.num)

    def __call__(self, j):
        num = sum(c * j**k for k, c in enumerate(self.num))
        den = sum(c * j**k for k, c in enumerate(self.den))
        return num / den

    def evaluate(self, js):
        js = np.asarray(js, dtype=np.float64)
        num = np.polynomial.polynomial.polyval(js, [float(c) for c in self.num])
        den = np.polynomial.polynomial.polyval(js, [float(c) for c in self.den])
        return num / den

    def limit(self):
        num = list(self.num)
        den = list(self.den)
        while len(num) > 1 and num[-1] == 0:
            num.pop()
        while len(den) > 1 and den[-1] == 0:
            den.pop()
        if len(num) > len(den):
            return math.copysign(math.inf, float(num[-1]) * float(den[-1]))
        if len(num) < len(den):
            return 0.0
        return float(num[-1]) / float(den[-1])


def _num_out(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return v


@dataclass(frozen=True)
class WalkSpec:
    family: str
    prefix: tuple = ()
    tail: tuple | None = None
    params: dict = field(default_factory=dict)
    label: str = ""

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise InvalidSpec("walk spec must be a JSON object")
        unknown = set(raw) - _SPEC_KEYS
        if unknown:
            raise InvalidSpec(f"unknown walk spec fields: {sorted(unknown)}")
        family = raw.get("family")
        if family not in FAMILIES:
            raise InvalidSpec(f"family must be one of {FAMILIES}, got {family!r}")
        prefix = tuple(_parse_triple(t, f"prefix[{i}]") for i, t in enumerate(raw.get("prefix") or []))
        tail = raw.get("tail")
        tail = _parse_triple(tail, "tail") if tail is not None else None
        params = raw.get("params") or {}
        if not isinstance(params, dict):
            raise InvalidSpec("params must be an object")
        label = raw.get("label", "")
        if not isinstance(label, str):
            raise InvalidSpec("label must be a string")
        return cls(family, prefix, tail, dict(params), label)

    @classmethod
    def from_json(cls, text):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"spec is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self):
        out = {"family": self.family}
        if self.prefix:
            out["prefix"] = [[_num_out(v) for v in t] for t in self.prefix]
        if self.tail is not None:
            out["tail"] = [_num_out(v) for v in self.tail]
        if self.params:
            out["params"] = self.params
        if self.label:
            out["label"] = self.label
        return out


class Walk:
    """Resolved, immutable walk with a total accessor j -> (p_j, r_j, q_j).

    Subclasses supply ``_generate(lo, hi)`` returning float arrays ``(r, q)``
    for indices ``lo..hi-1``; ``p`` is derived as ``(1 - r) - q``.
    """

    exact = False
    max_length = None

    def __init__(self, label="", periodic=False, r_zero_from=None):
        self.label = label
        self.periodic = bool(periodic)
        # first index from which r_j = 0 for every later j (None if unknown/never)
        self.r_zero_from = r_zero_from
        self._lock = threading.Lock()
        self._n = 0
        self._p = np.empty(0)
        self._r = np.empty(0)
        self._q = np.empty(0)
        self._logpi = np.zeros(1)

    def _generate(self, lo, hi):  # pragma: no cover - abstract
        raise NotImplementedError

    def _grow(self, n):
        with self._lock:
            if n <= self._n:
                return
            target = max(n, 2 * self._n, 64)
            if self.max_length is not None:
                if n > self.max_length:
                    raise ValueError(f"{self!r} is only resolved for j < {self.max_length}")
                target = min(target, self.max_length)
            r_new, q_new = self._generate(self._n, target)
            r = np.concatenate([self._r, np.asarray(r_new, dtype=np.float64)])
            q = np.concatenate([self._q, np.asarray(q_new, dtype=np.float64)])
            p = (1.0 - r) - q
            lp = np.log(p[:-1]) - np.log(q[1:])
            logpi = np.concatenate([[0.0], np.cumsum(lp)])
            for a in (p, r, q, logpi):
                a.setflags(write=False)
            self._p, self._r, self._q, self._logpi = p, r, q, logpi
            self._n = target

    def arrays(self, n):
        """Float arrays ``(p, r, q)`` for indices ``0..n-1``."""
        if n > self._n:
            self._grow(n)
        return self._p[:n], self._r[:n], self._q[:n]

    def triple(self, j):
        p, r, q = self.arrays(j + 1)
        return float(p[j]), float(r[j]), float(q[j])

    def p(self, j):
        return self.triple(j)[0]

    def r(self, j):
        return self.triple(j)[1]

    def q(self, j):
        return self.triple(j)[2]

    def log_pi_array(self, n):
        """``log pi_0 .. log pi_{n-1}``."""
        if n + 1 > self._n:
            self._grow(n + 1)
        return self._logpi[:n]

    def log_pi(self, n):
        return float(self.log_pi_array(n + 1)[n])

    def exact_triples(self, n):
        raise NotImplementedError(f"{type(self).__name__} has no exact representation")

    def __repr__(self):
        return f"<{type(self).__name__} {self.label!r} periodic={self.periodic}>"


class SpecWalk(Walk):
    def __init__(self, spec, prefix, tail, rational=None, exact=False, periodic=False, r_zero_from=None):
        super().__init__(spec.label or spec.family, periodic, r_zero_from)
        self.spec = spec
        self.exact = exact
        self._prefix = prefix
        self._tail = tail
        self._rational = rational

    def _formula(self, j):
        pf, rf = self._rational
        p, r = pf(j), rf(j)
        q = 1 - p - r
        t = (p, r, q)
        if j == 0 and q != 0:
            t = _index0_rule(t)
        return t

    def _generate(self, lo, hi):
        r = np.empty(hi - lo)
        q = np.empty(hi - lo)
        js = np.arange(lo, hi)
        if self._rational is None:
            r[:] = float(self._tail[1])
            q[:] = float(self._tail[2])
        else:
            pf, rf = self._rational
            pv = pf.evaluate(js)
            rv = rf.evaluate(js)
            r[:] = rv
            q[:] = (1.0 - pv) - rv
            if lo == 0 and q[0] != 0:
                t = _index0_rule((float(pv[0]), float(rv[0]), float(q[0])))
                r[0], q[0] = t[1], t[2]
        for j in range(lo, min(hi, len(self._prefix))):
            r[j - lo] = float(self._prefix[j][1])
            q[j - lo] = float(self._prefix[j][2])
        return r, q

    def exact_triple(self, j):
        if not self.exact:
            raise NotImplementedError("walk was not specified with exact rationals")
        if j < len(self._prefix):
            return self._prefix[j]
        if self._rational is None:
            return self._tail
        return self._formula(Fraction(j))

    def exact_triples(self, n):
        return [self.exact_triple(j) for j in range(n)]


def make_walk(spec):
    """Validate ``spec`` and resolve it into a :class:`Walk`."""
    if isinstance(spec, dict):
        spec = WalkSpec.from_dict(spec)
    values = [v for t in spec.prefix for v in t] + list(spec.tail or ())
    if spec.family == "constant":
        tail = spec.tail
        if tail is None:
            try:
                tail = tuple(_parse_number(spec.params[k], f"params.{k}") for k in ("p", "r", "q"))
            except KeyError as exc:
                raise InvalidSpec("constant family needs 'tail' or params p, r, q") from exc
            values += list(tail)
        if spec.prefix:
            raise InvalidSpec("constant family takes no prefix; use tabular_with_constant_tail")
        tail = _normalize(tail, "tail")
        if tail[2] <= 0:
            raise InvalidSpec("tail: q must be > 0 (q_{j+1} > 0 for all j)")
        head = _index0_rule(tail)
        exact = _is_exact(values)
        periodic = tail[1] == 0
        return SpecWalk(spec, (head,), tail, exact=exact, periodic=periodic,
                        r_zero_from=0 if periodic else None)

    if spec.family == "tabular_with_constant_tail":
        if spec.tail is None:
            raise InvalidSpec("tabular_with_constant_tail needs a tail triple")
        prefix = tuple(_normalize(t, f"prefix[{i}]", index0=(i == 0)) for i, t in enumerate(spec.prefix))
        for i, t in enumerate(prefix[1:], start=1):
            if t[2] <= 0:
                raise InvalidSpec(f"prefix[{i}]: q must be > 0 (q_{{j+1}} > 0 for all j)")
        tail = _normalize(spec.tail, "tail", index0=not prefix)
        if prefix and tail[2] <= 0:
            raise InvalidSpec("tail: q must be > 0 (q_{j+1} > 0 for all j)")
        r_pos = [i for i, t in enumerate(prefix) if t[1] > 0]
        r_zero_from = None
        if tail[1] == 0:
            r_zero_from = (r_pos[-1] + 1) if r_pos else 0
        return SpecWalk(spec, prefix, tail, exact=_is_exact(values),
                        periodic=(r_zero_from == 0), r_zero_from=r_zero_from)

    # linear_rational
    params = dict(spec.params)
    unknown = set(params) - {"p", "r", "horizon"}
    if unknown:
        raise InvalidSpec(f"linear_rational: unknown params {sorted(unknown)}")
    if "p" not in params or "r" not in params:
        raise InvalidSpec("linear_rational needs params 'p' and 'r' as {num, den}")
    pf = RationalFn.from_json(params["p"], "params.p")
    rf = RationalFn.from_json(params["r"], "params.r")
    horizon = params.get("horizon", DEFAULT_HORIZON)
    if not isinstance(horizon, int) or horizon < 2:
        raise InvalidSpec("params.horizon must be an integer >= 2")
    prefix = tuple(_normalize(t, f"prefix[{i}]", index0=(i == 0)) for i, t in enumerate(spec.prefix))
    js = np.arange(horizon)
    pv = pf.evaluate(js)
    rv = rf.evaluate(js)
    qv = (1.0 - pv) - rv
    if not (np.all(np.isfinite(pv)) and np.all(np.isfinite(rv))):
        raise InvalidSpec("linear_rational: non-finite parameter below the horizon")
    start = len(prefix)
    lo = max(start, 0)
    if start == 0:
        if not (pv[0] > 0 and rv[0] >= 0 and qv[0] >= -RENORM_TOL):
            raise InvalidSpec("linear_rational: invalid triple at j=0")
        lo = 1
    bad = np.flatnonzero(~((pv[lo:] > 0) & (rv[lo:] >= 0) & (qv[lo:] > 0)))
    if bad.size:
        j = int(bad[0]) + lo
        raise InvalidSpec(
            f"linear_rational: constraint violated at j={j}: "
            f"p={pv[j]!r}, r={rv[j]!r}, q={qv[j]!r}"
        )
    for i, t in enumerate(prefix[1:], start=1):
        if t[2] <= 0:
            raise InvalidSpec(f"prefix[{i}]: q must be > 0")
    lim_p, lim_r = pf.limit(), rf.limit()
    lim_q = 1.0 - lim_p - lim_r
    if not (0 <= lim_p <= 1 and 0 <= lim_r <= 1 and lim_q >= -RENORM_TOL):
        raise InvalidSpec(
            f"linear_rational: limits p={lim_p}, r={lim_r}, q={lim_q} are not probabilities"
        )
    exact = _is_exact([v for t in prefix for v in t]) and pf.exact and rf.exact
    r_pos = [i for i, t in enumerate(prefix) if t[1] > 0]
    r_zero_from = None
    if rf.is_zero():
        r_zero_from = (r_pos[-1] + 1) if r_pos else 0
    return SpecWalk(spec, prefix, None, rational=(pf, rf), exact=exact,
                    periodic=(r_zero_from == 0), r_zero_from=r_zero_from)


def log_pi(walk, n):
    """Natural log of ``pi_n = p_0...p_{n-1} / (q_1...q_n)``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return walk.log_pi(n)


def walk_from_json(text):
    return make_walk(WalkSpec.from_json(text))
