"""Command-line front end: ``srlp-lab <command> [spec] [options]``.

Exit codes: 0 success, 1 invalid input (bad spec, unsuitable base, bad
request), 2 a numerical estimate did not converge, 3 a resource cap was hit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, corpus, polynomials, serialize, spectral, theta_transform, transitions
from .errors import (
    ConvergenceFailure,
    InvalidBase,
    InvalidSpec,
    NotConverged,
    ResourceLimit,
    SrlpLabError,
)
from .walk import WalkSpec, make_walk

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_RESOURCE = 0, 1, 2, 3
COMMANDS = ("validate", "eta", "qpoly", "measure", "pn", "ratios", "diagnose", "transform", "example44")
FORMATS = ("json", "csv", "table")


@dataclass
class RunConfig:
    command: str
    spec_path: str | None = None
    spec_inline: str | None = None
    builtin: str | None = None
    tol: float | None = None
    checkpoints: tuple | None = None
    format: str = "table"
    out: str | None = None
    seed: int = 0
    cap: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.checkpoints is not None:
            cps = tuple(int(n) for n in self.checkpoints)
            if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 0:
                raise ValueError("checkpoint grid must be ascending nonnegative integers")
            self.checkpoints = cps
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be positive")

    @classmethod
    def from_dict(cls, raw):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ValueError(f"unknown RunConfig fields: {unknown}")
        return cls(**raw)


class Emitted:
    """Output collector so every command renders through one path."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.chunks = []

    def emit(self, payload, header=None, rows=None, title=None):
        fmt = self.cfg.format
        if fmt == "json" or (header is None and fmt != "json"):
            self.chunks.append(serialize.dumps(payload))
        elif fmt == "csv":
            self.chunks.append(serialize.csv_text(header, rows))
        else:
            self.chunks.append(serialize.table_text(header, rows, title))

    def note(self, text):
        if self.cfg.format == "table":
            self.chunks.append(text.rstrip("\n") + "\n")

    def flush(self):
        text = "".join(self.chunks)
        if self.cfg.out:
            Path(self.cfg.out).write_text(text)
        else:
            sys.stdout.write(text)


def _load_spec(cfg):
    given = [x is not None for x in (cfg.spec_path, cfg.spec_inline, cfg.builtin)]
    if sum(given) != 1:
        raise InvalidSpec("give exactly one of a spec path, --spec-inline or --builtin")
    if cfg.builtin is not None:
        return WalkSpec.from_dict(corpus.builtin_spec(cfg.builtin))
    try:
        text = cfg.spec_inline if cfg.spec_inline is not None else Path(cfg.spec_path).read_text()
    except OSError as exc:
        raise InvalidSpec(f"cannot read spec: {exc}") from exc
    try:
        return WalkSpec.from_json(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"spec is not valid JSON: {exc}") from exc


def _rows_params(walk, n):
    return [(j, *walk.triple(j)) for j in range(n)]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg, out):
    spec = _load_spec(cfg)
    walk = make_walk(spec)
    rows = _rows_params(walk, 11)
    rng = np.random.default_rng(cfg.seed)
    idx = rng.integers(0, 100_000, size=1000)
    p, r, q = walk.arrays(100_000)
    dev = float(np.max(np.abs(p[idx] + r[idx] + q[idx] - 1.0)))
    payload = {
        "label": walk.label,
        "family": spec.family,
        "periodic": walk.periodic,
        "exact_mode": walk.exact,
        "parameters": [{"j": j, "p": a, "r": b, "q": c} for j, a, b, c in rows],
        "sampled_row_sum_deviation": dev,
        "seed": cfg.seed,
    }
    out.emit(payload, ["j", "p", "r", "q"], rows, title=f"walk {walk.label!r}")
    out.note(f"periodic: {walk.periodic}  exact mode: {walk.exact}  "
             f"row-sum deviation on 1000 sampled j (seed {cfg.seed}): {dev:.3e}")
    return EXIT_OK


def _eta_payload(est):
    rows = list(zip(est.truncation_orders, est.largest_zeros))
    return est.to_json(), rows


def cmd_eta(cfg, out):
    walk = make_walk(_load_spec(cfg))
    o = cfg.options
    kw = dict(tol=cfg.tol or spectral.DEFAULT_ETA_TOL, N0=o.get("N0", spectral.DEFAULT_N0),
              Nmax=o.get("Nmax", spectral.DEFAULT_NMAX))
    code = EXIT_OK
    try:
        est = spectral.estimate_eta(walk, **kw)
    except NotConverged as exc:
        est, code = exc.estimate, EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
    payload, rows = _eta_payload(est)
    out.emit(payload, ["N", "largest_zero"], rows, title="largest zero of Q_N")
    out.note(f"raw {est.raw:.12g}  extrapolated {est.extrapolated}  value {est.value:.12g}  "
             f"converged {est.converged}  extrapolation converged {est.extrapolation_converged}")
    return code


def cmd_qpoly(cfg, out):
    walk = make_walk(_load_spec(cfg))
    x, N = float(cfg.options.get("x", 1.0)), int(cfg.options.get("N", 20))
    seq = polynomials.eval_Q(walk, N, x)
    vals = seq.to_float()
    rows = [(n, int(seq.sign[n]), float(seq.log_abs[n]), float(vals[n])) for n in range(N + 1)]
    payload = {"x": x, "N": N, "sign": seq.sign.tolist(), "log_abs": seq.log_abs.tolist(),
               "values": vals.tolist()}
    out.emit(payload, ["n", "sign", "log_abs", "Q_n"], rows, title=f"Q_n({x:.12g})")
    return EXIT_OK


def cmd_measure(cfg, out):
    walk = make_walk(_load_spec(cfg))
    m = spectral.quadrature_measure(walk, int(cfg.options.get("order", 60)))
    rows = list(zip(m.nodes.tolist(), m.weights.tolist()))
    out.emit(m.to_json(), ["node", "weight"], rows, title=f"{m.order}-point quadrature")
    return EXIT_OK


def cmd_pn(cfg, out):
    walk = make_walk(_load_spec(cfg))
    o = cfg.options
    i, j, n = int(o["i"]), int(o["j"]), int(o["n"])
    exact = bool(o.get("exact")) and walk.exact
    val = transitions.n_step(walk, i, j, n, exact=exact, cap=cfg.cap)
    payload = {"i": i, "j": j, "n": n, "exact": exact, "value": val}
    if exact:
        payload["float"] = float(val)
    out.emit(payload, ["i", "j", "n", "P_ij(n)"], [(i, j, n, val)])
    return EXIT_OK


def cmd_ratios(cfg, out):
    walk = make_walk(_load_spec(cfg))
    o = cfg.options
    i, j, k, l = (int(o[s]) for s in "ijkl")
    grid = o.get("grid")
    tr = transitions.ratio_trace(walk, i, j, k, l, n_grid=grid, n_max=int(o.get("n_max", 2048)),
                                 cap=cfg.cap)
    rows = [(n, v, tr.predicted_limit) for n, v in zip(tr.n_grid, tr.ratios)]
    out.emit(tr.to_json(), ["n", "ratio", "predicted_limit"], rows,
             title=f"P_{i}{j}(n) / P_{k}{l}(n)")
    return EXIT_OK


def _series_rows(reports):
    rows = []
    for rep in reports:
        last = rep.checkpoints[-1] if rep.checkpoints else (None, None)
        rows.append((rep.name, "" if rep.theta is None else rep.theta, rep.verdict, last[0], last[1]))
    return rows


def cmd_diagnose(cfg, out):
    walk = make_walk(_load_spec(cfg))
    dc = analysis.DiagnoseConfig(
        checkpoints=cfg.checkpoints or analysis.DEFAULT_CHECKPOINTS,
        eta_tol=cfg.tol or spectral.DEFAULT_ETA_TOL,
    )
    rep = analysis.diagnose(walk, dc)
    out.emit(rep.to_json(), ["series", "theta", "verdict", "N", "partial_sum"],
             _series_rows(rep.criteria), title=f"SRLP diagnosis for {rep.label!r}")
    out.note(f"verdict: {rep.verdict}  reasons: {', '.join(rep.reasons) or '-'}  "
             f"eta: {rep.eta.value:.12g}")
    for c in rep.criteria:
        out.note(f"  {c.name}: {c.evidence}")
    for n in rep.notes:
        out.note(f"  note: {n}")
    return EXIT_RESOURCE if rep.resource_limited else EXIT_OK


def cmd_transform(cfg, out):
    walk = make_walk(_load_spec(cfg))
    o = cfg.options
    theta = float(o["theta"])
    tw = theta_transform.transform(walk, theta)
    if o.get("export"):
        spec = theta_transform.export_tabular(tw, int(o["export"]))
        out.chunks.append(json.dumps(spec.to_dict(), indent=2) + "\n")
        return EXIT_OK
    rows = _rows_params(tw, 11)
    resid = {
        "Q_identity_n50_x-1": theta_transform.transformed_Q_identity_residual(tw, 50, -1.0),
        "pi_identity_n200": theta_transform.transformed_pi_identity_residual(tw, 200),
    }
    payload = {
        "theta": theta,
        "periodic": tw.periodic,
        "parameters": [{"j": j, "p": a, "r": b, "q": c} for j, a, b, c in rows],
        "identity_residuals": resid,
    }
    out.emit(payload, ["j", "p", "r", "q"], rows, title=f"transform at theta={theta:.12g}")
    for k, v in resid.items():
        out.note(f"{k}: {v:.3e}")
    return EXIT_OK


def cmd_example44(cfg, out):
    if cfg.spec_path is None and cfg.spec_inline is None and cfg.builtin is None:
        base = WalkSpec.from_dict(corpus.EDGE_RECURRENT_BASES[corpus.DEFAULT_EDGE_BASE][0])
    else:
        base = _load_spec(cfg)
    alpha = float(cfg.options.get("alpha", 1.25))
    cps = cfg.checkpoints
    tw = theta_transform.example_44(base, alpha, cps)
    edge = 1.0 / alpha
    m1 = analysis.series_M1(tw, cps)
    mt = analysis.series_M_theta(tw, edge, cps)
    payload = {"label": tw.label, "alpha": alpha, "edge": edge, "M1": m1.to_json(),
               "M_theta_at_edge": mt.to_json()}
    rows = []
    for (n, a), (_, b) in zip(m1.checkpoints, mt.checkpoints):
        rows.append((n, a, b))
    out.emit(payload, ["N", "M1", f"M_theta({edge:.6g})"], rows, title=tw.label)
    out.note(f"M1: {m1.verdict} ({m1.evidence})")
    out.note(f"M_theta: {mt.verdict} ({mt.evidence})")
    return EXIT_OK


HANDLERS = {
    "validate": cmd_validate,
    "eta": cmd_eta,
    "qpoly": cmd_qpoly,
    "measure": cmd_measure,
    "pn": cmd_pn,
    "ratios": cmd_ratios,
    "diagnose": cmd_diagnose,
    "transform": cmd_transform,
    "example44": cmd_example44,
}


# ---------------------------------------------------------------------------
# argument parsing


def _checkpoint_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("checkpoints are comma-separated integers") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", nargs="?", help="path to a walk spec JSON file")
    common.add_argument("--spec-inline", help="walk spec as a JSON string")
    common.add_argument("--builtin", choices=sorted(corpus.SPECS), help="use a named built-in walk")
    common.add_argument("--format", choices=FORMATS, default="table")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--tol", type=float, help="tolerance (edge estimation)")
    common.add_argument("--checkpoints", type=_checkpoint_list, help="e.g. 64,128,256")
    common.add_argument("--cap", type=int, help="state cap for matrix powers (env SRLP_LAB_CAP)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--config", help="RunConfig JSON file; command-line flags take precedence")

    parser = argparse.ArgumentParser(prog="srlp-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="resolve and check a walk spec")
    p = sub.add_parser("eta", parents=[common], help="estimate the spectral edge")
    p.add_argument("--N0", type=int, default=spectral.DEFAULT_N0)
    p.add_argument("--Nmax", type=int, default=spectral.DEFAULT_NMAX)
    p = sub.add_parser("qpoly", parents=[common], help="table of Q_n(x)")
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--N", type=int, default=20)
    p = sub.add_parser("measure", parents=[common], help="Gaussian quadrature of the walk measure")
    p.add_argument("--order", type=int, default=60)
    p = sub.add_parser("pn", parents=[common], help="n-step transition probability")
    for s in ("i", "j", "n"):
        p.add_argument(s, type=int)
    p.add_argument("--exact", action="store_true", help="rational arithmetic for rational specs")
    p = sub.add_parser("ratios", parents=[common], help="ratio trace P_ij(n) / P_kl(n)")
    for s in "ijkl":
        p.add_argument(s, type=int)
    p.add_argument("--n-max", type=int, default=2048)
    p.add_argument("--grid", type=_checkpoint_list, help="explicit step grid")
    sub.add_parser("diagnose", parents=[common], help="full SRLP diagnosis")
    p = sub.add_parser("transform", parents=[common], help="theta-transformed walk")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--export", type=int, metavar="PREFIX_LEN", help="emit a tabular spec")
    p = sub.add_parser("example44", parents=[common], help="edge-recurrent transient walk")
    p.add_argument("--alpha", type=float, default=1.25)
    return parser


_OPTION_KEYS = {
    "eta": ("N0", "Nmax"),
    "qpoly": ("x", "N"),
    "measure": ("order",),
    "pn": ("i", "j", "n", "exact"),
    "ratios": ("i", "j", "k", "l", "n_max", "grid"),
    "transform": ("theta", "export"),
    "example44": ("alpha",),
}


def config_from_args(ns):
    base = {}
    if ns.config:
        base = json.loads(Path(ns.config).read_text())
        if not isinstance(base, dict):
            raise ValueError("config file must hold a JSON object")
        base.setdefault("command", ns.command)
    raw = dict(base)
    raw["command"] = ns.command
    flags = {
        "spec_path": ns.spec,
        "spec_inline": ns.spec_inline,
        "builtin": ns.builtin,
        "tol": ns.tol,
        "checkpoints": ns.checkpoints,
        "out": ns.out,
        "cap": ns.cap,
    }
    for k, v in flags.items():
        if v is not None:
            raw[k] = v
    if ns.format != "table" or "format" not in raw:
        raw["format"] = ns.format
    if ns.seed != 0 or "seed" not in raw:
        raw["seed"] = ns.seed
    opts = dict(raw.get("options", {}))
    for key in _OPTION_KEYS.get(ns.command, ()):
        opts[key] = getattr(ns, key)
    raw["options"] = opts
    return RunConfig.from_dict(raw)


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Emitted(cfg)
    try:
        code = HANDLERS[cfg.command](cfg, out)
    except ResourceLimit as exc:
        print(f"error: {exc} (Monte Carlo is out of scope; try a smaller n or raise --cap)",
              file=sys.stderr)
        return EXIT_RESOURCE
    except (NotConverged, ConvergenceFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidSpec as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidBase as exc:
        print(f"error: invalid base walk: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SrlpLabError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out.flush()
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
