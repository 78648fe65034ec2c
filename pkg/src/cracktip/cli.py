"""Command-line front end.

Every command resolves its parameters into a ``RunConfig``, writes a run
directory with ``manifest.json`` (resolved config plus source hashes) and the
command's artifacts, and records named checks that ``report`` can render.
Outputs contain no timestamps, so identical configs give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__

OUTPUT_ROOT_ENV = "CRACKTIP_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class ConfigError(ValueError):
    """Invalid configuration (usage error, exit code 2)."""


# ---------------------------------------------------------------------------
# boundary trace grammar
# ---------------------------------------------------------------------------

_TERM = re.compile(r"^\s*([a-z]+)(\d*)\s*(?::\s*([-+0-9.eE]+))?\s*$")


def _trace_atom(name: str, k: str, coef: float) -> Callable:
    from .homogeneity import table

    if name == "tip" and not k:
        return lambda p: coef * SQRT_2_OVER_PI * np.sin(p / 2.0)
    if name == "rot" and not k:
        return lambda p: SQRT_2_OVER_PI * np.sin((p + coef) / 2.0)
    if name == "zero" and not k:
        return lambda p: 0.0 * p
    if name == "one" and not k:
        return lambda p: coef + 0.0 * p
    if name == "cos" and not k:
        return lambda p: coef * np.cos(p)
    if name == "sinhalf" and not k:
        return lambda p: coef * np.sin(p / 2.0)
    if name == "coshalf" and not k:
        return lambda p: coef * np.cos(p / 2.0)
    if name == "zlog" and not k:
        return lambda p: coef * p * np.sin(p / 2.0)
    if name == "a" and k:
        alpha = float(table(max(int(k), 64)).alpha[int(k) - 1])
        return lambda p: coef * np.cos(alpha * p)
    if name in ("b", "odd") and k:
        beta = int(k) - 0.5
        return lambda p: coef * np.sin(beta * p)
    raise ConfigError(f"unknown trace term {name + k!r}")


def parse_trace(spec: str) -> Callable:
    """Boundary trace from ``term[:coef] + term[:coef] ...``.

    Terms: ``tip`` (sqrt(2/pi) sin(phi/2)), ``rot:theta`` (tip profile rotated
    by ``theta``), ``zero``, ``one``, ``cos``, ``sinhalf``, ``coshalf``,
    ``zlog`` (phi sin(phi/2)), ``a<k>`` (cos(alpha_k phi)) and ``b<k>`` or
    ``odd<k>`` (sin((k-1/2) phi)). ``coef`` defaults to 1 except for ``rot``
    where it is the angle.
    """
    if not spec or not spec.strip():
        raise ConfigError("empty trace spec")
    atoms = []
    for part in spec.split("+"):
        m = _TERM.match(part)
        if not m:
            raise ConfigError(f"cannot parse trace term {part!r}")
        name, k, c = m.groups()
        default = 0.0 if name == "rot" else 1.0
        try:
            coef = float(c) if c is not None else default
        except ValueError as exc:
            raise ConfigError(f"bad coefficient in {part!r}") from exc
        atoms.append(_trace_atom(name, k, coef))

    def g(p):
        p = np.asarray(p, dtype=np.float64)
        return sum(a(p) for a in atoms) * np.ones_like(p)

    return g


def parse_mode(spec: str):
    """Linearized solution from ``z``, ``a<k>``, ``b<k>`` or ``const``, joined by ``+``."""
    from .linearized import SeriesSolution

    total = SeriesSolution()
    for part in spec.split("+"):
        m = _TERM.match(part)
        if not m:
            raise ConfigError(f"cannot parse mode {part!r}")
        name, k, c = m.groups()
        coef = float(c) if c is not None else 1.0
        if name == "z" and not k:
            total = total + SeriesSolution.mode("a0", coef=coef)
        elif name in ("a", "b") and k:
            total = total + SeriesSolution.mode(name, int(k), coef)
        elif name == "const" and not k:
            total = total + SeriesSolution.mode("const", coef=coef)
        else:
            raise ConfigError(f"unknown mode {part!r}")
    return total


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

DEFAULTS: dict[str, dict] = {
    "eigen": {"kmax": 10_000, "tol": 1e-12, "rows": 64},
    "certify": {"k_cut": 10_000, "partial_n": 1_000_000, "rows": 64},
    "linear.solve": {"g": "cos", "t": 0.0, "n_modes": 32, "samples": 257},
    "linear.residual": {"mode": "z", "r_min": 1e-2, "n_r": 25, "n_phi": 40, "n_x": 1000, "tol": 1e-10},
    "minimize": {
        "g": "tip",
        "init": "straight",
        "n_knots": 65,
        "h": 0.05,
        "s_min": 1e-6,
        "tol_J": 1e-7,
        "max_iter": 60,
        "damping": 0.25,
        "curvature": True,
        "tip": True,
        "slope_cap": 2.0,
        "bonnet_points": 9,
        "bonnet_r_min": 1e-2,
        "tol_mono": 1e-3,
        "decay_alphas": [0.3, 0.45],
    },
    "vary.tangential": {"eps": 0.1, "mu": 0.01},
    "vary.orthogonal": {"eps": 1e-2, "delta": 1e-3, "sigma": 0.0, "mode": "z", "ordering_factor": 10.0},
    "vary.stationarity": {
        "g": "tip",
        "crack": "straight",
        "n_knots": 129,
        "h": 0.05,
        "eta": [[-0.5, 0.0, 0.2, 0.0, 1.0]],
        "tol_var": 1e-2,
    },
}


@dataclass
class RunConfig:
    """Resolved run description.

    Attributes
    ----------
    command : str
        One of the keys of ``DEFAULTS`` (``linear.solve``, ``vary.orthogonal``...).
    parameters : dict
        Overrides of the command defaults; unknown keys are rejected.
    seed : int
    output_dir : str
    """

    command: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = ""

    def __post_init__(self):
        if self.command not in DEFAULTS:
            raise ConfigError(f"unknown command {self.command!r}")
        unknown = set(self.parameters) - set(DEFAULTS[self.command])
        if unknown:
            raise ConfigError(f"unknown parameters for {self.command}: {sorted(unknown)}")

    def resolved(self) -> dict:
        out = dict(DEFAULTS[self.command])
        out.update(self.parameters)
        return out

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.resolved(),
            "seed": int(self.seed),
            "output_dir": str(self.output_dir),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - {"command", "parameters", "seed", "output_dir"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "command" not in d:
            raise ConfigError("config needs a command")
        return cls(d["command"], dict(d.get("parameters", {})), int(d.get("seed", 0)), str(d.get("output_dir", "")))

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(_dumps(d).encode()).hexdigest()[:12]


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def module_hashes() -> dict:
    root = Path(__file__).resolve().parent
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(root.glob("*.py"))}


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _check(name: str, value, passed: bool, rule: str) -> dict:
    return {"name": name, "value": value, "rule": rule, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# commands; each returns (report name, report dict, {file: text})
# ---------------------------------------------------------------------------


def _run_eigen(p: dict, seed: int):
    from .homogeneity import build_table, compute_alpha, equation_residual

    t0 = time.perf_counter()
    tab = build_table(int(p["kmax"]), float(p["tol"]))
    elapsed = time.perf_counter() - t0
    k = tab.k
    bound_ok = bool(np.all(tab.gamma[1:] < 1.0 / (4.0 * k[1:])))
    a2 = compute_alpha(2, float(p["tol"])) if tab.k_max >= 2 else float("nan")
    head = tab.rows()
    rows = [next(head) for _ in range(min(int(p["rows"]), tab.k_max))]
    report = {
        "k_max": tab.k_max,
        "alpha_2": a2,
        "alpha_2_residual": abs(equation_residual(a2)) if tab.k_max >= 2 else float("nan"),
        "max_residual": float(np.max(np.abs(tab.residual))),
        "rows": rows,
        "checks": [
            _check(f"gamma bound for k<={tab.k_max}", bound_ok, bound_ok, "gamma_k < 1/(4k)"),
            _check("residual", float(np.max(np.abs(tab.residual))), float(np.max(np.abs(tab.residual))) <= float(p["tol"]), f"<= {p['tol']:g}"),
        ],
    }
    files = {"table.csv": tab.to_csv()}
    return "table.json", report, files, {"solve_seconds": elapsed}


def _run_certify(p: dict, seed: int):
    from .certificate import certify, deficits_csv, pair_series_check

    rep = certify(int(p["k_cut"]))
    est, bound = pair_series_check(int(p["partial_n"]))
    report = json.loads(rep.to_json())
    report["pair_series_estimate"] = est
    report["pair_series_tail_bound"] = bound
    report["checks"] = [
        _check("ledger_total", rep.ledger_total, rep.ledger_total < 1.0, "< 1"),
        _check("deficit1", rep.deficit1, rep.deficit1 <= 0.820, "<= 0.820"),
        _check("sharp_total", rep.sharp_total, rep.sharp_total < 1.0, "< 1"),
    ]
    return "cert.json", report, {"deficits.csv": deficits_csv(int(p["rows"]))}, {}


def _run_linear_solve(p: dict, seed: int):
    from .linearized import eval_f, eval_v, solve_bvp

    g = parse_trace(p["g"])
    res = solve_bvp(g, float(p["t"]), int(p["n_modes"]))
    f_m1 = float(eval_f(res.solution, np.array([-1.0]))[0])
    phi = np.linspace(-np.pi, np.pi, int(p["samples"]))
    phi_in = np.clip(phi, -np.pi + 1e-15, np.pi)
    v = eval_v(res.solution, 1.0, phi_in)
    report = {
        "solution": res.solution.to_dict(),
        "l2_error": res.l2_error,
        "even_l2_error": res.even_l2_error,
        "odd_l2_error": res.odd_l2_error,
        "correction": res.correction,
        "f_at_minus_one": f_m1,
        "checks": [_check("f(-1) = t", f_m1, abs(f_m1 - float(p["t"])) <= 1e-13, "|f(-1) - t| <= 1e-13")],
    }
    files = {"boundary.csv": _csv(["phi", "g", "v"], zip(phi, g(phi), v))}
    return "solution.json", report, files, {}


def _run_linear_residual(p: dict, seed: int):
    from .linearized import ResidualGrid, residual

    sol = parse_mode(p["mode"])
    grid = ResidualGrid.default(float(p["r_min"]), int(p["n_r"]), int(p["n_phi"]), int(p["n_x"]))
    res = residual(sol, grid)
    names = ("laplace", "neumann_upper", "neumann_lower", "curvature")
    vals = dict(zip(names, (float(x) for x in res.as_tuple())))
    report = {
        "mode": p["mode"],
        "residuals": vals,
        "checks": [_check(n, v, v <= float(p["tol"]), f"<= {p['tol']:g}") for n, v in vals.items()],
    }
    return "residuals.json", report, {}, {}


def _load_crack(spec: str, n_knots: int, slope_cap: float | None = None):
    from .crack import CrackGraph

    if spec == "straight":
        kw = {} if slope_cap is None else {"slope_cap": float(slope_cap)}
        return CrackGraph.straight(int(n_knots), **kw)
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"crack file not found: {spec}")
    d = json.loads(path.read_text())
    if slope_cap is not None:
        d["slope_cap"] = float(slope_cap)
    return CrackGraph.from_dict(d)


def _run_minimize(p: dict, seed: int):
    from .crack_domain import (
        MinimizeOptions,
        bonnet_profile,
        decay_fit,
        default_radii,
        minimize,
        monotonicity_defect,
    )

    g = parse_trace(p["g"])
    init = _load_crack(p["init"], p["n_knots"], p["slope_cap"])
    opts = MinimizeOptions(
        h=float(p["h"]),
        s_min=float(p["s_min"]),
        tol_J=float(p["tol_J"]),
        max_iter=int(p["max_iter"]),
        damping=float(p["damping"]),
        curvature=bool(p["curvature"]),
        tip=bool(p["tip"]),
    )
    res = minimize(g, init, opts)
    fld, crack = res.field, res.crack
    r_max = 1.0 - float(np.hypot(*crack.tip))
    radii = default_radii(int(p["bonnet_points"]), float(p["bonnet_r_min"]), r_max)
    prof = bonnet_profile(fld, radii)
    defect = monotonicity_defect(prof)
    decay_rows = []
    xi = crack.knots[0] - crack.knots
    cutoffs = [c for c in (0.5, 0.25, 0.125, 0.0625) if np.any(xi > c)]
    for a in p["decay_alphas"]:
        for c in cutoffs:
            decay_rows.append((2, float(a), c, decay_fit(crack, 2, float(a), c)))
    report = {
        "energy": res.report.to_dict(),
        "iterations": res.iterations,
        "flags": res.flags,
        "history": res.history,
        "tip": crack.tip.tolist(),
        "bonnet": {"radii": radii.tolist(), "profile": prof.tolist(), "monotonicity_defect": defect},
        "solver_residual": fld.solver_residual,
        "checks": [
            _check("converged without flags", res.flags, not res.flags, "no flags"),
            _check("bonnet monotone", defect, defect <= float(p["tol_mono"]), f"defect <= {p['tol_mono']:g}"),
        ],
    }
    mesh = fld.mesh
    files = {
        "crack.json": crack.to_json() + "\n",
        "field.csv": _csv(["node", "x1", "x2", "u"], ((i, *mesh.nodes[i], fld.values[i]) for i in range(mesh.nodes.shape[0]))),
        "elements.csv": _csv(["element", "n0", "n1", "n2"], ((i, *mesh.tris[i]) for i in range(mesh.tris.shape[0]))),
        "bonnet.csv": _csv(["r", "profile"], zip(radii, prof)),
        "decay.csv": _csv(["order", "alpha", "cutoff", "C"], decay_rows),
    }
    return "report.json", report, files, {}


def _run_vary_tangential(p: dict, seed: int):
    from .variations import VariationParams, tangential_gain, tangential_gain_poly

    eps, mu = float(p["eps"]), float(p["mu"])
    VariationParams(eps=eps, mu=mu).check_tangential()
    gain = tangential_gain(eps, mu)
    report = {
        "eps": eps,
        "mu": mu,
        "gain": gain,
        "polynomial": tangential_gain_poly(eps, mu),
        "leading": mu * eps - 1.25 * mu * mu,
        "checks": [_check("gain positive", gain, gain > 0.0, "> 0")],
    }
    return "ledger.json", report, {}, {}


def _run_vary_orthogonal(p: dict, seed: int):
    from .variations import orthogonal_ledger

    led = orthogonal_ledger(
        float(p["eps"]),
        float(p["delta"]),
        float(p["sigma"]),
        parse_mode(p["mode"]),
        float(p["ordering_factor"]),
    )
    report = led.to_dict()
    sign = math.copysign(1.0, led.total_dJ)
    report["checks"] = [
        _check("competitor beats u for this sign of delta", led.total_dJ, led.total_dJ > 0.0, "J(u) - J(w) > 0"),
        _check("sign of total_dJ vs eps*delta", sign, sign == -math.copysign(1.0, led.eps * led.delta), "opposite to eps*delta"),
    ]
    return "ledger.json", report, {}, {}


def _run_vary_stationarity(p: dict, seed: int):
    from .fem import solve_harmonic
    from .variations import BumpField, domain_variation_residual, eta_gradient_norm

    g = parse_trace(p["g"])
    crack = _load_crack(p["crack"], p["n_knots"])
    fld = solve_harmonic(crack, g, float(p["h"]))
    rows, checks = [], []
    for spec in p["eta"]:
        if len(spec) != 5:
            raise ConfigError("eta entries are [cx, cy, radius, dx, dy]")
        cx, cy, rad, dx, dy = (float(x) for x in spec)
        eta = BumpField((cx, cy), rad, (dx, dy))
        res = domain_variation_residual(fld, eta, crack)
        nrm = eta_gradient_norm(eta)
        rows.append({"eta": [cx, cy, rad, dx, dy], "residual": res, "eta_norm": nrm})
        checks.append(_check(f"stationary for eta {spec}", res, abs(res) <= float(p["tol_var"]) * nrm, f"|res| <= {p['tol_var']:g} |D eta|"))
    return "ledger.json", {"rows": rows, "checks": checks}, {}, {}


RUNNERS = {
    "eigen": _run_eigen,
    "certify": _run_certify,
    "linear.solve": _run_linear_solve,
    "linear.residual": _run_linear_residual,
    "minimize": _run_minimize,
    "vary.tangential": _run_vary_tangential,
    "vary.orthogonal": _run_vary_orthogonal,
    "vary.stationarity": _run_vary_stationarity,
}


def default_output_dir(cfg: RunConfig) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)
    return Path(root) / f"{cfg.command}-{cfg.digest()}"


def run(cfg: RunConfig) -> dict:
    """Execute a config and write its run directory. Returns the summary."""
    out = Path(cfg.output_dir) if cfg.output_dir else default_output_dir(cfg)
    cfg.output_dir = str(out)
    params = cfg.resolved()
    name, report, files, timings = RUNNERS[cfg.command](params, cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    files = {name: _dumps(report), **files}
    for fname, text in files.items():
        (out / fname).write_text(text)
    # the directory itself is left out so that moved or repeated runs compare equal
    config = cfg.to_dict()
    config.pop("output_dir")
    manifest = {
        "config": config,
        "version": __version__,
        "modules": module_hashes(),
        "report": name,
        "artifacts": sorted(files),
    }
    (out / "manifest.json").write_text(_dumps(manifest))
    checks = report.get("checks", [])
    return {
        "command": cfg.command,
        "output_dir": str(out),
        "report": name,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
        "timings": timings,
    }


def render_report(run_dir: str | Path) -> tuple[str, bool]:
    """Text summary of a run directory; second value is False if files are missing."""
    d = Path(run_dir)
    lines, ok = [], True
    mpath = d / "manifest.json"
    if not mpath.is_file():
        return f"missing: {mpath}", False
    manifest = json.loads(mpath.read_text())
    lines.append(f"command: {manifest['config']['command']}")
    missing = [a for a in manifest.get("artifacts", []) if not (d / a).is_file()]
    for a in missing:
        lines.append(f"missing: {a}")
        ok = False
    rpath = d / manifest.get("report", "")
    if rpath.is_file():
        for c in json.loads(rpath.read_text()).get("checks", []):
            val = c["value"]
            sval = f"{val:.6g}" if isinstance(val, float) else json.dumps(val)
            lines.append(f"{c['name']}={sval} ({c['rule']}) {'PASS' if c['pass'] else 'FAIL'}")
    return "\n".join(lines), ok


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(sp):
    sp.add_argument("--out", default="", help="run directory (default: $%s/<command>-<hash>)" % OUTPUT_ROOT_ENV)
    sp.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cracktip", description="Crack-tip computations for the Mumford-Shah functional.")
    ap.add_argument("--json", action="store_true", help="print a machine-readable summary")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eigen", help="homogeneity exponents")
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--rows", type=int)
    _add_common(sp)

    sp = sub.add_parser("certify", help="invertibility ledger")
    sp.add_argument("--k-cut", dest="k_cut", type=int)
    sp.add_argument("--partial-n", dest="partial_n", type=int)
    sp.add_argument("--rows", type=int)
    _add_common(sp)

    sp = sub.add_parser("linear", help="linearized system")
    lsub = sp.add_subparsers(dest="action", required=True)
    s2 = lsub.add_parser("solve")
    s2.add_argument("--g")
    s2.add_argument("--t", type=float)
    s2.add_argument("--n-modes", dest="n_modes", type=int)
    s2.add_argument("--samples", type=int)
    _add_common(s2)
    s2 = lsub.add_parser("residual")
    s2.add_argument("--mode")
    s2.add_argument("--tol", type=float)
    s2.add_argument("--n-x", dest="n_x", type=int)
    _add_common(s2)

    sp = sub.add_parser("minimize", help="crack minimization on the unit disk")
    sp.add_argument("--g")
    sp.add_argument("--init")
    sp.add_argument("--h", type=float)
    sp.add_argument("--n-knots", dest="n_knots", type=int)
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--tol-J", dest="tol_J", type=float)
    sp.add_argument("--slope-cap", dest="slope_cap", type=float)
    sp.add_argument("--no-curvature", dest="curvature", action="store_false", default=None)
    sp.add_argument("--no-tip", dest="tip", action="store_false", default=None)
    _add_common(sp)

    sp = sub.add_parser("vary", help="tip variations")
    vsub = sp.add_subparsers(dest="action", required=True)
    s2 = vsub.add_parser("tangential")
    s2.add_argument("--eps", type=float)
    s2.add_argument("--mu", type=float)
    _add_common(s2)
    s2 = vsub.add_parser("orthogonal")
    s2.add_argument("--eps", type=float)
    s2.add_argument("--delta", type=float)
    s2.add_argument("--sigma", type=float)
    s2.add_argument("--mode")
    s2.add_argument("--ordering-factor", dest="ordering_factor", type=float)
    _add_common(s2)
    s2 = vsub.add_parser("stationarity")
    s2.add_argument("--g")
    s2.add_argument("--crack")
    s2.add_argument("--h", type=float)
    s2.add_argument("--eta", action="append", type=lambda s: [float(x) for x in s.split(",")], help="cx,cy,radius,dx,dy (repeatable)")
    s2.add_argument("--tol-var", dest="tol_var", type=float)
    _add_common(s2)

    sp = sub.add_parser("report", help="summarize a run directory")
    sp.add_argument("run_dir")

    sp = sub.add_parser("rerun", help="repeat a run from its manifest")
    sp.add_argument("manifest")
    sp.add_argument("--out", default=None)
    return ap


_NON_PARAMS = {"json", "command", "action", "out", "seed", "run_dir", "manifest"}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    command = ns.command if getattr(ns, "action", None) is None else f"{ns.command}.{ns.action}"
    params = {k: v for k, v in vars(ns).items() if k not in _NON_PARAMS and v is not None}
    return RunConfig(command, params, ns.seed, ns.out)


def _emit(as_json: bool, payload: dict, text: str):
    if as_json:
        sys.stdout.write(_dumps(payload))
    else:
        sys.stdout.write(text + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.command == "report":
            text, ok = render_report(ns.run_dir)
            _emit(ns.json, {"summary": text.splitlines(), "complete": ok}, text)
            return 0 if ok else 1
        if ns.command == "rerun":
            path = Path(ns.manifest)
            if not path.is_file():
                raise ConfigError(f"manifest not found: {path}")
            cfg = RunConfig.from_dict(json.loads(path.read_text())["config"])
            if ns.out is not None:
                cfg.output_dir = ns.out
        else:
            cfg = config_from_args(ns)
        summary = run(cfg)
        text = f"{summary['command']} -> {summary['output_dir']}\n" + render_report(summary["output_dir"])[0]
        _emit(ns.json, summary, text)
        return 0
    except ConfigError as exc:
        _emit(True, {"error": "config", "message": str(exc)}, "")
        return 2
    except ValueError as exc:
        from .variations import OrderingError, SupportError

        if not isinstance(exc, (OrderingError, SupportError)):
            _emit(True, {"error": type(exc).__name__, "message": str(exc), "command": ns.command}, "")
            return 1
        _emit(True, {"error": "config", "message": str(exc), "command": ns.command}, "")
        return 2
    except Exception as exc:  # module failure, reported with context
        _emit(True, {"error": type(exc).__name__, "message": str(exc), "command": getattr(ns, "command", None)}, "")
        return 1


if __name__ == "__main__":
    sys.exit(main())
