"""Command line front end: ``birkhoff-mf <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or system, 3 solver failure,
4 a diagnostics check failed.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernels
from .builtin import BUILTINS, load_builtin
from .gibbs import gibbs_inequality_check, gibbs_state, variational_check
from .pressure import DIVERGENT, PressureError, PressureSurface, manhattan_boundary
from .spectrum import (
    SolverError,
    SolverSettings,
    SpectrumCurve,
    SpectrumSolver,
    diagnostics_passed,
    shape_diagnostics,
    translation_invariance_check,
)
from .system import (
    GeometricTail,
    PotentialFamily,
    PowerTail,
    SystemSpec,
    check_finite_irreducibility,
    lyapunov_family,
    retruncate,
    validate_system,
)

log = logging.getLogger("birkhoff_mf")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4
SCHEMA = 1
CSV_COLUMNS = ["xi", "t", "q", "W_residual", "inner_residual", "flags"]


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """17 significant digits; infinities as ``inf``/``-inf``."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _json_num(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


# ----------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    system: str = "example_5_1"
    family: Optional[str] = None
    config_path: Optional[str] = None
    truncation: Optional[int] = None
    grid: int = 1000
    xi_cap: float = 10.0
    margin: float = 1e-3
    out: str = "."
    fmt: str = "csv"
    tol_root: float = 1e-14
    tol_grad: float = 1e-13
    resolved: dict = field(default_factory=dict)

    def settings(self) -> SolverSettings:
        return SolverSettings(tol_root=self.tol_root, tol_grad=self.tol_grad, xi_cap=self.xi_cap,
                              margin=self.margin, count=self.grid)

    def check(self):
        if self.grid < 1:
            raise ConfigError("grid count must be >= 1")
        if self.tol_root <= 0 or self.tol_grad <= 0:
            raise ConfigError("tolerances must be positive")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.out and self.out != "-":
            out = Path(self.out)
            try:
                out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise ConfigError(f"cannot create output directory {out}: {exc}") from None
            if not os.access(out, os.W_OK):
                raise ConfigError(f"output directory {out} is not writable")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _matrix(text: str) -> np.ndarray:
    return np.array([_floats(row) for row in text.split(";") if row.strip()])


def system_from_config(path: str):
    """Parse an INI-style system description; returns ``(spec, family, resolved dict)``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "system" not in cp:
        raise ConfigError("config needs a [system] section")
    sysc = cp["system"]
    if "builtin" in sysc:
        n = cp.getint("truncation", "N", fallback=None) if "truncation" in cp else None
        spec, fam = load_builtin(sysc["builtin"], n)
        return spec, fam, {"system": {"builtin": sysc["builtin"]}, "truncation": {"N": n}}
    kind = sysc.get("kind", "full_shift")
    ratios = _floats(sysc["ratios"])
    incidence = None
    if kind == "markov":
        incidence = _matrix(sysc["incidence"])
    elif kind != "full_shift":
        raise ConfigError(f"unknown system kind {kind!r}")
    intervals = _matrix(sysc["intervals"]) if "intervals" in sysc else None
    tail = None
    resolved = {"system": dict(sysc)}
    if "truncation" in cp:
        tc = cp["truncation"]
        resolved["truncation"] = dict(tc)
        kind_t = tc.get("tail", "none")
        if kind_t == "geometric":
            tail = GeometricTail(tc.getfloat("tail_scale", 1.0), tc.getfloat("tail_rate"))
        elif kind_t == "power":
            tail = PowerTail(tc.getfloat("tail_scale", 1.0), tc.getfloat("tail_exponent"),
                             tc.getfloat("tail_shift_lo", 0.0), tc.getfloat("tail_shift_hi", 0.0))
        elif kind_t != "none":
            raise ConfigError(f"unknown tail model {kind_t!r}")
    spec = SystemSpec(np.array(ratios), incidence=incidence, intervals=intervals, tail=tail,
                      infinite=tail is not None, name=Path(path).stem)
    famc = cp["family"] if "family" in cp else {}
    comp = tuple(_floats(famc["comparability"])) if "comparability" in famc else None
    if "potential" in sysc:
        fam = PotentialFamily(
            np.array(_floats(sysc["potential"])),
            lower_bound=float(famc["lower_bound"]) if "lower_bound" in famc else None,
            comparability=comp,
            bounded=str(famc.get("bounded", "true")).lower() in ("1", "true", "yes"),
        )
    else:
        fam = lyapunov_family(spec)
    if famc:
        resolved["family"] = dict(famc)
    return spec, fam, resolved


def load_system(cfg: RunConfig):
    """Resolve and validate the configured system; any problem raises ``ConfigError``."""
    try:
        return _load_system(cfg)
    except ConfigError:
        raise
    except (KeyError, ValueError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from None


def _load_system(cfg: RunConfig):
    if cfg.config_path:
        spec, fam, resolved = system_from_config(cfg.config_path)
    else:
        if cfg.system not in BUILTINS:
            raise ConfigError(f"unknown builtin system {cfg.system!r}")
        spec, fam = load_builtin(cfg.system, cfg.truncation)
        resolved = {"system": {"builtin": cfg.system}, "truncation": {"N": cfg.truncation}}
    if cfg.family:
        if cfg.family == "lyapunov":
            fam = lyapunov_family(spec)
        elif cfg.family in BUILTINS:
            fam = load_builtin(cfg.family, cfg.truncation)[1]
        else:
            try:
                vals = _floats(cfg.family)
            except ValueError:
                raise ConfigError(f"cannot parse family {cfg.family!r}") from None
            fam = PotentialFamily(np.array(vals))
        resolved["family"] = {"source": cfg.family}
    problems = validate_system(spec, fam)
    if problems:
        raise ConfigError("; ".join(problems))
    ok, witness = check_finite_irreducibility(spec)
    if not ok:
        raise ConfigError(f"system is not finitely irreducible: no connection for pair {witness}")
    cfg.resolved = resolved
    return spec, fam


def _header(cfg: RunConfig, solver: Optional[SpectrumSolver] = None, extra: Optional[dict] = None) -> dict:
    head = {
        "schema": SCHEMA,
        "config": {k: v for k, v in asdict(cfg).items() if k != "resolved"},
        "resolved": cfg.resolved,
        "backend": _kernels.backend(),
    }
    if solver is not None:
        head["h"] = _json_num(solver.h)
        head["theta"] = _json_num(solver.theta)
        head["range"] = {k: (_json_num(v) if isinstance(v, float) else v) for k, v in solver.range.as_dict().items()}
        head["solver"] = asdict(solver.settings)
    if extra:
        head.update(extra)
    return head


# ----------------------------------------------------------------------------
# curve I/O


def write_curve_csv(curve: SpectrumCurve, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in curve.points:
        w.writerow([fmt(p.xi), fmt(p.t), fmt(p.q), fmt(p.W_residual), fmt(p.inner_residual), "|".join(p.flags)])


def read_curve_csv(fh) -> list[dict]:
    rows = []
    for row in csv.DictReader(fh):
        rec = {k: float(row[k]) for k in CSV_COLUMNS[:-1]}
        rec["flags"] = tuple(x for x in row["flags"].split("|") if x)
        rows.append(rec)
    return rows


# ----------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg: RunConfig) -> int:
    spec, fam = load_system(cfg)
    try:
        solver = SpectrumSolver(spec, fam, cfg.settings())
        curve = solver.sample()
    except (SolverError, PressureError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = curve.ok_points()
    res = max((max(abs(p.W_residual), abs(p.inner_residual)) for p in ok), default=math.nan)
    header = _header(cfg, solver, {"points": len(curve.points), "max_residual": _json_num(res)})
    if cfg.fmt == "csv":
        with open(out / "spectrum.csv", "w", newline="") as fh:
            write_curve_csv(curve, fh)
        with open(out / "spectrum.json", "w") as fh:
            json.dump(header, fh, indent=2)
    else:
        header["points_data"] = [
            {"xi": p.xi, "t": _json_num(p.t), "q": _json_num(p.q), "W_residual": _json_num(p.W_residual),
             "inner_residual": _json_num(p.inner_residual), "flags": list(p.flags)}
            for p in curve.points
        ]
        with open(out / "spectrum.json", "w") as fh:
            json.dump(header, fh, indent=2)
    rng = solver.range
    print(
        f"theta={fmt(solver.theta)} h={fmt(solver.h)} xi_min={fmt(rng.xi_min)} xi0={fmt(rng.xi_zero)} "
        f"xi_max={fmt(rng.xi_max)} points={len(curve.points)} max_residual={fmt(res)}"
    )
    return EXIT_OK


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must be start:stop:count, got {text!r}")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ConfigError("range count must be >= 1")
    return np.linspace(a, b, n)


def cmd_pressure_surface(cfg: RunConfig, t_range: str, q_range: str) -> int:
    spec, fam = load_system(cfg)
    ts, qs = _parse_range(t_range), _parse_range(q_range)
    surf = PressureSurface(spec, fam)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        with open(out / "pressure_surface.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "q", "P", "dPdt", "dPdq", "in_region"])
            for t in ts:
                for q in qs:
                    val, g, _, _ = surf.evaluate(float(t), float(q), 1)
                    if val == DIVERGENT:
                        w.writerow([fmt(t), fmt(q), "inf", "nan", "nan", "false"])
                    else:
                        w.writerow([fmt(t), fmt(q), fmt(val), fmt(g[0]), fmt(g[1]), "true"])
        boundary = None
        if spec.infinite:
            try:
                boundary = manhattan_boundary(spec, fam, ts)
            except ValueError as exc:
                log.warning("no Manhattan boundary: %s", exc)
        if boundary is not None:
            with open(out / "manhattan_boundary.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "q0"])
                for t, q0 in boundary.samples:
                    w.writerow([fmt(t), fmt(q0)])
                if boundary.half_plane_theta is not None:
                    w.writerow([fmt(boundary.half_plane_theta), "half-plane"])
    except PressureError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    with open(out / "pressure_surface.json", "w") as fh:
        json.dump(_header(cfg, extra={"t_range": t_range, "q_range": q_range}), fh, indent=2)
    return EXIT_OK


def cmd_gibbs(cfg: RunConfig, points: list[str]) -> int:
    spec, fam = load_system(cfg)
    docs = []
    try:
        for p in points:
            t, q = (float(x) for x in p.split(","))
            st = gibbs_state(spec, fam, t, q)
            d = {"schema": SCHEMA, **st.as_dict()}
            docs.append(json.dumps(d))
    except PressureError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    text = "\n".join(docs) + "\n"
    if cfg.out and cfg.out != "-":
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "gibbs.jsonl").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def run_property_suite(spec: SystemSpec, fam: PotentialFamily, settings: SolverSettings, sample_count: int = 12):
    """Named pass/fail results of the thermodynamic and shape checks for one system."""
    results: dict[str, bool] = {}
    solver = SpectrumSolver(spec, fam, settings)
    curve = solver.sample()
    shape = shape_diagnostics(curve)
    if shape.get("degenerate"):
        results["shape:degenerate"] = False
    for k, v in shape.items():
        if k != "degenerate" and v is not None:
            results[f"shape:{k}"] = bool(v)
    ok = curve.ok_points()
    results["curve:all_points_solved"] = len(ok) == len(curve.points)
    results["curve:residuals<=1e-9"] = all(abs(p.W_residual) <= 1e-9 and abs(p.inner_residual) <= 1e-9 for p in ok)
    results["curve:0<=t<=h"] = all(-1e-12 <= p.t <= solver.h + 1e-12 for p in ok)
    dev = translation_invariance_check(spec, fam, 0.5, curve.arrays()[0][:: max(1, len(curve.points) // 50)], settings)
    results["translation_invariance<=1e-8"] = dev <= 1e-8

    surf = solver.surface
    probes = ok[:: max(1, len(ok) // sample_count)]
    grad_ok = var_ok = gq_ok = dim_ok = psd_ok = True
    for p in probes:
        t, q = p.t, p.q
        g = surf.grad(t, q)
        eps = 1e-5
        fd_t = (surf.value(t + eps, q) - surf.value(t - eps, q)) / (2 * eps)
        fd_q = (surf.value(t, q + eps) - surf.value(t, q - eps)) / (2 * eps)
        grad_ok &= abs(g[0] - fd_t) <= 1e-6 and abs(g[1] - fd_q) <= 1e-6
        psd_ok &= bool(np.linalg.eigvalsh(surf.hessian(t, q)).min() >= -1e-9)
        st = gibbs_state(spec, fam, t, q, surface=surf)
        res = abs(st.entropy - t * st.lyapunov + q * st.f_exponent - surf.value(t, q))
        var_ok &= res <= 1e-8
        gq_ok &= abs(g[1] - st.f_exponent) <= 1e-8 and abs(-g[0] - st.lyapunov) <= 1e-8
        dim_ok &= -1e-12 <= st.dimension <= solver.h + 1e-9
    results["gradient_vs_finite_difference<=1e-6"] = grad_ok
    results["hessian_psd"] = psd_ok
    results["variational_residual<=1e-8"] = var_ok
    results["dPdq_equals_gibbs_exponent<=1e-8"] = gq_ok
    results["gibbs_dimension_in_[0,h]"] = dim_ok
    if not spec.infinite and spec.size ** 4 <= 10**6:
        cmin, cmax = gibbs_inequality_check(spec, fam, 0.5 * solver.h, 0.0, 4)
        results["gibbs_inequality_bounded"] = 0 < cmin <= cmax < math.inf
    if spec.infinite and spec.ratio_fn is not None and fam.value_fn is not None:
        s2, f2 = retruncate(spec, fam, 2 * spec.size)
        surf2 = PressureSurface(s2, f2)
        stable = light = True
        for p in probes:
            v1, _, _, err = surf.evaluate(p.t, p.q, 0)
            v2 = surf2.value(p.t, p.q)
            stable &= abs(v1 - v2) <= max(err, 1e-10)
            light &= gibbs_state(spec, fam, p.t, p.q, surface=surf).tail_mass <= 1e-4
        results["truncation_stability:pressure"] = stable
        results["truncation_stability:tail_mass<=1e-4"] = light
    return results


def cmd_diagnostics(cfg: RunConfig) -> int:
    spec, fam = load_system(cfg)
    try:
        results = run_property_suite(spec, fam, cfg.settings())
    except (SolverError, PressureError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    width = max(len(k) for k in results)
    for k, v in results.items():
        print(f"{k:<{width}}  {'PASS' if v else 'FAIL'}")
    failed = [k for k, v in results.items() if not v]
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_CHECK
    return EXIT_OK


def cmd_list_builtins() -> int:
    for name, (_, desc) in BUILTINS.items():
        print(f"{name:<18} {desc}")
    return EXIT_OK


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", default="example_5_1", help="builtin system name")
    common.add_argument("--family", default=None, help="'lyapunov', a builtin name, or comma-separated values")
    common.add_argument("--config", default=None, help="INI system description (overrides --system)")
    common.add_argument("--grid", type=int, default=None, help="number of xi grid points")
    common.add_argument("--xi-cap", type=float, default=10.0)
    common.add_argument("--margin", type=float, default=1e-3)
    common.add_argument("--truncation", type=int, default=None, help="truncation level N for infinite systems")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--tol-root", type=float, default=1e-14)
    common.add_argument("--tol-grad", type=float, default=1e-13)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="birkhoff-mf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    sub.add_parser("spectrum", parents=[common], help="sample t(xi) and write CSV + JSON header")
    ps = sub.add_parser("pressure-surface", parents=[common], help="tabulate P, grad P on a rectangle")
    ps.add_argument("--t-range", default="0:2:21", help="start:stop:count")
    ps.add_argument("--q-range", default="-2:1:31", help="start:stop:count")
    gb = sub.add_parser("gibbs", parents=[common], help="Gibbs state as JSON per (t, q)")
    gb.add_argument("--point", action="append", required=True, help="t,q (repeatable)")
    sub.add_parser("diagnostics", parents=[common], help="run the property suite")
    sub.add_parser("list-builtins", help="list builtin systems")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.cmd == "list-builtins":
        return cmd_list_builtins()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    default_grid = 200 if args.cmd == "diagnostics" else 1000
    cfg = RunConfig(
        system=args.system, family=args.family, config_path=args.config, truncation=args.truncation,
        grid=default_grid if args.grid is None else args.grid, xi_cap=args.xi_cap, margin=args.margin,
        out=args.out, fmt=args.format, tol_root=args.tol_root, tol_grad=args.tol_grad,
    )
    try:
        cfg.check()
        if args.cmd == "spectrum":
            return cmd_spectrum(cfg)
        if args.cmd == "pressure-surface":
            return cmd_pressure_surface(cfg, args.t_range, args.q_range)
        if args.cmd == "gibbs":
            return cmd_gibbs(cfg, args.point)
        return cmd_diagnostics(cfg)
    except ConfigError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, PressureError, ArithmeticError, ValueError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
