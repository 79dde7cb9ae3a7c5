"""Dimension spectrum of level sets of Birkhoff averages.

For each exponent xi the spectrum value t(xi) and the auxiliary q(xi) solve

    P(t, q) = q * xi,    dP/dq(t, q) = xi,

with 0 <= t <= h. The inner problem (q at fixed t) is monotone in q and is
solved by a bracketed Newton iteration; the outer problem is a bracketed
root of W(t) = P(t, q(t)) - xi q(t), which is strictly decreasing on [0, h].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .gibbs import max_average_oracle, min_average_oracle, q_floor, zero_temperature_limit
from .pressure import DIVERGENT, PressureError, PressureSurface, bowen_parameter, finiteness_parameter
from .system import PotentialFamily, SystemSpec, lyapunov_family, translate_family

__all__ = [
    "SolverError",
    "SolverSettings",
    "ExponentRange",
    "SpectrumPoint",
    "SpectrumCurve",
    "SpectrumSolver",
    "exponent_range",
    "inner_solve_q",
    "outer_solve_t",
    "sample_spectrum",
    "lyapunov_spectrum",
    "shape_diagnostics",
    "translation_invariance_check",
]


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    tol_root: float = 1e-14
    tol_grad: float = 1e-13
    xi_cap: float = 10.0
    margin: float = 1e-3
    count: int = 1000
    oracle_tol: float = 1e-6


@dataclass(frozen=True)
class ExponentRange:
    xi_min: float
    xi_zero: float
    xi_max: float
    source: str = ""

    def as_dict(self) -> dict:
        return {"xi_min": self.xi_min, "xi_zero": self.xi_zero, "xi_max": self.xi_max, "source": self.source}


@dataclass(frozen=True)
class SpectrumPoint:
    xi: float
    t: float
    q: float
    W_residual: float
    inner_residual: float
    flags: tuple[str, ...] = ()


@dataclass
class SpectrumCurve:
    points: list[SpectrumPoint]
    range: ExponentRange
    h: float
    theta: float
    settings: SolverSettings = field(default_factory=SolverSettings)
    unbounded: bool = False
    infinite: bool = False

    def arrays(self):
        xi = np.array([p.xi for p in self.points])
        t = np.array([p.t for p in self.points])
        q = np.array([p.q for p in self.points])
        return xi, t, q

    def ok_points(self):
        return [p for p in self.points if not any(f.endswith("failed") for f in p.flags)]


class SpectrumSolver:
    """Holds the pressure evaluator and the global constants of one system/family pair."""

    def __init__(self, spec: SystemSpec, family: PotentialFamily, settings: SolverSettings | None = None, *, h=None):
        self.spec = spec
        self.family = family
        self.settings = settings or SolverSettings()
        self.surface = PressureSurface(spec, family)
        self.theta = finiteness_parameter(spec)
        self.h = bowen_parameter(spec) if h is None else h
        self.q_floor = q_floor(family)
        # mirror of the floor for q -> +inf on finite alphabets
        self.q_cap = 700.0 / max(abs(float(family.values.max())), 1.0)
        self._range = None

    # -- derivative evaluation in q -------------------------------------------

    def _dq(self, t, q):
        val, g, hs, _ = self.surface.evaluate(t, q, 2)
        if val == DIVERGENT:
            return None
        return g[1], hs[1, 1]

    # -- range -------------------------------------------------------------------

    @property
    def range(self) -> ExponentRange:
        if self._range is None:
            self._range = self._exponent_range()
        return self._range

    def _exponent_range(self) -> ExponentRange:
        fam, spec = self.family, self.spec
        oracle = min_average_oracle(spec, fam)
        t0 = 0.0 if self.theta < 0 else 0.5 * (max(self.theta, 0.0) + self.h)
        qs = [-(2.0**k) for k in range(0, 12)] + [self.q_floor]
        qs = sorted({q for q in qs if q >= self.q_floor}, reverse=True)
        trace = zero_temperature_limit(spec, fam, t0, qs)
        limit = trace[-1][1]
        if abs(limit - oracle) > self.settings.oracle_tol:
            raise SolverError(
                f"zero-temperature limit {limit!r} disagrees with minimum-cycle oracle {oracle!r}"
            )
        xi_zero = self.surface.grad(self.h, 0.0)[1]
        alpha = fam.tail_shape()[0] if spec.infinite else 0.0
        if spec.infinite and alpha > 0:
            xi_max = math.inf
            src = "xi_min: zero-temperature limit (cycle oracle agrees); xi_max: unbounded comparable family"
        else:
            xi_max = max_average_oracle(spec, fam)
            src = "xi_min: zero-temperature limit (cycle oracle agrees); xi_max: maximum cycle mean"
        if xi_max - limit <= 1e-12 * max(1.0, abs(limit)):
            raise SolverError("degenerate family: xi_min equals xi_max")
        return ExponentRange(limit, xi_zero, xi_max, src)

    # -- inner solve ---------------------------------------------------------------

    def inner_solve_q(self, t: float, xi: float, q_start: float = 0.0, allow_clamp: bool = False) -> tuple[float, bool]:
        """Solve dP/dq(t, q) = xi; returns ``(q, clamped)``.

        With ``allow_clamp`` a root below the q floor is reported as the floor
        itself and ``clamped=True`` instead of raising.
        """
        floor = self.q_floor
        ceil = self.surface.q_boundary(t)
        q = max(q_start, floor)
        if ceil is not None and q >= ceil:
            q = ceil - 1.0
        d = self._dq(t, q)
        if d is None:
            raise SolverError(f"xi outside achievable range at this t: start ({t}, {q}) not in D")
        g = d[0] - xi
        tol = self.settings.tol_grad * max(1.0, abs(xi))
        if abs(g) <= tol:
            return q, False
        # expand a bracket [lo, hi] with g(lo) < 0 < g(hi)
        step = 1.0
        clamped = False
        if g > 0:
            hi, g_hi = q, g
            lo = q
            while True:
                lo = max(lo - step, floor)
                g_lo = self._dq(t, lo)[0] - xi
                if g_lo < 0:
                    break
                if lo <= floor:
                    if abs(g_lo) <= tol or allow_clamp:
                        return lo, True
                    raise SolverError(f"xi outside achievable range at this t (q clamped at {floor})")
                step *= 2
        else:
            lo, g_lo = q, g
            hi, g_hi_last = q, g
            while True:
                if ceil is None:
                    if hi >= self.q_cap:
                        if abs(g_hi_last) <= tol or allow_clamp:
                            return hi, True
                        raise SolverError(f"xi outside achievable range at this t (q clamped at {self.q_cap})")
                    hi = min(hi + step, self.q_cap)
                else:
                    hi = hi + 0.5 * (ceil - hi) if hi + step >= ceil else hi + step
                d = self._dq(t, hi)
                if d is None:
                    raise SolverError("xi outside achievable range at this t (region boundary)")
                g_hi = g_hi_last = d[0] - xi
                if g_hi > 0:
                    break
                if ceil is not None and ceil - hi < 1e-15 * max(1.0, abs(ceil)):
                    raise SolverError("xi outside achievable range at this t (region boundary)")
                step *= 2
        # safeguarded Newton
        q = lo if -g_lo < g_hi else hi
        for _ in range(200):
            dv = self._dq(t, q)
            g, gp = dv[0] - xi, dv[1]
            if abs(g) <= tol:
                return q, clamped
            if g < 0:
                lo = q
            else:
                hi = q
            if hi - lo <= 4e-16 * max(1.0, abs(q)):
                return q, clamped
            qn = q - g / gp if gp > 0 else 0.5 * (lo + hi)
            if not lo < qn < hi:
                qn = 0.5 * (lo + hi)
            q = qn
        return q, clamped

    # -- outer solve ---------------------------------------------------------------

    def outer_solve_t(self, xi: float, bracket=None, q_start: float = 0.0, allow_clamp: bool = False):
        """Return ``(t, q, flags)`` with W(t) = P(t, q(t)) - xi q(t) = 0 on [0, h]."""
        h = self.h
        lo_t, hi_t = bracket if bracket is not None else (0.0, h)
        surf = self.surface
        if surf.tail is not None and surf.alpha <= 0 and lo_t <= self.theta:
            # bounded family: D is the open half plane t > theta
            lo_t = self.theta + 1e-9 * max(1.0, h)
        state = {"q": q_start, "clamped": False}

        def w(t):
            q, cl = self.inner_solve_q(t, xi, state["q"], allow_clamp)
            state["q"] = q
            state["clamped"] = state["clamped"] or cl
            return self.surface.value(t, q) - xi * q

        w_hi = w(hi_t)
        q_hi = state["q"]
        if w_hi > 0:
            # xi = xi_zero up to rounding, or bracket too short
            if hi_t == h and abs(w_hi) <= 1e-12:
                return h, q_hi, ("peak",)
            raise SolverError("xi unreachable (range metadata stale): W(upper) > 0")
        if w_hi == 0:
            return hi_t, q_hi, ()
        for _ in range(60):
            try:
                w_lo = w(lo_t)
                break
            except SolverError:
                lo_t = 0.5 * (lo_t + hi_t)
        else:
            raise SolverError("xi unreachable (range metadata stale)")
        if w_lo < 0:
            raise SolverError("xi unreachable (range metadata stale): W(lower) < 0")
        state["q"] = q_hi
        t = brentq(w, lo_t, hi_t, xtol=self.settings.tol_root, rtol=4 * np.finfo(float).eps, maxiter=200)
        q, cl = self.inner_solve_q(t, xi, state["q"], allow_clamp)
        flags = ("boundary-clamped",) if (cl or state["clamped"]) else ()
        return t, q, flags

    # -- sweep ----------------------------------------------------------------------

    def grid(self, count=None) -> np.ndarray:
        s = self.settings
        count = s.count if count is None else count
        rng = self.range
        if count < 1:
            raise ValueError("grid count must be >= 1")
        if count == 1:
            return np.array([rng.xi_zero])
        lo = rng.xi_min + s.margin
        hi = min(rng.xi_max - s.margin, s.xi_cap)
        xs = np.linspace(lo, hi, count)
        k = int(np.argmin(np.abs(xs - rng.xi_zero)))
        step = (hi - lo) / (count - 1)
        if abs(xs[k] - rng.xi_zero) <= 0.5 * step:
            xs[k] = rng.xi_zero
        return xs

    def solve_point(self, xi: float, q_start: float = 0.0) -> SpectrumPoint:
        rng = self.range
        if xi == rng.xi_zero:
            q_val = 0.0
            t, q, flags = self.h, q_val, ("peak",)
        else:
            t, q, flags = self.outer_solve_t(xi, q_start=q_start, allow_clamp=True)
        val, g, _, _ = self.surface.evaluate(t, q, 1)
        return SpectrumPoint(float(xi), float(t), float(q), val - q * xi, g[1] - xi, tuple(flags))

    def sample(self, xs=None) -> SpectrumCurve:
        xs = self.grid() if xs is None else np.asarray(xs, dtype=float)
        pts = []
        q_prev = 0.0
        for xi in xs:
            try:
                p = self.solve_point(float(xi), q_prev)
                q_prev = p.q
            except (SolverError, PressureError, ValueError) as exc:
                p = SpectrumPoint(float(xi), math.nan, math.nan, math.nan, math.nan, ("solve-failed", str(exc)))
            pts.append(p)
        alpha = self.family.tail_shape()[0] if self.spec.infinite else 0.0
        return SpectrumCurve(
            pts, self.range, self.h, self.theta, self.settings,
            unbounded=math.isinf(self.range.xi_max), infinite=self.spec.infinite and alpha > 0,
        )


# ----------------------------------------------------------------------------
# functional API


def exponent_range(spec: SystemSpec, family: PotentialFamily, settings: SolverSettings | None = None) -> ExponentRange:
    return SpectrumSolver(spec, family, settings).range


def inner_solve_q(spec: SystemSpec, family: PotentialFamily, t: float, xi: float) -> float:
    return SpectrumSolver(spec, family).inner_solve_q(t, xi)[0]


def outer_solve_t(spec: SystemSpec, family: PotentialFamily, xi: float):
    t, q, _ = SpectrumSolver(spec, family).outer_solve_t(xi)
    return t, q


def sample_spectrum(spec: SystemSpec, family: PotentialFamily, settings: SolverSettings | None = None) -> SpectrumCurve:
    return SpectrumSolver(spec, family, settings).sample()


def lyapunov_spectrum(spec: SystemSpec, xi: float, *, surface: PressureSurface | None = None):
    """Spectrum of the Lyapunov family via its one-parameter Legendre transform.

    Solves -P'(s) = xi for the one-parameter pressure P(s) = P(s, 0) and
    returns ``(t, q)`` in the two-parameter convention: with s = -q_L the
    infimum of P(-q_L) - q_L xi is attained, t = (P(s) + s xi) / xi and
    q = t - s.
    """
    fam = lyapunov_family(spec)
    surf = surface or PressureSurface(spec, fam)
    chi_min = float(fam.values.min())
    if xi <= chi_min:
        raise SolverError(f"xi={xi} not above xi_min={chi_min}")
    theta = finiteness_parameter(spec)

    def chi(s):
        return -surf.evaluate(s, 0.0, 1)[1][0]

    if not spec.infinite and xi >= float(fam.values.max()):
        raise SolverError(f"xi={xi} not below xi_max={float(fam.values.max())}")
    if math.isfinite(theta):
        lo = theta + 1e-12
        k = 1e-12
        while chi(lo) <= xi:
            # near theta chi blows up for cofinitely regular systems
            k *= 0.5
            lo = theta + k
            if k < 1e-300:
                raise SolverError("xi above the achievable Lyapunov range")
    else:
        lo = -1.0
        while chi(lo) <= xi:
            lo = 2 * lo - 1
    step = 1.0
    hi = lo + step
    while chi(hi) >= xi:
        step *= 2
        hi = lo + step
    s = brentq(lambda x: chi(x) - xi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=300)
    p_s = surf.value(s, 0.0)
    t = (p_s + s * xi) / xi
    return t, t - s


def _sign_change_positions(x):
    return np.flatnonzero(np.diff(np.sign(x)) != 0)


def shape_diagnostics(curve: SpectrumCurve) -> dict:
    """Pass/fail (or ``None`` when not applicable) for each shape property."""
    pts = curve.ok_points()
    report: dict = {"degenerate": False}
    if len(pts) < 3 or curve.range.xi_max - curve.range.xi_min <= 1e-12:
        report["degenerate"] = True
        return report
    xi = np.array([p.xi for p in pts])
    t = np.array([p.t for p in pts])
    q = np.array([p.q for p in pts])
    x0 = curve.range.xi_zero
    k0 = int(np.argmin(np.abs(xi - x0)))
    left = xi < x0
    right = xi > x0
    report["q_sign"] = bool(np.all(q[left] < 0) and np.all(q[right] > 0) and abs(q[k0]) <= 1e-8 + 1e-6 * abs(xi[k0] - x0))
    report["t_monotone"] = bool(np.all(np.diff(t[: k0 + 1]) > 0) and np.all(np.diff(t[k0:]) < 0))
    report["peak_at_xi_zero"] = bool(int(np.argmax(t)) == k0 and abs(t[k0] - curve.h) <= 1e-6)
    d2 = np.diff(t, 2)  # d2[k-1] is centred at xi[k]
    report["concave_at_xi_zero"] = bool(0 < k0 < len(t) - 1 and d2[k0 - 1] < 0)
    if curve.infinite:
        report["inflection_right"] = bool(np.any(d2[k0:] > 0))
        tail = t[right]
        report["t_tail_to_theta"] = bool(
            tail.size > 1 and np.all(np.diff(tail) < 0) and tail[-1] > curve.theta and tail[-1] - curve.theta < curve.h - curve.theta
        )
        qr = q[right]
        kq = int(np.argmax(qr)) if qr.size else 0
        report["q_tail_to_zero"] = bool(qr.size > 2 and kq < qr.size - 1 and np.all(np.diff(qr[kq:]) < 0) and qr[-1] < qr[kq])
        ql = q[left]
        report["q_left_divergent"] = bool(ql.size > 1 and np.all(np.diff(ql) > 0) and ql[0] == q.min())
    else:
        for name in ("inflection_right", "t_tail_to_theta", "q_tail_to_zero", "q_left_divergent"):
            report[name] = None
    return report


def diagnostics_passed(report: dict) -> bool:
    if report.get("degenerate"):
        return False
    return all(v for k, v in report.items() if k != "degenerate" and v is not None)


def translation_invariance_check(spec: SystemSpec, family: PotentialFamily, a: float, grid=None, settings=None) -> float:
    """max |t_{F+a}(xi + a) - t_F(xi)| over ``grid`` (default: the sampled grid of F)."""
    base = SpectrumSolver(spec, family, settings)
    moved = SpectrumSolver(spec, translate_family(family, a), settings, h=base.h)
    xs = base.grid() if grid is None else np.asarray(grid, dtype=float)
    c0 = base.sample(xs)
    c1 = moved.sample(xs + a)
    t0 = np.array([p.t for p in c0.points])
    t1 = np.array([p.t for p in c1.points])
    return float(np.max(np.abs(t1 - t0)))
