"""Two-parameter pressure P(t, q) of the family t log|phi'| + q F.

For locally constant data the pressure is a logarithm of a first-level
partition sum (full shift) or of the Perron root of the weighted incidence
matrix. Truncated infinite alphabets add the contribution of the symbols
past the truncation through the system's tail model and carry an error
estimate for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from . import _kernels
from .system import (
    GeometricTail,
    PotentialFamily,
    PowerTail,
    RegularityReport,
    SystemSpec,
)

__all__ = [
    "DIVERGENT",
    "PressureError",
    "PressurePoint",
    "ManhattanBoundary",
    "PressureSurface",
    "z_tilde_1",
    "pressure",
    "pressure_grad",
    "pressure_hessian",
    "finiteness_parameter",
    "bowen_parameter",
    "regularity_report",
    "manhattan_boundary",
    "boundary_blowup_check",
]

#: marker for a divergent partition sum / pressure outside the Manhattan region
DIVERGENT = math.inf
#: log of the largest partition sum reported as a finite number
_LOG_OVERFLOW = 709.0


class PressureError(RuntimeError):
    pass


@dataclass(frozen=True)
class PressurePoint:
    t: float
    q: float
    value: float
    grad: Optional[tuple[float, float]] = None
    hessian: Optional[np.ndarray] = None
    tail_error: float = 0.0
    in_region: bool = True


@dataclass(frozen=True)
class ManhattanBoundary:
    samples: list[tuple[float, float]]
    half_plane_theta: Optional[float] = None


# ----------------------------------------------------------------------------
# ratio tails: sums of r_n**s over n > N and the first two moments of log r_n


def _geometric_tail(tail: GeometricTail, n_trunc: int, s: float):
    """``(log R0, mean log r, var log r)`` for r_n = C rho**n, n > N, exactly."""
    if s <= 0:
        return None
    lc = math.log(tail.scale)
    lrho = math.log(tail.rate)
    m = n_trunc + 1
    x = -s * lrho  # > 0
    log_r0 = s * (lc + m * lrho) - math.log(-math.expm1(-x))
    k = 1.0 / math.expm1(x)  # u / (1 - u) with u = rho**s
    mean_n = m + k
    var_n = k * (1.0 + k)
    return log_r0, lc + lrho * mean_n, lrho * lrho * var_n


# B_2k / (2k)! for k = 1..6
_EM_COEF = (1 / 12, -1 / 720, 1 / 30240, -1 / 1209600, 1 / 47900160, -691 / 1307674368000)


def _hurwitz_log_moments(x: float, a: float):
    """``(log Z, E[log n], Var[log n])`` for weights n**-x, n = a, a+1, ...

    Explicit terms up to b = a + M, then Euler-Maclaurin for the rest.
    Logs are taken relative to log a to keep the variance well conditioned.
    """
    m = int(min(20 + 2 * x, 5000))
    ell = np.log1p(np.arange(m) / a)
    w = np.exp(-x * ell)
    s0, s1, s2 = w.sum(), (w * ell).sum(), (w * ell * ell).sum()
    b = a + m
    lb = math.log1p(m / a)
    wb = math.exp(-x * lb)
    y = x - 1.0
    # integral of (u/a)**-x * ell**j over [b, inf)
    s0 += b * wb / y
    s1 += b * wb * (lb / y + 1 / y**2)
    s2 += b * wb * (lb * lb / y + 2 * lb / y**2 + 2 / y**3)
    s0 += 0.5 * wb
    s1 += 0.5 * wb * lb
    s2 += 0.5 * wb * lb * lb
    # g_j^(n)(u) = (u/a)**-x u**-n poly_j(ell); coefficients in powers of ell
    polys = [np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])]
    powers = np.array([1.0, lb, lb * lb])
    sums = [s0, s1, s2]
    for n in range(11):
        for j in range(3):
            c = polys[j]
            nxt = -(x + n) * c
            nxt[:-1] += np.arange(1, 3) * c[1:]
            polys[j] = nxt
        if n % 2 == 0:
            k = n // 2
            scale = _EM_COEF[k] * wb / b ** (n + 1)
            for j in range(3):
                sums[j] -= scale * float(polys[j] @ powers)
    s0, s1, s2 = sums
    e1 = s1 / s0
    return math.log(s0) - x * math.log(a), math.log(a) + e1, s2 / s0 - e1 * e1


def _log_hurwitz(x: float, a: float) -> float:
    v = float(hurwitz_zeta(x, a))
    if v > 1e-300 and math.isfinite(v):
        return math.log(v)
    # underflow for large x
    return _hurwitz_log_moments(x, a)[0]


def _power_tail(tail: PowerTail, n_trunc: int, s: float, moments: bool = True):
    """Estimate and bracket for r_n ~ C (n + shift)**-p, n > N.

    Without ``moments`` only the log-sum is computed (the moments are NaN).
    """
    p = tail.exponent
    x = p * s
    if x <= 1:
        return None
    lc = math.log(tail.scale)
    mid = 0.5 * (tail.shift_lo + tail.shift_hi)
    if moments:
        lz, e1, v1 = _hurwitz_log_moments(x, n_trunc + 1 + mid)
    else:
        lz, e1, v1 = _log_hurwitz(x, n_trunc + 1 + mid), math.nan, math.nan
    est = (s * lc + lz, lc - p * e1, p * p * v1)
    hi = s * lc + _log_hurwitz(x, n_trunc + 1 + tail.shift_lo)
    lo = s * lc + _log_hurwitz(x, n_trunc + 1 + tail.shift_hi)
    return est, lo, hi


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    m = max(a, b)
    return m + math.log1p(math.exp(-abs(a - b)))


class PressureSurface:
    """Evaluator for P(t, q), its gradient and Hessian on one (system, family) pair."""

    def __init__(self, spec: SystemSpec, family: PotentialFamily, *, tol: float = 1e-13, max_iter: int = 100_000):
        if family.size != spec.size:
            raise ValueError(f"family has {family.size} values for {spec.size} symbols")
        self.spec = spec
        self.family = family
        self.tol = tol
        self.max_iter = max_iter
        self.log_r = np.ascontiguousarray(spec.log_ratios)
        self.f = np.ascontiguousarray(family.values)
        self.adj = None if spec.full_shift else spec.adjacency()
        self.tail = None
        if spec.infinite:
            if spec.tail is None:
                raise PressureError("cannot bound tail: infinite system without tail model")
            self.tail = spec.tail
            self.alpha, self.c_lo, self.c_hi = family.tail_shape()

    # -- region ---------------------------------------------------------------

    @property
    def finite(self) -> bool:
        return self.tail is None

    @property
    def theta(self) -> float:
        return -math.inf if self.tail is None else self.tail.threshold

    def tail_exponent(self, t: float, q: float) -> float:
        return t - self.alpha * q

    def in_region(self, t: float, q: float) -> bool:
        if self.tail is None:
            return True
        return self.tail.converges(self.tail_exponent(t, q))

    def q_boundary(self, t: float) -> Optional[float]:
        """q0(t) = sup{q : (t, q) in D}; ``None`` when unbounded above."""
        if self.tail is None or self.alpha <= 0:
            return None
        return (t - self.tail.threshold) / self.alpha

    # -- tail ------------------------------------------------------------------

    def _tail_terms(self, t: float, q: float, moments: bool = True):
        """``(log T, mean log r, mean f, Var, Cov, Var f, log T_lo, log T_hi)`` or ``None``."""
        s = self.tail_exponent(t, q)
        n = self.spec.size
        if isinstance(self.tail, GeometricTail):
            g = _geometric_tail(self.tail, n, s)
            if g is None:
                return None
            lr0, mr, vr = g
            lr0_lo = lr0_hi = lr0
        else:
            g = _power_tail(self.tail, n, s, moments)
            if g is None:
                return None
            (lr0, mr, vr), lr0_lo, lr0_hi = g
        a = self.alpha
        c_mid = 0.5 * (self.c_lo + self.c_hi)
        log_t = q * c_mid + lr0
        qc = (q * self.c_lo, q * self.c_hi)
        return (log_t, mr, c_mid - a * mr, vr, -a * vr, a * a * vr, min(qc) + lr0_lo, max(qc) + lr0_hi)

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, t: float, q: float, order: int = 0):
        """Return ``(P, grad, hessian, tail_error)``; P is ``DIVERGENT`` outside D."""
        if not self.in_region(t, q):
            return DIVERGENT, None, None, math.inf
        if self.spec.full_shift:
            return self._full_shift(t, q, order)
        return self._markov(t, q, order)

    def _full_shift(self, t, q, order):
        lz, mr, mf, vrr, vrf, vff = _kernels.weighted_moments(self.log_r, self.f, t, q)
        err = 0.0
        if self.tail is not None:
            tt = self._tail_terms(t, q)
            lt, tmr, tmf, tvrr, tvrf, tvff, lt_lo, lt_hi = tt
            lz_all = _logaddexp(lz, lt)
            pn = math.exp(lz - lz_all)
            pt = math.exp(lt - lz_all)
            dr = mr - tmr
            df = mf - tmf
            vrr = pn * vrr + pt * tvrr + pn * pt * dr * dr
            vrf = pn * vrf + pt * tvrf + pn * pt * dr * df
            vff = pn * vff + pt * tvff + pn * pt * df * df
            mr = pn * mr + pt * tmr
            mf = pn * mf + pt * tmf
            err = max(lz_all - _logaddexp(lz, lt_lo), _logaddexp(lz, lt_hi) - lz_all, 0.0)
            lz = lz_all
        grad = (mr, mf) if order >= 1 else None
        hess = np.array([[vrr, vrf], [vrf, vff]]) if order >= 2 else None
        return lz, grad, hess, err

    def perron_data(self, t: float, q: float):
        """``(log rho, left u, right v, weighted matrix, log shift)`` of M(t, q)."""
        lw = t * self.log_r + q * self.f
        shift = lw.max()
        m = self.adj * np.exp(lw - shift)[:, None]
        rho, v, it = _kernels.perron(np.ascontiguousarray(m), self.tol, self.max_iter)
        if it < 0:
            raise PressureError(f"power iteration did not converge after {self.max_iter} iterations")
        rho_l, u, it = _kernels.perron(np.ascontiguousarray(m.T), self.tol, self.max_iter)
        if it < 0:
            raise PressureError(f"power iteration did not converge after {self.max_iter} iterations")
        return shift + math.log(rho), u, v, m, shift

    def _markov(self, t, q, order, with_tail=True):
        lrho, u, v, _, _ = self.perron_data(t, q)
        err = 0.0
        if with_tail and self.tail is not None:
            tt = self._tail_terms(t, q)
            # crude: bound the tail's share as if it attached to the Perron root
            err = math.log1p(math.exp(tt[7] - lrho))
        grad = hess = None
        if order >= 1:
            pi = u * v
            pi /= pi.sum()
            grad = (float(pi @ self.log_r), float(pi @ self.f))
        if order >= 2:
            # the steps may leave the region near its edge; only gradients are needed
            h = 1e-5
            gtp = self._markov(t + h, q, 1, False)[1]
            gtm = self._markov(t - h, q, 1, False)[1]
            gqp = self._markov(t, q + h, 1, False)[1]
            gqm = self._markov(t, q - h, 1, False)[1]
            htt = (gtp[0] - gtm[0]) / (2 * h)
            hqq = (gqp[1] - gqm[1]) / (2 * h)
            htq = 0.25 * ((gtp[1] - gtm[1]) + (gqp[0] - gqm[0])) / h
            hess = np.array([[htt, htq], [htq, hqq]])
        return lrho, grad, hess, err

    # -- convenience -----------------------------------------------------------

    def value(self, t: float, q: float) -> float:
        return self.evaluate(t, q, 0)[0]

    def grad(self, t: float, q: float):
        return self.evaluate(t, q, 1)[1]

    def hessian(self, t: float, q: float):
        return self.evaluate(t, q, 2)[2]

    def point(self, t: float, q: float, order: int = 2) -> PressurePoint:
        val, g, hs, err = self.evaluate(t, q, order)
        return PressurePoint(t, q, val, g, hs, err, val != DIVERGENT)

    def log_z1(self, t: float, q: float) -> float:
        """log of the first-level sum, tail included; ``DIVERGENT`` if infinite."""
        if not self.in_region(t, q):
            return DIVERGENT
        lz = _kernels.weighted_moments(self.log_r, self.f, t, q)[0]
        if self.tail is not None:
            lz = _logaddexp(lz, self._tail_terms(t, q, moments=False)[0])
        return lz


# ----------------------------------------------------------------------------
# functional surface


def _surface(spec, family, **kw) -> PressureSurface:
    return PressureSurface(spec, family, **kw)


def _zero_family(spec: SystemSpec) -> PotentialFamily:
    return PotentialFamily(np.zeros(spec.size), comparability=None, bounded=True, name="zero")


def z_tilde_1(spec: SystemSpec, family: PotentialFamily, t: float, q: float) -> float:
    """First-level partition sum sum_e r_e**t exp(q f_e), or ``DIVERGENT``."""
    lz = _surface(spec, family).log_z1(t, q)
    if lz == DIVERGENT or lz > _LOG_OVERFLOW:
        return DIVERGENT
    return math.exp(lz)


def pressure(spec: SystemSpec, family: PotentialFamily, t: float, q: float, order: int = 0) -> PressurePoint:
    return _surface(spec, family).point(t, q, order)


def pressure_grad(spec: SystemSpec, family: PotentialFamily, t: float, q: float):
    """(dP/dt, dP/dq) at an interior point of the Manhattan region."""
    g = _surface(spec, family).grad(t, q)
    if g is None:
        raise PressureError(f"({t}, {q}) lies outside the Manhattan region")
    return g


def pressure_hessian(spec: SystemSpec, family: PotentialFamily, t: float, q: float) -> np.ndarray:
    hs = _surface(spec, family).hessian(t, q)
    if hs is None:
        raise PressureError(f"({t}, {q}) lies outside the Manhattan region")
    return hs


def finiteness_parameter(spec: SystemSpec) -> float:
    """theta = inf{t : P(t, 0) < inf}, by bisection on divergence of the first-level sum."""
    if not spec.infinite:
        return -math.inf
    surf = _surface(spec, _zero_family(spec))

    def finite(t):
        return surf.log_z1(t, 0.0) != DIVERGENT

    lo, hi = 0.0, 1.0
    while finite(lo):
        lo = 2 * lo - 1.0
        if lo < -1e6:
            return -math.inf
    while not finite(hi):
        hi *= 2
        if hi > 1e6:
            raise PressureError("first-level sum diverges for every probed t")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if finite(mid):
            hi = mid
        else:
            lo = mid
    return hi if hi - lo < 1e-14 else 0.5 * (lo + hi)


def bowen_parameter(spec: SystemSpec, tol: float = 1e-13) -> float:
    """h = inf{t >= 0 : P(t, 0) <= 0}; the zero of the pressure for regular systems."""
    surf = _surface(spec, _zero_family(spec))
    theta = finiteness_parameter(spec)

    def p(t):
        return surf.value(t, 0.0)

    lo = max(theta, 0.0)
    p_lo = p(lo)
    if p_lo <= 0:
        if theta >= 0 and p_lo < 0:
            raise PressureError("no zero of pressure: system is irregular")
        return lo
    hi = max(2 * lo, 1.0)
    while p(hi) > 0:
        hi *= 2
        if hi > 1e8:
            raise PressureError("no zero of pressure found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if p(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def regularity_report(spec: SystemSpec) -> RegularityReport:
    theta = finiteness_parameter(spec)
    if not spec.infinite:
        h = bowen_parameter(spec)
        return RegularityReport(theta, False, True, h, "finite alphabet: D = R^2")
    surf = _surface(spec, _zero_family(spec))
    # probe the tail model's own threshold; the bisected theta sits on its finite side
    cofinite = surf.log_z1(surf.theta, 0.0) == DIVERGENT
    try:
        h = bowen_parameter(spec)
        regular = True
        notes = ""
    except PressureError as exc:
        h = theta
        regular = False
        notes = str(exc)
    return RegularityReport(theta, cofinite, regular or cofinite, h, notes)


def manhattan_boundary(spec: SystemSpec, family: PotentialFamily, t_grid) -> ManhattanBoundary:
    """Sample the Manhattan curve q0(t) = sup{q : first-level sum finite}."""
    if not spec.infinite:
        return ManhattanBoundary([])
    alpha, _, _ = family.tail_shape()
    surf = _surface(spec, family)
    if alpha <= 0:
        return ManhattanBoundary([], half_plane_theta=finiteness_parameter(spec))

    def finite(t, q):
        return surf.log_z1(t, q) != DIVERGENT

    samples = []
    for t in np.asarray(t_grid, dtype=float):
        lo, hi = -1.0, 1.0
        while not finite(t, lo):
            lo = 2 * lo - 1.0
        while finite(t, hi):
            hi = 2 * hi + 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if finite(t, mid):
                lo = mid
            else:
                hi = mid
        samples.append((float(t), lo))
    return ManhattanBoundary(samples)


def boundary_blowup_check(spec: SystemSpec, family: PotentialFamily, t: float, probe_count: int = 20):
    """Probe (t, q) as q increases to the boundary q0(t); returns ``[(q, P, dP/dq)]``."""
    if not spec.infinite:
        return []
    surf = _surface(spec, family)
    q0 = surf.q_boundary(t)
    if q0 is None:
        return []
    out = []
    for k in range(probe_count):
        q = q0 - 2.0 ** (-k)
        val, g, _, _ = surf.evaluate(t, q, 1)
        out.append((q, val, g[1]))
    return out
