"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line with the measured value and the
tolerance; the lines are repeated in the pytest terminal summary.
"""
import math
import time

import numpy as np
import pytest

from birkhoff_mf.builtin import closed_form_oracles, example_5_1, example_5_2, example_5_3, load_builtin
from birkhoff_mf.gibbs import gibbs_inequality_check, gibbs_state, min_average_oracle, zero_temperature_limit
from birkhoff_mf.pressure import PressureSurface, bowen_parameter, finiteness_parameter
from birkhoff_mf.spectrum import (
    SolverSettings,
    SpectrumSolver,
    diagnostics_passed,
    shape_diagnostics,
    translation_invariance_check,
)
from birkhoff_mf.system import PotentialFamily, SystemSpec
from oracles import bisect_root, luroth_t

LOG2 = math.log(2.0)


def test_criterion_01_luroth_closed_form(record):
    # compile the kernels outside the timed region
    SpectrumSolver(*example_5_3(5)).sample([1.0, 2.0])
    start = time.perf_counter()
    solver = SpectrumSolver(*example_5_3(200))
    xs = np.linspace(LOG2 + 1e-3, 10.0, 1000)
    curve = solver.sample(xs)
    elapsed = time.perf_counter() - start
    t = np.array([p.t for p in curve.points])
    err = float(np.max(np.abs(t - np.array([luroth_t(x) for x in xs]))))
    ok = err <= 1e-8 and elapsed < 5.0
    record(1, "Luroth spectrum vs closed form (N=200, 1000 points)", ok,
           f"max|dt|={err:.3e} (tol 1e-8), runtime={elapsed:.2f}s (limit 5s)")
    assert ok


def test_criterion_02_luroth_landmarks(record):
    solver = SpectrumSolver(*example_5_3(200))
    rng = solver.range
    t0 = solver.solve_point(rng.xi_zero).t
    checks = {
        "h": (solver.h, 1.0, 1e-8),
        "theta": (solver.theta, 0.0, 1e-6),
        "xi_min": (rng.xi_min, LOG2, 1e-6),
        "xi0": (rng.xi_zero, 2 * LOG2, 1e-8),
        "t(xi0)": (t0, 1.0, 1e-8),
    }
    ok = all(abs(v - ref) <= tol for v, ref, tol in checks.values())
    detail = ", ".join(f"{k}={v:.12g} (ref {ref:.12g} +/- {tol:g})" for k, (v, ref, tol) in checks.items())
    record(2, "Luroth landmarks", ok, detail)
    assert ok


def test_criterion_03_gauss_theta(record):
    start = time.perf_counter()
    spec, _ = load_builtin("linearized_gauss")
    theta = finiteness_parameter(spec)
    elapsed = time.perf_counter() - start
    ok = abs(theta - 0.5) <= 1e-3 and elapsed < 10.0
    record(3, "linearized Gauss finiteness parameter (N=1e4)", ok,
           f"theta={theta:.12g} (ref 0.5 +/- 1e-3), runtime={elapsed:.2f}s (limit 10s)")
    assert ok


@pytest.mark.parametrize("name, make", [("example_5_1", example_5_1), ("example_5_2", example_5_2)])
def test_criterion_04_closed_form_pressure(record, name, make):
    spec, fam = make()
    cf = closed_form_oracles(name)
    surf = PressureSurface(spec, fam)
    rng = np.random.default_rng(4)
    pts = zip(rng.uniform(-1.0, 3.0, 200), rng.uniform(-5.0, 5.0, 200))
    err_p = err_dq = 0.0
    for t, q in pts:
        val, g, _, _ = surf.evaluate(t, q, 1)
        err_p = max(err_p, abs(val - cf.P(t, q)))
        err_dq = max(err_dq, abs(g[1] - cf.dPdq(t, q)))
    r = SpectrumSolver(spec, fam).range
    err_lo, err_hi = abs(r.xi_min - cf.xi_min), abs(r.xi_max - cf.xi_max)
    ok = err_p <= 1e-10 and err_dq <= 1e-10 and err_lo <= 1e-6 and err_hi <= 1e-6
    record(4, f"{name} pressure and dP/dq vs closed form (200 points), range", ok,
           f"max|dP|={err_p:.3e}, max|dPdq|={err_dq:.3e} (tol 1e-10); "
           f"xi_min={r.xi_min:.12g}, xi_max={r.xi_max:.12g} (tol 1e-6)")
    assert ok


def test_criterion_05_inner_solve(record):
    spec, fam = example_5_1()
    cf = closed_form_oracles("example_5_1")
    solver = SpectrumSolver(spec, fam)
    rng = np.random.default_rng(5)
    err = 0.0
    for t, xi in zip(rng.uniform(0.0, solver.h, 100), rng.uniform(1.001, 1.999, 100)):
        q, _ = solver.inner_solve_q(t, xi)
        err = max(err, abs(q - cf.q_of(t, xi)))
    ok = err <= 1e-9
    record(5, "example_5_1 inner solve q(t, xi) vs closed form (100 pairs)", ok, f"max|dq|={err:.3e} (tol 1e-9)")
    assert ok


@pytest.mark.parametrize("name, make", [("example_5_1", example_5_1), ("example_5_2", example_5_2), ("luroth", example_5_3)])
def test_criterion_06_shape_suite(record, name, make):
    curve = SpectrumSolver(*make()).sample()
    report = shape_diagnostics(curve)
    ok = diagnostics_passed(report)
    if name == "luroth":
        ok = ok and bool(report.get("inflection_right"))
    shown = ", ".join(f"{k}={v}" for k, v in report.items() if v is not None and k != "degenerate")
    record(6, f"{name} spectrum shape", ok, shown)
    assert ok


def _region_points(surf, h, rng, count, margin):
    """Random (t, q) at least ``margin`` inside the summability region."""
    out = []
    while len(out) < count:
        t, q = rng.uniform(0.0, 2.0 * h), rng.uniform(-3.0, 2.0)
        if surf.tail is not None:
            s = surf.tail_exponent(t, q)
            if not (surf.tail.converges(s - margin) and surf.in_region(t, q)):
                continue
        out.append((t, q))
    return out


@pytest.mark.parametrize("name", ["example_5_1", "example_5_2", "example_5_3", "linearized_gauss"])
def test_criterion_07_thermodynamic_identities(record, name):
    spec, fam = load_builtin(name)
    surf = PressureSurface(spec, fam)
    h = bowen_parameter(spec)
    rng = np.random.default_rng(7)
    eps = 1e-6
    worst = dict(fd=0.0, var=0.0, gibbs=0.0)
    dim_ok = True
    for t, q in _region_points(surf, h, rng, 50, 0.1):
        val, g, _, _ = surf.evaluate(t, q, 1)
        fd_t = (surf.value(t + eps, q) - surf.value(t - eps, q)) / (2 * eps)
        fd_q = (surf.value(t, q + eps) - surf.value(t, q - eps)) / (2 * eps)
        worst["fd"] = max(worst["fd"], abs(g[0] - fd_t), abs(g[1] - fd_q))
        st = gibbs_state(spec, fam, t, q, surface=surf)
        worst["var"] = max(worst["var"], abs(st.entropy - t * st.lyapunov + q * st.f_exponent - val))
        worst["gibbs"] = max(worst["gibbs"], abs(g[1] - st.f_exponent))
        dim_ok &= 0.0 <= st.dimension <= h
    ok = worst["fd"] <= 1e-6 and worst["var"] <= 1e-8 and worst["gibbs"] <= 1e-8 and dim_ok
    record(7, f"{name} thermodynamic identities (50 points)", ok,
           f"grad-fd={worst['fd']:.3e} (tol 1e-6), variational={worst['var']:.3e} (tol 1e-8), "
           f"dPdq-exponent={worst['gibbs']:.3e} (tol 1e-8), dimension in [0,h]={dim_ok}")
    assert ok


def test_criterion_08_zero_temperature(record):
    spec, fam = example_5_1()
    h = bowen_parameter(spec)
    oracle = min_average_oracle(spec, fam)
    qs = -np.arange(0.0, 41.0)
    ok = abs(oracle - 1.0) <= 1e-12
    parts = []
    for t in (0.0, 0.3, h):
        ex = np.array([e for _, e, _ in zero_temperature_limit(spec, fam, t, qs)])
        gap = abs(ex[-1] - oracle)
        mono = bool(np.all(np.diff(ex) <= 0))
        ok &= gap <= 1e-6 and mono
        parts.append(f"t={t:.6g}: |exp(-40)-1|={gap:.3e} monotone={mono}")
    record(8, "example_5_1 zero-temperature limit (tol 1e-6)", ok, "; ".join(parts))
    assert ok


def test_criterion_09_endpoint_oracles(record):
    s1 = SpectrumSolver(*example_5_1())
    s2 = SpectrumSolver(*example_5_2())
    t_left = s1.solve_point(1.0 + 1e-3).t
    t_right = s2.solve_point(2.0 - 1e-3).t
    root_left = bisect_root(lambda t: 2.0**-t + 12.0**-t - 1.0, 0.0, 5.0)
    root_right = bisect_root(lambda t: 6.0**-t + 12.0**-t - 1.0, 0.0, 5.0)
    d1, d2 = abs(t_left - root_left), abs(t_right - root_right)
    ok = d1 <= 1e-2 and d2 <= 1e-2
    record(9, "endpoint limits vs sub-alphabet roots (tol 1e-2)", ok,
           f"5.1: t={t_left:.8g} root={root_left:.8g} diff={d1:.3e}; "
           f"5.2: t={t_right:.8g} root={root_right:.8g} diff={d2:.3e}")
    assert ok


def test_criterion_10_translation_invariance(record):
    spec, fam = example_5_1()
    settings = SolverSettings(count=200)
    devs = {a: translation_invariance_check(spec, fam, a, settings=settings) for a in (-1.0, 0.5)}
    ok = all(d <= 1e-8 for d in devs.values())
    record(10, "example_5_1 translation invariance (tol 1e-8)", ok,
           ", ".join(f"a={a:g}: max|dt|={d:.3e}" for a, d in devs.items()))
    assert ok


def test_criterion_11_gibbs_inequality(record):
    golden = SystemSpec(np.array([0.5, 0.3]), incidence=np.array([[1, 1], [1, 0]]))
    fam = PotentialFamily(np.array([1.0, 2.5]))
    cmin, cmax = gibbs_inequality_check(golden, fam, 0.7, -0.4, 6)
    markov_ok = 0.0 < cmin <= cmax < math.inf
    spec, fam51 = example_5_1()
    fmin, fmax = gibbs_inequality_check(spec, fam51, 0.6, 0.3, 6)
    full_dev = max(abs(fmin - 1.0), abs(fmax - 1.0))
    ok = markov_ok and full_dev <= 1e-12
    record(11, "Gibbs inequality by word enumeration (length <= 6)", ok,
           f"Markov: C_min={cmin:.6g} C_max={cmax:.6g} finite positive={markov_ok}; "
           f"full shift: max|C-1|={full_dev:.3e} (tol 1e-12)")
    assert ok
