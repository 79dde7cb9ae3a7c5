"""Worked example systems and their closed-form reference functions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .system import GeometricTail, PotentialFamily, PowerTail, SystemSpec, lyapunov_family

__all__ = [
    "linearized_gauss",
    "linearized_gauss_subsystem",
    "luroth",
    "example_5_1",
    "example_5_2",
    "example_5_3",
    "ClosedForm",
    "closed_form_oracles",
    "BUILTINS",
    "load_builtin",
]

LOG2 = math.log(2.0)


def _gauss_ratio(n):
    n = np.asarray(n, dtype=float)
    return 1.0 / (n * (n + 1.0))


def _gauss_intervals(n):
    n = np.asarray(n, dtype=float)
    return np.column_stack([1.0 / (n + 1.0), 1.0 / n])


def linearized_gauss(n_trunc: int = 10_000) -> SystemSpec:
    """Full shift on branches x -> 1/n - x/(n(n+1)), truncated at ``n_trunc``."""
    if n_trunc < 1:
        raise ValueError("truncation must be >= 1")
    idx = np.arange(1, n_trunc + 1)
    return SystemSpec(
        ratios=_gauss_ratio(idx),
        intervals=_gauss_intervals(idx),
        # (n+1)**-2 <= 1/(n(n+1)) <= n**-2
        tail=PowerTail(scale=1.0, exponent=2.0, shift_lo=0.0, shift_hi=1.0),
        ratio_fn=_gauss_ratio,
        interval_fn=_gauss_intervals,
        infinite=True,
        name=f"linearized_gauss[N={n_trunc}]",
    )


def linearized_gauss_subsystem(symbols) -> SystemSpec:
    """Finite subsystem of the linearized Gauss map on the given branch indices."""
    idx = np.array(sorted(set(int(s) for s in symbols)))
    if idx.size == 0 or idx.min() < 1:
        raise ValueError("symbols must be positive integers")
    return SystemSpec(
        ratios=_gauss_ratio(idx),
        intervals=_gauss_intervals(idx),
        name="linearized_gauss" + "{" + ",".join(map(str, idx)) + "}",
    )


def _dyadic(k):
    return np.power(2.0, -np.asarray(k, dtype=float))


def luroth(a: Optional[Callable] = None, n_trunc: int = 200, tail=None) -> SystemSpec:
    """Lüroth-type system for a strictly decreasing sequence ``a(k)`` with a(0) = 1.

    Branch n maps [a_n, a_{n-1}] onto [0, 1] affinely, so its inverse has
    ratio a_{n-1} - a_n. The default is the dyadic sequence a_k = 2**-k,
    whose ratios 2**-n continue exactly as a geometric tail.
    """
    dyadic = a is None
    if dyadic:
        a = _dyadic
        tail = GeometricTail(scale=1.0, rate=0.5)
    ks = np.arange(0, n_trunc + 2)
    seq = np.asarray(a(ks), dtype=float)
    if abs(seq[0] - 1.0) > 1e-15:
        raise ValueError("sequence must start at a_0 = 1")
    if np.any(np.diff(seq) >= 0) or np.any(seq[1:] <= 0):
        raise ValueError("sequence must be strictly decreasing and positive")

    def ratio_fn(n):
        n = np.asarray(n, dtype=float)
        return np.asarray(a(n - 1)) - np.asarray(a(n))

    def interval_fn(n):
        n = np.asarray(n, dtype=float)
        return np.column_stack([a(n), a(n - 1)])

    idx = np.arange(1, n_trunc + 1)
    return SystemSpec(
        ratios=ratio_fn(idx),
        intervals=interval_fn(idx),
        tail=tail,
        ratio_fn=ratio_fn,
        interval_fn=interval_fn,
        infinite=tail is not None,
        name=f"luroth[N={n_trunc}]" if dyadic else f"luroth_custom[N={n_trunc}]",
    )


def _lg3() -> SystemSpec:
    return linearized_gauss_subsystem([1, 2, 3])


def example_5_1():
    """Branches 1, 2, 3 of the linearized Gauss map with f = (1, 2, 1)."""
    return _lg3(), PotentialFamily(np.array([1.0, 2.0, 1.0]), name="parity+1")


def example_5_2():
    """Branches 1, 2, 3 of the linearized Gauss map with f = (1, 2, 2)."""
    return _lg3(), PotentialFamily(np.array([1.0, 2.0, 2.0]), name="example_5_2")


def example_5_3(n_trunc: int = 200):
    """Dyadic Lüroth system with the Lyapunov family f_n = n log 2."""
    spec = luroth(n_trunc=n_trunc)
    return spec, lyapunov_family(spec)


# ----------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class ClosedForm:
    name: str
    P: Callable[[float, float], float]
    dPdq: Callable[[float, float], float]
    q_of: Callable[[float, float], float]
    t_of: Optional[Callable[[float], float]] = None
    xi_min: float = math.nan
    xi_max: float = math.nan
    notes: str = ""


def _p51(t, q):
    return math.log(math.exp(q) / 2**t + math.exp(2 * q) / 6**t + math.exp(q) / 12**t)


def _dp51(t, q):
    a = (2.0**-t + 12.0**-t) * math.exp(q)
    b = 6.0**-t * math.exp(2 * q)
    return (a + 2 * b) / (a + b)


def _q51(t, xi):
    return math.log((xi - 1) * (2.0**-t + 12.0**-t) / (6.0**-t * (2 - xi)))


def _p52(t, q):
    return math.log(math.exp(q) / 2**t + math.exp(2 * q) / 6**t + math.exp(2 * q) / 12**t)


def _dp52(t, q):
    a = 2.0**-t * math.exp(q)
    b = (12.0**-t + 6.0**-t) * math.exp(2 * q)
    return (a + 2 * b) / (a + b)


def _q52(t, xi):
    return math.log((xi - 1) * 2.0**-t / ((6.0**-t + 12.0**-t) * (2 - xi)))


def _p53(t, q):
    return math.log(2.0 ** (q - t)) - math.log(1 - 2.0 ** (q - t))


def _dp53(t, q):
    return 2.0**t * LOG2 / (2.0**t - 2.0**q)


def _q53(t, xi):
    return math.log2(2.0**t - 2.0**t * LOG2 / xi)


def _t53(xi):
    return (1 / xi) * math.log(xi / LOG2 - 1) - math.log2(1 - LOG2 / xi)


_ORACLES = {
    "example_5_1": ClosedForm("example_5_1", _p51, _dp51, _q51, None, 1.0, 2.0),
    "example_5_2": ClosedForm("example_5_2", _p52, _dp52, _q52, None, 1.0, 2.0),
    "example_5_3": ClosedForm(
        "example_5_3", _p53, _dp53, _q53, _t53, LOG2, math.inf,
        notes="characteristic Lyapunov exponent of Lebesgue measure is +2 log 2 "
        "(printed with a minus sign in the source display)",
    ),
}


def closed_form_oracles(name: str) -> ClosedForm:
    try:
        return _ORACLES[name]
    except KeyError:
        raise KeyError(f"unknown closed form {name!r}; known: {sorted(_ORACLES)}") from None


# ----------------------------------------------------------------------------
# name registry used by the CLI


def _gauss_lyapunov(n_trunc=10_000):
    spec = linearized_gauss(n_trunc)
    return spec, lyapunov_family(spec)


BUILTINS: dict[str, tuple[Callable, str]] = {
    "example_5_1": (lambda n=None: example_5_1(), "linearized Gauss branches {1,2,3}, f = (1, 2, 1)"),
    "example_5_2": (lambda n=None: example_5_2(), "linearized Gauss branches {1,2,3}, f = (1, 2, 2)"),
    "example_5_3": (lambda n=None: example_5_3(200 if n is None else n), "dyadic Lüroth, Lyapunov family (N=200)"),
    "luroth": (lambda n=None: example_5_3(200 if n is None else n), "alias of example_5_3"),
    "linearized_gauss": (lambda n=None: _gauss_lyapunov(10_000 if n is None else n), "linearized Gauss map, Lyapunov family (N=10^4)"),
}


def load_builtin(name: str, n_trunc: Optional[int] = None):
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin system {name!r}; known: {sorted(BUILTINS)}")
    return BUILTINS[name][0](n_trunc)
