"""Gibbs and equilibrium states of locally constant potentials.

On a finite (or truncated) alphabet the Gibbs state of t log|phi'| + q f
is a Bernoulli measure for the full shift and a stationary Markov chain
built from the Perron eigendata of M(t, q) otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .pressure import DIVERGENT, PressureError, PressureSurface
from .system import PotentialFamily, SystemSpec

__all__ = [
    "GibbsState",
    "gibbs_state",
    "variational_check",
    "gibbs_inequality_check",
    "min_average_oracle",
    "max_average_oracle",
    "q_floor",
    "zero_temperature_limit",
]


@dataclass(frozen=True)
class GibbsState:
    t: float
    q: float
    stationary: np.ndarray
    transition: Optional[np.ndarray]
    entropy: float
    f_exponent: float
    lyapunov: float
    dimension: float
    #: measure of the symbols past the truncation; ``stationary`` covers the
    #: rest, so stationary.sum() + tail_mass == 1
    tail_mass: float = 0.0

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "q": self.q,
            "stationary": self.stationary.tolist(),
            "transition": None if self.transition is None else self.transition.tolist(),
            "entropy": self.entropy,
            "f_exponent": self.f_exponent,
            "lyapunov": self.lyapunov,
            "dimension": self.dimension,
            "tail_mass": self.tail_mass,
        }


def _xlogx_sum(p):
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz])))


def _markov_chain(surf: PressureSurface, t, q):
    lrho, u, v, _, _ = surf.perron_data(t, q)
    # m_ab = A_ab w_a, so m_ab v_b / (rho v_a) = A_ab v_b / sum_c A_ac v_c
    adj = surf.adj
    trans = adj * v[None, :]
    rows = trans.sum(axis=1, keepdims=True)
    dead = rows[:, 0] <= 0
    if np.any(dead):
        # successors' Perron weights underflowed; such states carry no mass
        trans[dead] = adj[dead]
        rows = trans.sum(axis=1, keepdims=True)
    trans /= rows
    pi = u * v
    pi /= pi.sum()
    return lrho, pi, trans


def gibbs_state(spec: SystemSpec, family: PotentialFamily, t: float, q: float, *, surface=None) -> GibbsState:
    """Equilibrium state at (t, q).

    For truncated infinite full shifts the symbols past N are kept as one
    block whose mass and exponents come from the tail model, so the
    exponents and entropy are those of the infinite system.
    """
    surf = surface or PressureSurface(spec, family)
    if not surf.in_region(t, q):
        raise PressureError(f"not summable: ({t}, {q}) lies outside the Manhattan region")
    log_r, f = surf.log_r, surf.f
    tail_mass = 0.0
    tail_f = tail_lyap = tail_entropy = 0.0
    if spec.full_shift:
        lw = t * log_r + q * f
        lz = np.logaddexp.reduce(lw)
        trans = None
        if surf.tail is None:
            p = np.exp(lw - lz)
            p /= p.sum()
        else:
            # symbols past N form one block, described by the tail model's moments
            lt, t_mr, t_mf = surf._tail_terms(t, q)[:3]
            total = np.logaddexp(lz, lt)
            p = np.exp(lw - total)
            tail_mass = math.exp(lt - total)
            tail_f = tail_mass * (t_mf - f.min())
            tail_lyap = -tail_mass * t_mr
            # -sum p_n log p_n over the block, with log p_n = t log r_n + q f_n - log Z
            tail_entropy = -tail_mass * (t * t_mr + q * t_mf - total)
        entropy = -_xlogx_sum(p) + tail_entropy
    else:
        _, p, trans = _markov_chain(surf, t, q)
        row = np.array([_xlogx_sum(trans[a]) for a in range(trans.shape[0])])
        entropy = -float(p @ row)
    entropy = max(entropy, 0.0)
    # measured from min f so that the exponent approaches it without rounding wobble
    f_lo = float(f.min())
    f_exp = f_lo + (float(p @ (f - f_lo)) + tail_f)
    lyap = -float(p @ log_r) + tail_lyap
    return GibbsState(t, q, p, trans, entropy, f_exp, lyap, entropy / lyap, tail_mass)


def variational_check(spec: SystemSpec, family: PotentialFamily, t: float, q: float) -> float:
    """|h(mu) + t int log r dmu + q int f dmu - P(t, q)| for the Gibbs state mu."""
    surf = PressureSurface(spec, family)
    st = gibbs_state(spec, family, t, q, surface=surf)
    p = surf.value(t, q)
    return abs(st.entropy - t * st.lyapunov + q * st.f_exponent - p)


def gibbs_inequality_check(spec: SystemSpec, family: PotentialFamily, t: float, q: float, word_len: int):
    """Extremes of mu([w]) / exp(S_|w| - |w| P) over all admissible words up to ``word_len``."""
    if spec.infinite:
        raise ValueError("exhaustive enumeration needs a finite alphabet")
    n = spec.size
    if sum(n**k for k in range(1, word_len + 1)) > 10**7:
        raise ValueError("too many words")
    surf = PressureSurface(spec, family)
    lw = t * surf.log_r + q * surf.f
    adj = spec.adjacency()
    if spec.full_shift:
        lp = surf.value(t, q)
        log_pi = lw - lp
        with np.errstate(divide="ignore"):
            log_t = np.broadcast_to(log_pi, (n, n)).copy()
    else:
        lp, pi, trans = _markov_chain(surf, t, q)
        with np.errstate(divide="ignore"):
            log_pi = np.log(pi)
            log_t = np.where(adj > 0, np.log(np.where(adj > 0, trans, 1.0)), -np.inf)
    lo, hi = _kernels.gibbs_ratio_bounds(
        np.ascontiguousarray(adj), np.ascontiguousarray(lw), np.ascontiguousarray(log_pi),
        np.ascontiguousarray(log_t), float(lp), int(word_len),
    )
    return math.exp(lo), math.exp(hi)


def min_average_oracle(spec: SystemSpec, family: PotentialFamily) -> float:
    """Least mean of f over admissible cycles of the (truncated) incidence graph."""
    if spec.full_shift:
        return float(family.values.min())
    return float(_kernels.min_mean_cycle(spec.adjacency(), np.ascontiguousarray(family.values)))


def max_average_oracle(spec: SystemSpec, family: PotentialFamily) -> float:
    if spec.full_shift:
        return float(family.values.max())
    return -float(_kernels.min_mean_cycle(spec.adjacency(), np.ascontiguousarray(-family.values)))


def q_floor(family: PotentialFamily) -> float:
    """Most negative q the solvers will use, -700 / max(|min f|, 1)."""
    return -700.0 / max(abs(float(family.values.min())), 1.0)


def zero_temperature_limit(spec: SystemSpec, family: PotentialFamily, t: float, q_sequence):
    """Trace ``[(q, int f dmu, h(mu))]`` of Gibbs states along q -> -infinity."""
    qs = np.asarray(q_sequence, dtype=float)
    if qs.size > 1 and np.any(np.diff(qs) >= 0):
        raise ValueError("q_sequence must be strictly decreasing")
    floor = q_floor(family)
    surf = PressureSurface(spec, family)
    out = []
    for q in qs:
        qc = max(float(q), floor)
        st = gibbs_state(spec, family, t, qc, surface=surf)
        out.append((float(q), st.f_exponent, st.entropy))
    return out
