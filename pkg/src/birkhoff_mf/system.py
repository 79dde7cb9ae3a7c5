"""Affine conformal systems and locally constant potential families.

A system is reduced to what the thermodynamic computations need: one
contraction ratio per symbol, an optional 0/1 incidence matrix (``None``
means the full shift), optional branch images in [0, 1], and, for systems
truncated from an infinite alphabet, an analytic model of the ratios past
the truncation level.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "GeometricTail",
    "PowerTail",
    "SystemSpec",
    "PotentialFamily",
    "RegularityReport",
    "validate_system",
    "check_finite_irreducibility",
    "translate_family",
    "lyapunov_family",
    "retruncate",
]


@dataclass(frozen=True)
class GeometricTail:
    """Ratios past the truncation are exactly ``scale * rate**n``."""

    scale: float
    rate: float

    @property
    def threshold(self) -> float:
        # sum_n r_n**s converges iff s > 0
        return 0.0

    def converges(self, s: float) -> bool:
        return s > 0.0


@dataclass(frozen=True)
class PowerTail:
    """Two-sided power law ``scale*(n+shift_hi)**-p <= r_n <= scale*(n+shift_lo)**-p``."""

    scale: float
    exponent: float
    shift_lo: float = 0.0
    shift_hi: float = 0.0

    @property
    def threshold(self) -> float:
        return 1.0 / self.exponent

    def converges(self, s: float) -> bool:
        # tested on p*s, the argument of the zeta sum, so rounding agrees with the evaluator
        return self.exponent * s > 1.0


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Contraction data of a (possibly truncated) conformal system.

    Symbols are labelled ``1..size`` in the order of ``ratios``. A system with
    a ``tail`` is understood as the first ``size`` symbols of an infinite
    alphabet; ``ratio_fn`` (vectorised, 1-based index -> ratio) lets the
    system be rebuilt at another truncation level.
    """

    ratios: np.ndarray
    incidence: Optional[np.ndarray] = None
    intervals: Optional[np.ndarray] = None
    tail: Optional[GeometricTail | PowerTail] = None
    ratio_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    interval_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    infinite: bool = False
    name: str = ""

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float).reshape(-1)
        object.__setattr__(self, "ratios", r)
        if self.incidence is not None:
            a = (np.asarray(self.incidence) != 0).astype(np.int64)
            if a.shape != (r.size, r.size):
                raise ValueError(f"incidence must be {r.size}x{r.size}, got {a.shape}")
            object.__setattr__(self, "incidence", a)
        if self.intervals is not None:
            iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
            if iv.shape[0] != r.size:
                raise ValueError("one interval per symbol is required")
            object.__setattr__(self, "intervals", iv)

    @property
    def size(self) -> int:
        return self.ratios.size

    @property
    def full_shift(self) -> bool:
        return self.incidence is None

    @property
    def log_ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.ratios)

    def adjacency(self) -> np.ndarray:
        if self.incidence is None:
            return np.ones((self.size, self.size), dtype=np.int64)
        return self.incidence


@dataclass(frozen=True, eq=False)
class PotentialFamily:
    """Depth-one locally constant potential: symbol e carries the value f_e.

    ``comparability = (alpha, beta, gamma)`` records
    ``-alpha log r_e + gamma <= f_e <= -alpha log r_e + beta``; for truncated
    infinite systems it (or ``upper_bound`` for bounded families) is what
    controls the values past the truncation.
    """

    values: np.ndarray
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    comparability: Optional[tuple[float, float, float]] = None
    bounded: bool = True
    value_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "values", v)
        if self.lower_bound is None:
            object.__setattr__(self, "lower_bound", float(v.min()))
        if self.bounded and self.upper_bound is None:
            object.__setattr__(self, "upper_bound", float(v.max()))
        if self.lower_bound > v.min():
            raise ValueError(f"lower_bound {self.lower_bound} exceeds min value {v.min()}")

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def strictly_positive(self) -> bool:
        return self.lower_bound > 0 or bool(np.all(self.values > 0))

    def tail_shape(self) -> tuple[float, float, float]:
        """``(alpha, c_lo, c_hi)`` with ``f_e = c - alpha log r_e`` for some c in [c_lo, c_hi]."""
        if self.comparability is not None:
            alpha, beta, gamma = self.comparability
            return float(alpha), float(gamma), float(beta)
        if self.bounded:
            return 0.0, float(self.lower_bound), float(self.upper_bound)
        raise ValueError("boundary shape unknown: family has neither comparability data nor a bound")


@dataclass(frozen=True)
class RegularityReport:
    theta: float
    cofinitely_regular: bool
    regular: bool
    h: float
    notes: str = ""


def validate_system(spec: SystemSpec, family: PotentialFamily | None = None) -> list[str]:
    """Return a list of human-readable violations; empty means valid."""
    problems: list[str] = []
    r = spec.ratios
    if r.size == 0:
        return ["empty alphabet"]
    for i, ri in enumerate(r, start=1):
        if not np.isfinite(ri) or ri <= 0:
            problems.append(f"symbol {i}: ratio not > 0")
        elif ri >= 1:
            problems.append(f"symbol {i}: ratio not < 1")
    if spec.incidence is not None:
        for i, row in enumerate(spec.incidence, start=1):
            if not row.any():
                problems.append(f"symbol {i}: incidence row has no admissible successor")
    if spec.intervals is not None:
        iv = spec.intervals
        inside = (iv[:, 0] >= 0) & (iv[:, 1] <= 1) & (iv[:, 1] > iv[:, 0])
        if not inside.any():
            problems.append("no interval with nonempty interior inside [0, 1]")
        order = np.argsort(iv[:, 0], kind="stable")
        srt = iv[order]
        for k in range(len(srt) - 1):
            if srt[k + 1, 0] < srt[k, 1]:
                a, b = order[k] + 1, order[k + 1] + 1
                problems.append(f"symbols {min(a, b)},{max(a, b)}: interval interiors overlap")
    if spec.infinite:
        if spec.tail is None:
            problems.append("infinite system without tail model")
        elif r.size > 1 and r[-1] > r[: max(1, r.size // 2)].max():
            problems.append("ratios do not decay along the truncation")
    if family is not None:
        if family.size != spec.size:
            problems.append(f"family has {family.size} values for {spec.size} symbols")
        elif family.comparability is not None:
            alpha, beta, gamma = family.comparability
            g = -alpha * spec.log_ratios
            slack = 1e-12 * (1.0 + np.abs(family.values))
            if np.any(family.values < g + gamma - slack) or np.any(family.values > g + beta + slack):
                problems.append("family violates its declared comparability bounds")
    return problems


def check_finite_irreducibility(spec: SystemSpec, max_word_len: int | None = None):
    """Breadth-first search for connecting words between every pair of symbols.

    Returns ``(True, witness)`` where ``witness`` is a set of tuples of
    symbols (``()`` is the empty word), or ``(False, (e, f))`` with an
    unconnected pair.
    """
    if spec.incidence is None:
        return True, {()}
    n = spec.size
    if max_word_len is None:
        max_word_len = n
    adj = spec.incidence
    witness: set[tuple[int, ...]] = set()
    for e in range(n):
        # parents[v] = predecessor on a shortest path from e; path lengths count edges
        parent = {}
        dist = {}
        frontier = deque()
        for b in np.flatnonzero(adj[e]):
            if b not in dist:
                dist[b] = 1
                parent[b] = None
                frontier.append(b)
        while frontier:
            v = frontier.popleft()
            if dist[v] > max_word_len:
                continue
            for b in np.flatnonzero(adj[v]):
                if b not in dist:
                    dist[b] = dist[v] + 1
                    parent[b] = v
                    frontier.append(b)
        for f in range(n):
            # word e tau f has |tau| = dist - 1
            if f not in dist or dist[f] - 1 > max_word_len:
                return False, (e + 1, f + 1)
            tau = []
            v = parent[f]
            while v is not None:
                tau.append(int(v) + 1)
                v = parent[v]
            witness.add(tuple(reversed(tau)))
    return True, witness


def translate_family(family: PotentialFamily, a: float) -> PotentialFamily:
    """Shift every value by ``a``; bounds and comparability shift with it."""
    comp = family.comparability
    if comp is not None:
        comp = (comp[0], comp[1] + a, comp[2] + a)
    fn = family.value_fn
    if fn is not None:
        base = fn
        fn = lambda n: base(n) + a  # noqa: E731
    return replace(
        family,
        values=family.values + a,
        lower_bound=family.lower_bound + a,
        upper_bound=None if family.upper_bound is None else family.upper_bound + a,
        comparability=comp,
        value_fn=fn,
        name=f"{family.name}{a:+g}" if family.name else "",
    )


def lyapunov_family(spec: SystemSpec) -> PotentialFamily:
    """The family ``F = -log Phi'``, i.e. f_e = -log r_e."""
    vals = -spec.log_ratios
    fn = None
    if spec.ratio_fn is not None:
        rf = spec.ratio_fn
        fn = lambda n: -np.log(rf(n))  # noqa: E731
    return PotentialFamily(
        values=vals,
        lower_bound=float(vals.min()),
        comparability=(1.0, 0.0, 0.0),
        bounded=not spec.infinite,
        value_fn=fn,
        name="lyapunov",
    )


def retruncate(spec: SystemSpec, family: PotentialFamily, n: int):
    """Rebuild a truncated infinite system and its family at level ``n``."""
    if spec.ratio_fn is None or family.value_fn is None:
        raise ValueError("system or family carries no generator; cannot retruncate")
    idx = np.arange(1, n + 1)
    intervals = spec.interval_fn(idx) if spec.interval_fn is not None else None
    new_spec = replace(spec, ratios=spec.ratio_fn(idx), intervals=intervals, incidence=None)
    new_fam = replace(family, values=family.value_fn(idx))
    return new_spec, new_fam
