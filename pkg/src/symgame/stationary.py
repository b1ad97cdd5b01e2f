"""Infinite-horizon predictions from two-strategy birth-death products.

Each derived 2-strategy population of size N is a birth-death chain on the
counts {0, ..., N}: from count k it gains an agent at rate (N-k) * up(k/N)
and loses one at rate k * down(k/N).  Its stationary weights are the product

    w_k / w_0 = prod_{j=1..N k/N} [(N-j+1)/j] * [up((j-1)/N) / down(j/N)]

which the ``factor`` and ``orientation`` variant flags can switch to an
alternative spelling (factor (N-j-1)/j, ratio flipped) that zeroes out the
top counts and is kept only for regression and sensitivity runs.  The joint
prediction over the original grid is the product of the per-population
marginals conditioned on the shared simplex constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chain import StateGrid, StationaryTable
from .errors import EmptySupportError, SymgameError
from .games import simplex_counts
from .transform import TransformedGame

__all__ = [
    "BirthDeathSpec",
    "BirthDeathWeights",
    "ComparisonMetrics",
    "birth_death_weights",
    "specs_from_transform",
    "unconstrained_joint",
    "product_form_joint",
    "compare",
    "marginal_from_exact",
]


@dataclass(frozen=True)
class BirthDeathSpec:
    """Up/down rate functions of one derived 2-strategy population.

    ``up_rate(f)`` is the conditional rate of switching into the tracked
    strategy at fraction f, ``down_rate(f)`` the rate of leaving it.  Both
    must be strictly positive on the grid.
    """

    population_index: int
    size: int
    up_rate: Callable[[float], float]
    down_rate: Callable[[float], float]
    factor_variant: str = "standard"
    orientation_variant: str = "standard"

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"population size must be at least 1, got {self.size}")
        for name, value in (("factor", self.factor_variant),
                            ("orientation", self.orientation_variant)):
            if value not in ("standard", "paper"):
                raise ValueError(f"unknown {name} variant '{value}'")


@dataclass(frozen=True)
class BirthDeathWeights:
    """Unnormalized stationary weights over counts {0, ..., N}, w_0 = 1."""

    weights: np.ndarray
    degenerate: bool

    def normalized(self) -> np.ndarray:
        total = self.weights.sum()
        if total <= 0:
            raise EmptySupportError("all birth-death weights are zero")
        return self.weights / total


def birth_death_weights(spec: BirthDeathSpec) -> BirthDeathWeights:
    """Evaluate the product-form weights for one birth-death population.

    Rates are validated strictly positive; a zero weight caused by the
    alternative factor variant is returned with ``degenerate=True`` rather
    than raised.
    """
    N = spec.size
    weights = np.empty(N + 1)
    weights[0] = 1.0
    degenerate = False
    w = 1.0
    for j in range(1, N + 1):
        lo = spec.up_rate((j - 1) / N)
        hi = spec.down_rate(j / N)
        if spec.orientation_variant == "paper":
            lo = spec.down_rate((j - 1) / N)
            hi = spec.up_rate(j / N)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo <= 0 or hi <= 0:
            raise SymgameError(
                f"population {spec.population_index}: nonpositive or non-finite rate at "
                f"count {j} (numerator {lo!r}, denominator {hi!r})"
            )
        if spec.factor_variant == "paper":
            factor = (N - j - 1) / j
        else:
            factor = (N - j + 1) / j
        w = w * factor * (lo / hi)
        if w == 0.0:
            degenerate = True
            w = 0.0  # normalize -0.0 away
        elif w < 0.0:
            raise SymgameError(
                f"population {spec.population_index}: negative weight at count {j} "
                f"(factor variant '{spec.factor_variant}' with N={N})"
            )
        weights[j] = w
    return BirthDeathWeights(weights=weights, degenerate=degenerate)


def specs_from_transform(
    transformed: TransformedGame,
    size: int | Sequence[int],
    factor_variant: str = "standard",
    orientation_variant: str = "standard",
) -> list[BirthDeathSpec]:
    """One birth-death spec per derived 2-strategy population.

    ``size`` is the agent count shared by all derived populations, or one
    count per derived population.
    """
    if isinstance(size, int):
        sizes = [size] * len(transformed.populations)
    else:
        sizes = [int(s) for s in size]
        if len(sizes) != len(transformed.populations):
            raise ValueError(
                f"got {len(sizes)} sizes for {len(transformed.populations)} derived populations"
            )
    specs = []
    for i, pop in enumerate(transformed.populations):
        if pop.arity != 2:
            raise ValueError(
                f"derived population {i} has arity {pop.arity}; reduce to 2 strategies first"
            )
        up, down = transformed.rate_pair(i)
        specs.append(
            BirthDeathSpec(
                population_index=i,
                size=sizes[i],
                up_rate=up,
                down_rate=down,
                factor_variant=factor_variant,
                orientation_variant=orientation_variant,
            )
        )
    return specs


def unconstrained_joint(marginals: Sequence[np.ndarray]) -> np.ndarray:
    """Plain product of marginals over the count hypercube (no conditioning)."""
    joint = np.asarray(marginals[0], dtype=float)
    for marg in marginals[1:]:
        joint = np.multiply.outer(joint, np.asarray(marg, dtype=float))
    return joint


def product_form_joint(
    marginals: Sequence[np.ndarray],
    grid: StateGrid,
    metadata: dict | None = None,
) -> StationaryTable:
    """Joint prediction over the original grid from per-population marginals.

    Marginals are consumed in population-block order: a base population with
    n >= 3 strategies owns n marginals (one per derived population), which
    are multiplied and conditioned on its simplex constraint; a 2-strategy
    population owns a single marginal, re-indexed without conditioning.
    Population blocks combine as an outer product.
    """
    marginals = [np.asarray(m, dtype=float) for m in marginals]
    expected = sum(n if n >= 3 else 1 for n in grid.strategy_counts)
    if len(marginals) != expected:
        raise ValueError(f"got {len(marginals)} marginals, grid needs {expected}")

    per_pop_weights = []
    cursor = 0
    for p, (n, size) in enumerate(zip(grid.strategy_counts, grid.sizes)):
        block = marginals[cursor : cursor + (n if n >= 3 else 1)]
        cursor += len(block)
        for m in block:
            if m.shape != (size + 1,):
                raise ValueError(
                    f"population {p}: marginal has {m.shape[0]} entries, expected {size + 1}"
                )
        states = list(_pop_states(grid, p))
        if n >= 3:
            weights = np.array(
                [np.prod([block[t][k] for t, k in enumerate(counts)]) for counts in states]
            )
        else:
            weights = np.array([block[0][counts[0]] for counts in states])
        total = weights.sum()
        if total <= 0:
            raise EmptySupportError(
                f"population {p}: conditioning on the simplex left no admissible state"
            )
        per_pop_weights.append(weights / total)

    joint = per_pop_weights[0]
    for weights in per_pop_weights[1:]:
        joint = np.multiply.outer(joint, weights)
    return StationaryTable(
        grid=grid,
        probabilities=joint.ravel(),
        provenance="predicted-product-form",
        metadata=metadata or {},
    )


def _pop_states(grid: StateGrid, p: int):
    # per-population composition list in grid order
    return simplex_counts(grid.sizes[p], grid.strategy_counts[p])


@dataclass(frozen=True)
class ComparisonMetrics:
    """Distribution distances: total variation, KL (natural log), sup norm."""

    tv: float
    kl: float
    max_abs: float

    def as_lines(self, suffix: str = "") -> list[str]:
        tag = f"_{suffix}" if suffix else ""
        kl = "inf" if math.isinf(self.kl) else f"{self.kl:.17g}"
        return [
            f"tv{tag}: {self.tv:.17g}",
            f"kl{tag}: {kl}",
            f"max_abs{tag}: {self.max_abs:.17g}",
        ]


def compare(p: StationaryTable, q: StationaryTable) -> ComparisonMetrics:
    """Distances between two distributions on the same grid.

    KL uses the 0 log 0 = 0 convention and is +infinity where p puts mass on
    a q-null state.
    """
    if p.grid != q.grid:
        raise ValueError("stationary tables live on different grids")
    pv, qv = p.probabilities, q.probabilities
    tv = 0.5 * float(np.abs(pv - qv).sum())
    support = pv > 0
    if np.any(qv[support] == 0):
        kl = math.inf
    else:
        kl = float(np.sum(pv[support] * np.log(pv[support] / qv[support])))
    return ComparisonMetrics(tv=tv, kl=kl, max_abs=float(np.max(np.abs(pv - qv))))


def marginal_from_exact(
    table: StationaryTable, strategy: int, population: int = 0
) -> np.ndarray:
    """Project an exact table onto one strategy's count; sums to one."""
    if table.provenance != "exact":
        raise ValueError(f"expected an exact table, got '{table.provenance}'")
    grid = table.grid
    if not 0 <= population < len(grid.strategy_counts):
        raise IndexError(f"population {population} out of range")
    if not 0 <= strategy < grid.strategy_counts[population]:
        raise IndexError(
            f"strategy {strategy} out of range for population {population} "
            f"({grid.strategy_counts[population]} strategies)"
        )
    out = np.zeros(grid.sizes[population] + 1)
    for ordinal, prob in enumerate(table.probabilities):
        out[table.grid.state(ordinal)[population][strategy]] += prob
    return out
