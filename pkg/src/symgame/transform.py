"""Decomposition of multi-strategy populations into coupled 2-strategy ones.

A population with symmetric switch rates (``rho_ij = rho_ji``) can be traded
for one derived population per strategy, each playing "use strategy i" vs
"don't".  For three strategies the derived 2x2 rate blocks are

    rho*_{i,i}   = rho_ii
    rho*_{i,~i}  = sum_{j != i} rho_ij
    rho*_{~i,i}  = (1/2) sum_{j != i} rho_ji
    rho*_{~i,~i} = (1/2) (sum of the remaining cross and diagonal rates)

and the construction inverts exactly: rho_ij = (rho*_{i,~i} + rho*_{j,~j}
- 2 rho*_{~k,k}) / 2 for the third strategy k.  Larger populations are
reduced one strategy at a time: population i keeps strategies i, i+1, ...
(cyclically) and lumps the last two into an aggregate whose incoming rates
sum the two columns, whose outgoing rates average the two rows, and whose
self-rate sums the aggregated 2x2 block.  The final step down to two
strategies always uses the half-weighted 3-to-2 rules above.

Derived rate blocks are functions of the base (payoff, state) pair.  When a
derived population must be evaluated standalone (its siblings' states
unknown), the base state is filled in from its own coordinates, splitting
any aggregate mass across members proportionally to the mean-dynamic rest
point; this keeps the derived populations mutually independent and only
matters for payoff- or state-dependent protocols.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .dynamics import rest_point
from .errors import SymgameError
from .games import (
    PopulationGame,
    RevisionProtocol,
    SocialState,
    ValidationReport,
    protocol_tuple,
    sample_states,
    validate_hypotheses,
)

__all__ = [
    "DerivedPopulation",
    "TransformedGame",
    "derived_block",
    "symmetrize_3to2",
    "invert_3to2",
    "reduce_once",
    "reduce_to",
    "decompose",
]

SYMMETRY_TOL = 1e-14


@dataclass(frozen=True)
class DerivedPopulation:
    """One derived population: a rotation of the base strategies plus lumping stages.

    ``members[t]`` lists the base strategies represented by derived strategy
    t; all are singletons except a trailing aggregate.  ``stages`` records
    the collapse rules applied: "sum" for intermediate reduction steps,
    "half" for the final split to two strategies, whose churn corner
    averages the lumped block instead of summing it.
    """

    base_population: int
    leading: int
    labels: tuple[str, ...]
    members: tuple[tuple[int, ...], ...]
    rotation: tuple[int, ...]
    stages: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.members)

    @property
    def is_passthrough(self) -> bool:
        return not self.stages


def _collapse_last_two(M: np.ndarray, mode: str) -> np.ndarray:
    a = M.shape[0]
    out = np.empty((a - 1, a - 1))
    out[: a - 2, : a - 2] = M[: a - 2, : a - 2]
    out[: a - 2, a - 2] = M[: a - 2, a - 2] + M[: a - 2, a - 1]
    out[a - 2, : a - 2] = 0.5 * (M[a - 2, : a - 2] + M[a - 1, : a - 2])
    corner = M[a - 2 :, a - 2 :].sum()
    out[a - 2, a - 2] = 0.5 * corner if mode == "half" else corner
    return out


def derived_block(population: DerivedPopulation, base_rates: np.ndarray) -> np.ndarray:
    """Evaluate a derived population's rate block from a base rate matrix."""
    M = np.asarray(base_rates, dtype=float)[np.ix_(population.rotation, population.rotation)]
    for mode in population.stages:
        M = _collapse_last_two(M, mode)
    return M


def _reduced_population(base_population: int, leading: int, n: int, target: int) -> DerivedPopulation:
    rotation = tuple((leading + t) % n for t in range(n))
    members: list[tuple[int, ...]] = [(s,) for s in rotation]
    stages: list[str] = []
    while len(members) > target:
        stages.append("half" if len(members) == 3 else "sum")
        members = members[:-2] + [members[-2] + members[-1]]
    labels = [str(m[0] + 1) for m in members[:-1]]
    last = members[-1]
    if len(last) == 1:
        labels.append(str(last[0] + 1))
    elif len(last) == n - 1:
        labels.append(f"not_{leading + 1}")
    else:
        labels.append(f"a_{leading + 1}")
    return DerivedPopulation(
        base_population=base_population,
        leading=leading,
        labels=tuple(labels),
        members=tuple(members),
        rotation=rotation,
        stages=tuple(stages),
    )


def _passthrough_population(base_population: int, n: int) -> DerivedPopulation:
    return DerivedPopulation(
        base_population=base_population,
        leading=0,
        labels=tuple(str(i + 1) for i in range(n)),
        members=tuple((i,) for i in range(n)),
        rotation=tuple(range(n)),
        stages=(),
    )


@dataclass(frozen=True)
class TransformedGame:
    """A base game together with its derived 2-strategy (or reduced) populations.

    Derived rate blocks are block-diagonal by construction: population i's
    rates never depend on another derived population's coordinates.  The
    embedding of a base state assigns each derived strategy the total mass of
    its member strategies.
    """

    base_game: PopulationGame
    base_protocols: tuple[RevisionProtocol, ...]
    populations: tuple[DerivedPopulation, ...]
    lineage: tuple[str, ...]
    fstar: str = "zero"

    def __post_init__(self):
        if self.fstar not in ("zero", "weighted"):
            raise ValueError(f"unknown payoff padding variant '{self.fstar}'")

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(pop.arity for pop in self.populations)

    @cached_property
    def _rest_parts(self) -> tuple[np.ndarray, ...]:
        return rest_point(self.base_game, self.base_protocols).parts

    # -- state maps ------------------------------------------------------

    def embed(self, state: SocialState) -> SocialState:
        """Image of a base state: derived coordinates are member mass sums."""
        self.base_game.require_valid_state(state, tol=1e-9)
        parts = []
        for pop in self.populations:
            x = state.parts[pop.base_population]
            parts.append(np.array([x[list(mem)].sum() for mem in pop.members]))
        return SocialState(parts=tuple(parts))

    def reconstruct(self, derived_parts: Sequence[np.ndarray]) -> SocialState:
        """Base state read off the derived leading coordinates."""
        base_parts = [np.zeros(n) for n in self.base_game.strategy_counts]
        for pop, part in zip(self.populations, derived_parts, strict=True):
            if pop.is_passthrough:
                base_parts[pop.base_population] = np.asarray(part, dtype=float).copy()
            else:
                base_parts[pop.base_population][pop.leading] = float(part[0])
        return SocialState(parts=tuple(base_parts))

    def fill_base_state(self, population: DerivedPopulation, part: np.ndarray) -> SocialState:
        """Base state inferred from one derived population's coordinates alone.

        Singleton members take their coordinate directly; aggregate mass is
        split across members in rest-point proportions.  Other base
        populations sit at the rest point.
        """
        parts = [np.array(r, dtype=float) for r in self._rest_parts]
        bp = population.base_population
        vec = np.zeros(self.base_game.strategy_counts[bp])
        for t, mem in enumerate(population.members):
            if len(mem) == 1:
                vec[mem[0]] = float(part[t])
            else:
                idx = list(mem)
                ref = self._rest_parts[bp][idx]
                total = float(ref.sum())
                share = ref / total if total > 0 else np.full(len(idx), 1.0 / len(idx))
                vec[idx] = float(part[t]) * share
        parts[bp] = vec
        return SocialState(parts=tuple(parts))

    # -- payoffs and rates ----------------------------------------------

    def _padded_payoff(self, population, base_state) -> np.ndarray:
        y = self.base_game.payoff_at(base_state)[population.base_population]
        x = base_state.parts[population.base_population]
        out = np.empty(population.arity)
        for t, mem in enumerate(population.members):
            if len(mem) == 1:
                out[t] = y[mem[0]]
            elif self.fstar == "zero":
                out[t] = 0.0
            else:
                idx = list(mem)
                mass = float(x[idx].sum())
                out[t] = float(x[idx] @ y[idx]) / mass if mass > 0 else 0.0
        return out

    def derived_payoff(self, derived_state: SocialState) -> tuple[np.ndarray, ...]:
        """Payoffs of the derived game: member payoffs, aggregates padded."""
        base_state = self.reconstruct(derived_state.parts)
        return tuple(
            self._padded_payoff(pop, base_state) for pop in self.populations
        )

    def block_at(self, population: DerivedPopulation, base_state: SocialState) -> np.ndarray:
        payoffs = self.base_game.payoff_at(base_state)
        bp = population.base_population
        rho = self.base_protocols[bp].rates(payoffs[bp], base_state.parts[bp])
        return derived_block(population, rho)

    def marginal_block(self, index: int, part: np.ndarray) -> np.ndarray:
        """Rate block of derived population ``index`` at its own state only."""
        pop = self.populations[index]
        return self.block_at(pop, self.fill_base_state(pop, np.asarray(part, dtype=float)))

    def rate_pair(self, index: int):
        """(up, down) rate functions of the leading-strategy fraction.

        Only defined for 2-strategy derived populations: up is the rate of
        switching into the leading strategy, down the rate of leaving it.
        """
        pop = self.populations[index]
        if pop.arity != 2:
            raise ValueError(f"derived population {index} has arity {pop.arity}, expected 2")
        mass = self.base_game.masses[pop.base_population]

        def up(fraction: float) -> float:
            part = np.array([fraction * mass, (1.0 - fraction) * mass])
            return float(self.marginal_block(index, part)[1, 0])

        def down(fraction: float) -> float:
            part = np.array([fraction * mass, (1.0 - fraction) * mass])
            return float(self.marginal_block(index, part)[0, 1])

        return up, down

    def marginal_game(self, index: int) -> tuple[PopulationGame, RevisionProtocol]:
        """Standalone single-population game for one derived population."""
        pop = self.populations[index]
        mass = self.base_game.masses[pop.base_population]

        def payoff(state: SocialState) -> tuple[np.ndarray, ...]:
            base = self.fill_base_state(pop, state.parts[0])
            return (self._padded_payoff(pop, base),)

        game = PopulationGame(masses=(mass,), strategy_counts=(pop.arity,), payoff=payoff)
        protocol = RevisionProtocol(
            kind="derived",
            rate_fn=lambda pi, x: self.marginal_block(index, x),
            support_floor=self.base_protocols[pop.base_population].support_floor,
            symmetric=None,
        )
        return game, protocol

    def as_population_game(self) -> tuple[PopulationGame, tuple[RevisionProtocol, ...]]:
        """The derived game as a plain multi-population game.

        Each derived population's protocol reads only its own coordinates
        (via the fill-in rule), so the populations evolve independently.
        """
        masses = tuple(
            self.base_game.masses[pop.base_population] for pop in self.populations
        )
        game = PopulationGame(
            masses=masses, strategy_counts=self.arities, payoff=self.derived_payoff
        )
        protocols = tuple(
            RevisionProtocol(
                kind="derived",
                rate_fn=(lambda idx: lambda pi, x: self.marginal_block(idx, x))(i),
                support_floor=self.base_protocols[pop.base_population].support_floor,
                symmetric=None,
            )
            for i, pop in enumerate(self.populations)
        )
        return game, protocols


def _default_samples(game: PopulationGame, protocols) -> list[SocialState]:
    # protocols that declare symmetry (structurally, or computed exactly from
    # a rate table) only get a small confirming sample; unknown ones are
    # probed at the full sampling depth
    declared = all(proto.symmetric for proto in protocols)
    return sample_states(game, n_random=16 if declared else 1000, seed=0)


def _check_symmetry(game, protocols, samples) -> ValidationReport:
    if samples is None:
        samples = _default_samples(game, protocols)
    report = validate_hypotheses(game, protocols, samples)
    if not report.symmetric:
        raise SymgameError(
            f"protocol is not symmetric: max asymmetry {report.max_asymmetry:.6g} "
            f"over {report.sample_count} sampled states"
        )
    return report


def symmetrize_3to2(
    game: PopulationGame,
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    samples: Sequence[SocialState] | None = None,
    fstar: str = "zero",
) -> TransformedGame:
    """Replace a 3-strategy population by three 2-strategy populations."""
    if game.num_populations != 1 or game.strategy_counts[0] != 3:
        raise ValueError(
            f"expected a single 3-strategy population, got {game.strategy_counts}"
        )
    protocols = protocol_tuple(protocol, game)
    _check_symmetry(game, protocols, samples)
    populations = tuple(_reduced_population(0, lead, 3, 2) for lead in range(3))
    return TransformedGame(
        base_game=game,
        base_protocols=protocols,
        populations=populations,
        lineage=("3->2",),
        fstar=fstar,
    )


def invert_3to2(transformed: TransformedGame) -> RevisionProtocol:
    """Recover the base 3x3 rates from the derived 2x2 blocks.

    ``rho_ij = (rho*_{i,~i} + rho*_{j,~j} - 2 rho*_{~k,k}) / 2`` for the
    remaining strategy k, and ``rho_ii = rho*_{ii}``; exact (two-term affine)
    whenever the base rates were symmetric.
    """
    pops = transformed.populations
    if len(pops) != 3 or any(p.arity != 2 for p in pops) or any(p.stages != ("half",) for p in pops):
        raise ValueError(
            f"expected three 2-strategy blocks from a 3-strategy base, got arities "
            f"{transformed.arities}"
        )
    by_lead = {pop.leading: pop for pop in pops}
    base = transformed.base_game
    protocols = transformed.base_protocols

    def rate_fn(pi: np.ndarray, x: np.ndarray) -> np.ndarray:
        state = SocialState(parts=(np.asarray(x, dtype=float),))
        rho = protocols[0].rates(np.asarray(pi, dtype=float), state.parts[0])
        blocks = {lead: derived_block(pop, rho) for lead, pop in by_lead.items()}
        out = np.empty((3, 3))
        for i in range(3):
            out[i, i] = blocks[i][0, 0]
            for j in range(3):
                if j == i:
                    continue
                k = 3 - i - j
                out[i, j] = (blocks[i][0, 1] + blocks[j][0, 1] - 2.0 * blocks[k][1, 0]) / 2.0
        return out

    return RevisionProtocol(
        kind="recovered",
        rate_fn=rate_fn,
        support_floor=protocols[0].support_floor,
        symmetric=True,
    )


def reduce_once(
    game: PopulationGame,
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    samples: Sequence[SocialState] | None = None,
    fstar: str = "zero",
) -> TransformedGame:
    """One reduction stage: n strategies -> n populations of n-1 strategies."""
    if game.num_populations != 1:
        raise ValueError("reduction applies to a single-population game")
    n = game.strategy_counts[0]
    if n <= 3:
        raise ValueError(f"reduction needs more than 3 strategies, got {n}")
    protocols = protocol_tuple(protocol, game)
    _check_symmetry(game, protocols, samples)
    populations = tuple(_reduced_population(0, lead, n, n - 1) for lead in range(n))
    return TransformedGame(
        base_game=game,
        base_protocols=protocols,
        populations=populations,
        lineage=(f"{n}->{n - 1}",),
        fstar=fstar,
    )


def reduce_to(
    game: PopulationGame,
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    target: int,
    samples: Sequence[SocialState] | None = None,
    fstar: str = "zero",
) -> TransformedGame:
    """Iterated reduction keeping one population per base strategy.

    Each stage lumps the last two strategies of every kept block; the final
    step down to two strategies uses the half-weighted 3-to-2 rules, so
    ``reduce_to(..., 2)`` agrees with reducing to 3 and then splitting.
    """
    if game.num_populations != 1:
        raise ValueError("reduction applies to a single-population game")
    n = game.strategy_counts[0]
    if target < 2:
        raise ValueError(f"target arity must be at least 2, got {target}")
    if target >= n:
        raise ValueError(f"target arity {target} is not below the current {n}: nothing to reduce")
    protocols = protocol_tuple(protocol, game)
    _check_symmetry(game, protocols, samples)
    populations = tuple(_reduced_population(0, lead, n, target) for lead in range(n))
    return TransformedGame(
        base_game=game,
        base_protocols=protocols,
        populations=populations,
        lineage=tuple(f"{a}->{a - 1}" for a in range(n, target, -1)),
        fstar=fstar,
    )


def decompose(
    game: PopulationGame,
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    samples: Sequence[SocialState] | None = None,
    fstar: str = "zero",
) -> TransformedGame:
    """Full 2-strategy decomposition, dispatching per population.

    Populations with two strategies pass through unchanged; three or more
    strategies split into one derived population per strategy.  Symmetry is
    required wherever an actual reduction happens; full support is required
    everywhere.  All failures are reported together.
    """
    protocols = protocol_tuple(protocol, game)
    if samples is None:
        samples = _default_samples(game, protocols)
    report = validate_hypotheses(game, protocols, samples)
    problems = []
    for p, (asym, min_rate) in enumerate(report.per_population):
        if game.strategy_counts[p] >= 3 and asym > SYMMETRY_TOL:
            problems.append(f"population {p}: max asymmetry {asym:.6g} exceeds {SYMMETRY_TOL}")
        floor = protocols[p].support_floor
        if floor <= 0:
            problems.append(f"population {p}: support floor {floor} is not positive")
        elif min_rate < floor:
            problems.append(
                f"population {p}: sampled rate {min_rate:.6g} falls below the floor {floor:.6g}"
            )
    if problems:
        raise SymgameError("decomposition preconditions failed: " + "; ".join(problems))

    populations: list[DerivedPopulation] = []
    lineage: list[str] = []
    for p, n in enumerate(game.strategy_counts):
        prefix = "" if game.num_populations == 1 else f"p{p + 1}:"
        if n == 2:
            populations.append(_passthrough_population(p, n))
            if prefix:
                lineage.append(f"{prefix}id")
        else:
            populations.extend(_reduced_population(p, lead, n, 2) for lead in range(n))
            lineage.extend(f"{prefix}{a}->{a - 1}" for a in range(n, 2, -1))
    return TransformedGame(
        base_game=game,
        base_protocols=protocols,
        populations=tuple(populations),
        lineage=tuple(lineage),
        fstar=fstar,
    )
