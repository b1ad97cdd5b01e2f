"""Domain types for population games, social states, and revision protocols.

A game couples one or more populations of continuous mass with a payoff map
over social states.  A revision protocol assigns every (payoff, state) pair a
matrix of conditional switch rates between strategies.  This module also
provides the hypothesis checks (rate symmetry, full support) that the
two-strategy decomposition machinery relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ProtocolError

__all__ = [
    "SocialState",
    "PopulationGame",
    "RevisionProtocol",
    "ValidationReport",
    "make_linear_game",
    "make_separable_game",
    "constant_protocol",
    "sum_exponential_protocol",
    "table_protocol",
    "custom_protocol",
    "protocol_tuple",
    "evaluate_rates",
    "validate_hypotheses",
    "sample_states",
    "default_rate_cap",
    "simplex_counts",
]

# Rate functions map (payoff vector, population state) -> n x n switch-rate matrix.
RateFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
PayoffFn = Callable[["SocialState"], tuple[np.ndarray, ...]]

MASS_TOL = 1e-12


def _readonly(vec) -> np.ndarray:
    arr = np.array(vec, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SocialState:
    """Per-population strategy masses, optionally tagged with a lattice denominator.

    ``parts[p]`` is the nonnegative mass vector of population ``p``.  When
    ``denominators`` is set, ``denominators[p] * parts[p]`` is integer: the
    state lies on the size-``denominators[p]`` lattice of its simplex.
    """

    parts: tuple[np.ndarray, ...]
    denominators: tuple[int, ...] | None = None

    def __post_init__(self):
        parts = tuple(_readonly(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        for p, vec in enumerate(parts):
            if vec.ndim != 1 or vec.size == 0:
                raise ValueError(f"population {p}: state must be a nonempty vector")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"population {p}: state has non-finite entries")
            if np.any(vec < -MASS_TOL):
                raise ValueError(f"population {p}: negative mass {vec.min()!r}")
        if self.denominators is not None:
            object.__setattr__(self, "denominators", tuple(int(n) for n in self.denominators))

    @classmethod
    def single(cls, vec) -> "SocialState":
        return cls(parts=(np.asarray(vec, dtype=float),))

    @classmethod
    def _unchecked(cls, parts: tuple[np.ndarray, ...]) -> "SocialState":
        # fast constructor for hot loops; callers guarantee validity
        obj = object.__new__(cls)
        object.__setattr__(obj, "parts", parts)
        object.__setattr__(obj, "denominators", None)
        return obj

    @classmethod
    def from_counts(cls, counts: Sequence[Sequence[int]], denominators: Sequence[int]) -> "SocialState":
        parts = tuple(np.asarray(k, dtype=float) / n for k, n in zip(counts, denominators, strict=True))
        return cls(parts=parts, denominators=tuple(denominators))

    def counts(self, denominators: Sequence[int] | None = None) -> tuple[tuple[int, ...], ...]:
        """Recover integer lattice counts; exact for denominators up to 1e6."""
        dens = denominators if denominators is not None else self.denominators
        if dens is None:
            raise ValueError("state carries no lattice denominators")
        out = []
        for vec, n in zip(self.parts, dens, strict=True):
            scaled = vec * n
            k = np.rint(scaled)
            if np.max(np.abs(scaled - k)) > 1e-6:
                raise ValueError(f"state is not on the lattice with denominator {n}")
            out.append(tuple(int(v) for v in k))
        return tuple(out)

    @property
    def num_populations(self) -> int:
        return len(self.parts)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.parts)


@dataclass(frozen=True, eq=False)
class PopulationGame:
    """A population game: masses, strategy counts, and a total payoff map.

    ``payoff(state)`` must return one payoff vector per population for every
    valid :class:`SocialState` (it never raises on valid input).
    """

    masses: tuple[float, ...]
    strategy_counts: tuple[int, ...]
    payoff: PayoffFn

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "strategy_counts", tuple(int(n) for n in self.strategy_counts))
        if len(self.masses) != len(self.strategy_counts):
            raise ValueError("masses and strategy_counts must have one entry per population")
        for p, (m, n) in enumerate(zip(self.masses, self.strategy_counts)):
            if m <= 0:
                raise ValueError(f"population {p}: mass must be positive, got {m}")
            if n < 2:
                raise ValueError(f"population {p}: needs at least 2 strategies, got {n}")

    @property
    def num_populations(self) -> int:
        return len(self.masses)

    def payoff_at(self, state: SocialState) -> tuple[np.ndarray, ...]:
        """Evaluate the payoff map and validate its shape and finiteness."""
        values = self.payoff(state)
        if isinstance(values, np.ndarray) and self.num_populations == 1:
            values = (values,)
        values = tuple(np.asarray(v, dtype=float) for v in values)
        if len(values) != self.num_populations:
            raise ValueError(
                f"payoff returned {len(values)} vectors for {self.num_populations} populations"
            )
        for p, (vec, n) in enumerate(zip(values, self.strategy_counts)):
            if vec.shape != (n,):
                raise ValueError(f"population {p}: payoff shape {vec.shape} != ({n},)")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"population {p}: payoff has non-finite entries")
        return values

    def require_valid_state(self, state: SocialState, tol: float = MASS_TOL) -> None:
        if state.num_populations != self.num_populations:
            raise ValueError(
                f"state has {state.num_populations} populations, game has {self.num_populations}"
            )
        for p, (vec, m, n) in enumerate(zip(state.parts, self.masses, self.strategy_counts)):
            if vec.shape != (n,):
                raise ValueError(f"population {p}: state shape {vec.shape} != ({n},)")
            if abs(float(vec.sum()) - m) > max(tol, tol * m):
                raise ValueError(
                    f"population {p}: mass {vec.sum()!r} != {m} beyond tolerance {tol}"
                )

    def barycenter(self) -> SocialState:
        return SocialState(
            parts=tuple(np.full(n, m / n) for m, n in zip(self.masses, self.strategy_counts))
        )


def make_linear_game(payoff_matrix, mass: float = 1.0) -> PopulationGame:
    """Single-population game with linear payoffs ``A @ x``.

    Raises ValueError for a non-square or non-finite matrix.
    """
    A = np.array(payoff_matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"payoff matrix must be square, got shape {A.shape}")
    if A.shape[0] < 2:
        raise ValueError("payoff matrix must be at least 2x2")
    if not np.all(np.isfinite(A)):
        raise ValueError("payoff matrix has non-finite entries")
    A.setflags(write=False)

    def payoff(state: SocialState) -> tuple[np.ndarray, ...]:
        return (A @ state.parts[0],)

    return PopulationGame(masses=(float(mass),), strategy_counts=(A.shape[0],), payoff=payoff)


def make_separable_game(payoff_matrices, masses=None) -> PopulationGame:
    """Multi-population game where population p feels only its own state: ``A_p @ x_p``."""
    mats = [np.array(A, dtype=float) for A in payoff_matrices]
    for p, A in enumerate(mats):
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"population {p}: payoff matrix must be square, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError(f"population {p}: payoff matrix has non-finite entries")
        A.setflags(write=False)
    if masses is None:
        masses = [1.0] * len(mats)

    def payoff(state: SocialState) -> tuple[np.ndarray, ...]:
        return tuple(A @ x for A, x in zip(mats, state.parts, strict=True))

    return PopulationGame(
        masses=tuple(masses),
        strategy_counts=tuple(A.shape[0] for A in mats),
        payoff=payoff,
    )


@dataclass(frozen=True, eq=False)
class RevisionProtocol:
    """Conditional switch rates between strategies.

    ``rate_fn(payoffs, state_part)`` returns the n x n rate matrix for one
    population.  ``support_floor`` is the declared lower rate bound (> 0 for a
    fully supported protocol); ``rate_cap`` optionally fixes the per-pair
    normalization caps, otherwise they default to 1.1x the sampled maximum.
    Diagonal entries are carried but never drive transitions.
    """

    kind: str
    rate_fn: RateFn
    support_floor: float = 0.0
    rate_cap: np.ndarray | None = None
    symmetric: bool | None = None
    params: dict = field(default_factory=dict)

    def rates(self, payoffs: np.ndarray, state_part: np.ndarray) -> np.ndarray:
        """Evaluate and validate the rate matrix at one (payoff, state) pair."""
        pi = np.asarray(payoffs, dtype=float)
        x = np.asarray(state_part, dtype=float)
        if pi.shape != x.shape:
            raise ValueError(f"payoff shape {pi.shape} does not match state shape {x.shape}")
        out = np.asarray(self.rate_fn(pi, x), dtype=float)
        n = x.shape[0]
        if out.shape != (n, n):
            raise ValueError(f"protocol '{self.kind}' returned shape {out.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(out)):
            raise ProtocolError(f"protocol '{self.kind}' produced non-finite rates")
        if np.any(out < 0):
            raise ProtocolError(f"protocol '{self.kind}' produced negative rates (min {out.min()!r})")
        return out


def constant_protocol(c: float = 1.0) -> RevisionProtocol:
    """All pairs switch at the same constant rate ``c``."""
    c = float(c)
    if c <= 0 or not math.isfinite(c):
        raise ValueError(f"constant rate must be positive and finite, got {c}")
    return RevisionProtocol(
        kind="constant",
        rate_fn=lambda pi, x: np.full((len(x), len(x)), c),
        support_floor=c,
        symmetric=True,
        params={"c": c},
    )


def sum_exponential_protocol(eta: float, support_floor: float = 0.0) -> RevisionProtocol:
    """Payoff-sensitive symmetric rates ``exp(eta * (pi_i + pi_j))``.

    Symmetric because the rate depends on the unordered strategy pair only
    through the payoff sum.  ``support_floor`` must be supplied by the caller
    from the payoff range (e.g. exp(-2*eta) when payoffs live in [-1, 1]).
    """
    eta = float(eta)

    def rate_fn(pi: np.ndarray, x: np.ndarray) -> np.ndarray:
        u = np.exp(eta * pi)
        return np.outer(u, u)

    return RevisionProtocol(
        kind="sum_exponential",
        rate_fn=rate_fn,
        support_floor=float(support_floor),
        symmetric=True,
        params={"eta": eta},
    )


def table_protocol(matrix, support_floor: float | None = None) -> RevisionProtocol:
    """State- and payoff-independent rates given by an explicit matrix."""
    M = np.array(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"rate table must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)) or np.any(M < 0):
        raise ValueError("rate table entries must be finite and nonnegative")
    M.setflags(write=False)
    floor = float(M.min()) if support_floor is None else float(support_floor)

    def rate_fn(pi: np.ndarray, x: np.ndarray) -> np.ndarray:
        if len(x) != M.shape[0]:
            raise ValueError(f"rate table is {M.shape[0]}x{M.shape[0]}, state has {len(x)} strategies")
        return M

    return RevisionProtocol(
        kind="table",
        rate_fn=rate_fn,
        support_floor=floor,
        rate_cap=_readonly(1.1 * M),
        symmetric=bool(np.array_equal(M, M.T)),
        params={"matrix": M},
    )


def custom_protocol(
    rate_fn: RateFn,
    support_floor: float = 0.0,
    symmetric: bool | None = None,
    name: str = "custom",
) -> RevisionProtocol:
    return RevisionProtocol(
        kind=name, rate_fn=rate_fn, support_floor=float(support_floor), symmetric=symmetric
    )


def protocol_tuple(
    protocol: RevisionProtocol | Sequence[RevisionProtocol], game: PopulationGame
) -> tuple[RevisionProtocol, ...]:
    """Normalize a protocol argument to one protocol per population."""
    if isinstance(protocol, RevisionProtocol):
        return (protocol,) * game.num_populations
    protocols = tuple(protocol)
    if len(protocols) != game.num_populations:
        raise ValueError(
            f"got {len(protocols)} protocols for {game.num_populations} populations"
        )
    return protocols


def evaluate_rates(
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    payoffs: Sequence[np.ndarray] | np.ndarray,
    state: SocialState,
) -> tuple[np.ndarray, ...]:
    """Per-population switch-rate matrices at one (payoff, state) pair.

    Every matrix entry is validated finite and nonnegative; a violating
    protocol raises :class:`ProtocolError`.
    """
    if isinstance(payoffs, np.ndarray) and payoffs.ndim == 1:
        payoffs = (payoffs,)
    payoffs = tuple(np.asarray(v, dtype=float) for v in payoffs)
    if len(payoffs) != state.num_populations:
        raise ValueError(
            f"got {len(payoffs)} payoff vectors for {state.num_populations} populations"
        )
    if isinstance(protocol, RevisionProtocol):
        protocols = (protocol,) * state.num_populations
    else:
        protocols = tuple(protocol)
        if len(protocols) != state.num_populations:
            raise ValueError(
                f"got {len(protocols)} protocols for {state.num_populations} populations"
            )
    return tuple(
        proto.rates(pi, x) for proto, pi, x in zip(protocols, payoffs, state.parts)
    )


def simplex_counts(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All compositions of ``total`` into ``parts`` nonnegative integers, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in simplex_counts(total - head, parts - 1):
            yield (head,) + tail


def sample_states(
    game: PopulationGame,
    resolution: int | Sequence[int] | None = None,
    n_random: int = 1000,
    seed: int = 0,
    enumeration_limit: int = 1_000_000,
) -> list[SocialState]:
    """States used to probe protocol hypotheses.

    With a small enough lattice the full grid is enumerated; otherwise at
    least ``n_random`` seeded Dirichlet-uniform simplex states are drawn.
    """
    if resolution is not None:
        if isinstance(resolution, int):
            resolution = (resolution,) * game.num_populations
        sizes = [
            int(round(n_res * m)) for n_res, m in zip(resolution, game.masses, strict=True)
        ]
        total = 1
        for size, n in zip(sizes, game.strategy_counts):
            total *= math.comb(size + n - 1, n - 1)
        if total <= enumeration_limit:
            per_pop = [
                list(simplex_counts(size, n)) for size, n in zip(sizes, game.strategy_counts)
            ]
            states: list[SocialState] = []
            _product_states(per_pop, resolution, [], states)
            return states
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(max(n_random, 1)):
        parts = tuple(
            m * rng.dirichlet(np.ones(n))
            for m, n in zip(game.masses, game.strategy_counts)
        )
        states.append(SocialState(parts=parts))
    return states


def _product_states(per_pop, denominators, prefix, out):
    if len(prefix) == len(per_pop):
        out.append(SocialState.from_counts(tuple(prefix), denominators))
        return
    for counts in per_pop[len(prefix)]:
        _product_states(per_pop, denominators, prefix + [counts], out)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of sampling-based hypothesis checks.

    ``symmetric`` holds when the largest rate asymmetry over all samples is
    zero to 1e-14 and any explicit caps are symmetric; ``fully_supported``
    when every sampled rate stays at or above a positive declared floor.
    Sampling is a surrogate for the underlying universally quantified
    conditions, so the sample count and exhaustiveness are recorded.
    """

    symmetric: bool
    fully_supported: bool
    max_asymmetry: float
    min_rate: float
    sample_count: int
    exhaustive: bool
    support_floor: float
    per_population: tuple[tuple[float, float], ...] = ()

    def as_lines(self) -> list[str]:
        return [
            f"symmetric: {str(self.symmetric).lower()}",
            f"fully_supported: {str(self.fully_supported).lower()}",
            f"max_asymmetry: {self.max_asymmetry:.17g}",
            f"min_rate: {self.min_rate:.17g}",
            f"support_floor: {self.support_floor:.17g}",
            f"sample_count: {self.sample_count}",
            f"exhaustive: {str(self.exhaustive).lower()}",
        ]


SYMMETRY_TOL = 1e-14


def validate_hypotheses(
    game: PopulationGame,
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    states: Sequence[SocialState],
    exhaustive: bool = False,
) -> ValidationReport:
    """Check rate symmetry and full support over a sample of states."""
    if not states:
        raise ValueError("need at least one sample state")
    protocols = protocol_tuple(protocol, game)
    per_pop = [[0.0, math.inf] for _ in range(game.num_populations)]
    for state in states:
        payoffs = game.payoff_at(state)
        for p, (proto, pi, x) in enumerate(zip(protocols, payoffs, state.parts)):
            rho = proto.rates(pi, x)
            per_pop[p][0] = max(per_pop[p][0], float(np.max(np.abs(rho - rho.T))))
            per_pop[p][1] = min(per_pop[p][1], float(rho.min()))
    max_asym = max(stats[0] for stats in per_pop)
    min_rate = min(stats[1] for stats in per_pop)
    cap_symmetric = all(
        proto.rate_cap is None or np.array_equal(proto.rate_cap, proto.rate_cap.T)
        for proto in protocols
    )
    floor = min(proto.support_floor for proto in protocols)
    return ValidationReport(
        symmetric=(max_asym <= SYMMETRY_TOL) and cap_symmetric,
        fully_supported=(floor > 0) and (min_rate >= floor),
        max_asymmetry=max_asym,
        min_rate=min_rate,
        sample_count=len(states),
        exhaustive=exhaustive,
        support_floor=floor,
        per_population=tuple((s[0], s[1]) for s in per_pop),
    )


def default_rate_cap(
    game: PopulationGame,
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    states: Sequence[SocialState],
) -> tuple[np.ndarray, ...]:
    """Per-pair normalization caps: sampled rate maximum inflated by 10%."""
    protocols = protocol_tuple(protocol, game)
    caps = [np.zeros((n, n)) for n in game.strategy_counts]
    for state in states:
        payoffs = game.payoff_at(state)
        for p, (proto, pi, x) in enumerate(zip(protocols, payoffs, state.parts)):
            np.maximum(caps[p], proto.rates(pi, x), out=caps[p])
    return tuple(
        proto.rate_cap if proto.rate_cap is not None else _readonly(1.1 * cap)
        for proto, cap in zip(protocols, caps)
    )
