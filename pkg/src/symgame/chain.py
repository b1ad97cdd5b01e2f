"""Exact finite-population jump process on the lattice of social states.

For population size N the process jumps from x to x + (e_j - e_i)/N at rate
``N * x_i * rho_ij(F(x), x)``: revision opportunities arrive at rate N R and
the per-pair normalization caps cancel against the acceptance probabilities,
so the generator is written directly in the conditional rates.  Diagonal
rates never produce transitions (a self-switch is unobservable), and the
expected velocity field of this process is exactly the mean dynamic.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .dynamics import Trajectory
from .errors import GridSizeError, ProtocolError, ReducibleChainError
from .games import (
    PopulationGame,
    RevisionProtocol,
    SocialState,
    protocol_tuple,
    simplex_counts,
)

__all__ = [
    "StateGrid",
    "FiniteChain",
    "StationaryTable",
    "PathResult",
    "DetailedBalanceReport",
    "enumerate_states",
    "build_grid",
    "build_generator",
    "exact_stationary",
    "simulate_path",
    "check_detailed_balance",
    "deviation_vs_ode",
]

DEFAULT_GRID_LIMIT = 2_000_000
DENSE_SOLVER_LIMIT = 20_000


class StateGrid:
    """Enumerated lattice states with a bijective ordinal index.

    Population p contributes all compositions of ``sizes[p]`` agents into its
    strategies, in lexicographic order; multi-population grids are the
    ordered product, indexed mixed-radix with population 0 most significant.
    """

    def __init__(self, strategy_counts, sizes, resolutions, limit: int = DEFAULT_GRID_LIMIT):
        self.strategy_counts = tuple(int(n) for n in strategy_counts)
        self.sizes = tuple(int(s) for s in sizes)
        self.resolutions = tuple(int(r) for r in resolutions)
        total = 1
        for size, n in zip(self.sizes, self.strategy_counts):
            per_pop = math.comb(size + n - 1, n - 1)
            if per_pop > limit:
                raise GridSizeError(
                    f"population grid has {per_pop} states, exceeding the limit {limit}"
                )
            total *= per_pop
        if total > limit:
            raise GridSizeError(f"product grid has {total} states, exceeding the limit {limit}")
        self._pop_states = [
            list(simplex_counts(size, n)) for size, n in zip(self.sizes, self.strategy_counts)
        ]
        self._pop_index = [
            {counts: i for i, counts in enumerate(states)} for states in self._pop_states
        ]
        self._radix = [len(states) for states in self._pop_states]
        self._total = total

    def __len__(self) -> int:
        return self._total

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StateGrid)
            and self.strategy_counts == other.strategy_counts
            and self.sizes == other.sizes
            and self.resolutions == other.resolutions
        )

    def __hash__(self):
        return hash((self.strategy_counts, self.sizes, self.resolutions))

    def state(self, ordinal: int) -> tuple[tuple[int, ...], ...]:
        if not 0 <= ordinal < self._total:
            raise IndexError(f"ordinal {ordinal} out of range for grid of {self._total} states")
        parts = []
        for states, radix in zip(reversed(self._pop_states), reversed(self._radix)):
            ordinal, r = divmod(ordinal, radix)
            parts.append(states[r])
        return tuple(reversed(parts))

    def index(self, state: Sequence[Sequence[int]]) -> int:
        ordinal = 0
        for counts, idx_map, radix in zip(state, self._pop_index, self._radix):
            ordinal = ordinal * radix + idx_map[tuple(int(k) for k in counts)]
        return ordinal

    def states(self):
        for ordinal in range(self._total):
            yield self.state(ordinal)

    def social_state(self, ordinal: int) -> SocialState:
        return SocialState.from_counts(self.state(ordinal), self.resolutions)

    def format_state(self, ordinal: int) -> str:
        return "|".join(" ".join(str(k) for k in part) for part in self.state(ordinal))


def enumerate_states(n: int, size: int, limit: int = DEFAULT_GRID_LIMIT) -> StateGrid:
    """Single-population grid: all compositions of ``size`` agents into ``n`` strategies."""
    if n < 2:
        raise ValueError(f"need at least 2 strategies, got {n}")
    if size < 1:
        raise ValueError(f"population size must be at least 1, got {size}")
    return StateGrid((n,), (size,), (size,), limit=limit)


def build_grid(
    game: PopulationGame,
    resolution: int | Sequence[int],
    limit: int = DEFAULT_GRID_LIMIT,
) -> StateGrid:
    """Grid for a game at lattice resolution N per population (counts = N * mass)."""
    if isinstance(resolution, int):
        resolution = (resolution,) * game.num_populations
    resolutions = tuple(int(r) for r in resolution)
    sizes = []
    for p, (res, m) in enumerate(zip(resolutions, game.masses, strict=True)):
        if res < 1:
            raise ValueError(f"population {p}: resolution must be >= 1, got {res}")
        size = res * m
        if abs(size - round(size)) > 1e-9:
            raise ValueError(
                f"population {p}: resolution {res} x mass {m} is not an integer agent count"
            )
        sizes.append(int(round(size)))
    return StateGrid(game.strategy_counts, sizes, resolutions, limit=limit)


@dataclass(frozen=True, eq=False)
class StationaryTable:
    """A probability distribution over a state grid with provenance.

    ``provenance`` is one of ``exact`` (linear solve of mu Q = 0),
    ``empirical`` (time-weighted occupancy of a simulated path), or
    ``predicted-product-form`` (conditioned product of two-strategy
    marginals).
    """

    grid: StateGrid
    probabilities: np.ndarray
    provenance: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.shape != (len(self.grid),):
            raise ValueError(f"got {probs.shape[0]} probabilities for {len(self.grid)} states")
        if np.any(probs < -1e-12):
            raise ValueError(f"negative probability {probs.min()!r}")
        probs = np.maximum(probs, 0.0)
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        probs = probs / total
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("state_counts,probability,provenance\n")
        for ordinal, prob in enumerate(self.probabilities):
            buf.write(f"{self.grid.format_state(ordinal)},{prob:.17g},{self.provenance}\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class FiniteChain:
    """Sparse generator of the revision process on an enumerated grid.

    Edge arrays run over the off-diagonal transitions; entry k encodes the
    jump ``src[k] -> dst[k]`` moving one agent of population ``pop[k]`` from
    strategy ``from_strategy[k]`` to ``to_strategy[k]`` at ``rate[k]``.
    """

    grid: StateGrid
    generator: sp.csr_matrix
    src: np.ndarray
    dst: np.ndarray
    rate: np.ndarray
    pop: np.ndarray
    from_strategy: np.ndarray
    to_strategy: np.ndarray
    game: PopulationGame
    protocols: tuple[RevisionProtocol, ...]

    @property
    def num_states(self) -> int:
        return len(self.grid)

    def max_rate(self) -> float:
        return float(np.max(np.abs(self.generator.data))) if self.generator.nnz else 0.0


def build_generator(
    game: PopulationGame,
    protocol: RevisionProtocol | Sequence[RevisionProtocol],
    resolution: int | Sequence[int],
    limit: int = DEFAULT_GRID_LIMIT,
) -> FiniteChain:
    """Assemble the jump-rate generator Q over the full lattice grid.

    Rate of ``x -> x + (e_j - e_i)/N^p`` is ``N^p x_i^p rho^p_ij(F(x), x^p)``,
    i.e. ``k_i^p`` agents each revising at the conditional rate.  Diagonal
    entries are the negative row sums.
    """
    protocols = protocol_tuple(protocol, game)
    grid = build_grid(game, resolution, limit=limit)
    src: list[int] = []
    dst: list[int] = []
    rate: list[float] = []
    pop: list[int] = []
    s_from: list[int] = []
    s_to: list[int] = []

    for ordinal in range(len(grid)):
        counts = grid.state(ordinal)
        state = SocialState.from_counts(counts, grid.resolutions)
        payoffs = game.payoff_at(state)
        for p, (proto, pi, x) in enumerate(zip(protocols, payoffs, state.parts)):
            rho = proto.rates(pi, x)
            part = counts[p]
            for i, k_i in enumerate(part):
                if k_i == 0:
                    continue
                for j in range(len(part)):
                    if j == i:
                        continue
                    q = k_i * rho[i, j]
                    if q == 0.0:
                        continue
                    target = list(counts)
                    moved = list(part)
                    moved[i] -= 1
                    moved[j] += 1
                    target[p] = tuple(moved)
                    src.append(ordinal)
                    dst.append(grid.index(target))
                    rate.append(q)
                    pop.append(p)
                    s_from.append(i)
                    s_to.append(j)

    src_arr = np.asarray(src, dtype=np.int64)
    dst_arr = np.asarray(dst, dtype=np.int64)
    rate_arr = np.asarray(rate, dtype=float)
    n_states = len(grid)
    off_diag = sp.coo_matrix((rate_arr, (src_arr, dst_arr)), shape=(n_states, n_states))
    row_sums = np.asarray(off_diag.sum(axis=1)).ravel()
    diag = sp.coo_matrix((-row_sums, (np.arange(n_states), np.arange(n_states))),
                         shape=(n_states, n_states))
    generator = (off_diag + diag).tocsr()

    return FiniteChain(
        grid=grid,
        generator=generator,
        src=src_arr,
        dst=dst_arr,
        rate=rate_arr,
        pop=np.asarray(pop, dtype=np.int32),
        from_strategy=np.asarray(s_from, dtype=np.int32),
        to_strategy=np.asarray(s_to, dtype=np.int32),
        game=game,
        protocols=protocols,
    )


def _communicating_classes(chain: FiniteChain):
    n = chain.num_states
    adj = sp.coo_matrix(
        (np.ones(len(chain.src)), (chain.src, chain.dst)), shape=(n, n)
    ).tocsr()
    n_comp, labels = csgraph.connected_components(adj, directed=True, connection="strong")
    return n_comp, labels


def exact_stationary(chain: FiniteChain, solver: str = "auto") -> StationaryTable:
    """Solve mu Q = 0, sum(mu) = 1 for the unique stationary distribution.

    Requires irreducibility (single strongly connected class).  Grids up to
    20,000 states use a dense LU solve with a normalization row; larger grids
    use power iteration on the uniformized kernel.  The residual
    ``max |mu Q|`` is checked against 1e-12 times the largest rate and stored
    in the metadata.
    """
    n_comp, labels = _communicating_classes(chain)
    if n_comp > 1:
        sizes = np.bincount(labels)
        raise ReducibleChainError(
            f"chain is reducible: {n_comp} communicating classes with sizes "
            f"{sorted(sizes.tolist(), reverse=True)}",
            classes=[np.flatnonzero(labels == c).tolist() for c in range(n_comp)],
        )
    n = chain.num_states
    if solver == "auto":
        solver = "lu" if n <= DENSE_SOLVER_LIMIT else "power"

    if solver == "lu":
        A = chain.generator.toarray().T
        A[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        mu = np.linalg.solve(A, b)
    elif solver == "power":
        mu = _power_stationary(chain)
    else:
        raise ValueError(f"unknown solver '{solver}'")

    mu = np.maximum(mu, 0.0)
    mu /= mu.sum()
    residual = float(np.max(np.abs(mu @ chain.generator)))
    bound = 1e-12 * chain.max_rate()
    if residual > bound:
        raise ValueError(f"stationary residual {residual:.3g} exceeds bound {bound:.3g}")
    return StationaryTable(
        grid=chain.grid,
        probabilities=mu,
        provenance="exact",
        metadata={"solver": solver, "residual": residual},
    )


def _power_stationary(chain: FiniteChain, max_iters: int = 2_000_000) -> np.ndarray:
    n = chain.num_states
    lam = 1.01 * chain.max_rate()
    kernel_t = (sp.eye(n, format="csr") + chain.generator.T.tocsr() / lam).tocsr()
    mu = np.full(n, 1.0 / n)
    target = 1e-12 * chain.max_rate()
    check_every = 64
    for it in range(max_iters):
        mu = kernel_t @ mu
        mu /= mu.sum()
        if (it + 1) % check_every == 0:
            residual = float(np.max(np.abs(mu @ chain.generator)))
            if residual <= target:
                return mu
    residual = float(np.max(np.abs(mu @ chain.generator)))
    if residual <= target:
        return mu
    raise ValueError(
        f"power iteration did not reach residual {target:.3g} in {max_iters} steps "
        f"(got {residual:.3g})"
    )


@dataclass(frozen=True, eq=False)
class PathResult:
    """One realized path of the jump process.

    ``times[k]`` is the k-th event time (``times[0] = 0``) and ``counts[k]``
    the flattened per-population agent counts holding from ``times[k]`` until
    the next event.  The path is right-continuous and ends at ``horizon``.
    """

    times: np.ndarray
    counts: np.ndarray
    horizon: float
    seed: int
    strategy_counts: tuple[int, ...]
    resolutions: tuple[int, ...]
    occupancy: StationaryTable | None = None

    def fractions(self) -> np.ndarray:
        scale = np.concatenate(
            [np.full(n, r, dtype=float) for n, r in zip(self.strategy_counts, self.resolutions)]
        )
        return self.counts / scale

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,state_counts\n")
        offsets = np.concatenate(([0], np.cumsum(self.strategy_counts)))
        for t, row in zip(self.times, self.counts):
            parts = "|".join(
                " ".join(str(int(v)) for v in row[offsets[p]:offsets[p + 1]])
                for p in range(len(self.strategy_counts))
            )
            buf.write(f"{t:.17g},{parts}\n")
        return buf.getvalue()


def _normalize_x0(x0, strategy_counts, resolutions) -> list[np.ndarray]:
    if isinstance(x0, SocialState):
        counts = x0.counts(resolutions)
    else:
        counts = tuple(tuple(int(v) for v in part) for part in x0)
    parts = [np.asarray(part, dtype=np.int64) for part in counts]
    for p, (part, n) in enumerate(zip(parts, strategy_counts, strict=True)):
        if part.shape != (n,):
            raise ValueError(f"population {p}: initial counts shape {part.shape} != ({n},)")
        if np.any(part < 0):
            raise ValueError(f"population {p}: negative initial counts")
    return parts


def simulate_path(
    model: "FiniteChain | tuple",
    x0,
    horizon: float,
    seed: int,
    burn_in: float = 0.0,
    collect_occupancy: bool | None = None,
) -> PathResult:
    """Gillespie realization of the revision process.

    ``model`` is either a prebuilt :class:`FiniteChain` or an on-the-fly
    ``(game, protocol, resolution)`` triple for grids too large to enumerate.
    Holding times are exponential in the total exit rate and the next state
    is chosen proportionally to the rates; a fixed seed reproduces the path
    exactly.  Occupancy is the time-weighted state distribution over
    ``(burn_in, horizon]``, normalized to one.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if not 0 <= burn_in < horizon:
        raise ValueError(f"need 0 <= burn_in < horizon, got burn_in={burn_in}")
    if isinstance(model, FiniteChain):
        return _simulate_chain(model, x0, horizon, seed, burn_in, collect_occupancy)
    game, protocol, resolution = model
    return _simulate_on_the_fly(
        game, protocol, resolution, x0, horizon, seed, burn_in, collect_occupancy
    )


def _simulate_chain(chain, x0, horizon, seed, burn_in, collect_occupancy):
    if collect_occupancy is None:
        collect_occupancy = True
    grid = chain.grid
    parts = _normalize_x0(x0, grid.strategy_counts, grid.resolutions)
    current = grid.index(tuple(tuple(int(v) for v in p) for p in parts))

    order = np.argsort(chain.src, kind="stable")
    src_sorted = chain.src[order]
    dst_sorted = chain.dst[order]
    rate_sorted = chain.rate[order]
    row_ptr = np.searchsorted(src_sorted, np.arange(len(grid) + 1))

    rng = np.random.default_rng(seed)
    times = [0.0]
    visited = [current]
    residence = np.zeros(len(grid)) if collect_occupancy else None
    t = 0.0
    while True:
        lo, hi = row_ptr[current], row_ptr[current + 1]
        rates = rate_sorted[lo:hi]
        total = float(rates.sum())
        if total <= 0.0:
            dwell = horizon - t
            nxt = current
            t_next = horizon
        else:
            dwell = rng.exponential(1.0 / total)
            t_next = t + dwell
        if t_next >= horizon:
            if residence is not None:
                residence[current] += horizon - max(t, burn_in) if horizon > burn_in else 0.0
            break
        if residence is not None and t_next > burn_in:
            residence[current] += t_next - max(t, burn_in)
        cum = np.cumsum(rates)
        pick = int(np.searchsorted(cum, rng.random() * total, side="right"))
        current = int(dst_sorted[lo + pick])
        t = t_next
        times.append(t)
        visited.append(current)

    counts = np.array(
        [np.fromiter((v for part in grid.state(s) for v in part), dtype=np.int64)
         for s in visited]
    )
    occupancy = None
    if residence is not None:
        weights = residence / (horizon - burn_in)
        occupancy = StationaryTable(
            grid=grid,
            probabilities=weights,
            provenance="empirical",
            metadata={"seed": seed, "horizon": horizon, "burn_in": burn_in},
        )
    return PathResult(
        times=np.asarray(times),
        counts=counts,
        horizon=horizon,
        seed=seed,
        strategy_counts=grid.strategy_counts,
        resolutions=grid.resolutions,
        occupancy=occupancy,
    )


def _simulate_on_the_fly(game, protocol, resolution, x0, horizon, seed, burn_in,
                         collect_occupancy):
    protocols = protocol_tuple(protocol, game)
    if isinstance(resolution, int):
        resolution = (resolution,) * game.num_populations
    resolutions = tuple(int(r) for r in resolution)
    parts = _normalize_x0(x0, game.strategy_counts, resolutions)

    # fixed move layout: per population, all ordered off-diagonal pairs
    move_pop: list[int] = []
    move_from: list[int] = []
    move_to: list[int] = []
    flat_idx = []
    for p, n in enumerate(game.strategy_counts):
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        move_pop.extend(p for _ in pairs)
        move_from.extend(i for i, _ in pairs)
        move_to.extend(j for _, j in pairs)
        flat_idx.append(np.array([i * n + j for i, j in pairs]))

    rng = np.random.default_rng(seed)
    t = 0.0
    times = [0.0]
    rows = [np.concatenate(parts).copy()]
    residence: dict[tuple, float] = {} if collect_occupancy else None
    first_step = True

    while True:
        x_parts = tuple(p / r for p, r in zip(parts, resolutions))
        state = SocialState._unchecked(x_parts)
        if first_step:
            payoffs = game.payoff_at(state)
            weight_blocks = [
                (parts[p][:, None] * proto.rates(pi, x_parts[p])).ravel()[flat_idx[p]]
                for p, (proto, pi) in enumerate(zip(protocols, payoffs))
            ]
            first_step = False
        else:
            payoffs = game.payoff(state)
            if isinstance(payoffs, np.ndarray):
                payoffs = (payoffs,)
            weight_blocks = [
                (parts[p][:, None] * proto.rate_fn(pi, x_parts[p])).ravel()[flat_idx[p]]
                for p, (proto, pi) in enumerate(zip(protocols, payoffs))
            ]
        weights = np.concatenate(weight_blocks)
        total = float(weights.sum())
        if not math.isfinite(total) or np.any(weights < 0):
            # re-evaluate through the validating path for a precise error
            state = SocialState(parts=x_parts)
            for proto, pi, x in zip(protocols, game.payoff_at(state), state.parts):
                proto.rates(pi, x)
            raise ProtocolError("protocol produced invalid rates along the path")
        if total <= 0.0:
            t_next = horizon
        else:
            t_next = t + rng.exponential(1.0 / total)
        if t_next >= horizon:
            if residence is not None and horizon > burn_in:
                key = tuple(np.concatenate(parts).tolist())
                residence[key] = residence.get(key, 0.0) + horizon - max(t, burn_in)
            break
        if residence is not None and t_next > burn_in:
            key = tuple(np.concatenate(parts).tolist())
            residence[key] = residence.get(key, 0.0) + t_next - max(t, burn_in)
        cum = np.cumsum(weights)
        pick = int(np.searchsorted(cum, rng.random() * total, side="right"))
        parts[move_pop[pick]][move_from[pick]] -= 1
        parts[move_pop[pick]][move_to[pick]] += 1
        t = t_next
        times.append(t)
        rows.append(np.concatenate(parts).copy())

    occupancy = None
    if residence is not None:
        grid = StateGrid(game.strategy_counts,
                         [int(p.sum()) for p in parts], resolutions)
        offsets = np.concatenate(([0], np.cumsum(game.strategy_counts)))
        probs = np.zeros(len(grid))
        for key, dwell in residence.items():
            split = tuple(tuple(key[offsets[p]:offsets[p + 1]])
                          for p in range(game.num_populations))
            probs[grid.index(split)] = dwell / (horizon - burn_in)
        occupancy = StationaryTable(
            grid=grid, probabilities=probs, provenance="empirical",
            metadata={"seed": seed, "horizon": horizon, "burn_in": burn_in},
        )
    return PathResult(
        times=np.asarray(times),
        counts=np.asarray(rows, dtype=np.int64),
        horizon=horizon,
        seed=seed,
        strategy_counts=game.strategy_counts,
        resolutions=resolutions,
        occupancy=occupancy,
    )


@dataclass(frozen=True)
class DetailedBalanceReport:
    """Largest probability-flow imbalance over all transition pairs."""

    max_imbalance: float
    worst_edge: tuple[str, str]


def check_detailed_balance(chain: FiniteChain, stationary: StationaryTable) -> DetailedBalanceReport:
    """Max over edges of |mu_x q_xy - mu_y q_yx|, normalized by the largest edge flow."""
    if stationary.provenance != "exact":
        raise ValueError(f"detailed balance needs an exact table, got '{stationary.provenance}'")
    if stationary.grid != chain.grid:
        raise ValueError("stationary table grid does not match the chain grid")
    mu = stationary.probabilities
    rate_of = {(int(s), int(d)): float(r) for s, d, r in zip(chain.src, chain.dst, chain.rate)}
    max_flow = 0.0
    worst = (0, 0)
    max_imbalance = 0.0
    for (s, d), q in rate_of.items():
        fwd = mu[s] * q
        max_flow = max(max_flow, fwd)
        if s > d and (d, s) in rate_of:
            continue  # handled from the other direction
        back = mu[d] * rate_of.get((d, s), 0.0)
        gap = abs(fwd - back)
        if gap > max_imbalance:
            max_imbalance = gap
            worst = (s, d)
    if max_flow > 0:
        max_imbalance /= max_flow
    return DetailedBalanceReport(
        max_imbalance=max_imbalance,
        worst_edge=(chain.grid.format_state(worst[0]), chain.grid.format_state(worst[1])),
    )


def deviation_vs_ode(path: PathResult, trajectory: Trajectory) -> float:
    """Exact sup-norm distance between a path and an ODE trajectory.

    The path is piecewise constant and the trajectory piecewise linear, so
    the supremum over each merged segment is attained at its endpoints.
    """
    if path.strategy_counts != trajectory.strategy_counts:
        raise ValueError("path and trajectory have different strategy layouts")
    t_end = float(trajectory.times[-1])
    if abs(path.horizon - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"horizon mismatch: path ends at {path.horizon}, trajectory at {t_end}")
    merged = np.union1d(path.times, trajectory.times)
    merged = merged[merged <= t_end + 1e-15]
    frac = path.fractions()
    # piecewise-constant path values at merged times (right-continuous)
    idx = np.searchsorted(path.times, merged, side="right") - 1
    path_vals = frac[np.clip(idx, 0, len(frac) - 1)]
    traj_vals = np.column_stack([
        np.interp(merged, trajectory.times, trajectory.states[:, c])
        for c in range(trajectory.states.shape[1])
    ])
    sup = float(np.max(np.abs(path_vals - traj_vals)))
    # each constant segment also meets the trajectory at the next merged time
    if len(merged) > 1:
        sup = max(sup, float(np.max(np.abs(path_vals[:-1] - traj_vals[1:]))))
    return sup
