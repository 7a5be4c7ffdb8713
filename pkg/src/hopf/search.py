"""Strategy enumeration over small shapes, benchmark environments, and the
advantage search comparing the best fixed-order strategy against the best
general process-function strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .core import (
    AxisMismatch,
    BudgetExceeded,
    DecPomdp,
    DiscountSpec,
    DomainError,
    FiniteSet,
    InitialDistribution,
    InvariantViolation,
    NoStrategyError,
    NotObservationIndependent,
    PartySpace,
    PreconditionError,
    ProcessFunction1,
    ProcessFunctionN,
    TableFunction,
    as_discount,
    pack_index,
    unpack_index,
)
from .dynamics import discounted_reward_truncated, performance
from .fastscan import (
    CHUNK_ROWS,
    CandidateSpace,
    build_pf,
    candidate_digits,
    iter_valid_indices,
    sample_digits,
    valid_mask,
)
from .verify import DEFAULT_BUDGET, CombOrder, is_causally_ordered


@dataclass(frozen=True)
class StrategyShape:
    """Size profile of a strategy space: shared memory size, per-party
    (action, observation) sizes, and the evaluation horizon (None means
    exact infinite-horizon discounted value)."""

    memory: int
    parties: tuple[tuple[int, int], ...]
    horizon: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "parties", tuple((int(a), int(o)) for a, o in self.parties)
        )
        if self.memory < 1:
            raise InvariantViolation(f"memory size must be >= 1, got {self.memory}")
        if not self.parties:
            raise InvariantViolation("need at least one party")
        for a, o in self.parties:
            if a < 1 or o < 1:
                raise InvariantViolation(f"party sizes must be >= 1, got ({a}, {o})")
        if self.horizon is not None and self.horizon < 1:
            raise InvariantViolation(f"horizon must be >= 1, got {self.horizon}")

    @property
    def n(self) -> int:
        return len(self.parties)

    def space(self) -> CandidateSpace:
        return CandidateSpace(
            past=self.memory,
            future=self.memory,
            act_sizes=tuple(a for a, _o in self.parties),
            obs_sizes=tuple(o for _a, o in self.parties),
        )


@dataclass(frozen=True)
class SearchCounts:
    """Candidate bookkeeping: tables examined, tables passing the unique
    fixed-point screen, and valid tables admitting a fixed causal order."""

    total: int
    valid: int
    ordered: int

    def __post_init__(self) -> None:
        if not 0 <= self.ordered <= self.valid <= self.total:
            raise InvariantViolation(
                f"counts must nest: ordered {self.ordered} <= valid {self.valid}"
                f" <= total {self.total}"
            )


@dataclass(frozen=True)
class ScoredStrategy:
    """A strategy with its objective value; ``order`` is populated for
    winners of the order-restricted search."""

    strategy: ProcessFunctionN
    value: float
    order: CombOrder | None = None


@dataclass(frozen=True)
class SearchReport:
    """Outcome of an advantage search over one environment and shape."""

    shape: StrategyShape
    environment_id: str
    best_general: ScoredStrategy
    best_ordered: ScoredStrategy
    counts: SearchCounts
    advantage: float
    gamma: float
    seed: int
    budget: int
    mode: str

    def __post_init__(self) -> None:
        if self.best_ordered.value > self.best_general.value:
            raise InvariantViolation(
                "ordered strategies are a subset; their best value cannot exceed"
                " the general best"
            )
        if self.mode not in ("exhaustive", "sample"):
            raise InvariantViolation(f"unknown search mode {self.mode!r}")


def enumerate_pf_1(
    shape: StrategyShape, budget: int = DEFAULT_BUDGET
) -> Iterator[ProcessFunction1]:
    """All valid one-input process functions of the given shape, generated
    directly as (future map, act map) pairs with the future map in the outer
    lexicographic position.

    The unique fixed-point condition holds for exactly these pairs, so no
    filtering happens; the count is |M|**(|M||O|) * |A|**|M|.
    """
    from .verify import recompose

    if shape.n != 1:
        raise AxisMismatch(f"one-input enumeration over a {shape.n}-party shape")
    m_size = shape.memory
    a_size, o_size = shape.parties[0]
    count = m_size ** (m_size * o_size) * a_size**m_size
    if count > budget:
        raise BudgetExceeded(f"{count} strategies exceed budget {budget}")
    mem, act, obs = FiniteSet(m_size), FiniteSet(a_size), FiniteSet(o_size)
    for future_entries in product(range(m_size), repeat=m_size * o_size):
        w_future = TableFunction((mem, obs), (mem,), tuple((v,) for v in future_entries))
        for act_entries in product(range(a_size), repeat=m_size):
            w_act = TableFunction((mem,), (act,), tuple((v,) for v in act_entries))
            yield recompose(w_future, w_act)


def enumerate_pf_n(
    shape: StrategyShape,
    budget: int = DEFAULT_BUDGET,
    mode: str = "auto",
    seed: int = 0,
    samples: int = 100_000,
) -> Iterator[ProcessFunctionN]:
    """Valid process functions of the given shape.

    Exhaustive when the candidate-table count fits the budget (ascending
    lexicographic order); otherwise tables are drawn uniformly from a seeded
    generator and screened, with ``samples`` counting draws, not yields.
    """
    space = shape.space()
    if mode not in ("auto", "exhaustive", "sample"):
        raise PreconditionError(f"unknown enumeration mode {mode!r}")
    if mode == "exhaustive" and space.total > budget:
        raise BudgetExceeded(f"{space.total} candidate tables exceed budget {budget}")
    exhaustive = mode == "exhaustive" or (mode == "auto" and space.total <= budget)
    if exhaustive:
        for index in iter_valid_indices(space):
            yield build_pf(space, candidate_digits(space, [index])[0])
        return
    rng = np.random.default_rng(seed)
    remaining = samples
    while remaining > 0:
        batch = min(remaining, CHUNK_ROWS)
        digits = sample_digits(space, rng, batch)
        for row in np.flatnonzero(valid_mask(space, digits)):
            yield build_pf(space, digits[row])
        remaining -= batch


def wrap_single_party(env) -> DecPomdp:
    """View a single-party environment as a one-party decentralized one;
    the factored observation map is the observation table itself."""
    from .core import DetPomdp

    if not isinstance(env, DetPomdp):
        raise AxisMismatch(f"expected a single-party environment, got {type(env).__name__}")
    party = PartySpace(
        states=env.states, actions=env.actions, observations=env.observations
    )
    return DecPomdp(
        parties=(party,),
        transition=env.transition,
        observation=env.observation,
        rewards=env.rewards,
        factored_obs=(env.observation,),
    )


def gyni_env(n: int) -> DecPomdp:
    """Neighbor-guessing benchmark on n one-bit parties.

    Each party observes its own state bit regardless of anyone's action;
    the state steps through all bit assignments in a fixed cycle; reward is
    1 exactly when every party's action equals the next party's bit
    (cyclically), else 0.
    """
    if not 2 <= n <= 4:
        raise PreconditionError(f"party count must be between 2 and 4, got {n}")
    bit = FiniteSet(2)
    parties = tuple(
        PartySpace(states=bit, actions=bit, observations=bit) for _ in range(n)
    )
    size = 2**n
    states = FiniteSet(size)
    axis = FiniteSet(size)
    bits = [unpack_index((2,) * n, s) for s in range(size)]
    transition = TableFunction(
        (states, axis),
        (states,),
        tuple(((s + 1) % size,) for s in range(size) for _a in range(size)),
    )
    observation = TableFunction(
        (states, axis),
        (axis,),
        tuple((s,) for s in range(size) for _a in range(size)),
    )
    rewards = tuple(
        1.0
        if all(
            unpack_index((2,) * n, a)[i] == bits[s][(i + 1) % n] for i in range(n)
        )
        else 0.0
        for s in range(size)
        for a in range(size)
    )
    factored = tuple(
        TableFunction(
            (states, bit),
            (bit,),
            tuple((bits[s][i],) for s in range(size) for _a in range(2)),
        )
        for i in range(n)
    )
    return DecPomdp(
        parties=parties,
        transition=transition,
        observation=observation,
        rewards=rewards,
        factored_obs=factored,
    )


def _check_compatible(env: DecPomdp, shape: StrategyShape) -> None:
    if env.factored_obs is None:
        raise NotObservationIndependent(
            "search requires an environment with certified factored observations"
        )
    if shape.n != len(env.parties):
        raise AxisMismatch(
            f"{shape.n}-party shape against {len(env.parties)}-party environment"
        )
    for i, ((a, o), party) in enumerate(zip(shape.parties, env.parties)):
        if a != party.actions.size or o != party.observations.size:
            raise AxisMismatch(
                f"party {i} shape ({a}, {o}) does not match environment sizes"
                f" ({party.actions.size}, {party.observations.size})"
            )


def _evaluate(w, env, shape, m0, mu, gamma):
    if shape.horizon is None:
        return performance(w, env, m0, mu, gamma)
    total = 0.0
    for s, p in enumerate(mu.probs):
        if p:
            total += p * discounted_reward_truncated(w, env, m0, s, gamma, shape.horizon)[0]
    return total


@dataclass
class _Best:
    value: float = -math.inf
    entries: tuple | None = None
    strategy: ProcessFunctionN | None = None
    order: CombOrder | None = None

    def offer(self, w: ProcessFunctionN, value: float, order: CombOrder | None) -> None:
        entries = w.table.entries
        if value > self.value or (
            value == self.value and self.entries is not None and entries < self.entries
        ):
            self.value, self.entries, self.strategy, self.order = value, entries, w, order

    def scored(self, with_order: bool) -> ScoredStrategy:
        if self.strategy is None:
            raise NoStrategyError("the strategy stream was empty")
        return ScoredStrategy(
            strategy=self.strategy,
            value=self.value,
            order=self.order if with_order else None,
        )


def _shard_worker(args):
    """Best-so-far scan of one contiguous index range; runs in a worker
    process and returns picklable summaries."""
    env, shape, gamma, m0, mu, lo, hi = args
    space = shape.space()
    general = _Best()
    ordered = _Best()
    n_valid = 0
    n_ordered = 0
    for index in iter_valid_indices(space, lo, hi):
        w = build_pf(space, candidate_digits(space, [index])[0])
        n_valid += 1
        value = _evaluate(w, env, shape, m0, mu, gamma)
        general.offer(w, value, None)
        sigma = is_causally_ordered(w)
        if sigma is not None:
            n_ordered += 1
            ordered.offer(w, value, sigma)
    pack = lambda b: None if b.strategy is None else (b.value, b.entries, b.order)
    return n_valid, n_ordered, pack(general), pack(ordered)


def _merge_best(best: _Best, packed, space: CandidateSpace) -> None:
    if packed is None:
        return
    value, entries, order = packed
    rows = [pack_index((space.future, *space.act_sizes), entry) for entry in entries]
    best.offer(build_pf(space, np.asarray(rows, dtype=np.int64)), value, order)


def _search_pass(env, shape, gamma, budget, seed, samples, mu, m0, threads=1):
    _check_compatible(env, shape)
    if mu is None:
        mu = InitialDistribution.uniform(env.states.size)
    if len(mu.probs) != env.states.size:
        raise AxisMismatch("initial distribution must cover the environment states")
    if not 0 <= m0 < shape.memory:
        raise DomainError(f"initial memory {m0} out of range for size {shape.memory}")
    space = shape.space()
    exhaustive = space.total <= budget
    general = _Best()
    ordered = _Best()
    n_valid = 0
    n_ordered = 0
    if exhaustive and threads > 1:
        # shard by contiguous index ranges; the value-then-lexicographic
        # merge makes the outcome independent of the shard layout
        import multiprocessing

        width = (space.total + threads - 1) // threads
        shards = [
            (env, shape, gamma, m0, mu, lo, min(lo + width, space.total))
            for lo in range(0, space.total, width)
        ]
        with multiprocessing.Pool(threads) as pool:
            parts = pool.map(_shard_worker, shards)
        for part_valid, part_ordered, part_general, part_best_ordered in parts:
            n_valid += part_valid
            n_ordered += part_ordered
            _merge_best(general, part_general, space)
            _merge_best(ordered, part_best_ordered, space)
    else:
        for w in enumerate_pf_n(shape, budget=budget, seed=seed, samples=samples):
            n_valid += 1
            value = _evaluate(w, env, shape, m0, mu, gamma)
            general.offer(w, value, None)
            sigma = is_causally_ordered(w)
            if sigma is not None:
                n_ordered += 1
                ordered.offer(w, value, sigma)
    total = space.total if exhaustive else samples
    counts = SearchCounts(total=total, valid=n_valid, ordered=n_ordered)
    return general, ordered, counts, ("exhaustive" if exhaustive else "sample")


def best_strategy(
    env: DecPomdp,
    shape: StrategyShape,
    gamma: DiscountSpec | float,
    mode: str = "general",
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    samples: int = 100_000,
    mu: InitialDistribution | None = None,
    m0: int = 0,
    threads: int = 1,
) -> ScoredStrategy:
    """Maximizer of the objective over the enumerated strategy stream,
    optionally restricted to strategies admitting a fixed causal order.

    Ties go to the lexicographically least table.  The objective is the
    initial-distribution average of the exact discounted value, or of the
    truncated sum when the shape fixes a horizon.
    """
    if mode not in ("general", "ordered"):
        raise PreconditionError(f"unknown search mode {mode!r}")
    general, ordered, _counts, _m = _search_pass(
        env, shape, as_discount(gamma), budget, seed, samples, mu, m0, threads
    )
    best = ordered if mode == "ordered" else general
    return best.scored(with_order=mode == "ordered")


def advantage_search(
    env: DecPomdp,
    shape: StrategyShape,
    gamma: DiscountSpec | float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    samples: int = 100_000,
    mu: InitialDistribution | None = None,
    m0: int = 0,
    environment_id: str = "",
    threads: int = 1,
) -> SearchReport:
    """Single-pass comparison of the best general strategy against the best
    fixed-order strategy; advantage is their value difference (>= 0)."""
    gamma = as_discount(gamma)
    general, ordered, counts, mode = _search_pass(
        env, shape, gamma, budget, seed, samples, mu, m0, threads
    )
    best_general = general.scored(with_order=False)
    best_ordered = ordered.scored(with_order=True)
    return SearchReport(
        shape=shape,
        environment_id=environment_id,
        best_general=best_general,
        best_ordered=best_ordered,
        counts=counts,
        advantage=best_general.value - best_ordered.value,
        gamma=gamma.gamma,
        seed=seed,
        budget=budget,
        mode=mode,
    )


def find_unordered_witness(
    shape: StrategyShape,
    budget: int = DEFAULT_BUDGET,
    chunk: int = CHUNK_ROWS,
) -> tuple[int, ProcessFunctionN] | None:
    """First (lexicographically least) valid strategy of the given shape
    admitting no fixed causal order, with its candidate index; None when the
    whole space is ordered."""
    from .fastscan import ordered_mask

    space = shape.space()
    if space.total > budget:
        raise BudgetExceeded(f"{space.total} candidate tables exceed budget {budget}")
    lo = 0
    total = space.total
    while lo < total:
        hi = min(lo + chunk, total)
        digits = candidate_digits(space, np.arange(lo, hi, dtype=np.int64))
        ok = valid_mask(space, digits)
        survivors = np.flatnonzero(ok)
        if survivors.size:
            om = ordered_mask(space, digits[survivors])
            hits = survivors[~om]
            if hits.size:
                offset = int(hits[0])
                return lo + offset, build_pf(space, digits[offset])
        lo = hi
    return None
