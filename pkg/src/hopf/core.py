"""Shared domain types for finite deterministic agents, environments, and
higher-order process functions.

Everything here is index-based: a finite set is a size (labels are
presentation only), and every map between products of finite sets is a dense
table of codomain tuples, stored row-major with the last domain axis varying
fastest.  All values are immutable after construction and safe to share
across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from typing import Callable, Iterable, Sequence


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class HopfError(Exception):
    """Base class for all errors raised by this package."""


class InvariantViolation(HopfError, ValueError):
    """A value failed its construction-time invariants."""


class DomainError(HopfError, ValueError):
    """An index fell outside the domain axes of a table."""


class AxisMismatch(HopfError, TypeError):
    """Two values were combined whose finite-set axes do not agree."""


class PreconditionError(HopfError, ValueError):
    """An operation was called on a value in the wrong state."""


class BudgetExceeded(HopfError, RuntimeError):
    """An exhaustive check or enumeration would exceed its budget."""


class NotObservationIndependent(HopfError, ValueError):
    """A decentralized environment lacks the factored observation form."""


class ConsistencyViolation(HopfError, RuntimeError):
    """A fixed-point system had zero or multiple solutions at runtime.

    This fires only when a strategy marked valid (or an environment marked
    observation independent) turns out not to be; it signals corrupted
    inputs, not user error.
    """


class NoStrategyError(HopfError, RuntimeError):
    """A strategy search produced an empty candidate stream."""


class DocumentError(HopfError, ValueError):
    """A document failed to parse or violated its schema."""


# ---------------------------------------------------------------------------
# Finite sets and index packing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSet:
    """An indexed finite set {0, .., size-1} with optional display labels."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.size, int) or self.size < 1:
            raise InvariantViolation(f"finite set size must be >= 1, got {self.size!r}")
        if self.labels is not None:
            labels = tuple(self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != self.size:
                raise InvariantViolation(
                    f"{len(labels)} labels for a set of size {self.size}"
                )
            if len(set(labels)) != len(labels):
                raise InvariantViolation("labels must be pairwise distinct")

    @property
    def indices(self) -> range:
        return range(self.size)

    def __len__(self) -> int:
        return self.size


def pack_index(sizes: Sequence[int], values: Sequence[int]) -> int:
    """Row-major offset of a tuple, last axis fastest."""
    if len(values) != len(sizes):
        raise AxisMismatch(f"{len(values)} values for {len(sizes)} axes")
    offset = 0
    for size, value in zip(sizes, values):
        if not 0 <= value < size:
            raise DomainError(f"coordinate {value} outside range({size})")
        offset = offset * size + value
    return offset


def unpack_index(sizes: Sequence[int], offset: int) -> tuple[int, ...]:
    """Inverse of :func:`pack_index`."""
    if not 0 <= offset < math.prod(sizes):
        raise DomainError(f"offset {offset} outside range({math.prod(sizes)})")
    out = [0] * len(sizes)
    for k in range(len(sizes) - 1, -1, -1):
        offset, out[k] = divmod(offset, sizes[k])
    return tuple(out)


def product_set(sets: Iterable[FiniteSet]) -> FiniteSet:
    """The product of finite sets, indexed row-major (last factor fastest)."""
    factors = tuple(sets)
    size = math.prod(s.size for s in factors)
    labels: tuple[str, ...] | None = None
    if factors and all(s.labels is not None for s in factors):
        joined = tuple(
            ",".join(combo) for combo in product(*(s.labels for s in factors))  # type: ignore[misc]
        )
        if len(set(joined)) == len(joined):
            labels = joined
    return FiniteSet(size, labels)


# ---------------------------------------------------------------------------
# Dense table functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableFunction:
    """A total function between products of finite sets, as a dense table.

    ``entries[offset]`` is the codomain tuple at the row-major offset of the
    input (last domain axis fastest).  Entries are validated against the
    codomain axes at construction.
    """

    domain: tuple[FiniteSet, ...]
    codomain: tuple[FiniteSet, ...]
    entries: tuple[tuple[int, ...], ...]
    _strides: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "codomain", tuple(self.codomain))
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))
        n_rows = math.prod(s.size for s in self.domain)
        if len(self.entries) != n_rows:
            raise InvariantViolation(
                f"table has {len(self.entries)} rows, domain requires {n_rows}"
            )
        sizes = tuple(s.size for s in self.codomain)
        for row, entry in enumerate(self.entries):
            if len(entry) != len(sizes):
                raise InvariantViolation(
                    f"row {row} has {len(entry)} components, codomain has {len(sizes)}"
                )
            for value, size in zip(entry, sizes):
                if not 0 <= value < size:
                    raise InvariantViolation(
                        f"row {row} entry {entry} exceeds codomain sizes {sizes}"
                    )
        strides: list[int] = [1] * len(self.domain)
        for k in range(len(self.domain) - 2, -1, -1):
            strides[k] = strides[k + 1] * self.domain[k + 1].size
        object.__setattr__(self, "_strides", tuple(strides))

    @property
    def n_rows(self) -> int:
        return len(self.entries)

    def offset_of(self, inputs: Sequence[int]) -> int:
        if len(inputs) != len(self.domain):
            raise DomainError(
                f"expected {len(self.domain)} inputs, got {len(inputs)}"
            )
        offset = 0
        for value, axis, stride in zip(inputs, self.domain, self._strides):
            if not 0 <= value < axis.size:
                raise DomainError(
                    f"input {tuple(inputs)} outside domain axis of size {axis.size}"
                )
            offset += value * stride
        return offset

    def __call__(self, *inputs: int) -> tuple[int, ...]:
        return self.entries[self.offset_of(inputs)]


def eval_table(fn: TableFunction, inputs: Sequence[int]) -> tuple[int, ...]:
    """Evaluate a table function at an input tuple.

    Raises :class:`DomainError` if the input does not lie within the domain
    axes.
    """
    return fn.entries[fn.offset_of(inputs)]


def table_from_callable(
    domain: Sequence[FiniteSet],
    codomain: Sequence[FiniteSet],
    fn: Callable[..., tuple[int, ...] | int],
) -> TableFunction:
    """Tabulate ``fn`` over the full domain, row-major last-axis-fastest."""
    entries = []
    for args in product(*(s.indices for s in domain)):
        out = fn(*args)
        entries.append((out,) if isinstance(out, int) else tuple(out))
    return TableFunction(tuple(domain), tuple(codomain), tuple(entries))


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetPomdp:
    """A deterministic partially observable environment.

    ``transition`` and ``observation`` are tables on states x actions; the
    reward table is a flat tuple of finite floats in the same row-major
    (state, action) order, action fastest.
    """

    states: FiniteSet
    actions: FiniteSet
    observations: FiniteSet
    transition: TableFunction
    observation: TableFunction
    rewards: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        expect = (self.states, self.actions)
        if self.transition.domain != expect or self.transition.codomain != (self.states,):
            raise AxisMismatch("transition table must map states x actions -> states")
        if self.observation.domain != expect or self.observation.codomain != (
            self.observations,
        ):
            raise AxisMismatch(
                "observation table must map states x actions -> observations"
            )
        n = self.states.size * self.actions.size
        if len(self.rewards) != n:
            raise InvariantViolation(f"reward table has {len(self.rewards)} entries, expected {n}")
        for r in self.rewards:
            if not math.isfinite(r):
                raise InvariantViolation(f"reward {r!r} is not finite")

    def reward(self, s: int, a: int) -> float:
        return self.rewards[s * self.actions.size + a]

    @property
    def reward_bound(self) -> float:
        """Largest absolute reward; used for truncation error bounds."""
        return max(abs(r) for r in self.rewards)


@dataclass(frozen=True)
class PartySpace:
    """Per-party state, action, and observation factors of a decentralized
    environment."""

    states: FiniteSet
    actions: FiniteSet
    observations: FiniteSet


@dataclass(frozen=True)
class DecPomdp:
    """An n-party decentralized environment on product state, action, and
    observation spaces.

    ``factored_obs``, when present, certifies observation independence: party
    i's observation is a function of the global state and its own action
    alone.  The factored tables are checked entrywise against the global
    observation table at construction.
    """

    parties: tuple[PartySpace, ...]
    transition: TableFunction
    observation: TableFunction
    rewards: tuple[float, ...]
    factored_obs: tuple[TableFunction, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "parties", tuple(self.parties))
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        if not self.parties:
            raise InvariantViolation("a decentralized environment needs >= 1 party")
        n_s = math.prod(p.states.size for p in self.parties)
        n_a = math.prod(p.actions.size for p in self.parties)
        n_o = math.prod(p.observations.size for p in self.parties)
        s_ax, a_ax = self.transition.domain
        if (
            len(self.transition.domain) != 2
            or s_ax.size != n_s
            or a_ax.size != n_a
            or self.transition.codomain != (s_ax,)
        ):
            raise AxisMismatch("transition table inconsistent with the party lists")
        if self.observation.domain != (s_ax, a_ax) or (
            self.observation.codomain[0].size != n_o
            or len(self.observation.codomain) != 1
        ):
            raise AxisMismatch("observation table inconsistent with the party lists")
        if len(self.rewards) != n_s * n_a:
            raise InvariantViolation(
                f"reward table has {len(self.rewards)} entries, expected {n_s * n_a}"
            )
        for r in self.rewards:
            if not math.isfinite(r):
                raise InvariantViolation(f"reward {r!r} is not finite")
        if self.factored_obs is not None:
            object.__setattr__(self, "factored_obs", tuple(self.factored_obs))
            self._check_factored()

    def _check_factored(self) -> None:
        tables = self.factored_obs
        assert tables is not None
        if len(tables) != len(self.parties):
            raise InvariantViolation(
                f"{len(tables)} factored observation tables for {len(self.parties)} parties"
            )
        for i, (table, party) in enumerate(zip(tables, self.parties)):
            if (
                len(table.domain) != 2
                or table.domain[0].size != self.states.size
                or table.domain[1].size != party.actions.size
                or len(table.codomain) != 1
                or table.codomain[0].size != party.observations.size
            ):
                raise AxisMismatch(
                    f"factored observation table {i} must map states x own-actions"
                    " -> own-observations"
                )
        a_sizes = self.action_sizes
        o_sizes = self.observation_sizes
        for s in self.states.indices:
            for a in self.actions.indices:
                a_vec = unpack_index(a_sizes, a)
                got = unpack_index(o_sizes, self.observation.entries[s * self.actions.size + a][0])
                want = tuple(
                    tables[i].entries[s * a_sizes[i] + a_vec[i]][0]
                    for i in range(len(self.parties))
                )
                if got != want:
                    raise InvariantViolation(
                        f"factored observations disagree with the global table at"
                        f" state {s}, action {a_vec}: {got} != {want}"
                    )

    @property
    def states(self) -> FiniteSet:
        return self.transition.domain[0]

    @property
    def actions(self) -> FiniteSet:
        return self.transition.domain[1]

    @property
    def observations(self) -> FiniteSet:
        return self.observation.codomain[0]

    @property
    def state_sizes(self) -> tuple[int, ...]:
        return tuple(p.states.size for p in self.parties)

    @property
    def action_sizes(self) -> tuple[int, ...]:
        return tuple(p.actions.size for p in self.parties)

    @property
    def observation_sizes(self) -> tuple[int, ...]:
        return tuple(p.observations.size for p in self.parties)

    def reward(self, s: int, a: int) -> float:
        return self.rewards[s * self.actions.size + a]

    @property
    def reward_bound(self) -> float:
        return max(abs(r) for r in self.rewards)

    def with_factored_obs(self, tables: Sequence[TableFunction]) -> "DecPomdp":
        return replace(self, factored_obs=tuple(tables))


def curry_state(env: DecPomdp, party: int, state: int) -> TableFunction:
    """The state-conditioned local map own-action -> own-observation for one
    party of an observation-independent environment."""
    if env.factored_obs is None:
        raise NotObservationIndependent(
            "environment carries no factored observation tables"
        )
    if not 0 <= party < len(env.parties):
        raise DomainError(f"party index {party} out of range")
    if not 0 <= state < env.states.size:
        raise DomainError(f"state index {state} out of range")
    table = env.factored_obs[party]
    n_a = env.parties[party].actions.size
    rows = tuple(table.entries[state * n_a + a] for a in range(n_a))
    return TableFunction(
        (env.parties[party].actions,), (env.parties[party].observations,), rows
    )


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Agent:
    """A deterministic memory-based agent: a policy memory -> action and a
    memory update on (memory, action, observation)."""

    memory: FiniteSet
    actions: FiniteSet
    observations: FiniteSet
    policy: TableFunction
    update: TableFunction

    def __post_init__(self) -> None:
        if self.policy.domain != (self.memory,) or self.policy.codomain != (self.actions,):
            raise AxisMismatch("policy table must map memory -> actions")
        if self.update.domain != (self.memory, self.actions, self.observations) or (
            self.update.codomain != (self.memory,)
        ):
            raise AxisMismatch(
                "update table must map memory x actions x observations -> memory"
            )


# ---------------------------------------------------------------------------
# Process functions
# ---------------------------------------------------------------------------


class UfpStatus(Enum):
    """Validation status against the unique fixed-point condition."""

    UNCHECKED = "unchecked"
    VALID = "valid"
    INVALID = "invalid"


@dataclass(frozen=True)
class UfpWitness1:
    """Certificate that a one-input candidate violates unique fixed points:
    inserting ``f`` at past value ``p`` yields ``solutions`` (zero, or two or
    more) instead of exactly one."""

    p: int
    f: tuple[int, ...]
    solutions: tuple[int, ...]


@dataclass(frozen=True)
class UfpWitnessN:
    """Multi-party analogue of :class:`UfpWitness1`: one inserted local
    function per party, and the offending observation vectors."""

    p: int
    f: tuple[tuple[int, ...], ...]
    solutions: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ProcessFunction1:
    """A candidate one-input higher-order map ``(past, obs) -> (future, act)``.

    In the agent reading, ``past`` and ``future`` are the memory before and
    after one round, ``act`` is handed to the environment slot and ``obs``
    received back from it.  The candidate is a genuine process function when
    every inserted function ``act -> obs`` admits exactly one consistent
    observation; ``status`` records whether that has been established.
    """

    past: FiniteSet
    obs: FiniteSet
    future: FiniteSet
    act: FiniteSet
    table: TableFunction
    status: UfpStatus = UfpStatus.UNCHECKED
    witness: UfpWitness1 | None = None

    def __post_init__(self) -> None:
        if self.table.domain != (self.past, self.obs) or self.table.codomain != (
            self.future,
            self.act,
        ):
            raise AxisMismatch("table must map past x obs -> future x act")
        if self.status is UfpStatus.INVALID and self.witness is None:
            raise InvariantViolation("invalid status requires a witness")
        if self.status is not UfpStatus.INVALID and self.witness is not None:
            raise InvariantViolation(f"status {self.status.value} must not carry a witness")
        if self.status is UfpStatus.VALID:
            # cheap full re-check: validity is equivalent to the act
            # component being constant in the observation argument
            n_obs = self.obs.size
            for p in self.past.indices:
                base = self.table.entries[p * n_obs][1]
                for o in range(1, n_obs):
                    if self.table.entries[p * n_obs + o][1] != base:
                        raise InvariantViolation(
                            f"marked valid but the act component varies with the"
                            f" observation at past value {p}"
                        )

    def act_of(self, p: int) -> int:
        """The act component, which is constant in the observation for valid
        process functions (read at observation 0)."""
        return self.table.entries[p * self.obs.size][1]

    def future_of(self, p: int, o: int) -> int:
        return self.table.entries[p * self.obs.size + o][0]


@dataclass(frozen=True)
class PartySlot:
    """One party's insertion slot of a multi-input process function: the
    action handed to the party and the observation received back."""

    act: FiniteSet
    obs: FiniteSet


@dataclass(frozen=True)
class ProcessFunctionN:
    """A candidate n-input higher-order map
    ``(past, obs_1, .., obs_n) -> (future, act_1, .., act_n)``.

    Valid instances feed n local functions ``act_i -> obs_i`` simultaneously,
    with exactly one globally consistent observation vector for every choice
    of locals; no causal order among the parties is presumed.
    """

    past: FiniteSet
    future: FiniteSet
    parties: tuple[PartySlot, ...]
    table: TableFunction
    status: UfpStatus = UfpStatus.UNCHECKED
    witness: UfpWitnessN | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "parties", tuple(self.parties))
        if len(self.parties) < 1:
            raise InvariantViolation("a process function needs >= 1 party")
        domain = (self.past, *(slot.obs for slot in self.parties))
        codomain = (self.future, *(slot.act for slot in self.parties))
        if self.table.domain != domain or self.table.codomain != codomain:
            raise AxisMismatch(
                "table must map past x obs_1 x .. x obs_n -> future x act_1 x .. x act_n"
            )
        if self.status is UfpStatus.INVALID and self.witness is None:
            raise InvariantViolation("invalid status requires a witness")
        if self.status is not UfpStatus.INVALID and self.witness is not None:
            raise InvariantViolation(f"status {self.status.value} must not carry a witness")

    @property
    def n(self) -> int:
        return len(self.parties)

    @property
    def obs_sizes(self) -> tuple[int, ...]:
        return tuple(slot.obs.size for slot in self.parties)

    @property
    def act_sizes(self) -> tuple[int, ...]:
        return tuple(slot.act.size for slot in self.parties)


def as_n_input(w: ProcessFunction1) -> ProcessFunctionN:
    """View a one-input process function as the n = 1 case."""
    witness = None
    if w.witness is not None:
        witness = UfpWitnessN(
            p=w.witness.p,
            f=(w.witness.f,),
            solutions=tuple((o,) for o in w.witness.solutions),
        )
    return ProcessFunctionN(
        past=w.past,
        future=w.future,
        parties=(PartySlot(act=w.act, obs=w.obs),),
        table=w.table,
        status=w.status,
        witness=witness,
    )


def as_one_input(w: ProcessFunctionN) -> ProcessFunction1:
    """Collapse an n = 1 multi-input process function to the one-input type."""
    if w.n != 1:
        raise AxisMismatch(f"cannot view a {w.n}-party process function as one-input")
    witness = None
    if w.witness is not None:
        witness = UfpWitness1(
            p=w.witness.p,
            f=w.witness.f[0],
            solutions=tuple(sol[0] for sol in w.witness.solutions),
        )
    return ProcessFunction1(
        past=w.past,
        obs=w.parties[0].obs,
        future=w.future,
        act=w.parties[0].act,
        table=w.table,
        status=w.status,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# Rollout products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """The (memory, state, reward) record of an h-step interaction; memories
    and states have h + 1 entries, rewards h."""

    memories: tuple[int, ...]
    states: tuple[int, ...]
    rewards: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "memories", tuple(self.memories))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        h = len(self.rewards)
        if len(self.memories) != h + 1 or len(self.states) != h + 1:
            raise InvariantViolation(
                f"trajectory with {h} rewards needs {h + 1} memories and states,"
                f" got {len(self.memories)} and {len(self.states)}"
            )

    @property
    def horizon(self) -> int:
        return len(self.rewards)


@dataclass(frozen=True)
class DiscountSpec:
    """A geometric discount factor in [0, 1)."""

    gamma: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", float(self.gamma))
        if not 0.0 <= self.gamma < 1.0:
            raise InvariantViolation(f"discount factor must lie in [0, 1), got {self.gamma}")


def as_discount(gamma: "DiscountSpec | float") -> DiscountSpec:
    """Normalize a bare factor to a validated :class:`DiscountSpec`."""
    return gamma if isinstance(gamma, DiscountSpec) else DiscountSpec(gamma)


@dataclass(frozen=True)
class InitialDistribution:
    """A probability distribution over environment states."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if not self.probs:
            raise InvariantViolation("empty distribution")
        for p in self.probs:
            if not (math.isfinite(p) and p >= 0.0):
                raise InvariantViolation(f"probability {p!r} is not a finite non-negative")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise InvariantViolation(f"probabilities sum to {sum(self.probs)!r}, not 1")

    @classmethod
    def uniform(cls, n: int) -> "InitialDistribution":
        return cls((1.0 / n,) * n)

    @classmethod
    def point(cls, n: int, state: int) -> "InitialDistribution":
        if not 0 <= state < n:
            raise DomainError(f"state {state} out of range for {n} states")
        return cls(tuple(1.0 if s == state else 0.0 for s in range(n)))
