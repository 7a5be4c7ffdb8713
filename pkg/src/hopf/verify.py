"""Deciders for the unique fixed-point condition, the comb (lens)
decomposition, observation independence, and causal orderability.

Verification here is exact or refused: every brute-force check is gated by
an explicit budget of elementary checks and raises instead of truncating.
Invalid verdicts always carry a minimal witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import permutations, product

from .core import (
    AxisMismatch,
    BudgetExceeded,
    DecPomdp,
    InvariantViolation,
    PreconditionError,
    ProcessFunction1,
    ProcessFunctionN,
    TableFunction,
    UfpStatus,
    UfpWitness1,
    UfpWitnessN,
    unpack_index,
)

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True)
class Verdict:
    """Outcome of a unique fixed-point check: valid, or invalid with a
    witness."""

    valid: bool
    witness: UfpWitness1 | UfpWitnessN | None = None

    def __bool__(self) -> bool:
        return self.valid


def check_ufp_1_bruteforce(w: ProcessFunction1, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Decide the unique fixed-point condition by enumerating every inserted
    function act -> obs and every past value, counting solutions of
    o = f(w_act(p, o)).

    Cost is |obs| ** |act| * |past| * |obs| elementary checks; exceeding
    ``budget`` raises :class:`BudgetExceeded`.
    """
    n_obs, n_act, n_past = w.obs.size, w.act.size, w.past.size
    cost = n_obs**n_act * n_past * n_obs
    if cost > budget:
        raise BudgetExceeded(f"{cost} elementary checks exceed budget {budget}")
    entries = w.table.entries
    for f in product(range(n_obs), repeat=n_act):
        for p in range(n_past):
            row = p * n_obs
            solutions = tuple(
                o for o in range(n_obs) if f[entries[row + o][1]] == o
            )
            if len(solutions) != 1:
                return Verdict(False, UfpWitness1(p=p, f=f, solutions=solutions))
    return Verdict(True)


def check_ufp_1_fast(w: ProcessFunction1) -> Verdict:
    """Decide the unique fixed-point condition in O(|past| * |obs|) time: it
    holds exactly when the act component is constant in the observation.

    On failure the witness carries an inserted function with two fixed
    points, built by sending each of the two differing act values back to
    the observation that produced it.
    """
    n_obs = w.obs.size
    entries = w.table.entries
    for p in w.past.indices:
        row = p * n_obs
        base = entries[row][1]
        for o in range(1, n_obs):
            if entries[row + o][1] != base:
                f = [0] * w.act.size
                f[base] = 0
                f[entries[row + o][1]] = o
                solutions = tuple(
                    o2 for o2 in range(n_obs) if f[entries[row + o2][1]] == o2
                )
                return Verdict(False, UfpWitness1(p=p, f=tuple(f), solutions=solutions))
    return Verdict(True)


def check_ufp_n(w: ProcessFunctionN, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Decide the n-party unique fixed-point condition by brute force: for
    every tuple of inserted local functions act_i -> obs_i and every past
    value, the system o_i = f_i(w_act_i(p, o_vec)) must have exactly one
    solution vector.
    """
    obs_sizes = w.obs_sizes
    act_sizes = w.act_sizes
    n_past = w.past.size
    n_obs = math.prod(obs_sizes)
    cost = math.prod(o**a for o, a in zip(obs_sizes, act_sizes)) * n_past * n_obs
    if cost > budget:
        raise BudgetExceeded(f"{cost} elementary checks exceed budget {budget}")
    entries = w.table.entries
    obs_vectors = tuple(product(*(range(s) for s in obs_sizes)))
    party_fns = [tuple(product(range(o), repeat=a)) for o, a in zip(obs_sizes, act_sizes)]
    for fs in product(*party_fns):
        for p in range(n_past):
            row = p * n_obs
            solutions = []
            for offset, o_vec in enumerate(obs_vectors):
                acts = entries[row + offset][1:]
                if all(f[a] == o for f, a, o in zip(fs, acts, o_vec)):
                    solutions.append(o_vec)
            if len(solutions) != 1:
                return Verdict(False, UfpWitnessN(p=p, f=fs, solutions=tuple(solutions)))
    return Verdict(True)


def validated(
    w: ProcessFunction1 | ProcessFunctionN,
    budget: int = DEFAULT_BUDGET,
    method: str = "fast",
) -> ProcessFunction1 | ProcessFunctionN:
    """Return a copy of ``w`` with its status (and witness, if invalid) set
    by the appropriate check.

    ``method`` selects between the fast criterion and brute force for
    one-input candidates; multi-input candidates are always brute-forced.
    """
    if isinstance(w, ProcessFunction1):
        if method == "fast":
            verdict = check_ufp_1_fast(w)
        elif method == "brute":
            verdict = check_ufp_1_bruteforce(w, budget)
        else:
            raise PreconditionError(f"unknown method {method!r}")
    else:
        verdict = check_ufp_n(w, budget)
    status = UfpStatus.VALID if verdict.valid else UfpStatus.INVALID
    return replace(w, status=status, witness=verdict.witness)


# ---------------------------------------------------------------------------
# Comb / lens decomposition
# ---------------------------------------------------------------------------


def decompose(w: ProcessFunction1) -> tuple[TableFunction, TableFunction]:
    """Split a valid one-input process function into its lens components:
    a future map (past, obs) -> future and an act map past -> act.

    The act component of a valid ``w`` is constant in the observation, so
    the act map is read off at observation 0.
    """
    if w.status is not UfpStatus.VALID:
        raise PreconditionError(
            f"decompose requires a validated process function, status is {w.status.value}"
        )
    n_obs = w.obs.size
    future_entries = tuple((e[0],) for e in w.table.entries)
    act_entries = tuple((w.table.entries[p * n_obs][1],) for p in w.past.indices)
    w_future = TableFunction((w.past, w.obs), (w.future,), future_entries)
    w_act = TableFunction((w.past,), (w.act,), act_entries)
    return w_future, w_act


def recompose(w_future: TableFunction, w_act: TableFunction) -> ProcessFunction1:
    """Build the process function (p, o) |-> (w_future(p, o), w_act(p)).

    Any such pair satisfies the unique fixed-point condition, so the result
    is marked valid.
    """
    past, obs = w_future.domain
    (future,) = w_future.codomain
    if w_act.domain != (past,):
        raise AxisMismatch("act map must share the past axis of the future map")
    (act,) = w_act.codomain
    n_obs = obs.size
    entries = tuple(
        (w_future.entries[p * n_obs + o][0], w_act.entries[p][0])
        for p in past.indices
        for o in range(n_obs)
    )
    table = TableFunction((past, obs), (future, act), entries)
    return ProcessFunction1(
        past=past, obs=obs, future=future, act=act, table=table, status=UfpStatus.VALID
    )


# ---------------------------------------------------------------------------
# Observation independence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObsCounterexample:
    """Two global actions differing only outside party ``party`` that change
    that party's observation component at state ``state``."""

    party: int
    state: int
    action: tuple[int, ...]
    action_prime: tuple[int, ...]
    observed: int
    observed_prime: int


def check_obs_independence(
    env: DecPomdp,
) -> tuple[TableFunction, ...] | ObsCounterexample:
    """Certify that each party's observation component depends only on the
    global state and its own action.

    On success, returns the factored per-party tables realizing the global
    observation map; on failure, returns the first counterexample found.
    """
    a_sizes = env.action_sizes
    o_sizes = env.observation_sizes
    n = len(env.parties)
    n_act = env.actions.size
    obs_entries = env.observation.entries

    # candidate O_i(s, a_i): read the global table with all other actions 0
    strides = [1] * n
    for k in range(n - 2, -1, -1):
        strides[k] = strides[k + 1] * a_sizes[k + 1]
    candidates: list[list[int]] = []
    for i in range(n):
        cand = []
        for s in env.states.indices:
            for a_i in range(a_sizes[i]):
                packed = obs_entries[s * n_act + a_i * strides[i]][0]
                cand.append(unpack_index(o_sizes, packed)[i])
        candidates.append(cand)

    for s in env.states.indices:
        for a in range(n_act):
            a_vec = unpack_index(a_sizes, a)
            o_vec = unpack_index(o_sizes, obs_entries[s * n_act + a][0])
            for i in range(n):
                want = candidates[i][s * a_sizes[i] + a_vec[i]]
                if o_vec[i] != want:
                    a_base = tuple(
                        a_vec[j] if j == i else 0 for j in range(n)
                    )
                    return ObsCounterexample(
                        party=i,
                        state=s,
                        action=a_vec,
                        action_prime=a_base,
                        observed=o_vec[i],
                        observed_prime=want,
                    )
    tables = tuple(
        TableFunction(
            (env.states, env.parties[i].actions),
            (env.parties[i].observations,),
            tuple((v,) for v in candidates[i]),
        )
        for i in range(n)
    )
    return tables


# ---------------------------------------------------------------------------
# Causal orderability
# ---------------------------------------------------------------------------

MAX_ORDER_PARTIES = 8


@dataclass(frozen=True)
class CombOrder:
    """A fixed causal order: the permutation in which parties act."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(self.order))
        if sorted(self.order) != list(range(len(self.order))):
            raise InvariantViolation(
                f"{self.order!r} is not a permutation of 0..{len(self.order) - 1}"
            )


def check_comb_order(w: ProcessFunctionN, sigma: CombOrder) -> bool:
    """True when the act component of each party depends only on the past
    and on the observations of parties earlier in ``sigma``.

    Checked by exhaustive variation of the remaining observation
    coordinates.
    """
    if w.status is not UfpStatus.VALID:
        raise PreconditionError("comb-order check requires a validated process function")
    if len(sigma.order) != w.n:
        raise AxisMismatch(
            f"order over {len(sigma.order)} parties against a {w.n}-party process function"
        )
    obs_sizes = w.obs_sizes
    entries = w.table.entries
    n_obs = math.prod(obs_sizes)
    obs_vectors = tuple(product(*(range(s) for s in obs_sizes)))
    for k, party in enumerate(sigma.order):
        earlier = sigma.order[:k]
        seen: dict[tuple[int, ...], int] = {}
        for p in w.past.indices:
            row = p * n_obs
            for offset, o_vec in enumerate(obs_vectors):
                key = (p, *(o_vec[j] for j in earlier))
                act = entries[row + offset][1 + party]
                if seen.setdefault(key, act) != act:
                    return False
    return True


def is_causally_ordered(w: ProcessFunctionN) -> CombOrder | None:
    """The lexicographically least fixed causal order compatible with ``w``,
    or None when every order fails (indefinite causal order)."""
    if w.n > MAX_ORDER_PARTIES:
        raise BudgetExceeded(
            f"orderability scan over {w.n}! permutations refused (max {MAX_ORDER_PARTIES} parties)"
        )
    for perm in permutations(range(w.n)):
        sigma = CombOrder(perm)
        if check_comb_order(w, sigma):
            return sigma
    return None
