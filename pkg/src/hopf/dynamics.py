"""Composition of process-function strategies with environments: the link
step for one and many parties, multi-step rollouts, and exact discounted
value via cycle detection on the deterministic joint system.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    AxisMismatch,
    ConsistencyViolation,
    DecPomdp,
    DetPomdp,
    DiscountSpec,
    DomainError,
    FiniteSet,
    InitialDistribution,
    NotObservationIndependent,
    PreconditionError,
    ProcessFunction1,
    ProcessFunctionN,
    TableFunction,
    Trajectory,
    UfpStatus,
    as_discount,
    pack_index,
    unpack_index,
)


@dataclass(frozen=True)
class EncodedPomdp:
    """A deterministic environment folded into one finite-set function
    (action, state) -> (observation, next state, reward index), with the
    de-duplicated reward values carried alongside."""

    combined: TableFunction
    reward_values: tuple[float, ...]

    def reward_of(self, index: int) -> float:
        return self.reward_values[index]


def encode_pomdp(env: DetPomdp) -> EncodedPomdp:
    """Fold the three tables of an environment into a single function with
    domain (action, state).

    Rewards are replaced by indices into the sorted list of distinct reward
    values so the combined object stays within the finite-set world.
    """
    values = tuple(sorted(set(env.rewards)))
    index_of = {v: i for i, v in enumerate(values)}
    n_act = env.actions.size
    reward_axis = FiniteSet(len(values))
    entries = tuple(
        (
            env.observation(s, a)[0],
            env.transition(s, a)[0],
            index_of[env.rewards[s * n_act + a]],
        )
        for a in env.actions.indices
        for s in env.states.indices
    )
    combined = TableFunction(
        (env.actions, env.states),
        (env.observations, env.states, reward_axis),
        entries,
    )
    return EncodedPomdp(combined=combined, reward_values=values)


def _require_valid(w: ProcessFunction1 | ProcessFunctionN) -> None:
    if w.status is not UfpStatus.VALID:
        raise PreconditionError(
            f"link step requires a validated process function, status is {w.status.value}"
        )


def _check_indices(memory: FiniteSet, states: FiniteSet, m: int, s: int) -> None:
    if not 0 <= m < memory.size:
        raise DomainError(f"memory index {m} out of range for {memory!r}")
    if not 0 <= s < states.size:
        raise DomainError(f"state index {s} out of range for {states!r}")


def link_step_1(
    w: ProcessFunction1, env: DetPomdp, m: int, s: int
) -> tuple[int, int, float]:
    """One step of the strategy-environment composition: a = w_act(m),
    o = O(s, a), then (w_future(m, o), T(s, a), R(s, a))."""
    _require_valid(w)
    if w.past != w.future:
        raise AxisMismatch("link step requires matching past and future axes")
    if w.obs != env.observations:
        raise AxisMismatch(
            f"observation axis {w.obs!r} does not match environment {env.observations!r}"
        )
    if w.act != env.actions:
        raise AxisMismatch(
            f"action axis {w.act!r} does not match environment {env.actions!r}"
        )
    _check_indices(w.past, env.states, m, s)
    a = w.act_of(m)
    o = env.observation(s, a)[0]
    m_next = w.future_of(m, o)
    s_next = env.transition(s, a)[0]
    return m_next, s_next, env.reward(s, a)


def link_step_n(
    w: ProcessFunctionN, env: DecPomdp, m: int, s: int
) -> tuple[int, int, float]:
    """One step of the n-party composition: close each party's observation
    wire through its factored observation map, solve the resulting
    fixed-point system by scanning all joint observations, then apply the
    joint action to the environment.

    Exactly one solution must exist; anything else raises
    :class:`ConsistencyViolation` (defense in depth, it cannot fire when the
    strategy is genuinely valid and the environment factored).
    """
    _require_valid(w)
    if w.past != w.future:
        raise AxisMismatch("link step requires matching past and future axes")
    if env.factored_obs is None:
        raise NotObservationIndependent(
            "environment carries no factored observation maps; certify observation "
            "independence first"
        )
    if w.n != len(env.parties):
        raise AxisMismatch(
            f"{w.n}-party strategy against {len(env.parties)}-party environment"
        )
    for i, (slot, party) in enumerate(zip(w.parties, env.parties)):
        if slot.act != party.actions or slot.obs != party.observations:
            raise AxisMismatch(f"party {i} axes differ between strategy and environment")
    _check_indices(w.past, env.states, m, s)

    obs_sizes = w.obs_sizes
    n_obs = 1
    for size in obs_sizes:
        n_obs *= size
    entries = w.table.entries
    row = m * n_obs
    factored = env.factored_obs
    solution = None
    solutions = 0
    for offset in range(n_obs):
        o_vec = unpack_index(obs_sizes, offset)
        acts = entries[row + offset][1:]
        if all(factored[i](s, acts[i])[0] == o_vec[i] for i in range(w.n)):
            solutions += 1
            if solution is None:
                solution = offset
    if solutions != 1:
        raise ConsistencyViolation(
            f"fixed-point system has {solutions} solutions at memory {m}, state {s}"
        )
    out = entries[row + solution]
    m_next = out[0]
    a_joint = pack_index(w.act_sizes, out[1:])
    s_next = env.transition(s, a_joint)[0]
    return m_next, s_next, env.reward(s, a_joint)


def _stepper(w, env):
    """Bind the link step matching the strategy arity."""
    if isinstance(w, ProcessFunction1):
        if not isinstance(env, DetPomdp):
            raise AxisMismatch("one-input strategies compose with single-party environments")
        return lambda m, s: link_step_1(w, env, m, s)
    if isinstance(w, ProcessFunctionN):
        if not isinstance(env, DecPomdp):
            raise AxisMismatch("multi-input strategies compose with multi-party environments")
        return lambda m, s: link_step_n(w, env, m, s)
    raise TypeError(f"not a process function: {w!r}")


def rollout(
    w: ProcessFunction1 | ProcessFunctionN,
    env: DetPomdp | DecPomdp,
    m0: int,
    s0: int,
    horizon: int,
) -> Trajectory:
    """Iterate the link step ``horizon`` times from (m0, s0), recording every
    memory, state, and reward along the way."""
    if horizon < 0:
        raise PreconditionError(f"horizon must be nonnegative, got {horizon}")
    step = _stepper(w, env)
    _check_indices(w.past, env.states, m0, s0)
    memories = [m0]
    states = [s0]
    rewards: list[float] = []
    m, s = m0, s0
    for _ in range(horizon):
        m, s, r = step(m, s)
        memories.append(m)
        states.append(s)
        rewards.append(r)
    return Trajectory(memories=tuple(memories), states=tuple(states), rewards=tuple(rewards))


def discounted_reward_truncated(
    w,
    env,
    m0: int,
    s0: int,
    gamma: DiscountSpec | float,
    steps: int,
) -> tuple[float, float]:
    """Partial discounted sum over the first ``steps`` rewards, paired with
    the worst-case tail bound gamma**steps * Rmax / (1 - gamma)."""
    if steps < 1:
        raise PreconditionError(f"steps must be positive, got {steps}")
    traj = rollout(w, env, m0, s0, steps)
    g = as_discount(gamma).gamma
    value = 0.0
    weight = 1.0
    for r in traj.rewards:
        value += weight * r
        weight *= g
    bound = g**steps * env.reward_bound / (1.0 - g)
    return value, bound


def discounted_reward_exact(
    w, env, m0: int, s0: int, gamma: DiscountSpec | float
) -> float:
    """Exact infinite-horizon discounted reward.

    The joint (memory, state) orbit of a deterministic system enters a cycle
    within |M| * |S| steps; the tail is then a geometric series, giving
    D = prefix + gamma**k * cycle_sum / (1 - gamma**L) in closed form.
    """
    step = _stepper(w, env)
    _check_indices(w.past, env.states, m0, s0)
    g = as_discount(gamma).gamma
    seen: dict[tuple[int, int], int] = {}
    rewards: list[float] = []
    m, s = m0, s0
    while (m, s) not in seen:
        seen[(m, s)] = len(rewards)
        m, s, r = step(m, s)
        rewards.append(r)
    k = seen[(m, s)]
    length = len(rewards) - k
    prefix = 0.0
    weight = 1.0
    for r in rewards[:k]:
        prefix += weight * r
        weight *= g
    cycle = 0.0
    weight = 1.0
    for r in rewards[k:]:
        cycle += weight * r
        weight *= g
    return prefix + g**k * cycle / (1.0 - g**length)


def performance(
    w,
    env,
    m0: int,
    mu: InitialDistribution,
    gamma: DiscountSpec | float,
) -> float:
    """Initial-distribution average of the exact discounted reward."""
    if len(mu.probs) != env.states.size:
        raise AxisMismatch(
            f"distribution over {len(mu.probs)} states against {env.states.size} environment states"
        )
    total = 0.0
    for s, p in enumerate(mu.probs):
        if p:
            total += p * discounted_reward_exact(w, env, m0, s, gamma)
    return total
