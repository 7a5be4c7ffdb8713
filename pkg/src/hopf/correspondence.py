"""The bijection between deterministic finite agents and valid one-input
process functions, the direct one-step interaction map, agent equivalence,
and the probe-environment family that separates inequivalent agents.
"""

from __future__ import annotations

from .core import (
    Agent,
    AxisMismatch,
    DetPomdp,
    DomainError,
    FiniteSet,
    PreconditionError,
    ProcessFunction1,
    TableFunction,
    UfpStatus,
    pack_index,
    product_set,
)


def agent_to_pf(agent: Agent) -> ProcessFunction1:
    """Induced process function of an agent: w(m, o) = (U(m, pi(m), o), pi(m)).

    The act component never reads the observation, so the result satisfies
    the unique fixed-point condition by construction and is marked valid.
    """
    mem, act, obs = agent.memory, agent.actions, agent.observations
    n_obs, n_act = obs.size, act.size
    policy = agent.policy.entries
    update = agent.update.entries
    entries = tuple(
        (update[(m * n_act + policy[m][0]) * n_obs + o][0], policy[m][0])
        for m in mem.indices
        for o in range(n_obs)
    )
    table = TableFunction((mem, obs), (mem, act), entries)
    return ProcessFunction1(
        past=mem, obs=obs, future=mem, act=act, table=table, status=UfpStatus.VALID
    )


def pf_to_agent(w: ProcessFunction1) -> Agent:
    """Canonical agent of a valid process function with matching past and
    future types: policy pi(m) = w_act(m), update U(m, a, o) = w_future(m, o).

    The update ignores its action argument; entries at actions other than
    pi(m) are unreachable under the induced dynamics and this is the
    canonical fill.
    """
    if w.status is not UfpStatus.VALID:
        raise PreconditionError(
            f"pf_to_agent requires a validated process function, status is {w.status.value}"
        )
    if w.past != w.future:
        raise AxisMismatch(
            f"past axis {w.past!r} does not equal future axis {w.future!r}"
        )
    mem, act, obs = w.past, w.act, w.obs
    n_obs = obs.size
    policy = TableFunction(
        (mem,), (act,), tuple((w.act_of(m),) for m in mem.indices)
    )
    update = TableFunction(
        (mem, act, obs),
        (mem,),
        tuple(
            (w.future_of(m, o),)
            for m in mem.indices
            for _a in act.indices
            for o in range(n_obs)
        ),
    )
    return Agent(memory=mem, actions=act, observations=obs, policy=policy, update=update)


def one_step_direct(agent: Agent, env: DetPomdp, m: int, s: int) -> tuple[int, int, float]:
    """One interaction step evaluated directly on the agent's tables:
    a = pi(m), then s' = T(s, a), o = O(s, a), r = R(s, a), m' = U(m, a, o).
    """
    if agent.actions != env.actions:
        raise AxisMismatch(
            f"agent action axis {agent.actions!r} does not match environment {env.actions!r}"
        )
    if agent.observations != env.observations:
        raise AxisMismatch(
            f"agent observation axis {agent.observations!r} does not match "
            f"environment {env.observations!r}"
        )
    if not 0 <= m < agent.memory.size:
        raise DomainError(f"memory index {m} out of range for {agent.memory!r}")
    if not 0 <= s < env.states.size:
        raise DomainError(f"state index {s} out of range for {env.states!r}")
    a = agent.policy(m)[0]
    s_next = env.transition(s, a)[0]
    o = env.observation(s, a)[0]
    r = env.reward(s, a)
    m_next = agent.update(m, a, o)[0]
    return m_next, s_next, r


def probe_pomdp(
    observations: FiniteSet,
    actions: FiniteSet,
    o: int,
    a_prev: int,
    o_reset: int,
) -> DetPomdp:
    """Discriminating environment whose states are (observation, last action)
    pairs: any state (o, a') emits o, and action a resets to (o_reset, a).
    Reward is 1 everywhere.

    The (o, a_prev) arguments name the probe point (the intended initial
    state, see :func:`probe_state`); they are range-checked but the tables
    do not depend on them.
    """
    if not 0 <= o < observations.size:
        raise DomainError(f"observation index {o} out of range for {observations!r}")
    if not 0 <= a_prev < actions.size:
        raise DomainError(f"action index {a_prev} out of range for {actions!r}")
    if not 0 <= o_reset < observations.size:
        raise DomainError(
            f"reset observation index {o_reset} out of range for {observations!r}"
        )
    states = product_set((observations, actions))
    n_act = actions.size
    transition_entries = []
    observation_entries = []
    for s in states.indices:
        s_obs = s // n_act
        for a in actions.indices:
            transition_entries.append((o_reset * n_act + a,))
            observation_entries.append((s_obs,))
    transition = TableFunction((states, actions), (states,), tuple(transition_entries))
    observation = TableFunction(
        (states, actions), (observations,), tuple(observation_entries)
    )
    rewards = tuple(1.0 for _ in range(states.size * n_act))
    return DetPomdp(
        states=states,
        actions=actions,
        observations=observations,
        transition=transition,
        observation=observation,
        rewards=rewards,
    )


def probe_state(observations: FiniteSet, actions: FiniteSet, o: int, a_prev: int) -> int:
    """State index of the probe point (o, a_prev) inside a probe
    environment built over the same axes."""
    return pack_index((observations.size, actions.size), (o, a_prev))


def agents_equivalent(a: Agent, b: Agent) -> bool:
    """True when the two agents behave identically in every environment.

    Decided finitely: equal induced process functions. Equal induced tables
    force equal policies (the act component is the policy), which makes
    rewards and transitions agree everywhere; the policy comparison is kept
    as an internal assertion.
    """
    if (a.memory, a.actions, a.observations) != (b.memory, b.actions, b.observations):
        raise AxisMismatch("agents must share memory, action, and observation axes")
    same = agent_to_pf(a).table.entries == agent_to_pf(b).table.entries
    if same:
        assert a.policy.entries == b.policy.entries
    return same
