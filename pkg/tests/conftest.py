"""Shared builders for the test suite: seeded random agents, environments,
and strategies over small shapes."""

from __future__ import annotations

import random
from itertools import product

from hopf import (
    Agent,
    DecPomdp,
    DetPomdp,
    FiniteSet,
    PartySpace,
    ProcessFunction1,
    TableFunction,
)

BIT = FiniteSet(2)


def make_agent(rng: random.Random, n_mem: int, n_act: int, n_obs: int) -> Agent:
    mem, act, obs = FiniteSet(n_mem), FiniteSet(n_act), FiniteSet(n_obs)
    policy = TableFunction(
        (mem,), (act,), tuple((rng.randrange(n_act),) for _ in range(n_mem))
    )
    update = TableFunction(
        (mem, act, obs),
        (mem,),
        tuple((rng.randrange(n_mem),) for _ in range(n_mem * n_act * n_obs)),
    )
    return Agent(memory=mem, actions=act, observations=obs, policy=policy, update=update)


def make_env(rng: random.Random, n_states: int, n_act: int, n_obs: int) -> DetPomdp:
    states, act, obs = FiniteSet(n_states), FiniteSet(n_act), FiniteSet(n_obs)
    transition = TableFunction(
        (states, act),
        (states,),
        tuple((rng.randrange(n_states),) for _ in range(n_states * n_act)),
    )
    observation = TableFunction(
        (states, act),
        (obs,),
        tuple((rng.randrange(n_obs),) for _ in range(n_states * n_act)),
    )
    rewards = tuple(rng.uniform(-5.0, 5.0) for _ in range(n_states * n_act))
    return DetPomdp(
        states=states,
        actions=act,
        observations=obs,
        transition=transition,
        observation=observation,
        rewards=rewards,
    )


def make_pf1(rng: random.Random, n_mem: int, n_act: int, n_obs: int) -> ProcessFunction1:
    """Unchecked one-input candidate with arbitrary (not necessarily valid)
    entries."""
    mem, act, obs = FiniteSet(n_mem), FiniteSet(n_act), FiniteSet(n_obs)
    table = TableFunction(
        (mem, obs),
        (mem, act),
        tuple(
            (rng.randrange(n_mem), rng.randrange(n_act))
            for _ in range(n_mem * n_obs)
        ),
    )
    return ProcessFunction1(past=mem, obs=obs, future=mem, act=act, table=table)


def all_bit_pf1() -> list[ProcessFunction1]:
    """All 256 one-input candidates with every axis of size 2."""
    out = []
    for entries in product(product(range(2), repeat=2), repeat=4):
        table = TableFunction((BIT, BIT), (BIT, BIT), entries)
        out.append(
            ProcessFunction1(past=BIT, obs=BIT, future=BIT, act=BIT, table=table)
        )
    return out


def all_bit_agents() -> list[Agent]:
    """All 1024 agents with memory, action, and observation sets of size 2."""
    out = []
    for pol in product(range(2), repeat=2):
        policy = TableFunction((BIT,), (BIT,), tuple((v,) for v in pol))
        for upd in product(range(2), repeat=8):
            update = TableFunction(
                (BIT, BIT, BIT), (BIT,), tuple((v,) for v in upd)
            )
            out.append(
                Agent(
                    memory=BIT,
                    actions=BIT,
                    observations=BIT,
                    policy=policy,
                    update=update,
                )
            )
    return out


def all_agents(n_mem: int, n_act: int, n_obs: int) -> list[Agent]:
    mem, act, obs = FiniteSet(n_mem), FiniteSet(n_act), FiniteSet(n_obs)
    out = []
    for pol in product(range(n_act), repeat=n_mem):
        policy = TableFunction((mem,), (act,), tuple((v,) for v in pol))
        for upd in product(range(n_mem), repeat=n_mem * n_act * n_obs):
            update = TableFunction(
                (mem, act, obs), (mem,), tuple((v,) for v in upd)
            )
            out.append(
                Agent(
                    memory=mem,
                    actions=act,
                    observations=obs,
                    policy=policy,
                    update=update,
                )
            )
    return out


def all_envs(n_states: int, n_act: int, n_obs: int) -> list[DetPomdp]:
    """Every transition/observation table pair; rewards fixed to distinct
    values so reward plumbing errors surface as inequality."""
    states, act, obs = FiniteSet(n_states), FiniteSet(n_act), FiniteSet(n_obs)
    rewards = tuple(float(i) for i in range(n_states * n_act))
    out = []
    for t in product(range(n_states), repeat=n_states * n_act):
        transition = TableFunction((states, act), (states,), tuple((v,) for v in t))
        for o in product(range(n_obs), repeat=n_states * n_act):
            observation = TableFunction((states, act), (obs,), tuple((v,) for v in o))
            out.append(
                DetPomdp(
                    states=states,
                    actions=act,
                    observations=obs,
                    transition=transition,
                    observation=observation,
                    rewards=rewards,
                )
            )
    return out


def make_dec_env(
    rng: random.Random, state_sizes, act_sizes, obs_sizes
) -> DecPomdp:
    """Random observation-independent multi-party environment with the
    factored tables attached."""
    from hopf import check_obs_independence, pack_index

    parties = tuple(
        PartySpace(
            states=FiniteSet(s), actions=FiniteSet(a), observations=FiniteSet(o)
        )
        for s, a, o in zip(state_sizes, act_sizes, obs_sizes)
    )
    n_s = 1
    for s in state_sizes:
        n_s *= s
    n_a = 1
    for a in act_sizes:
        n_a *= a
    states, actions = FiniteSet(n_s), FiniteSet(n_a)
    transition = TableFunction(
        (states, actions),
        (states,),
        tuple((rng.randrange(n_s),) for _ in range(n_s * n_a)),
    )
    # build the observation from per-party tables so independence holds
    per_party = [
        [
            [rng.randrange(obs_sizes[i]) for _ in range(act_sizes[i])]
            for _s in range(n_s)
        ]
        for i in range(len(parties))
    ]
    from hopf import unpack_index

    obs_entries = []
    for s in range(n_s):
        for a in range(n_a):
            a_vec = unpack_index(tuple(act_sizes), a)
            o_vec = tuple(per_party[i][s][a_vec[i]] for i in range(len(parties)))
            obs_entries.append((pack_index(tuple(obs_sizes), o_vec),))
    n_o = 1
    for o in obs_sizes:
        n_o *= o
    observation = TableFunction((states, actions), (FiniteSet(n_o),), tuple(obs_entries))
    rewards = tuple(rng.uniform(-3.0, 3.0) for _ in range(n_s * n_a))
    env = DecPomdp(
        parties=parties,
        transition=transition,
        observation=observation,
        rewards=rewards,
    )
    factored = check_obs_independence(env)
    assert isinstance(factored, tuple)
    return env.with_factored_obs(factored)
