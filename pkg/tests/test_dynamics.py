"""Strategy-environment composition: encoding, link steps, rollouts, and the
exact discounted value against its truncated approximation."""

from __future__ import annotations

import random

import pytest
from conftest import BIT, make_agent, make_dec_env, make_env, make_pf1

from hopf import (
    AxisMismatch,
    ConsistencyViolation,
    DecPomdp,
    DiscountSpec,
    DomainError,
    FiniteSet,
    InitialDistribution,
    NotObservationIndependent,
    PartySlot,
    PartySpace,
    PreconditionError,
    ProcessFunctionN,
    TableFunction,
    UfpStatus,
    agent_to_pf,
    discounted_reward_exact,
    discounted_reward_truncated,
    encode_pomdp,
    link_step_1,
    link_step_n,
    performance,
    rollout,
    validated,
)

ONE = FiniteSet(1)
GAMMAS = (0.0, 0.1, 0.5, 0.9, 0.99)


def constant_reward_env(r: float):
    """Single-state, single-action environment paying ``r`` forever."""
    one = FiniteSet(1)
    table = TableFunction((one, one), (one,), ((0,),))
    return make_single_env(one, table, table, (r,))


def make_single_env(states, transition, observation, rewards):
    from hopf import DetPomdp

    one = FiniteSet(1)
    return DetPomdp(
        states=states,
        actions=one,
        observations=one,
        transition=transition,
        observation=observation,
        rewards=rewards,
    )


def constant_strategy(n_obs: int = 1):
    """Trivial-memory strategy over the given observation axis."""
    one = FiniteSet(1)
    obs = FiniteSet(n_obs)
    table = TableFunction((one, obs), (one, one), tuple((0, 0) for _ in range(n_obs)))
    from hopf import ProcessFunction1

    return ProcessFunction1(
        past=one, obs=obs, future=one, act=one, table=table, status=UfpStatus.VALID
    )


class TestEncode:
    def test_rewards_are_deduplicated_and_sorted(self):
        rng = random.Random(1)
        env = make_env(rng, 3, 2, 2)
        env = type(env)(
            states=env.states,
            actions=env.actions,
            observations=env.observations,
            transition=env.transition,
            observation=env.observation,
            rewards=(2.5, -1.0, 2.5, 0.0, -1.0, 7.0),
        )
        enc = encode_pomdp(env)
        assert enc.reward_values == (-1.0, 0.0, 2.5, 7.0)
        for a in range(2):
            for s in range(3):
                o, s_next, r_idx = enc.combined(a, s)
                assert o == env.observation(s, a)[0]
                assert s_next == env.transition(s, a)[0]
                assert enc.reward_of(r_idx) == env.reward(s, a)

    def test_random_environments_round_trip(self):
        rng = random.Random(2)
        for _ in range(30):
            env = make_env(rng, rng.randrange(1, 5), rng.randrange(1, 4), 2)
            enc = encode_pomdp(env)
            assert enc.reward_values == tuple(sorted(set(env.rewards)))
            for s in range(env.states.size):
                for a in range(env.actions.size):
                    o, s_next, r_idx = enc.combined(a, s)
                    assert (o, s_next, enc.reward_of(r_idx)) == (
                        env.observation(s, a)[0],
                        env.transition(s, a)[0],
                        env.reward(s, a),
                    )


class TestLinkStep1:
    def test_requires_validation(self):
        rng = random.Random(3)
        w = make_pf1(rng, 2, 2, 2)
        env = make_env(rng, 2, 2, 2)
        with pytest.raises(PreconditionError):
            link_step_1(w, env, 0, 0)

    def test_axis_checks(self):
        rng = random.Random(4)
        w = validated(agent_to_pf(make_agent(rng, 2, 2, 2)))
        with pytest.raises(AxisMismatch):
            link_step_1(w, make_env(rng, 2, 2, 3), 0, 0)
        with pytest.raises(AxisMismatch):
            link_step_1(w, make_env(rng, 2, 3, 2), 0, 0)
        env = make_env(rng, 2, 2, 2)
        with pytest.raises(DomainError):
            link_step_1(w, env, 2, 0)
        with pytest.raises(DomainError):
            link_step_1(w, env, 0, 5)

    def test_hand_example(self):
        # memory flips on observation 1; environment emits the state parity
        mem, act, obs, states = BIT, FiniteSet(1), BIT, BIT
        table = TableFunction((mem, obs), (mem, act), ((0, 0), (1, 0), (1, 0), (0, 0)))
        from hopf import ProcessFunction1

        w = ProcessFunction1(
            past=mem, obs=obs, future=mem, act=act, table=table, status=UfpStatus.VALID
        )
        transition = TableFunction((states, act), (states,), ((1,), (0,)))
        observation = TableFunction((states, act), (obs,), ((0,), (1,)))
        from hopf import DetPomdp

        env = DetPomdp(
            states=states,
            actions=act,
            observations=obs,
            transition=transition,
            observation=observation,
            rewards=(2.0, -3.0),
        )
        assert link_step_1(w, env, 0, 0) == (0, 1, 2.0)
        assert link_step_1(w, env, 0, 1) == (1, 0, -3.0)
        assert link_step_1(w, env, 1, 1) == (0, 0, -3.0)


class TestLinkStepN:
    @staticmethod
    def identity_env(rewards=(0.0, 1.0, 2.0, 3.0)):
        """Two parties, one global state; each party observes its own action."""
        parties = (
            PartySpace(states=ONE, actions=BIT, observations=BIT),
            PartySpace(states=ONE, actions=BIT, observations=BIT),
        )
        states, actions = ONE, FiniteSet(4)
        transition = TableFunction((states, actions), (states,), ((0,),) * 4)
        observation = TableFunction(
            (states, actions), (FiniteSet(4),), tuple((a,) for a in range(4))
        )
        env = DecPomdp(
            parties=parties,
            transition=transition,
            observation=observation,
            rewards=rewards,
        )
        from hopf import check_obs_independence

        return env.with_factored_obs(check_obs_independence(env))

    @staticmethod
    def bipartite_strategy(entries, status=UfpStatus.UNCHECKED):
        table = TableFunction((ONE, BIT, BIT), (ONE, BIT, BIT), entries)
        return ProcessFunctionN(
            past=ONE,
            future=ONE,
            parties=(PartySlot(act=BIT, obs=BIT), PartySlot(act=BIT, obs=BIT)),
            table=table,
            status=status,
        )

    def test_hand_example_solves_the_wire_loop(self):
        # party 0 plays 1 blindly; party 1 echoes party 0's observation; the
        # environment shows each party its own action, so both wires settle
        # on 1 and the joint action is (1, 1)
        env = self.identity_env()
        w = validated(
            self.bipartite_strategy(((0, 1, 0), (0, 1, 0), (0, 1, 1), (0, 1, 1)))
        )
        assert w.status is UfpStatus.VALID
        m, s, r = link_step_n(w, env, 0, 0)
        assert (m, s, r) == (0, 0, 3.0)

    def test_forged_validity_is_caught(self):
        # mutual copy marked valid by hand: two consistent observation vectors
        env = self.identity_env()
        w = self.bipartite_strategy(
            ((0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1)), status=UfpStatus.VALID
        )
        with pytest.raises(ConsistencyViolation):
            link_step_n(w, env, 0, 0)

    def test_requires_factored_observations(self):
        env = self.identity_env()
        bare = DecPomdp(
            parties=env.parties,
            transition=env.transition,
            observation=env.observation,
            rewards=env.rewards,
        )
        w = validated(self.bipartite_strategy(((0, 1, 0),) * 4))
        with pytest.raises(NotObservationIndependent):
            link_step_n(w, bare, 0, 0)

    def test_party_count_must_match(self):
        rng = random.Random(5)
        env = make_dec_env(rng, (1, 1, 1), (2, 2, 2), (2, 2, 2))
        w = validated(self.bipartite_strategy(((0, 1, 0),) * 4))
        with pytest.raises(AxisMismatch):
            link_step_n(w, env, 0, 0)

    def test_random_environments_agree_with_explicit_solution(self):
        # blind strategies: constant acts make the expected step explicit
        rng = random.Random(6)
        for _ in range(30):
            env = make_dec_env(rng, (1, 2), (2, 2), (2, 2))
            a0, a1 = rng.randrange(2), rng.randrange(2)
            w = validated(self.bipartite_strategy(((0, a0, a1),) * 4))
            assert w.status is UfpStatus.VALID
            for s in range(env.states.size):
                m, s_next, r = link_step_n(w, env, 0, s)
                a = a0 * 2 + a1
                assert m == 0
                assert s_next == env.transition(s, a)[0]
                assert r == env.reward(s, a)


class TestRollout:
    def test_zero_horizon(self):
        env = constant_reward_env(1.5)
        traj = rollout(constant_strategy(), env, 0, 0, 0)
        assert traj.memories == (0,)
        assert traj.states == (0,)
        assert traj.rewards == ()
        assert traj.horizon == 0

    def test_negative_horizon_refused(self):
        env = constant_reward_env(1.5)
        with pytest.raises(PreconditionError):
            rollout(constant_strategy(), env, 0, 0, -1)

    def test_lengths_and_determinism(self):
        rng = random.Random(7)
        for _ in range(20):
            agent = make_agent(rng, 2, 2, 2)
            env = make_env(rng, 3, 2, 2)
            w = agent_to_pf(agent)
            t1 = rollout(w, env, 0, 0, 9)
            t2 = rollout(w, env, 0, 0, 9)
            assert t1 == t2
            assert len(t1.memories) == len(t1.states) == 10
            assert len(t1.rewards) == 9
            assert t1.horizon == 9

    def test_prefix_consistency(self):
        rng = random.Random(8)
        agent = make_agent(rng, 2, 2, 3)
        env = make_env(rng, 4, 2, 3)
        w = agent_to_pf(agent)
        long = rollout(w, env, 1, 2, 12)
        for h in range(12):
            short = rollout(w, env, 1, 2, h)
            assert short.memories == long.memories[: h + 1]
            assert short.states == long.states[: h + 1]
            assert short.rewards == long.rewards[:h]


class TestDiscountedValue:
    def test_constant_stream_closed_form(self):
        env = constant_reward_env(1.0)
        w = constant_strategy()
        for g in GAMMAS:
            exact = discounted_reward_exact(w, env, 0, 0, DiscountSpec(g))
            assert exact == pytest.approx(1.0 / (1.0 - g), abs=1e-12)

    def test_transient_then_cycle_closed_form(self):
        # state 0 pays 3 and moves to an absorbing state paying 4
        states = BIT
        one = FiniteSet(1)
        transition = TableFunction((states, one), (states,), ((1,), (1,)))
        observation = TableFunction((states, one), (one,), ((0,), (0,)))
        env = make_single_env(states, transition, observation, (3.0, 4.0))
        w = constant_strategy()
        for g in GAMMAS:
            exact = discounted_reward_exact(w, env, 0, 0, DiscountSpec(g))
            assert exact == pytest.approx(3.0 + 4.0 * g / (1.0 - g), abs=1e-9)
        assert discounted_reward_exact(w, env, 0, 0, DiscountSpec(0.25)) == (
            pytest.approx(3.0 + 4.0 / 3.0, abs=1e-12)
        )

    def test_gamma_zero_returns_the_first_reward(self):
        rng = random.Random(9)
        for _ in range(20):
            agent = make_agent(rng, 2, 2, 2)
            env = make_env(rng, 3, 2, 2)
            w = agent_to_pf(agent)
            first = rollout(w, env, 0, 0, 1).rewards[0]
            assert discounted_reward_exact(w, env, 0, 0, DiscountSpec(0.0)) == first
            value, bound = discounted_reward_truncated(
                w, env, 0, 0, DiscountSpec(0.0), 5
            )
            assert value == first
            assert bound == 0.0

    def test_truncation_error_within_bound(self):
        rng = random.Random(10)
        for _ in range(125):
            agent = make_agent(rng, rng.randrange(1, 4), 2, 2)
            env = make_env(rng, rng.randrange(1, 5), 2, 2)
            w = agent_to_pf(agent)
            for g in GAMMAS:
                gamma = DiscountSpec(g)
                exact = discounted_reward_exact(w, env, 0, 0, gamma)
                for steps in (1, 3, 17):
                    value, bound = discounted_reward_truncated(
                        w, env, 0, 0, gamma, steps
                    )
                    assert abs(exact - value) <= bound + 1e-9

    def test_truncated_converges_to_exact(self):
        rng = random.Random(11)
        agent = make_agent(rng, 3, 2, 2)
        env = make_env(rng, 4, 2, 2)
        w = agent_to_pf(agent)
        gamma = DiscountSpec(0.5)
        exact = discounted_reward_exact(w, env, 0, 0, gamma)
        value, bound = discounted_reward_truncated(w, env, 0, 0, gamma, 64)
        assert bound < 1e-12
        assert value == pytest.approx(exact, abs=1e-12)

    def test_steps_must_be_positive(self):
        env = constant_reward_env(1.0)
        with pytest.raises(PreconditionError):
            discounted_reward_truncated(constant_strategy(), env, 0, 0, 0.5, 0)

    def test_accepts_bare_floats(self):
        env = constant_reward_env(2.0)
        w = constant_strategy()
        assert discounted_reward_exact(w, env, 0, 0, 0.5) == pytest.approx(4.0)
        from hopf import InvariantViolation

        with pytest.raises(InvariantViolation):
            discounted_reward_exact(w, env, 0, 0, 1.0)


class TestPerformance:
    def test_point_mass_matches_exact(self):
        rng = random.Random(12)
        agent = make_agent(rng, 2, 2, 2)
        env = make_env(rng, 3, 2, 2)
        w = agent_to_pf(agent)
        gamma = DiscountSpec(0.7)
        for s in range(3):
            mu = InitialDistribution.point(3, s)
            assert performance(w, env, 0, mu, gamma) == pytest.approx(
                discounted_reward_exact(w, env, 0, s, gamma)
            )

    def test_convex_combination(self):
        rng = random.Random(13)
        agent = make_agent(rng, 2, 2, 2)
        env = make_env(rng, 2, 2, 2)
        w = agent_to_pf(agent)
        gamma = DiscountSpec(0.3)
        mu = InitialDistribution((0.25, 0.75))
        want = 0.25 * discounted_reward_exact(
            w, env, 0, 0, gamma
        ) + 0.75 * discounted_reward_exact(w, env, 0, 1, gamma)
        assert performance(w, env, 0, mu, gamma) == pytest.approx(want, abs=1e-12)

    def test_distribution_length_checked(self):
        rng = random.Random(14)
        agent = make_agent(rng, 2, 2, 2)
        env = make_env(rng, 3, 2, 2)
        w = agent_to_pf(agent)
        with pytest.raises(AxisMismatch):
            performance(w, env, 0, InitialDistribution.uniform(2), DiscountSpec(0.5))
