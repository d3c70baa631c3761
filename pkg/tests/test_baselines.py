"""Baseline agents: behavior contracts, information hygiene, determinism."""
import numpy as np
import pytest

from atpo.agent import TaskEntry, TaskLibrary
from atpo.baselines import (
    AssistantAgent,
    AtpoAgent,
    BopaAgent,
    OmniscientPerseusAgent,
    OmniscientVIAgent,
    RandomAgent,
    TransitionRecord,
    assistant_agent,
    bopa_agent,
    omniscient_perseus_agent,
    omniscient_vi_agent,
    random_agent,
)
from atpo.envs.grid import GridSpec
from atpo.envs.night_pursuit import NightPursuitTask, build_night_pursuit
from atpo.envs.overcooked import OvercookedTask, build_overcooked
from atpo.harness.runner import run_trial, solve_library, solve_task
from atpo.harness.config import DomainConfig, SolverConfig
from atpo.mdp import ModelError, StatePolicy, TabularMDP, greedy_policy, value_iteration
from atpo.pomdp import AlphaVectorPolicy, TabularPOMDP, greedy_belief_policy

from oracles import random_pomdp


def solved_entry(pomdp, label="t"):
    policy, mdp_value, mdp_policy = solve_task(pomdp, SolverConfig(num_beliefs=30, max_rounds=60))
    return TaskEntry(
        pomdp=pomdp, policy=policy, label=label, mdp_value=mdp_value, mdp_policy=mdp_policy
    )


def make_pomdp(T, O, R, b0, discount=0.95):
    base = TabularMDP(transition=np.asarray(T, float), reward=np.asarray(R, float), discount=discount)
    return TabularPOMDP(base=base, observation=np.asarray(O, float), initial_belief=np.asarray(b0, float))


def identity_obs_pomdp(rng, X=4, A=2):
    T = rng.random((A, X, X)) + 0.1
    T /= T.sum(axis=2, keepdims=True)
    O = np.tile(np.eye(X), (A, 1, 1))
    R = rng.standard_normal((X, A))
    b0 = np.zeros(X)
    b0[0] = 1.0
    return make_pomdp(T, O, R, b0)


class TestRandomAgent:
    def test_uniform_frequencies(self):
        agent = random_agent(5)
        agent.reset()
        rng = np.random.default_rng(0)
        draws = np.array([agent.act(None, rng) for _ in range(10_000)])
        counts = np.bincount(draws, minlength=5)
        # within 3 sigma of the binomial expectation
        sigma = np.sqrt(10_000 * 0.2 * 0.8)
        assert np.all(np.abs(counts - 2000) < 3 * sigma)

    def test_seed_deterministic(self):
        agent = random_agent(4)
        one = [agent.act(None, np.random.default_rng(7)) for _ in range(1)]
        two = [agent.act(None, np.random.default_rng(7)) for _ in range(1)]
        assert one == two

    def test_actions_in_range(self):
        agent = random_agent(3)
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            assert 0 <= agent.act(None, rng) < 3


class TestOmniscientVI:
    def test_deterministic_given_states(self):
        rng = np.random.default_rng(2)
        pomdp = identity_obs_pomdp(rng)
        vf = value_iteration(pomdp.base, tol=1e-10)
        agent = OmniscientVIAgent(greedy_policy(vf), deterministic=True)
        agent.reset()
        seq = [agent.act(x, np.random.default_rng(0)) for x in (0, 1, 2, 3, 0, 1)]
        assert seq == [agent.act(x, np.random.default_rng(99)) for x in (0, 1, 2, 3, 0, 1)]

    def test_factory_requires_solved_policy(self):
        entry = TaskEntry(pomdp=None, policy=None, label="x")
        with pytest.raises(ModelError):
            omniscient_vi_agent(entry)


class TestOmniscientPerseus:
    def test_matches_vi_distribution_at_point_beliefs(self):
        rng = np.random.default_rng(3)
        pomdp = identity_obs_pomdp(rng)
        entry = solved_entry(pomdp)
        agent = omniscient_perseus_agent(entry)
        agent.reset()
        # identity observations keep the belief a point mass; compare the
        # greedy action set against the MDP policy at each visited state
        sim_state = 0
        act_rng = np.random.default_rng(4)
        for _ in range(20):
            a = agent.act(None, act_rng)
            support = np.flatnonzero(entry.mdp_policy.probs[sim_state])
            assert a in support
            nxt = int(act_rng.choice(pomdp.num_states, p=pomdp.base.transition[a, sim_state]))
            agent.observe(TransitionRecord(own_action=a, observation=nxt))
            sim_state = nxt

    def test_impossible_observation_raises(self):
        T = np.ones((1, 1, 1))
        O = np.array([[[1.0, 0.0]]])
        pomdp = make_pomdp(T, O, [[0.0]], [1.0])
        policy = AlphaVectorPolicy(vectors=np.zeros((1, 1)), actions=np.zeros(1))
        agent = OmniscientPerseusAgent(pomdp, policy)
        agent.reset()
        with pytest.raises(ModelError):
            agent.observe(TransitionRecord(own_action=0, observation=1))


def night_library(eps=0.3, preys_list=(((2, 0), (0, 2)), ((2, 0), (2, 1)))):
    grid_tasks = []
    for preys in preys_list:
        task = NightPursuitTask(
            prey_positions=preys, grid=GridSpec(width=3, height=3, epsilon=eps)
        )
        pomdp, sim = build_night_pursuit(task)
        entry = solved_entry(pomdp, label=task.label)
        grid_tasks.append((entry, sim))
    library = TaskLibrary(tasks=[e for e, _ in grid_tasks])
    return library, [s for _, s in grid_tasks]


class TestAtpoPerseusCollapse:
    def test_single_task_library_equals_perseus_agent(self):
        library, sims = night_library(preys_list=(((2, 0), (0, 2)),))
        sim = sims[0]
        for trial in range(6):
            actions = {}
            for name in ("atpo", "perseus"):
                rng = np.random.default_rng((123, trial))
                agent = (
                    AtpoAgent(library) if name == "atpo" else omniscient_perseus_agent(library.tasks[0])
                )
                agent.reset()
                state = sim.reset()
                seq = []
                for _ in range(30):
                    a = agent.act(None, rng)
                    seq.append(a)
                    state, z, r, done, _ = sim.step(state, a, rng)
                    agent.observe(TransitionRecord(own_action=a, observation=z))
                    if done:
                        break
                actions[name] = seq
            assert actions["atpo"] == actions["perseus"]


class TestBopa:
    def test_point_mass_beliefs_under_identity_observations(self):
        rng = np.random.default_rng(5)
        pomdp = identity_obs_pomdp(rng)
        entry = solved_entry(pomdp)
        library = TaskLibrary(tasks=[entry])
        agent = bopa_agent(library)
        agent.reset()
        act_rng = np.random.default_rng(6)
        state = 0
        for _ in range(15):
            a = agent.act(None, act_rng)
            # single task: the action comes from the task's MDP policy at
            # the most-likely (here: exactly known) state
            assert a in np.flatnonzero(entry.mdp_policy.probs[state])
            nxt = int(act_rng.choice(pomdp.num_states, p=pomdp.base.transition[a, state]))
            agent.observe(TransitionRecord(own_action=a, observation=nxt))
            assert np.max(agent.beliefs[0]) == pytest.approx(1.0)
            state = nxt
        assert agent.posterior == pytest.approx([1.0])

    def test_zero_transition_likelihood_resets_uniform(self):
        # isolated self-looping states: an observation drags the belief
        # argmax from state 0 to state 1, a jump the kernel forbids
        T = np.zeros((1, 2, 2))
        T[0, 0, 0] = 1.0
        T[0, 1, 1] = 1.0
        O = np.array([[[0.9, 0.1], [0.1, 0.9]]])
        tasks = []
        for label in ("a", "b"):
            pomdp = make_pomdp(T, O, np.zeros((2, 1)), [0.6, 0.4])
            policy = AlphaVectorPolicy(vectors=np.zeros((1, 2)), actions=np.zeros(1))
            tasks.append(
                TaskEntry(
                    pomdp=pomdp,
                    policy=policy,
                    label=label,
                    mdp_policy=StatePolicy(probs=np.ones((2, 1))),
                )
            )
        library = TaskLibrary(tasks=tasks)
        agent = bopa_agent(library)
        agent.reset()
        agent.posterior = np.array([0.9, 0.1])
        agent.observe(TransitionRecord(own_action=0, observation=1))
        assert np.argmax(agent.beliefs[0]) == 1  # the argmax did jump
        assert agent.dead_belief_resets == 0
        assert agent.posterior == pytest.approx([0.5, 0.5])
        assert agent.zero_likelihood_resets == 1

    def test_requires_mdp_policies(self):
        rng = np.random.default_rng(7)
        pomdp = identity_obs_pomdp(rng)
        entry = TaskEntry(pomdp=pomdp, policy=None, label="x")
        with pytest.raises(ModelError):
            bopa_agent(TaskLibrary(tasks=[entry]))


def overcooked_library(role="helper", types=("greedy", "dummy")):
    entries, sims = [], []
    for t in types:
        task = OvercookedTask(ad_hoc_role=role, teammate_type=t)
        pomdp, sim = build_overcooked(task)
        policy, mdp_value, mdp_policy = solve_task(pomdp, SolverConfig())
        entries.append(
            TaskEntry(
                pomdp=pomdp,
                policy=policy,
                label=task.label,
                mdp_value=mdp_value,
                mdp_policy=mdp_policy,
                teammate_table=sim.teammate_table,
            )
        )
        sims.append(sim)
    return TaskLibrary(tasks=entries), sims


class TestAssistant:
    def test_disjoint_teammate_actions_identify_in_one_step(self):
        library, sims = overcooked_library()
        agent = assistant_agent(library)
        agent.reset()
        sim = sims[0]
        state = sim.reset()
        rng = np.random.default_rng(8)
        # choose a cue where greedy and dummy react differently to noop
        x = sim.state_index(state)
        a_greedy = library.tasks[0].teammate_table[x, 2]  # ad hoc noop
        a_dummy = library.tasks[1].teammate_table[x, 2]
        assert a_greedy != a_dummy
        agent.observe(
            TransitionRecord(own_action=2, prev_state=x, teammate_action=int(a_greedy))
        )
        assert agent.posterior == pytest.approx([1.0, 0.0])

    def test_identical_teammates_freeze_posterior(self):
        library, sims = overcooked_library(types=("greedy", "greedy"))
        # relabel to satisfy uniqueness of labels
        library.tasks[1].label = "copy"
        agent = assistant_agent(library)
        agent.reset()
        sim = sims[0]
        state = sim.reset()
        rng = np.random.default_rng(9)
        for _ in range(10):
            x = sim.state_index(state)
            a = agent.act(x, rng)
            state, z, r, done, ta = sim.step(state, a, rng)
            agent.observe(TransitionRecord(own_action=a, prev_state=x, teammate_action=ta))
            assert agent.posterior == pytest.approx([0.5, 0.5])

    def test_requires_teammate_tables(self):
        rng = np.random.default_rng(10)
        pomdp = identity_obs_pomdp(rng)
        entry = solved_entry(pomdp)
        with pytest.raises(ModelError):
            assistant_agent(TaskLibrary(tasks=[entry]))


class TestInformationHygiene:
    def test_views_exclude_privileged_fields(self):
        assert "prev_state" not in AtpoAgent.view
        assert "teammate_action" not in AtpoAgent.view
        assert "prev_state" not in BopaAgent.view
        assert "teammate_action" not in BopaAgent.view
        assert "observation" not in OmniscientVIAgent.view

    def test_partial_observers_run_on_stripped_records(self):
        library, sims = night_library()
        sim = sims[0]
        rng = np.random.default_rng(11)
        for agent in (AtpoAgent(library), bopa_agent(library)):
            agent.reset()
            state = sim.reset()
            for _ in range(10):
                a = agent.act(None, rng)
                state, z, r, done, _ = sim.step(state, a, rng)
                # privileged fields deliberately absent
                agent.observe(TransitionRecord(own_action=a, observation=z))
                if done:
                    state = sim.reset()
                    agent.reset()

    def test_all_agents_emit_actions_in_range(self):
        library, sims = night_library()
        sim = sims[0]
        agents = {
            "random": RandomAgent(5),
            "vi": omniscient_vi_agent(library.tasks[0]),
            "perseus": omniscient_perseus_agent(library.tasks[0]),
            "atpo": AtpoAgent(library),
            "bopa": bopa_agent(library),
        }
        for name, agent in agents.items():
            rng = np.random.default_rng(12)
            agent.reset()
            state = sim.reset()
            for _ in range(200):
                cue = sim.state_index(state) if agent.observes_state else None
                a = agent.act(cue, rng)
                assert 0 <= a < 5, name
                state, z, r, done, ta = sim.step(state, a, rng)
                record = TransitionRecord(
                    own_action=a,
                    observation=z if "observation" in agent.view else None,
                    prev_state=cue if "prev_state" in agent.view else None,
                    teammate_action=ta if "teammate_action" in agent.view else None,
                )
                agent.observe(record)
                if done:
                    state = sim.reset()
                    agent.reset()
