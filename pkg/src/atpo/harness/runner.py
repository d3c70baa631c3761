"""Experiment engine: solve-and-cache task libraries, run seeded trials,
aggregate metrics, and export deterministic CSVs.

Every trial owns an rng stream derived from (seed, point, task, trial), so
execution order cannot change results; wall-clock timings go to a separate
timings export to keep the result CSVs byte-reproducible.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..agent import TaskEntry, TaskLibrary, TraceRecord, atpo_loss, posterior_entropy, verify_bound
from ..baselines import (
    AssistantAgent,
    AtpoAgent,
    BopaAgent,
    OmniscientPerseusAgent,
    OmniscientVIAgent,
    RandomAgent,
    TransitionRecord,
)
from ..envs import (
    GridSpec,
    NightPursuitTask,
    OvercookedTask,
    PursuitPOTask,
    build_night_pursuit,
    build_overcooked,
    build_pursuit_po,
)
from ..mdp import ModelError, greedy_policy, value_iteration
from ..perseus import default_num_beliefs, perseus_solve, sample_belief_set
from ..pomdp import AlphaVectorPolicy
from . import cache
from .config import ConfigError, config_hash


@dataclass
class SolvedTask:
    entry: TaskEntry
    sim: object
    spec: object
    group: str


@dataclass
class SolvedDomain:
    domain: object
    solver: object
    tasks: list
    groups: dict
    cache_key: str
    setup_seconds: list

    def library_for(self, task_index):
        group = self.tasks[task_index].group
        members = self.groups[group]
        entries = [self.tasks[i].entry for i in members]
        return TaskLibrary(tasks=entries), members.index(task_index)

    def sublibrary(self, member_indices, target_index):
        entries = [self.tasks[i].entry for i in member_indices]
        return TaskLibrary(tasks=entries), list(member_indices).index(target_index)


def build_task(domain_cfg, spec):
    """Instantiate one task spec: (label, group, pomdp, sim, teammate table)."""
    name = domain_cfg.name
    if name == "night_pursuit":
        grid = GridSpec(
            width=domain_cfg.width, height=domain_cfg.height, epsilon=domain_cfg.epsilon
        )
        task = NightPursuitTask(prey_positions=tuple(tuple(p) for p in spec), grid=grid)
        pomdp, sim = build_night_pursuit(task)
        return task.label, "all", pomdp, sim, None
    if name == "pursuit_po":
        grid = GridSpec(
            width=domain_cfg.width, height=domain_cfg.height, toroidal=True
        )
        task = PursuitPOTask(teammate_type=spec, grid=grid)
        pomdp, sim = build_pursuit_po(task)
        return task.label, "all", pomdp, sim, None
    if name == "overcooked":
        task = OvercookedTask(ad_hoc_role=spec["role"], teammate_type=spec["teammate"])
        pomdp, sim = build_overcooked(task)
        return task.label, task.ad_hoc_role, pomdp, sim, sim.teammate_table
    raise ConfigError(f"unknown domain {name!r}")


def is_fully_observable(pomdp):
    if pomdp.num_observations != pomdp.num_states:
        return False
    eye = np.eye(pomdp.num_states)
    return all(np.array_equal(pomdp.observation[a], eye) for a in range(pomdp.num_actions))


def solve_task(pomdp, solver_cfg):
    """Solve one task model: alpha-vector value function + MDP quantities.

    Fully observable tasks are solved exactly by value iteration (the alpha
    set is the optimal q columns); partially observable ones run the
    point-based solver over a sampled belief set.
    """
    mdp_value = value_iteration(pomdp.base, tol=1e-8)
    mdp_policy = greedy_policy(mdp_value)
    if is_fully_observable(pomdp):
        policy = AlphaVectorPolicy(
            vectors=np.ascontiguousarray(mdp_value.q.T), actions=np.arange(pomdp.num_actions)
        )
    else:
        n = solver_cfg.num_beliefs or default_num_beliefs(pomdp.num_states)
        beliefs = sample_belief_set(pomdp, n, seed=solver_cfg.seed)
        policy = perseus_solve(
            pomdp,
            beliefs,
            improvement_tol=solver_cfg.improvement_tol,
            max_rounds=solver_cfg.max_rounds,
            seed=solver_cfg.seed,
        )
    return policy, mdp_value, mdp_policy


def solve_library(domain_cfg, solver_cfg, cache_root=None):
    """Build and solve every task of a domain config, with a disk cache."""
    specs = domain_cfg.tasks
    built = [build_task(domain_cfg, spec) for spec in specs]
    labels = [b[0] for b in built]
    if len(set(labels)) != len(labels):
        raise ConfigError("task labels must be unique within a library")
    key = config_hash(domain_cfg, solver_cfg)

    solved = []
    setup = []
    if cache_root is not None and cache.is_complete(cache_root, key, labels):
        for label, group, pomdp, sim, table in built:
            pomdp_c, policy, mdp_value, mdp_policy, table_c = cache.load_task(
                cache_root, key, label
            )
            entry = TaskEntry(
                pomdp=pomdp_c,
                policy=policy,
                label=label,
                mdp_value=mdp_value,
                mdp_policy=mdp_policy,
                teammate_table=table_c,
            )
            solved.append(SolvedTask(entry=entry, sim=sim, spec=label, group=group))
        setup = cache.setup_seconds(cache_root, key)
    else:
        for (label, group, pomdp, sim, table), spec in zip(built, specs):
            start = time.perf_counter()
            policy, mdp_value, mdp_policy = solve_task(pomdp, solver_cfg)
            setup.append(time.perf_counter() - start)
            entry = TaskEntry(
                pomdp=pomdp,
                policy=policy,
                label=label,
                mdp_value=mdp_value,
                mdp_policy=mdp_policy,
                teammate_table=table,
            )
            solved.append(SolvedTask(entry=entry, sim=sim, spec=spec, group=group))
        if cache_root is not None:
            cache.store(cache_root, key, solved, setup)

    groups = {}
    for i, task in enumerate(solved):
        groups.setdefault(task.group, []).append(i)
    return SolvedDomain(
        domain=domain_cfg,
        solver=solver_cfg,
        tasks=solved,
        groups=groups,
        cache_key=key,
        setup_seconds=setup,
    )


def make_agent(name, library, target_local, num_actions):
    if name == "vi":
        return OmniscientVIAgent(library.tasks[target_local].mdp_policy)
    if name == "perseus":
        entry = library.tasks[target_local]
        return OmniscientPerseusAgent(entry.pomdp, entry.policy)
    if name == "atpo":
        return AtpoAgent(library)
    if name == "bopa":
        return BopaAgent(library)
    if name == "assistant":
        return AssistantAgent(library)
    if name == "random":
        return RandomAgent(num_actions)
    raise ConfigError(f"unknown agent {name!r}")


@dataclass
class TrialResult:
    """One trial's record; lengths never exceed the horizon."""

    agent: str
    point: str
    target_label: str
    trial_index: int
    steps: int
    completed: bool
    cumulative_reward: float
    soups: int
    entropies: list
    identified: bool | None
    bound_point_holds: bool | None
    bound_uniform_holds: bool | None
    library_labels: list
    decision_seconds_mean: float = 0.0
    trace: object = None

    @property
    def final_entropy(self):
        return self.entropies[-1] if self.entropies else None


def run_trial(agent_name, library, target_local, sim, horizon, rng, record_trace=True):
    """Run one seeded trial of `agent_name` against the target task."""
    entry = library.tasks[target_local]
    agent = make_agent(agent_name, library, target_local, library.num_actions)
    agent.reset()
    state = sim.reset()

    tracked = agent_name in ("atpo", "bopa", "assistant")
    is_atpo = agent_name == "atpo"
    trace = None
    if is_atpo and record_trace:
        trace = TraceRecord(
            task_labels=library.labels,
            target_index=target_local,
            discount=entry.pomdp.base.discount,
            r_max=sim.reward_bound,
        )

    entropies = []
    if tracked:
        entropies.append(posterior_entropy(agent.posterior))
    total_reward = 0.0
    soups = 0
    steps = 0
    completed = False
    decision_time = 0.0
    for _ in range(horizon):
        cue = sim.state_index(state) if agent.observes_state else None
        losses = atpo_loss(agent.state, library, target_local) if trace is not None else None
        posterior_before = agent.state.posterior.copy() if trace is not None else None
        t0 = time.perf_counter()
        action = agent.act(cue, rng)
        decision_time += time.perf_counter() - t0
        mixed_policy = agent.state.last_mixed_policy if trace is not None else None
        nxt, z, reward, done, teammate_action = sim.step(state, action, rng)
        record = TransitionRecord(
            own_action=action,
            observation=z if "observation" in agent.view else None,
            prev_state=cue if "prev_state" in agent.view else None,
            teammate_action=teammate_action if "teammate_action" in agent.view else None,
        )
        agent.observe(record)
        if trace is not None:
            trace.append(action, z, posterior_before, mixed_policy, losses, reward)
        if tracked:
            entropies.append(posterior_entropy(agent.posterior))
        total_reward += reward
        soups += int(reward == 15.0)
        steps += 1
        state = nxt
        if done:
            completed = True
            break

    identified = None
    if tracked:
        identified = bool(int(np.argmax(agent.posterior)) == target_local)
    bound_point = bound_uniform = None
    if trace is not None and len(trace):
        k = len(library)
        point_mass = np.zeros(k)
        point_mass[target_local] = 1.0
        bound_point = verify_bound(trace, point_mass).holds
        bound_uniform = verify_bound(trace, np.full(k, 1.0 / k)).holds
    return TrialResult(
        agent=agent_name,
        point="",
        target_label=entry.label,
        trial_index=0,
        steps=steps,
        completed=completed,
        cumulative_reward=total_reward,
        soups=soups,
        entropies=entropies,
        identified=identified,
        bound_point_holds=bound_point,
        bound_uniform_holds=bound_uniform,
        library_labels=library.labels,
        decision_seconds_mean=decision_time / max(steps, 1),
        trace=trace,
    )


def night_pursuit_pool(domain_cfg, pool_size, seed):
    """Deterministic pool of distinct prey-pair tasks (start corners free)."""
    grid = GridSpec(width=domain_cfg.width, height=domain_cfg.height, epsilon=domain_cfg.epsilon)
    from ..envs.night_pursuit import start_cells

    excluded = set(start_cells(grid))
    cells = [grid.cell(i) for i in range(grid.num_cells) if grid.cell(i) not in excluded]
    pairs = [
        [list(cells[i]), list(cells[j])]
        for i in range(len(cells))
        for j in range(i + 1, len(cells))
    ]
    order = np.random.default_rng(seed).permutation(len(pairs))
    return [pairs[i] for i in order[: min(pool_size, len(pairs))]]


def domain_for_point(config, value):
    """Domain config at one sweep point, with the pool as its task list."""
    domain = config.domain
    if config.sweep.axis == "states":
        side = int(round(float(value) ** 0.25))
        if (side * side) ** 2 != int(value):
            raise ConfigError(f"states value {value} is not a square grid size")
        domain = replace(domain, width=side, height=side)
    elif config.sweep.axis == "epsilon":
        domain = replace(domain, epsilon=float(value))
    if domain.name == "night_pursuit":
        pool = night_pursuit_pool(domain, config.sweep.pool_size, config.seed)
    elif domain.name == "pursuit_po":
        from ..envs.pursuit_po import TEAMMATE_TYPES

        pool = list(TEAMMATE_TYPES)[: config.sweep.pool_size]
    else:
        raise ConfigError("sweeps cover the pursuit domains only")
    return replace(domain, tasks=pool)


def run_experiment(config, cache_root=None, progress=None):
    """Run the configured experiment; returns (trial results, solved domains)."""
    results = []
    solved_domains = {}

    if config.sweep.axis == "none":
        solved = solve_library(config.domain, config.solver, cache_root)
        solved_domains["baseline"] = solved
        targets = (
            range(len(solved.tasks)) if config.target_tasks == "all" else config.target_tasks
        )
        for target in targets:
            library, target_local = solved.library_for(target)
            sim = solved.tasks[target].sim
            for trial in range(config.trials_per_task):
                rng = np.random.default_rng((config.seed, 0, target, trial))
                res = run_trial(
                    config.agent,
                    library,
                    target_local,
                    sim,
                    config.domain.horizon,
                    rng,
                    record_trace=config.export_traces,
                )
                res.point = "baseline"
                res.trial_index = trial
                results.append(res)
                if progress:
                    progress(res)
        return results, solved_domains

    for point_idx, value in enumerate(config.sweep.values):
        domain_cfg = domain_for_point(config, value)
        solved = solve_library(domain_cfg, config.solver, cache_root)
        point = f"{config.sweep.axis}={value}"
        solved_domains[point] = solved
        library_size = (
            int(value) if config.sweep.axis == "num_tasks" else config.sweep.library_size
        )
        library_size = min(library_size, len(solved.tasks))
        if library_size < 1:
            raise ConfigError(f"sweep point {point}: empty library")
        for trial in range(config.trials_per_task):
            draw = np.random.default_rng((config.seed, point_idx, trial, 104729))
            members = sorted(draw.choice(len(solved.tasks), size=library_size, replace=False))
            target = int(members[draw.integers(library_size)])
            library, target_local = solved.sublibrary(members, target)
            sim = solved.tasks[target].sim
            rng = np.random.default_rng((config.seed, point_idx, target, trial))
            res = run_trial(
                config.agent,
                library,
                target_local,
                sim,
                domain_cfg.horizon,
                rng,
                record_trace=config.export_traces,
            )
            res.point = point
            res.trial_index = trial
            results.append(res)
            if progress:
                progress(res)
    return results, solved_domains


def summarize(results, metric):
    """Per (agent, point) mean with a normal-approximation 95% interval."""
    getter = {
        "steps": lambda r: float(r.steps),
        "soups": lambda r: float(r.soups),
        "reward": lambda r: r.cumulative_reward,
        "final_entropy": lambda r: r.final_entropy,
        "identified": lambda r: None if r.identified is None else float(r.identified),
    }[metric]
    groups = {}
    for r in results:
        value = getter(r)
        if value is None:
            continue
        groups.setdefault((r.agent, r.point), []).append(value)
    rows = []
    for (agent, point), values in sorted(groups.items()):
        arr = np.asarray(values)
        mean = float(arr.mean())
        half = 0.0 if len(arr) < 2 else float(1.96 * arr.std(ddof=1) / np.sqrt(len(arr)))
        rows.append(
            {
                "agent": agent,
                "point": point,
                "metric": metric,
                "mean": mean,
                "ci95_halfwidth": half,
                "n": len(arr),
            }
        )
    return rows


def entropy_curves(results):
    """Mean posterior entropy per timestep per (agent, point)."""
    groups = {}
    for r in results:
        if not r.entropies:
            continue
        groups.setdefault((r.agent, r.point), []).append(r.entropies)
    rows = []
    for (agent, point), curves in sorted(groups.items()):
        longest = max(len(c) for c in curves)
        for t in range(longest):
            at_t = np.asarray([c[t] for c in curves if len(c) > t])
            half = 0.0 if len(at_t) < 2 else float(1.96 * at_t.std(ddof=1) / np.sqrt(len(at_t)))
            rows.append(
                {
                    "agent": agent,
                    "point": point,
                    "t": t,
                    "mean_entropy": float(at_t.mean()),
                    "ci95_halfwidth": half,
                    "n": len(at_t),
                }
            )
    return rows


# --- deterministic CSV/JSON export ---


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[h]) for h in header))
    path.write_text("\n".join(lines) + "\n")


TRIAL_HEADER = [
    "agent",
    "point",
    "target_task",
    "trial",
    "steps",
    "completed",
    "cumulative_reward",
    "soups",
    "final_entropy",
    "identified",
    "bound_point_holds",
    "bound_uniform_holds",
]


def trials_rows(results):
    rows = []
    for r in results:
        rows.append(
            {
                "agent": r.agent,
                "point": r.point,
                "target_task": r.target_label,
                "trial": r.trial_index,
                "steps": r.steps,
                "completed": r.completed,
                "cumulative_reward": r.cumulative_reward,
                "soups": r.soups,
                "final_entropy": r.final_entropy,
                "identified": r.identified,
                "bound_point_holds": r.bound_point_holds,
                "bound_uniform_holds": r.bound_uniform_holds,
            }
        )
    return rows


def export_results(results, out_dir, metrics=("steps", "soups", "reward", "identified")):
    out = Path(out_dir)
    write_csv(out / "trials.csv", TRIAL_HEADER, trials_rows(results))
    summary_rows = []
    for metric in metrics:
        summary_rows.extend(summarize(results, metric))
    write_csv(
        out / "summary.csv",
        ["agent", "point", "metric", "mean", "ci95_halfwidth", "n"],
        summary_rows,
    )
    curve_rows = entropy_curves(results)
    if curve_rows:
        write_csv(
            out / "entropy_curves.csv",
            ["agent", "point", "t", "mean_entropy", "ci95_halfwidth", "n"],
            curve_rows,
        )


def export_timings(results, solved_domains, out_dir):
    """Wall-clock data kept apart from the deterministic result files."""
    out = Path(out_dir)
    rows = [
        {
            "agent": r.agent,
            "point": r.point,
            "target_task": r.target_label,
            "trial": r.trial_index,
            "decision_seconds_mean": r.decision_seconds_mean,
        }
        for r in results
    ]
    write_csv(
        out / "timings.csv",
        ["agent", "point", "target_task", "trial", "decision_seconds_mean"],
        rows,
    )
    setup_rows = []
    for point, solved in sorted(solved_domains.items()):
        for task, seconds in zip(solved.tasks, solved.setup_seconds):
            setup_rows.append(
                {"point": point, "task": task.entry.label, "setup_seconds": seconds}
            )
    write_csv(out / "setup_times.csv", ["point", "task", "setup_seconds"], setup_rows)


def trace_file_stem(result):
    safe_label = result.target_label.replace("/", "_").replace(" ", "_")
    return f"{result.agent}-{result.point}-{safe_label}-trial{result.trial_index}"


def export_trace(result, out_dir):
    """One CSV per recorded trial plus a JSON sidecar for the bound checker."""
    trace = result.trace
    out = Path(out_dir) / "traces"
    out.mkdir(parents=True, exist_ok=True)
    labels = trace.task_labels
    header = (
        ["t", "action", "observation", "pi_action_prob"]
        + [f"p__{l}" for l in labels]
        + ["entropy"]
        + [f"loss__{l}" for l in labels]
        + ["reward"]
    )
    rows = []
    for t in range(len(trace)):
        row = {
            "t": t,
            "action": trace.actions[t],
            "observation": trace.observations[t],
            "pi_action_prob": float(trace.mixed_policies[t][trace.actions[t]]),
            "entropy": posterior_entropy(trace.posteriors[t]),
            "reward": trace.rewards[t],
        }
        for k, label in enumerate(labels):
            row[f"p__{label}"] = float(trace.posteriors[t][k])
            loss = trace.losses[t][k]
            row[f"loss__{label}"] = None if np.isnan(loss) else float(loss)
        rows.append(row)
    stem = trace_file_stem(result)
    write_csv(out / f"{stem}.csv", header, rows)
    meta = {
        "task_labels": labels,
        "target_index": trace.target_index,
        "target_label": result.target_label,
        "discount": trace.discount,
        "r_max": trace.r_max,
    }
    (out / f"{stem}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_trace(csv_path):
    """Rebuild a TraceRecord from an exported trace CSV + sidecar."""
    csv_path = Path(csv_path)
    meta_path = csv_path.parent / (csv_path.name[: -len(".csv")] + ".meta.json")
    meta = json.loads(meta_path.read_text())
    lines = csv_path.read_text().splitlines()
    header = lines[0].split(",")
    idx = {name: i for i, name in enumerate(header)}
    labels = meta["task_labels"]
    trace = TraceRecord(
        task_labels=labels,
        target_index=int(meta["target_index"]),
        discount=float(meta["discount"]),
        r_max=float(meta["r_max"]),
    )
    for line in lines[1:]:
        parts = line.split(",")
        posterior = np.array([float(parts[idx[f"p__{l}"]]) for l in labels])
        losses = np.array(
            [
                float(parts[idx[f"loss__{l}"]]) if parts[idx[f"loss__{l}"]] != "" else np.nan
                for l in labels
            ]
        )
        trace.append(
            int(parts[idx["action"]]),
            int(parts[idx["observation"]]),
            posterior,
            np.array([float(parts[idx["pi_action_prob"]])]),
            losses,
            float(parts[idx["reward"]]),
        )
    return trace
