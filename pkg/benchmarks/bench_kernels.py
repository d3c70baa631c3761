"""Benchmark: compiled kernel backend vs the numpy/scipy fallback.

Times the four hot operations (filter step, observation predictive,
belief-space q sweep, point-based backup) on real task models at three
sizes, plus an end-to-end point-based solve with either backend driving
the solver. Run from the repository root:

    python3 benchmarks/bench_kernels.py [--quick]
"""
import argparse
import time

import numpy as np

import atpo.kernels as kernels
from atpo.kernels import prep, pyref
from atpo.envs.grid import GridSpec
from atpo.envs.night_pursuit import NightPursuitTask, build_night_pursuit
from atpo.envs.overcooked import OvercookedTask, build_overcooked
from atpo.harness.runner import solve_task
from atpo.harness.config import SolverConfig
from atpo.perseus import perseus_solve, sample_belief_set

try:
    from atpo.kernels import _fast
except ImportError:
    _fast = None


def build_models(quick):
    models = {}
    grid3 = GridSpec(width=3, height=3, epsilon=0.3)
    models["night 3x3 (81 states)"] = build_night_pursuit(
        NightPursuitTask(prey_positions=((2, 0), (0, 2)), grid=grid3)
    )[0]
    if not quick:
        grid5 = GridSpec(width=5, height=5, epsilon=0.3)
        models["night 5x5 (625 states)"] = build_night_pursuit(
            NightPursuitTask(prey_positions=((4, 0), (0, 4)), grid=grid5)
        )[0]
        models["kitchen (1404 states)"] = build_overcooked(
            OvercookedTask(ad_hoc_role="helper", teammate_type="greedy")
        )[0]
    return models


def time_op(fn, reps):
    fn()  # warmup
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps


def bench_model(name, pomdp, reps):
    ops = prep.ModelOps(
        pomdp.base.transition, pomdp.observation, pomdp.base.reward, pomdp.base.discount
    )
    rng = np.random.default_rng(0)
    b = np.asarray(pomdp.initial_belief, dtype=np.float64)
    # spread the belief a little so the sweep is not a one-hot special case
    for _ in range(3):
        pz = pyref.observation_probs(ops, b, 0)
        z = int(np.argmax(pz))
        nxt, rho = pyref.belief_update(ops, b, 0, z)
        if rho > 0:
            b = nxt
    policy, _, _ = solve_task(pomdp, SolverConfig(num_beliefs=40, max_rounds=30))
    vectors = policy.vectors
    z0 = int(np.argmax(pyref.observation_probs(ops, b, 0)))

    cases = {
        "belief_update": lambda impl: impl.belief_update(ops, b, 0, z0),
        "observation_probs": lambda impl: impl.observation_probs(ops, b, 0),
        "q_values": lambda impl: impl.q_values(ops, vectors, b),
        "backup": lambda impl: impl.backup(ops, vectors, b),
    }
    print(f"\n{name}  ({vectors.shape[0]} alpha vectors)")
    print(f"  {'operation':<20}{'python':>12}{'compiled':>12}{'speedup':>9}")
    for label, call in cases.items():
        py = time_op(lambda: call(pyref), reps)
        if _fast is None:
            print(f"  {label:<20}{py * 1e6:>10.1f}us{'-':>12}{'-':>9}")
            continue
        fast = time_op(lambda: call(_fast), reps)
        print(
            f"  {label:<20}{py * 1e6:>10.1f}us{fast * 1e6:>10.1f}us{py / fast:>8.1f}x"
        )


def bench_solve(quick):
    grid = GridSpec(width=3, height=3, epsilon=0.3)
    pomdp, _ = build_night_pursuit(NightPursuitTask(prey_positions=((2, 0), (0, 2)), grid=grid))
    beliefs = sample_belief_set(pomdp, 90, seed=0)
    rounds = 20 if quick else 60

    def solve_with(impl):
        saved = {n: getattr(kernels, n) for n in ("belief_update", "observation_probs", "q_values", "backup")}
        for n in saved:
            setattr(kernels, n, getattr(impl, n))
        try:
            start = time.perf_counter()
            perseus_solve(pomdp, beliefs, improvement_tol=0.0, max_rounds=rounds, seed=0)
            return time.perf_counter() - start
        finally:
            for n, fn in saved.items():
                setattr(kernels, n, fn)

    py = solve_with(pyref)
    line = f"\npoint-based solve, {rounds} rounds, 90 beliefs, 81 states: python {py:.2f}s"
    if _fast is not None:
        fast = solve_with(_fast)
        line += f", compiled {fast:.2f}s ({py / fast:.1f}x)"
    print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="small models, fewer reps")
    args = parser.parse_args()
    print(f"active backend at import: {kernels.BACKEND}")
    if _fast is None:
        print("compiled extension unavailable; timing the fallback only")
    reps = 50 if args.quick else 300
    for name, pomdp in build_models(args.quick).items():
        bench_model(name, pomdp, reps)
    bench_solve(args.quick)


if __name__ == "__main__":
    main()
