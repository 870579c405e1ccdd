"""Time the Q-learning episode kernel on the compiled and pure-Python backends.

    python benchmarks/bench_kernels.py [--episodes N] [--repeat R] [--policy P]

Reports the kernel alone (random draws prepared once, outside the timer)
and end-to-end ``train`` (which includes drawing the per-episode streams).
Both backends must produce bit-identical Q-tables.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from smpctune import kernels
from smpctune.agent import Hyperparams, _episode_draws, train
from smpctune.environment import N_ACTIONS, ParamGrid, SMPCEnv


def _best_of(repeat: int, fn) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_only(env: SMPCEnv, hp: Hyperparams, backend: str, repeat: int):
    starts, u, ra = _episode_draws(env, 0, range(hp.episodes), hp.horizon)
    T, R = env.transition_table(), env.reward_vector()
    eps = np.array([hp.epsilon(e) for e in range(hp.episodes)])
    alpha = np.array([hp.alpha(e) for e in range(hp.episodes)])
    run = kernels.get_backend(backend)
    out = {}

    def once():
        q = np.zeros((env.n_states, N_ACTIONS))
        run(q, T, R, starts, u, ra, eps, alpha, hp.gamma, hp.policy == "softmax", hp.tau,
            np.zeros(hp.episodes), np.zeros(hp.episodes, dtype=np.int64),
            np.zeros(env.n_states, dtype=np.int64))
        out["q"] = q

    return _best_of(repeat, once), out["q"]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--policy", choices=("eps_greedy", "softmax"), default="eps_greedy")
    args = ap.parse_args(argv)

    env = SMPCEnv()
    hp = Hyperparams(episodes=args.episodes, policy=args.policy)
    steps = hp.episodes * hp.horizon
    print(f"{env.n_states} states, {hp.episodes} episodes x {hp.horizon} steps, {hp.policy}")
    tables = {}
    for backend in kernels.AVAILABLE:
        secs, tables[backend] = kernel_only(env, hp, backend, args.repeat)
        e2e = _best_of(args.repeat, lambda: train(env, hp, 0, backend=backend))
        print(f"{backend:>7}: kernel {secs:7.3f} s ({steps / secs / 1e6:6.2f} M steps/s)"
              f"   train {e2e:7.3f} s")
    if len(tables) == 2:
        print(f"bit-identical Q-tables: {np.array_equal(tables['cython'], tables['python'])}")
    else:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
