"""Experiment subcommands. Each writes its result files into ``out_dir``.

Everything except ``timing.csv`` and ``summary.txt`` (wall-clock
measurements) is a pure function of the configuration and seeds.
"""
from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agent import continuous_run, greedy_rollout, is_fixed_point, train
from ..baselines import grid_search, random_search
from ..errors import ConfigError
from .config import ExperimentConfig, dump_config

ORACLE_HEADER = ["state_id", "rounds", "block", "secbits", "reward", "time_ms", "bytes", "security_score"]
TRAIN_HEADER = ["seed", "episode", "epsilon", "alpha", "cum_reward", "final_state"]
COMPARE_HEADER = ["grid_states", "method", "seed", "evaluations", "distinct_states",
                  "best_reward", "regret", "final_state"]
TIMING_HEADER = ["grid_states", "method", "seed", "wall_time_ms"]
DRIFT_HEADER = ["seed", "episode", "drift_event", "latency_ms", "bandwidth_Bpms",
                "cum_reward", "greedy_state", "oracle_state"]

METHODS = ("qlearn", "grid", "random")


@dataclass
class RunRecord:
    method: str
    seed: int
    evaluations: int
    best_reward: float
    regret: float
    final_state: int
    wall_time_ms: float
    distinct_states: int
    grid_states: int


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _num(v):
    # plain Python scalars: str() is the shortest round-trip repr
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_oracle(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    env = cfg.env()
    oracle = grid_search(env)
    rows = []
    for s in range(env.n_states):
        reward, m = env.evaluate(s)
        p = env.grid.params(s)
        rows.append([s, p.verify_rounds, p.block_size, p.security_bits, reward,
                     m.time_ms, m.bytes, m.security_score])
    _write_csv(out / "oracle.csv", ORACLE_HEADER, rows)
    best = env.grid.params(oracle.argmax_state)
    summary = {
        "argmax_state": oracle.argmax_state,
        "rounds": best.verify_rounds,
        "block": best.block_size,
        "secbits": best.security_bits,
        "reward": oracle.best_reward,
        "evaluations": oracle.evaluations,
        "T_ref": env.weights.T_ref,
        "C_ref": env.weights.C_ref,
    }
    (out / "oracle.json").write_text(json.dumps(summary, sort_keys=True) + "\n")
    return summary


def cmd_train(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    env = cfg.env()
    hp = cfg.hyperparams()
    oracle = grid_search(env)
    rows, tables, summary = [], {}, {}
    for seed in sorted(cfg.seeds):
        q, tr = train(env, hp, seed)
        for e in range(len(tr)):
            rows.append([seed, e, tr.epsilon[e], tr.alpha[e], tr.cum_reward[e], tr.final_state[e]])
        tables[str(seed)] = q.to_json()
        terminus = greedy_rollout(q, env, 0, env.n_states)[-1]
        summary[str(seed)] = {"greedy_state": terminus, "hit": terminus == oracle.argmax_state}
    _write_csv(out / "train.csv", TRAIN_HEADER, rows)
    _write_json(out / "qtable.json", {"n_states": env.n_states, "n_actions": 7, "seeds": tables})
    (out / "config.toml").write_text(dump_config(cfg))
    return {"oracle_state": oracle.argmax_state, "seeds": summary}


def _timed(fn):
    t0 = time.perf_counter()
    result = fn()
    return result, (time.perf_counter() - t0) * 1000.0


def _compare_on(cfg: ExperimentConfig, rounds_axis) -> list[RunRecord]:
    hp = cfg.hyperparams()
    oracle = grid_search(cfg.env(rounds_axis))
    best = oracle.best_reward
    n = oracle.reward_table.size
    records = []
    for seed in sorted(cfg.seeds):
        env = cfg.env(rounds_axis)

        def run_q(env=env, seed=seed):
            q, tr = train(env, hp, seed)
            return greedy_rollout(q, env, 0, env.n_states)[-1], tr

        (final, tr), ms = _timed(run_q)
        r = float(oracle.reward_table[final])
        records.append(RunRecord("qlearn", seed, hp.episodes * hp.horizon, r, best - r, final, ms,
                                 int(np.count_nonzero(tr.visits)), n))

        env = cfg.env(rounds_axis)
        g, ms = _timed(lambda env=env: grid_search(env))
        records.append(RunRecord("grid", seed, g.evaluations, g.best_reward, best - g.best_reward,
                                 g.argmax_state, ms, n, n))

        env = cfg.env(rounds_axis)
        rs, ms = _timed(lambda env=env, seed=seed: random_search(env, cfg.random_budget, seed,
                                                                  cfg.random_replace))
        records.append(RunRecord("random", seed, rs.evaluations, rs.best_reward,
                                 best - rs.best_reward, rs.best_state, ms, env.protocol_runs, n))
    return records


def _aggregate(records: list[RunRecord]) -> dict:
    agg: dict = {}
    for grid_states in sorted({r.grid_states for r in records}):
        for method in METHODS:
            rs = [r for r in records if r.grid_states == grid_states and r.method == method]
            agg.setdefault(str(grid_states), {})[method] = {
                "runs": len(rs),
                "median_regret": statistics.median(r.regret for r in rs),
                "max_regret": max(r.regret for r in rs),
                "hit_rate": sum(r.regret == 0 for r in rs) / len(rs),
                "median_evaluations": statistics.median(r.evaluations for r in rs),
                "median_distinct_states": statistics.median(r.distinct_states for r in rs),
                "median_best_reward": statistics.median(r.best_reward for r in rs),
            }
    return agg


def _summary_table(agg: dict, records: list[RunRecord]) -> str:
    sizes = sorted(agg, key=int)
    base = sizes[0]

    def wall(method, size):
        return statistics.median(r.wall_time_ms for r in records
                                 if r.method == method and str(r.grid_states) == size)

    lines = ["Feature               | " + " | ".join(f"{m:>24}" for m in METHODS), "-" * 104]
    cells = [f"regret {agg[base][m]['median_regret']:.4g}, hit {agg[base][m]['hit_rate']:.0%}"
             for m in METHODS]
    lines.append("Optimization process  | " + " | ".join(f"{c:>24}" for c in cells))
    cells = [f"{agg[base][m]['median_evaluations']:g} evals / {agg[base][m]['median_distinct_states']:g} st"
             for m in METHODS]
    lines.append("Efficiency            | " + " | ".join(f"{c:>24}" for c in cells))
    cells = [" -> ".join(f"{wall(m, s):.1f}ms@{s}" for s in sizes) for m in METHODS]
    lines.append("Scalability           | " + " | ".join(f"{c:>24}" for c in cells))
    return "\n".join(lines) + "\n"


def cmd_compare(cfg: ExperimentConfig) -> dict:
    out = _out(cfg)
    records = _compare_on(cfg, cfg.rounds_axis) + _compare_on(cfg, cfg.scale_rounds_axis)
    order = {m: i for i, m in enumerate(METHODS)}
    records.sort(key=lambda r: (r.grid_states, order[r.method], r.seed))
    _write_csv(out / "compare.csv", COMPARE_HEADER, (
        [r.grid_states, r.method, r.seed, r.evaluations, r.distinct_states, r.best_reward,
         r.regret, r.final_state] for r in records))
    _write_csv(out / "timing.csv", TIMING_HEADER, (
        [r.grid_states, r.method, r.seed, round(r.wall_time_ms, 3)] for r in records))
    agg = _aggregate(records)
    _write_json(out / "compare.json", agg)
    table = _summary_table(agg, records)
    (out / "summary.txt").write_text(table)
    return {"aggregate": agg, "table": table}


def cmd_drift(cfg: ExperimentConfig) -> dict:
    schedule = cfg.drift_schedule()
    if not schedule:
        raise ConfigError("drift_episodes is empty; use `train` for runs without drift")
    out = _out(cfg)
    base = cfg.env()
    hp = cfg.hyperparams()

    # oracle argmax per segment, recomputed only at drift points
    segments = [(0, base)]
    for e, model in schedule:
        segments.append((e, base.with_network(model)))
    seg_oracle = [grid_search(env).argmax_state for _, env in segments]

    rows, summary = [], {}
    drift_at = {e for e, _ in schedule}
    for seed in sorted(cfg.seeds):
        q, tr = continuous_run(base, hp, seed, schedule, track_greedy=True)
        seg = 0
        for e in range(len(tr)):
            while seg + 1 < len(segments) and segments[seg + 1][0] <= e:
                seg += 1
            net = segments[seg][1].network
            rows.append([seed, e, int(e in drift_at), net.latency_ms, net.bandwidth_Bpms,
                         tr.cum_reward[e], tr.greedy_state[e], seg_oracle[seg]])
        final_env = segments[-1][1]
        target = seg_oracle[-1]
        hits = sum(greedy_rollout(q, final_env, s, final_env.n_states)[-1] == target
                   for s in range(final_env.n_states))
        summary[str(seed)] = {
            "final_oracle_state": target,
            "starts_reaching_oracle": hits,
            "all_starts_converged": hits == final_env.n_states and is_fixed_point(q, final_env, target),
        }
    _write_csv(out / "drift.csv", DRIFT_HEADER, rows)
    result = {"segment_oracle_states": seg_oracle, "seeds": summary}
    _write_json(out / "drift.json", result)
    return result


COMMANDS = {"oracle": cmd_oracle, "train": cmd_train, "compare": cmd_compare, "drift": cmd_drift}
