"""Tabular Q-learning over :class:`~smpctune.environment.SMPCEnv`.

The update is the weighted-average form

    Q(s, a) <- (1 - alpha) * Q(s, a) + alpha * (r + gamma * max_a' Q(s', a'))

with epsilon-greedy or softmax action selection. Training draws all
randomness for episode ``e`` from ``default_rng([seed, e])`` up front and
hands the arrays to the episode kernel (see :mod:`smpctune.kernels`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .costmodel import NetworkModel
from .environment import N_ACTIONS, Action, ParamGrid, SMPCEnv
from .errors import ConfigError, SMPCTuneError

POLICIES = ("eps_greedy", "softmax")
INIT_MODES = ("zeros", "random")


@dataclass
class QTable:
    values: np.ndarray
    init_mode: str = "zeros"

    def __getitem__(self, key):
        return self.values[key]

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    def copy(self) -> QTable:
        return QTable(self.values.copy(), self.init_mode)

    def to_json(self) -> dict:
        return {"init_mode": self.init_mode, "values": self.values.tolist()}


@dataclass(frozen=True)
class Hyperparams:
    alpha0: float = 0.5
    alpha_decay: float = 0.001
    gamma: float = 0.9
    eps0: float = 1.0
    eps_decay: float = 0.01
    eps_min: float = 0.05
    tau: float = 1.0
    episodes: int = 2000
    horizon: int = 20
    policy: str = "eps_greedy"
    init_mode: str = "zeros"

    def __post_init__(self) -> None:
        checks = {
            "alpha0": 0 < self.alpha0 <= 1,
            "alpha_decay": self.alpha_decay >= 0,
            "gamma": 0 <= self.gamma < 1,
            "eps0": 0 <= self.eps0 <= 1,
            "eps_decay": self.eps_decay >= 0,
            "eps_min": 0 <= self.eps_min <= 1,
            "tau": self.tau > 0,
            "episodes": isinstance(self.episodes, int) and self.episodes >= 0,
            "horizon": isinstance(self.horizon, int) and self.horizon >= 1,
            "policy": self.policy in POLICIES,
            "init_mode": self.init_mode in INIT_MODES,
        }
        for name, ok in checks.items():
            if not ok:
                raise ConfigError(f"{name} has invalid value {getattr(self, name)!r}")

    def alpha(self, episode: int) -> float:
        return self.alpha0 / (1.0 + episode * self.alpha_decay)

    def epsilon(self, episode: int) -> float:
        return max(self.eps_min, self.eps0 * math.exp(-episode * self.eps_decay))


@dataclass
class EpisodeTrace:
    """Per-episode record of a training run."""

    epsilon: np.ndarray
    alpha: np.ndarray
    cum_reward: np.ndarray
    final_state: np.ndarray
    # visit counts per state, including start states
    visits: np.ndarray
    drift_events: list[tuple[int, NetworkModel]] = field(default_factory=list)
    greedy_state: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.cum_reward)


def init_qtable(grid: ParamGrid | SMPCEnv | int, mode: str = "zeros", seed=None) -> QTable:
    """Zero table, or seeded uniform entries in [-0.01, 0.01]."""
    if isinstance(grid, SMPCEnv):
        n = grid.n_states
    elif isinstance(grid, ParamGrid):
        n = grid.n_states
    else:
        n = int(grid)
    if mode == "zeros":
        return QTable(np.zeros((n, N_ACTIONS)), mode)
    if mode == "random":
        return QTable(np.random.default_rng(seed).uniform(-0.01, 0.01, (n, N_ACTIONS)), mode)
    raise ConfigError(f"init_mode must be one of {INIT_MODES}, got {mode!r}")


def greedy_action(q: QTable, s: int) -> Action:
    # np.argmax returns the first maximizer, i.e. the lowest ordinal on ties
    return Action(int(np.argmax(q.values[s])))


def select_eps_greedy(q: QTable, s: int, eps: float, rng: np.random.Generator) -> Action:
    if rng.random() < eps:
        return Action(int(rng.integers(N_ACTIONS)))
    return greedy_action(q, s)


def softmax_probs(q: QTable, s: int, tau: float) -> np.ndarray:
    z = (q.values[s] - q.values[s].max()) / tau
    w = np.exp(z)
    return w / w.sum()


def select_softmax(q: QTable, s: int, tau: float, rng: np.random.Generator) -> Action:
    p = softmax_probs(q, s, tau)
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return Action(min(idx, N_ACTIONS - 1))


def q_update(q: QTable, s: int, a: int, r: float, s_next: int, alpha: float, gamma: float) -> float:
    """Apply one update to ``Q(s, a)`` in place and return the new value."""
    if not math.isfinite(r):
        raise SMPCTuneError(f"non-finite reward {r!r}")
    target = r + gamma * float(q.values[s_next].max())
    q.values[s, a] = (1.0 - alpha) * q.values[s, a] + alpha * target
    return float(q.values[s, a])


def _episode_draws(env: SMPCEnv, seed: int, episodes: range, horizon: int):
    n = len(episodes)
    starts = np.empty(n, dtype=np.int64)
    u = np.empty((n, horizon))
    ra = np.empty((n, horizon), dtype=np.int64)
    for i, e in enumerate(episodes):
        g = np.random.default_rng([seed, e])
        starts[i] = env.reset(g)
        u[i] = g.random(horizon)
        ra[i] = g.integers(0, N_ACTIONS, horizon)
    return starts, u, ra


class _Runner:
    """Shared episode loop of :func:`train` and :func:`continuous_run`."""

    def __init__(self, env: SMPCEnv, hp: Hyperparams, seed: int, q: QTable | None, backend):
        self.hp = hp
        self.seed = seed
        self.q = q if q is not None else init_qtable(env, hp.init_mode, seed)
        self.run_episodes = kernels.get_backend(backend)
        E = hp.episodes
        self.trace = EpisodeTrace(
            epsilon=np.array([hp.epsilon(e) for e in range(E)]),
            alpha=np.array([hp.alpha(e) for e in range(E)]),
            cum_reward=np.zeros(E),
            final_state=np.zeros(E, dtype=np.int64),
            visits=np.zeros(self.q.n_states, dtype=np.int64),
        )
        self.set_env(env)

    def set_env(self, env: SMPCEnv) -> None:
        self.env = env
        self.T = env.transition_table()
        self.R = env.reward_vector()
        if not np.all(np.isfinite(self.R)):
            raise SMPCTuneError("environment produced non-finite rewards")

    def run(self, lo: int, hi: int) -> None:
        if hi <= lo:
            return
        starts, u, ra = _episode_draws(self.env, self.seed, range(lo, hi), self.hp.horizon)
        tr = self.trace
        cum = np.zeros(hi - lo)
        fin = np.zeros(hi - lo, dtype=np.int64)
        self.run_episodes(
            self.q.values, self.T, self.R, starts, u, ra,
            np.ascontiguousarray(tr.epsilon[lo:hi]), np.ascontiguousarray(tr.alpha[lo:hi]),
            float(self.hp.gamma), self.hp.policy == "softmax", float(self.hp.tau),
            cum, fin, tr.visits,
        )
        tr.cum_reward[lo:hi] = cum
        tr.final_state[lo:hi] = fin


def train(env: SMPCEnv, hp: Hyperparams, seed: int, q: QTable | None = None,
          backend: str | None = None) -> tuple[QTable, EpisodeTrace]:
    """Run ``hp.episodes`` episodes of ``hp.horizon`` steps from random starts."""
    runner = _Runner(env, hp, seed, q, backend)
    runner.run(0, hp.episodes)
    return runner.q, runner.trace


def greedy_rollout(q: QTable, env: SMPCEnv, start: int, max_steps: int) -> list[int]:
    """Follow greedy actions from ``start``.

    Stops when Stay (or a clamped move) is chosen, when the next state
    would revisit the previous one (2-cycle), or after ``max_steps`` moves.
    """
    env.grid.check(start)
    path = [int(start)]
    s = int(start)
    for _ in range(max_steps):
        a = greedy_action(q, s)
        nxt = env.move(s, a)
        if nxt == s or (len(path) > 1 and nxt == path[-2]):
            break
        path.append(nxt)
        s = nxt
    return path


def is_fixed_point(q: QTable, env: SMPCEnv, s: int) -> bool:
    return env.move(s, greedy_action(q, s)) == s


def continuous_run(env: SMPCEnv, hp: Hyperparams, seed: int,
                   drift_schedule: Sequence[tuple[int, NetworkModel]] = (),
                   q: QTable | None = None, backend: str | None = None,
                   track_greedy: bool = False) -> tuple[QTable, EpisodeTrace]:
    """Keep learning while the network model changes at scheduled episodes.

    Exploration never drops below ``hp.eps_min``. At each drift point the
    environment is rebuilt under the new network model (fresh evaluation
    cache, same normalizers). With ``track_greedy`` the trace also holds,
    after every episode, the greedy-rollout terminus from state 0.
    """
    episodes = [e for e, _ in drift_schedule]
    if len(set(episodes)) != len(episodes):
        raise ConfigError("drift_schedule has overlapping drift points")
    for e, model in drift_schedule:
        if not (isinstance(e, (int, np.integer)) and 0 <= e < max(hp.episodes, 1)):
            raise ConfigError(f"drift episode {e!r} outside [0, {hp.episodes})")
        if not isinstance(model, NetworkModel):
            raise ConfigError(f"drift entry for episode {e} is not a NetworkModel")
    schedule = sorted(drift_schedule, key=lambda d: d[0])

    runner = _Runner(env, hp, seed, q, backend)
    if track_greedy:
        runner.trace.greedy_state = np.zeros(hp.episodes, dtype=np.int64)
    bounds = [e for e, _ in schedule] + [hp.episodes]
    lo = 0
    for i, hi in enumerate(bounds):
        if i > 0:
            model = schedule[i - 1][1]
            runner.set_env(runner.env.with_network(model))
            runner.trace.drift_events.append((lo, model))
        if track_greedy:
            for e in range(lo, hi):
                runner.run(e, e + 1)
                runner.trace.greedy_state[e] = greedy_rollout(
                    runner.q, runner.env, 0, runner.env.n_states)[-1]
        else:
            runner.run(lo, hi)
        lo = hi
    return runner.q, runner.trace
