"""Non-learning tuners and the exact Q* oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import SMPCEnv
from .errors import UsageError


@dataclass(frozen=True)
class OracleResult:
    argmax_state: int
    reward_table: np.ndarray
    evaluations: int

    @property
    def best_reward(self) -> float:
        return float(self.reward_table[self.argmax_state])


@dataclass(frozen=True)
class SearchResult:
    best_state: int
    best_reward: float
    evaluations: int


def grid_search(env: SMPCEnv) -> OracleResult:
    """Evaluate every state once; ties go to the lowest state id."""
    rewards = np.array([env.evaluate(s)[0] for s in range(env.n_states)])
    return OracleResult(int(np.argmax(rewards)), rewards, env.n_states)


def random_search(env: SMPCEnv, budget: int, seed, replace: bool = True) -> SearchResult:
    if not isinstance(budget, (int, np.integer)) or budget < 1:
        raise UsageError(f"random_budget must be >= 1, got {budget!r}")
    if not replace and budget > env.n_states:
        raise UsageError(f"random_budget {budget} exceeds {env.n_states} states without replacement")
    rng = np.random.default_rng(seed)
    states = rng.choice(env.n_states, size=budget, replace=replace)
    best_state, best = -1, -np.inf
    for s in states:
        r = env.evaluate(int(s))[0]
        # strict comparison keeps the first-seen state on ties
        if r > best:
            best_state, best = int(s), r
    return SearchResult(best_state, float(best), int(budget))


def value_iteration(env: SMPCEnv, gamma: float, tol: float = 1e-10,
                    max_iter: int = 1_000_000) -> np.ndarray:
    """Iterate the Bellman optimality operator to a sup-norm change below ``tol``.

    Transitions are deterministic and the reward is earned on arrival, so
    ``Q(s, a) = r(T[s, a]) + gamma * max_a' Q(T[s, a], a')``.
    """
    if not 0 <= gamma < 1:
        raise UsageError(f"gamma must be in [0, 1), got {gamma!r}")
    if not tol > 0:
        raise UsageError(f"tol must be > 0, got {tol!r}")
    T = env.transition_table()
    r_arrive = env.reward_vector()[T]
    q = np.zeros(T.shape)
    for _ in range(max_iter):
        new = r_arrive + gamma * q.max(axis=1)[T]
        delta = np.max(np.abs(new - q))
        q = new
        if delta < tol:
            return q
    raise RuntimeError(f"value iteration did not converge within {max_iter} sweeps")
