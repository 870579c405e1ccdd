"""Finite deterministic MDP over a grid of protocol settings.

States are points of ``rounds_axis x block_axis x sec_axis``; actions move
one axis by one step (clamped at the edges) or stay. The reward for a
transition is earned on arrival:

    r = w_s * S - w_t * time_ms / T_ref - w_c * bytes / C_ref
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .costmodel import ComputeModel, ExecutionMetrics, NetworkModel, measure
from .errors import ConfigError, UsageError
from .protocol import ProtocolParams, run_dot_product


class Action(enum.IntEnum):
    INC_ROUNDS = 0
    DEC_ROUNDS = 1
    INC_BLOCK = 2
    DEC_BLOCK = 3
    INC_SEC = 4
    DEC_SEC = 5
    STAY = 6


N_ACTIONS = len(Action)

# (axis, delta) per action ordinal; axis 0 = rounds, 1 = block, 2 = sec
_MOVES = [(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1), (0, 0)]


def _check_axis(name: str, values) -> tuple[int, ...]:
    values = tuple(values)
    if not values:
        raise ConfigError(f"{name} must be non-empty")
    if any(not isinstance(v, int) or isinstance(v, bool) for v in values):
        raise ConfigError(f"{name} must contain integers, got {values!r}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{name} must be strictly increasing, got {values!r}")
    return values


@dataclass(frozen=True)
class ParamGrid:
    rounds_axis: tuple[int, ...] = (1, 2, 3, 4)
    block_axis: tuple[int, ...] = (1, 2, 4, 8, 16)
    sec_axis: tuple[int, ...] = (32, 64, 128)
    parties: int = 3
    workload_len: int = 16
    workload_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("rounds_axis", "block_axis", "sec_axis"):
            object.__setattr__(self, name, _check_axis(name, getattr(self, name)))
        # validates every axis value and the fixed fields
        for r in self.rounds_axis:
            for b in self.block_axis:
                for k in self.sec_axis:
                    ProtocolParams(self.parties, k, b, r, self.workload_len)

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.rounds_axis), len(self.block_axis), len(self.sec_axis)

    @property
    def n_states(self) -> int:
        a, b, c = self.shape
        return a * b * c

    def encode(self, i_r: int, i_b: int, i_k: int) -> int:
        nr, nb, nk = self.shape
        if not (0 <= i_r < nr and 0 <= i_b < nb and 0 <= i_k < nk):
            raise UsageError(f"grid index {(i_r, i_b, i_k)} out of range {self.shape}")
        return (i_r * nb + i_b) * nk + i_k

    def decode(self, state: int) -> tuple[int, int, int]:
        self.check(state)
        _, nb, nk = self.shape
        i_r, rest = divmod(state, nb * nk)
        i_b, i_k = divmod(rest, nk)
        return i_r, i_b, i_k

    def check(self, state) -> None:
        if not isinstance(state, (int, np.integer)) or not 0 <= state < self.n_states:
            raise UsageError(f"state {state!r} is not in [0, {self.n_states})")

    def params(self, state: int) -> ProtocolParams:
        i_r, i_b, i_k = self.decode(state)
        return ProtocolParams(
            parties=self.parties,
            security_bits=self.sec_axis[i_k],
            block_size=self.block_axis[i_b],
            verify_rounds=self.rounds_axis[i_r],
            workload_len=self.workload_len,
        )

    def workload(self) -> tuple[list[int], list[int]]:
        """Fixed input vectors; entries fit in 16 bits so every ring holds them."""
        rng = random.Random(self.workload_seed)
        x = [rng.getrandbits(16) for _ in range(self.workload_len)]
        y = [rng.getrandbits(16) for _ in range(self.workload_len)]
        return x, y


@dataclass(frozen=True)
class RewardWeights:
    w_t: float = 1.0
    w_c: float = 1.0
    w_s: float = 1.0
    # None means "use the reference state's metrics"
    T_ref: float | None = None
    C_ref: float | None = None

    def __post_init__(self) -> None:
        for name in ("w_t", "w_c", "w_s"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if max(self.w_t, self.w_c, self.w_s) <= 0:
            raise ConfigError("at least one of w_t, w_c, w_s must be > 0")
        for name in ("T_ref", "C_ref"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be > 0, got {v!r}")

    def reward(self, metrics: ExecutionMetrics) -> float:
        return (self.w_s * metrics.security_score
                - self.w_t * (metrics.time_ms / self.T_ref)
                - self.w_c * (metrics.bytes / self.C_ref))


class StepOutcome(NamedTuple):
    next_state: int
    reward: float
    metrics: ExecutionMetrics


@dataclass
class SMPCEnv:
    """Protocol plus cost model exposed as a finite MDP.

    Evaluations are memoized per state. Normalizers left unset in
    ``weights`` are resolved from the reference state (index 0 on every
    axis) at construction and then stay fixed, including across
    :meth:`with_network`.
    """

    grid: ParamGrid = field(default_factory=ParamGrid)
    weights: RewardWeights = field(default_factory=RewardWeights)
    network: NetworkModel = field(default_factory=NetworkModel)
    compute: ComputeModel = field(default_factory=ComputeModel)

    def __post_init__(self) -> None:
        self._memo: dict[int, tuple[float, ExecutionMetrics]] = {}
        self._workload = self.grid.workload()
        self.protocol_runs = 0
        if self.weights.T_ref is None or self.weights.C_ref is None:
            ref = self.metrics(0)
            self.weights = replace(
                self.weights,
                T_ref=self.weights.T_ref if self.weights.T_ref is not None else ref.time_ms,
                C_ref=self.weights.C_ref if self.weights.C_ref is not None else float(ref.bytes),
            )

    @property
    def n_states(self) -> int:
        return self.grid.n_states

    def metrics(self, state: int) -> ExecutionMetrics:
        if state in self._memo:
            return self._memo[state][1]
        self.grid.check(state)
        params = self.grid.params(state)
        x, y = self._workload
        seed = (self.grid.workload_seed << 32) + int(state)
        _, ledger = run_dot_product(x, y, params, seed)
        self.protocol_runs += 1
        return measure(params, ledger, self.network, self.compute, seed)

    def evaluate(self, state: int) -> tuple[float, ExecutionMetrics]:
        hit = self._memo.get(state)
        if hit is not None:
            return hit
        m = self.metrics(state)
        # write-once: a concurrent writer stores an identical value
        return self._memo.setdefault(int(state), (self.weights.reward(m), m))

    def move(self, state: int, action: Action | int) -> int:
        idx = list(self.grid.decode(state))
        axis, delta = _MOVES[Action(action)]
        idx[axis] = min(max(idx[axis] + delta, 0), self.grid.shape[axis] - 1)
        return self.grid.encode(*idx)

    def step(self, state: int, action: Action | int) -> StepOutcome:
        nxt = self.move(state, action)
        reward, m = self.evaluate(nxt)
        return StepOutcome(nxt, reward, m)

    def reset(self, seed=None) -> int:
        """Uniformly random start state; ``seed`` may be an int or a Generator."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return int(rng.integers(self.n_states))

    def transition_table(self) -> np.ndarray:
        """``T[s, a]`` = next state, shape ``(n_states, 7)``."""
        return np.array([[self.move(s, a) for a in Action] for s in range(self.n_states)], dtype=np.int64)

    def reward_vector(self) -> np.ndarray:
        """Arrival reward of every state."""
        return np.array([self.evaluate(s)[0] for s in range(self.n_states)], dtype=np.float64)

    def with_network(self, network: NetworkModel) -> SMPCEnv:
        """Same grid and resolved normalizers under a new network model, fresh cache."""
        return SMPCEnv(self.grid, self.weights, network, self.compute)
