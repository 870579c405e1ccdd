"""Modeled execution time and security score of one protocol run."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .protocol import BusLedger, ProtocolParams

SECURITY_TARGET_BITS = 128
PER_ROUND_STAT_BITS = 40


@dataclass(frozen=True)
class NetworkModel:
    latency_ms: float = 1.0
    bandwidth_Bpms: float = 1000.0
    jitter_pct: float = 0.0

    def __post_init__(self) -> None:
        if not self.latency_ms > 0:
            raise ConfigError(f"latency_ms must be > 0, got {self.latency_ms!r}")
        if not self.bandwidth_Bpms > 0:
            raise ConfigError(f"bandwidth_Bpms must be > 0, got {self.bandwidth_Bpms!r}")
        if not 0 <= self.jitter_pct < 1:
            raise ConfigError(f"jitter_pct must be in [0, 1), got {self.jitter_pct!r}")


@dataclass(frozen=True)
class ComputeModel:
    """Per-element local compute costs in milliseconds."""

    c_share: float = 0.001
    c_mul: float = 0.002
    c_check: float = 0.001

    def __post_init__(self) -> None:
        for name in ("c_share", "c_mul", "c_check"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")

    @staticmethod
    def width_factor(k: int) -> int:
        # multi-limb arithmetic: quadratic in the number of 64-bit words
        return math.ceil(k / 64) ** 2


@dataclass(frozen=True)
class ExecutionMetrics:
    time_ms: float
    bytes: int
    messages: int
    rounds: int
    security_score: float


def network_time(ledger: BusLedger, model: NetworkModel, seed=None) -> float:
    """Latency per sequential round plus serialization time of all bytes.

    With ``jitter_pct > 0`` every round's latency is scaled by ``1 + u``,
    ``u ~ U(-jitter_pct, jitter_pct)`` drawn from ``seed``.
    """
    rounds = ledger.sequential_rounds
    if model.jitter_pct > 0 and rounds:
        u = np.random.default_rng(seed).uniform(-model.jitter_pct, model.jitter_pct, rounds)
        latency = float(np.sum(model.latency_ms * (1.0 + u)))
    else:
        latency = rounds * model.latency_ms
    return latency + ledger.total_bytes / model.bandwidth_Bpms


def compute_time(params: ProtocolParams, model: ComputeModel) -> float:
    n, L, R = params.parties, params.workload_len, params.verify_rounds
    return (model.c_share * n * L + model.c_mul * L + model.c_check * R * L) * model.width_factor(params.security_bits)


def security_score(params: ProtocolParams) -> float:
    """Normalized statistical security in [0, 1].

    Each verification round contributes ``min(k, 40)`` bits; the total is
    capped at 128 bits.
    """
    per_round = min(params.security_bits, PER_ROUND_STAT_BITS)
    return min(params.verify_rounds * per_round, SECURITY_TARGET_BITS) / SECURITY_TARGET_BITS


def measure(params: ProtocolParams, ledger: BusLedger, network: NetworkModel,
            compute: ComputeModel, seed=None) -> ExecutionMetrics:
    return ExecutionMetrics(
        time_ms=compute_time(params, compute) + network_time(ledger, network, seed),
        bytes=ledger.total_bytes,
        messages=ledger.total_messages,
        rounds=ledger.sequential_rounds,
        security_score=security_score(params),
    )
