"""Flat TOML experiment configuration."""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..agent import Hyperparams
from ..costmodel import ComputeModel, NetworkModel
from ..environment import ParamGrid, RewardWeights, SMPCEnv
from ..errors import ConfigError


def _ints(*v: int):
    return field(default_factory=lambda: list(v))


@dataclass
class ExperimentConfig:
    # grid and workload
    rounds_axis: list[int] = _ints(1, 2, 3, 4)
    block_axis: list[int] = _ints(1, 2, 4, 8, 16)
    sec_axis: list[int] = _ints(32, 64, 128)
    parties: int = 3
    workload_len: int = 16
    workload_seed: int = 0
    # cost model
    c_share: float = 0.001
    c_mul: float = 0.002
    c_check: float = 0.001
    latency_ms: float = 1.0
    bandwidth_Bpms: float = 1000.0
    jitter_pct: float = 0.0
    # reward
    w_t: float = 1.0
    w_c: float = 1.0
    w_s: float = 1.0
    T_ref: float | None = None
    C_ref: float | None = None
    # learner
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
    # baselines
    random_budget: int = 200
    random_replace: bool = True
    vi_tol: float = 1e-10
    # 300-state grid for the scalability timing in `compare`
    scale_rounds_axis: list[int] = _ints(*range(1, 21))
    # runs
    seeds: list[int] = _ints(*range(20))
    drift_episodes: list[int] = field(default_factory=list)
    drift_latency_ms: list[float] = field(default_factory=list)
    drift_bandwidth_Bpms: list[float] = field(default_factory=list)
    out_dir: str = "results"

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            _check_type(f.name, f.type, getattr(self, f.name))
        # construct every domain object once so range errors surface at load
        self.hyperparams()
        self.env()
        if len(self.seeds) == 0:
            raise ConfigError("seeds must be non-empty")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        if self.random_budget < 1:
            raise ConfigError("random_budget must be >= 1")
        if not self.vi_tol > 0:
            raise ConfigError("vi_tol must be > 0")
        _check_scale(self)
        self.drift_schedule()

    def grid(self, rounds_axis=None) -> ParamGrid:
        return ParamGrid(
            rounds_axis=tuple(rounds_axis if rounds_axis is not None else self.rounds_axis),
            block_axis=tuple(self.block_axis),
            sec_axis=tuple(self.sec_axis),
            parties=self.parties,
            workload_len=self.workload_len,
            workload_seed=self.workload_seed,
        )

    def network(self) -> NetworkModel:
        return NetworkModel(self.latency_ms, self.bandwidth_Bpms, self.jitter_pct)

    def env(self, rounds_axis=None) -> SMPCEnv:
        return SMPCEnv(
            grid=self.grid(rounds_axis),
            weights=RewardWeights(self.w_t, self.w_c, self.w_s, self.T_ref, self.C_ref),
            network=self.network(),
            compute=ComputeModel(self.c_share, self.c_mul, self.c_check),
        )

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            alpha0=self.alpha0, alpha_decay=self.alpha_decay, gamma=self.gamma,
            eps0=self.eps0, eps_decay=self.eps_decay, eps_min=self.eps_min, tau=self.tau,
            episodes=self.episodes, horizon=self.horizon, policy=self.policy,
            init_mode=self.init_mode,
        )

    def drift_schedule(self) -> list[tuple[int, NetworkModel]]:
        n = len(self.drift_episodes)
        if len(self.drift_latency_ms) != n:
            raise ConfigError("drift_latency_ms must have one entry per drift_episodes entry")
        if self.drift_bandwidth_Bpms and len(self.drift_bandwidth_Bpms) != n:
            raise ConfigError("drift_bandwidth_Bpms must be empty or match drift_episodes")
        if len(set(self.drift_episodes)) != n:
            raise ConfigError("drift_episodes has overlapping drift points")
        out = []
        for i, e in enumerate(self.drift_episodes):
            if not 0 <= e < self.episodes:
                raise ConfigError(f"drift_episodes entry {e} outside [0, episodes)")
            bw = self.drift_bandwidth_Bpms[i] if self.drift_bandwidth_Bpms else self.bandwidth_Bpms
            out.append((e, NetworkModel(self.drift_latency_ms[i], bw, self.jitter_pct)))
        return sorted(out, key=lambda d: d[0])

    def to_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


def _check_scale(cfg: ExperimentConfig) -> None:
    try:
        cfg.grid(cfg.scale_rounds_axis)
    except ConfigError as exc:
        raise ConfigError(f"scale_rounds_axis: {exc}") from None


def _check_type(name: str, kind: str, value) -> None:
    ok = True
    if kind == "int":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind in ("float", "float | None"):
        ok = (value is None and kind.endswith("None")) or (
            isinstance(value, (int, float)) and not isinstance(value, bool))
    elif kind == "bool":
        ok = isinstance(value, bool)
    elif kind == "str":
        ok = isinstance(value, str)
    elif kind.startswith("list["):
        inner = "int" if kind == "list[int]" else "float"
        ok = isinstance(value, list) and all(
            not isinstance(v, bool) and isinstance(v, int if inner == "int" else (int, float))
            for v in value)
    if not ok:
        raise ConfigError(f"{name}: expected {kind}, got {value!r}")


_FLOAT_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig) if f.type.startswith("float")}
_FLOAT_LIST_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig) if f.type == "list[float]"}


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"{k}: nested tables are not allowed")
    # normalize numerics so dump/load is canonical
    norm = dict(data)
    for k in _FLOAT_KEYS & norm.keys():
        if isinstance(norm[k], int) and not isinstance(norm[k], bool):
            norm[k] = float(norm[k])
    for k in _FLOAT_LIST_KEYS & norm.keys():
        if isinstance(norm[k], list):
            norm[k] = [float(v) if isinstance(v, int) and not isinstance(v, bool) else v for v in norm[k]]
    return ExperimentConfig(**norm)


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from None
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(dict(sorted(cfg.to_dict().items())))
