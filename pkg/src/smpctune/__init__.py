"""Q-learning tuner for a toy secure multi-party dot-product protocol."""
from .agent import Hyperparams, QTable, continuous_run, greedy_rollout, init_qtable, train
from .baselines import grid_search, random_search, value_iteration
from .costmodel import ComputeModel, NetworkModel
from .environment import Action, ParamGrid, RewardWeights, SMPCEnv
from .errors import ConfigError, ProtocolError, SMPCTuneError, UsageError
from .kernels import BACKEND
from .protocol import ProtocolParams, comm_closed_form, run_dot_product

__all__ = [
    "Action", "BACKEND", "ComputeModel", "ConfigError", "Hyperparams", "NetworkModel",
    "ParamGrid", "ProtocolError", "ProtocolParams", "QTable", "RewardWeights", "SMPCEnv",
    "SMPCTuneError", "UsageError", "comm_closed_form", "continuous_run", "greedy_rollout",
    "grid_search", "init_qtable", "random_search", "run_dot_product", "train", "value_iteration",
]
