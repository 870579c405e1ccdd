import csv
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from smpctune.costmodel import ExecutionMetrics, NetworkModel
from smpctune.environment import Action, ParamGrid, RewardWeights, SMPCEnv
from smpctune.errors import ConfigError, UsageError

GOLDEN = Path(__file__).parent / "golden" / "oracle_default.csv"


def _metrics(S, t, c):
    return ExecutionMetrics(time_ms=t, bytes=c, messages=0, rounds=0, security_score=S)


def test_reward_formula_worked_case():
    w = RewardWeights(1, 1, 1, T_ref=10.0, C_ref=100.0)
    assert w.reward(_metrics(0.625, 12.0, 80)) == pytest.approx(-1.375, abs=1e-12)


def test_reference_state_normalizer_identity():
    env = SMPCEnv(weights=RewardWeights(1, 1, 0))
    assert env.evaluate(0)[0] == pytest.approx(-2.0, abs=1e-12)


def _closed_form_reward(grid, state, T_ref, C_ref):
    """Independent route: counts from the phase structure, not from the bus."""
    i_r, i_b, i_k = grid.decode(state)
    R, b, k = grid.rounds_axis[i_r], grid.block_axis[i_b], grid.sec_axis[i_k]
    n, L = grid.parties, grid.workload_len
    w = math.ceil(k / 8)
    rounds = math.ceil(L / b) + R + 1
    nbytes = n * (n - 1) * w * (2 * L + R + 1)
    compute = (0.001 * n * L + 0.002 * L + 0.001 * R * L) * math.ceil(k / 64) ** 2
    time_ms = rounds * 1.0 + nbytes / 1000.0 + compute
    S = min(R * min(k, 40), 128) / 128
    return S - time_ms / T_ref - nbytes / C_ref


def test_full_grid_matches_closed_form(default_env):
    g = default_env.grid
    T_ref, C_ref = default_env.weights.T_ref, default_env.weights.C_ref
    assert C_ref == 6 * 4 * (2 * 16 + 2)
    for s in range(default_env.n_states):
        assert default_env.evaluate(s)[0] == pytest.approx(_closed_form_reward(g, s, T_ref, C_ref), abs=1e-12)


def test_full_grid_matches_golden(default_env):
    with open(GOLDEN) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 60
    for row in rows:
        reward, m = default_env.evaluate(int(row["state_id"]))
        assert reward == float(row["reward"])
        assert m.time_ms == float(row["time_ms"])
        assert m.bytes == int(row["bytes"])


def test_grid_size_and_codec():
    g = ParamGrid()
    assert g.n_states == 60
    seen = set()
    for i_r in range(4):
        for i_b in range(5):
            for i_k in range(3):
                s = g.encode(i_r, i_b, i_k)
                assert g.decode(s) == (i_r, i_b, i_k)
                seen.add(s)
    assert seen == set(range(60))
    assert g.encode(0, 0, 1) == 1 and g.encode(0, 1, 0) == 3 and g.encode(1, 0, 0) == 15


@pytest.mark.parametrize("kw", [dict(rounds_axis=()), dict(block_axis=(2, 1)), dict(sec_axis=(32, 48)),
                                dict(parties=1)])
def test_grid_validation(kw):
    with pytest.raises(ConfigError):
        ParamGrid(**kw)


def test_out_of_grid_state_rejected(default_env):
    with pytest.raises(UsageError):
        default_env.evaluate(60)
    with pytest.raises(UsageError):
        default_env.evaluate(-1)


def test_memoization_is_transparent():
    env = SMPCEnv()
    first = env.evaluate(17)
    runs = env.protocol_runs
    assert env.evaluate(17) == first
    assert env.protocol_runs == runs


def test_boundary_clamp_and_single_axis_move(default_env):
    g = default_env.grid
    s = g.encode(0, 2, 1)
    assert default_env.step(s, Action.DEC_ROUNDS).next_state == s
    interior = g.encode(1, 2, 1)
    assert g.decode(default_env.step(interior, Action.INC_BLOCK).next_state) == (1, 3, 1)
    assert default_env.step(interior, Action.STAY).next_state == interior


def test_step_reward_equals_evaluate_everywhere(default_env):
    for s in range(default_env.n_states):
        for a in Action:
            out = default_env.step(s, a)
            assert out.reward == default_env.evaluate(out.next_state)[0]
            assert out.metrics == default_env.evaluate(out.next_state)[1]


@given(st.integers(0, 59), st.sampled_from(list(Action)))
def test_stay_is_no_op(s, a):
    env = SMPCEnv()
    assert env.move(env.move(s, Action.STAY), a) == env.move(s, a)


def test_reset_singleton_and_determinism():
    env = SMPCEnv(grid=ParamGrid(rounds_axis=(1,), block_axis=(1,), sec_axis=(32,)))
    assert env.reset(0) == 0
    big = SMPCEnv()
    assert big.reset(123) == big.reset(123)


def test_reset_uniform_chi_square(default_env):
    rng = np.random.default_rng(2024)
    counts = np.bincount([default_env.reset(rng) for _ in range(10_000)], minlength=60)
    assert chisquare(counts).pvalue > 0.01


def test_with_network_keeps_normalizers(default_env):
    slow = default_env.with_network(NetworkModel(latency_ms=2.0))
    assert slow.weights == default_env.weights
    assert slow.evaluate(0)[0] < default_env.evaluate(0)[0]


def test_transition_table_shape(default_env):
    T = default_env.transition_table()
    assert T.shape == (60, 7)
    assert np.array_equal(T[:, Action.STAY], np.arange(60))


def test_reward_weight_validation():
    with pytest.raises(ConfigError):
        RewardWeights(0, 0, 0)
    with pytest.raises(ConfigError, match="T_ref"):
        RewardWeights(T_ref=0.0)
