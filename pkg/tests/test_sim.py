import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svdalarm.detector import history_stack
from svdalarm.errors import InvalidInputError
from svdalarm.grid import make_unobservable_attack
from svdalarm.sim import (
    AttackScenario,
    NoiseModel,
    Ramp,
    Step,
    TrajectoryConfig,
    apply_attack,
    generate_measurements,
    generate_states,
    stack_frames,
)


def max_pairwise(states):
    diff = states[:, None, :] - states[None, :, :]
    return np.sqrt((diff**2).sum(axis=2)).max()


def test_gamma_zero_is_constant():
    x0 = np.arange(5.0)
    states = generate_states(TrajectoryConfig(x0=x0, gamma=0.0, T=30, seed=1))
    np.testing.assert_array_equal(states, np.tile(x0, (30, 1)))


def test_gamma_one_exhaustive():
    states = generate_states(TrajectoryConfig(x0=np.ones(38), gamma=1.0, T=200, seed=3))
    assert max_pairwise(states) <= 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 10.0), st.integers(1, 12))
def test_bounded_variation_any_seed(seed, gamma, n):
    states = generate_states(TrajectoryConfig(x0=np.zeros(n), gamma=gamma, T=60, seed=seed))
    assert max_pairwise(states) <= gamma * (1 + 1e-12)


def test_states_deterministic():
    cfg = TrajectoryConfig(x0=np.zeros(4), gamma=2.0, T=50, seed=11)
    np.testing.assert_array_equal(generate_states(cfg), generate_states(cfg))


def test_invalid_configs():
    with pytest.raises(InvalidInputError):
        TrajectoryConfig(x0=np.zeros(2), gamma=-1.0)
    with pytest.raises(InvalidInputError):
        NoiseModel(nu=float("nan"))


def test_noiseless_measurements(H39, rng):
    states = rng.standard_normal((10, H39.N))
    frames = generate_measurements(states, H39, NoiseModel(nu=0.0, seed=2))
    np.testing.assert_array_equal(stack_frames(frames), states @ H39.H.T)
    assert all(np.all(fr.e == 0) for fr in frames)


def test_noise_std(H39):
    # 118 frames x 85 rows > 10,000 pooled entries
    states = np.zeros((118, H39.N))
    frames = generate_measurements(states, H39, NoiseModel(nu=0.05, seed=5))
    e = np.concatenate([fr.e for fr in frames])
    assert e.size >= 10_000
    assert abs(e.std() - 0.05) <= 0.03 * 0.05


def test_measurements_reproducible(H39):
    states = np.zeros((20, H39.N))
    a = stack_frames(generate_measurements(states, H39, NoiseModel(0.05, 9)))
    b = stack_frames(generate_measurements(states, H39, NoiseModel(0.05, 9)))
    assert a.tobytes() == b.tobytes()


def test_measurements_truth_fields(H39, rng):
    states = rng.standard_normal((4, H39.N))
    for fr in generate_measurements(states, H39, NoiseModel(0.1, 0), t0=7):
        np.testing.assert_allclose(fr.y, H39.H @ fr.x + fr.e, atol=1e-12)
    assert fr.t == 10


@pytest.fixture
def attacked(H39):
    attack = make_unobservable_attack(H39, [30], 2.0)
    frames = generate_measurements(np.zeros((20, H39.N)), H39, NoiseModel(0.05, 1))
    return frames, attack


def test_step_attack(attacked):
    frames, attack = attacked
    out = apply_attack(frames, AttackScenario(attack, t_a=8, signature=Step()))
    for before, after in zip(frames, out):
        if before.t < 8:
            assert after is before
        else:
            np.testing.assert_array_equal(after.y, before.y + attack.a)
            assert after.theta == 1.0


def test_ramp_attack(attacked):
    frames, attack = attacked
    out = apply_attack(frames, AttackScenario(attack, t_a=4, signature=Ramp(4, 12)))
    np.testing.assert_array_equal(out[3].y, frames[3].y)
    np.testing.assert_allclose(out[8].y, frames[8].y + 0.5 * attack.a, atol=1e-15)
    np.testing.assert_allclose(out[15].y, frames[15].y + attack.a, atol=1e-15)


def test_attack_out_of_range(attacked):
    frames, attack = attacked
    with pytest.raises(InvalidInputError):
        apply_attack(frames, AttackScenario(attack, t_a=50))
    with pytest.raises(InvalidInputError):
        Ramp(5, 2)


def test_clean_noiseless_history_is_zero(H39):
    attack = make_unobservable_attack(H39, [30], 2.0)
    frames = generate_measurements(np.zeros((30, H39.N)), H39, NoiseModel(0.0, 0))
    ys = stack_frames(apply_attack(frames, AttackScenario(attack, t_a=20)))
    deltas = history_stack(ys, 5)
    # index i corresponds to t = i + 5; everything before t_a = 20
    assert np.all(deltas[: 20 - 5] == 0.0)
