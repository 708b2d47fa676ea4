import json

import numpy as np
import pytest

from svdalarm.errors import InvalidInputError, TopologyError
from svdalarm.grid import (
    GridModel,
    build_h_matrix,
    is_unobservable,
    load_grid,
    make_unobservable_attack,
    residual,
    wls_estimate,
)
from svdalarm.numerics import weighted_pinv


def test_two_bus():
    H = build_h_matrix(GridModel(buses=[1, 2], slack_bus=1, branches=[(1, 2, 1.0)]))
    np.testing.assert_array_equal(H.H, [[-1.0], [1.0], [1.0]])
    assert (H.M, H.N) == (3, 1)
    assert H.row_labels == (("injection", 1), ("injection", 2), ("flow", (1, 2)))


def test_triangle_injection_row():
    grid = GridModel(buses=[1, 2, 3], slack_bus=1, branches=[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)])
    H = build_h_matrix(grid)
    np.testing.assert_array_equal(H.H[1], [2.0, -1.0])


def test_bundled_dimensions(grid39, H39):
    assert grid39.n_buses == 39
    assert grid39.n_branches == 46
    assert (H39.M, H39.N) == (85, 38)
    assert np.linalg.matrix_rank(H39.H) == 38


def test_injection_columns_sum_to_zero(grid39, H39):
    block = H39.H[: grid39.n_buses]
    np.testing.assert_allclose(block.sum(axis=0), 0.0, atol=1e-9)


def test_topology_errors():
    with pytest.raises(TopologyError):
        build_h_matrix(GridModel(buses=[1, 2, 3, 4], slack_bus=1, branches=[(1, 2, 1.0), (3, 4, 1.0)]))
    with pytest.raises(TopologyError):
        GridModel(buses=[1, 2], slack_bus=3, branches=[(1, 2, 1.0)])
    with pytest.raises(TopologyError):
        GridModel(buses=[1, 2], slack_bus=1, branches=[(1, 1, 1.0)])
    with pytest.raises(TopologyError):
        GridModel(buses=[1, 2], slack_bus=1, branches=[(1, 2, -1.0)])
    with pytest.raises(TopologyError):
        GridModel(buses=[1, 2], slack_bus=1, branches=[])


def test_grid_file_round_trip(tmp_path, grid39):
    path = tmp_path / "g.json"
    path.write_text(json.dumps(grid39.to_dict()))
    assert load_grid(path) == grid39


def test_wls_identity():
    y = np.array([0.3, -1.2, 4.0])
    np.testing.assert_allclose(wls_estimate(y, np.eye(3), np.ones(3)), y)


def test_wls_noiseless_recovers_state(H39, rng):
    x = rng.standard_normal(H39.N)
    x_hat = wls_estimate(H39.H @ x, H39, np.ones(H39.M))
    np.testing.assert_allclose(x_hat, x, atol=1e-9)


def test_wls_noisy_shift(H39, rng):
    lam = np.full(H39.M, 0.05**2)
    x, e = rng.standard_normal(H39.N), 0.05 * rng.standard_normal(H39.M)
    # K e from the normal equations, solved independently of weighted_pinv
    Ke = np.linalg.lstsq(H39.H, e, rcond=None)[0]
    np.testing.assert_allclose(wls_estimate(H39.H @ x + e, H39, lam), x + Ke, atol=1e-9)


def test_wls_dimension_mismatch(H39):
    with pytest.raises(InvalidInputError):
        wls_estimate(np.ones(3), H39, np.ones(H39.M))


def test_residual_noiseless(H39, rng):
    x = rng.standard_normal(H39.N)
    y = H39.H @ x
    np.testing.assert_allclose(residual(y, H39, wls_estimate(y, H39, np.ones(H39.M))), 0.0, atol=1e-9)


def test_residual_is_projection(H39, rng):
    x, e = rng.standard_normal(H39.N), rng.standard_normal(H39.M)
    y = H39.H @ x + e
    Hm = H39.H
    projector = np.eye(H39.M) - Hm @ np.linalg.inv(Hm.T @ Hm) @ Hm.T
    r = residual(y, H39, wls_estimate(y, H39, np.ones(H39.M)))
    np.testing.assert_allclose(r, projector @ e, atol=1e-9)


def test_residual_invariant_under_unobservable_attack(H39, rng):
    lam = np.ones(H39.M)
    attack = make_unobservable_attack(H39, [30, 32, 33, 34], 2.0)
    y = H39.H @ rng.standard_normal(H39.N) + 0.05 * rng.standard_normal(H39.M)
    r = residual(y, H39, wls_estimate(y, H39, lam))
    ya = y + attack.a
    ra = residual(ya, H39, wls_estimate(ya, H39, lam))
    np.testing.assert_allclose(ra, r, atol=1e-9)


def test_residual_dimension_mismatch(H39):
    with pytest.raises(InvalidInputError):
        residual(np.ones(H39.M), H39, np.ones(3))


def test_leaf_bus_attack(grid39, H39):
    assert grid39.degree(30) == 1
    attack = make_unobservable_attack(H39, [30], 2.0)
    assert attack.sparsity == 3
    assert attack.norm == pytest.approx(2.0, abs=1e-9)
    col = H39.H[:, H39.column_of(30)]
    np.testing.assert_allclose(attack.a, col * 2.0 / np.linalg.norm(col), atol=1e-12)
    assert np.count_nonzero(attack.c) == 1


def test_attack_witness_and_unobservability(H39):
    attack = make_unobservable_attack(H39, [30, 32, 33, 34], 2.0)
    assert np.linalg.norm(attack.a - H39.H @ attack.c) <= 1e-8 * attack.norm
    ok, c = is_unobservable(attack.a, H39)
    assert ok
    np.testing.assert_allclose(c, attack.c, atol=1e-9)
    assert set(np.flatnonzero(attack.c)) == {H39.column_of(b) for b in (30, 32, 33, 34)}


def test_attack_errors(H39):
    with pytest.raises(InvalidInputError):
        make_unobservable_attack(H39, [], 2.0)
    with pytest.raises(InvalidInputError):
        make_unobservable_attack(H39, [31], 2.0)  # slack
    with pytest.raises(InvalidInputError):
        make_unobservable_attack(H39, [30], 0.0)


def test_is_unobservable_column(H39):
    ok, c = is_unobservable(H39.H[:, 5], H39)
    assert ok
    np.testing.assert_allclose(c, np.eye(H39.N)[5], atol=1e-9)


def test_is_unobservable_orthogonal(H39, rng):
    Hm = H39.H
    projector = np.eye(H39.M) - Hm @ np.linalg.inv(Hm.T @ Hm) @ Hm.T
    a = projector @ rng.standard_normal(H39.M)
    ok, c = is_unobservable(a, H39)
    assert not ok and c is None


def test_is_unobservable_zero(H39):
    ok, c = is_unobservable(np.zeros(H39.M), H39)
    assert ok
    np.testing.assert_array_equal(c, np.zeros(H39.N))


def test_is_unobservable_dimension(H39):
    with pytest.raises(InvalidInputError):
        is_unobservable(np.ones(4), H39)


def test_gain_left_inverse_bundled(H39):
    K = weighted_pinv(H39.H, np.ones(H39.M))
    assert np.max(np.abs(K @ H39.H - np.eye(H39.N))) < 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_estimate_shift(H39, seed):
    r = np.random.default_rng(seed)
    lam = np.full(H39.M, 0.01)
    K = weighted_pinv(H39.H, lam)
    y = H39.H @ r.standard_normal(H39.N) + 0.1 * r.standard_normal(H39.M)
    x_hat = K @ y
    # unobservable: shift equals c
    support = list(r.choice(H39.state_buses, size=3, replace=False))
    attack = make_unobservable_attack(H39, support, float(r.uniform(0.5, 5)))
    np.testing.assert_allclose(K @ (y + attack.a) - x_hat, attack.c, atol=1e-9)
    # observable: shift equals K a
    a = r.standard_normal(H39.M)
    np.testing.assert_allclose(K @ (y + a) - x_hat, K @ a, atol=1e-9)
