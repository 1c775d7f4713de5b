import numpy as np
import pytest

from ndrecon.exceptions import CFLViolation, ShapeMismatch
from ndrecon.grid import Grid, build_grid
from ndrecon.operators import build_operators
from ndrecon.wave import (
    Coefficients,
    HyperbolicNDMap,
    assemble_hyperbolic_nd_map,
    cache_key,
    wave_solve,
)


def smooth_pulse(t, start, stop):
    """C^2 bump supported in [start, stop]."""
    s = np.clip((t - start) / (stop - start), 0.0, 1.0)
    return np.sin(np.pi * s) ** 4


def extended_signal(grid, left=None, right=None):
    t = grid.t_ext_nodes
    zero = np.zeros_like(t)
    return np.concatenate([zero if left is None else left(t), zero if right is None else right(t)])


@pytest.fixture(scope="module")
def free_grid():
    g = build_grid(-1, 1, 401, 4.0, 1.0)
    return g, Coefficients.on_grid(g, 1.0, 0.0)


def test_zero_data_gives_zero_field(small_setup):
    grid, coeff, _, _ = small_setup
    field = wave_solve(grid, coeff, np.zeros(4 * grid.n_t))
    assert field.u.shape == (2 * grid.n_t, grid.n_x)
    assert not field.u.any()


def test_finite_speed_dalembert(free_grid):
    grid, coeff = free_grid
    f = extended_signal(grid, left=lambda t: smooth_pulse(t, 0.1, 0.3))
    field = wave_solve(grid, coeff, f)
    t = grid.t_ext_nodes
    right = field.u[:, -1]
    peak = np.abs(field.u[:, 0]).max()
    assert np.abs(right[t < 2.0]).max() <= 1e-8 * peak
    assert np.abs(right[(t > 2.1) & (t < 2.4)]).max() > 0.1 * peak


def discrete_energy(field, grid, c):
    u, dt, dx = field.u, grid.dt, grid.dx
    ut = (u[2:] - u[:-2]) / (2 * dt)
    ux = np.diff(u[1:-1], axis=1) / dx
    cm = 0.5 * (c[1:] + c[:-1])
    w = np.full(grid.n_x, dx)
    w[[0, -1]] = dx / 2
    return (ut**2 @ w) + ((cm**2 * ux**2) @ np.full(grid.n_x - 1, dx))


def test_energy_conserved_after_source(free_grid):
    grid, coeff = free_grid
    f = extended_signal(grid, left=lambda t: smooth_pulse(t, 0.1, 0.6))
    field = wave_solve(grid, coeff, f)
    e = discrete_energy(field, grid, coeff.c)
    t = grid.t_ext_nodes[1:-1]
    after = e[t > 0.7]
    assert after.max() - after.min() <= 0.01 * after.mean()
    assert after.mean() > 0


def test_cfl_recheck():
    g = build_grid(-1, 1, 41, 2.0, 1.0)
    fast = Coefficients.on_grid(g, 2.0, 0.0)
    with pytest.raises(CFLViolation):
        wave_solve(g, fast, np.zeros(4 * g.n_t))


def test_shape_checks(small_setup):
    grid, coeff, _, _ = small_setup
    with pytest.raises(ShapeMismatch):
        wave_solve(grid, coeff, np.zeros(3 * grid.n_t))
    with pytest.raises(ShapeMismatch):
        wave_solve(grid, coeff, np.zeros(4 * grid.n_t), n_steps=4 * grid.n_t)


def test_short_signal_is_zero_extended(small_setup, rng):
    grid, coeff, _, _ = small_setup
    n = grid.n_t
    f = rng.standard_normal(2 * n)
    ext = np.zeros(4 * n)
    ext[:n], ext[2 * n : 3 * n] = f[:n], f[n:]
    a = wave_solve(grid, coeff, f).u
    b = wave_solve(grid, coeff, ext).u
    assert np.array_equal(a, b)


def test_full_scale_shapes(full_setup):
    _, _, nd, _ = full_setup
    assert nd.Lambda.shape == (4004, 4004)
    assert nd.Lambda_T.shape == (2002, 2002)
    assert np.isrealobj(nd.Lambda)


def test_lambda_T_is_restriction(small_setup):
    _, _, nd, ops = small_setup
    assert np.array_equal(nd.Lambda_T, ops.P_T @ nd.Lambda @ ops.P_T.T)


def test_superposition_matches_direct_solve(ci_setup):
    grid, coeff, nd, _ = ci_setup
    f = extended_signal(
        grid,
        left=lambda t: smooth_pulse(t, 0.2, 1.5),
        right=lambda t: -0.7 * smooth_pulse(t, 0.9, 3.1),
    )
    direct = wave_solve(grid, coeff, f).boundary_trace()
    via_map = nd.apply(f)
    assert np.linalg.norm(via_map - direct) <= 1e-10 * np.linalg.norm(direct)


def test_time_shift_consistency(ci_setup, rng):
    grid, coeff, nd, _ = ci_setup
    n_ext = 2 * grid.n_t
    for col in rng.integers(0, 4 * grid.n_t, size=6):
        e = np.zeros(4 * grid.n_t)
        e[col] = 1.0
        direct = wave_solve(grid, coeff, e).boundary_trace()
        scale = max(np.linalg.norm(direct), 1e-300)
        assert np.linalg.norm(nd.Lambda[:, col] - direct) <= 1e-12 * scale
    assert not nd.Lambda[:, 0].any() and not nd.Lambda[:, n_ext].any()


def test_linearity(small_setup, rng):
    _, _, nd, _ = small_setup
    f, h = rng.standard_normal((2, nd.Lambda.shape[0]))
    a, b = 0.3, -2.1
    lhs = nd.apply(a * f + b * h)
    rhs = a * nd.apply(f) + b * nd.apply(h)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())


def weighted_asymmetry(nd, ops):
    w = ops.quadrature_weights()
    WL = w[:, None] * nd.Lambda_T
    adj = (ops.R @ nd.Lambda_T @ ops.R).T * w[None, :]
    return np.linalg.norm(WL - adj) / np.linalg.norm(WL)


def test_weighted_asymmetry_decays_with_refinement(small_setup, ci_setup):
    coarse = weighted_asymmetry(small_setup[2], small_setup[3])
    fine = weighted_asymmetry(ci_setup[2], ci_setup[3])
    assert fine < 0.75 * coarse


def finite_speed_leak(nd, grid, margin):
    """Largest right-end response to a left impulse arriving earlier than ``tau_max - margin``.

    Relative to the maximum of the response; every column is a shift of column 1.
    """
    n_ext = 2 * grid.n_t
    response = nd.Lambda[n_ext:, 1]
    lag = (np.arange(n_ext) - 1) * grid.dt
    early = lag < grid.tau_max - margin
    return np.abs(response[early]).max() / np.abs(response).max()


def test_finite_speed_band_ci(ci_setup):
    grid, _, nd, _ = ci_setup
    # dispersion zone of the broadband nodal impulse: 10% of the travel time at N_x = 101
    assert finite_speed_leak(nd, grid, 0.10 * grid.tau_max) <= 1e-6
    assert finite_speed_leak(nd, grid, -0.05 * grid.tau_max) > 0.1


def commutator_ratio(nd, ops, grid):
    t = ops.t_nodes
    f = np.concatenate([smooth_pulse(t, 0.3, 2.0), 0.5 * smooth_pulse(t, 1.0, 3.5)])
    lhs = nd.Lambda_T @ (ops.int2 @ f)
    rhs = ops.int2 @ (nd.Lambda_T @ f)
    return np.linalg.norm(lhs - rhs) / ((grid.dt + grid.dx**2) * np.linalg.norm(f))


def test_commutativity_ci(ci_setup):
    _, _, nd, ops = ci_setup
    grid = ci_setup[0]
    assert commutator_ratio(nd, ops, grid) <= 10


def test_cache_round_trip(tmp_path, small_setup):
    grid, coeff, nd, _ = small_setup
    first = assemble_hyperbolic_nd_map(grid, coeff, cache_dir=tmp_path)
    key = cache_key(grid, coeff)
    assert (tmp_path / f"lambda_{key}.npy").exists()
    meta = (tmp_path / f"lambda_{key}.json").read_text()
    assert coeff.digest() in meta
    second = assemble_hyperbolic_nd_map(grid, coeff, cache_dir=tmp_path)
    assert np.array_equal(first.Lambda, nd.Lambda)
    assert np.array_equal(second.Lambda, nd.Lambda)


def test_cache_key_depends_on_coefficients(small_setup):
    grid, coeff, _, _ = small_setup
    other = Coefficients(coeff.c, coeff.q + 1e-3)
    assert cache_key(grid, coeff) != cache_key(grid, other)


def test_from_matrix_validation():
    with pytest.raises(ShapeMismatch):
        HyperbolicNDMap.from_matrix(np.zeros((6, 6)))
    assert HyperbolicNDMap.from_matrix(np.zeros((12, 12))).n_t == 3


def test_snapshot_accessor(small_setup):
    grid, coeff, _, _ = small_setup
    field = wave_solve(grid, coeff, np.ones(4 * grid.n_t))
    assert np.array_equal(field.snapshot_at(grid.horizon_T), field.u[grid.n_t - 1])
    with pytest.raises(ValueError):
        field.snapshot_at(grid.dt / 3)
