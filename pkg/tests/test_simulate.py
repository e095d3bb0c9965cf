import numpy as np
import pytest

from ougauss.errors import ParameterDomainError, SimulationError
from ougauss.kernels import eval_kernel, gram_matrix, kernel
from ougauss.simulate import (
    MAX_GRID,
    GaussianPath,
    TimeGrid,
    _factorize,
    alternative_representation,
    build_ou_path,
    cholesky_factor,
    conditional_variances,
    ou_from_noise,
    read_path_csv,
    refine_path,
    sample_gaussian_path,
    sample_gaussian_paths,
    write_path_csv,
)


def test_grid():
    g = TimeGrid(4, 0.25)
    np.testing.assert_array_equal(g.points, [0, 0.25, 0.5, 0.75, 1.0])
    assert g.T == 1.0
    with pytest.raises(ParameterDomainError):
        TimeGrid(0, 0.1)
    with pytest.raises(ParameterDomainError):
        TimeGrid(10, 0.0)


def test_terminal_variance_monte_carlo():
    spec = kernel("FBm", H=0.7)
    grid = TimeGrid(50, 0.02)
    G = sample_gaussian_paths(spec, grid, 7, 10_000)
    v = np.mean(G[:, -1] ** 2)
    R = eval_kernel(spec, 1.0, 1.0)
    assert abs(v - R) < 3 * R * np.sqrt(2 / 10_000)
    assert np.all(G[:, 0] == 0.0)


def test_seed_determinism():
    spec, grid = kernel("SubFBm", H=0.3), TimeGrid(40, 0.1)
    a = sample_gaussian_path(spec, grid, 11)
    b = sample_gaussian_path(spec, grid, 11)
    c = sample_gaussian_path(spec, grid, 12)
    assert np.array_equal(a.g_values, b.g_values)
    assert not np.array_equal(a.g_values, c.g_values)
    assert a.g_values[0] == 0.0
    assert np.array_equal(a.g_values, sample_gaussian_paths(spec, grid, 11, 3)[0])


def test_batches_independent_of_scheduling():
    spec, grid = kernel("FBm", H=0.4), TimeGrid(30, 0.1)
    full = sample_gaussian_paths(spec, grid, 3, 10)
    threaded = sample_gaussian_paths(spec, grid, 3, 10, workers=3)
    tail = sample_gaussian_paths(spec, grid, 3, 4, start=6)
    assert np.array_equal(full, threaded)
    assert np.array_equal(full[6:], tail)


@pytest.mark.parametrize("spec", [kernel("FBm", H=0.3), kernel("SubFBm", H=0.75)], ids=lambda s: s.label)
def test_exact_law_covariance(spec):
    n, N = 32, 20_000
    grid = TimeGrid(n, 0.1)
    G = sample_gaussian_paths(spec, grid, 2024, N)[:, 1:]
    emp = G.T @ G / N
    K = gram_matrix(spec, grid.points[1:])
    d = np.diag(K)
    se = np.sqrt((np.outer(d, d) + K**2) / N)
    assert np.max(np.abs(emp - K) / se) < 4.0


def test_grid_cap():
    with pytest.raises(ParameterDomainError):
        cholesky_factor(kernel("FBm", H=0.7), TimeGrid(MAX_GRID + 1, 1e-3))


def test_jitter_and_failure():
    v = np.array([1.0, 1.0, 1.0])
    L = _factorize(np.outer(v, v))  # rank one, needs jitter
    assert np.allclose(L @ L.T, np.outer(v, v), atol=1e-6)
    with pytest.raises(SimulationError, match="minimum eigenvalue"):
        _factorize(np.diag([1.0, -1.0]))


def test_reconstruction_identity():
    g = sample_gaussian_path(kernel("FBm", H=0.7), TimeGrid(500, 0.02), 4)
    x = build_ou_path(g, 1.3)
    t = x.grid.points
    np.testing.assert_allclose(x.x_values, np.exp(1.3 * t) * x.zeta_values, rtol=1e-10, atol=0)
    assert x.x_values[0] == 0.0


def test_zero_noise_and_small_theta():
    grid = TimeGrid(20, 0.1)
    zero = GaussianPath(grid, np.zeros(21), None, None)
    assert np.all(build_ou_path(zero, 1.0).x_values == 0.0)
    g = sample_gaussian_path(kernel("SubFBm", H=0.3), grid, 5)
    np.testing.assert_allclose(build_ou_path(g, 1e-8).x_values, g.g_values, atol=1e-7)
    with pytest.raises(ParameterDomainError):
        build_ou_path(g, 0.0)


def test_representations_converge_on_refinement():
    spec, theta = kernel("FBm", H=0.7), 1.0
    g = sample_gaussian_path(spec, TimeGrid(64, 1 / 16), 8)
    gaps = []
    for k in range(3):
        x = build_ou_path(g, theta)
        # compare at the coarse grid points only
        step = 2**k
        diff = np.abs(x.x_values - alternative_representation(x))[::step]
        gaps.append(diff.max())
        g = refine_path(g, 2, 100 + k)
    assert gaps[1] <= 0.6 * gaps[0] and gaps[2] <= 0.6 * gaps[1]


def test_midpoint_rule_differs_by_constant_factor():
    grid = TimeGrid(50, 0.1)
    G = sample_gaussian_paths(kernel("FBm", H=0.7), grid, 1, 2)
    xl, _, _ = ou_from_noise(G, grid, 0.8)
    xm, _, _ = ou_from_noise(G, grid, 0.8, "midpoint")
    np.testing.assert_allclose(xm, xl * np.exp(-0.4 * grid.delta), rtol=1e-12)


def test_refine_preserves_values_and_reduces_variance():
    spec = kernel("SubFBm", H=0.75)
    g = sample_gaussian_path(spec, TimeGrid(10, 0.5), 1)
    r = refine_path(g, 4, 2)
    assert r.grid.n == 40 and r.grid.delta == 0.125
    np.testing.assert_array_equal(r.g_values[::4], g.g_values)
    cv = conditional_variances(g, 4)
    fine = r.grid.points
    new = fine[np.arange(41) % 4 != 0]
    assert np.all(cv >= -1e-12)
    assert np.all(cv <= eval_kernel(spec, new, new) + 1e-12)
    with pytest.raises(ParameterDomainError):
        refine_path(g, 1, 0)


def test_refined_paths_have_kernel_covariance():
    spec = kernel("FBm", H=0.3)
    coarse = TimeGrid(4, 0.5)
    G = sample_gaussian_paths(spec, coarse, 9, 6000)
    fine = np.array([refine_path(GaussianPath(coarse, row, 9, spec), 2, 10_000 + i).g_values
                     for i, row in enumerate(G)])[:, 1:]
    N = len(fine)
    emp = fine.T @ fine / N
    K = gram_matrix(spec, TimeGrid(8, 0.25).points[1:])
    d = np.diag(K)
    se = np.sqrt((np.outer(d, d) + K**2) / N)
    assert np.max(np.abs(emp - K) / se) < 4.5


def test_csv_round_trip(tmp_path):
    g = sample_gaussian_path(kernel("FBm", H=0.7), TimeGrid(30, 0.1), 3)
    x = build_ou_path(g, 1.0)
    p = tmp_path / "path.csv"
    write_path_csv(x, p)
    header = p.read_text().splitlines()[0]
    assert header == "t,G,X,zeta,Z"
    back = read_path_csv(p)
    assert back.grid == x.grid
    assert np.array_equal(back.x_values, x.x_values)


def test_csv_rejects_uneven_grid(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,X\n0,0\n0.1,1\n0.3,2\n")
    with pytest.raises(ParameterDomainError):
        read_path_csv(p)
    p.write_text("time,value\n0,0\n")
    with pytest.raises(ParameterDomainError):
        read_path_csv(p)
