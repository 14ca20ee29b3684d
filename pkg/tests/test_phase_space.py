import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlvp.phase_space import (Distribution, FieldOnGrid, charge_density, free_stream, make_grid,
                              maxwellian, perturbed_maxwellian, read_binary, read_csv,
                              solve_poisson, write_binary, write_csv, x_average)


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(15, 64, 6.0)
    with pytest.raises(ValueError):
        make_grid(16, 4, 6.0)
    with pytest.raises(ValueError):
        make_grid(16, 64, -1.0)


def test_grid_nodes_are_symmetric(small_grid):
    v = small_grid.v
    assert v[0] == -small_grid.v_max
    assert np.isclose(v[-1], small_grid.v_max)
    assert np.allclose(v, -v[::-1])


def test_distribution_shape_checked(small_grid):
    with pytest.raises(ValueError):
        Distribution(small_grid, np.zeros((3, 3)))
    bad = np.zeros((small_grid.nx, small_grid.nv))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Distribution(small_grid, bad)


def test_perturbed_maxwellian_is_normalized(small_grid):
    f = perturbed_maxwellian(small_grid, 0.3)
    assert abs(f.mass() - 1.0) < 1e-14
    assert f.values.min() > 0


def test_support_check(small_grid):
    f = perturbed_maxwellian(small_grid, 0.0)
    f.check_support(1e-6)
    with pytest.raises(ValueError, match="compact-support"):
        f.check_support(1e-12)


def test_poisson_cosine(small_grid):
    # rho = a cos x  ->  E = a sin x  (dE/dx = rho)
    a = 0.2
    f = perturbed_maxwellian(small_grid, a)
    e = solve_poisson(f)
    assert np.allclose(e.values, a * np.sin(small_grid.x), atol=1e-13)
    assert np.allclose(np.gradient(e.values, small_grid.x, edge_order=2)[3:-3],
                       charge_density(f)[3:-3], atol=5e-2 * a)


def test_poisson_rejects_charged_state(small_grid):
    f = perturbed_maxwellian(small_grid, 0.0)
    f.values *= 1.001
    with pytest.raises(ValueError, match="neutrality"):
        solve_poisson(f)


def test_field_energy():
    g = make_grid(32, 16, 4.0)
    e = FieldOnGrid.from_values(g, 0.5 * np.cos(g.x))
    assert np.isclose(e.energy(), 0.5 * 0.25 * 0.5)
    full = e.fourier
    assert full.size == g.nx


@given(tau=st.floats(-20, 20), tau2=st.floats(-20, 20))
def test_free_stream_group_property(tau, tau2):
    g = make_grid(16, 33, 4.0)
    rng = np.random.default_rng(3)
    f = Distribution(g, rng.random((g.nx, g.nv)))
    one = free_stream(free_stream(f, tau), tau2).values
    both = free_stream(f, tau + tau2).values
    assert np.allclose(one, both, atol=1e-11)


def test_free_stream_conserves_x_average(landau_f0):
    out = free_stream(landau_f0, 3.7)
    assert np.allclose(x_average(out), x_average(landau_f0), atol=1e-14)
    assert abs(out.l2_norm() - landau_f0.l2_norm()) < 1e-12


def test_csv_roundtrip(tmp_path, landau_f0):
    path = tmp_path / "f.csv"
    write_csv(landau_f0, path)
    assert path.read_text().startswith("v\\x,0,")
    back = read_csv(path)
    assert back.grid == landau_f0.grid
    assert np.array_equal(back.values, landau_f0.values)


def test_binary_roundtrip(tmp_path, landau_f0):
    path = tmp_path / "f.bin"
    write_binary(landau_f0, path)
    raw = path.read_bytes()
    assert int.from_bytes(raw[:8], "little") == landau_f0.grid.nx
    back = read_binary(path)
    assert np.array_equal(back.values, landau_f0.values)


def test_maxwellian_moments():
    v = np.linspace(-10, 10, 4001)
    m = maxwellian(v, 1.5, 0.5)
    assert np.isclose(np.trapezoid(m, v), 1.0)
    assert np.isclose(np.trapezoid(v * m, v), 0.5)
