import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlvp.dispersion import (ProfileG, find_roots, kernel_faddeeva, kernel_K, kernel_velocity,
                             landau_decay_fit, newton_root, stability_margin, winding_number)

MAXWELL_ROOT = -0.15335946690960467 + 1.4156618886045365j


class TestProfiles:
    def test_mass_checked(self):
        with pytest.raises(ValueError):
            ProfileG("bump_on_tail", [0.5, 0.6], [0, 1], [1, 1])
        v = np.linspace(-5, 5, 101)
        with pytest.raises(ValueError, match="mass"):
            ProfileG.gridded(v, np.ones_like(v))

    def test_transform_of_maxwellian(self):
        p = ProfileG.maxwellian(1.3, 0.4)
        xi = np.array([0.0, 0.5, 2.0])
        ref = np.exp(-0.4j * xi - 0.5 * (1.3 * xi) ** 2)
        assert np.allclose(p.transform(xi), ref)

    def test_gridded_matches_samples(self):
        p = ProfileG.bump_on_tail()
        v = np.linspace(-8, 8, 801)
        g = p.sample(v)
        g /= np.trapezoid(g, v)
        grid = ProfileG.gridded(v, g)
        assert np.allclose(grid.sample(v), g)
        assert np.allclose(grid.derivative(v[100:-100]).real, p.derivative(v[100:-100]).real,
                           atol=1e-4)

    def test_dict_roundtrip(self):
        p = ProfileG.bump_on_tail()
        q = ProfileG.from_dict(p.to_dict())
        assert np.array_equal(q.centers, p.centers)


class TestKernel:
    @given(re=st.floats(0.01, 2.0), im=st.floats(-3, 3), k=st.floats(0.2, 2.0))
    def test_time_form_matches_faddeeva(self, re, im, k):
        lam = complex(re, im)
        p = ProfileG.maxwellian()
        t = kernel_K(p, k, lam, method="time")
        assert abs(t - kernel_faddeeva(k, lam)) < 1e-8 * max(1.0, abs(t))

    def test_conjugate_symmetry(self):
        # K(lambda, -k) = conj K(conj lambda, k)
        p = ProfileG.bump_on_tail()
        lam = 0.3 + 0.8j
        a = kernel_K(p, -0.4, lam)
        b = np.conj(kernel_K(p, 0.4, np.conj(lam)))
        assert abs(a - b) < 1e-10

    def test_strip_is_enforced(self):
        p = ProfileG.maxwellian()
        with pytest.raises(ValueError, match="strip"):
            kernel_K(p, 1.0, -5.0 + 0j)

    def test_gridded_velocity_form(self):
        p = ProfileG.maxwellian()
        v = np.linspace(-10, 10, 4001)
        g = p.sample(v)
        grid = ProfileG.gridded(v, g / np.trapezoid(g, v))
        lam = 0.2 + 1.1j
        assert abs(kernel_K(grid, 0.5, lam) - kernel_faddeeva(0.5, lam)) < 1e-6

    def test_derivative(self):
        p = ProfileG.bump_on_tail()
        lam, h = 0.4 - 0.2j, 1e-6
        _, d = kernel_K(p, 0.3, lam, deriv=True)
        fd = (kernel_K(p, 0.3, lam + h) - kernel_K(p, 0.3, lam - h)) / (2 * h)
        assert abs(d - fd) < 1e-6 * max(1, abs(d))

    def test_velocity_derivative_for_closed_form(self):
        k, lam = 0.5, 0.1 + 1.0j
        val, d = kernel_velocity(ProfileG.maxwellian(), k, np.array(lam), deriv=True)
        h = 1e-6
        fd = (kernel_faddeeva(k, lam + h) - kernel_faddeeva(k, lam - h)) / (2 * h)
        assert abs(complex(d) - fd) < 1e-6


class TestRoots:
    def test_winding_of_polynomial(self):
        f = lambda z: (z - 0.5) * (z + 0.3j) * (z - 3)
        assert winding_number(f, (-1, 1, -1, 1)) == 2
        assert winding_number(f, (2, 4, -1, 1)) == 1

    def test_maxwellian_landau_root(self):
        res = find_roots(ProfileG.maxwellian(), 0.5, (-0.5, 0.1, 1.0, 2.0))
        assert res.winding == 1 and res.consistent
        assert abs(res[0].lam - MAXWELL_ROOT) < 1e-9
        assert res[0].mirrored().lam == np.conj(res[0].lam)

    def test_newton_from_nearby_guess(self):
        lam, resid = newton_root(ProfileG.maxwellian(), 0.5, 1.4j)
        assert abs(lam - MAXWELL_ROOT) < 1e-10 and resid < 1e-12

    def test_bump_on_tail_is_unstable(self):
        res = find_roots(ProfileG.bump_on_tail(), 0.3, (0.01, 1.0, -2.0, 0.0))
        assert len(res) == 1 and res.consistent
        lam = res[0].lam
        assert lam.real > 0
        assert abs(lam - (0.19809797584302516 - 1.00121789363112j)) < 1e-8
        # resonance on the positive slope of the bump
        assert ProfileG.bump_on_tail().derivative(np.array(-lam.imag / 0.3)).real > 0

    def test_stability_margin(self):
        m = stability_margin(ProfileG.maxwellian(), 2)
        assert 0.5 < m.kappa < 1.0
        assert m.root is None
        unstable = stability_margin(ProfileG.bump_on_tail(), 1, length=2 * np.pi / 0.3)
        assert unstable.kappa == 0.0 and unstable.root is not None


class TestDecayFit:
    def test_pure_exponential(self):
        t = np.linspace(0, 10, 200)
        fit = landau_decay_fit(t, 3 * np.exp(-0.4 * t))
        assert np.isclose(fit.rate, -0.4) and fit.r2 > 0.9999

    def test_oscillating_envelope(self):
        t = np.linspace(0, 30, 3000)
        w = np.exp(-0.3 * t) * (np.cos(1.4 * t) ** 2 + 1e-3)
        fit = landau_decay_fit(t, w)
        assert abs(fit.rate + 0.3) < 0.01

    def test_rejects_bad_series(self):
        with pytest.raises(ValueError):
            landau_decay_fit(np.arange(5.0), np.ones(5))
        with pytest.raises(ValueError):
            landau_decay_fit(np.arange(30.0), np.ones(30))
