import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlvp.diffusion import (BarProfile, DiffusionField, analytic_diffusion, ansatz_diffusion,
                            bump, empirical_diffusion, filon_weights, solve_diffusion,
                            step_diffusion, weak_limit_pairing, weak_limit_value)
from qlvp.phase_space import maxwellian
from qlvp.stochastic_field import (AnsatzMode, AnsatzSpec, CorrelationSpec, ModeEntry,
                                   ansatz_realization, synthesize_realization)


def test_analytic_diffusion_single_mode():
    spec = CorrelationSpec.symmetric([ModeEntry(1, 0.0, "triangular", 2.0, 1.0)])
    d = analytic_diffusion(spec, np.array([0.0]))
    # 1/2 (A-hat(0) + A-hat(0)) = A-hat(0) = a tau
    assert np.isclose(d.values[0], 2.0)


@given(amp=st.floats(0, 5), tau=st.floats(0.1, 5), omega=st.floats(-3, 3))
def test_analytic_diffusion_nonnegative(amp, tau, omega):
    spec = CorrelationSpec.symmetric([ModeEntry(1, omega, "bohman", amp, tau),
                                      ModeEntry(3, -omega, "triangular", amp, tau)])
    d = analytic_diffusion(spec, np.linspace(-20, 20, 801))
    d.check_nonnegative()


def test_negative_field_rejected():
    d = DiffusionField(np.arange(3.0), np.array([0.0, -1.0, 0.0]))
    with pytest.raises(ValueError, match="negative"):
        d.check_nonnegative()
    with pytest.raises(ValueError):
        DiffusionField(np.arange(3.0), np.array([0.0, np.inf, 0.0]))


@given(theta=st.floats(-50, 50), h=st.floats(0.01, 1.0))
def test_filon_weights_integrate_linear_functions(theta, h):
    w0, w1 = filon_weights(np.array([theta]), h)
    s = np.linspace(0, h, 4001)
    e = np.exp(1j * theta * s)
    ref0 = np.trapezoid((1 - s / h) * e, s)
    ref1 = np.trapezoid((s / h) * e, s)
    assert abs(w0[0] - ref0) < 1e-6 * max(1, h)
    assert abs(w1[0] - ref1) < 1e-6 * max(1, h)


@pytest.mark.parametrize("eps", [0.3, 0.1])
def test_empirical_equals_closed_form_for_ansatz(eps):
    spec = AnsatzSpec.symmetric([AnsatzMode(1, 1.0, 2.0, 0.3), AnsatzMode(2, 0.5, 1.0, 0.1j)])
    v = np.linspace(-3, 3, 61)
    n = int(round(1.0 / eps**2 * 32))
    t = n / 32 * eps**2
    real = ansatz_realization(spec, eps, 1 / 32, n)
    emp = empirical_diffusion(real, t, eps, v)
    ref = ansatz_diffusion(spec, eps, t, v)
    assert np.max(np.abs(emp.values - ref.values)) < 1e-9 * np.max(np.abs(ref.values))


def test_empirical_time_must_be_on_grid(two_mode_spec):
    r = synthesize_realization(two_mode_spec, 0, 0.1, 1 / 16, 1000)
    with pytest.raises(ValueError, match="time grid"):
        empirical_diffusion(r, 0.10003, 0.1, np.zeros(3))
    with pytest.raises(ValueError, match="covers"):
        empirical_diffusion(r, 1.0, 0.1, np.zeros(3))


def test_trapezoid_rule_is_less_accurate():
    spec = AnsatzSpec.symmetric([AnsatzMode(1, 1.0, 2.0, 0.3)])
    v = np.linspace(-3, 3, 31)
    eps = 0.2
    real = ansatz_realization(spec, eps, 1 / 16, int(round(16 / eps**2)))
    ref = ansatz_diffusion(spec, eps, 1.0, v).values
    filon = empirical_diffusion(real, 1.0, eps, v).values
    trap = empirical_diffusion(real, 1.0, eps, v, method="trapezoid").values
    assert np.max(np.abs(filon - ref)) < np.max(np.abs(trap - ref))


def test_weak_limit_value():
    spec = AnsatzSpec.symmetric([AnsatzMode(2, 1.0, 2.0, 0.5)])
    phi = bump(0.5, 2.5)
    # both +/-k resonate at v = omega / k = 0.5: 2 * pi * 2 * 0.25 * phi(0.5)
    assert np.isclose(weak_limit_value(spec, phi), 2 * np.pi * 2 * 0.25 * np.exp(-1.0))


def test_weak_limit_pairing_converges():
    spec = AnsatzSpec.symmetric([AnsatzMode(1, 1.0, 2.0, 0.5)])
    phi = bump(0.5, 2.5)
    v = np.linspace(-3, 4, 12001)
    target = weak_limit_value(spec, phi)
    errs = [abs(weak_limit_pairing(ansatz_diffusion(spec, e, 1.0, v), phi(v)) - target)
            for e in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_bump_support():
    phi = bump(1.0, 0.5)
    v = np.array([0.4, 0.5, 1.0, 1.5, 1.6])
    out = phi(v)
    assert out[0] == out[1] == out[3] == out[4] == 0
    assert np.isclose(out[2], np.exp(-1))


def _profile(n=201):
    v = np.linspace(-6, 6, n)
    p = BarProfile(v, maxwellian(v, 0.7, 0.5))
    return BarProfile(v, p.values / p.mass())


@given(theta=st.sampled_from([0.5, 1.0]), dt=st.floats(1e-3, 1.0))
def test_diffusion_step_conserves_and_dissipates(theta, dt):
    p = _profile()
    d = DiffusionField(p.v, 0.2 + 0.1 * np.sin(p.v) ** 2)
    q = step_diffusion(p, d, dt, theta)
    assert abs(q.mass() - p.mass()) < 1e-13
    if theta == 1.0:
        assert q.l2_norm() <= p.l2_norm() + 1e-15
        assert q.values.min() >= 0


def test_heat_kernel_oracle():
    # constant D: a Gaussian of variance s2 becomes variance s2 + 2 D t
    v = np.linspace(-12, 12, 1201)
    p = BarProfile(v, maxwellian(v, 1.0))
    d = DiffusionField(v, np.full(v.size, 0.5))
    q = solve_diffusion(p, d, 1.0, 1e-3, theta=0.5)
    assert np.max(np.abs(q.values - maxwellian(v, np.sqrt(2.0)))) < 1e-5


def test_zero_coefficient_is_identity():
    p = _profile()
    q = solve_diffusion(p, DiffusionField(p.v, np.zeros_like(p.v)), 1.0, 0.1)
    assert np.allclose(q.values, p.values)


def test_diffusion_argument_checks():
    p = _profile()
    d = DiffusionField(p.v, np.ones_like(p.v))
    with pytest.raises(ValueError):
        step_diffusion(p, d, -0.1)
    with pytest.raises(ValueError):
        step_diffusion(p, d, 0.1, theta=2.0)
    with pytest.raises(ValueError):
        step_diffusion(p, DiffusionField(p.v[:5], np.ones(5)), 0.1)


def test_two_column_csv(tmp_path):
    p = _profile(11)
    p.write_csv(tmp_path / "p.csv")
    assert np.allclose(BarProfile.read_csv(tmp_path / "p.csv").values, p.values)
    d = DiffusionField(p.v, p.values)
    d.write_csv(tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().startswith("v,D\n")
    assert np.array_equal(DiffusionField.read_csv(tmp_path / "d.csv").values, d.values)


def test_empirical_mean_matches_analytic(two_mode_spec):
    v = np.array([-1.0, 0.5, 2.0])
    eps, n = 0.3, 178
    t = n / 16 * eps**2
    d = np.array([empirical_diffusion(synthesize_realization(two_mode_spec, s, eps, 1 / 16, n + 2),
                                      t, eps, v).values for s in range(400)])
    ref = analytic_diffusion(two_mode_spec, v).values
    se = d.std(axis=0, ddof=1) / np.sqrt(len(d))
    assert np.all(np.abs(d.mean(axis=0) - ref) < 4 * se)
