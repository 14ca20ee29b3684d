import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlvp.phase_space import make_grid
from qlvp.stochastic_field import (AnsatzMode, AnsatzSpec, CorrelationSpec, ModeEntry,
                                   ansatz_realization, correlation, deterministic_ansatz_field,
                                   hat_correlation, load_spec, synthesize_realization,
                                   verify_correlation)


@pytest.mark.parametrize("family", ["triangular", "bohman"])
def test_correlation_shape(family):
    s = np.linspace(-3, 3, 601)
    a = correlation(family, 2.0, 1.5, s)
    assert np.isclose(correlation(family, 2.0, 1.5, 0.0), 2.0)
    assert np.allclose(a, a[::-1])
    assert np.all(a[np.abs(s) > 1.5] == 0)


@pytest.mark.parametrize("family", ["triangular", "bohman"])
def test_hat_matches_quadrature(family):
    sig = np.linspace(-1, 1, 20001)
    a = correlation(family, 1.0, 1.0, sig)
    for s in (0.0, 0.7, 3.0, 11.0):
        num = np.trapezoid(a * np.cos(s * sig), sig)
        assert abs(num - hat_correlation(family, 1.0, 1.0, s)) < 1e-7


@given(s=st.floats(-1e3, 1e3), amp=st.floats(0, 10), tau=st.floats(0.05, 20))
def test_hat_nonnegative(s, amp, tau):
    for family in ("triangular", "bohman"):
        assert hat_correlation(family, amp, tau, s) >= 0


def test_spec_requires_partners():
    with pytest.raises(ValueError, match="partner"):
        CorrelationSpec((ModeEntry(1, 0.5),))
    with pytest.raises(ValueError):
        CorrelationSpec((ModeEntry(1, 0.5), ModeEntry(-1, 0.5)))
    with pytest.raises(ValueError):
        ModeEntry(0, 1.0)
    with pytest.raises(ValueError):
        ModeEntry(1, 1.0, "raised_cosine")


def test_spec_roundtrip(tmp_path, two_mode_spec):
    import json
    data = two_mode_spec.to_dict()
    assert CorrelationSpec.from_dict(data) == two_mode_spec
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(data))
    assert load_spec(path) == two_mode_spec
    ans = AnsatzSpec.symmetric([AnsatzMode(1, 1.0, 2.0, 0.3 + 0.1j)])
    path.write_text(json.dumps({"kind": "ansatz", **ans.to_dict()}))
    assert load_spec(path) == ans


def test_realization_is_reproducible(two_mode_spec):
    a = synthesize_realization(two_mode_spec, 5, 0.1, 1 / 16, 400)
    b = synthesize_realization(two_mode_spec, 5, 0.1, 1 / 16, 400)
    c = synthesize_realization(two_mode_spec, 6, 0.1, 1 / 16, 400)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert not np.array_equal(a.amplitudes, c.amplitudes)


def test_realization_length(two_mode_spec):
    r = synthesize_realization(two_mode_spec, 1, 0.1, 1 / 16, 200)
    assert r.n_samples == 201
    assert np.isclose(r.duration, 200 / 16)


def test_resolution_check(two_mode_spec):
    with pytest.raises(ValueError, match="resolve"):
        synthesize_realization(two_mode_spec, 0, 0.1, 0.5, 10)


def test_field_is_real_and_bounded(two_mode_spec):
    g = make_grid(16, 16, 4.0)
    r = synthesize_realization(two_mode_spec, 3, 0.1, 1 / 16, 300)
    bound = r.max_field_bound()
    for tau in np.linspace(0, r.duration, 17):
        e = r.field(tau, g)
        assert np.max(np.abs(e.values)) <= bound + 1e-12
    with pytest.raises(ValueError):
        r.amplitude_at(r.duration + 1.0)


def test_interpolation_is_linear(two_mode_spec):
    r = synthesize_realization(two_mode_spec, 3, 0.1, 1 / 16, 30)
    mid = r.amplitude_at(1.5 / 16)
    assert np.allclose(mid, 0.5 * (r.amplitudes[1] + r.amplitudes[2]))


@pytest.mark.parametrize("backend", ["spectral", "moving_average"])
def test_correlation_verification(two_mode_spec, backend):
    reals = [synthesize_realization(two_mode_spec, s, 0.1, 1 / 16, 2000, backend) for s in range(200)]
    rep = verify_correlation(reals, two_mode_spec)
    assert np.all(rep.inside_deviation < 0.1)
    assert np.all(rep.outside_leakage < 0.1)
    assert rep.bochner_ok
    assert not rep.notes


def test_duplicate_realizations_are_flagged(two_mode_spec):
    r = synthesize_realization(two_mode_spec, 1, 0.1, 1 / 16, 200)
    rep = verify_correlation([r, r, r], two_mode_spec)
    assert rep.notes


def test_ansatz_realization_matches_direct_field():
    spec = AnsatzSpec.symmetric([AnsatzMode(1, 1.3, 1.0, 0.2 - 0.1j), AnsatzMode(3, 0.4, 2.0, 0.05)])
    eps = 0.2
    g = make_grid(16, 16, 4.0)
    r = ansatz_realization(spec, eps, 1 / 32, 200)
    for t in (0.0, 0.05, 0.11):
        direct = deterministic_ansatz_field(spec, eps, t, g).values
        via = r.field(t / eps**2, g).values
        assert np.allclose(direct, via, atol=1e-13)


def test_realization_csv(tmp_path, two_mode_spec):
    r = synthesize_realization(two_mode_spec, 1, 0.1, 1 / 16, 20)
    r.write_csv(tmp_path / "r.csv")
    head = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert head == "tau,re_phi_1,im_phi_1,re_phi_2,im_phi_2"
    table = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1)
    assert np.allclose(table[:, 1] + 1j * table[:, 2], r.amplitudes[:, 0])
