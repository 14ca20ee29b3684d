"""Quasilinear velocity diffusion: coefficients, flux estimator, limit solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .phase_space import PhaseSpaceGrid
from .stochastic_field import AnsatzSpec, CorrelationSpec, FieldRealization


@dataclass
class DiffusionField:
    v: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, float)
        self.values = np.asarray(self.values, float)
        if self.values.shape != self.v.shape:
            raise ValueError("values and v-grid differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("diffusion coefficient is not finite")

    def check_nonnegative(self, tol: float = 1e-12) -> None:
        low = self.values.min() if self.values.size else 0.0
        if low < -tol:
            raise ValueError(f"diffusion coefficient negative: min D = {low:.3e}")

    def write_csv(self, path) -> None:
        _write_two_column(path, self.v, self.values, "v,D")

    @classmethod
    def read_csv(cls, path) -> "DiffusionField":
        v, d = _read_two_column(path)
        return cls(v, d)


@dataclass
class BarProfile:
    v: np.ndarray
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.v = np.asarray(self.v, float)
        self.values = np.asarray(self.values, float)
        if self.values.shape != self.v.shape or self.v.size < 3:
            raise ValueError("profile needs matching v-grid and values (>= 3 nodes)")

    @property
    def dv(self) -> float:
        return float(self.v[1] - self.v[0])

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.v.size, self.dv)
        w[0] = w[-1] = 0.5 * self.dv
        return w

    def mass(self) -> float:
        return float(self.values @ self.weights)

    def l2_norm(self) -> float:
        return float(np.sqrt((self.values**2) @ self.weights))

    def write_csv(self, path) -> None:
        _write_two_column(path, self.v, self.values, f"v,f_bar(t={self.t:.17g})")

    @classmethod
    def read_csv(cls, path, t: float = 0.0) -> "BarProfile":
        v, f = _read_two_column(path)
        return cls(v, f, t)


def _write_two_column(path, a, b, header):
    np.savetxt(path, np.column_stack([a, b]), delimiter=",", header=header,
               comments="", fmt="%.17g")


def _read_two_column(path):
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return table[:, 0], table[:, 1]


def _vgrid(v) -> np.ndarray:
    return v.v if isinstance(v, PhaseSpaceGrid) else np.asarray(v, float)


# -- coefficients -----------------------------------------------------------

def analytic_diffusion(spec: CorrelationSpec, v) -> DiffusionField:
    """D(v) = 1/2 sum_k k**2 A-hat_k(omega_k - k v) over all listed modes."""
    v = _vgrid(v)
    d = np.zeros_like(v)
    for m in spec.modes:
        d += 0.5 * m.k**2 * m.hat(m.omega - m.k * v)
    return DiffusionField(v, d)


def _phi1(z):
    """(e^z - 1) / z with a series near 0."""
    z = np.asarray(z, complex)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    out = np.expm1(zs) / zs
    series = 1 + z / 2 + z**2 / 6 + z**3 / 24
    return np.where(small, series, out)


def _phi2(z):
    """(e^z (z - 1) + 1) / z**2 with a series near 0."""
    z = np.asarray(z, complex)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    out = (np.exp(zs) * (zs - 1.0) + 1.0) / zs**2
    series = 0.5 + z / 3 + z**2 / 8 + z**3 / 30
    return np.where(small, series, out)


def filon_weights(theta: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Panel weights for int_0^h g(s) e^{i theta s} ds with g linear on the panel."""
    z = 1j * np.asarray(theta, float) * h
    w1 = h * _phi2(z)
    w0 = h * _phi1(z) - w1
    return w0, w1


def _oscillatory_sum(env: np.ndarray, theta: np.ndarray, h: float, method: str) -> np.ndarray:
    """int_0^{(N-1) h} env(s) e^{i theta s} ds for every theta, env sampled at s_n = n h."""
    n = env.size
    if n < 2:
        return np.zeros(theta.shape, complex)
    s = np.arange(n) * h
    phase = np.exp(1j * np.outer(theta, s))  # (n_theta, n)
    if method == "filon":
        w0, w1 = filon_weights(theta, h)
        panel = phase[:, :-1] * (w0[:, None] * env[None, :-1] + w1[:, None] * env[None, 1:])
        return panel.sum(axis=1)
    if method == "trapezoid":
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        return phase @ (w * env)
    raise ValueError(f"unknown quadrature {method!r}")


def empirical_diffusion(realization: FieldRealization, t: float, eps: float, v,
                        method: str = "filon", block: int = 64) -> DiffusionField:
    """Pre-limit coefficient
        D(t, v) = sum_k k**2 int_0^{t/eps**2} Phi(t - eps**2 s, k) Phi(t, k)^* e^{-ikvs} ds
    from one realization, with Phi = Phi_ e^{-i c_k tau} (c_k the carrier).

    The envelope Phi_(tau0 - s) Phi_(tau0)^* is linear between realization
    samples, so ``filon`` integrates the sampled field exactly.
    """
    v = _vgrid(v)
    tau0 = t / eps**2
    h = realization.dt_fast
    pos = tau0 / h
    n0 = int(round(pos))
    if abs(pos - n0) > 1e-9 * max(1.0, pos):
        raise ValueError("t / eps**2 must fall on the realization time grid")
    if n0 > realization.n_samples - 1:
        raise ValueError(f"realization covers fast time {realization.duration}, need {tau0}")
    d = np.zeros_like(v)
    for j, k in enumerate(realization.ks):
        amp = realization.amplitudes[: n0 + 1, j]
        env = amp[::-1] * np.conj(amp[n0])
        c = realization.carriers[j] if realization.carrier else 0.0
        for lo in range(0, v.size, block):
            theta = c - k * v[lo: lo + block]
            # k and -k give complex-conjugate integrals
            d[lo: lo + block] += 2.0 * k**2 * _oscillatory_sum(env, theta, h, method).real
    return DiffusionField(v, d)


def ansatz_diffusion(spec: AnsatzSpec, eps: float, t: float, v) -> DiffusionField:
    """Closed form for constant amplitudes:
        sum_k k**2 |Phi_k|**2 sin(W t / eps**2) / W,  W = eps**(2 - beta) omega - k v.
    """
    v = _vgrid(v)
    d = np.zeros_like(v)
    tau0 = t / eps**2
    for m in spec.modes:
        w = eps ** (2.0 - m.beta) * m.omega - m.k * v
        d += m.k**2 * abs(m.amplitude) ** 2 * tau0 * np.sinc(w * tau0 / np.pi)
    return DiffusionField(v, d)


def weak_limit_pairing(d: DiffusionField, phi) -> float:
    """Trapezoid pairing int D phi dv; ``phi`` is an array or a callable of v."""
    vals = phi(d.v) if callable(phi) else np.asarray(phi, float)
    dv = d.v[1] - d.v[0]
    w = np.full(d.v.size, dv)
    w[0] = w[-1] = 0.5 * dv
    return float(np.sum(w * d.values * vals))


def weak_limit_value(spec: AnsatzSpec, phi, eps: float = 0.0) -> float:
    """Limit of the pairing as eps -> 0: pi sum_k |k| |Phi_k|**2 phi(v_k) with
    v_k = omega / k for beta = 2 and v_k = 0 for beta < 2."""
    total = 0.0
    for m in spec.modes:
        vk = m.omega / m.k if m.beta == 2 else 0.0
        total += np.pi * abs(m.k) * abs(m.amplitude) ** 2 * float(phi(np.array([vk]))[0])
    return total


def bump(center: float = 0.0, width: float = 1.0):
    """Smooth compactly supported test profile exp(-1 / (1 - y**2)), y = (v - c) / w."""
    def phi(v):
        y = (np.asarray(v, float) - center) / width
        out = np.zeros_like(y)
        inside = np.abs(y) < 1
        out[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2))
        return out
    return phi


def fick_flux(state) -> np.ndarray:
    """J(v) = (1 / eps) mean_x E(x) f(x, v) for a solver state."""
    e = state.field().values
    return (e @ state.f.values) / (e.size * state.eps)


# -- limit equation ---------------------------------------------------------

def _face_coefficients(d: np.ndarray) -> np.ndarray:
    return 0.5 * (d[:-1] + d[1:])


def diffusion_operator_bands(d: np.ndarray, dv: float) -> np.ndarray:
    """Banded (1, 1) form of L f = d_v(D d_v f) scaled by the cell widths.

    Returns ``ab`` such that (W^{-1} A) f is the discrete operator, where
    A is symmetric and W holds trapezoid cell widths.
    """
    df = _face_coefficients(d) / dv
    n = d.size
    ab = np.zeros((3, n))
    ab[0, 1:] = df
    ab[2, :-1] = df
    ab[1, :-1] -= df
    ab[1, 1:] -= df
    return ab


def step_diffusion(p: BarProfile, d: DiffusionField, dt: float, theta: float = 1.0) -> BarProfile:
    """Conservative finite-volume theta-step of d_t f = d_v(D d_v f), zero-flux ends.

    Vertex-centred cells (widths dv, dv/2 at the ends) so the trapezoid mass
    is conserved exactly by telescoping face fluxes.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if d.values.shape != p.values.shape:
        raise ValueError("diffusion field and profile live on different grids")
    dvals = d.values
    if dvals.min() < -1e-12:
        raise ValueError(f"negative diffusion coefficient {dvals.min():.3e}")
    dvals = np.maximum(dvals, 0.0)
    w = p.weights
    a = diffusion_operator_bands(dvals, p.dv)
    f = p.values
    explicit = f.copy()
    if theta < 1.0:
        af = a[1] * f
        af[:-1] += a[0, 1:] * f[1:]
        af[1:] += a[2, :-1] * f[:-1]
        explicit = f + (1.0 - theta) * dt * af / w
    if theta == 0.0:
        return BarProfile(p.v, explicit, p.t + dt)
    lhs = -theta * dt * a
    lhs[1] += w
    if np.any(lhs[1] <= 0):
        raise ValueError("singular diffusion system")
    new = solve_banded((1, 1), lhs, w * explicit)
    return BarProfile(p.v, new, p.t + dt)


def solve_diffusion(p: BarProfile, d: DiffusionField, T: float, dt: float,
                    theta: float = 1.0) -> BarProfile:
    """March ``step_diffusion`` to time p.t + T (last step shortened)."""
    n = int(np.ceil(T / dt - 1e-12))
    out = p
    for _ in range(n):
        h = min(dt, p.t + T - out.t)
        if h <= 0:
            break
        out = step_diffusion(out, d, h, theta)
    return out
