"""Short-time quasilinear integrator driven by unstable dispersion roots.

The averaged profile obeys d_t G = d_v(D d_v G) with

    D(v) = eps**2 sum_m W_m Re(l_m) exp(2 int_0^t Re l_m) / ((k_m v + Im l_m)**2 + Re(l_m)**2),

where W_m is the x-averaged squared (real) field of mode m at t = 0 and
l_m(t) is re-solved against G(t) every step.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .diffusion import BarProfile, DiffusionField, step_diffusion
from .dispersion import ProfileG, kernel_K, newton_root, winding_number

RESIDUAL_TOL = 1e-8
AUDIT_EVERY = 50


@dataclass
class QLMode:
    k: float
    lam: complex
    w0: float                    # x-averaged |E|^2 of the mode at t = 0
    growth_integral: float = 0.0  # int_0^t Re lambda ds
    active: bool = True
    clamp_time: float | None = None

    def __post_init__(self):
        if self.w0 < 0:
            raise ValueError("mode energy must be >= 0")
        if not np.isfinite(self.growth_integral):
            raise ValueError("growth integral is not finite")

    @property
    def amplitude_factor(self) -> float:
        return float(np.exp(2.0 * self.growth_integral))


@dataclass
class QLState:
    v: np.ndarray
    g: np.ndarray
    eps: float
    modes: list
    t: float = 0.0
    step_count: int = 0

    def __post_init__(self):
        self.v = np.asarray(self.v, float)
        self.g = np.asarray(self.g, float)
        if abs(self.profile_bar().mass() - 1.0) > 1e-10:
            raise ValueError(f"profile mass {self.profile_bar().mass()} != 1")

    def profile_bar(self) -> BarProfile:
        return BarProfile(self.v, self.g, self.t)

    def profile(self) -> ProfileG:
        return ProfileG.gridded(self.v, self.g)

    def residuals(self) -> list:
        prof = self.profile()
        return [abs(1.0 + kernel_K(prof, m.k, m.lam, continuation=True)) for m in self.modes]


def ql_diffusion(state: QLState, v=None) -> DiffusionField:
    """Lorentzian quasilinear coefficient from the active modes."""
    v = state.v if v is None else np.asarray(v, float)
    d = np.zeros_like(v)
    for m in state.modes:
        if not m.active:
            continue
        gam = m.lam.real
        if gam <= 0:
            raise ValueError(f"active mode k = {m.k} has Re(lambda) = {gam:.3e} <= 0")
        d += m.w0 * gam * m.amplitude_factor / ((m.k * v + m.lam.imag) ** 2 + gam**2)
    return DiffusionField(v, state.eps**2 * d)


def slaved_mode(profile: ProfileG, v: np.ndarray, k: float, lam: complex, w0: float):
    """(E_hat, h_hat(v)) of the eigenmode with x-averaged squared field w0.

    The real perturbation is Re(h_hat(v) e^{ikx}) with field Re(E_hat e^{ikx});
    h_hat = -E_hat G'(v) / (lam + i k v).
    """
    e_hat = np.sqrt(2.0 * w0) + 0j
    h_hat = -e_hat * profile.derivative(v).real / (lam + 1j * k * v)
    return e_hat, h_hat


def direct_flux(profile: ProfileG, v: np.ndarray, k: float, lam: complex, w0: float,
                eps: float, nx: int = 16) -> np.ndarray:
    """-eps**2 mean_x E[h] h for the real slaved perturbation, on an x-grid.

    The field of h comes from its charge through the exact velocity integral
    of the interpolated profile (the same integral that defines the root).
    """
    e_hat, h_hat = slaved_mode(profile, v, k, lam, w0)
    # charge of the mode: int h_hat dv = -E_hat int G'/(lam + ikv) dv = -E_hat * (i k) K
    kern = kernel_K(profile, k, lam, continuation=True)
    rho_hat = -e_hat * 1j * k * kern
    e_from_h = -1j * rho_hat / k
    x = 2 * np.pi / abs(k) * np.arange(nx) / nx
    phase = np.exp(1j * k * x)
    e_x = (e_from_h * phase).real
    h_xv = (h_hat[None, :] * phase[:, None]).real
    return -eps**2 * (e_x @ h_xv) / nx


def init_state(v, g, eps: float, roots, w0) -> QLState:
    """State with one entry per root; ``w0`` scalar or per-root."""
    w0s = np.broadcast_to(np.asarray(w0, float), (len(roots),))
    modes = [QLMode(r.k, complex(r.lam), float(w)) for r, w in zip(roots, w0s)]
    state = QLState(np.asarray(v, float), np.asarray(g, float), eps, modes)
    for m, res in zip(state.modes, state.residuals()):
        if res > RESIDUAL_TOL:
            raise ValueError(f"mode k = {m.k} has residual {res:.2e} against the initial profile")
        if m.lam.real <= 0:
            m.active = False
            m.clamp_time = 0.0
    return state


def resolution_floor(state: QLState, k: float) -> float:
    """Smallest growth rate whose Lorentzian (half-width Re(lambda)/|k|) the v-grid resolves."""
    return abs(k) * float(state.v[1] - state.v[0])


def ql_step(state: QLState, dt: float, theta: float = 1.0, floor: bool = True) -> QLState:
    """Diffuse G with the current D, then advance growth integrals and roots.

    A mode is clamped when Re(lambda) crosses zero or, with ``floor``, drops
    below the grid resolution floor: its amplitude factor is frozen and it
    stops contributing to D (it stays in the record).
    """
    active = [m for m in state.modes if m.active]
    if active and dt * max(m.lam.real for m in active) > 0.1 + 1e-12:
        raise ValueError("dt does not resolve the fastest growth (need dt Re(lambda) <= 0.1)")
    d = ql_diffusion(state)
    new_bar = step_diffusion(state.profile_bar(), d, dt, theta)
    prof = ProfileG.gridded(state.v, new_bar.values)
    modes = []
    for m in state.modes:
        if not m.active:
            modes.append(replace(m))
            continue
        try:
            lam, res = newton_root(prof, m.k, m.lam, tol=1e-12, continuation=True)
        except RuntimeError as exc:
            raise RuntimeError(f"root continuation failed for k = {m.k}; last good lambda = {m.lam}") from exc
        if res > RESIDUAL_TOL:
            raise RuntimeError(f"root continuation for k = {m.k} stuck at residual {res:.2e}; "
                               f"last good lambda = {m.lam}")
        g0, g1 = m.lam.real, lam.real
        cut = resolution_floor(state, m.k) if floor else 0.0
        if g1 <= cut:
            # stop at the interpolated crossing of the cut
            frac = 1.0 if g0 <= g1 else min(1.0, max(0.0, (g0 - cut) / (g0 - g1)))
            g_cross = g0 + frac * (g1 - g0)
            integral = m.growth_integral + 0.5 * (g0 + g_cross) * frac * dt
            modes.append(QLMode(m.k, lam, m.w0, integral, False, state.t + frac * dt))
        else:
            integral = m.growth_integral + 0.5 * (g0 + g1) * dt
            modes.append(QLMode(m.k, lam, m.w0, integral, True, None))
    out = QLState(state.v, new_bar.values, state.eps, modes, state.t + dt, state.step_count + 1)
    if out.step_count % AUDIT_EVERY == 0:
        audit_roots(out)
    return out


def audit_roots(state: QLState, half_width: float = 0.05) -> None:
    """Each active root must be the only zero in a small box around it."""
    prof = state.profile()
    for m in state.modes:
        if not m.active:
            continue
        w = max(half_width * abs(m.lam), 1e-3)
        lo = max(m.lam.real - w, 0.5 * m.lam.real)
        rect = (lo, m.lam.real + w, m.lam.imag - w, m.lam.imag + w)
        count = winding_number(lambda z: 1.0 + kernel_K(prof, m.k, z, continuation=True), rect)
        if count != 1:
            raise RuntimeError(f"root audit for k = {m.k} at t = {state.t:.4g}: winding count {count}")


@dataclass
class QLRun:
    times: np.ndarray
    lam: np.ndarray            # (n_times, n_modes)
    profiles: np.ndarray       # (n_snap, nv)
    snapshot_times: np.ndarray
    d_snapshots: np.ndarray    # (n_snap, nv) D at the snapshot times
    d_min: float
    mass_drift: float
    l2: np.ndarray
    saturation_times: list
    final: QLState


def ql_run(state: QLState, dt: float, t_end: float, snapshot_every: int = 0,
           stop_on_saturation: bool = True, floor: bool = True) -> QLRun:
    """March ``ql_step`` to ``t_end`` (or until every mode is clamped)."""
    times, lams, l2 = [state.t], [[m.lam for m in state.modes]], [state.profile_bar().l2_norm()]
    snaps, snap_t, d_snaps = [state.g.copy()], [state.t], [ql_diffusion(state).values]
    m0 = state.profile_bar().mass()
    d_min = np.inf
    drift = 0.0
    n = 0
    while state.t < t_end - 1e-12:
        if stop_on_saturation and not any(m.active for m in state.modes):
            break
        d = ql_diffusion(state)
        d_min = min(d_min, float(d.values.min()))
        state = ql_step(state, min(dt, t_end - state.t), floor=floor)
        n += 1
        drift = max(drift, abs(state.profile_bar().mass() - m0))
        times.append(state.t)
        lams.append([m.lam for m in state.modes])
        l2.append(state.profile_bar().l2_norm())
        if snapshot_every and n % snapshot_every == 0:
            snaps.append(state.g.copy())
            snap_t.append(state.t)
            d_snaps.append(ql_diffusion(state).values)
    if snap_t[-1] != state.t:
        snaps.append(state.g.copy())
        snap_t.append(state.t)
        d_snaps.append(ql_diffusion(state).values)
    return QLRun(np.array(times), np.array(lams), np.array(snaps), np.array(snap_t), np.array(d_snaps),
                 float(d_min if np.isfinite(d_min) else 0.0), drift, np.array(l2),
                 [m.clamp_time for m in state.modes], state)
