"""Rescaled Liouville / Vlasov-Poisson integrator.

    d_t f + v / eps**2 d_x f + E / eps d_v f = 0

Strang splitting: half x-shift (exact, spectral), full v-shift by
E dt / eps (conservative semi-Lagrangian, cubic spline of the cumulative
mass), half x-shift.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Protocol

import numpy as np
from scipy.linalg import lapack

from .phase_space import (
    DEFAULT_SUPPORT_FLOOR,
    Distribution,
    FieldOnGrid,
    PhaseSpaceGrid,
    solve_poisson,
    stream_coeffs,
    x_fourier,
    x_inverse,
)
from .stochastic_field import AnsatzSpec, FieldRealization, deterministic_ansatz_field

CLIP_MASS_TOL = 1e-8


# -- field sources ----------------------------------------------------------

class FieldSource(Protocol):
    self_consistent: bool

    def coeffs(self, t: float, eps: float, grid: PhaseSpaceGrid,
               f: Distribution | None = None) -> np.ndarray: ...


class ZeroField:
    self_consistent = False

    def coeffs(self, t, eps, grid, f=None):
        return np.zeros(grid.nx // 2 + 1, complex)


@dataclass
class RealizationField:
    """A sampled stochastic (or ansatz) trajectory, read at fast time t / eps**2."""

    realization: FieldRealization
    self_consistent: bool = False

    def coeffs(self, t, eps, grid, f=None):
        return self.realization.field_coeffs(t / eps**2, grid)


@dataclass
class AnsatzField:
    spec: AnsatzSpec
    self_consistent: bool = False

    def coeffs(self, t, eps, grid, f=None):
        return deterministic_ansatz_field(self.spec, eps, t, grid).coeffs


class SelfConsistentField:
    self_consistent = True

    def coeffs(self, t, eps, grid, f=None):
        if f is None:
            raise ValueError("self-consistent field needs the distribution")
        return solve_poisson(f).coeffs


@dataclass
class FrozenField:
    """Time-independent field given by its half spectrum."""

    field_coeffs: np.ndarray
    self_consistent: bool = False

    def coeffs(self, t, eps, grid, f=None):
        return self.field_coeffs


# -- state ------------------------------------------------------------------

@dataclass
class SolverState:
    f: Distribution
    t: float
    eps: float
    source: FieldSource
    f0_max: float = 0.0
    support_floor: float = DEFAULT_SUPPORT_FLOOR
    edge0: float = 0.0
    positivity: str = "strict"
    overshoot: float = 0.0  # worst undershoot seen so far, relative to sup f0

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.positivity not in ("strict", "report"):
            raise ValueError("positivity must be 'strict' or 'report'")
        if self.f0_max == 0.0:
            self.f0_max = float(self.f.values.max())
        if self.edge0 == 0.0:
            self.edge0 = self.f.boundary_max()

    def field(self) -> FieldOnGrid:
        g = self.f.grid
        return FieldOnGrid.from_coeffs(g, self.source.coeffs(self.t, self.eps, g, self.f))

    def energy(self) -> tuple[float, float]:
        """(kinetic, field) energies; the conserved combination is kinetic + eps * field."""
        return self.f.kinetic_energy(), self.field().energy()


# -- v-advection ------------------------------------------------------------

@lru_cache(maxsize=8)
def _spline_factor(n: int):
    """LU of the clamped-spline slope system m[i-1] + 4 m[i] + m[i+1] (n unknowns)."""
    dl, d, du = np.ones(n - 1), np.full(n, 4.0), np.ones(n - 1)
    fac = lapack.dgttrf(dl, d, du)
    if fac[-1] != 0:
        raise RuntimeError("spline system factorization failed")
    return fac[:-1]


def shift_v(values: np.ndarray, shifts: np.ndarray, dv: float, limit: bool = True) -> np.ndarray:
    """Conservative per-row translation f(x_j, v) -> f(x_j, v - shifts[j]).

    Nodes are treated as cells of width dv; a clamped cubic spline through
    the cumulative cell mass at the faces is evaluated at the shifted faces
    and differenced. Outside the grid the cumulative mass is held constant.
    Requires |shifts| <= dv.

    With ``limit`` the face fluxes are blended towards donor-cell fluxes
    wherever the spline flux would empty a cell (positivity-only flux
    correction); resolved positive data are left unchanged.
    """
    nx, nv = values.shape
    ft = values.T  # (nv, nx)
    cum = np.zeros((nv + 1, nx))
    np.cumsum(ft * dv, axis=0, out=cum[1:])
    # spline slopes at faces; C' = f so the clamped ends take the edge values
    rhs = 3.0 * (ft[1:] + ft[:-1])
    rhs[0] -= ft[0]
    rhs[-1] -= ft[-1]
    dl, d, du, du2, ipiv = _spline_factor(nv - 1)
    inner, info = lapack.dgttrs(dl, d, du, du2, ipiv, rhs)
    if info != 0:
        raise RuntimeError("spline slope solve failed")
    # pad one face each side with the constant continuation
    cp = np.empty((nv + 3, nx))
    cp[0] = 0.0
    cp[1:nv + 2] = cum
    cp[nv + 2] = cum[-1]
    mp = np.empty((nv + 3, nx))
    mp[0] = 0.0
    mp[1] = ft[0]
    mp[2:nv + 1] = inner
    mp[nv + 1] = ft[-1]
    mp[nv + 2] = 0.0

    # departure offset y = -shift / dv in [-1, 1]: face i samples cells i-1..i+1
    y = -shifts / dv
    left = y < 0
    th = np.where(left, y + 1.0, y)
    h00 = 1.0 - th * th * (3.0 - 2.0 * th)
    h01 = 1.0 - h00
    h10 = th * (1.0 - th) ** 2 * dv
    h11 = th * th * (th - 1.0) * dv
    zero = np.zeros_like(th)
    c_lo, c_mid, c_hi = np.where(left, h00, zero), np.where(left, h01, h00), np.where(left, zero, h01)
    m_lo, m_mid, m_hi = np.where(left, h10, zero), np.where(left, h11, h10), np.where(left, zero, h11)
    lo, mid, hi = slice(0, nv + 1), slice(1, nv + 2), slice(2, nv + 3)
    new_cum = (c_lo * cp[lo] + c_mid * cp[mid] + c_hi * cp[hi]
               + m_lo * mp[lo] + m_mid * mp[mid] + m_hi * mp[hi])
    if not limit:
        return (np.diff(new_cum, axis=0) / dv).T
    return _limited_update(ft, cum - new_cum, shifts, dv).T


def _limited_update(ft: np.ndarray, flux_h: np.ndarray, shifts: np.ndarray, dv: float) -> np.ndarray:
    """Blend high-order face fluxes (mass crossing each face, rightwards
    positive) with donor-cell fluxes so that no cell goes negative."""
    nv, nx = ft.shape
    up = shifts > 0
    flux_l = np.empty((nv + 1, nx))
    flux_l[1:-1] = np.where(up, ft[:-1], ft[1:])
    flux_l[0] = np.where(up, 0.0, ft[0])
    flux_l[-1] = np.where(up, ft[-1], 0.0)
    flux_l *= shifts
    anti = flux_h - flux_l
    out = np.maximum(anti[1:], 0.0) - np.minimum(anti[:-1], 0.0)
    low = ft + (flux_l[:-1] - flux_l[1:]) / dv
    room = np.maximum(low, 0.0) * dv
    short = out > room
    if not short.any():
        return ft + (flux_h[:-1] - flux_h[1:]) / dv
    cols = np.flatnonzero(short.any(axis=0))
    ratio = np.ones((nv + 2, cols.size))
    o, r = out[:, cols], room[:, cols]
    ratio[1:-1] = np.where(o > r, r / np.where(o > r, o, 1.0), 1.0)
    a = anti[:, cols]
    coef = np.where(a >= 0, ratio[:-1], ratio[1:])
    flux = flux_h.copy()
    flux[:, cols] = flux_l[:, cols] + coef * a
    return ft + (flux[:-1] - flux[1:]) / dv


def _clip_negative(values: np.ndarray, weights: np.ndarray, strict: bool = True) -> np.ndarray:
    """Clip undershoot and restore mass if that moves less than CLIP_MASS_TOL.

    Larger undershoot raises when ``strict``; otherwise it is left in place
    (the remap stays exactly conservative) for the caller to report.
    """
    neg = values < 0
    if not neg.any():
        return values
    mass = np.mean(values @ weights)
    clipped = np.where(neg, 0.0, values)
    change = np.mean(clipped @ weights) - mass
    if abs(change) >= CLIP_MASS_TOL:
        if strict:
            raise ValueError(f"positivity clip would change mass by {change:.3e}; step unstable")
        return values
    return clipped * (mass / np.mean(clipped @ weights))


# -- stepping ---------------------------------------------------------------

def suggest_dt(grid: PhaseSpaceGrid, eps: float, e_max: float, tau_field: float | None = None) -> float:
    """min(eps dv / (4 max|E|), eps**2 tau / 16)."""
    cands = []
    if e_max > 0:
        cands.append(eps * grid.dv / (4.0 * e_max))
    if tau_field:
        cands.append(eps**2 * tau_field / 16.0)
    if not cands:
        raise ValueError("no field scale to bound dt; pass e_max > 0 or tau_field")
    return min(cands)


@dataclass
class StepInfo:
    """Mid-step quantities: the field used for the v-shift and f at that point."""

    e_values: np.ndarray
    f_mid: np.ndarray


def step(state: SolverState, dt: float, info: list | None = None) -> SolverState:
    """One Strang step of size dt (dt < 0 runs the flow backwards)."""
    f, eps, g = state.f, state.eps, state.f.grid
    tau_half = 0.5 * dt / eps**2
    coeffs = stream_coeffs(x_fourier(f.values), g, tau_half)
    half = x_inverse(coeffs, g.nx)

    if state.source.self_consistent:
        e_k = state.source.coeffs(state.t + 0.5 * dt, eps, g, Distribution(g, half))
    else:
        e_k = state.source.coeffs(state.t + 0.5 * dt, eps, g)
    e = FieldOnGrid.from_coeffs(g, e_k).values
    shifts = e * dt / eps
    courant = np.max(np.abs(shifts)) / g.dv
    if courant > 1.0 + 1e-12:
        raise ValueError(f"dt too large: field displacement {courant:.2f} cells > 1")
    if info is not None:
        info.append(StepInfo(e, half))

    moved = shift_v(half, shifts, g.dv) if courant > 0 else half
    moved = _clip_negative(moved, g.v_weights, state.positivity == "strict")
    out = x_inverse(stream_coeffs(x_fourier(moved), g, tau_half), g.nx)
    new = Distribution(g, out)
    low = -min(float(half.min()), float(moved.min()), float(out.min()), 0.0) / state.f0_max
    edge = new.boundary_max()
    if edge > state.support_floor + 2.0 * state.edge0:
        raise ValueError(
            f"compact-support violation at t = {state.t + dt:.4g}: |f(+/-v_max)| = {edge:.3e}"
        )
    return SolverState(new, state.t + dt, eps, state.source, state.f0_max,
                       state.support_floor, state.edge0, state.positivity,
                       max(state.overshoot, low))


# -- runs -------------------------------------------------------------------

@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)
    field_energy: list = field(default_factory=list)
    max_dxe: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    flux_integral: np.ndarray | None = None
    flux_time: float = 0.0
    max_mass_step: float = 0.0
    overshoot: float = 0.0
    eps: float = 1.0

    @property
    def total_energy(self) -> np.ndarray:
        return np.asarray(self.kinetic) + self.eps * np.asarray(self.field_energy)

    def mean_flux(self) -> np.ndarray:
        """Time average of the Fick flux over the run."""
        if self.flux_integral is None or self.flux_time == 0:
            raise ValueError("no flux accumulated")
        return self.flux_integral / self.flux_time

    def write_csv(self, path) -> None:
        table = np.column_stack([self.times, self.mass, self.l2, self.kinetic,
                                 self.field_energy, self.total_energy, self.max_dxe])
        np.savetxt(path, table, delimiter=",", comments="", fmt="%.17g",
                   header="t,mass,l2,kinetic,field_energy,total_energy,max_dxE")


def _record(traj: Trajectory, state: SolverState, profiles: bool, snapshot: bool) -> None:
    f = state.f
    e = state.field()
    dxe = np.fft.irfft(1j * f.grid.k * e.coeffs * f.grid.nx, n=f.grid.nx)
    traj.times.append(state.t)
    traj.mass.append(f.mass())
    traj.l2.append(f.l2_norm())
    traj.kinetic.append(f.kinetic_energy())
    traj.field_energy.append(e.energy())
    traj.max_dxe.append(float(np.max(np.abs(dxe))))
    if profiles:
        traj.profiles.append(f.values.mean(axis=0))
    if snapshot:
        traj.snapshots.append((state.t, f.copy()))


def run(initial: Distribution, eps: float, source: FieldSource, T: float, dt: float,
        every: int = 1, profiles: bool = False, snapshot_every: int = 0,
        accumulate_flux: bool = False, support_floor: float = DEFAULT_SUPPORT_FLOOR,
        positivity: str = "strict", callback: Callable[[SolverState], None] | None = None) -> tuple[SolverState, Trajectory]:
    """Integrate to time T with uniform steps (the last one shortened to land on T).

    Diagnostics are recorded every ``every`` steps and at the final time.
    """
    if T < 0 or not dt > 0:
        raise ValueError("need T >= 0 and dt > 0")
    state = SolverState(initial, 0.0, eps, source, support_floor=support_floor,
                        positivity=positivity)
    traj = Trajectory(eps=eps)
    n_steps = int(np.ceil(T / dt - 1e-12)) if T > 0 else 0
    _record(traj, state, profiles, snapshot_every > 0)
    if accumulate_flux:
        traj.flux_integral = np.zeros(initial.grid.nv)
    info: list = []
    for n in range(n_steps):
        h = min(dt, T - state.t)
        m0 = state.f.mass()
        info.clear()
        state = step(state, h, info if accumulate_flux else None)
        traj.max_mass_step = max(traj.max_mass_step, abs(state.f.mass() - m0))
        if accumulate_flux:
            traj.flux_integral += h * fick_flux_values(info[0].e_values, info[0].f_mid, eps)
            traj.flux_time += h
        last = n == n_steps - 1
        if (n + 1) % every == 0 or last:
            snap = snapshot_every > 0 and ((n + 1) % snapshot_every == 0 or last)
            _record(traj, state, profiles, snap)
        if callback is not None:
            callback(state)
    traj.overshoot = state.overshoot
    return state, traj


def fick_flux_values(e: np.ndarray, f_values: np.ndarray, eps: float) -> np.ndarray:
    """J(v) = (1 / eps) mean_x E(x) f(x, v)."""
    return (e @ f_values) / (e.size * eps)
