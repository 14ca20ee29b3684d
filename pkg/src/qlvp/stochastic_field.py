"""Stochastic and oscillatory electric fields on the periodic domain.

A field is described mode by mode through its potential amplitude
``Phi_(tau, k)``; fast time ``tau = t / eps**2``.  The electric field
coefficient is ``E(k) = -i k Phi_(tau, k) exp(-i omega_k tau)``.
Only k > 0 amplitudes are stored, k < 0 follows from conjugation.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as sfft
from scipy.signal import fftconvolve

from .phase_space import TWO_PI, FieldOnGrid, PhaseSpaceGrid

FAMILIES = ("triangular", "bohman")


# -- correlation families ---------------------------------------------------

def correlation(family: str, amplitude: float, tau: float, sigma) -> np.ndarray:
    """A(sigma) for a built-in family; even, supported on [-tau, tau], A(0) = amplitude."""
    x = np.abs(np.asarray(sigma, dtype=float)) / tau
    inside = x <= 1.0
    if family == "triangular":
        shape = 1.0 - x
    elif family == "bohman":
        # cosine lobe of width tau convolved with itself
        shape = (1.0 - x) * np.cos(np.pi * x) + np.sin(np.pi * x) / np.pi
    else:
        raise ValueError(f"unknown correlation family {family!r}; expected one of {FAMILIES}")
    return np.where(inside, amplitude * shape, 0.0)


def hat_correlation(family: str, amplitude: float, tau: float, s) -> np.ndarray:
    """Closed-form transform int A(sigma) exp(-i s sigma) d sigma (real, >= 0)."""
    s = np.asarray(s, dtype=float)
    if family == "triangular":
        return amplitude * tau * np.sinc(s * tau / TWO_PI) ** 2
    if family == "bohman":
        u = np.abs(s) * tau / 2.0
        w = np.pi / 2.0 - u
        sinc_w = np.sinc(w / np.pi)
        return 2.0 * amplitude * np.pi**2 * tau * (sinc_w / (np.pi + 2.0 * u)) ** 2
    raise ValueError(f"unknown correlation family {family!r}; expected one of {FAMILIES}")


# -- specs ------------------------------------------------------------------

@dataclass(frozen=True)
class ModeEntry:
    k: int
    omega: float
    family: str = "triangular"
    amplitude: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.k == 0 or int(self.k) != self.k:
            raise ValueError(f"mode wavenumber must be a nonzero integer, got {self.k}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown correlation family {self.family!r}")
        if self.amplitude < 0:
            raise ValueError("correlation amplitude must be >= 0")
        if not self.tau > 0:
            raise ValueError("decorrelation time must be > 0")

    def correlation(self, sigma):
        return correlation(self.family, self.amplitude, self.tau, sigma)

    def hat(self, s):
        return hat_correlation(self.family, self.amplitude, self.tau, s)


def hat_transform(entry: ModeEntry, s):
    return entry.hat(s)


@dataclass(frozen=True)
class CorrelationSpec:
    modes: tuple[ModeEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        by_k = {}
        for m in self.modes:
            if m.k in by_k:
                raise ValueError(f"duplicate mode k = {m.k}")
            by_k[m.k] = m
        for m in self.modes:
            partner = by_k.get(-m.k)
            if partner is None:
                raise ValueError(f"mode k = {m.k} has no conjugate partner k = {-m.k}")
            if (partner.omega != -m.omega or partner.amplitude != m.amplitude
                    or partner.tau != m.tau or partner.family != m.family):
                raise ValueError(
                    f"modes k = +/-{abs(m.k)} must share family, amplitude and tau "
                    "and have opposite frequencies"
                )
        if not np.isfinite(self.regularity_bound()):
            raise ValueError("sum |k|^3 int |A_k| is not finite")

    @classmethod
    def symmetric(cls, entries: Sequence[ModeEntry]) -> "CorrelationSpec":
        """Build a spec from k > 0 entries, adding the conjugate partners."""
        modes = []
        for e in entries:
            if e.k <= 0:
                raise ValueError("symmetric() expects positive wavenumbers")
            modes += [e, ModeEntry(-e.k, -e.omega, e.family, e.amplitude, e.tau)]
        return cls(tuple(modes))

    @property
    def positive(self) -> tuple[ModeEntry, ...]:
        return tuple(sorted((m for m in self.modes if m.k > 0), key=lambda m: m.k))

    @property
    def max_tau(self) -> float:
        return max((m.tau for m in self.modes), default=0.0)

    def regularity_bound(self) -> float:
        """sum_k |k|^3 int |A_k|; both families integrate to A-hat(0)."""
        return float(sum(abs(m.k) ** 3 * m.hat(0.0) for m in self.modes))

    def to_dict(self) -> dict:
        return {"modes": [asdict(m) for m in self.modes]}

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelationSpec":
        entries = [ModeEntry(**m) for m in data.get("modes", [])]
        if data.get("symmetric", False):
            return cls.symmetric(entries)
        return cls(tuple(entries))


@dataclass(frozen=True)
class AnsatzMode:
    k: int
    omega: float
    beta: float
    amplitude: complex

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("ansatz modes need k != 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


@dataclass(frozen=True)
class AnsatzSpec:
    modes: tuple[AnsatzMode, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        by_k = {m.k: m for m in self.modes}
        for m in self.modes:
            p = by_k.get(-m.k)
            if (p is None or p.omega != -m.omega or p.beta != m.beta
                    or not np.isclose(p.amplitude, np.conj(m.amplitude), rtol=0, atol=1e-15)):
                raise ValueError(f"ansatz mode k = {m.k} lacks a conjugate partner")

    @classmethod
    def symmetric(cls, modes: Sequence[AnsatzMode]) -> "AnsatzSpec":
        out = []
        for m in modes:
            out += [m, AnsatzMode(-m.k, -m.omega, m.beta, complex(np.conj(m.amplitude)))]
        return cls(tuple(out))

    @property
    def positive(self) -> tuple[AnsatzMode, ...]:
        return tuple(sorted((m for m in self.modes if m.k > 0), key=lambda m: m.k))

    def energy_bound(self) -> float:
        return float(sum(m.k**4 * abs(m.amplitude) ** 2 for m in self.modes))

    def to_dict(self) -> dict:
        return {"modes": [{"k": m.k, "omega": m.omega, "beta": m.beta,
                           "amplitude": [m.amplitude.real, m.amplitude.imag]}
                          for m in self.modes]}

    @classmethod
    def from_dict(cls, data: dict) -> "AnsatzSpec":
        modes = []
        for m in data.get("modes", []):
            amp = m["amplitude"]
            amp = complex(amp[0], amp[1]) if isinstance(amp, (list, tuple)) else complex(amp)
            modes.append(AnsatzMode(int(m["k"]), float(m["omega"]), float(m["beta"]), amp))
        if data.get("symmetric", False):
            return cls.symmetric(modes)
        return cls(tuple(modes))


def load_spec(path):
    """Read a CorrelationSpec or AnsatzSpec from JSON (``kind`` selects which)."""
    with open(path) as fh:
        data = json.load(fh)
    if data.get("kind", "correlation") == "ansatz":
        return AnsatzSpec.from_dict(data)
    return CorrelationSpec.from_dict(data)


# -- realizations -----------------------------------------------------------

@dataclass
class FieldRealization:
    """Per-mode potential amplitudes sampled on a uniform fast-time grid.

    ``amplitudes[n, j]`` is Phi_(n * dt_fast, ks[j]); ``carriers[j]`` is the
    fast-time carrier frequency (omega_k for stochastic fields).
    """

    dt_fast: float
    ks: np.ndarray
    amplitudes: np.ndarray
    carriers: np.ndarray
    eps: float
    carrier: bool = True
    source: object = field(default=None, repr=False)

    @property
    def n_samples(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def duration(self) -> float:
        """Fast-time span covered by the samples."""
        return (self.n_samples - 1) * self.dt_fast

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt_fast

    def amplitude_at(self, tau: float) -> np.ndarray:
        if self.ks.size == 0:
            return np.zeros(0, complex)
        pos = tau / self.dt_fast
        if pos < -1e-9 or pos > self.n_samples - 1 + 1e-9:
            raise ValueError(f"fast time {tau} outside realization span [0, {self.duration}]")
        i = min(int(np.floor(pos)), self.n_samples - 2)
        i = max(i, 0)
        w = pos - i
        return (1.0 - w) * self.amplitudes[i] + w * self.amplitudes[i + 1]

    def potential_at(self, tau: float) -> np.ndarray:
        amp = self.amplitude_at(tau)
        if self.carrier:
            amp = amp * np.exp(-1j * self.carriers * tau)
        return amp

    def field_coeffs(self, tau: float, grid: PhaseSpaceGrid) -> np.ndarray:
        """Half-spectrum E(k) on ``grid`` at fast time ``tau``."""
        coeffs = np.zeros(grid.nx // 2 + 1, complex)
        if self.ks.size:
            idx = mode_indices(self.ks, grid)
            coeffs[idx] = -1j * self.ks * self.potential_at(tau)
        return coeffs

    def field(self, tau: float, grid: PhaseSpaceGrid) -> FieldOnGrid:
        return FieldOnGrid.from_coeffs(grid, self.field_coeffs(tau, grid))

    def max_field_bound(self) -> float:
        """Upper bound of max_x |E| over the samples."""
        if self.ks.size == 0:
            return 0.0
        return float(np.max(2.0 * np.abs(self.amplitudes) @ np.abs(self.ks)))

    def write_csv(self, path) -> None:
        cols = [self.times]
        names = ["tau"]
        for j, k in enumerate(self.ks):
            cols += [self.amplitudes[:, j].real, self.amplitudes[:, j].imag]
            names += [f"re_phi_{k:g}", f"im_phi_{k:g}"]
        np.savetxt(path, np.column_stack(cols), delimiter=",",
                   header=",".join(names), comments="", fmt="%.17g")


def mode_indices(ks: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    idx = np.asarray(ks, float) * grid.length / TWO_PI
    ridx = np.rint(idx).astype(int)
    if np.any(np.abs(idx - ridx) > 1e-9) or np.any(ridx >= grid.nx // 2) or np.any(ridx < 1):
        raise ValueError(f"wavenumbers {ks} are not resolved modes of the grid")
    return ridx


def check_resolution(spec: CorrelationSpec, dt_fast: float) -> None:
    for m in spec.modes:
        if dt_fast > m.tau / 16.0 * (1 + 1e-12):
            raise ValueError(f"dt_fast = {dt_fast} does not resolve tau = {m.tau} (need <= tau/16)")
        if dt_fast * abs(m.omega) > np.pi / 8.0 * (1 + 1e-12):
            raise ValueError(f"dt_fast = {dt_fast} does not resolve omega = {m.omega}")


def _phase_rng(seed: int, k: int) -> np.random.Generator:
    # counter-based: key = (seed, k); the m-th draw is the counter position
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(k) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _spectral_amplitudes(entry: ModeEntry, dt_fast: float, n_samples: int, seed: int) -> np.ndarray:
    lag = int(math.ceil(entry.tau / dt_fast))
    period = sfft.next_fast_len(n_samples + lag + 1)
    r = np.zeros(period)
    lags = np.arange(lag + 1)
    r[: lag + 1] = entry.correlation(lags * dt_fast)
    r[period - lag:] = r[1: lag + 1][::-1]
    # DFT of the sampled correlation: the aliased, exactly nonnegative spectrum
    spectrum = np.clip(sfft.fft(r).real, 0.0, None)
    coef = np.sqrt(spectrum / period)
    theta = TWO_PI * _phase_rng(seed, entry.k).random(period)
    series = sfft.ifft(coef * np.exp(1j * theta)) * period
    return series[:n_samples]


def _ma_kernel(entry: ModeEntry, dt_fast: float) -> np.ndarray:
    if entry.family == "triangular":
        n = max(int(round(entry.tau / dt_fast)), 1)
        g = np.ones(n)
    else:
        half = entry.tau / 2.0
        n = max(int(round(entry.tau / dt_fast)), 1)
        s = (np.arange(n) + 0.5) * dt_fast - half
        g = np.cos(np.pi * s / entry.tau)
    return g * np.sqrt(entry.amplitude / np.sum(g**2))


def _moving_average_amplitudes(entry: ModeEntry, dt_fast: float, n_samples: int, seed: int) -> np.ndarray:
    g = _ma_kernel(entry, dt_fast)
    rng = _phase_rng(seed, entry.k)
    n_noise = n_samples + g.size - 1
    noise = (rng.standard_normal(n_noise) + 1j * rng.standard_normal(n_noise)) / np.sqrt(2.0)
    return fftconvolve(noise, g, mode="valid")


def synthesize_realization(spec: CorrelationSpec, seed: int, eps: float, dt_fast: float,
                           n_steps: int, backend: str = "spectral") -> FieldRealization:
    """Sample one field trajectory on fast times 0, dt_fast, ..., n_steps * dt_fast.

    ``backend="spectral"`` uses random phases on the DFT of the sampled
    correlation (exact second moments on the grid, exactly stationary);
    ``"moving_average"`` filters complex white noise with a kernel whose
    autocorrelation is A_k (exact compact support, Gaussian statistics).
    """
    check_resolution(spec, dt_fast)
    n_samples = int(n_steps) + 1
    pos = spec.positive
    ks = np.array([m.k for m in pos], dtype=float)
    amps = np.zeros((n_samples, len(pos)), complex)
    make = {"spectral": _spectral_amplitudes,
            "moving_average": _moving_average_amplitudes}.get(backend)
    if make is None:
        raise ValueError(f"unknown synthesis backend {backend!r}")
    for j, m in enumerate(pos):
        if m.amplitude > 0:
            amps[:, j] = make(m, dt_fast, n_samples, seed)
    carriers = np.array([m.omega for m in pos], dtype=float)
    return FieldRealization(dt_fast, ks, amps, carriers, eps, True, spec)


def ansatz_realization(spec: AnsatzSpec, eps: float, dt_fast: float, n_steps: int) -> FieldRealization:
    """The deterministic ansatz in realization form: constant amplitudes and
    fast-time carriers omega * eps**(2 - beta)."""
    pos = spec.positive
    ks = np.array([m.k for m in pos], dtype=float)
    amps = np.tile(np.array([m.amplitude for m in pos], complex), (int(n_steps) + 1, 1))
    carriers = np.array([m.omega * eps ** (2.0 - m.beta) for m in pos], dtype=float)
    return FieldRealization(dt_fast, ks, amps, carriers, eps, True, spec)


def deterministic_ansatz_field(spec: AnsatzSpec, eps: float, t: float,
                               grid: PhaseSpaceGrid) -> FieldOnGrid:
    """E(t, k) = -i k Phi_k exp(-i omega eps**(-beta) t) at slow time t."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    coeffs = np.zeros(grid.nx // 2 + 1, complex)
    pos = spec.positive
    if pos:
        ks = np.array([m.k for m in pos], float)
        phase = np.array([m.omega * eps ** (-m.beta) * t for m in pos])
        amp = np.array([m.amplitude for m in pos], complex)
        coeffs[mode_indices(ks, grid)] = -1j * ks * amp * np.exp(-1j * phase)
    return FieldOnGrid.from_coeffs(grid, coeffs)


# -- empirical verification -------------------------------------------------

@dataclass
class CorrelationReport:
    lags: np.ndarray
    autocorrelation: np.ndarray        # (n_lags, n_modes) complex, mean over realizations
    target: np.ndarray                 # (n_lags, n_modes)
    stderr: np.ndarray                 # (n_lags, n_modes)
    inside_deviation: np.ndarray       # sup_{|lag| <= tau} |R - A| / A(0), per mode
    outside_leakage: np.ndarray        # sup_{|lag| > 2 tau} |R| / A(0), per mode
    cross: dict                        # (k1, k2) -> (|mean|, sigma)
    bochner_min: np.ndarray            # min of DFT(R) / peak, per mode
    bochner_ok: bool
    n_realizations: int
    notes: list = field(default_factory=list)


def _lag_products(a: np.ndarray, b: np.ndarray, n_lags: int) -> np.ndarray:
    """Time-averaged a[:, n + h] * conj(b[:, n]) per realization, h = 0..n_lags-1."""
    n = a.shape[1] - n_lags + 1
    if n < 1:
        raise ValueError("realizations too short for the requested lags")
    tail = np.conj(b[:, :n])
    return np.stack([np.mean(a[:, h:h + n] * tail, axis=1) for h in range(n_lags)], axis=1)


def verify_correlation(realizations: Sequence[FieldRealization], spec: CorrelationSpec,
                       lag_span: float = 3.0) -> CorrelationReport:
    """Empirical second moments of an ensemble compared with the target A_k.

    Each realization contributes its time-averaged lag products; the Monte
    Carlo error is estimated from the spread across realizations.
    """
    if len(realizations) < 2:
        raise ValueError("need at least two realizations")
    first = realizations[0]
    for r in realizations:
        if r.source != spec or r.dt_fast != first.dt_fast or r.n_samples != first.n_samples:
            raise ValueError("realizations do not share the given spec and time grid")
    pos = spec.positive
    dt = first.dt_fast
    tau_max = spec.max_tau if pos else dt
    n_lags = min(int(math.ceil(lag_span * tau_max / dt)) + 1, first.n_samples)
    lags = np.arange(n_lags) * dt
    m = len(realizations)
    stack = np.stack([r.amplitudes for r in realizations])  # (m, n, modes)
    per = np.zeros((m, n_lags, len(pos)), complex)
    for j in range(len(pos)):
        per[:, :, j] = _lag_products(stack[:, :, j], stack[:, :, j], n_lags)
    auto = per.mean(axis=0)
    stderr = np.abs(per - auto).std(axis=0) / np.sqrt(m)
    target = np.column_stack([e.correlation(lags) for e in pos]) if pos else np.zeros((n_lags, 0))

    inside = np.zeros(len(pos))
    outside = np.zeros(len(pos))
    bmin = np.zeros(len(pos))
    for j, e in enumerate(pos):
        scale = e.amplitude if e.amplitude > 0 else 1.0
        sel_in = lags <= e.tau
        sel_out = lags > 2.0 * e.tau
        inside[j] = np.max(np.abs(auto[sel_in, j] - target[sel_in, j])) / scale
        outside[j] = np.max(np.abs(auto[sel_out, j])) / scale if sel_out.any() else 0.0
        # Bartlett lag window on |lag| <= 2 tau keeps the windowed target
        # spectrum nonnegative; then DFT of the symmetric extension
        n_win = min(int(math.ceil(2.0 * e.tau / dt)) + 1, n_lags)
        window = 1.0 - np.arange(n_win) / n_win
        r = auto[:n_win, j] * window
        sym = np.concatenate([r, np.conj(r[:0:-1])])
        spec_j = np.fft.fft(sym).real
        peak = np.max(np.abs(spec_j))
        bmin[j] = spec_j.min() / peak if peak > 0 else 0.0

    cross = {}
    for a in range(len(pos)):
        for b in range(a + 1, len(pos)):
            vals = np.mean(stack[:, :, a] * np.conj(stack[:, :, b]), axis=1)
            cross[(pos[a].k, pos[b].k)] = (float(abs(vals.mean())),
                                           float(np.abs(vals - vals.mean()).std() / np.sqrt(m)))
    notes = []
    if len({r.amplitudes.tobytes() for r in realizations}) < m:
        notes.append("duplicated realizations: Monte Carlo errors underestimate the true spread")
    return CorrelationReport(lags, auto, target, stderr, inside, outside, cross, bmin,
                             bool(np.all(bmin >= -1e-3)), m, notes)
