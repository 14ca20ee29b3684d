"""Phase-space grid on the periodic interval times a truncated velocity line.

Layout convention: ``values[j, i]`` is f(x_j, v_i), x along axis 0.
x-Fourier coefficients use ``h(k) = mean_j h(x_j) exp(-i k x_j)`` so that
``h(x) = sum_k h(k) exp(i k x)``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi
DEFAULT_SUPPORT_FLOOR = 1e-12
NEUTRALITY_TOL = 1e-8


@dataclass(frozen=True)
class PhaseSpaceGrid:
    nx: int
    nv: int
    v_max: float
    length: float = TWO_PI

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < 4 or self.nx % 2:
            raise ValueError(f"nx must be an even integer >= 4, got {self.nx}")
        if int(self.nv) != self.nv or self.nv < 8:
            raise ValueError(f"nv must be an integer >= 8, got {self.nv}")
        if not self.v_max > 0:
            raise ValueError(f"v_max must be positive, got {self.v_max}")
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / (self.nv - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def v(self) -> np.ndarray:
        return -self.v_max + np.arange(self.nv) * self.dv

    @property
    def k(self) -> np.ndarray:
        """Nonnegative wavenumbers of the half spectrum (rfft layout)."""
        return TWO_PI / self.length * np.arange(self.nx // 2 + 1)

    @property
    def v_weights(self) -> np.ndarray:
        w = np.full(self.nv, self.dv)
        w[0] = w[-1] = 0.5 * self.dv
        return w


def make_grid(nx: int, nv: int, v_max: float, length: float = TWO_PI) -> PhaseSpaceGrid:
    return PhaseSpaceGrid(nx, nv, float(v_max), float(length))


@dataclass
class Distribution:
    grid: PhaseSpaceGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx, self.grid.nv):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.nv})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("distribution contains non-finite values")

    def mass(self) -> float:
        """x-average of the trapezoid v-integral (unit for a probability density)."""
        return float(np.mean(self.values @ self.grid.v_weights))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.mean((self.values**2) @ self.grid.v_weights)))

    def kinetic_energy(self) -> float:
        w = self.grid.v_weights * 0.5 * self.grid.v**2
        return float(np.mean(self.values @ w))

    def boundary_max(self) -> float:
        return float(max(np.abs(self.values[:, 0]).max(), np.abs(self.values[:, -1]).max()))

    def check_support(self, floor: float = DEFAULT_SUPPORT_FLOOR) -> None:
        edge = self.boundary_max()
        if edge > floor:
            raise ValueError(
                f"compact-support violation: |f| = {edge:.3e} at v = +/-{self.grid.v_max} "
                f"exceeds floor {floor:.1e}"
            )

    def copy(self) -> "Distribution":
        return Distribution(self.grid, self.values.copy())


@dataclass
class FieldOnGrid:
    """Real periodic field with its half spectrum ``coeffs`` (k >= 0)."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def from_coeffs(cls, grid: PhaseSpaceGrid, coeffs: np.ndarray) -> "FieldOnGrid":
        coeffs = np.asarray(coeffs, dtype=complex).copy()
        coeffs[0] = 0.0
        coeffs[-1] = 0.0  # Nyquist mode carries no sine component on the grid
        values = np.fft.irfft(coeffs * grid.nx, n=grid.nx)
        return cls(grid, values, coeffs)

    @classmethod
    def from_values(cls, grid: PhaseSpaceGrid, values: np.ndarray) -> "FieldOnGrid":
        coeffs = np.fft.rfft(np.asarray(values, dtype=float)) / grid.nx
        return cls.from_coeffs(grid, coeffs)

    @property
    def fourier(self) -> np.ndarray:
        """Full coefficient vector for k = -nx/2+1, ..., nx/2."""
        neg = np.conj(self.coeffs[1:-1][::-1])
        return np.concatenate([neg, self.coeffs])

    def energy(self) -> float:
        """Half the x-averaged squared field."""
        return 0.5 * float(np.mean(self.values**2))


def x_fourier(values: np.ndarray) -> np.ndarray:
    return np.fft.rfft(values, axis=0) / values.shape[0]


def x_inverse(coeffs: np.ndarray, nx: int) -> np.ndarray:
    return np.fft.irfft(coeffs * nx, n=nx, axis=0)


@lru_cache(maxsize=16)
def _stream_phase(grid: PhaseSpaceGrid, tau: float) -> np.ndarray:
    phase = np.exp(-1j * np.outer(grid.k, grid.v) * tau)
    phase[-1] = 0.0
    phase.flags.writeable = False
    return phase


def stream_coeffs(coeffs: np.ndarray, grid: PhaseSpaceGrid, tau: float) -> np.ndarray:
    """Apply the free-streaming phase exp(-i k v tau) to half-spectrum rows."""
    return coeffs * _stream_phase(grid, float(tau))


def free_stream(f: Distribution, tau: float) -> Distribution:
    """Return f(x - v tau, v); tau is already the fast time when used for the rescaled flow.

    The Nyquist x-mode is dropped: a shifted Nyquist cosine is not representable
    on the grid and keeping it would break the group property.
    """
    g = f.grid
    coeffs = stream_coeffs(x_fourier(f.values), g, tau)
    return Distribution(g, x_inverse(coeffs, g.nx))


def charge_density(f: Distribution) -> np.ndarray:
    return f.values @ f.grid.v_weights - 1.0


def solve_poisson(f: Distribution, tol: float = NEUTRALITY_TOL) -> FieldOnGrid:
    """Field E = -dPhi/dx with -Phi'' = rho = int f dv - 1 (neutralizing background)."""
    defect = f.mass() - 1.0
    if abs(defect) > tol:
        raise ValueError(f"neutrality violated: mass - 1 = {defect:.3e} (tolerance {tol:.0e})")
    g = f.grid
    rho_k = np.fft.rfft(charge_density(f)) / g.nx
    e_k = np.zeros_like(rho_k)
    e_k[1:] = -1j * rho_k[1:] / g.k[1:]
    return FieldOnGrid.from_coeffs(g, e_k)


def x_average(f: Distribution) -> np.ndarray:
    return f.values.mean(axis=0)


# -- snapshot formats -------------------------------------------------------

_HEADER = struct.Struct("<qqd")


def write_csv(f: Distribution, path) -> None:
    g = f.grid
    header = "v\\x," + ",".join(f"{x:.17g}" for x in g.x)
    table = np.column_stack([g.v, f.values.T])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def read_csv(path) -> Distribution:
    with open(path) as fh:
        head = fh.readline().strip().split(",")
    xs = np.array([float(h) for h in head[1:]])
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    v = table[:, 0]
    values = table[:, 1:].T
    if values.shape[0] != xs.size:
        raise ValueError("header and row widths disagree")
    length = xs.size * (xs[1] - xs[0]) if xs.size > 1 else TWO_PI
    grid = make_grid(values.shape[0], values.shape[1], float(v[-1]), length)
    return Distribution(grid, values)


def write_binary(f: Distribution, path) -> None:
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.nx, g.nv, g.v_max))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_binary(path, length: float = TWO_PI) -> Distribution:
    raw = Path(path).read_bytes()
    nx, nv, v_max = _HEADER.unpack_from(raw)
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(nx, nv)
    return Distribution(make_grid(nx, nv, v_max, length), values.copy())


def maxwellian(v: np.ndarray, sigma: float = 1.0, center: float = 0.0) -> np.ndarray:
    return np.exp(-0.5 * ((v - center) / sigma) ** 2) / (np.sqrt(2.0 * np.pi) * sigma)


def perturbed_maxwellian(grid: PhaseSpaceGrid, amplitude: float, mode: int = 1,
                         sigma: float = 1.0) -> Distribution:
    """(1 + amplitude cos(k x)) M(v) with k = 2 pi mode / length."""
    kx = TWO_PI * mode / grid.length
    m = maxwellian(grid.v, sigma)
    m /= m @ grid.v_weights
    values = np.outer(1.0 + amplitude * np.cos(kx * grid.x), m)
    return Distribution(grid, values)
