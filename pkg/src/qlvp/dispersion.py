"""Linear theory about a homogeneous profile G(v).

The dispersion function is ``1 + K_G(lambda, k)`` with

    K_G(lambda, k) = int_0^inf exp(-lambda s) s (F_v G)(k s) ds,
    (F_v G)(xi) = int G(v) exp(-i v xi) dv,

equivalently ``K = -(1/k**2) int G'(v) / (v - z) dv`` with ``z = i lambda / k``.
Modes behave like exp(lambda t + i k x); a growing mode resonates with
particles at v = -Im(lambda) / k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, roots_legendre, wofz

_GL_ORDER = 24
_GL_X, _GL_W = roots_legendre(_GL_ORDER)


# -- profiles ---------------------------------------------------------------

@dataclass
class ProfileG:
    """Homogeneous velocity profile, either closed form (Gaussian mixture) or gridded.

    ``weights/centers/widths`` describe sum_j w_j N(c_j, s_j**2); a gridded
    profile carries ``v`` and ``values`` only and is treated as its cubic
    spline interpolant.
    """

    kind: str
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    centers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    widths: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind in ("maxwellian", "bump_on_tail"):
            self.weights = np.atleast_1d(np.asarray(self.weights, float))
            self.centers = np.atleast_1d(np.asarray(self.centers, float))
            self.widths = np.atleast_1d(np.asarray(self.widths, float))
            if not (self.weights.shape == self.centers.shape == self.widths.shape):
                raise ValueError("mixture parameters must have equal length")
            if np.any(self.weights < 0) or np.any(self.widths <= 0):
                raise ValueError("mixture needs weights >= 0 and widths > 0")
            if abs(self.weights.sum() - 1.0) > 1e-8:
                raise ValueError(f"profile mass {self.weights.sum()} != 1")
        elif self.kind == "gridded":
            self.v = np.asarray(self.v, float)
            self.values = np.asarray(self.values, float)
            if self.v.shape != self.values.shape or self.v.size < 8:
                raise ValueError("gridded profile needs matching v and values (>= 8 nodes)")
            if np.any(self.values < -1e-12):
                raise ValueError("profile must be nonnegative")
            dv = self.v[1] - self.v[0]
            w = np.full(self.v.size, dv)
            w[0] = w[-1] = 0.5 * dv
            mass = float(self.values @ w)
            if abs(mass - 1.0) > 1e-8:
                raise ValueError(f"profile mass {mass:.10f} != 1")
            self._spline = CubicSpline(self.v, self.values, bc_type="clamped")
            self._dspline = self._spline.derivative()
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    # constructors
    @classmethod
    def maxwellian(cls, sigma: float = 1.0, center: float = 0.0) -> "ProfileG":
        return cls("maxwellian", [1.0], [center], [sigma])

    @classmethod
    def bump_on_tail(cls, weights: Sequence[float] = (0.9, 0.1), centers: Sequence[float] = (0.0, 4.5),
                     widths: Sequence[float] = (1.0, 0.5)) -> "ProfileG":
        return cls("bump_on_tail", weights, centers, widths)

    @classmethod
    def gridded(cls, v, values) -> "ProfileG":
        return cls("gridded", v=v, values=values)

    @property
    def closed_form(self) -> bool:
        return self.kind != "gridded"

    def sample(self, v) -> np.ndarray:
        v = np.asarray(v, float)
        if not self.closed_form:
            out = self._spline(v)
            return np.where((v < self.v[0]) | (v > self.v[-1]), 0.0, out)
        y = (v[..., None] - self.centers) / self.widths
        return np.sum(self.weights * np.exp(-0.5 * y**2) / (math.sqrt(2 * math.pi) * self.widths), axis=-1)

    def derivative(self, v) -> np.ndarray:
        v = np.asarray(v, complex)
        if not self.closed_form:
            return self._dspline(v.real) if np.all(v.imag == 0) else _spline_eval(self._dspline, v)
        y = (v[..., None] - self.centers) / self.widths
        g = self.weights * np.exp(-0.5 * y**2) / (math.sqrt(2 * math.pi) * self.widths)
        return np.sum(-y / self.widths * g, axis=-1)

    def transform(self, xi) -> np.ndarray:
        """(F_v G)(xi) = int G(v) exp(-i v xi) dv (closed forms only)."""
        if not self.closed_form:
            raise ValueError("transform of a gridded profile is not available in closed form")
        xi = np.asarray(xi, float)[..., None]
        return np.sum(self.weights * np.exp(-1j * self.centers * xi - 0.5 * (self.widths * xi) ** 2), axis=-1)

    def strip(self, k: float) -> float:
        """Most negative Re(lambda) accepted for wavenumber k."""
        if not self.closed_form:
            return 0.0
        return -2.0 * float(self.widths.min()) * abs(k)

    def to_dict(self) -> dict:
        if self.closed_form:
            return {"kind": self.kind, "weights": self.weights.tolist(),
                    "centers": self.centers.tolist(), "widths": self.widths.tolist()}
        return {"kind": "gridded", "v": self.v.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ProfileG":
        kind = data.get("kind", "maxwellian")
        if kind == "maxwellian":
            return cls.maxwellian(data.get("sigma", 1.0), data.get("center", 0.0))
        if kind == "bump_on_tail":
            return cls.bump_on_tail(data["weights"], data["centers"], data["widths"])
        if kind == "gridded":
            return cls.gridded(data["v"], data["values"])
        raise ValueError(f"unknown profile kind {kind!r}")


def _spline_eval(spl: CubicSpline, z: np.ndarray) -> np.ndarray:
    """Evaluate a piecewise polynomial at complex points using the piece of Re z."""
    x = spl.x
    i = np.clip(np.searchsorted(x, z.real) - 1, 0, x.size - 2)
    d = z - x[i]
    c = spl.c
    out = np.zeros(z.shape, complex)
    for p in range(c.shape[0]):
        out = out * d + c[p, i]
    inside = (z.real >= x[0]) & (z.real <= x[-1])
    return np.where(inside, out, 0.0)


# -- kernel -----------------------------------------------------------------

def _truncation(profile: ProfileG, k: float, gamma_min: float) -> float:
    """s beyond which |s exp(-lambda s) F(ks)| < 1e-16 of its peak."""
    s = np.linspace(1e-12, 1.0, 2001)
    scale = 1.0
    logw = np.log(profile.weights)
    for _ in range(60):
        grid = s * scale
        log_env = np.log(grid) - gamma_min * grid + logsumexp(
            logw - 0.5 * (profile.widths * k * grid[:, None]) ** 2, axis=1)
        above = np.nonzero(log_env > log_env.max() + math.log(1e-16))[0]
        if above[-1] < s.size - 1:
            return float(grid[above[-1] + 1])
        scale *= 2.0
    raise ValueError("kernel integrand does not decay; lambda outside the analyticity strip")


def _nodes(profile: ProfileG, k: float, lam: np.ndarray, panels_per_unit: float):
    gmin = float(np.min(lam.real))
    smax = _truncation(profile, k, gmin)
    freq = float(np.max(np.abs(lam.imag))) + float(np.max(np.abs(profile.centers * k))) + 1.0
    n_panels = max(8, int(math.ceil(smax * panels_per_unit * max(1.0, freq / 4.0))))
    if n_panels > 200_000:
        raise ValueError(f"|lambda| = {np.max(np.abs(lam)):.3g} too large for the kernel quadrature")
    edges = np.linspace(0.0, smax, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return s, w


def _check_strip(profile: ProfileG, k: float, lam: np.ndarray) -> None:
    if k == 0:
        raise ValueError("k must be nonzero")
    bound = profile.strip(k)
    if np.any(lam.real <= bound) if not profile.closed_form else np.any(lam.real < bound):
        raise ValueError(
            f"Re(lambda) = {lam.real.min():.4g} outside the analyticity strip Re > {bound:.4g} "
            f"for the {profile.kind} profile"
        )


def _kernel_s(profile: ProfileG, k: float, lam: np.ndarray, panels_per_unit: float, deriv: bool):
    s, w = _nodes(profile, k, lam, panels_per_unit)
    base = w * s * profile.transform(k * s)
    out = np.empty(lam.shape, complex)
    dout = np.empty(lam.shape, complex) if deriv else None
    flat = lam.ravel()
    res = out.ravel()
    dres = dout.ravel() if deriv else None
    chunk = max(1, int(2_000_000 // s.size))
    for lo in range(0, flat.size, chunk):
        e = np.exp(-np.outer(flat[lo: lo + chunk], s))
        res[lo: lo + chunk] = e @ base
        if deriv:
            dres[lo: lo + chunk] = -(e @ (base * s))
    return out, dout


def kernel_K(profile: ProfileG, k: float, lam, tol: float = 1e-10, deriv: bool = False,
             method: str = "auto", continuation: bool = False):
    """K_G(lambda, k) for scalar or array lambda.

    Closed-form profiles: composite Gauss-Legendre on the s-integral, panel
    count doubled until successive values agree to ``tol`` (relative).
    Gridded profiles: the velocity form over the cubic-spline pieces
    (exact for the interpolant). ``deriv=True`` also returns dK/dlambda.
    ``continuation=True`` lets gridded profiles cross Re lambda = 0 through
    the local polynomial continuation of the velocity form.
    """
    lam_arr = np.asarray(lam, complex)
    if not (continuation and not profile.closed_form):
        _check_strip(profile, k, lam_arr)
    if method == "auto":
        method = "time" if profile.closed_form else "velocity"
    if method == "velocity":
        out, dout = kernel_velocity(profile, k, lam_arr, deriv=True)
    elif method == "time":
        if not profile.closed_form:
            raise ValueError("time form needs a closed-form profile")
        ppu = 1.0
        out, dout = _kernel_s(profile, k, lam_arr, ppu, deriv)
        for _ in range(12):
            ppu *= 2.0
            new, dnew = _kernel_s(profile, k, lam_arr, ppu, deriv)
            err = np.max(np.abs(new - out) / np.maximum(np.abs(new), 1e-300 + tol))
            out, dout = new, dnew
            if err <= tol:
                break
        else:
            raise RuntimeError("kernel quadrature did not converge")
    else:
        raise ValueError(f"unknown kernel method {method!r}")
    if np.ndim(lam) == 0:
        out = complex(out)
        dout = complex(dout) if dout is not None else None
    return (out, dout) if deriv else out


def kernel_velocity(profile: ProfileG, k: float, lam, deriv: bool = False):
    """K = -(1/k**2) int G'(v) / (v - z) dv, z = i lambda / k.

    Closed forms use the Faddeeva function (entire, so the Landau continuation
    is automatic). Gridded profiles integrate the spline derivative piece by
    piece with logarithms; below the real z-axis the residue of the local
    polynomial is added (continuation of the interpolant).
    """
    lam = np.asarray(lam, complex)
    if k < 0:
        res = kernel_velocity(profile, -k, np.conj(lam), deriv)
        return np.conj(res[0]), (np.conj(res[1]) if deriv else None)
    z = 1j * lam / k
    if profile.closed_form:
        total = np.zeros(lam.shape, complex)
        dtotal = np.zeros(lam.shape, complex)
        for wj, cj, sj in zip(profile.weights, profile.centers, profile.widths):
            zeta = (z - cj) / (sj * math.sqrt(2.0))
            zf = 1j * math.sqrt(math.pi) * wofz(zeta)
            total += wj / (k * sj) ** 2 * (1.0 + zeta * zf)
            if deriv:
                # d/dzeta [1 + zeta Z] = Z + zeta Z' with Z' = -2 (1 + zeta Z)
                dz = zf - 2.0 * zeta * (1.0 + zeta * zf)
                dtotal += wj / (k * sj) ** 2 * dz * (1j / k) / (sj * math.sqrt(2.0))
        return total, (dtotal if deriv else None)

    dsp = profile._dspline  # piecewise quadratic
    x = dsp.x
    h = np.diff(x)
    c2, c1, c0 = dsp.c  # in powers of (v - x_i)
    zz = z.ravel()[:, None]
    w = zz - x[None, :-1]
    q = (c2 * w + c1) * w + c0
    log_part = np.log(h - w) - np.log(-w)
    poly = c2 * (0.5 * h**2 + w * h) + c1 * h
    integral = np.sum(poly + q * log_part, axis=1)
    below = zz[:, 0].imag < 0
    if np.any(below):
        integral[below] += 2j * np.pi * _spline_eval(dsp, zz[below, 0])
    total = (-integral / k**2).reshape(lam.shape)
    dtotal = None
    if deriv:
        # d/dz int q/(v - z) = int q'/(v - z) plus end terms (zero for clamped G')
        d2 = dsp.derivative()
        b1, b0 = d2.c
        q2 = b1 * w + b0
        integ2 = np.sum(b1 * h + q2 * log_part, axis=1)
        ends = dsp(x[-1]) / (x[-1] - zz[:, 0]) - dsp(x[0]) / (x[0] - zz[:, 0])
        integ2 = integ2 - ends
        if np.any(below):
            integ2[below] += 2j * np.pi * _spline_eval(d2, zz[below, 0])
        dtotal = (-integ2 / k**2 * (1j / k)).reshape(lam.shape)
    return total, dtotal


def kernel_faddeeva(k: float, lam, sigma: float = 1.0):
    """Independent Maxwellian oracle: K = (1 + zeta Z(zeta)) / (k sigma)**2."""
    return kernel_velocity(ProfileG.maxwellian(sigma), k, lam)[0]


def dispersion_function(profile: ProfileG, k: float, lam, tol: float = 1e-10, method: str = "auto"):
    return 1.0 + kernel_K(profile, k, lam, tol=tol, method=method)


# -- roots ------------------------------------------------------------------

@dataclass
class DispersionRoot:
    k: float
    lam: complex
    residual: float
    simple: bool = True

    @property
    def gamma(self) -> float:
        return self.lam.real

    @property
    def omega(self) -> float:
        return self.lam.imag

    def mirrored(self) -> "DispersionRoot":
        return DispersionRoot(-self.k, complex(np.conj(self.lam)), self.residual, self.simple)


@dataclass
class RootSearch:
    roots: list
    winding: int
    consistent: bool
    rect: tuple

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def _boundary(rect, n):
    re0, re1, im0, im1 = rect
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    bottom = re0 + (re1 - re0) * t + 1j * im0
    right = re1 + 1j * (im0 + (im1 - im0) * t)
    top = re1 - (re1 - re0) * t + 1j * im1
    left = re0 + 1j * (im1 - (im1 - im0) * t)
    return np.concatenate([bottom, right, top, left])


def winding_number(func: Callable, rect, n: int = 64, max_refine: int = 12) -> int:
    """Argument-principle zero count of ``func`` inside ``rect`` = (re0, re1, im0, im1)."""
    pts = _boundary(rect, n)
    pts = np.append(pts, pts[0])
    vals = func(pts)
    for _ in range(max_refine):
        if np.any(np.abs(vals) < 1e-14):
            raise ValueError("zero on the contour; shift the rectangle")
        d = np.angle(vals[1:] / vals[:-1])
        bad = np.nonzero(np.abs(d) > np.pi / 4)[0]
        if bad.size == 0:
            return int(round(d.sum() / (2 * np.pi)))
        mids = 0.5 * (pts[bad] + pts[bad + 1])
        mvals = func(mids)
        pts = np.insert(pts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals)
    d = np.angle(vals[1:] / vals[:-1])
    return int(round(d.sum() / (2 * np.pi)))


def newton_root(profile: ProfileG, k: float, lam0: complex, tol: float = 1e-12,
                max_iter: int = 60, kernel_tol: float = 1e-12,
                box: tuple | None = None, continuation: bool = False) -> tuple[complex, float]:
    """Newton on 1 + K with step halving; returns (lambda, |1 + K|).

    ``box`` = (re0, re1, im0, im1) confines the iterates.
    """
    lam = complex(lam0)
    bound = -np.inf if (continuation and not profile.closed_form) else profile.strip(k)
    if box is not None:
        bound = max(bound, box[0])
    kw = dict(tol=kernel_tol, deriv=True, continuation=continuation)
    k_val, dk = kernel_K(profile, k, lam, **kw)
    f = 1.0 + k_val
    for _ in range(max_iter):
        if abs(f) < tol:
            break
        step_ = -f / dk
        for _h in range(30):
            trial = lam + step_
            ok = trial.real > bound if not profile.closed_form else trial.real >= bound
            if box is not None:
                ok = ok and trial.real <= box[1] and box[2] <= trial.imag <= box[3]
            if ok:
                tk, tdk = kernel_K(profile, k, trial, **kw)
                if abs(1.0 + tk) < abs(f):
                    break
            step_ *= 0.5
        else:
            raise RuntimeError(f"Newton stalled at lambda = {lam} (|D| = {abs(f):.3e})")
        lam, k_val, dk = trial, tk, tdk
        f = 1.0 + k_val
    else:
        raise RuntimeError(f"Newton did not converge from {lam0}; last lambda = {lam}")
    return lam, float(abs(f))


def find_roots(profile: ProfileG, k: float, rect, tol: float = 1e-9, kernel_tol: float = 1e-10,
               max_depth: int = 12) -> RootSearch:
    """Enumerate zeros of 1 + K_G in ``rect`` = (re0, re1, im0, im1).

    The rectangle is subdivided until each piece winds at most once; Newton
    from the piece centre polishes each root. ``consistent`` is False when
    the number of converged roots differs from the winding number.
    """
    re0, re1, im0, im1 = rect
    if not (re1 > re0 and im1 > im0):
        raise ValueError("degenerate rectangle")
    _check_strip(profile, k, np.array([complex(re0, im0)]))
    func = lambda z: 1.0 + kernel_K(profile, k, z, tol=kernel_tol)
    total = winding_number(func, rect)
    found: list[complex] = []

    def search(r, count, depth):
        if count <= 0:
            return
        a0, a1, b0, b1 = r
        if count == 1:
            centre = complex(0.5 * (a0 + a1), 0.5 * (b0 + b1))
            try:
                pad = 0.25 * max(a1 - a0, b1 - b0)
                lam, res = newton_root(profile, k, centre, tol=min(tol, 1e-11),
                                       kernel_tol=kernel_tol * 1e-2,
                                       box=(a0 - pad, a1 + pad, b0 - pad, b1 + pad))
                if a0 - 1e-9 <= lam.real <= a1 + 1e-9 and b0 - 1e-9 <= lam.imag <= b1 + 1e-9:
                    found.append(lam)
                    return
            except RuntimeError:
                pass
        if depth >= max_depth:
            return
        if (a1 - a0) >= (b1 - b0):
            m = 0.5 * (a0 + a1) + 1e-7 * (a1 - a0)
            halves = [(a0, m, b0, b1), (m, a1, b0, b1)]
        else:
            m = 0.5 * (b0 + b1) + 1e-7 * (b1 - b0)
            halves = [(a0, a1, b0, m), (a0, a1, m, b1)]
        first = winding_number(func, halves[0])
        search(halves[0], first, depth + 1)
        search(halves[1], count - first, depth + 1)

    search(tuple(rect), total, 0)
    unique: list[complex] = []
    for lam in found:
        if all(abs(lam - u) > 1e-7 for u in unique):
            unique.append(lam)
    roots = []
    for lam in sorted(unique, key=lambda z: (-z.real, z.imag)):
        res = abs(func(np.array([lam]))[0])
        roots.append(DispersionRoot(k, lam, float(res)))
    consistent = len(roots) == total and all(r.residual <= tol for r in roots)
    return RootSearch(roots, total, consistent, tuple(rect))


# -- stability --------------------------------------------------------------

@dataclass
class StabilityMargin:
    kappa: float
    k_at_min: float
    omega_at_min: float
    root: DispersionRoot | None = None
    per_k: dict = field(default_factory=dict)


def _omega_span(profile: ProfileG, k: float) -> float:
    if profile.closed_form:
        vmax = float(np.max(np.abs(profile.centers) + 8.0 * profile.widths))
    else:
        vmax = float(np.max(np.abs(profile.v)))
    return abs(k) * vmax + 4.0


def stability_margin(profile: ProfileG, k_max: int, length: float = 2 * np.pi,
                     n_samples: int = 801) -> StabilityMargin:
    """inf over k = 2 pi m / length (m = 1..k_max) and Re lambda >= 0 of |1 + K_G|.

    By the minimum-modulus principle the infimum of a zero-free function sits
    on Re lambda = 0 (|1 + K| -> 1 at infinity), so the axis is sampled and
    refined; an argument-principle count over the right half plane detects
    interior zeros, in which case the margin is 0 and the root is attached.
    """
    if not profile.closed_form:
        raise ValueError("stability margin needs a closed-form profile")
    best = StabilityMargin(1.0, float("nan"), float("nan"))
    for m in range(1, int(k_max) + 1):
        k = 2 * np.pi * m / length
        span = _omega_span(profile, k)
        # interior zeros: right half plane truncated where |K| << 1
        big = max(span, 4.0)
        rect = (1e-6, big, -big, big)
        search = find_roots(profile, k, rect)
        if search.winding > 0:
            root = search.roots[0] if search.roots else None
            return StabilityMargin(0.0, k, root.omega if root else float("nan"), root, best.per_k)
        omega = np.linspace(-span, span, n_samples)
        vals = np.abs(1.0 + kernel_K(profile, k, 1j * omega))
        i = int(np.argmin(vals))
        lo, hi = omega[max(i - 1, 0)], omega[min(i + 1, n_samples - 1)]
        opt = minimize_scalar(lambda w: abs(1.0 + kernel_K(profile, k, 1j * w)),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        kappa = float(min(opt.fun, vals[i], 1.0))
        w_min = float(opt.x if opt.fun <= vals[i] else omega[i])
        best.per_k[k] = kappa
        if kappa < best.kappa:
            best.kappa, best.k_at_min, best.omega_at_min = kappa, k, w_min
    return best


# -- decay fitting ----------------------------------------------------------

@dataclass
class DecayFit:
    rate: float
    window: tuple
    r2: float
    n_points: int


def _linfit(t, y):
    a, b = np.polyfit(t, y, 1)
    pred = a * t + b
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - pred) ** 2) / ss if ss > 0 else 0.0
    return a, b, r2


def landau_decay_fit(t, w, slope_tol: float = 0.2, min_points: int = 4) -> DecayFit:
    """Exponential rate of an energy series W(t) ~ exp(rate t) (rate ~ 2 gamma).

    Oscillating series are reduced to their local maxima (the envelope).
    The window is the longest run of consecutive envelope points whose
    local slopes stay within ``slope_tol`` (relative) of the run's median,
    which drops the initial transient and the numerical floor.
    """
    t = np.asarray(t, float)
    w = np.asarray(w, float)
    if t.shape != w.shape or t.size < 20:
        raise ValueError("need matching series with at least 20 samples")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("energy series must be positive and finite")
    y = np.log(w)
    if np.ptp(y) < 1e-12:
        raise ValueError("series is constant: no exponential window")
    dy = np.diff(y)
    monotone = np.all(dy <= 0) or np.all(dy >= 0)
    if monotone:
        te, ye = t, y
    else:
        peaks = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
        te, ye = t[peaks], y[peaks]
    if te.size < min_points:
        raise ValueError("too few envelope points for an exponential fit")
    slopes = np.diff(ye) / np.diff(te)
    best = None
    n = slopes.size
    for i in range(n):
        for j in range(n, i, -1):
            if best is not None and j - i <= best[1] - best[0]:
                break
            seg = slopes[i:j]
            ref = np.median(seg)
            if ref != 0 and np.all(np.abs(seg - ref) <= slope_tol * abs(ref)):
                best = (i, j)
                break
    if best is None or best[1] - best[0] + 1 < min_points - 1:
        raise ValueError("no window with a steady exponential slope")
    i, j = best
    tt, yy = te[i: j + 1], ye[i: j + 1]
    rate, _, r2 = _linfit(tt, yy)
    if abs(rate) < 1e-12:
        raise ValueError("no exponential decay or growth in the series")
    return DecayFit(float(rate), (float(tt[0]), float(tt[-1])), float(r2), int(tt.size))
