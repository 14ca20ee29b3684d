"""Monte Carlo ensembles over field realizations and epsilon scans."""
from __future__ import annotations

import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy import stats as sps

from .diffusion import BarProfile, analytic_diffusion, bump, solve_diffusion
from .phase_space import Distribution, PhaseSpaceGrid, make_grid, perturbed_maxwellian
from .stochastic_field import (AnsatzMode, AnsatzSpec, CorrelationSpec, ModeEntry,
                               synthesize_realization)
from .vlasov import AnsatzField, RealizationField, run, suggest_dt

SCHEMA_VERSION = 1
TEST_PROFILES = ((-1.0, 1.5), (0.0, 1.5), (1.0, 1.5))  # (center, width) of bump test functions


def default_spec() -> CorrelationSpec:
    return CorrelationSpec.symmetric([
        ModeEntry(1, 0.5, "triangular", 0.1, 1.0),
        ModeEntry(2, 1.0, "triangular", 0.025, 1.0),
    ])


def default_obstruction() -> AnsatzSpec:
    return AnsatzSpec.symmetric([AnsatzMode(1, 0.0, 0.0, 0.1), AnsatzMode(2, 0.0, 0.0, 0.025)])


@dataclass
class EnsembleConfig:
    correlation: CorrelationSpec = field(default_factory=default_spec)
    eps_list: tuple = (0.4, 0.2, 0.1)
    members: int = 200
    master_seed: int = 20240917
    nx: int = 64
    nv: int = 257
    v_max: float = 8.0
    length: float = 2 * np.pi
    initial: dict = field(default_factory=lambda: {"kind": "cosine_maxwellian", "amplitude": 0.5,
                                                   "mode": 1, "sigma": 1.0})
    T: float = 1.0
    n_outputs: int = 4
    dt_fast: float = 1.0 / 16
    diffusion_dt: float = 1e-3
    positivity: str = "report"
    workers: int = 1
    obstruction: AnsatzSpec = field(default_factory=default_obstruction)
    obstruction_nv: int = 256
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.eps_list = tuple(float(e) for e in self.eps_list)
        if self.members < 1:
            raise ValueError("need at least one ensemble member")
        if any(not 0.0 < e <= 1.0 for e in self.eps_list):
            raise ValueError("eps values must lie in (0, 1]")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.n_outputs < 1:
            raise ValueError("n_outputs must be >= 1")
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"config schema {self.schema_version} unsupported (expected {SCHEMA_VERSION})")

    @property
    def grid(self) -> PhaseSpaceGrid:
        return make_grid(self.nx, self.nv, self.v_max, self.length)

    def seed(self, index: int) -> int:
        """Member seed from (master, index), independent of eps and of the worker layout."""
        return int(np.random.SeedSequence([self.master_seed, index]).generate_state(1, np.uint64)[0] >> 1)

    def initial_distribution(self, grid: PhaseSpaceGrid | None = None) -> Distribution:
        grid = grid or self.grid
        init = dict(self.initial)
        kind = init.pop("kind")
        if kind == "cosine_maxwellian":
            return perturbed_maxwellian(grid, init.get("amplitude", 0.0), init.get("mode", 1),
                                        init.get("sigma", 1.0))
        raise ValueError(f"unknown initial data kind {kind!r}")

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("correlation", "obstruction")}
        out["eps_list"] = list(self.eps_list)
        out["correlation"] = self.correlation.to_dict()
        out["obstruction"] = self.obstruction.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleConfig":
        data = dict(data)
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"config schema_version {version!r} unsupported (expected {SCHEMA_VERSION})")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "correlation" in data:
            data["correlation"] = CorrelationSpec.from_dict(data["correlation"])
        if "obstruction" in data:
            data["obstruction"] = AnsatzSpec.from_dict(data["obstruction"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "EnsembleConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


# -- one member -------------------------------------------------------------

@dataclass
class MemberResult:
    index: int
    seed: int
    times: np.ndarray
    profiles: np.ndarray      # (n_times, nv) x-averaged f
    field_energy: np.ndarray  # (n_times,)
    max_mass_step: float
    overshoot: float
    steps: int


def _schedule(cfg: EnsembleConfig, eps: float, e_max: float, grid: PhaseSpaceGrid,
              refine: int = 1) -> tuple[float, int]:
    """Step size dividing every output interval, and steps per interval."""
    interval = cfg.T / cfg.n_outputs
    dt0 = suggest_dt(grid, eps, e_max, cfg.correlation.max_tau) / refine
    per = int(np.ceil(interval / dt0 - 1e-9))
    return interval / per, per


def run_member(cfg: EnsembleConfig, eps: float, index: int, refine: int = 1,
               grid: PhaseSpaceGrid | None = None) -> MemberResult:
    grid = grid or cfg.grid
    seed = cfg.seed(index)
    n_fast = int(np.ceil(cfg.T / eps**2 / cfg.dt_fast)) + 2
    try:
        real = synthesize_realization(cfg.correlation, seed, eps, cfg.dt_fast, n_fast)
        dt, per = _schedule(cfg, eps, real.max_field_bound(), grid, refine)
        _, traj = run(cfg.initial_distribution(grid), eps, RealizationField(real), cfg.T, dt,
                      every=per, profiles=True, positivity=cfg.positivity)
    except Exception as exc:
        raise RuntimeError(f"ensemble member {index} (seed {seed}) failed at eps = {eps}: {exc}") from exc
    return MemberResult(index, seed, np.array(traj.times), np.array(traj.profiles),
                        np.array(traj.field_energy), traj.max_mass_step, traj.overshoot,
                        per * cfg.n_outputs)


def _run_chunk(args):
    cfg, eps, indices = args
    return [run_member(cfg, eps, i) for i in indices]


# -- statistics -------------------------------------------------------------

@dataclass
class EnsembleStats:
    eps: float
    v: np.ndarray
    times: np.ndarray
    mean: np.ndarray          # (n_times, nv)
    stderr: np.ndarray        # (n_times, nv)
    field_energy_mean: np.ndarray
    field_energy_stderr: np.ndarray
    seeds: list
    members: int
    max_mass_step: float
    max_overshoot: float
    steps: int
    wall_clock: float
    reference: np.ndarray | None = None   # diffusion solution at the output times
    error_l2: float = float("nan")        # at the final time
    error_sup_time: float = float("nan")  # max over output times of the L2 error
    stderr_l2: float = float("nan")       # L2 norm of the pointwise standard error, final time
    pairings: dict = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        return BarProfile(self.v, self.v).weights

    def mass(self) -> np.ndarray:
        return self.mean @ self.weights

    def write_csv(self, path) -> None:
        rows = [np.column_stack([np.full(self.v.size, t), self.v, m, s])
                for t, m, s in zip(self.times, self.mean, self.stderr)]
        np.savetxt(path, np.vstack(rows), delimiter=",", header="t,v,mean,stderr",
                   comments="", fmt="%.17g")

    def summary(self) -> dict:
        return {"eps": self.eps, "members": self.members, "seeds": self.seeds,
                "steps": self.steps, "wall_clock_s": self.wall_clock,
                "max_mass_step": self.max_mass_step, "max_overshoot": self.max_overshoot,
                "error_l2": self.error_l2, "error_sup_time": self.error_sup_time,
                "stderr_l2": self.stderr_l2, "pairings": self.pairings}


def _l2(w: np.ndarray, a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w * a**2)))


def aggregate(results: list, eps: float, v: np.ndarray, wall: float) -> EnsembleStats:
    """Fixed-order reduction (member index order) of member results."""
    results = sorted(results, key=lambda r: r.index)
    prof = np.stack([r.profiles for r in results])      # (M, n_t, nv)
    fe = np.stack([r.field_energy for r in results])    # (M, n_t)
    m = len(results)
    mean = prof.mean(axis=0)
    fe_mean = fe.mean(axis=0)
    if m > 1:
        se = prof.std(axis=0, ddof=1) / np.sqrt(m)
        fe_se = fe.std(axis=0, ddof=1) / np.sqrt(m)
    else:
        se = np.zeros_like(mean)
        fe_se = np.zeros_like(fe_mean)
    return EnsembleStats(eps, v, results[0].times, mean, se, fe_mean, fe_se,
                         [r.seed for r in results], m,
                         max(r.max_mass_step for r in results),
                         max(r.overshoot for r in results), results[0].steps, wall)


def diffusion_reference(cfg: EnsembleConfig, times, dt: float | None = None) -> np.ndarray:
    """Limit diffusion solution from the x-average of f0, at the given times."""
    grid = cfg.grid
    d = analytic_diffusion(cfg.correlation, grid.v)
    p = BarProfile(grid.v, cfg.initial_distribution(grid).values.mean(axis=0))
    dt = dt or cfg.diffusion_dt
    out, t_prev = [], 0.0
    for t in times:
        if t > t_prev:
            p = solve_diffusion(p, d, t - t_prev, dt, theta=0.5)
            t_prev = t
        out.append(p.values.copy())
    return np.array(out)


def compare(stats: EnsembleStats, reference: np.ndarray) -> EnsembleStats:
    w = stats.weights
    errs = [_l2(w, m - r) for m, r in zip(stats.mean, reference)]
    stats.reference = reference
    stats.error_l2 = errs[-1]
    stats.error_sup_time = max(errs)
    stats.stderr_l2 = _l2(w, stats.stderr[-1])
    for c, width in TEST_PROFILES:
        phi = bump(c, width)(stats.v)
        stats.pairings[f"bump({c},{width})"] = {
            "ensemble": float(np.sum(w * phi * stats.mean[-1])),
            "diffusion": float(np.sum(w * phi * reference[-1])),
        }
    return stats


def run_ensemble(cfg: EnsembleConfig, eps: float, members: int | None = None,
                 reference: bool = True) -> EnsembleStats:
    """M independent realizations solved to T; mean and standard error of the
    x-averaged profile at the output times (deterministic given cfg)."""
    m = cfg.members if members is None else members
    t0 = time.perf_counter()
    if cfg.workers > 1 and m > 1:
        chunks = [list(range(w, m, cfg.workers)) for w in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = [r for part in pool.map(_run_chunk, [(cfg, eps, c) for c in chunks]) for r in part]
    else:
        results = [run_member(cfg, eps, i) for i in range(m)]
    stats = aggregate(results, eps, cfg.grid.v, time.perf_counter() - t0)
    if reference:
        compare(stats, diffusion_reference(cfg, stats.times))
    return stats


# -- eps scan ---------------------------------------------------------------

@dataclass
class SlopeFit:
    slope: float
    intercept: float
    lo: float
    hi: float
    degenerate: bool
    reason: str = ""


def loglog_fit(x, y, confidence: float = 0.95) -> SlopeFit:
    """Least-squares line through (log x, log y) with a t-based confidence band."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2 or np.ptp(np.log(x[ok])) == 0:
        return SlopeFit(float("nan"), float("nan"), float("nan"), float("nan"), True,
                        "fewer than two positive finite errors")
    if ok.sum() < x.size:
        return SlopeFit(float("nan"), float("nan"), float("nan"), float("nan"), True,
                        "zero or non-finite errors present")
    fit = sps.linregress(np.log(x), np.log(y))
    if x.size > 2:
        half = sps.t.ppf(0.5 + confidence / 2, x.size - 2) * fit.stderr
    else:
        half = float("inf")
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.slope - half),
                    float(fit.slope + half), False)


@dataclass
class ObstructionResult:
    eps: np.ndarray
    flux_l2: np.ndarray       # L2 norm in v of the time-averaged Fick flux
    fit: SlopeFit
    max_mass_step: float


def obstruction_experiment(cfg: EnsembleConfig, eps_list=None) -> ObstructionResult:
    """Frozen deterministic field: the time-averaged Fick flux should vanish as eps -> 0.

    The velocity grid has an even node count so that v = 0 (the resonance of
    a time-independent field) is not a node.
    """
    eps_list = cfg.eps_list if eps_list is None else tuple(eps_list)
    grid = make_grid(cfg.nx, cfg.obstruction_nv, cfg.v_max, cfg.length)
    src = AnsatzField(cfg.obstruction)
    e_max = float(sum(abs(m.k) * abs(m.amplitude) for m in cfg.obstruction.modes))
    w = grid.v_weights
    flux, mass_step = [], 0.0
    for eps in eps_list:
        # fast-time step <= 1/4 so the oscillating flux is sampled, not aliased
        dt = min(suggest_dt(grid, eps, e_max), 0.25 * eps**2)
        _, traj = run(cfg.initial_distribution(grid), eps, src, cfg.T, dt, every=10**9,
                      accumulate_flux=True, positivity=cfg.positivity)
        flux.append(_l2(w, traj.mean_flux()))
        mass_step = max(mass_step, traj.max_mass_step)
    flux = np.array(flux)
    return ObstructionResult(np.array(eps_list), flux, loglog_fit(eps_list, flux), mass_step)


@dataclass
class StudyReport:
    stats: list
    errors: np.ndarray
    stderrs: np.ndarray
    fit: SlopeFit
    budget: dict
    obstruction: ObstructionResult | None
    wall_clock: float

    @property
    def eps(self) -> np.ndarray:
        return np.array([s.eps for s in self.stats])

    @property
    def strictly_decreasing(self) -> bool:
        order = np.argsort(self.eps)[::-1]
        e = self.errors[order]
        return bool(np.all(np.diff(e) < 0))


def discretization_budget(cfg: EnsembleConfig, eps: float) -> dict:
    """L2 changes of the final profile under refinement, for member 0.

    ``time``: halved Vlasov step; ``diffusion``: halved limit-solver step.
    """
    base = run_member(cfg, eps, 0)
    fine = run_member(cfg, eps, 0, refine=2)
    w = BarProfile(cfg.grid.v, cfg.grid.v).weights
    ref = diffusion_reference(cfg, [cfg.T])[-1]
    ref_fine = diffusion_reference(cfg, [cfg.T], dt=cfg.diffusion_dt / 2)[-1]
    parts = {"time": _l2(w, base.profiles[-1] - fine.profiles[-1]),
             "diffusion": _l2(w, ref - ref_fine)}
    parts["total"] = parts["time"] + parts["diffusion"]
    return parts


def convergence_study(cfg: EnsembleConfig, eps_list=None, obstruction: bool = True,
                      budget: bool = True, members: int | None = None) -> StudyReport:
    eps_list = cfg.eps_list if eps_list is None else tuple(eps_list)
    if len(eps_list) < 3:
        raise ValueError("a convergence study needs at least three eps values")
    t0 = time.perf_counter()
    stats = [run_ensemble(cfg, e, members) for e in eps_list]
    errors = np.array([s.error_l2 for s in stats])
    stderrs = np.array([s.stderr_l2 for s in stats])
    fit = loglog_fit(eps_list, errors)
    bud = discretization_budget(cfg, min(eps_list)) if budget else {}
    obs = obstruction_experiment(cfg, eps_list) if obstruction else None
    return StudyReport(stats, errors, stderrs, fit, bud, obs, time.perf_counter() - t0)


# -- output -----------------------------------------------------------------

def _versions() -> dict:
    from . import __version__
    return {"qlvp": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_ensemble(out_dir, cfg: EnsembleConfig, stats: EnsembleStats) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats.write_csv(out / "stats.csv")
    manifest = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "versions": _versions(),
                "grid": {"nx": cfg.nx, "nv": cfg.nv, "v_max": cfg.v_max, "length": cfg.length},
                "runs": [stats.summary()]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))


def write_study(out_dir, cfg: EnsembleConfig, report: StudyReport) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for s in report.stats:
        sub = out / f"eps_{s.eps:g}"
        sub.mkdir(exist_ok=True)
        s.write_csv(sub / "stats.csv")
    f = report.fit
    with open(out / "errors.csv", "w") as fh:
        fh.write("eps,L2_error,stderr_L2,sup_time_error,slope,slope_lo,slope_hi,degenerate\n")
        for s in report.stats:
            fh.write(f"{s.eps:.17g},{s.error_l2:.17g},{s.stderr_l2:.17g},{s.error_sup_time:.17g},"
                     f"{f.slope:.17g},{f.lo:.17g},{f.hi:.17g},{int(f.degenerate)}\n")
    manifest = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "versions": _versions(),
                "grid": {"nx": cfg.nx, "nv": cfg.nv, "v_max": cfg.v_max, "length": cfg.length},
                "runs": [s.summary() for s in report.stats],
                "fit": asdict(report.fit), "strictly_decreasing": report.strictly_decreasing,
                "discretization_budget": report.budget, "wall_clock_s": report.wall_clock,
                "cpu_count": os.cpu_count()}
    if report.obstruction is not None:
        o = report.obstruction
        manifest["obstruction"] = {"eps": o.eps.tolist(), "flux_l2": o.flux_l2.tolist(),
                                   "fit": asdict(o.fit), "max_mass_step": o.max_mass_step}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))
