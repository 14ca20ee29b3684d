"""Command line entry point: ``python3 -m qlvp <subcommand> config.json --out DIR``.

Every config is a JSON object carrying ``"schema_version": 1``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import (BarProfile, DiffusionField, analytic_diffusion, ansatz_diffusion,
                        empirical_diffusion, solve_diffusion)
from .dispersion import ProfileG, find_roots, landau_decay_fit, newton_root, stability_margin
from .ensemble import EnsembleConfig, convergence_study, run_ensemble, write_ensemble, write_study
from .phase_space import (Distribution, make_grid, maxwellian, perturbed_maxwellian, read_binary,
                          read_csv, write_binary, write_csv)
from .quasilinear import QLMode, QLState, ql_run
from .stochastic_field import (AnsatzSpec, CorrelationSpec, ansatz_realization,
                               synthesize_realization)
from .vlasov import (AnsatzField, FrozenField, RealizationField, SelfConsistentField, ZeroField,
                     run, suggest_dt)

SCHEMA_VERSION = 1


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SystemExit(f"{path}: schema_version {version!r} unsupported (expected {SCHEMA_VERSION})")
    return cfg


def _vgrid(spec: dict) -> np.ndarray:
    return np.linspace(float(spec["min"]), float(spec["max"]), int(spec["n"]))


def _initial(cfg: dict, grid=None) -> Distribution:
    init = dict(cfg["initial"])
    kind = init.pop("kind")
    if kind == "cosine_maxwellian":
        return perturbed_maxwellian(grid, init.get("amplitude", 0.0), init.get("mode", 1),
                                    init.get("sigma", 1.0))
    if kind == "csv":
        return read_csv(init["path"])
    if kind == "binary":
        return read_binary(init["path"], init.get("length", 2 * np.pi))
    raise SystemExit(f"unknown initial data kind {kind!r}")


def _source(cfg: dict, eps: float, T: float):
    """Field source plus (realization or None, max |E| bound or None)."""
    fcfg = cfg.get("field", {"kind": "self_consistent"})
    kind = fcfg["kind"]
    if kind == "self_consistent":
        return SelfConsistentField(), None, None
    if kind == "zero":
        return ZeroField(), None, 0.0
    if kind == "frozen":
        coeffs = np.array([complex(a, b) for a, b in fcfg["coeffs"]])
        return FrozenField(coeffs), None, float(2 * np.abs(coeffs).sum())
    if kind == "ansatz":
        spec = AnsatzSpec.from_dict(fcfg["ansatz"])
        return AnsatzField(spec), None, float(sum(abs(m.k * m.amplitude) for m in spec.modes))
    if kind == "stochastic":
        spec = CorrelationSpec.from_dict(fcfg["correlation"])
        dt_fast = float(fcfg.get("dt_fast", 1.0 / 16))
        n = int(np.ceil(T / eps**2 / dt_fast)) + 2
        real = synthesize_realization(spec, int(fcfg.get("seed", 0)), eps, dt_fast, n,
                                      fcfg.get("backend", "spectral"))
        return RealizationField(real), real, real.max_field_bound()
    raise SystemExit(f"unknown field kind {kind!r}")


def cmd_simulate(cfg: dict, out: Path) -> dict:
    g = cfg.get("grid", {})
    grid = make_grid(int(g.get("nx", 64)), int(g.get("nv", 257)), float(g.get("v_max", 6.0)),
                     float(g.get("length", 2 * np.pi)))
    f0 = _initial(cfg, grid)
    eps, T = float(cfg.get("eps", 1.0)), float(cfg["T"])
    source, real, e_max = _source(cfg, eps, T)
    dt = cfg.get("dt")
    if dt is None:
        if e_max is None:
            raise SystemExit("self-consistent runs need an explicit dt")
        tau = real.source.max_tau if real is not None else None
        dt = suggest_dt(f0.grid, eps, e_max, tau) if (e_max or tau) else T / 100
    state, traj = run(f0, eps, source, T, float(dt), every=int(cfg.get("every", 1)),
                      positivity=cfg.get("positivity", "strict"))
    write_csv(state.f, out / "final.csv")
    write_binary(state.f, out / "final.bin")
    traj.write_csv(out / "trajectory.csv")
    if real is not None:
        real.write_csv(out / "realization.csv")
    summary = {"steps": int(np.ceil(T / float(dt) - 1e-12)), "dt": float(dt), "max_mass_step": traj.max_mass_step,
               "energy_drift": float(np.max(np.abs(traj.total_energy - traj.total_energy[0]))),
               "overshoot": traj.overshoot}
    if cfg.get("decay_fit"):
        fit = landau_decay_fit(np.array(traj.times), np.array(traj.field_energy))
        summary["decay_rate"] = fit.rate
        summary["decay_r2"] = fit.r2
    return summary


def cmd_estimate_d(cfg: dict, out: Path) -> dict:
    v = _vgrid(cfg["v"])
    method = cfg.get("method", "analytic")
    eps, t = float(cfg.get("eps", 0.1)), float(cfg.get("t", 1.0))
    if method == "analytic":
        d = analytic_diffusion(CorrelationSpec.from_dict(cfg["correlation"]), v)
    elif method == "closed_form":
        d = ansatz_diffusion(AnsatzSpec.from_dict(cfg["ansatz"]), eps, t, v)
    elif method == "empirical":
        dt_fast = float(cfg.get("dt_fast", 1.0 / 16))
        n = int(round(t / eps**2 / dt_fast))
        if "ansatz" in cfg:
            real = ansatz_realization(AnsatzSpec.from_dict(cfg["ansatz"]), eps, dt_fast, n)
        else:
            real = synthesize_realization(CorrelationSpec.from_dict(cfg["correlation"]),
                                          int(cfg.get("seed", 0)), eps, dt_fast, n)
        d = empirical_diffusion(real, n * dt_fast * eps**2, eps, v, cfg.get("quadrature", "filon"))
    else:
        raise SystemExit(f"unknown estimate method {method!r}")
    d.write_csv(out / "diffusion.csv")
    return {"method": method, "min_D": float(d.values.min()), "max_D": float(d.values.max())}


def cmd_diffuse(cfg: dict, out: Path) -> dict:
    if "diffusion_csv" in cfg:
        d = DiffusionField.read_csv(cfg["diffusion_csv"])
        v = d.v
    else:
        v = _vgrid(cfg["v"])
        d = analytic_diffusion(CorrelationSpec.from_dict(cfg["correlation"]), v)
    if "profile_csv" in cfg:
        p = BarProfile.read_csv(cfg["profile_csv"])
    else:
        values = maxwellian(v, float(cfg.get("sigma", 1.0)))
        p = BarProfile(v, values)
        p = BarProfile(v, values / p.mass())
    m0, l0 = p.mass(), p.l2_norm()
    p = solve_diffusion(p, d, float(cfg["T"]), float(cfg.get("dt", 1e-3)), float(cfg.get("theta", 1.0)))
    p.write_csv(out / "profile.csv")
    return {"mass_change": p.mass() - m0, "l2_change": p.l2_norm() - l0}


def cmd_dispersion(cfg: dict, out: Path) -> dict:
    prof = ProfileG.from_dict(cfg["profile"])
    k = float(cfg["k"])
    result = {}
    if "rect" in cfg:
        roots = find_roots(prof, k, tuple(cfg["rect"]))
        result["winding"] = roots.winding
        result["consistent"] = roots.consistent
        result["roots"] = [[r.lam.real, r.lam.imag, r.residual] for r in roots]
    if "guess" in cfg:
        lam, res = newton_root(prof, k, complex(*cfg["guess"]))
        result["newton"] = [lam.real, lam.imag, res]
    if "margin" in cfg:
        m = cfg["margin"]
        sm = stability_margin(prof, int(m["k_max"]), float(m.get("length", 2 * np.pi)))
        result["margin"] = {"kappa": sm.kappa, "k_at_min": sm.k_at_min}
    with open(out / "roots.csv", "w") as fh:
        fh.write("re_lambda,im_lambda,residual\n")
        for row in result.get("roots", []):
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return result


def cmd_quasilinear(cfg: dict, out: Path) -> dict:
    v = _vgrid(cfg["v"])
    prof = ProfileG.from_dict(cfg["profile"])
    g = prof.sample(v)
    g = g / BarProfile(v, g).mass()
    gridded = ProfileG.gridded(v, g)
    modes = []
    for m in cfg["modes"]:
        lam, res = newton_root(gridded, float(m["k"]), complex(*m["guess"]))
        modes.append(QLMode(float(m["k"]), lam, float(m["w0"])))
    state = QLState(v, g, float(cfg.get("eps", 0.1)), modes)
    ql = ql_run(state, float(cfg.get("dt", 0.1)), float(cfg.get("T", 50.0)),
                snapshot_every=int(cfg.get("snapshot_every", 10)))
    np.savetxt(out / "G_snapshots.csv", np.column_stack([v, ql.profiles.T]), delimiter=",",
               comments="", fmt="%.17g",
               header="v," + ",".join(f"t={t:.6g}" for t in ql.snapshot_times))
    cols, names = [ql.times], ["t"]
    for j, m in enumerate(modes):
        cols += [ql.lam[:, j].real, ql.lam[:, j].imag]
        names += [f"re_lambda_k{m.k:g}", f"im_lambda_k{m.k:g}"]
    np.savetxt(out / "lambda.csv", np.column_stack(cols), delimiter=",", comments="",
               fmt="%.17g", header=",".join(names))
    np.savetxt(out / "D_snapshots.csv", np.column_stack([v, ql.d_snapshots.T]), delimiter=",",
               comments="", fmt="%.17g",
               header="v," + ",".join(f"t={t:.6g}" for t in ql.snapshot_times))
    return {"saturation_times": ql.saturation_times, "mass_drift": ql.mass_drift,
            "d_min": ql.d_min, "steps": len(ql.times) - 1}


def cmd_ensemble(cfg: dict, out: Path, eps: float | None) -> dict:
    ec = EnsembleConfig.from_dict(cfg)
    eps = eps if eps is not None else ec.eps_list[-1]
    stats = run_ensemble(ec, eps)
    write_ensemble(out, ec, stats)
    return stats.summary() | {"seeds": len(stats.seeds)}


def cmd_study(cfg: dict, out: Path) -> dict:
    ec = EnsembleConfig.from_dict(cfg)
    report = convergence_study(ec)
    write_study(out, ec, report)
    return {"errors": report.errors.tolist(), "slope": report.fit.slope,
            "strictly_decreasing": report.strictly_decreasing}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qlvp", description="Quasilinear Vlasov toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "estimate-d", "diffuse", "dispersion", "quasilinear", "ensemble", "study"):
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        if name == "ensemble":
            p.add_argument("--eps", type=float, help="eps value (default: last in eps_list)")
    args = ap.parse_args(argv)
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    handlers = {"simulate": cmd_simulate, "estimate-d": cmd_estimate_d, "diffuse": cmd_diffuse,
                "dispersion": cmd_dispersion, "quasilinear": cmd_quasilinear, "study": cmd_study}
    if args.command == "ensemble":
        summary = cmd_ensemble(cfg, out, args.eps)
    else:
        summary = handlers[args.command](cfg, out)
    json.dump(summary, sys.stdout, indent=2, default=float)
    print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
