"""Diffusion coefficients three ways: analytic from the correlation spectrum, empirical
from one synthesized realization, and the closed form of a deterministic ansatz.

    python3 scripts/diffusion_estimates.py --eps 0.1 --members 64
"""
import argparse

import numpy as np

from qlvp.diffusion import (analytic_diffusion, ansatz_diffusion, bump, empirical_diffusion,
                            weak_limit_pairing, weak_limit_value)
from qlvp.ensemble import default_spec
from qlvp.stochastic_field import AnsatzMode, AnsatzSpec, ansatz_realization, synthesize_realization


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--members", type=int, default=64, help="realizations averaged")
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--dt-fast", type=float, default=1 / 16)
    args = ap.parse_args()

    v = np.linspace(-4, 4, 161)
    n = int(round(args.t / args.eps**2 / args.dt_fast))
    t = n * args.dt_fast * args.eps**2

    spec = default_spec()
    phi = bump(0.0, 2.0)
    d_lim = analytic_diffusion(spec, v)
    pairs = [weak_limit_pairing(empirical_diffusion(
        synthesize_realization(spec, seed, args.eps, args.dt_fast, n + 2), t, args.eps, v), phi)
        for seed in range(args.members)]
    print(f"stochastic field, eps = {args.eps}, t = {t:g}")
    print(f"  <D_limit, phi>      {weak_limit_pairing(d_lim, phi):.6e}")
    print(f"  <D_empirical, phi>  {np.mean(pairs):.6e} +/- {np.std(pairs, ddof=1) / np.sqrt(len(pairs)):.1e}"
          f"  ({len(pairs)} realizations)")

    ansatz = AnsatzSpec.symmetric([AnsatzMode(1, 1.0, 2.0, 0.3)])
    emp = empirical_diffusion(ansatz_realization(ansatz, args.eps, args.dt_fast, n), t, args.eps, v)
    ref = ansatz_diffusion(ansatz, args.eps, t, v)
    err = np.max(np.abs(emp.values - ref.values)) / np.max(np.abs(ref.values))
    print("single-mode ansatz")
    print(f"  empirical vs closed form, relative sup  {err:.2e}")
    print(f"  <D, phi> = {weak_limit_pairing(ref, phi):.6e}, limit {weak_limit_value(ansatz, phi):.6e}")


if __name__ == "__main__":
    main()
