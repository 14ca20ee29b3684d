"""Linear Landau damping check: simulated field-energy decay against the dispersion root.

    python3 scripts/landau.py --k 0.5 --T 40
"""
import argparse

import numpy as np

from qlvp.dispersion import ProfileG, find_roots, landau_decay_fit
from qlvp.phase_space import make_grid, perturbed_maxwellian
from qlvp.vlasov import SelfConsistentField, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=float, default=0.5, help="wavenumber (box length 2 pi / k)")
    ap.add_argument("--amplitude", type=float, default=1e-3)
    ap.add_argument("--nx", type=int, default=64)
    ap.add_argument("--nv", type=int, default=257)
    ap.add_argument("--v-max", type=float, default=6.0)
    ap.add_argument("--T", type=float, default=40.0)
    ap.add_argument("--dt", type=float, default=0.05)
    args = ap.parse_args()

    roots = find_roots(ProfileG.maxwellian(), args.k, (-1.0, -1e-3, 0.5, 3.0))
    lam = max(roots, key=lambda r: r.lam.real).lam
    grid = make_grid(args.nx, args.nv, args.v_max, 2 * np.pi / args.k)
    _, traj = run(perturbed_maxwellian(grid, args.amplitude, 1), 1.0, SelfConsistentField(),
                  args.T, args.dt)
    fit = landau_decay_fit(traj.times, traj.field_energy)
    e = traj.total_energy
    print(f"root lambda       {lam:.8f}")
    print(f"2 Re lambda       {2 * lam.real:.6f}")
    print(f"fitted rate       {fit.rate:.6f}  (R^2 {fit.r2:.6f}, window {fit.window[0]:.2f}..{fit.window[1]:.2f})")
    print(f"max mass step     {traj.max_mass_step:.2e}")
    print(f"energy drift rel  {np.max(np.abs(e - e[0])) / abs(e[0]):.2e}")


if __name__ == "__main__":
    main()
