"""Impulse scaling of the patch profile family.

Solves bounded-vorticity profiles over a ladder of impulse targets on one
grid and fits the log-log slopes of speed and kinetic energy against
impulse.  The expected exponents are 1/3 and 5/3.

    python3 scripts/patch_scaling.py --nrows 64 --impulses 0.00625,0.0125,0.025,0.05
"""

import argparse
import time

import numpy as np

from dipolekit import GridSpec, SolveConfig, solve_dipole


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nrows", type=int, default=64)
    ap.add_argument("--height", type=float, default=2.2)
    ap.add_argument("--impulses", default="0.00625,0.0125,0.025,0.05",
                    help="comma-separated impulse targets")
    ap.add_argument("--relaxation", type=float, default=0.8)
    ap.add_argument("--max-iter", type=int, default=1500)
    args = ap.parse_args()

    impulses = [float(s) for s in args.impulses.split(",")]
    solved_mu, speeds, energies = [], [], []
    print("%10s  %10s  %12s  %6s  %8s" % ("impulse", "speed", "energy", "iters", "secs"))
    for mu in impulses:
        config = SolveConfig(
            impulse=mu,
            grid=GridSpec(nrows=args.nrows, ncols=2 * args.nrows, height=args.height),
            patch_mode=True,
            strength=1.0,
            relaxation=args.relaxation,
            max_iter=args.max_iter,
        )
        t0 = time.monotonic()
        profile = solve_dipole(config)
        if not profile.converged:
            print("%10.5g  solve did not converge, skipping" % mu)
            continue
        solved_mu.append(mu)
        speeds.append(profile.speed)
        energies.append(profile.energy.kinetic)
        print("%10.5g  %10.6f  %12.6e  %6d  %8.1f" % (
            mu, profile.speed, profile.energy.kinetic,
            profile.iterations, time.monotonic() - t0))

    if len(speeds) >= 2:
        logmu = np.log(solved_mu)
        slope_w = np.polyfit(logmu, np.log(speeds), 1)[0]
        slope_e = np.polyfit(logmu, np.log(energies), 1)[0]
        print("fitted speed exponent   %.4f  (expected 1/3 = 0.3333)" % slope_w)
        print("fitted energy exponent  %.4f  (expected 5/3 = 1.6667)" % slope_e)


if __name__ == "__main__":
    main()
