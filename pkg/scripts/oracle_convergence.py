"""Resolution sweep against the analytic dipole.

Prints a convergence table: fixed-point residual, impulse and energy errors,
and the wall counter-flow speed, each against its closed-form value.

    python3 scripts/oracle_convergence.py --resolutions 24,48,96,192
"""

import argparse
import math

from dipolekit import (
    LambParams,
    fixed_point_residual,
    kinetic_energy,
    grid_norms,
    lamb_dipole,
    lamb_grid,
    velocity_eval,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolutions", default="24,48,96,192",
                    help="comma-separated row counts")
    ap.add_argument("--speed", type=float, default=1.0)
    ap.add_argument("--radius", type=float, default=1.0)
    args = ap.parse_args()

    params = LambParams(speed_U=args.speed, radius_a=args.radius)
    mu_exact = math.pi * args.speed * args.radius**2
    e_exact = math.pi * args.speed**2 * args.radius**2

    print("%6s  %12s  %12s  %12s  %12s" % (
        "nrows", "residual", "impulse err", "energy err", "wall u1"))
    for raw in args.resolutions.split(","):
        nrows = int(raw)
        dipole = lamb_dipole(params, lamb_grid(params, nrows))
        _, impulse, _ = grid_norms(dipole.field, 2.0)
        energy = kinetic_energy(dipole.field)
        u = velocity_eval(dipole.field, (0.0, 0.0), blob=0.0)
        print("%6d  %12.4e  %12.4e  %12.4e  %12.6f" % (
            nrows,
            fixed_point_residual(dipole),
            abs(impulse - mu_exact) / mu_exact,
            abs(energy - e_exact) / e_exact,
            u[0],
        ))


if __name__ == "__main__":
    main()
