"""Filament stretching experiment.

Solves a patch profile, attaches a thin tail to its boundary contour,
discretizes to particles, evolves, and reports the perimeter growth rate
against a quarter of the translation speed.

    python3 scripts/perimeter_growth.py --nrows 64 --t-end 3 --out growth.csv
"""

import argparse
import time

from dipolekit import (
    GridSpec,
    SolveConfig,
    TailParams,
    contour_from_width_curve,
    contour_perimeter,
    discretize,
    make_tailed_contour,
    patch_width_curve,
    run,
    solve_dipole,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nrows", type=int, default=64)
    ap.add_argument("--height", type=float, default=2.2)
    ap.add_argument("--impulse", type=float, default=0.05)
    ap.add_argument("--tail-epsilon", type=float, default=0.06)
    ap.add_argument("--tail-length", type=float, default=1.0)
    ap.add_argument("--spike-center", type=float, default=0.18)
    ap.add_argument("--spike-halfwidth", type=float, default=0.05)
    ap.add_argument("--target-count", type=int, default=1400)
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=0.04)
    ap.add_argument("--record-every", type=int, default=10)
    ap.add_argument("--out", default="growth.csv")
    args = ap.parse_args()

    config = SolveConfig(
        impulse=args.impulse,
        grid=GridSpec(nrows=args.nrows, ncols=2 * args.nrows, height=args.height),
        patch_mode=True,
        strength=1.0,
        relaxation=0.8,
        max_iter=1500,
    )
    t0 = time.monotonic()
    profile = solve_dipole(config)
    print("solved patch: W = %.6f (%d iters, %.1f s)" % (
        profile.speed, profile.iterations, time.monotonic() - t0))

    s, widths = patch_width_curve(profile.field, profile.strength)
    base = contour_from_width_curve(s, widths)
    tail = TailParams(
        epsilon=args.tail_epsilon,
        tail_length=args.tail_length,
        spike_center=args.spike_center,
        spike_halfwidth=args.spike_halfwidth,
    )
    contour = make_tailed_contour(base, tail)
    print("contour: %d vertices, perimeter %.4f (base %.4f)"
          % (len(contour.vertices), contour_perimeter(contour), contour_perimeter(base)))

    ensemble = discretize(contour, args.target_count)
    t0 = time.monotonic()
    series = run(
        ensemble,
        t_end=args.t_end,
        dt=args.dt,
        record_every=args.record_every,
        contour=contour,
    )
    series.to_csv(args.out)
    print("evolved %d particles to t = %g (%.1f s); wrote %s" % (
        len(ensemble.positions), args.t_end, time.monotonic() - t0, args.out))

    records = series.records
    for r in records:
        print("  t = %5.2f  perimeter = %8.4f" % (r.time, r.perimeter))
    window = [r for r in records if r.time >= min(2.0, 0.4 * args.t_end)]
    if len(window) >= 2:
        rate = (window[-1].perimeter - window[0].perimeter) / (
            window[-1].time - window[0].time)
        print("late-window growth rate %.5f vs quarter speed %.5f"
              % (rate, 0.25 * profile.speed))


if __name__ == "__main__":
    main()
