"""Command-line surface: solve profiles, validate oracles, run evolutions.

Configuration is read from a line-based ``key = value`` file with sections
(INI syntax); command-line flags mirror the config keys and override them.
Reports are JSON, time series are CSV, and identical inputs produce
byte-identical outputs.

Exit codes: 0 on success (solver converged, all validations passed), 2 when
the computation finished but did not meet its criterion (non-converged
solve, failed validation), 1 on errors (bad config, infeasible problem,
time-step violation).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import replace

from .evolution import CFLError, discretize, estimate_shift, run
from .fields import (
    TailParams,
    contour_from_width_curve,
    load_field,
    make_tailed_contour,
    patch_width_curve,
    save_field,
    grid_norms,
)
from .energy import penalized_energy
from .identities import (
    IdentityReport,
    exponent_fit,
    pohozaev_check,
    touching_check,
    traveling_speed_formula,
)
from .oracle_lamb import LambParams, lamb_dipole, lamb_grid, lamb_validate
from .variational_solver import (
    DipoleProfile,
    GridSpec,
    InfeasibleImpulseError,
    SolveConfig,
    fixed_point_residual,
    solve_dipole,
)

OUTPUT_DIR_ENV = "DIPOLEKIT_OUTPUT_DIR"

_MISSING = object()


class ConfigError(ValueError):
    """Configuration problem; the message names the offending key."""


class _Parser(argparse.ArgumentParser):
    # usage problems should exit 1 like any other bad configuration
    def error(self, message):
        raise ConfigError(message)


def _load_config(path) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cfg.read_file(fh)
    except OSError as exc:
        raise ConfigError("cannot read config file %s: %s" % (path, exc))
    except configparser.Error as exc:
        raise ConfigError("malformed config file %s: %s" % (path, exc))
    return cfg


def _resolve(flag_value, cfg, section, key, cast, default=_MISSING):
    """Flag value if given, else config value, else default; missing
    required keys and uncastable values name the key in the error."""
    if flag_value is not None:
        return flag_value
    if cfg is not None and cfg.has_option(section, key):
        raw = cfg.get(section, key).strip()
        try:
            return cast(raw)
        except (TypeError, ValueError):
            raise ConfigError("invalid value for config key %s.%s: %r" % (section, key, raw))
    if default is _MISSING:
        raise ConfigError("missing config key: %s.%s" % (section, key))
    return default


def _resolution_list(raw: str):
    toks = [t for t in raw.replace(",", " ").split() if t]
    if not toks:
        raise ValueError("empty list")
    vals = [int(t) for t in toks]
    if any(v < 8 for v in vals):
        raise ValueError("resolutions must be at least 8 rows")
    return vals


def _output_dir(args, cfg) -> str:
    if getattr(args, "output_dir", None):
        return args.output_dir
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return env
    if cfg is not None and cfg.has_option("output", "dir"):
        return cfg.get("output", "dir").strip()
    return "."


def _out_path(outdir: str, name: str) -> str:
    if os.path.isabs(name):
        return name
    os.makedirs(outdir, exist_ok=True)
    return os.path.join(outdir, name)


def _report(name, lhs, rhs, tol, scale_floor, extra=None) -> IdentityReport:
    abs_err = abs(lhs - rhs)
    rel_err = abs_err / max(abs(lhs), abs(rhs), 1e-300)
    return IdentityReport(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        abs_err=float(abs_err),
        rel_err=float(rel_err),
        passed=bool(abs_err <= tol * max(abs(rhs), scale_floor)),
        tolerance=float(tol),
        extra=dict(extra or {}),
    )


def _write_json(path, doc):
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True))
        fh.write("\n")


# ---------------------------------------------------------------------------
# solve


def command_solve(args) -> int:
    cfg = _load_config(args.config) if args.config else None
    outdir = _output_dir(args, cfg)
    nrows = _resolve(args.nrows, cfg, "grid", "nrows", int)
    ncols = _resolve(args.ncols, cfg, "grid", "ncols", int)
    height = _resolve(args.height, cfg, "grid", "height", float)
    mode = _resolve(args.mode, cfg, "solve", "mode", str, "power")
    if mode not in ("power", "patch"):
        raise ConfigError(
            "invalid value for config key solve.mode: %r (expected power or patch)" % mode
        )
    mu = _resolve(args.mu, cfg, "solve", "mu", float)
    p = _resolve(args.p, cfg, "solve", "p", float, 2.0)
    nu = _resolve(args.nu, cfg, "solve", "nu", float, 1.0)
    strength = _resolve(args.strength, cfg, "solve", "lambda", float, 1.0)
    max_iter = _resolve(args.max_iter, cfg, "solve", "max_iter", int, 400)
    tol_field = _resolve(args.tol_field, cfg, "solve", "tol_field", float, 1e-8)
    tol_multiplier = _resolve(args.tol_multiplier, cfg, "solve", "tol_multiplier", float, 1e-7)
    relaxation = _resolve(args.relaxation, cfg, "solve", "relaxation", float, 0.5)
    prefix = _resolve(args.out_prefix, cfg, "solve", "out_prefix", str, "profile")
    seed = _resolve(args.seed, cfg, "run", "seed", int, 0)

    try:
        grid = GridSpec(nrows=nrows, ncols=ncols, height=height)
        config = SolveConfig(
            impulse=mu,
            grid=grid,
            exponent=p,
            patch_mode=(mode == "patch"),
            mass_cap=nu,
            strength=strength,
            max_iter=max_iter,
            tol_field=tol_field,
            tol_multiplier=tol_multiplier,
            relaxation=relaxation,
        )
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))

    profile = solve_dipole(config)

    field_path = _out_path(outdir, prefix + ".field")
    json_path = _out_path(outdir, prefix + ".json")
    save_field(profile.field, field_path)

    identities = []
    note = None
    if profile.converged:
        identities.append(pohozaev_check(profile))
        identities.append(touching_check(profile))
        identities.append(
            _report(
                "speed_formula_vs_multiplier",
                traveling_speed_formula(profile.field),
                profile.speed,
                0.03,
                abs(profile.speed),
            )
        )
        if not profile.patch_mode and profile.flux <= 1e-12:
            try:
                fitted = exponent_fit(profile)
                identities.append(
                    _report("near_wall_exponent", fitted, 1.0 / (p - 1.0), 0.12, 1.0)
                )
            except ValueError:
                pass
    else:
        note = "identities not computed: solve did not converge"

    doc = {
        "W": profile.speed,
        "gamma": profile.flux,
        "mu": profile.impulse,
        "mass": profile.mass,
        "p": None if profile.patch_mode else profile.exponent,
        "lambda": profile.strength,
        "energy": profile.energy.kinetic,
        "penalized_energy": profile.energy.penalized,
        "residual": profile.residual,
        "identities": [r.to_json_dict() for r in identities],
        "mode": mode,
        "nu": nu,
        "iterations": profile.iterations,
        "converged": profile.converged,
        "field_dump": os.path.basename(field_path),
        "grid": {"nrows": nrows, "ncols": ncols, "height": height},
        "seed": seed,
    }
    if note is not None:
        doc["note"] = note
    _write_json(json_path, doc)

    print("wrote %s and %s" % (json_path, field_path))
    print(
        "W = %r  gamma = %r  mass = %r  residual = %r  (%d iterations)"
        % (profile.speed, profile.flux, profile.mass, profile.residual, profile.iterations)
    )
    for rep in identities:
        print("identity %-28s %s  (|err| = %.3g, tol = %g)"
              % (rep.name, "pass" if rep.passed else "FAIL", rep.abs_err, rep.tolerance))
    if not profile.converged:
        print("solve did not converge within %d iterations" % max_iter)
        return 2
    return 0


# ---------------------------------------------------------------------------
# oracle


def command_oracle(args) -> int:
    cfg = _load_config(args.config) if args.config else None
    outdir = _output_dir(args, cfg)
    raw = _resolve(args.resolutions, cfg, "oracle", "resolutions", str, "48,96")
    try:
        resolutions = _resolution_list(raw)
    except ValueError as exc:
        raise ConfigError("invalid value for config key oracle.resolutions: %r (%s)" % (raw, exc))
    speed = _resolve(args.speed, cfg, "oracle", "speed", float, 1.0)
    radius = _resolve(args.radius, cfg, "oracle", "radius", float, 1.0)
    out = _resolve(args.out, cfg, "oracle", "out", str, "oracle_report.json")

    params = LambParams(speed_U=speed, radius_a=radius)
    reports = lamb_validate(resolutions, params)
    all_pass = all(r.passed for r in reports)
    doc = {
        "resolutions": resolutions,
        "speed": speed,
        "radius": radius,
        "all_pass": all_pass,
        "reports": [r.to_json_dict() for r in reports],
    }
    path = _out_path(outdir, out)
    _write_json(path, doc)
    print("wrote %s" % path)
    for rep in reports:
        print("%-36s %s  (|err| = %.3g, tol = %g)"
              % (rep.name, "pass" if rep.passed else "FAIL", rep.abs_err, rep.tolerance))
    return 0 if all_pass else 2


# ---------------------------------------------------------------------------
# evolve


def _evolve_initial(args, cfg, outdir):
    source = _resolve(args.source, cfg, "evolve", "source", str, "lamb")
    target = _resolve(args.target_count, cfg, "evolve", "target_count", int, 1500)
    blob = _resolve(args.blob, cfg, "evolve", "blob", float, None)
    contour = None
    echo = {"source": source, "target_count": target}
    if source == "lamb":
        speed = _resolve(args.speed, cfg, "evolve", "speed", float, 1.0)
        radius = _resolve(args.radius, cfg, "evolve", "radius", float, 1.0)
        nrows = _resolve(args.nrows, cfg, "evolve", "nrows", int, 128)
        params = LambParams(speed_U=speed, radius_a=radius)
        field = lamb_dipole(params, lamb_grid(params, nrows)).field
        ensemble = discretize(field, target, blob)
        echo.update({"speed": speed, "radius": radius, "nrows": nrows})
    elif source == "dump":
        path = _resolve(args.dump, cfg, "evolve", "dump", str)
        ensemble = discretize(load_field(path), target, blob)
        echo["dump"] = path
    elif source == "tailed":
        path = _resolve(args.dump, cfg, "evolve", "dump", str)
        strength = _resolve(args.strength, cfg, "evolve", "lambda", float, 1.0)
        eps = _resolve(args.tail_epsilon, cfg, "evolve", "tail_epsilon", float)
        tail_len = _resolve(args.tail_length, cfg, "evolve", "tail_length", float)
        center = _resolve(args.spike_center, cfg, "evolve", "spike_center", float)
        halfwidth = _resolve(args.spike_halfwidth, cfg, "evolve", "spike_halfwidth", float)
        base_field = load_field(path)
        s, widths = patch_width_curve(base_field, strength)
        base_contour = contour_from_width_curve(s, widths)
        tail = TailParams(
            epsilon=eps,
            tail_length=tail_len,
            spike_center=center,
            spike_halfwidth=halfwidth,
        )
        contour = make_tailed_contour(base_contour, tail)
        ensemble = discretize(contour, target, blob)
        if strength != 1.0:
            ensemble = replace(ensemble, circulations=ensemble.circulations * strength)
        echo.update(
            {
                "dump": path,
                "lambda": strength,
                "tail_epsilon": eps,
                "tail_length": tail_len,
                "spike_center": center,
                "spike_halfwidth": halfwidth,
            }
        )
    else:
        raise ConfigError(
            "invalid value for config key evolve.source: %r (expected lamb, dump, or tailed)"
            % source
        )
    echo["blob_radius"] = ensemble.blob_radius
    return ensemble, contour, echo


def command_evolve(args) -> int:
    cfg = _load_config(args.config) if args.config else None
    outdir = _output_dir(args, cfg)
    t_end = _resolve(args.t_end, cfg, "evolve", "t_end", float, 5.0)
    dt = _resolve(args.dt, cfg, "evolve", "dt", float, 0.01)
    record_every = _resolve(args.record_every, cfg, "evolve", "record_every", int, 10)
    p = _resolve(args.p, cfg, "evolve", "p", float, 2.0)
    out = _resolve(args.out, cfg, "evolve", "out", str, "evolution.csv")
    seed = _resolve(args.seed, cfg, "run", "seed", int, 0)

    ensemble, contour, echo = _evolve_initial(args, cfg, outdir)
    echo["seed"] = seed
    series = run(
        ensemble,
        t_end=t_end,
        dt=dt,
        record_every=record_every,
        contour=contour,
        exponent=p,
        config_echo=echo,
    )
    path = _out_path(outdir, out)
    series.to_csv(path)

    first, last = series.records[0], series.records[-1]
    print("wrote %s (%d records, %d particles)" % (path, len(series.records), len(ensemble.positions)))

    def _drift(a, b):
        return abs(b - a) / max(abs(a), 1e-300)

    print("mass drift      %.3e relative" % _drift(first.mass, last.mass))
    print("impulse drift   %.3e relative" % _drift(first.impulse, last.impulse))
    print("energy drift    %.3e relative" % _drift(first.energy, last.energy))
    try:
        _, slope = estimate_shift(series)
        print("fitted shift speed  %r" % slope)
    except ValueError:
        pass
    if contour is not None:
        print("perimeter  %r -> %r" % (first.perimeter, last.perimeter))
    return 0


# ---------------------------------------------------------------------------
# verify


def command_verify(args) -> int:
    try:
        with open(args.profile_dump) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read profile report %s: %s" % (args.profile_dump, exc))
    except json.JSONDecodeError as exc:
        raise ConfigError("malformed profile report %s: %s" % (args.profile_dump, exc))

    required = [
        "W",
        "gamma",
        "mu",
        "mass",
        "p",
        "lambda",
        "energy",
        "penalized_energy",
        "residual",
        "identities",
        "field_dump",
    ]
    for key in required:
        if key not in doc:
            raise ConfigError("profile report is missing key: %s" % key)

    field_path = doc["field_dump"]
    if not os.path.isabs(field_path):
        field_path = os.path.join(os.path.dirname(os.path.abspath(args.profile_dump)), field_path)
    field = load_field(field_path)

    patch = doc["p"] is None
    exponent = None if patch else float(doc["p"])
    strength = float(doc["lambda"])
    energy = penalized_energy(field, exponent, strength)
    mass, impulse, _ = grid_norms(field, 2.0 if patch else exponent)
    profile = DipoleProfile(
        field=field,
        exponent=exponent,
        strength=strength,
        speed=float(doc["W"]),
        flux=float(doc["gamma"]),
        impulse=impulse,
        mass=mass,
        energy=energy,
        residual=float(doc["residual"]),
        iterations=int(doc.get("iterations", 0)),
        converged=bool(doc.get("converged", True)),
        patch_mode=patch,
    )
    residual = fixed_point_residual(profile)

    checks = [
        _report("mass_matches_dump", mass, float(doc["mass"]), 1e-9, 1e-12),
        _report("impulse_matches_dump", impulse, float(doc["mu"]), 1e-9, 1e-12),
        _report("energy_matches_dump", energy.kinetic, float(doc["energy"]), 1e-9, 1e-12),
        _report(
            "penalized_energy_matches_dump",
            energy.penalized,
            float(doc["penalized_energy"]),
            1e-9,
            1e-12,
        ),
        _report("residual_matches_dump", residual, float(doc["residual"]), 1e-9, 1e-9),
    ]

    recomputed = {}
    if profile.converged:
        recomputed["pohozaev"] = pohozaev_check(profile)
        recomputed["touching"] = touching_check(profile)
        recomputed["speed_formula_vs_multiplier"] = _report(
            "speed_formula_vs_multiplier",
            traveling_speed_formula(field),
            profile.speed,
            0.03,
            abs(profile.speed),
        )
    for stored in doc["identities"]:
        name = stored.get("name", "")
        key = name if name in recomputed else name.split("_at_")[0]
        rep = recomputed.get(key)
        if rep is None:
            continue
        checks.append(
            _report(
                name + "_matches",
                1.0 if rep.passed else 0.0,
                1.0 if stored.get("pass") else 0.0,
                0.0,
                1e-12,
                extra={"recomputed_lhs": rep.lhs, "stored_lhs": stored.get("lhs")},
            )
        )

    all_pass = all(c.passed for c in checks)
    out_doc = {
        "report": os.path.abspath(args.profile_dump),
        "field_dump": field_path,
        "all_pass": all_pass,
        "checks": [c.to_json_dict() for c in checks],
    }
    print(json.dumps(out_doc, indent=2, sort_keys=True))
    return 0 if all_pass else 2


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub):
    sub.add_argument("--config", help="path to a key = value config file with sections")
    sub.add_argument("--output-dir", help="directory for outputs (overrides env and config)")
    sub.add_argument("--seed", type=int, help="run seed echoed into reports (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dipolekit", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("solve", help="compute a traveling-pair profile")
    _add_common(s)
    s.add_argument("--nrows", type=int, help="grid rows (config grid.nrows)")
    s.add_argument("--ncols", type=int, help="grid columns (config grid.ncols)")
    s.add_argument("--height", type=float, help="domain height (config grid.height)")
    s.add_argument("--mode", choices=["power", "patch"], help="vorticity map form")
    s.add_argument("--mu", type=float, help="target impulse")
    s.add_argument("--p", type=float, help="map exponent (power mode)")
    s.add_argument("--nu", type=float, help="mass cap")
    s.add_argument("--lambda", dest="strength", type=float, help="map strength multiplier")
    s.add_argument("--max-iter", type=int, help="iteration budget")
    s.add_argument("--tol-field", type=float, help="field change tolerance")
    s.add_argument("--tol-multiplier", type=float, help="multiplier change tolerance")
    s.add_argument("--relaxation", type=float, help="initial blend weight")
    s.add_argument("--out-prefix", help="basename for the .json and .field outputs")
    s.set_defaults(func=command_solve)

    s = subs.add_parser("oracle", help="validate against the closed-form dipole")
    _add_common(s)
    s.add_argument("--resolutions", help="comma-separated row counts, e.g. 48,96")
    s.add_argument("--speed", type=float, help="translation speed of the oracle")
    s.add_argument("--radius", type=float, help="core radius of the oracle")
    s.add_argument("--out", help="report filename")
    s.set_defaults(func=command_oracle)

    s = subs.add_parser("evolve", help="advance an initial condition and record diagnostics")
    _add_common(s)
    s.add_argument("--source", choices=["lamb", "dump", "tailed"], help="initial data kind")
    s.add_argument("--dump", help="field dump path (dump and tailed sources)")
    s.add_argument("--speed", type=float, help="oracle speed (lamb source)")
    s.add_argument("--radius", type=float, help="oracle radius (lamb source)")
    s.add_argument("--nrows", type=int, help="sampling rows for the oracle field")
    s.add_argument("--lambda", dest="strength", type=float, help="patch amplitude (tailed source)")
    s.add_argument("--tail-epsilon", type=float, help="tail area budget")
    s.add_argument("--tail-length", type=float, help="target tail half-width")
    s.add_argument("--spike-center", type=float, help="tail spike height")
    s.add_argument("--spike-halfwidth", type=float, help="tail spike support radius")
    s.add_argument("--t-end", type=float, help="final time")
    s.add_argument("--dt", type=float, help="time step")
    s.add_argument("--record-every", type=int, help="steps between diagnostics records")
    s.add_argument("--target-count", type=int, help="approximate particle count")
    s.add_argument("--blob", type=float, help="regularization radius override")
    s.add_argument("--p", type=float, help="norm exponent for the lp diagnostic")
    s.add_argument("--out", help="CSV filename")
    s.set_defaults(func=command_evolve)

    s = subs.add_parser("verify", help="recheck a profile report against its field dump")
    _add_common(s)
    s.add_argument("profile_dump", help="path to a profile .json report")
    s.set_defaults(func=command_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except CFLError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (InfeasibleImpulseError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
