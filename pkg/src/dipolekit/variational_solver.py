"""Constrained maximization of the (penalized) energy over half-plane fields.

The profile equation couples the field to its own stream through a pointwise
map: power-law regime

    w = strength * (psi - speed * x2 - flux)_+^(1/(p-1)),

bounded (patch) regime

    w = strength * indicator(psi - speed * x2 - flux > 0),

with the two multipliers chosen so the impulse hits its target exactly and
the mass respects its cap (positive flux if and only if the cap saturates).
Both the impulse and the mass of the mapped field decrease strictly in the
speed and in the flux while the field is nonzero, which makes nested
bisection valid: an inner bisection on the speed for the impulse, an outer
one on the flux for the mass.

The solver runs a relaxed fixed-point iteration of that map, re-solving the
multipliers each sweep, Steiner-symmetrizing and recentring each iterate,
and halving the relaxation whenever the tracked energy drops.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .energy import EnergyReport, penalized_energy
from .fields import GridField, grid_norms, steiner_symmetrize
from .halfplane_kernel import stream_grid


class InfeasibleImpulseError(ValueError):
    """No speed multiplier reaches the impulse target (or the support of the
    would-be solution hits the grid boundary, so the box cannot represent
    it)."""


class UndefinedResidualError(ValueError):
    """Residual of a zero-mass profile requested."""


@dataclass(frozen=True)
class GridSpec:
    """Solver grid: symmetric about x1 = 0, bottom edge on the wall."""

    nrows: int
    ncols: int
    height: float

    @property
    def cell(self) -> float:
        return self.height / self.nrows

    @property
    def width(self) -> float:
        return self.ncols * self.cell

    @property
    def origin_x1(self) -> float:
        return -0.5 * self.width

    def make_field(self) -> GridField:
        return GridField.zeros(self.origin_x1, self.cell, self.nrows, self.ncols)

    def validate(self):
        if self.nrows < 8 or self.ncols < 8:
            raise ValueError("grid needs at least 8 rows and columns")
        if self.ncols % 2:
            raise ValueError("grid needs an even column count for symmetrization")
        if not self.height > 0.0:
            raise ValueError("grid height must be positive")


@dataclass
class SolveConfig:
    """Targets, multipliers' constraint data, and iteration controls.

    impulse is the constrained value of the height-weighted integral;
    mass_cap bounds the plain integral (flux goes positive only when the
    bound saturates); strength scales the map; exponent must exceed 4/3 in
    the power-law regime (the energy loses coercivity at 4/3) and is
    ignored in patch mode.
    """

    impulse: float
    grid: GridSpec
    exponent: float = 2.0
    patch_mode: bool = False
    mass_cap: float = 1.0
    strength: float = 1.0
    max_iter: int = 400
    tol_field: float = 1e-8
    tol_multiplier: float = 1e-7
    relaxation: float = 0.5

    def validate(self):
        self.grid.validate()
        if not self.impulse > 0.0:
            raise ValueError("impulse target must be positive")
        if not self.mass_cap > 0.0:
            raise ValueError("mass cap must be positive")
        if not self.strength > 0.0:
            raise ValueError("map strength must be positive")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.patch_mode and not self.exponent > 4.0 / 3.0:
            raise ValueError("map exponent must exceed 4/3 in the power-law regime")


@dataclass
class DipoleProfile:
    """Solved (or analytic) traveling-pair profile with its multipliers."""

    field: GridField
    exponent: float | None
    strength: float
    speed: float
    flux: float
    impulse: float
    mass: float
    energy: EnergyReport
    residual: float
    iterations: int
    converged: bool
    patch_mode: bool = False
    energy_history: list = dc_field(default_factory=list)


# ---------------------------------------------------------------------------
# vorticity map


def _corner_excess(excess: np.ndarray):
    """Excess values at cell corners by bilinear extension of cell centers.

    Boundary corners come from linear extrapolation, so at the wall row the
    corner value continues the vertical slope of the two nearest rows.
    """
    nr, nc = excess.shape
    padded = np.empty((nr + 2, nc + 2))
    padded[1:-1, 1:-1] = excess
    padded[0, 1:-1] = 2.0 * excess[0] - excess[1]
    padded[-1, 1:-1] = 2.0 * excess[-1] - excess[-2]
    padded[:, 0] = 2.0 * padded[:, 1] - padded[:, 2]
    padded[:, -1] = 2.0 * padded[:, -2] - padded[:, -3]
    corners = 0.25 * (
        padded[:-1, :-1] + padded[1:, :-1] + padded[:-1, 1:] + padded[1:, 1:]
    )
    return corners[:-1, :-1], corners[:-1, 1:], corners[1:, :-1], corners[1:, 1:]


def _positive_fraction(c00, c10, c01, c11) -> np.ndarray:
    """Cell area fraction where the bilinear corner interpolant is positive.

    Exact for any globally linear excess (the crossing points are linear
    interpolations along the edges); saddle cells are disambiguated by the
    corner mean.
    """
    p00 = c00 > 0.0
    p10 = c10 > 0.0
    p01 = c01 > 0.0
    p11 = c11 > 0.0
    case = (
        p00.astype(np.int8)
        + 2 * p10.astype(np.int8)
        + 4 * p01.astype(np.int8)
        + 8 * p11.astype(np.int8)
    )
    area = np.zeros(c00.shape)

    def put(mask, expr):
        if mask.any():
            area[mask] = expr[mask]

    # off-mask entries of the edge crossings may be inf/nan; every masked
    # selection below only reads entries whose denominators are nonzero
    with np.errstate(divide="ignore", invalid="ignore"):
        tb = c00 / (c00 - c10)
        tt = c01 / (c01 - c11)
        tl = c00 / (c00 - c01)
        tr = c10 / (c10 - c11)
        put(case == 1, 0.5 * tb * tl)
        put(case == 2, 0.5 * (1.0 - tb) * tr)
        put(case == 4, 0.5 * tt * (1.0 - tl))
        put(case == 8, 0.5 * (1.0 - tt) * (1.0 - tr))
        put(case == 3, 0.5 * (tl + tr))
        put(case == 12, 1.0 - 0.5 * (tl + tr))
        put(case == 5, 0.5 * (tb + tt))
        put(case == 10, 1.0 - 0.5 * (tb + tt))
        put(case == 14, 1.0 - 0.5 * tb * tl)
        put(case == 13, 1.0 - 0.5 * (1.0 - tb) * tr)
        put(case == 11, 1.0 - 0.5 * tt * (1.0 - tl))
        put(case == 7, 1.0 - 0.5 * (1.0 - tt) * (1.0 - tr))
        center = 0.25 * (c00 + c10 + c01 + c11)
        saddle_a = case == 9
        put(saddle_a & (center > 0.0),
            1.0 - 0.5 * (1.0 - tb) * tr - 0.5 * tt * (1.0 - tl))
        put(saddle_a & (center <= 0.0),
            0.5 * tb * tl + 0.5 * (1.0 - tt) * (1.0 - tr))
        saddle_b = case == 6
        put(saddle_b & (center > 0.0),
            1.0 - 0.5 * tb * tl - 0.5 * (1.0 - tt) * (1.0 - tr))
        put(saddle_b & (center <= 0.0),
            0.5 * (1.0 - tb) * tr + 0.5 * tt * (1.0 - tl))
    area[case == 15] = 1.0
    return np.clip(area, 0.0, 1.0)


def _excess_grid(stream: GridField, speed: float, flux: float) -> np.ndarray:
    return stream.values - speed * stream.x2_centers[:, None] - flux


def apply_vorticity_map(
    stream: GridField,
    speed: float,
    flux: float,
    exponent: float | None = 2.0,
    strength: float = 1.0,
    patch_mode: bool = False,
) -> GridField:
    """Map stream values to the profile vorticity at given multipliers.

    Power-law regime: strength * (excess)_+^(1/(p-1)); patch regime:
    strength times the sub-cell positive-area fraction of the excess (the
    corner-interpolated level set).  The outer cell ring is zeroed to keep
    the compact-support convention.
    """
    excess = _excess_grid(stream, speed, flux)
    if patch_mode:
        vals = strength * _positive_fraction(*_corner_excess(excess))
    else:
        p = float(exponent)
        if p <= 1.0:
            raise ValueError("map exponent must exceed 1")
        vals = strength * np.clip(excess, 0.0, None) ** (1.0 / (p - 1.0))
    vals[0, :] = 0.0
    vals[-1, :] = 0.0
    vals[:, 0] = 0.0
    vals[:, -1] = 0.0
    return stream.with_values(vals)


# ---------------------------------------------------------------------------
# multiplier solve


_BISECT_ITERS = 64


def _map_for(stream: GridField, config: SolveConfig, speed: float, flux: float) -> GridField:
    return apply_vorticity_map(
        stream,
        speed,
        flux,
        exponent=None if config.patch_mode else config.exponent,
        strength=config.strength,
        patch_mode=config.patch_mode,
    )


def _impulse_of(f: GridField) -> float:
    return grid_norms(f, 2.0)[1]


def _speed_for_impulse(stream: GridField, config: SolveConfig, flux: float):
    """Inner bisection: speed with impulse(map) = target, or None if even
    speed zero cannot reach the target at this flux."""
    target = config.impulse
    f0 = _map_for(stream, config, 0.0, flux)
    if _impulse_of(f0) < target * (1.0 - 1e-12):
        return None
    x2 = stream.x2_centers
    hi = float((stream.values / x2[:, None]).max()) + 1.0
    lo = 0.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if _impulse_of(_map_for(stream, config, mid, flux)) >= target:
            lo = mid
        else:
            hi = mid
    speed = 0.5 * (lo + hi)
    return speed, _map_for(stream, config, speed, flux)


def _ring_violation(stream: GridField, speed: float, flux: float) -> bool:
    """Positive excess on a truncation edge (top or sides) means the matched
    support presses against the box.  The wall-adjacent row is exempt: with
    zero flux the excess is expected to reach the wall under the core, and
    downward containment is provided by the wall itself."""
    excess = _excess_grid(stream, speed, flux)
    ring = np.concatenate([excess[-1], excess[:-1, 0], excess[:-1, -1]])
    return bool(np.any(ring > 0.0))


def solve_multipliers(stream: GridField, config: SolveConfig):
    """Find (speed, flux) with impulse = target and mass within its cap.

    Returns (speed, flux, mapped field).  Flux stays zero when the mass cap
    is slack at the impulse-matching speed; otherwise an outer bisection
    raises the flux until the mass meets the cap.  If no multipliers reach
    the impulse target, or the matched field's support presses against the
    grid boundary (the box cannot contain the solution), the impulse is
    infeasible.
    """
    base = _speed_for_impulse(stream, config, 0.0)
    if base is None:
        raise InfeasibleImpulseError(
            "impulse target %g unreachable at zero flux on this grid" % config.impulse
        )
    speed0, field0 = base
    if grid_norms(field0, 2.0)[0] <= config.mass_cap * (1.0 + 1e-12):
        if _ring_violation(stream, speed0, 0.0):
            raise InfeasibleImpulseError(
                "matched field touches the grid boundary; enlarge the box"
            )
        return speed0, 0.0, field0

    # mass cap saturated: raise flux until mass drops to the cap
    hi = max(1e-12, 1e-3 * float(stream.values.max()))
    while True:
        res = _speed_for_impulse(stream, config, hi)
        if res is None or grid_norms(res[1], 2.0)[0] < config.mass_cap:
            break
        hi *= 2.0
        if hi > 1e6 * max(1.0, float(stream.values.max())):
            raise InfeasibleImpulseError("flux bracket search failed to close")
    lo = 0.0
    best = (speed0, 0.0, field0)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        res = _speed_for_impulse(stream, config, mid)
        if res is None or grid_norms(res[1], 2.0)[0] < config.mass_cap:
            hi = mid
        else:
            lo = mid
            best = (res[0], mid, res[1])
    speed, flux, mapped = best
    if _ring_violation(stream, speed, flux):
        raise InfeasibleImpulseError(
            "matched field touches the grid boundary; enlarge the box"
        )
    return speed, flux, mapped


# ---------------------------------------------------------------------------
# residual and solve loop


def fixed_point_residual(profile) -> float:
    """Relative L1 distance between the field and its own map, over mass."""
    f: GridField = profile.field
    mass = grid_norms(f, 2.0)[0]
    if mass <= 0.0:
        raise UndefinedResidualError("residual of a zero-mass profile is undefined")
    psi = f.with_values(stream_grid(f))
    mapped = apply_vorticity_map(
        psi,
        profile.speed,
        profile.flux,
        exponent=getattr(profile, "exponent", None),
        strength=profile.strength,
        patch_mode=getattr(profile, "patch_mode", False),
    )
    return float(np.abs(f.values - mapped.values).sum() * f.cell * f.cell / mass)


def _recenter(f: GridField) -> GridField:
    vals = f.values
    total = vals.sum()
    if total <= 0.0:
        return f
    center = (vals * f.x1_centers[None, :]).sum() / total
    shift = int(round(center / f.cell))
    if shift == 0:
        return f
    rolled = np.roll(vals, -shift, axis=1)
    if shift > 0:
        rolled[:, -shift:] = 0.0
    else:
        rolled[:, :-shift] = 0.0
    rolled[:, 0] = 0.0
    rolled[:, -1] = 0.0
    return f.with_values(rolled)


def _initial_field(config: SolveConfig) -> GridField:
    template = config.grid.make_field()
    height = config.grid.height
    z0 = min(config.impulse ** (1.0 / 3.0), 0.5 * height)
    sigma = min(0.4 * z0, 0.25 * height)
    c1, c2 = template.cell_centers()
    vals = np.exp(-((c1**2) + (c2 - z0) ** 2) / (2.0 * sigma**2))
    vals[0, :] = vals[-1, :] = 0.0
    vals[:, 0] = vals[:, -1] = 0.0
    return template.with_values(vals)


def solve_dipole(config: SolveConfig, initial: GridField | None = None) -> DipoleProfile:
    """Relaxed fixed-point iteration for the traveling-pair profile.

    Each sweep: stream of the iterate, multiplier solve on that stream, a
    relaxed blend toward the mapped field, symmetrization, recentring.  The
    tracked (penalized) energy should ascend; a drop halves the relaxation.
    Non-convergence within the iteration budget is reported through the
    ``converged`` flag, not an exception.
    """
    config.validate()
    if initial is not None:
        if initial.values.shape != (config.grid.nrows, config.grid.ncols):
            raise ValueError("initial field shape does not match the grid spec")
        field = GridField(config.grid.origin_x1, config.grid.cell, np.array(initial.values))
    else:
        field = _initial_field(config)
    _, imp, _ = grid_norms(field, 2.0)
    if imp <= 0.0:
        raise ValueError("initial field must carry positive impulse")
    field = field.with_values(field.values * (config.impulse / imp))
    field = steiner_symmetrize(field)

    area = field.cell * field.cell
    relax = config.relaxation
    exponent = None if config.patch_mode else config.exponent
    history: list[float] = []
    prev_energy = -np.inf
    prev_mult = None
    converged = False
    speed = flux = 0.0
    iterations = 0

    for iterations in range(1, config.max_iter + 1):
        psi = stream_grid(field)
        stream = field.with_values(psi)
        speed, flux, mapped = solve_multipliers(stream, config)
        tracked = penalized_energy(field, exponent, config.strength, stream_of_f=psi).penalized
        history.append(tracked)
        if tracked < prev_energy - 1e-12 * max(1.0, abs(prev_energy)):
            relax = max(0.05, 0.5 * relax)
        prev_energy = tracked

        blended = (1.0 - relax) * field.values + relax * mapped.values
        new_field = _recenter(steiner_symmetrize(field.with_values(blended)))

        mass_now = grid_norms(field, 2.0)[0]
        change = np.abs(new_field.values - field.values).sum() * area / max(mass_now, 1e-300)
        if prev_mult is None:
            mult_change = np.inf
        else:
            mult_change = max(
                abs(speed - prev_mult[0]) / max(abs(speed), 1e-12),
                abs(flux - prev_mult[1]) / max(abs(flux), 1.0),
            )
        prev_mult = (speed, flux)
        field = new_field
        if change < config.tol_field and mult_change < config.tol_multiplier:
            converged = True
            break

    # flush blend residue: the (1 - relax)^n tail of the initial guess never
    # reaches exact zero, which would smear the support seen by width-curve
    # and particle-discretization consumers
    peak = float(field.values.max())
    if peak > 0.0:
        field = field.with_values(
            np.where(field.values >= 1e-12 * peak, field.values, 0.0)
        )
    psi = stream_grid(field)
    stream = field.with_values(psi)
    speed, flux, mapped = solve_multipliers(stream, config)
    mass, impulse, _ = grid_norms(field, 2.0)
    residual = float(np.abs(field.values - mapped.values).sum() * area / max(mass, 1e-300))
    energy = penalized_energy(field, exponent, config.strength, stream_of_f=psi)
    return DipoleProfile(
        field=field,
        exponent=exponent,
        strength=config.strength,
        speed=speed,
        flux=flux,
        impulse=impulse,
        mass=mass,
        energy=energy,
        residual=residual,
        iterations=iterations,
        converged=converged,
        patch_mode=config.patch_mode,
        energy_history=history,
    )
