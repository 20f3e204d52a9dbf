"""Quantitative identities: speed formula, virial balance, touching, scaling."""

import dataclasses

import numpy as np
import pytest

from dipolekit import (
    GridField,
    GridSpec,
    SolveConfig,
    exponent_fit,
    pohozaev_check,
    scaling_check,
    solve_dipole,
    touching_check,
    traveling_speed_formula,
)

QUICK_P2 = SolveConfig(
    impulse=0.005,
    grid=GridSpec(nrows=32, ncols=64, height=1.1),
    exponent=2.0,
    strength=91.7619,
    relaxation=0.8,
    max_iter=400,
)

QUICK_PATCH = SolveConfig(
    impulse=0.05,
    grid=GridSpec(nrows=32, ncols=64, height=2.2),
    patch_mode=True,
    mass_cap=1.0,
    strength=1.0,
    relaxation=0.8,
    max_iter=600,
)


@pytest.fixture(scope="module")
def quick_p2():
    return solve_dipole(QUICK_P2)


@pytest.fixture(scope="module")
def quick_patch():
    return solve_dipole(QUICK_PATCH)


# ------------------------------------------------------------- speed formula

def test_speed_formula_recovers_lamb_speed(lamb96):
    val = traveling_speed_formula(lamb96.field)
    assert val == pytest.approx(1.0, rel=2e-2)


def test_speed_formula_single_cell_image_drift():
    # mass-weighted mean horizontal velocity of one small cell at height b is
    # the self-induced image drift circulation / (4 pi b)
    n = 64
    cell = 1.0 / 32.0
    b = 0.25
    vals = np.zeros((32, n))
    j = int(b / cell)  # cell centered exactly at x2 = 0.25 for j=7.5 -> use 8
    b = (j + 0.5) * cell
    vals[j, n // 2] = 3.0
    f = GridField(origin_x1=-1.0, cell=cell, values=vals)
    circulation = 3.0 * cell**2
    expected = circulation / (4.0 * np.pi * b)
    assert traveling_speed_formula(f) == pytest.approx(expected, rel=2e-2)


def test_speed_formula_rejects_empty_field():
    f = GridField(origin_x1=-0.5, cell=0.1, values=np.zeros((10, 10)))
    with pytest.raises(ValueError):
        traveling_speed_formula(f)


def test_speed_formula_matches_multiplier_on_smooth_profile(p2_profile):
    # needs the regression-resolution profile: the 32-row quick solve leaves
    # too much of the wall contact under-resolved for this identity
    val = traveling_speed_formula(p2_profile.field)
    assert val == pytest.approx(p2_profile.speed, rel=3e-2)


# ------------------------------------------------------------ virial balance

def test_pohozaev_power_profile(quick_p2):
    report = pohozaev_check(quick_p2)
    assert report.passed
    # p = 2, gamma = 0: prediction (3p-4)/(4p-4) W mu = W mu / 2
    assert report.rhs == pytest.approx(
        0.5 * quick_p2.speed * QUICK_P2.impulse, rel=1e-9
    )
    assert report.extra["pnorm_p_pass"]
    assert report.extra["pnorm_p_lhs"] == pytest.approx(
        report.extra["pnorm_p_rhs"], rel=5e-2
    )


def test_pohozaev_patch_profile(quick_patch):
    report = pohozaev_check(quick_patch)
    assert report.passed
    # patch coefficient is 3/4
    assert report.rhs == pytest.approx(
        0.75 * quick_patch.speed * QUICK_PATCH.impulse, rel=1e-9
    )
    assert "pnorm_p_lhs" not in report.extra


def test_pohozaev_requires_convergence(quick_p2):
    stale = dataclasses.replace(quick_p2, converged=False)
    with pytest.raises(ValueError):
        pohozaev_check(stale)


def test_pohozaev_json_shape(quick_p2):
    doc = pohozaev_check(quick_p2).to_json_dict()
    assert set(doc) >= {"name", "lhs", "rhs", "abs_err", "rel_err", "pass",
                        "tolerance", "extra"}
    assert doc["pass"] is True


# ------------------------------------------------------------------- touching

def test_touching_holds_for_wall_attached_patch(quick_patch):
    report = touching_check(quick_patch)
    assert report.passed
    assert report.lhs > report.rhs == pytest.approx(2.0 * quick_patch.speed)
    assert report.extra["slip_ratio"] > 0.0


def test_touching_not_claimed_with_positive_flux(quick_patch):
    lifted = dataclasses.replace(quick_patch, flux=0.01)
    report = touching_check(lifted)
    assert not report.passed


def test_touching_rejects_empty_field(quick_patch):
    spec = GridSpec(nrows=16, ncols=32, height=1.0)
    hollow = dataclasses.replace(quick_patch, field=spec.make_field())
    with pytest.raises(ValueError):
        touching_check(hollow)


# -------------------------------------------------------------------- scaling

def test_scaling_identity_on_same_profile(quick_patch):
    report = scaling_check(quick_patch, quick_patch)
    assert report.passed
    assert report.lhs == pytest.approx(1.0)
    assert report.rhs == pytest.approx(1.0)


def test_scaling_requires_patch_mode(quick_p2, quick_patch):
    with pytest.raises(ValueError):
        scaling_check(quick_p2, quick_patch)


def test_scaling_requires_matching_strength(quick_patch):
    other = dataclasses.replace(quick_patch, strength=2.0)
    with pytest.raises(ValueError):
        scaling_check(quick_patch, other)


# --------------------------------------------------------------- exponent fit

def _power_law_profile(s_exp, quick):
    n = 32
    cell = 1.0 / n
    x2 = (np.arange(n) + 0.5) * cell
    vals = np.tile((x2**s_exp)[:, None], (1, 2 * n))
    vals[x2 > 0.6, :] = 0.0
    vals[0, :] = vals[-1, :] = 0.0
    vals[:, 0] = vals[:, -1] = 0.0
    field = GridField(origin_x1=-1.0, cell=cell, values=vals)
    return dataclasses.replace(quick, field=field, flux=0.0, converged=True)


def test_exponent_fit_recovers_synthetic_power(quick_p2):
    for s_exp in (1.0, 1.7, 2.5):
        prof = _power_law_profile(s_exp, quick_p2)
        assert exponent_fit(prof) == pytest.approx(s_exp, abs=1e-9)


def test_exponent_fit_rejects_positive_flux(quick_p2):
    prof = _power_law_profile(1.5, quick_p2)
    lifted = dataclasses.replace(prof, flux=0.01)
    with pytest.raises(ValueError):
        exponent_fit(lifted)


def test_exponent_fit_needs_enough_rows(quick_p2):
    prof = _power_law_profile(1.5, quick_p2)
    with pytest.raises(ValueError):
        exponent_fit(prof, row_lo=2, row_hi=4)
