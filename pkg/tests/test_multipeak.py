import math

import numpy as np
import pytest

import logns.energy as en
import logns.field as fd
import logns.model as md
import logns.multipeak as mp
import logns.solver as sv
from _frozen import DEFICIT_XI6, DEFICIT_XI8, GAUSSIAN_TAIL_R4


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def two_bump_field(grid, sep=3.0, a=1.0, b=1.0, sigma=2.0):
    prof = md.gausson_profile(sigma, 0.5, 1)
    x = grid.axis
    return a * prof(np.abs(x + sep)) + b * prof(np.abs(x - sep))


PARAMS = en.PenalizationParams(eps=0.2, R0=0.5, rho1=0.3, L=2.0)


# ----------------------------------------------------------------------
# separation
# ----------------------------------------------------------------------

def test_separation():
    xi, xi1 = mp.separation([[0.0], [3.0]], eps=0.2)
    assert xi == 3.0
    cap = 0.2 ** -0.75
    assert xi1 <= min(xi, cap)
    assert xi1 >= min(xi, cap) - 1.0
    xi, xi1 = mp.separation([[0.0], [5.0], [11.0]], eps=0.1)
    assert xi == 5.0
    assert 4.0 <= xi1 <= 6.0
    with pytest.raises(ValueError, match="invalid-parameter"):
        mp.separation([[0.0]], eps=0.2)


def test_separation_scales_with_points():
    a = mp.separation([[0.0], [4.0]], eps=0.2)
    b = mp.separation([[1.0], [5.0]], eps=0.2)
    assert a == b


# ----------------------------------------------------------------------
# peak location
# ----------------------------------------------------------------------

def test_upsilon_two_bumps():
    grid = fd.Grid(1, 8.0, 0.05)
    u = two_bump_field(grid)
    pk = mp.upsilon(grid, u, PARAMS, expected=2)
    assert pk.points.shape == (2, 1)
    assert pk.points[0, 0] < pk.points[1, 0]
    assert abs(pk.points[0, 0] + 3.0) <= 2.0 * PARAMS.R0
    assert abs(pk.points[1, 0] - 3.0) <= 2.0 * PARAMS.R0
    assert abs(pk.xi - 6.0) <= 4.0 * PARAMS.R0
    assert pk.R0 == PARAMS.R0


def test_upsilon_single_bump():
    grid = fd.Grid(1, 8.0, 0.05)
    prof = md.gausson_profile(2.0, 1.0, 1)
    u = prof(np.abs(grid.axis - 1.5))
    pk = mp.upsilon(grid, u, PARAMS, expected=1)
    assert pk.points.shape == (1, 1)
    assert abs(pk.points[0, 0] - 1.5) <= 2.0 * PARAMS.R0
    assert pk.xi == math.inf
    assert pk.xi1 == pytest.approx(0.2 ** -0.75)


def test_upsilon_translation_equivariance():
    grid = fd.Grid(1, 8.0, 0.05)
    u = two_bump_field(grid)
    pk = mp.upsilon(grid, u, PARAMS, expected=2)
    shift = 9
    us = np.zeros_like(u)
    us[shift:] = u[:-shift]
    pks = mp.upsilon(grid, us, PARAMS, expected=2)
    dev = np.abs(pks.points - (pk.points + shift * grid.spacing))
    assert float(dev.max()) <= 1e-9


def test_upsilon_mirror_covariance():
    grid = fd.Grid(1, 8.0, 0.05)
    u = two_bump_field(grid, a=1.0, b=0.7)
    pk = mp.upsilon(grid, u, PARAMS, expected=2)
    pkm = mp.upsilon(grid, u[::-1], PARAMS, expected=2)
    mirrored = np.sort(-pk.points.ravel())
    assert float(np.abs(pkm.points.ravel() - mirrored).max()) <= 1e-9
    assert np.all(np.diff(pkm.points.ravel()) > 0.0)


def test_upsilon_2d():
    grid = fd.Grid(2, 5.0, 0.1)
    prof = md.gausson_profile(2.0, 0.6, 2)
    u = (fd.place_bump(grid, prof, [-2.0, 0.0], 1.0, 2.0)
         + fd.place_bump(grid, prof, [2.0, 0.5], 1.0, 2.0))
    pk = mp.upsilon(grid, u, PARAMS, expected=2)
    assert pk.points.shape == (2, 2)
    assert np.linalg.norm(pk.points[0] - [-2.0, 0.0]) <= 2.0 * PARAMS.R0
    assert np.linalg.norm(pk.points[1] - [2.0, 0.5]) <= 2.0 * PARAMS.R0


def test_upsilon_failures():
    grid = fd.Grid(1, 8.0, 0.05)
    with pytest.raises(ValueError, match="peaks-unresolved"):
        mp.upsilon(grid, np.zeros(grid.shape), PARAMS)
    u = two_bump_field(grid)
    with pytest.raises(ValueError, match="peaks-unresolved"):
        mp.upsilon(grid, u, PARAMS, expected=3)


# ----------------------------------------------------------------------
# bump layout
# ----------------------------------------------------------------------

def neg_quad_setup():
    grid = fd.Grid(1, 10.0, 0.2)
    pot = en.resolve_potential(en.potential_neg_quadratic(2.0, 1), 1)
    params = en.PenalizationParams(eps=0.1, R0=0.5, rho1=0.5, L=2.0)
    template = md.gausson_profile(12.0, 0.25, 1)(np.abs(grid.axis))
    return grid, pot, params, template


def test_make_bump_spec_valid():
    grid, pot, params, template = neg_quad_setup()
    spec = mp.make_bump_spec(grid, 2, [[-5.0], [5.0]], [0.5, 0.5], 0.1,
                             0.5, template, pot, params)
    assert spec.ell == 2
    assert spec.template_sup > 0.0
    assert spec.template_halfmass_radius > 0.0
    u0 = mp.gamma0(grid, spec, pot)
    assert rel(fd.mass(grid, u0), 0.5) < 1e-12


def test_make_bump_spec_validation():
    grid, pot, params, template = neg_quad_setup()
    with pytest.raises(ValueError, match="centers shape"):
        mp.make_bump_spec(grid, 2, [[-5.0]], [0.5, 0.5], 0.1, 0.5,
                          template, pot, params)
    with pytest.raises(ValueError, match="simplex"):
        mp.make_bump_spec(grid, 2, [[-5.0], [5.0]], [0.6, 0.6], 0.1, 0.5,
                          template, pot, params)
    with pytest.raises(ValueError, match="simplex"):
        mp.make_bump_spec(grid, 2, [[-5.0], [5.0]], [-0.2, 1.2], 0.1, 0.5,
                          template, pot, params)
    with pytest.raises(ValueError, match="separation below L"):
        mp.make_bump_spec(grid, 2, [[-0.6], [0.6]], [0.5, 0.5], 0.1, 0.5,
                          template, pot, params)
    with pytest.raises(ValueError, match="admissible neighborhood"):
        mp.make_bump_spec(grid, 2, [[-8.0], [8.0]], [0.5, 0.5], 0.1, 0.5,
                          template, pot, params)


def test_gamma0_shape_and_support():
    grid, pot, params, template = neg_quad_setup()
    spec = mp.make_bump_spec(grid, 2, [[-5.0], [5.0]], [0.5, 0.5], 0.1,
                             0.5, template, pot, params)
    u0 = mp.gamma0(grid, spec, pot)
    _, support = mp.bump_cutoff_radii(spec, pot)
    x = grid.axis
    far = (np.abs(x + 5.0) >= support) & (np.abs(x - 5.0) >= support)
    assert np.all(u0[far] == 0.0)
    assert float(u0.max()) > 0.0
    # symmetric layout gives a symmetric field
    np.testing.assert_allclose(u0, u0[::-1], rtol=0.0, atol=1e-14)


def test_gamma0_permutation_covariance():
    grid, pot, params, template = neg_quad_setup()
    a = mp.make_bump_spec(grid, 2, [[-5.0], [5.0]], [0.7, 0.3], 0.1,
                          0.5, template, pot, params)
    b = mp.make_bump_spec(grid, 2, [[5.0], [-5.0]], [0.3, 0.7], 0.1,
                          0.5, template, pot, params)
    np.testing.assert_array_equal(mp.gamma0(grid, a, pot),
                                  mp.gamma0(grid, b, pot))


def test_gamma0_equal_split_maximizes_energy():
    # along the mass-transfer direction the balanced split is the
    # energy maximum, which is what makes it dynamically unstable
    grid = fd.Grid(1, 8.0, 0.05)
    model = md.pure_log(12.0)
    pot = en.resolve_potential(en.potential_const(1.0, 1), 1)
    params = en.PenalizationParams(eps=0.1, R0=0.5, rho1=0.5, L=2.0)
    template = md.gausson_profile(12.0, 0.5, 1)(np.abs(grid.axis))

    def split_energy(w):
        spec = mp.make_bump_spec(grid, 2, [[-5.0], [5.0]], [w, 1.0 - w],
                                 0.1, 1.0, template, pot, params)
        return en.energy_J(grid, mp.gamma0(grid, spec, pot), model)

    j_even = split_energy(0.5)
    j_tilt = split_energy(0.7)
    assert j_tilt < j_even - 0.05


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------

def test_mass_fractions_balanced():
    grid = fd.Grid(1, 8.0, 0.05)
    u = two_bump_field(grid)
    pk = mp.upsilon(grid, u, PARAMS, expected=2)
    fr = mp.mass_fractions(grid, u, pk, pk.xi / 4.0)
    assert fr.shape == (2,)
    assert abs(float(np.sum(fr)) - 1.0) < 1e-14
    assert abs(fr[0] - 0.5) < 1e-6


def test_mass_fractions_weighted():
    grid = fd.Grid(1, 8.0, 0.05)
    u = two_bump_field(grid, a=math.sqrt(1.2), b=math.sqrt(0.8))
    pk = mp.upsilon(grid, u, PARAMS, expected=2)
    fr = mp.mass_fractions(grid, u, pk, pk.xi / 4.0)
    assert abs(fr[0] - 0.6) < 1e-3
    assert abs(fr[1] - 0.4) < 1e-3


def test_mass_fractions_guards():
    grid = fd.Grid(1, 8.0, 0.05)
    u = two_bump_field(grid)
    pk = mp.upsilon(grid, u, PARAMS, expected=2)
    with pytest.raises(ValueError, match="invalid-parameter"):
        mp.mass_fractions(grid, u, pk, pk.xi / 2.0 + 0.1)
    # peak ball with no mass under it
    prof = md.gausson_profile(2.0, 1.0, 1)
    far = prof(np.abs(grid.axis - 5.0))
    lone = mp.PeakSet(points=np.asarray([[-5.0]]), xi=math.inf, xi1=4.0,
                      R0=0.5)
    with pytest.raises(ValueError, match="degenerate-input"):
        mp.mass_fractions(grid, far, lone, 1.0)


def test_tail_mass():
    grid = fd.Grid(1, 8.0, 0.01)
    prof = md.gausson_profile(2.0, 1.0, 1)
    u = prof(np.abs(grid.axis))
    pk = mp.PeakSet(points=np.asarray([[0.0]]), xi=math.inf, xi1=4.0,
                    R0=0.5)
    t2 = mp.tail_mass(grid, u, pk, 2.0)
    t3 = mp.tail_mass(grid, u, pk, 3.0)
    t4 = mp.tail_mass(grid, u, pk, 4.0)
    assert t2 > t3 > t4 > 0.0
    assert rel(t4, GAUSSIAN_TAIL_R4) < 2e-2
    with pytest.raises(ValueError, match="invalid-parameter"):
        mp.tail_mass(grid, u, pk, 0.0)


# ----------------------------------------------------------------------
# glued-state interaction cost
# ----------------------------------------------------------------------

def test_interaction_deficit_single():
    grid = fd.Grid(1, 12.0, 0.05)
    u0 = md.gausson_profile(2.0, 0.5, 1)(np.abs(grid.axis))
    d, xi = mp.interaction_deficit(grid, u0, [[0.0]], 0.0, 2.0)
    assert d == 0.0
    assert xi == math.inf


def test_interaction_deficit_decays():
    grid = fd.Grid(1, 12.0, 0.05)
    u0 = md.gausson_profile(2.0, 0.5, 1)(np.abs(grid.axis))
    d6, xi6 = mp.interaction_deficit(grid, u0, [[-3.0], [3.0]], 0.0, 2.0)
    d8, xi8 = mp.interaction_deficit(grid, u0, [[-4.0], [4.0]], 0.0, 2.0)
    assert xi6 == 6.0 and xi8 == 8.0
    assert d6 > d8 > 0.0
    assert rel(d6, DEFICIT_XI6) < 5e-2
    assert rel(d8, DEFICIT_XI8) < 5e-2


def test_interaction_deficit_separation_guard():
    grid = fd.Grid(1, 12.0, 0.05)
    u0 = md.gausson_profile(2.0, 0.5, 1)(np.abs(grid.axis))
    with pytest.raises(ValueError, match="invalid-parameter"):
        mp.interaction_deficit(grid, u0, [[-3.0], [3.0]], 0.0, 2.0, L=13.0)


# ----------------------------------------------------------------------
# geometry calibration
# ----------------------------------------------------------------------

def test_calibrate_geometry():
    grid = fd.Grid(1, 10.0, 0.2)
    model = md.pure_log(12.0)
    template = md.gausson_profile(12.0, 0.25, 1)(np.abs(grid.axis))
    _, lam, _ = md.gausson_oracle(12.0, 0.25, 1)
    rho1, R0, L = mp.calibrate_geometry(grid, template, model, 0.5, 2,
                                        2.0, lam)
    assert 0.0 < rho1 <= 0.125
    assert R0 > 0.0
    assert L == 100.0 * R0
    # the R0 ball really holds three quarters of the floor mass
    inside = float(np.sum((template**2)[np.abs(grid.axis) <= R0])
                   * grid.cell)
    assert inside > 0.75 * rho1


# ----------------------------------------------------------------------
# the penalized flow
# ----------------------------------------------------------------------

def single_bump_run(level=1.0, tol=1e-5):
    grid = fd.Grid(1, 10.0, 0.2)
    model = md.pure_log(12.0)
    pot = en.resolve_potential(en.potential_const(level, 1), 1)
    params = en.PenalizationParams(eps=0.4, R0=0.5, rho1=0.5, L=2.0,
                                   tail_floor=1e-12)
    template = md.gausson_profile(12.0, 0.5, 1)(np.abs(grid.axis))
    spec = mp.make_bump_spec(grid, 1, [[0.0]], [1.0], 0.4, 0.5,
                             template, pot, params)
    result, rows = mp.run_multipeak(grid, model, pot, params, spec,
                                    tol=tol, max_iter=20000)
    return grid, model, result, rows


def test_run_multipeak_single_bump_shifts_multiplier():
    # constant potential: the flow reduces to the plain ground state and
    # the multiplier picks up exactly the potential level
    grid, model, result, rows = single_bump_run()
    assert result.status == "converged"
    assert result.converged
    assert result.phi == 0.0
    assert result.eps_warning  # eps far above the smallness ceiling
    gs = sv.run_groundstate(grid, model, 0.5, tol=1e-6)
    assert abs(result.lam - (gs.lam + 1.0)) < 2e-3
    np.testing.assert_allclose(result.fractions, [1.0], atol=1e-12)
    assert rel(fd.mass(grid, result.u), 0.5) < 1e-12


def test_run_multipeak_trajectory_rows():
    grid, model, result, rows = single_bump_run()
    header = mp.trajectory_header(1, 1)
    assert header[0] == "iter"
    assert len(rows) >= 2
    assert all(len(r) == len(header) for r in rows)
    # gamma values recorded along the way never increase
    gammas = [r[1] for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(gammas, gammas[1:]))


def test_run_multipeak_rejects_power_only_models():
    grid = fd.Grid(1, 10.0, 0.2)
    pot = en.resolve_potential(en.potential_const(1.0, 1), 1)
    params = en.PenalizationParams(eps=0.4, R0=0.5, rho1=0.5, L=2.0)
    template = md.gausson_profile(12.0, 0.5, 1)(np.abs(grid.axis))
    spec = mp.make_bump_spec(grid, 1, [[0.0]], [1.0], 0.4, 0.5,
                             template, pot, params)
    with pytest.raises(ValueError, match="invalid-parameter"):
        mp.run_multipeak(grid, md.double_power(2.0, 4.0), pot, params, spec)


def test_run_multipeak_strict_ceiling():
    grid = fd.Grid(1, 10.0, 0.2)
    model = md.pure_log(12.0)
    pot = en.resolve_potential(en.potential_const(1.0, 1), 1)
    params = en.PenalizationParams(eps=0.4, R0=0.5, rho1=0.5, L=2.0,
                                   strict=True)
    template = md.gausson_profile(12.0, 0.5, 1)(np.abs(grid.axis))
    spec = mp.make_bump_spec(grid, 1, [[0.0]], [1.0], 0.4, 0.5,
                             template, pot, params)
    with pytest.raises(ValueError, match="smallness ceiling"):
        mp.run_multipeak(grid, model, pot, params, spec)
