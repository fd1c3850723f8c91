"""Energy functionals, penalizations and the constrained residual.

The free functional is J(u) = 1/2 |grad u|_2^2 - int F(u).  The peaked
flow works with a weighted, penalized variant

  Gamma_eps(u) = 1/2 int (|grad u|^2 + Vt(eps x) u^2) - int Fbar(u)
                 + Phi_eps(u) + Psi_eps(u)

where Vt grows quadratically far out, Fbar is the truncated primitive,
Phi_eps charges mass far away from the tracked peaks, and Psi_eps
(nonpositive) swaps the weight back to the true potential wherever the
field decays faster than the gaussian gauge e^{-eps |x|^2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from . import field as fd
from . import model as md


@dataclass(frozen=True)
class PotentialSpec:
    """Potential data: V itself plus the geometry of its peak set.

    V maps coordinate arrays to an array (one positional argument per
    axis).  omega is the box containing the maxima, O the smaller box
    of admissible peak locations, both as (lo, hi) per axis.  M0 fences
    the region where V is left unmodified; V is normalized so that its
    infimum over the M0 ball is 1.
    """

    V: Callable
    omega: tuple
    O: tuple
    delta0: float
    M0: float
    V0: float | None = None
    mu0: float | None = None

    def box(self, which: str):
        b = self.omega if which == "omega" else self.O
        if np.isscalar(b[0]):
            return (b,)
        return tuple(b)


def _sample_box(box, n=201):
    # return a list of coordinate tuples filling the box
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    if len(axes) == 1:
        return (axes[0],)
    g0, g1 = np.meshgrid(axes[0], axes[1], indexing="ij")
    return (g0.ravel(), g1.ravel())


def resolve_potential(spec: PotentialSpec, dim: int) -> PotentialSpec:
    """Fill in V0 and mu0 by sampling and check the structural facts.

    V0 is the max of V over the closure of omega; mu0 the min over the
    3 delta0 neighborhood of O.  Checks: omega inside B(0, M0/2), the
    infimum of V over B(0, M0) is 1 (normalization), V0 at least the
    boundary values of V on omega, mu0 >= 1.
    """
    box = spec.box("omega")
    if len(box) != dim:
        raise ValueError("invalid-parameter: potential domain dim mismatch")
    for lo, hi in box:
        if not (lo < hi):
            raise ValueError("invalid-parameter: empty potential domain")
        if max(abs(lo), abs(hi)) > spec.M0 / 2 + 1e-12:
            raise ValueError("invalid-parameter: omega leaves B(0, M0/2)")

    pts = _sample_box(box, 401 if dim == 1 else 101)
    vals = np.asarray(spec.V(*pts))
    V0 = float(np.max(vals))
    if spec.V0 is not None:
        if abs(spec.V0 - V0) > 1e-6 * max(1.0, abs(V0)):
            raise ValueError("invalid-parameter: declared V0 does not match "
                             "the sampled maximum over omega")
        V0 = spec.V0

    # normalization inf over B(0, M0) = 1, sampled on the enclosing box
    ball = tuple((-spec.M0, spec.M0) for _ in range(dim))
    bpts = _sample_box(ball, 401 if dim == 1 else 101)
    bvals = np.asarray(spec.V(*bpts))
    if dim == 2:
        r2 = bpts[0] ** 2 + bpts[1] ** 2
        bvals = bvals[r2 <= spec.M0**2]
    inf_ball = float(np.min(bvals))
    if abs(inf_ball - 1.0) > 5e-2:
        raise ValueError("invalid-parameter: V is not normalized to "
                         f"inf 1 on the M0 ball (got {inf_ball:.4g})")

    obox = tuple((lo - 3 * spec.delta0, hi + 3 * spec.delta0)
                 for lo, hi in spec.box("O"))
    opts = _sample_box(obox, 401 if dim == 1 else 101)
    mu0 = float(np.min(np.asarray(spec.V(*opts))))
    if spec.mu0 is not None:
        mu0 = spec.mu0
    if mu0 < 1.0 - 1e-9:
        raise ValueError("invalid-parameter: mu0 must be at least 1")

    # boundary values of omega never exceed the interior max
    for axis, (lo, hi) in enumerate(box):
        for edge in (lo, hi):
            probe = [np.linspace(b[0], b[1], 64) for b in box]
            probe[axis] = np.full(64, edge)
            bv = float(np.max(np.asarray(spec.V(*probe))))
            if bv > V0 + 1e-9:
                raise ValueError("invalid-parameter: V exceeds V0 on the "
                                 "boundary of omega")

    return PotentialSpec(V=spec.V, omega=spec.omega, O=spec.O,
                         delta0=spec.delta0, M0=spec.M0, V0=V0, mu0=mu0)


# shipped potential families ------------------------------------------------

def potential_const(level: float = 1.0, dim: int = 1) -> PotentialSpec:
    def V(*cs):
        return np.full_like(np.asarray(cs[0], dtype=float), level)
    box = tuple((-1.0, 1.0) for _ in range(dim))
    return PotentialSpec(V=V, omega=box, O=box, delta0=0.1, M0=4.0)


def potential_neg_quadratic(peak: float = 2.0, dim: int = 1,
                            delta0: float = 0.08,
                            M0: float = 4.0) -> PotentialSpec:
    # max(peak - |x|^2, 1): single maximum at the origin, floor 1
    def V(*cs):
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in cs)
        return np.maximum(peak - r2, 1.0)
    half = math.sqrt(peak - 1.0)
    box = tuple((-half, half) for _ in range(dim))
    o = tuple((-half / 2, half / 2) for _ in range(dim))
    return PotentialSpec(V=V, omega=box, O=o, delta0=delta0, M0=M0)


def potential_gauss_bump(amplitude: float = 1.0, width: float = 1.0,
                         dim: int = 1, delta0: float = 0.1,
                         M0: float = 4.0) -> PotentialSpec:
    def V(*cs):
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in cs)
        return 1.0 + amplitude * np.exp(-r2 / width**2)
    box = tuple((-width, width) for _ in range(dim))
    o = tuple((-width / 2, width / 2) for _ in range(dim))
    return PotentialSpec(V=V, omega=box, O=o, delta0=delta0, M0=M0)


def potential_table(nodes, values, dim: int = 1, delta0: float = 0.1,
                    M0: float = 4.0) -> PotentialSpec:
    # radial piecewise-linear interpolation of tabulated samples
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
        raise ValueError("invalid-parameter: table needs matching 1d arrays")

    def V(*cs):
        r = np.sqrt(sum(np.asarray(c, dtype=float) ** 2 for c in cs))
        return np.interp(r, nodes, values)

    half = float(nodes[-1])
    box = tuple((-half, half) for _ in range(dim))
    return PotentialSpec(V=V, omega=box, O=box, delta0=delta0, M0=M0)


# ----------------------------------------------------------------------
# penalization parameters and the mollifier profiles
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PenalizationParams:
    eps: float
    R0: float
    rho1: float
    L: float
    cap_exponent: float = 0.75
    temperature: float = 0.5      # soft-min window for xi1
    strict: bool = False          # enforce eps < eps_ceiling hard
    tail_floor: float = 0.0       # optional relative clip, 0 disables

    def __post_init__(self):
        if min(self.eps, self.R0, self.rho1, self.L) <= 0:
            raise ValueError("invalid-parameter: positive eps, R0, rho1, L")


def eps_ceiling(delta0: float, L: float) -> float:
    return (delta0 / (4.0 * L)) ** 4


def profile_H(s):
    """Even plateau profile: 1 on |s|<=1, 0 beyond |s|=3, odd derivative."""
    a = np.abs(np.asarray(s, dtype=float))
    return 1.0 - fd.smoothstep((a - 1.0) / 2.0)


def profile_H_prime(s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    t = np.clip((a - 1.0) / 2.0, 0.0, 1.0)
    return -np.sign(s) * 6.0 * t * (1.0 - t) / 2.0


def profile_psi(m, rho1: float):
    # mass-to-weight ramp: 0 below rho1^2/16, 1 above rho1^2/2
    lo = rho1**2 / 16.0
    hi = rho1**2 / 2.0
    return fd.smoothstep((np.asarray(m, dtype=float) - lo) / (hi - lo))


def profile_chi(t):
    # radial tail indicator: 0 inside 1/10, 1 outside 1/5, slope <= 15
    return fd.smoothstep((np.asarray(t, dtype=float) - 0.1) / 0.1)


# ----------------------------------------------------------------------
# functionals
# ----------------------------------------------------------------------

def energy_J(grid: fd.Grid, u: np.ndarray, model: md.NonlinearityModel) -> float:
    vals = md.evaluate(model, u)
    return 0.5 * fd.dirichlet(grid, u) - fd.integral(grid, vals.F)


def grad_J(grid: fd.Grid, u: np.ndarray,
           model: md.NonlinearityModel) -> np.ndarray:
    vals = md.evaluate(model, u)
    return -fd.laplacian(grid, u) - vals.f


def tilde_potential(spec: PotentialSpec):
    """Closures (Vt, Vbar): Vt = V inside the M0 ball, max(V, |x|^2)
    beyond; Vbar = V - Vt <= 0 and identically 0 inside."""

    def Vt(*cs):
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in cs)
        v = np.asarray(spec.V(*cs))
        return np.where(r2 < spec.M0**2, v, np.maximum(v, r2))

    def Vbar(*cs):
        v = np.asarray(spec.V(*cs))
        return v - Vt(*cs)

    return Vt, Vbar


def _scaled_coords(grid: fd.Grid, eps: float):
    return tuple(eps * c for c in grid.coords())


def weighted_arrays(grid: fd.Grid, spec: PotentialSpec, eps: float):
    # Vt(eps x) and Vbar(eps x) evaluated on the grid once
    Vt, Vbar = tilde_potential(spec)
    sc = _scaled_coords(grid, eps)
    vt = np.broadcast_to(np.asarray(Vt(*sc), dtype=float), grid.shape).copy()
    vb = np.broadcast_to(np.asarray(Vbar(*sc), dtype=float), grid.shape).copy()
    return vt, vb


def psi_eps(grid: fd.Grid, u: np.ndarray, spec: PotentialSpec,
            params: PenalizationParams):
    """Weight-release penalty (nonpositive) and its gradient."""
    _, vbar = weighted_arrays(grid, spec, params.eps)
    if not np.any(vbar):
        return 0.0, grid.zeros()
    g = params.eps * grid.radius() ** 2
    w = u * np.exp(np.minimum(g, 700.0))
    H = profile_H(w)
    Hp = profile_H_prime(w)
    value = 0.5 * fd.integral(grid, vbar * H * u * u)
    gradient = vbar * (H * u + 0.5 * Hp * w * u)
    return value, gradient


def phi_eps(grid: fd.Grid, u: np.ndarray, peaks, params: PenalizationParams):
    """Exterior-mass penalty (xi1 int chi_u u^2 - 1)_+^2.

    peaks provides .points (array, one row per peak) and .xi1; both are
    treated as constants of u, so the gradient is the frozen one.
    """
    if peaks is None:
        raise ValueError("peaks-required: phi_eps needs a resolved peak set")
    pts = np.atleast_2d(np.asarray(peaks.points, dtype=float))
    xi1 = float(peaks.xi1)
    cs = grid.coords()
    chi_u = np.ones(grid.shape)
    for row in pts:
        r = np.sqrt(sum((c - c0) ** 2 for c, c0 in zip(cs, row)))
        chi_u = chi_u * profile_chi(r / xi1)
    m = fd.integral(grid, chi_u * u * u)
    overshoot = xi1 * m - 1.0
    if overshoot <= 0.0:
        return 0.0, grid.zeros()
    value = overshoot * overshoot
    gradient = 4.0 * xi1 * overshoot * chi_u * u
    return value, gradient


def gamma_eps(grid: fd.Grid, u: np.ndarray, model: md.NonlinearityModel,
              spec: PotentialSpec, params: PenalizationParams,
              peaks=None, include_psi: bool = True):
    """Penalized weighted energy and its gradient.

    Pass the truncated model for the peaked flow.  With peaks=None and
    include_psi=False this is the plain weighted functional.
    """
    vt, _ = weighted_arrays(grid, spec, params.eps)
    vals = md.evaluate(model, u)
    value = (0.5 * fd.dirichlet(grid, u)
             + 0.5 * fd.integral(grid, vt * u * u)
             - fd.integral(grid, vals.F))
    gradient = -fd.laplacian(grid, u) + vt * u - vals.f
    if peaks is not None:
        pv, pg = phi_eps(grid, u, peaks, params)
        value += pv
        gradient += pg
    if include_psi:
        sv, sg = psi_eps(grid, u, spec, params)
        value += sv
        gradient += sg
    return value, gradient


def lagrange_multiplier(grid: fd.Grid, u: np.ndarray, g: np.ndarray):
    """Projection multiplier and tangential residual.

    lambda = <g, u> / <u, u>; residual = g - lambda u.  The residual
    norm is the stationarity measure used by every solver loop.
    """
    m = fd.mass(grid, u)
    if m <= 0.0:
        raise ValueError("degenerate-input: zero-mass field")
    lam = fd.inner(grid, g, u) / m
    return lam, g - lam * u


def multiplier_formulas(grid: fd.Grid, u: np.ndarray,
                        model: md.NonlinearityModel):
    """Both closed-form multiplier candidates, for reporting only.

    The two textbook displays differ in the Dirichlet prefactor; the
    projection estimate is what the solvers trust.  Reports carry all
    three so the discrepancy stays visible.
    """
    m = fd.mass(grid, u)
    if m <= 0.0:
        raise ValueError("degenerate-input: zero-mass field")
    vals = md.evaluate(model, u)
    fu_u = fd.integral(grid, vals.f * u)
    dir2 = fd.dirichlet(grid, u)
    return ((dir2 - fu_u) / m, (0.5 * dir2 - fu_u) / m)
