"""Peaked states: barycenters, multi-bump data and the penalized flow.

A peaked run starts from a sum of cutoff copies of the autonomous
template, tracks the local centers of mass Upsilon_j through a probe
lattice, and descends the penalized weighted energy gamma_eps while the
peak set is refrozen every few iterations.  Also here: separation and
its smooth capped variant, per-peak mass fractions, exterior H^1 mass,
and the two-bump interaction deficit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from itertools import combinations

import numpy as np
from scipy import ndimage, signal

from . import energy as en
from . import field as fd
from . import model as md
from . import solver as sv


@dataclass(frozen=True)
class PeakSet:
    points: np.ndarray          # (ell, dim)
    xi: float                   # min pairwise distance (inf for ell = 1)
    xi1: float                  # capped soft minimum
    R0: float

    @property
    def ell(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class MultiBumpSpec:
    ell: int
    centers: np.ndarray         # (ell, dim), flow coordinates
    weights: np.ndarray         # simplex weights, sum 1
    eps: float
    alpha: float
    template: object            # radial closure r -> value, mass alpha/ell
    template_sup: float
    template_halfmass_radius: float


def separation(points, eps: float, cap_exponent: float = 0.75,
               temperature: float = 0.5):
    """Exact min pairwise distance and its capped log-sum-exp soft min.

    The soft min runs over every pairwise distance plus the cap
    eps^(-cap_exponent) in a single exponential sum; at the default
    temperature the result sits within 1 of min(xi, cap) for any
    reasonable peak count.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        raise ValueError("invalid-parameter: separation needs >= 2 points")
    dists = [float(np.linalg.norm(a - b)) for a, b in combinations(pts, 2)]
    xi = min(dists)
    cap = eps ** (-cap_exponent)
    T = temperature
    items = np.array(dists + [cap])
    lo = items.min()
    xi1 = lo - T * math.log(np.sum(np.exp(-(items - lo) / T)))
    return xi, float(xi1)


def _capped_xi1(points, eps, cap_exponent=0.75, temperature=0.5):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        return math.inf, eps ** (-cap_exponent)
    return separation(pts, eps, cap_exponent, temperature)


def ball_mass_map(grid: fd.Grid, u: np.ndarray, radius: float) -> np.ndarray:
    """int_{B(x, radius)} u^2 at every node, by windowed summation."""
    k = int(round(radius / grid.spacing))
    w = u * u
    if grid.dim == 1:
        kern = np.ones(2 * k + 1)
        return np.convolve(w, kern, mode="same") * grid.cell
    off = np.arange(-k, k + 1)
    kern = ((off[:, None] ** 2 + off[None, :] ** 2)
            <= k * k + 1e-9).astype(float)
    if grid.n <= 128:
        out = signal.convolve2d(w, kern, mode="same")
    else:
        out = signal.fftconvolve(w, kern, mode="same")
    return out * grid.cell


def upsilon(grid: fd.Grid, u: np.ndarray, params: en.PenalizationParams,
            expected: int | None = None) -> PeakSet:
    """Locate peaks as weighted centroids of active probe components.

    Probes sit on a sublattice of spacing ~R0/4; a probe is active when
    the mass of its R0 ball clears the lower psi threshold.  Active
    probes are grouped by adjacency, groups closer than 5 R0 are
    absorbed into the heavier one, and the centroids come back in
    lexicographic order.
    """
    stride = max(1, int(round(params.R0 / 4.0 / grid.spacing)))
    masses = ball_mass_map(grid, u, params.R0)
    d_all = en.profile_psi(masses, params.rho1)

    ax_idx = np.arange(0, grid.n, stride)
    axis = grid.axis
    if grid.dim == 1:
        d = d_all[ax_idx]
        labels, count = ndimage.label(d > 0.0)
        coords = axis[ax_idx][:, None]
    else:
        d = d_all[np.ix_(ax_idx, ax_idx)]
        labels, count = ndimage.label(d > 0.0, structure=np.ones((3, 3)))
        px, py = np.meshgrid(axis[ax_idx], axis[ax_idx], indexing="ij")
        coords = np.stack([px.ravel(), py.ravel()], axis=1)
        d = d.ravel()
        labels = labels.ravel()

    if count == 0:
        raise ValueError("peaks-unresolved: no active probes")

    groups = []
    for c in range(1, count + 1):
        sel = labels == c
        wsum = float(np.sum(d[sel]))
        cen = np.sum(d[sel][:, None] * coords[sel], axis=0) / wsum
        groups.append({"weight": wsum, "centroid": cen, "sel": sel})

    # absorb components whose centers crowd within 5 R0 of a heavier one
    groups.sort(key=lambda g: -g["weight"])
    accepted = []
    for g in groups:
        host = None
        for a in accepted:
            if np.linalg.norm(a["centroid"] - g["centroid"]) <= 5 * params.R0:
                host = a
                break
        if host is None:
            accepted.append(g)
        else:
            host["sel"] = host["sel"] | g["sel"]
    for a in accepted:
        sel = a["sel"]
        wsum = float(np.sum(d[sel]))
        a["centroid"] = np.sum(d[sel][:, None] * coords[sel], axis=0) / wsum

    if expected is not None and len(accepted) != expected:
        raise ValueError(f"peaks-unresolved: found {len(accepted)} "
                         f"components, expected {expected}")

    pts = np.array(sorted((tuple(a["centroid"]) for a in accepted)))
    xi, xi1 = _capped_xi1(pts, params.eps, params.cap_exponent,
                          params.temperature)
    return PeakSet(points=pts, xi=xi, xi1=xi1, R0=params.R0)


# ----------------------------------------------------------------------
# template handling and the initial multi-bump field
# ----------------------------------------------------------------------

def template_from_field(grid: fd.Grid, u: np.ndarray):
    """Radial interpolant of a centered field, for re-placing bumps."""
    r = grid.radius().ravel()
    v = u.ravel()
    order = np.argsort(r)
    return lambda rr: np.interp(np.asarray(rr, dtype=float),
                                r[order], v[order])


def make_bump_spec(grid: fd.Grid, ell: int, centers, weights, eps: float,
                   alpha: float, template_field: np.ndarray,
                   pot: en.PotentialSpec,
                   params: en.PenalizationParams) -> MultiBumpSpec:
    """Validate the bump layout and wrap the template as a closure."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape != (ell, grid.dim):
        raise ValueError("invalid-parameter: centers shape mismatch")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (ell,):
        raise ValueError("invalid-parameter: weights shape mismatch")
    if np.any(weights < 0) or np.any(weights > 1) \
            or abs(float(np.sum(weights)) - 1.0) > 1e-12:
        raise ValueError("invalid-parameter: weights must lie on the simplex")
    if ell >= 2:
        xi, _ = separation(centers, eps, params.cap_exponent,
                           params.temperature)
        if xi < params.L:
            raise ValueError("invalid-parameter: bump separation below L")
    obox = pot.box("O")
    for row in centers:
        for c, (lo, hi) in zip(row, obox):
            if not (lo - pot.delta0 <= eps * c <= hi + pot.delta0):
                raise ValueError("invalid-parameter: scaled center outside "
                                 "the admissible neighborhood")

    m0 = fd.mass(grid, template_field)
    target = alpha / ell
    if abs(m0 - target) > 1e-8 * target:
        template_field = fd.normalize(grid, template_field, target)
    sup = float(np.max(np.abs(template_field)))
    rh = _halfmass_radius(grid, template_field)
    return MultiBumpSpec(ell=ell, centers=centers, weights=weights, eps=eps,
                         alpha=alpha,
                         template=template_from_field(grid, template_field),
                         template_sup=sup, template_halfmass_radius=rh)


def _halfmass_radius(grid: fd.Grid, u: np.ndarray) -> float:
    total = fd.mass(grid, u)
    r = grid.radius()
    radii = np.arange(grid.spacing, grid.half_extent, grid.spacing)
    for rr in radii:
        inside = float(np.sum((u * u)[r <= rr]) * grid.cell)
        if inside >= 0.5 * total:
            return float(rr)
    return float(radii[-1])


def bump_cutoff_radii(spec: MultiBumpSpec, pot: en.PotentialSpec):
    # plateau delta0/(2 eps) as mandated, widened when it would truncate
    # the template itself; support at twice the plateau either way
    plateau = max(pot.delta0 / (2.0 * spec.eps),
                  4.0 * spec.template_halfmass_radius)
    return plateau, 2.0 * plateau


def gamma0(grid: fd.Grid, spec: MultiBumpSpec,
           pot: en.PotentialSpec) -> np.ndarray:
    """Initial field: cutoff bumps sqrt(ell s_j) template(. - p_j),
    globally rescaled to exact mass alpha."""
    plateau, support = bump_cutoff_radii(spec, pot)
    u = grid.zeros()
    for s, row in zip(spec.weights, spec.centers):
        amp = math.sqrt(spec.ell * float(s))
        if amp == 0.0:
            continue
        u = u + amp * fd.place_bump(grid, spec.template, row, plateau, support)
    return fd.normalize(grid, u, spec.alpha)


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------

def _ball_masks(grid: fd.Grid, peaks: PeakSet, r: float):
    cs = grid.coords()
    masks = []
    for row in np.atleast_2d(peaks.points):
        d2 = sum((c - c0) ** 2 for c, c0 in zip(cs, row))
        masks.append(d2 <= r * r)
    return masks


def mass_fractions(grid: fd.Grid, u: np.ndarray, peaks: PeakSet, t: float):
    """Per-peak share of the mass covered by the t balls; sums to 1."""
    if peaks.ell >= 2 and t > peaks.xi / 2 + 1e-12:
        raise ValueError("invalid-parameter: ball radius exceeds xi/2")
    masks = _ball_masks(grid, peaks, t)
    ball = np.array([float(np.sum((u * u)[m]) * grid.cell) for m in masks])
    total = float(np.sum(ball))
    if total <= 0.0:
        raise ValueError("degenerate-input: no mass inside the peak balls")
    return ball / total


def tail_mass(grid: fd.Grid, u: np.ndarray, peaks: PeakSet,
              r: float) -> float:
    """H^1 density integrated outside every peak ball."""
    if r <= 0:
        raise ValueError("invalid-parameter: radius must be positive")
    grads = np.gradient(u, grid.spacing)
    if grid.dim == 1:
        dens = grads * grads + u * u
    else:
        dens = grads[0] ** 2 + grads[1] ** 2 + u * u
    outside = np.ones(grid.shape, dtype=bool)
    for m in _ball_masks(grid, peaks, r):
        outside &= ~m
    return float(np.sum(dens[outside]) * grid.cell)


def _shift_indices(grid: fd.Grid, center) -> tuple:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    idx = center / grid.spacing
    if np.any(np.abs(idx - np.round(idx)) > 1e-9):
        raise ValueError("invalid-parameter: center must sit on the grid")
    return tuple(int(i) for i in np.round(idx))


def _place_field(grid: fd.Grid, u: np.ndarray, center) -> np.ndarray:
    # integer-node translate with zero fill
    shifts = _shift_indices(grid, center)
    out = u
    for ax, s in enumerate(shifts):
        moved = np.zeros_like(out)
        if s == 0:
            moved = out.copy()
        elif s > 0:
            sl_src = [slice(None)] * out.ndim
            sl_dst = [slice(None)] * out.ndim
            sl_src[ax] = slice(0, out.shape[ax] - s)
            sl_dst[ax] = slice(s, None)
            moved[tuple(sl_dst)] = out[tuple(sl_src)]
        else:
            sl_src = [slice(None)] * out.ndim
            sl_dst = [slice(None)] * out.ndim
            sl_src[ax] = slice(-s, None)
            sl_dst[ax] = slice(0, out.shape[ax] + s)
            moved[tuple(sl_dst)] = out[tuple(sl_src)]
        out = moved
    return out


def interaction_deficit(grid: fd.Grid, u0: np.ndarray, centers, V0: float,
                        sigma: float, L: float = 0.0):
    """Energy cost of gluing copies of u0 at the given centers.

    deficit = [ell J(u0) + V0 alpha / 2] - [J(B sum) + V0 mass / 2]
    with B restoring total mass ell * mass(u0); the weight terms cancel
    exactly at equal mass but are kept explicit.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    ell = centers.shape[0]
    mdl = md.pure_log(sigma)
    m0 = fd.mass(grid, u0)
    alpha = ell * m0
    if ell == 1:
        return 0.0, math.inf
    xi, _ = separation(centers, eps=1.0)
    if L > 0 and xi < L / 2:
        raise ValueError("invalid-parameter: centers closer than L/2")
    total = grid.zeros()
    for row in centers:
        total = total + _place_field(grid, u0, row)
    total = fd.normalize(grid, total, alpha)
    J0 = en.energy_J(grid, u0, mdl)
    Jv = en.energy_J(grid, total, mdl)
    lhs = ell * J0 + 0.5 * V0 * alpha
    rhs = Jv + 0.5 * V0 * fd.mass(grid, total)
    return lhs - rhs, xi


# ----------------------------------------------------------------------
# geometry calibration defaults (overridable through the config)
# ----------------------------------------------------------------------

def calibrate_geometry(grid: fd.Grid, template_field: np.ndarray,
                       model: md.NonlinearityModel, alpha: float, ell: int,
                       V0: float, lam0: float):
    """Default (rho1, R0, L) from the template.

    rho1 = half the smaller of the empirical interpolation mass floor
    1/C_t and alpha/ell; R0 = smallest radius whose ball holds 3/4 rho1
    of the template with exterior below rho1/(8 ell); L = 100 R0.
    These are existence-grade defaults; runs at finite eps usually
    override them.
    """
    t = abs(lam0) + V0
    sup = float(np.max(np.abs(template_field)))
    s = np.linspace(1e-6 * sup, sup, 4000)
    fvals = md.evaluate(model, s).f
    ct = float(np.max(np.maximum(fvals / s + t, 0.0)
                      / s ** (4.0 / grid.dim)))
    rho1 = 0.5 * min(1.0 / ct, alpha / ell)

    total = fd.mass(grid, template_field)
    r = grid.radius()
    R0 = None
    for rr in np.arange(grid.spacing, grid.half_extent, grid.spacing):
        inside = float(np.sum((template_field**2)[r <= rr]) * grid.cell)
        if inside > 0.75 * rho1 and (total - inside) < rho1 / (8.0 * ell):
            R0 = float(rr)
            break
    if R0 is None:
        raise ValueError("invalid-parameter: template cannot satisfy the "
                         "barycenter radius conditions")
    return rho1, R0, 100.0 * R0


# ----------------------------------------------------------------------
# the penalized flow
# ----------------------------------------------------------------------

@dataclass
class MultipeakResult:
    u: np.ndarray
    lam: float
    gamma: float
    phi: float
    residual_norm: float
    converged: bool
    status: str                 # converged | max-iter | stalled | peaks-unresolved
    iterations: int
    peaks: PeakSet | None
    fractions: np.ndarray | None
    eps_warning: str = ""
    energy_history: list = dc_field(default_factory=list)


TRAJECTORY_RECORD_EVERY = 10
PEAK_REFRESH_EVERY = 10


def trajectory_header(ell: int, dim: int):
    cols = ["iter", "gamma_eps", "residual", "phi", "lambda"]
    for j in range(1, ell + 1):
        if dim == 1:
            cols.append(f"eps_upsilon_{j}")
        else:
            cols.extend([f"eps_upsilon_{j}_x", f"eps_upsilon_{j}_y"])
    cols.append("tail_mass")
    return cols


def run_multipeak(grid: fd.Grid, model: md.NonlinearityModel,
                  pot: en.PotentialSpec, params: en.PenalizationParams,
                  bump_spec: MultiBumpSpec, tol: float = 1e-8,
                  max_iter: int = 20000,
                  record_every: int = TRAJECTORY_RECORD_EVERY):
    """Descend gamma_eps from the multi-bump initial state.

    Returns (MultipeakResult, trajectory rows).  The peak set is
    refrozen every few iterations; losing the peak count aborts the run
    and hands back the trajectory collected so far.
    """
    if not model.satisfies_F5:
        raise ValueError("invalid-parameter: model lacks the log-type "
                         "superlinearity required by the peaked flow")
    warning = ""
    ceiling = en.eps_ceiling(pot.delta0, params.L)
    if params.eps >= ceiling:
        msg = (f"eps {params.eps:g} is not below the smallness ceiling "
               f"{ceiling:.3g} for delta0 {pot.delta0:g} and L {params.L:g}")
        if params.strict:
            raise ValueError("invalid-parameter: " + msg)
        warning = msg

    K0 = model.K0 if model.K0 is not None else 2.0 * bump_spec.template_sup
    mdl = md.truncate(model, K0)

    u = gamma0(grid, bump_spec, pot)
    trajectory = []
    try:
        peaks = upsilon(grid, u, params, expected=bump_spec.ell)
    except ValueError as exc:
        if "peaks-unresolved" not in str(exc):
            raise
        res = MultipeakResult(u=u, lam=0.0, gamma=math.nan, phi=math.nan,
                              residual_norm=math.inf, converged=False,
                              status="peaks-unresolved", iterations=0,
                              peaks=None, fractions=None,
                              eps_warning=warning)
        return res, trajectory

    def energy_fn(v):
        return en.gamma_eps(grid, v, mdl, pot, params, peaks=peaks)[0]

    state = sv.FlowState(u=u, alpha=bump_spec.alpha, dt=sv.default_dt(grid))
    value, grad = en.gamma_eps(grid, state.u, mdl, pot, params, peaks=peaks)
    status = "max-iter"
    converged = False

    def record(it, val):
        phi_val, _ = en.phi_eps(grid, state.u, peaks, params)
        row = [float(it), float(val), float(state.residual_norm),
               float(phi_val), float(state.lam)]
        for p in peaks.points:
            row.extend(params.eps * np.atleast_1d(p))
        row.append(tail_mass(grid, state.u, peaks, peaks.xi1 / 5.0))
        trajectory.append(row)

    it = 0
    while it < max_iter:
        lam, resid = en.lagrange_multiplier(grid, state.u, grad)
        state.lam = lam
        state.residual_norm = fd.lp_norm(grid, resid, 2)
        if it % record_every == 0:
            record(it, value)
        if state.residual_norm <= tol:
            status = "converged"
            converged = True
            break
        value = sv.descent_step(grid, state, value, grad, energy_fn)
        if state.stalled:
            status = "stalled"
            break
        it += 1
        if it % PEAK_REFRESH_EVERY == 0:
            try:
                peaks = upsilon(grid, state.u, params,
                                expected=bump_spec.ell)
            except ValueError as exc:
                if "peaks-unresolved" not in str(exc):
                    raise
                status = "peaks-unresolved"
                break
            value, grad = en.gamma_eps(grid, state.u, mdl, pot, params,
                                       peaks=peaks)
        else:
            value, grad = en.gamma_eps(grid, state.u, mdl, pot, params,
                                       peaks=peaks)
        if params.tail_floor > 0.0:
            cut = params.tail_floor * float(np.max(np.abs(state.u)))
            clipped = np.where(np.abs(state.u) < cut, 0.0, state.u)
            if np.any(clipped != state.u):
                state.u = fd.normalize(grid, clipped, bump_spec.alpha)
                value, grad = en.gamma_eps(grid, state.u, mdl, pot, params,
                                           peaks=peaks)

    if not trajectory or trajectory[-1][0] != float(it):
        record(it, value)
    phi_val, _ = en.phi_eps(grid, state.u, peaks, params)
    fractions = None
    if peaks is not None and status != "peaks-unresolved":
        t = peaks.xi / 4.0 if peaks.ell >= 2 else 4.0 * peaks.R0
        fractions = mass_fractions(grid, state.u, peaks, t)
    result = MultipeakResult(u=state.u, lam=state.lam, gamma=value,
                             phi=float(phi_val),
                             residual_norm=state.residual_norm,
                             converged=converged, status=status,
                             iterations=it, peaks=peaks,
                             fractions=fractions, eps_warning=warning,
                             energy_history=state.energy_history)
    return result, trajectory
