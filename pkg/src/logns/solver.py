"""Projected gradient descent on the mass sphere.

The flow is u -> normalize(|u - dt (g - lambda u)|, alpha) with lambda
the projection multiplier, so every iterate sits on the constraint
sphere exactly and stays nonnegative.  A backtracking line search
guarantees the energy never increases; convergence is declared on the
L2 norm of the tangential residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import energy as en
from . import field as fd
from . import model as md


@dataclass
class FlowState:
    u: np.ndarray
    alpha: float
    dt: float
    iterations: int = 0
    lam: float = 0.0
    residual_norm: float = math.inf
    stalled: bool = False
    energy_history: list = dc_field(default_factory=list)
    residual_history: list = dc_field(default_factory=list)


@dataclass
class GroundState:
    u: np.ndarray
    lam: float
    energy: float
    residual_norm: float
    converged: bool
    iterations: int
    stalled: bool = False
    energy_history: list = dc_field(default_factory=list)


DT_MIN = 1e-12
DT_GROWTH = 1.1


def default_dt(grid: fd.Grid) -> float:
    return 0.1 * grid.spacing**2


def max_dt(grid: fd.Grid) -> float:
    # explicit-step stability for the stiffest (Laplacian) part
    return 0.45 * grid.spacing**2 / grid.dim


def descent_step(grid: fd.Grid, state: FlowState, value: float,
                 grad: np.ndarray, energy_fn) -> float:
    """One backtracked step; mutates state, returns the accepted energy.

    Accepts any non-increase, so an exact critical point (residual 0)
    passes through unchanged instead of stalling the line search.
    """
    lam, res = en.lagrange_multiplier(grid, state.u, grad)
    state.lam = lam
    state.residual_norm = fd.lp_norm(grid, res, 2)

    dt = state.dt
    slack = 1e-15 * max(1.0, abs(value))
    while True:
        trial = fd.normalize(grid, np.abs(state.u - dt * res), state.alpha)
        e_trial = energy_fn(trial)
        if e_trial <= value + slack:
            break
        dt *= 0.5
        if dt < DT_MIN:
            state.stalled = True
            state.energy_history.append(value)
            state.residual_history.append(state.residual_norm)
            return value
    state.u = trial
    state.dt = min(dt * DT_GROWTH, max_dt(grid))
    state.iterations += 1
    state.energy_history.append(e_trial)
    state.residual_history.append(state.residual_norm)
    return e_trial


def initial_field(grid: fd.Grid, model: md.NonlinearityModel, alpha: float,
                  init) -> np.ndarray:
    if isinstance(init, np.ndarray):
        return fd.normalize(grid, np.abs(init), alpha)
    sig = model.sigma if model.sigma > 0 else 2.0
    if init in (None, "auto"):
        profile = md.gausson_profile(sig, alpha, grid.dim)
    elif init == "wide":
        profile = md.gausson_profile(sig / 4.0, alpha, grid.dim)
    else:
        raise ValueError(f"invalid-parameter: unknown init preset {init!r}")
    return fd.normalize(grid, profile(grid.radius()), alpha)


def run_groundstate(grid: fd.Grid, model: md.NonlinearityModel, alpha: float,
                    init=None, tol: float = 1e-8,
                    max_iter: int = 200000) -> GroundState:
    """Minimize J on the mass-alpha sphere.

    Returns the best iterate with converged=False when max_iter runs
    out; rejects masses at or above the model's ceiling upfront.
    """
    ceiling = md.mass_ceiling(model, grid.dim)
    if not 0.0 < alpha < ceiling:
        raise ValueError("invalid-parameter: alpha must lie below the "
                         f"mass ceiling {ceiling:.6g}")
    u = initial_field(grid, model, alpha, init)
    state = FlowState(u=u, alpha=alpha, dt=default_dt(grid))

    def energy_fn(v):
        return en.energy_J(grid, v, model)

    value = energy_fn(state.u)
    converged = False
    while state.iterations < max_iter:
        grad = en.grad_J(grid, state.u, model)
        lam, res = en.lagrange_multiplier(grid, state.u, grad)
        state.lam = lam
        state.residual_norm = fd.lp_norm(grid, res, 2)
        if state.residual_norm <= tol:
            converged = True
            break
        value = descent_step(grid, state, value, grad, energy_fn)
        if state.stalled:
            break

    return GroundState(u=state.u, lam=state.lam, energy=value,
                       residual_norm=state.residual_norm,
                       converged=converged, iterations=state.iterations,
                       stalled=state.stalled,
                       energy_history=state.energy_history)


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    energy: float
    lam: float
    residual_norm: float
    converged: bool


def sweep_E_alpha(grid: fd.Grid, model: md.NonlinearityModel, alphas,
                  tol: float = 1e-8, max_iter: int = 200000,
                  warm_start: bool = True):
    """Ground states along an alpha list, warm-started by mass rescaling.

    Points are solved in increasing alpha order and returned sorted; a
    point that fails to converge is flagged, never dropped.
    """
    order = sorted(float(a) for a in alphas)
    points = []
    prev = None
    for a in order:
        init = prev if (warm_start and prev is not None) else None
        gs = run_groundstate(grid, model, a, init=init, tol=tol,
                             max_iter=max_iter)
        points.append(CurvePoint(alpha=a, energy=gs.energy, lam=gs.lam,
                                 residual_norm=gs.residual_norm,
                                 converged=gs.converged))
        if gs.converged:
            prev = gs.u
    return points
