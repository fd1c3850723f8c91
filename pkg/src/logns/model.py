"""Nonlinearity models with a sign-split and a growth truncation.

Three families are supported, all written for the equation
-Lap u = f(u) + lambda u:

  pure_log          f(s) = sigma s log s
  log_plus_power    f(s) = sigma s log s + mu s^(p-1)
  double_power      f(s) = -s^(q-1) + s^(p-1)

f is extended oddly to s < 0 and F(s) = int_0^s f is even.  Every model
carries the split f = -f1 + f2 into its repulsive part f1 = (-f)_+ and
attractive part f2 = (f)_+, with primitives F1, F2 >= 0:  F1 grows on
(0, t0) where f < 0 and is frozen at F1(t0) beyond, F2 = F + F1.
Truncation caps f2 at its value at s = K and continues F2 linearly,
leaving everything below K untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

# below this the product s^2 log s underflows to zero anyway
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class NonlinearityModel:
    kind: str
    sigma: float = 0.0
    mu: float = 0.0
    p: float = 0.0
    q: float = 0.0
    t0: float = 1.0
    c0: float | None = None
    K0: float | None = None
    satisfies_F5: bool = True
    truncation: float | None = None


@dataclass(frozen=True)
class NonlinearityValues:
    f: np.ndarray
    F: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    F1: np.ndarray
    F2: np.ndarray


def pure_log(sigma: float = 2.0) -> NonlinearityModel:
    if sigma <= 0:
        raise ValueError("invalid-parameter: sigma must be positive")
    # f = sigma s log s changes sign at 1
    return NonlinearityModel(kind="pure_log", sigma=float(sigma), t0=1.0)


def log_plus_power(sigma: float, mu: float, p: float) -> NonlinearityModel:
    if sigma <= 0 or mu <= 0 or p <= 2:
        raise ValueError("invalid-parameter: need sigma > 0, mu > 0, p > 2")
    # sign change of sigma log s + mu s^(p-2) sits in (0, 1)
    t0 = brentq(lambda s: sigma * math.log(s) + mu * s ** (p - 2), 1e-12, 1.0)
    return NonlinearityModel(kind="log_plus_power", sigma=float(sigma),
                             mu=float(mu), p=float(p), t0=float(t0))


def double_power(q: float, p: float) -> NonlinearityModel:
    if not 2 <= q < p:
        raise ValueError("invalid-parameter: need 2 <= q < p")
    # no logarithmic superlinearity at infinity, so the multibump
    # machinery rejects this model
    return NonlinearityModel(kind="double_power", q=float(q), p=float(p),
                             t0=1.0, satisfies_F5=False)


def _raw(model: NonlinearityModel, a: np.ndarray):
    # f and F on a >= 0, without split or truncation
    safe = np.maximum(a, LOG_FLOOR)
    log = np.log(safe)
    if model.kind == "pure_log":
        f = model.sigma * a * log
        F = 0.5 * model.sigma * (a * a * log - 0.5 * a * a)
    elif model.kind == "log_plus_power":
        f = model.sigma * a * log + model.mu * a ** (model.p - 1)
        F = (0.5 * model.sigma * (a * a * log - 0.5 * a * a)
             + model.mu / model.p * a ** model.p)
    elif model.kind == "double_power":
        f = -(a ** (model.q - 1)) + a ** (model.p - 1)
        F = -(a ** model.q) / model.q + (a ** model.p) / model.p
    else:
        raise ValueError(f"invalid-parameter: unknown kind {model.kind!r}")
    return f, F


def evaluate(model: NonlinearityModel, s) -> NonlinearityValues:
    """Evaluate f, F and the split (f1, f2, F1, F2) at s (odd/even ext.)."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    sgn = np.sign(s)

    f_raw, F_raw = _raw(model, a)
    F_t0 = float(_raw(model, np.asarray(model.t0))[1])

    f1 = np.maximum(-f_raw, 0.0)
    f2 = np.maximum(f_raw, 0.0)
    F1 = np.where(a < model.t0, -F_raw, -F_t0)
    F2 = F_raw + F1

    K = model.truncation
    if K is not None:
        fK, FK = _raw(model, np.asarray(K))
        f2K = max(float(fK), 0.0)
        F2K = float(FK) - F_t0
        beyond = a > K
        f2 = np.where(beyond, f2K, f2)
        F2 = np.where(beyond, F2K + f2K * (a - K), F2)

    f = sgn * (-f1 + f2)
    F = -F1 + F2
    return NonlinearityValues(f=f, F=F, f1=f1, f2=f2, F1=F1, F2=F2)


def truncate(model: NonlinearityModel, K: float) -> NonlinearityModel:
    """Cap the attractive part at s = K.  Repeated truncation keeps the
    smallest cap, so truncating again with K' >= K changes nothing."""
    if K <= model.t0:
        raise ValueError("invalid-parameter: truncation must exceed t0")
    if model.truncation is not None:
        K = min(K, model.truncation)
    return replace(model, truncation=float(K))


# ----------------------------------------------------------------------
# sharp interpolation constant and the mass ceiling
# ----------------------------------------------------------------------

def _gn_quotient_1d(u, du, dx):
    m2 = float(np.sum(u * u) * dx)
    m6 = float(np.sum(u**6) * dx)
    kin = float(np.sum(du * du) * dx)
    return m6 / (kin * m2 * m2)


def _gn_quotient_2d(u, du, r, dr):
    m2 = float(2 * np.pi * np.sum(u * u * r) * dr)
    m4 = float(2 * np.pi * np.sum(u**4 * r) * dr)
    kin = float(2 * np.pi * np.sum(du * du * r) * dr)
    return m4 / (kin * m2)


@lru_cache(maxsize=None)
def gn_constant(dim: int) -> float:
    """Estimate sup int u^(2+4/dim) / (|grad u|_2^2 |u|_2^(4/dim)).

    Scans two unrelated trial families (powers of sech, algebraic decay)
    and insists they agree to 1 percent; returns the larger maximum.
    The quotient is scale invariant, so one shape parameter per family
    is enough.
    """
    if dim == 1:
        x = np.linspace(-40.0, 40.0, 80001)
        dx = x[1] - x[0]
        best_a = best_b = 0.0
        for pw in np.linspace(0.3, 3.0, 271):
            u = np.cosh(x) ** (-pw)
            du = -pw * np.tanh(x) * u
            best_a = max(best_a, _gn_quotient_1d(u, du, dx))
        for k in np.linspace(0.6, 6.0, 271):
            u = (1 + x * x) ** (-k)
            du = -2 * k * x * (1 + x * x) ** (-k - 1)
            best_b = max(best_b, _gn_quotient_1d(u, du, dx))
    elif dim == 2:
        r = np.linspace(1e-6, 30.0, 60001)
        dr = r[1] - r[0]
        best_a = best_b = 0.0
        for pw in np.linspace(0.3, 3.0, 271):
            u = np.cosh(r) ** (-pw)
            du = -pw * np.tanh(r) * u
            best_a = max(best_a, _gn_quotient_2d(u, du, r, dr))
        for k in np.linspace(1.05, 6.0, 271):
            u = (1 + r * r) ** (-k)
            du = -2 * k * r * (1 + r * r) ** (-k - 1)
            best_b = max(best_b, _gn_quotient_2d(u, du, r, dr))
    else:
        raise ValueError("invalid-parameter: dim must be 1 or 2")
    if abs(best_a - best_b) > 0.01 * max(best_a, best_b):
        raise RuntimeError("gn-estimate: trial families disagree beyond 1%")
    return max(best_a, best_b)


def critical_coefficient(model: NonlinearityModel, dim: int) -> float:
    # coefficient of the L2-critical growth s^(1 + 4/dim) in f2
    if model.c0 is not None:
        return model.c0
    pcrit = 2.0 + 4.0 / dim
    if model.kind == "pure_log":
        return 0.0
    pw = model.p
    if abs(pw - pcrit) < 1e-12:
        return model.mu if model.kind == "log_plus_power" else 1.0
    if pw > pcrit:
        raise ValueError("invalid-parameter: supercritical power, no "
                         "finite mass ceiling theory applies")
    return 0.0


def mass_ceiling(model: NonlinearityModel, dim: int) -> float:
    """Largest admissible constraint mass, (2 c0 S(dim))^(-dim/2).

    Infinite whenever the critical coefficient vanishes, which covers the
    pure log model and all subcritical powers.
    """
    c0 = critical_coefficient(model, dim)
    if c0 == 0.0:
        return math.inf
    return (2.0 * c0 * gn_constant(dim)) ** (-dim / 2.0)


# ----------------------------------------------------------------------
# closed-form reference state of the pure log model
# ----------------------------------------------------------------------

def gausson_amplitude(sigma: float, alpha: float, dim: int) -> float:
    return math.sqrt(alpha * (sigma / (2 * math.pi)) ** (dim / 2.0))


def gausson_profile(sigma: float, alpha: float, dim: int):
    """Radial closure r -> A exp(-sigma r^2 / 4) at exact mass alpha."""
    A = gausson_amplitude(sigma, alpha, dim)

    def profile(r):
        r = np.asarray(r, dtype=float)
        return A * np.exp(-sigma * r * r / 4.0)

    return profile


def gausson_oracle(sigma: float, alpha: float, dim: int):
    """Exact minimizer of the pure log model at mass alpha.

    Returns (profile, lam, E) where profile solves
    -Lap u = sigma u log u + lam u with int u^2 = alpha and E is the
    constrained energy 1/2 |grad u|_2^2 - int F(u).
    """
    if alpha <= 0 or sigma <= 0 or dim not in (1, 2):
        raise ValueError("invalid-parameter: need alpha, sigma > 0, dim 1|2")
    lam = (sigma * dim / 2.0 - sigma / 2.0 * math.log(alpha)
           + sigma * dim / 4.0 * math.log(2 * math.pi / sigma))
    E = alpha * (sigma * dim / 4.0 + sigma / 4.0
                 - sigma / 4.0 * math.log(alpha)
                 + sigma * dim / 8.0 * math.log(2 * math.pi / sigma))
    return gausson_profile(sigma, alpha, dim), lam, E


def energy_curve_zero(sigma: float, dim: int) -> float:
    # unique positive zero of alpha -> E(alpha) for the pure log model
    return math.exp(dim + 1) * (2 * math.pi / sigma) ** (dim / 2.0)
