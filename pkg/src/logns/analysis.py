"""Certifications and fits on solver output.

Concavity and subadditivity of the energy curve, gaussian-rate decay
fits, the exterior-mass recurrence bound, and the interaction scaling
regression.  Everything here consumes plain data (curve points, fields,
sample lists) and emits report dictionaries; nothing runs a flow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import field as fd


@dataclass(frozen=True)
class DecayFit:
    z_inf: float
    coef: float                # amplitude of the fitted 1/r^2 correction
    target: float              # sigma/2
    rel_err: float
    window: tuple
    r: np.ndarray
    z: np.ndarray


def _lookup(points, alpha: float):
    for p in points:
        if abs(p.alpha - alpha) <= 1e-12 * max(1.0, abs(alpha)):
            return p
    return None


def certify_concavity(points, solver_tol: float):
    """Second-divided-difference concavity certificate.

    Points must be sorted; only converged triples count.  The acceptance
    quantity is the 3-point second-derivative estimate (exact on
    quadratics, correct on uneven spacing); the margin is 10x the solver
    tolerance divided by the local spacing product.
    """
    pts = sorted(points, key=lambda p: p.alpha)
    conv = [p for p in pts if p.converged]
    if len(conv) < 3:
        raise ValueError("invalid-parameter: need at least 3 converged "
                         "points for a concavity certificate")
    triples = []
    skipped = []
    for i in range(1, len(pts) - 1):
        tri = pts[i - 1:i + 2]
        if not all(p.converged for p in tri):
            skipped.append(tuple(p.alpha for p in tri))
            continue
        a, b, c = tri
        hm = b.alpha - a.alpha
        hp = c.alpha - b.alpha
        d2 = 2.0 * (a.energy / (hm * (hm + hp))
                    - b.energy / (hm * hp)
                    + c.energy / (hp * (hm + hp)))
        margin = 10.0 * solver_tol / (hm * hp)
        triples.append({"alpha": b.alpha, "d2": d2, "margin": margin,
                        "ok": d2 < -margin})
    ok = bool(triples) and all(t["ok"] for t in triples)
    return {"ok": ok, "triples": triples, "skipped": skipped}


def certify_subadditivity(points, pairs=(), scalings=(), level_alpha=None,
                          solver_tol: float = 1e-8):
    """Strict subadditivity and superlinearity checks on curve points.

    pairs: (a, b) with E(a+b) < E(a) + E(b).
    scalings: (t, a) with E(t a) < t E(a) for t > 1 (t = 1 is skipped,
    it is an identity).  level_alpha additionally checks the splitting
    chain l E(a/l) < (l+1) E(a/(l+1)) for l = 1, 2.
    """
    margin = 10.0 * solver_tol
    checks = []
    skipped = []

    def need(alpha):
        p = _lookup(points, alpha)
        if p is None or not p.converged:
            return None
        return p.energy

    for a, b in pairs:
        Ea, Eb, Eab = need(a), need(b), need(a + b)
        if None in (Ea, Eb, Eab):
            skipped.append(f"pair ({a:g}, {b:g}): missing curve point")
            continue
        gap = Ea + Eb - Eab
        checks.append({"kind": "pair", "detail": f"{a:g}+{b:g}",
                       "gap": gap, "ok": gap > margin})
    for t, a in scalings:
        if t == 1.0:
            skipped.append(f"scaling t=1 at alpha {a:g}: identity, skipped")
            continue
        if t < 1.0:
            raise ValueError("invalid-parameter: scaling factor must be >= 1")
        Ea, Eta = need(a), need(t * a)
        if None in (Ea, Eta):
            skipped.append(f"scaling ({t:g}, {a:g}): missing curve point")
            continue
        gap = t * Ea - Eta
        checks.append({"kind": "scaling", "detail": f"t={t:g} a={a:g}",
                       "gap": gap, "ok": gap > margin})
    if level_alpha is not None:
        a = level_alpha
        for ell in (1, 2):
            El = need(a / ell)
            Elp = need(a / (ell + 1))
            if None in (El, Elp):
                skipped.append(f"level l={ell}: missing curve point")
                continue
            gap = (ell + 1) * Elp - ell * El
            checks.append({"kind": "level", "detail": f"l={ell} a={a:g}",
                           "gap": gap, "ok": gap > margin})
    ok = bool(checks) and all(c["ok"] for c in checks)
    return {"ok": ok, "checks": checks, "skipped": skipped}


def decay_profile(grid: fd.Grid, u: np.ndarray, side: str = "right"):
    """Radial log-derivative diagnostic z(r) = -u'(r) / (r u(r)).

    1D fields are read along the chosen half axis; 2D fields along the
    positive x axis through the center.  Nodes where u has fallen below
    1e-12 of its peak are dropped.
    """
    n = grid.n
    mid = n // 2
    if grid.dim == 1:
        line = u
    else:
        line = u[:, mid]
    h = grid.spacing
    du = np.gradient(line, h)
    if side == "right":
        r = grid.axis[mid + 1:]
        uu = line[mid + 1:]
        dd = du[mid + 1:]
    elif side == "left":
        r = -grid.axis[:mid][::-1]
        uu = line[:mid][::-1]
        dd = -du[:mid][::-1]
    else:
        raise ValueError("invalid-parameter: side must be left or right")
    keep = uu > 1e-12 * float(np.max(np.abs(u)))
    r, uu, dd = r[keep], uu[keep], dd[keep]
    z = -dd / (r * uu)
    return r, z


def decay_fit(grid: fd.Grid, u: np.ndarray, sigma: float,
              window=(2.0, 5.0), side: str = "right") -> DecayFit:
    """Fit z(r) = z_inf + c / r^2 on the window and compare to sigma/2."""
    r, z = decay_profile(grid, u, side=side)
    sel = (r >= window[0]) & (r <= window[1])
    if np.count_nonzero(sel) < 4:
        raise ValueError("invalid-parameter: decay window holds fewer "
                         "than 4 usable nodes")
    rw, zw = r[sel], z[sel]
    A = np.stack([np.ones_like(rw), 1.0 / rw**2], axis=1)
    coef, *_ = np.linalg.lstsq(A, zw, rcond=None)
    z_inf, c = float(coef[0]), float(coef[1])
    target = sigma / 2.0
    return DecayFit(z_inf=z_inf, coef=c, target=target,
                    rel_err=abs(z_inf - target) / target,
                    window=tuple(window), r=rw, z=zw)


def recurrence_check(Q, theta: float, b: float):
    """Geometric-decay bound for a nonincreasing-in-quality sequence.

    Hypothesis: Q[r] <= Q[r-1]/theta + b for every r >= 1 (checked, and
    its failure raises).  Conclusion verified: for every r,
    Q[r] <= theta^(-r) Q[0] + b theta/(theta - 1).
    """
    Q = np.asarray(Q, dtype=float)
    if theta <= 1.0:
        raise ValueError("invalid-parameter: theta must exceed 1")
    if Q.ndim != 1 or Q.size < 2 or np.any(Q < 0):
        raise ValueError("invalid-parameter: Q must be a nonnegative "
                         "sequence of length >= 2")
    slack = 1e-12 * max(1.0, float(np.max(Q)))
    for r in range(1, Q.size):
        if Q[r] > Q[r - 1] / theta + b + slack:
            raise ValueError(f"hypothesis-violated: Q[{r}] exceeds "
                             f"Q[{r-1}]/theta + b")
    tail = b * theta / (theta - 1.0)
    bounds = Q[0] * theta ** (-np.arange(Q.size, dtype=float)) + tail
    ok = bool(np.all(Q <= bounds + slack))
    worst = float(np.max(Q - bounds))
    return {"ok": ok, "worst_slack": worst, "tail": tail}


def interaction_scaling_fit(samples, sigma: float):
    """Least squares of ln(deficit/xi) against xi^2.

    samples: iterable of (xi, deficit), at least 4, all deficits
    positive.  Returns (slope, intercept, rel_err) where rel_err
    compares the slope with -sigma/8.
    """
    samples = list(samples)
    if len(samples) < 4:
        raise ValueError("invalid-parameter: need at least 4 samples")
    xi = np.array([s[0] for s in samples], dtype=float)
    de = np.array([s[1] for s in samples], dtype=float)
    if np.any(de <= 0):
        raise ValueError("invalid-parameter: deficits must all be positive")
    X = xi**2
    Y = np.log(de / xi)
    slope, intercept = np.polyfit(X, Y, 1)
    target = -sigma / 8.0
    rel = abs(slope - target) / abs(target)
    return float(slope), float(intercept), float(rel)


# ----------------------------------------------------------------------
# report formatting (deterministic)
# ----------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def format_kv(block: dict, title: str = "") -> str:
    lines = []
    if title:
        lines.append(f"[{title}]")
    for k, v in block.items():
        lines.append(f"{k}: {fmt(v)}")
    return "\n".join(lines) + "\n"


def format_table(header, rows) -> str:
    out = [" | ".join(header)]
    out.append("-+-".join("-" * len(h) for h in header))
    for row in rows:
        out.append(" | ".join(fmt(v) for v in row))
    return "\n".join(out) + "\n"
