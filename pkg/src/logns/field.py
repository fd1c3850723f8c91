"""Uniform grids, discrete calculus and field helpers.

Fields are plain numpy arrays living on a Grid: shape (n,) in 1D and
(n, n) in 2D, nodes at -R, -R+h, ..., R along each axis.  The Laplacian
uses the second-order stencil with zero Dirichlet ghosts outside the
box; dirichlet() sums squared forward differences over the n+1 edges
per axis (ghost edges included), which makes <-Lap u, u> = dirichlet(u)
exact up to rounding rather than up to O(h).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    dim: int
    half_extent: float
    spacing: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("invalid-parameter: dim must be 1 or 2")
        if self.spacing <= 0 or self.half_extent <= 0:
            raise ValueError("invalid-parameter: positive extent and spacing")
        ratio = 2 * self.half_extent / self.spacing
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("invalid-parameter: box must be a whole number "
                             "of spacings")
        if self.n < 8:
            raise ValueError("invalid-parameter: fewer than 8 nodes per axis")

    @property
    def n(self) -> int:
        return int(round(2 * self.half_extent / self.spacing)) + 1

    @property
    def axis(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.n)

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def cell(self) -> float:
        return self.spacing ** self.dim

    def radius(self) -> np.ndarray:
        # |x| at every node
        ax = self.axis
        if self.dim == 1:
            return np.abs(ax)
        return np.hypot(ax[:, None], ax[None, :])

    def coords(self):
        ax = self.axis
        if self.dim == 1:
            return (ax,)
        return (ax[:, None] + 0.0 * ax[None, :], 0.0 * ax[:, None] + ax[None, :])

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


def check_same_grid(a: Grid, b: Grid):
    if a != b:
        raise ValueError("incompatible-grids: fields live on different grids")


def _check_field(grid: Grid, u: np.ndarray):
    if u.shape != grid.shape:
        raise ValueError("incompatible-grids: field shape does not match grid")


def laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    _check_field(grid, u)
    h2 = grid.spacing ** 2
    if grid.dim == 1:
        p = np.zeros(u.size + 2)
        p[1:-1] = u
        return (p[:-2] - 2 * u + p[2:]) / h2
    p = np.zeros((u.shape[0] + 2, u.shape[1] + 2))
    p[1:-1, 1:-1] = u
    return (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
            - 4 * u) / h2


def mass(grid: Grid, u: np.ndarray) -> float:
    _check_field(grid, u)
    return float(np.sum(u * u) * grid.cell)


def inner(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    _check_field(grid, u)
    _check_field(grid, v)
    return float(np.sum(u * v) * grid.cell)


def integral(grid: Grid, w: np.ndarray) -> float:
    _check_field(grid, w)
    return float(np.sum(w) * grid.cell)


def lp_norm(grid: Grid, u: np.ndarray, p: float) -> float:
    _check_field(grid, u)
    if p == math.inf:
        return float(np.max(np.abs(u)))
    return float((np.sum(np.abs(u) ** p) * grid.cell) ** (1.0 / p))


def dirichlet(grid: Grid, u: np.ndarray) -> float:
    """Discrete H^1 seminorm squared, summed over ghost-padded edges."""
    _check_field(grid, u)
    h = grid.spacing
    if grid.dim == 1:
        p = np.zeros(u.size + 2)
        p[1:-1] = u
        d = np.diff(p)
        return float(np.sum(d * d) / h)
    p = np.zeros((u.shape[0] + 2, u.shape[1] + 2))
    p[1:-1, 1:-1] = u
    dx = np.diff(p, axis=0)[:, 1:-1]
    dy = np.diff(p, axis=1)[1:-1, :]
    return float(np.sum(dx * dx) + np.sum(dy * dy))


def normalize(grid: Grid, u: np.ndarray, alpha: float) -> np.ndarray:
    m = mass(grid, u)
    if m <= 0.0:
        raise ValueError("degenerate-input: cannot normalize a zero field")
    return u * math.sqrt(alpha / m)


def smoothstep(t):
    """C^1 cubic ramp: 0 for t <= 0, t^2(3-2t) on (0,1), 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def radial_cutoff(r, plateau: float, support: float):
    """1 for r <= plateau, 0 for r >= support, cubic ramp between."""
    if not 0 < plateau < support:
        raise ValueError("invalid-parameter: need 0 < plateau < support")
    return 1.0 - smoothstep((np.asarray(r) - plateau) / (support - plateau))


def place_bump(grid: Grid, template, center, plateau: float,
               support: float) -> np.ndarray:
    """Sample template(|x - center|) times a C^1 radial cutoff.

    template is a radial closure; center is a point (scalar in 1D).
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.size != grid.dim:
        raise ValueError("invalid-parameter: center dimension mismatch")
    if np.any(np.abs(center) > grid.half_extent):
        raise ValueError("invalid-parameter: center outside box")
    cs = grid.coords()
    r2 = sum((c - c0) ** 2 for c, c0 in zip(cs, center))
    r = np.sqrt(r2)
    return template(r) * radial_cutoff(r, plateau, support)


# ----------------------------------------------------------------------
# snapshot i/o: header plus row-major values at 17 significant digits
# ----------------------------------------------------------------------

def write_snapshot(grid: Grid, u: np.ndarray, path: str):
    _check_field(grid, u)
    with open(path, "w") as fh:
        fh.write(f"dim {grid.dim}; extent {grid.half_extent:.17g}; "
                 f"spacing {grid.spacing:.17g}\n")
        for v in u.ravel():
            fh.write(f"{v:.17g}\n")


def read_snapshot(path: str):
    with open(path) as fh:
        header = fh.readline().strip()
        try:
            parts = dict(p.strip().split(" ", 1) for p in header.split(";"))
            dim = int(parts["dim"])
            extent = float(parts["extent"])
            spacing = float(parts["spacing"])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"invalid-parameter: bad snapshot header "
                             f"{header!r}") from exc
        grid = Grid(dim=dim, half_extent=extent, spacing=spacing)
        data = np.loadtxt(io.StringIO(fh.read()))
    u = np.asarray(data, dtype=float).reshape(grid.shape)
    return grid, u


def boundary_max(grid: Grid, u: np.ndarray) -> float:
    # largest |u| on the outermost node layer; box adequacy diagnostic
    _check_field(grid, u)
    if grid.dim == 1:
        return float(max(abs(u[0]), abs(u[-1])))
    edge = np.concatenate([u[0, :], u[-1, :], u[:, 0], u[:, -1]])
    return float(np.max(np.abs(edge)))
