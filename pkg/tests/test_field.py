import numpy as np
import pytest

import logns.field as fd
import logns.model as md


def test_grid_basics():
    g = fd.Grid(1, 12.0, 0.05)
    assert g.n == 481
    assert g.shape == (481,)
    assert g.axis[0] == -12.0
    assert abs(g.axis[-1] - 12.0) < 1e-12
    assert g.cell == 0.05

    g2 = fd.Grid(2, 3.0, 0.1)
    assert g2.shape == (61, 61)
    assert abs(g2.cell - 0.01) < 1e-15
    xs, ys = g2.coords()
    assert xs.shape == (61, 61)
    r = g2.radius()
    assert abs(float(r[0, 0]) - 3.0 * np.sqrt(2.0)) < 1e-12
    assert float(r.min()) == 0.0


def test_grid_validation():
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.Grid(3, 4.0, 0.1)
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.Grid(1, -4.0, 0.1)
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.Grid(1, 4.0, 0.0)
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.Grid(1, 1.0, 0.3)  # extent not a whole number of spacings
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.Grid(1, 0.1, 0.05)  # too few nodes


def test_laplacian_accuracy_1d():
    g = fd.Grid(1, 8.0, 0.02)
    x = g.axis
    u = np.exp(-x * x)
    exact = (4.0 * x * x - 2.0) * u
    err = np.abs(fd.laplacian(g, u) - exact)
    assert float(err.max()) < 1e-3


def test_laplacian_accuracy_2d():
    g = fd.Grid(2, 6.0, 0.04)
    xs, ys = g.coords()
    r2 = xs * xs + ys * ys
    u = np.exp(-r2)
    exact = (4.0 * r2 - 4.0) * u
    err = np.abs(fd.laplacian(g, u) - exact)
    assert float(err.max()) < 5e-3


@pytest.mark.parametrize("dim,extent,h", [(1, 5.0, 0.1), (2, 2.0, 0.1)])
def test_laplacian_self_adjoint(dim, extent, h):
    g = fd.Grid(dim, extent, h)
    rng = np.random.default_rng(7)
    u = rng.standard_normal(g.shape)
    v = rng.standard_normal(g.shape)
    a = fd.inner(g, fd.laplacian(g, u), v)
    b = fd.inner(g, u, fd.laplacian(g, v))
    assert abs(a - b) <= 1e-10 * max(abs(a), 1.0)


@pytest.mark.parametrize("dim,extent,h", [(1, 5.0, 0.1), (2, 2.0, 0.1)])
def test_dirichlet_matches_quadratic_form(dim, extent, h):
    g = fd.Grid(dim, extent, h)
    rng = np.random.default_rng(3)
    u = rng.standard_normal(g.shape)
    a = fd.inner(g, -fd.laplacian(g, u), u)
    b = fd.dirichlet(g, u)
    assert abs(a - b) <= 1e-12 * max(abs(a), 1.0)


def test_norms_and_integral():
    g = fd.Grid(1, 4.0, 0.1)
    u = np.cos(g.axis)
    assert fd.lp_norm(g, u, np.inf) == float(np.abs(u).max())
    m = fd.mass(g, u)
    assert abs(fd.lp_norm(g, u, 2) - np.sqrt(m)) < 1e-13
    assert abs(fd.integral(g, u * u) - m) == 0.0


def test_normalize():
    g = fd.Grid(1, 6.0, 0.05)
    u = np.exp(-g.axis**2) + 0.1
    w = fd.normalize(g, u, 2.5)
    assert abs(fd.mass(g, w) - 2.5) < 1e-14 * 2.5
    w2 = fd.normalize(g, w, 2.5)
    assert np.allclose(w, w2, rtol=0.0, atol=1e-14)
    with pytest.raises(ValueError, match="degenerate-input"):
        fd.normalize(g, np.zeros(g.shape), 1.0)


def test_smoothstep():
    assert fd.smoothstep(-1.0) == 0.0
    assert fd.smoothstep(0.0) == 0.0
    assert fd.smoothstep(1.0) == 1.0
    assert fd.smoothstep(2.0) == 1.0
    assert abs(fd.smoothstep(0.5) - 0.5) < 1e-15
    t = np.linspace(-0.5, 1.5, 401)
    v = fd.smoothstep(t)
    assert np.all(np.diff(v) >= 0.0)
    # steepest in the middle, slope 1.5
    d = np.diff(v) / np.diff(t)
    assert abs(float(d.max()) - 1.5) < 1e-2


def test_radial_cutoff():
    g = fd.Grid(1, 6.0, 0.05)
    r = g.radius()
    c = fd.radial_cutoff(r, 1.0, 2.0)
    assert np.all(c[r <= 1.0] == 1.0)
    assert np.all(c[r >= 2.0] == 0.0)
    assert np.all((c >= 0.0) & (c <= 1.0))
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.radial_cutoff(r, 2.0, 1.0)
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.radial_cutoff(r, 0.0, 1.0)


def test_place_bump():
    g = fd.Grid(1, 8.0, 0.05)
    prof = md.gausson_profile(2.0, 1.0, 1)
    u = fd.place_bump(g, prof, [1.5], 1.0, 2.0)
    x = g.axis
    far = np.abs(x - 1.5) >= 2.0
    near = np.abs(x - 1.5) <= 1.0
    assert np.all(u[far] == 0.0)
    np.testing.assert_allclose(u[near], prof(np.abs(x[near] - 1.5)),
                               rtol=1e-14)
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.place_bump(g, prof, [9.0], 1.0, 2.0)


def test_place_bump_2d():
    g = fd.Grid(2, 4.0, 0.1)
    prof = md.gausson_profile(2.0, 1.0, 2)
    u = fd.place_bump(g, prof, [1.0, -0.5], 0.8, 1.6)
    xs, ys = g.coords()
    r = np.sqrt((xs - 1.0) ** 2 + (ys + 0.5) ** 2)
    assert np.all(u[r >= 1.6] == 0.0)
    np.testing.assert_allclose(u[r <= 0.8], prof(r[r <= 0.8]), rtol=1e-14)


def test_boundary_max():
    g = fd.Grid(1, 4.0, 0.1)
    u = np.zeros(g.shape)
    u[0] = -3.0
    u[-1] = 2.0
    u[40] = 50.0
    assert fd.boundary_max(g, u) == 3.0
    g2 = fd.Grid(2, 2.0, 0.1)
    w = np.zeros(g2.shape)
    w[0, 5] = 4.0
    w[10, 10] = 99.0
    assert fd.boundary_max(g2, w) == 4.0


@pytest.mark.parametrize("dim", [1, 2])
def test_snapshot_roundtrip(dim, tmp_path):
    g = fd.Grid(dim, 3.0, 0.25)
    rng = np.random.default_rng(11)
    u = rng.standard_normal(g.shape) * np.pi
    path = tmp_path / "field.snap"
    fd.write_snapshot(g, u, str(path))
    g2, u2 = fd.read_snapshot(str(path))
    assert g2 == g
    assert u2.shape == u.shape
    np.testing.assert_array_equal(u, u2)


def test_snapshot_bad_header(tmp_path):
    path = tmp_path / "bad.snap"
    path.write_text("not a header\n1.0\n2.0\n")
    with pytest.raises(ValueError, match="invalid-parameter"):
        fd.read_snapshot(str(path))
