import numpy as np
import pytest
from hypothesis import given, strategies as st

from diracbie.geometry import (GeometryError, build_preset_curve, build_sphere_grid,
                               reparametrize_arclength, sphere_grid_size)

# perimeters from independent quadrature: 4 E(1 - b^2/a^2) for the ellipse,
# mpmath quad of sqrt(rho^2 + rho'^2) for the polar bean
ELLIPSE_LENGTH = 5.105399772679626
BEAN_LENGTH = 6.657389142734159


@pytest.mark.parametrize("name, length", [("circle", 2 * np.pi), ("ellipse", ELLIPSE_LENGTH),
                                          ("bean", BEAN_LENGTH)])
def test_preset_lengths(name, length):
    c = build_preset_curve(name, n=32)
    assert c.length == pytest.approx(length, rel=1e-13)


@pytest.mark.parametrize("name", ["circle", "ellipse", "bean"])
def test_nodes_are_unit_speed_and_equispaced(name):
    c = build_preset_curve(name, n=128)
    assert c.n_nodes == 257
    d = np.diff(np.r_[c.points, c.points[:1]], axis=0)
    # chord between equispaced arc-length nodes compared to a spectral arc length
    assert np.allclose(c.arclength_of(c.theta), c.s, atol=1e-12)
    assert np.abs(np.linalg.norm(d, axis=1) - c.length / c.n_nodes).max() < 1e-3
    assert np.abs(c.spectral_speed() - 1).max() < 1e-10


@pytest.mark.parametrize("name", ["circle", "ellipse", "bean"])
def test_frame_is_orthonormal_and_outward(name):
    c = build_preset_curve(name, n=128)
    assert np.allclose(np.linalg.norm(c.tangent, axis=1), 1, atol=1e-14)
    assert np.allclose(np.sum(c.tangent * c.normal, axis=1), 0, atol=1e-14)
    # outward normal has positive flux through the boundary: integral of x . nu = 2 area
    flux = np.mean(np.sum(c.points * c.normal, axis=1)) * c.length
    assert flux == pytest.approx(2 * c.signed_area(), rel=1e-10)
    assert c.signed_area() > 0


def test_circle_geometry_is_exact():
    c = build_preset_curve("circle", n=16, r=2.0)
    assert c.length == pytest.approx(4 * np.pi, rel=1e-14)
    assert np.allclose(c.curvature, 0.5, atol=1e-12)
    ang = 2 * np.pi * c.t
    assert np.allclose(c.points, 2 * np.c_[np.cos(ang), np.sin(ang)], atol=1e-12)
    assert np.allclose(c.normal, np.c_[np.cos(ang), np.sin(ang)], atol=1e-12)


def test_total_curvature_is_two_pi():
    c = build_preset_curve("bean", n=64)
    assert np.mean(c.curvature) * c.length == pytest.approx(2 * np.pi, rel=1e-10)


def test_clockwise_input_is_reoriented():
    ccw = build_preset_curve("ellipse", n=16)
    cw = reparametrize_arclength(ccw.coeffs_x[::-1], ccw.coeffs_y[::-1], 16)
    assert cw.signed_area() > 0
    assert cw.length == pytest.approx(ccw.length, rel=1e-13)


@pytest.mark.parametrize("name, params", [("ellipse", {"a": -1.0}), ("bean", {"e2": 0.7, "e3": 0.4}),
                                          ("circle", {"a": 1.0}), ("square", {})])
def test_invalid_presets_raise(name, params):
    with pytest.raises(GeometryError):
        build_preset_curve(name, **params)


def test_self_intersection_rejected():
    # figure eight x = sin t, y = sin 2t / 2, phase-shifted off the probe nodes
    K = 8
    cx = np.zeros(2 * K + 1, complex)
    cy = np.zeros(2 * K + 1, complex)
    cx[K + 1], cx[K - 1] = -0.5j, 0.5j
    cy[K + 2], cy[K - 2] = -0.25j, 0.25j
    shift = np.exp(0.1j * np.arange(-K, K + 1))
    cx, cy = cx * shift, cy * shift
    with pytest.raises(GeometryError, match="self-intersecting"):
        reparametrize_arclength(cx, cy, 8)


def test_point_at_matches_nodes():
    c = build_preset_curve("bean", n=20)
    g, tau, nu = c.point_at(c.s[::5])
    assert np.allclose(g, c.points[::5], atol=1e-12)
    assert np.allclose(tau, c.tangent[::5], atol=1e-12)
    assert np.allclose(nu, c.normal[::5], atol=1e-12)


@given(a=st.floats(0.3, 3.0), b=st.floats(0.3, 3.0), n=st.integers(4, 40))
def test_ellipse_arclength_property(a, b, n):
    c = build_preset_curve("ellipse", n=n, a=a, b=b)
    pts = c.points
    assert np.allclose((pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2, 1, atol=1e-10)
    assert np.allclose(c.arclength_of(c.theta), c.s, atol=1e-10 * c.length)
    assert c.length <= 2 * np.pi * max(a, b) + 1e-12


@pytest.mark.parametrize("level", [1, 2, 3])
def test_sphere_grid_quadrature(level):
    g = build_sphere_grid(level)
    assert g.n_theta == sphere_grid_size(level)
    assert g.weights.sum() == pytest.approx(4 * np.pi, rel=1e-14)
    x = g.nodes
    assert np.dot(g.weights, x[:, 0] ** 2) == pytest.approx(4 * np.pi / 3, rel=1e-13)
    # odd monomials vanish, x^4 integrates to 4 pi / 5
    assert abs(np.dot(g.weights, x[:, 2] ** 3)) < 1e-13
    assert np.dot(g.weights, x[:, 2] ** 4) == pytest.approx(4 * np.pi / 5, rel=1e-13)
    assert np.allclose(np.linalg.norm(x, axis=1), 1, atol=1e-15)


def test_sphere_antipodal_map_is_exact():
    g = build_sphere_grid(2)
    a = g.antipodal_map
    assert np.array_equal(g.nodes[a], -g.nodes)
    assert np.array_equal(a[a], np.arange(g.size))
    assert np.array_equal(g.weights[a], g.weights)
