"""Boundary geometry: arc-length parametrized planar curves and sphere grids.

Planar curves are stored as a truncated Fourier series of a raw 2*pi-periodic
parametrization.  The discretized curve lives on ``M = 2N + 1`` nodes that are
uniform in arc length, which is the node set every 2D operator is assembled on.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometryError",
    "Curve2D",
    "SphereGrid",
    "PRESETS",
    "build_preset_curve",
    "reparametrize_arclength",
    "build_sphere_grid",
    "sphere_grid_size",
]


class GeometryError(ValueError):
    """Invalid or unsupported geometry."""


def _eval_series(coeffs, theta, deriv=0):
    """Evaluate sum_k c_k (ik)^d e^{ik theta}, coefficients ordered k = -K..K."""
    K = (len(coeffs) - 1) // 2
    k = np.arange(-K, K + 1)
    theta = np.asarray(theta, dtype=float)
    phase = np.exp(1j * np.multiply.outer(theta, k))
    return (phase * ((1j * k) ** deriv * coeffs)).sum(axis=-1).real


def _coeffs_from_samples(f, K):
    n = len(f)
    fh = np.fft.fft(f) / n
    k = np.arange(-K, K + 1)
    return fh[k % n]


def _self_intersects(pts):
    """Segment-crossing test for the closed polygon through ``pts``."""
    a = pts
    b = np.roll(pts, -1, axis=0)
    n = len(pts)

    def orient(p, q, r):
        return np.sign((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                       - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    o1 = orient(a[i], b[i], a[j])
    o2 = orient(a[i], b[i], b[j])
    o3 = orient(a[j], b[j], a[i])
    o4 = orient(a[j], b[j], b[i])
    return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))


@dataclass(frozen=True, eq=False)
class Curve2D:
    """Smooth closed counter-clockwise curve sampled uniformly in arc length.

    ``coeffs_x``/``coeffs_y`` hold the raw parametrization theta -> (x, y)
    (Fourier modes -K..K).  Node j sits at arc length ``s[j] = j * length / M``.
    """

    name: str
    params: dict
    coeffs_x: np.ndarray
    coeffs_y: np.ndarray
    n: int
    n_modes: int
    length: float
    speed_coeffs: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    tangent: np.ndarray = field(repr=False)
    normal: np.ndarray = field(repr=False)
    curvature: np.ndarray = field(repr=False)

    @property
    def fourier_coeffs_x(self):
        return self.coeffs_x

    @property
    def fourier_coeffs_y(self):
        return self.coeffs_y

    @property
    def arclength_nodes(self):
        return self.s

    @property
    def normal_at_node(self):
        return self.normal

    @property
    def n_nodes(self):
        return 2 * self.n + 1

    @property
    def t(self):
        """Node positions on the unit torus, t = s / length."""
        return np.arange(self.n_nodes) / self.n_nodes

    @property
    def zeta(self):
        """Nodes as complex numbers x1 + i x2."""
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def tangent_c(self):
        return self.tangent[:, 0] + 1j * self.tangent[:, 1]

    def raw(self, theta, deriv=0):
        return np.stack([_eval_series(self.coeffs_x, theta, deriv),
                         _eval_series(self.coeffs_y, theta, deriv)], axis=-1)

    def arclength_of(self, theta):
        """Cumulative arc length s(theta) with s(0) = 0."""
        return _cumulative_length(self.speed_coeffs, theta)

    def theta_at(self, s, tol=1e-14, maxiter=50):
        """Invert s(theta) by Newton iteration (vectorized)."""
        s = np.asarray(s, dtype=float)
        theta = 2 * np.pi * s / self.length
        for _ in range(maxiter):
            v = np.linalg.norm(self.raw(theta, 1), axis=-1)
            step = (self.arclength_of(theta) - s) / v
            theta = theta - step
            if np.max(np.abs(step), initial=0.0) < tol:
                return theta
        if np.max(np.abs(step), initial=0.0) < 1e-12:
            return theta
        raise GeometryError(
            f"arc-length inversion did not converge (last step {np.max(np.abs(step)):.2e})")

    def point_at(self, s):
        """gamma(s), tangent and outward normal at arbitrary arc lengths."""
        theta = self.theta_at(s)
        d1 = self.raw(theta, 1)
        tau = d1 / np.linalg.norm(d1, axis=-1)[..., None]
        nu = np.stack([tau[..., 1], -tau[..., 0]], axis=-1)
        return self.raw(theta), tau, nu

    def spectral_speed(self):
        """|d gamma/ds| at the nodes from spectral differentiation of the node positions."""
        M = self.n_nodes
        k = np.fft.fftfreq(M, 1.0 / M)
        dz = np.fft.ifft(np.fft.fft(self.zeta) * 2j * np.pi * k / self.length)
        return np.abs(dz)

    def signed_area(self):
        th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
        p, d = self.raw(th), self.raw(th, 1)
        return 0.5 * np.mean(p[:, 0] * d[:, 1] - p[:, 1] * d[:, 0]) * 2 * np.pi

    def to_json(self):
        return json.dumps({"name": self.name, "params": self.params,
                           "n_modes": self.n_modes, "length": self.length},
                          sort_keys=True)


def _cumulative_length(vh, theta):
    K = (len(vh) - 1) // 2
    k = np.arange(-K, K + 1)
    theta = np.asarray(theta, dtype=float)
    nz = k != 0
    per = (vh[nz] * (np.exp(1j * np.multiply.outer(theta, k[nz])) - 1) / (1j * k[nz])).sum(-1)
    return (vh[K] * theta + per).real


PRESETS = {
    "circle": {"r": 1.0},
    "ellipse": {"a": 1.0, "b": 0.6},
    "bean": {"r": 1.0, "e2": 0.2, "e3": 0.1},
}


def _raw_preset(name, params):
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    if name == "circle":
        x, y = params["r"] * np.cos(th), params["r"] * np.sin(th)
    elif name == "ellipse":
        x, y = params["a"] * np.cos(th), params["b"] * np.sin(th)
    elif name == "bean":
        rad = params["r"] * (1 + params["e2"] * np.cos(2 * th) + params["e3"] * np.sin(3 * th))
        x, y = rad * np.cos(th), rad * np.sin(th)
    else:
        raise GeometryError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return _coeffs_from_samples(x, 8), _coeffs_from_samples(y, 8)


def build_preset_curve(name, n=64, n_modes=None, **params):
    """Build a preset curve discretized on 2n + 1 arc-length nodes."""
    if name not in PRESETS:
        raise GeometryError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    full = dict(PRESETS[name])
    unknown = set(params) - set(full)
    if unknown:
        raise GeometryError(f"unknown parameters for {name}: {sorted(unknown)}")
    full.update({k: float(v) for k, v in params.items()})
    positive = ("r", "a", "b")
    if any(full[k] <= 0 for k in positive if k in full):
        raise GeometryError(f"shape parameters must be positive, got {full}")
    if name == "bean" and abs(full["e2"]) + abs(full["e3"]) >= 1:
        raise GeometryError("bean perturbation must keep the radius positive")
    cx, cy = _raw_preset(name, full)
    return reparametrize_arclength(cx, cy, n, n_modes=n_modes, name=name, params=full)


def reparametrize_arclength(coeffs_x, coeffs_y, n, n_modes=None, name="custom", params=None):
    """Resample a raw Fourier curve at 2n + 1 nodes uniform in arc length.

    ``n_modes`` is the number of samples used to expand the speed |gamma'|; the
    arc-length function is integrated from that expansion exactly.
    """
    coeffs_x = np.asarray(coeffs_x, dtype=complex)
    coeffs_y = np.asarray(coeffs_y, dtype=complex)
    if n < 1:
        raise GeometryError("n must be positive")
    n_modes = int(n_modes or max(1024, 8 * n))

    probe = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    pts = np.stack([_eval_series(coeffs_x, probe), _eval_series(coeffs_y, probe)], -1)
    area = 0.5 * np.mean(pts[:, 0] * _eval_series(coeffs_y, probe, 1)
                         - pts[:, 1] * _eval_series(coeffs_x, probe, 1)) * 2 * np.pi
    if area < 0:
        # theta -> -theta reverses orientation
        coeffs_x, coeffs_y = coeffs_x[::-1].copy(), coeffs_y[::-1].copy()
        pts = pts[::-1]
    if _self_intersects(pts):
        raise GeometryError(f"curve {name!r} is self-intersecting for params {params}")

    th = 2 * np.pi * np.arange(n_modes) / n_modes
    speed = np.hypot(_eval_series(coeffs_x, th, 1), _eval_series(coeffs_y, th, 1))
    if speed.min() <= 0:
        raise GeometryError("raw parametrization is singular")
    K = n_modes // 2 - 1
    vh = _coeffs_from_samples(speed, K)
    # drop modes below roundoff so later evaluations stay cheap
    big = np.nonzero(np.abs(vh) > 1e-15 * abs(vh[K]))[0]
    Kt = max(int(np.abs(big - K).max()), 8)
    vh = vh[K - Kt:K + Kt + 1]
    K = Kt
    length = 2 * np.pi * vh[K].real

    M = 2 * n + 1
    s = length * np.arange(M) / M
    theta = 2 * np.pi * s / length
    for _ in range(50):
        v = np.hypot(_eval_series(coeffs_x, theta, 1), _eval_series(coeffs_y, theta, 1))
        step = (_cumulative_length(vh, theta) - s) / v
        theta = theta - step
        if np.max(np.abs(step)) < 1e-14:
            break
    if np.max(np.abs(step)) > 1e-12:
        raise GeometryError(f"arc-length Newton iteration stalled, residual {np.max(np.abs(step)):.2e}")

    d1 = np.stack([_eval_series(coeffs_x, theta, 1), _eval_series(coeffs_y, theta, 1)], -1)
    d2 = np.stack([_eval_series(coeffs_x, theta, 2), _eval_series(coeffs_y, theta, 2)], -1)
    v = np.linalg.norm(d1, axis=-1)
    tau = d1 / v[:, None]
    nu = np.stack([tau[:, 1], -tau[:, 0]], -1)
    kappa = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / v ** 3
    points = np.stack([_eval_series(coeffs_x, theta), _eval_series(coeffs_y, theta)], -1)
    return Curve2D(name=name, params=dict(params or {}), coeffs_x=coeffs_x, coeffs_y=coeffs_y,
                   n=n, n_modes=n_modes, length=float(length), speed_coeffs=vh, theta=theta,
                   s=s, points=points, tangent=tau, normal=nu, curvature=kappa)


def sphere_grid_size(level):
    """Number of Gauss-Legendre colatitudes used at a refinement level."""
    return 6 + 8 * level


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Gauss-Legendre x uniform-azimuth product grid on the unit sphere.

    Nodes are stored ring by ring (colatitude index major).  ``antipode[i]`` is
    the index of ``-nodes[i]``; the coordinates are mirrored exactly.
    """

    level: int
    n_theta: int
    n_phi: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    antipode: np.ndarray = field(repr=False)

    @property
    def normals(self):
        return self.nodes

    @property
    def antipodal_map(self):
        return self.antipode

    @property
    def size(self):
        return len(self.weights)

    @property
    def degree(self):
        """Polynomial degree integrated exactly."""
        return 2 * self.n_theta - 1


def build_sphere_grid(level=2, n_theta=None):
    if level < 1 and n_theta is None:
        raise GeometryError("level must be >= 1")
    nt = int(n_theta or sphere_grid_size(level))
    nph = 2 * nt
    ct, gw = np.polynomial.legendre.leggauss(nt)
    ct = 0.5 * (ct - ct[::-1])
    gw = 0.5 * (gw + gw[::-1])
    theta_r = np.arccos(ct)
    phi_r = 2 * np.pi * np.arange(nph) / nph
    TH, PH = np.meshgrid(theta_r, phi_r, indexing="ij")
    st = np.sqrt(1 - ct ** 2)
    X = np.stack([st[:, None] * np.cos(PH), st[:, None] * np.sin(PH),
                  np.broadcast_to(ct[:, None], TH.shape)], -1)
    a, k = np.meshgrid(np.arange(nt), np.arange(nph), indexing="ij")
    anti = ((nt - 1 - a) * nph + (k + nph // 2) % nph).ravel()
    X = X.reshape(-1, 3)
    second = (k >= nph // 2).ravel()
    X[second] = -X[anti[second]]
    w = (gw[:, None] * np.full(nph, 2 * np.pi / nph)).ravel()
    return SphereGrid(level=level, n_theta=nt, n_phi=nph, theta=TH.ravel(), phi=PH.ravel(),
                      nodes=X, weights=w, antipode=anti)
