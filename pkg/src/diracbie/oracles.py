"""Brute-force reference values for single matrix entries of the 2D operators.

These deliberately avoid the assembly machinery: inner integrals run over the
raw parameter of the curve, principal values use symmetric pairing
theta0 +- u, and integrals go through adaptive quadrature.
They are slow and meant for spot checks at modest N.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import k0, k1

__all__ = ["R_entry_oracle", "C_entry_oracle"]


def _outer(curve, n_outer):
    """Outer arc-length nodes t_j = j / n_outer and their raw parameters."""
    t = np.arange(n_outer) / n_outer
    th = curve.theta_at(t * curve.length)
    g = curve.raw(th)
    return t, th, g[..., 0] + 1j * g[..., 1]


def _inner(curve, th):
    """Position, complex derivative and arc-length fraction at raw parameters th."""
    g = curve.raw(th)
    d = curve.raw(th, 1)
    return g[..., 0] + 1j * g[..., 1], d[..., 0] + 1j * d[..., 1], curve.arclength_of(th) / curve.length


def _paired_integral(f, upper, u0=1e-3, quad_kw=None):
    """int_0^upper f(u) du for a smooth vector integrand; Gauss on [0, u0] keeps u = 0 out."""
    x, w = np.polynomial.legendre.leggauss(6)
    head = sum(wi * f(u0 * (xi + 1) / 2) for xi, wi in zip(x, w)) * u0 / 2
    tail, _ = quad_vec(f, u0, upper, **(quad_kw or {}))
    return head + tail


def R_entry_oracle(curve, m, n, adjoint=False, n_outer=192):
    """<R e_n, e_m> with the principal value taken by symmetric pairing theta0 +- u."""
    t, th0, zt = _outer(curve, n_outer)
    dz0 = _inner(curve, th0)[1]
    taut = dz0 / np.abs(dz0)

    def kern(th):
        z, dz, tt = _inner(curve, th)
        if adjoint:
            k = (2j / np.pi) * taut.conj() * np.abs(dz) / (zt - z).conj()
        else:
            k = (2j / np.pi) * dz / (zt - z)
        return k * np.exp(2j * np.pi * n * tt)

    inner = _paired_integral(lambda u: kern(th0 + u) + kern(th0 - u), np.pi,
                             quad_kw=dict(epsabs=1e-12, epsrel=1e-11, limit=400))
    return np.mean(np.exp(-2j * np.pi * m * t) * inner)


def _G2(z, m_mass, w, r):
    """Kernel of C_z in components: returns the 2x2 entries as an array (..., 2, 2)."""
    k = np.sqrt(m_mass ** 2 - z ** 2)
    a = 1j * k / (2 * np.pi) * k1(k * r) / r
    b = k0(k * r) / (2 * np.pi)
    out = np.empty(w.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = b * (z + m_mass)
    out[..., 1, 1] = b * (z - m_mass)
    out[..., 0, 1] = a * w.conj()
    out[..., 1, 0] = a * w
    return out


def C_entry_oracle(curve, z, m_mass, row, col, n_outer=192):
    """<C_z (e_n in channel b), e_m in channel a> for row = (a, m), col = (b, n).

    Log singularities are absorbed by the substitution u = v^2 after pairing.
    """
    (ca, mm), (cb, nn) = row, col
    t, th0, zt = _outer(curve, n_outer)

    def half(th):
        zz, dz, tt = _inner(curve, th)
        w = zt - zz
        r = np.abs(w)
        hit = r == 0
        # coincident points carry zero measure
        val = _G2(z, m_mass, w, np.where(hit, 1.0, r))[..., ca, cb]
        return np.where(hit, 0.0, val) * np.abs(dz) * np.exp(2j * np.pi * nn * tt)

    def integrand(v):
        u = v * v
        return (half(th0 + u) + half(th0 - u)) * 2 * v

    kw = dict(epsabs=1e-12, epsrel=1e-11, limit=400)
    if ca == cb:
        inner, _ = quad_vec(integrand, 0.0, np.sqrt(np.pi), **kw)
    else:
        # the paired Cauchy part cancels in floating point near v = 0; keep quad_vec away
        inner = _paired_integral(integrand, np.sqrt(np.pi), u0=0.03, quad_kw=kw)
    return np.mean(np.exp(-2j * np.pi * mm * t) * inner)
