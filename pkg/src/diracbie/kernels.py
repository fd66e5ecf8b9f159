"""Dirac matrices, resolvent kernels and the singular kernels built from them.

All evaluators are vectorized over leading axes: a point array of shape
``(..., d)`` gives matrices of shape ``(..., n, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy import special

__all__ = [
    "SIGMA", "ALPHA", "BETA", "I2", "I4",
    "sigma_dot", "alpha_dot",
    "SpectralPoint", "bessel_k", "bessel_i",
    "k0_regular", "k1_regular",
    "eval_G2", "eval_G3", "eval_r3", "eval_r3_star", "eval_t3",
    "KernelSplit", "split_kernel_t",
]

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SIGMA = np.array([[[0, 1], [1, 0]],
                  [[0, -1j], [1j, 0]],
                  [[1, 0], [0, -1]]], dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)
ALPHA = np.array([np.block([[_Z2, s], [s, _Z2]]) for s in SIGMA])
BETA = np.block([[I2, _Z2], [_Z2, -I2]])


def sigma_dot(x):
    """sigma . x for real x of shape (..., 2) or (..., 3)."""
    x = np.asarray(x)
    d = x.shape[-1]
    return np.tensordot(x, SIGMA[:d], axes=([-1], [0]))


def alpha_dot(x):
    x = np.asarray(x)
    return np.tensordot(x, ALPHA[:x.shape[-1]], axes=([-1], [0]))


@dataclass(frozen=True)
class SpectralPoint:
    """Real spectral parameter z with mass m.

    ``k = sqrt(m^2 - z^2)`` and the square root sqrt(z^2 - m^2) = i k uses the
    branch with positive imaginary part.  ``branch=-1`` flips that choice and
    exists only to build negative controls.
    """

    z: float
    m: float
    branch: int = 1

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"mass must be non-negative, got m={self.m}")
        if abs(self.z) > self.m:
            raise ValueError(f"z outside spectral gap: z={self.z}, m={self.m}")
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")

    @property
    def k(self):
        return float(np.sqrt(self.m ** 2 - self.z ** 2))

    @property
    def sqrt_w(self):
        """sqrt(z^2 - m^2) on the selected branch."""
        return self.branch * 1j * self.k

    @property
    def in_gap(self):
        return self.m > 0 and abs(self.z) < self.m

    def require_gap(self):
        if not self.m > 0:
            raise ValueError("mass must be positive for boundary operators")
        if not abs(self.z) < self.m:
            raise ValueError(f"z outside spectral gap: z={self.z}, m={self.m}")
        return self


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("Bessel K needs strictly positive real argument")
    return x


def bessel_k(order, x):
    """Modified Bessel function of the second kind K_0 or K_1 for x > 0."""
    x = _check_positive(x)
    if order == 0:
        return special.k0(x)
    if order == 1:
        return special.k1(x)
    raise ValueError("only orders 0 and 1 are supported")


def bessel_i(order, x):
    x = np.asarray(x, dtype=float)
    if order == 0:
        return special.i0(x)
    if order == 1:
        return special.i1(x)
    raise ValueError("only orders 0 and 1 are supported")


# ascending-series coefficients of the log-free parts of K_0 and x K_1
_NSER = 30
_C0 = np.array([special.digamma(j + 1) / factorial(j) ** 2 for j in range(_NSER)])
_C1 = np.array([(special.digamma(j + 1) + special.digamma(j + 2))
                / (factorial(j) * factorial(j + 1)) for j in range(_NSER)])
_SERIES_MAX = 2.0


def _poly(c, q):
    out = np.zeros_like(q)
    for cj in c[::-1]:
        out = out * q + cj
    return out


def k0_regular(x):
    """K_0(x) + log(x/2) I_0(x), an entire function of x^2 (x >= 0)."""
    x = np.asarray(x, dtype=float)
    q = x * x / 4
    small = x <= _SERIES_MAX
    out = np.empty_like(x)
    out[small] = _poly(_C0, q[small])
    xs = x[~small]
    out[~small] = special.k0(xs) + np.log(xs / 2) * special.i0(xs)
    return out


def k1_regular(x):
    """x K_1(x) - 1 - x log(x/2) I_1(x), an entire function of x^2 (x >= 0)."""
    x = np.asarray(x, dtype=float)
    q = x * x / 4
    small = x <= _SERIES_MAX
    out = np.empty_like(x)
    out[small] = -q[small] * _poly(_C1, q[small])
    xs = x[~small]
    out[~small] = xs * special.k1(xs) - 1 - xs * np.log(xs / 2) * special.i1(xs)
    return out


def eval_G2(p, x):
    """Resolvent kernel of the 2D free Dirac operator at x != 0."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("G2 is singular at x = 0")
    kr = p.k * r
    if p.branch == 1:
        k0, k1 = special.k0(kr), special.k1(kr)
    else:
        # analytic continuation to the negative real axis
        k0 = special.k0(kr) - 1j * np.pi * special.i0(kr)
        k1 = -special.k1(kr) - 1j * np.pi * special.i1(kr)
    sx = sigma_dot(x / r[..., None])
    mass = p.z * I2 + p.m * SIGMA[2]
    a = np.asarray(p.sqrt_w / (2 * np.pi) * k1)
    b = np.asarray(k0 / (2 * np.pi))
    return a[..., None, None] * sx + b[..., None, None] * mass


def eval_G3(p, x):
    """Resolvent kernel of the 3D free Dirac operator at x != 0."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("G3 is singular at x = 0")
    kr = p.k * r
    e = np.exp(-kr) / (4 * np.pi * r)
    ax = alpha_dot(x)
    out = ((1 + kr) / r ** 2)[..., None, None] * 1j * ax + p.z * I4 + p.m * BETA
    return e[..., None, None] * out


def eval_r3(x, y, nu_y):
    """Riesz-type kernel -(sigma.(x-y))(sigma.nu(y)) / (pi |x-y|^3)."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("r(x, y) is singular at x = y")
    return -(sigma_dot(d) @ sigma_dot(nu_y)) / (np.pi * r ** 3)[..., None, None]


def eval_r3_star(x, y, nu_x):
    """The kernel r(y, x)^* of the formal adjoint."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("r(y, x) is singular at x = y")
    return -(sigma_dot(nu_x) @ sigma_dot(d)) / (np.pi * r ** 3)[..., None, None]


def eval_t3(p, x):
    """Off-diagonal block kernel (1 + k|x|) i (sigma.x) e^{-k|x|} / (4 pi |x|^3)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("t(x) is singular at x = 0")
    f = (1 + p.k * r) * np.exp(-p.k * r) / (4 * np.pi * r ** 3)
    return (1j * f)[..., None, None] * sigma_dot(x)


@dataclass(frozen=True)
class KernelSplit:
    """t(x) = i(sigma.x)/(4 pi |x|^3) + sum_k c_k (sigma.x)|x|^{2k} + sum_k d_k (sigma.x)|x|^{2k-1}.

    ``analytic`` holds the c_k (even powers, smooth), ``pseudo_homogeneous``
    the d_k (odd powers).  ``inverse_square`` is the coefficient of
    (sigma.x)|x|^{-2}, which vanishes identically.
    """

    analytic: np.ndarray
    pseudo_homogeneous: np.ndarray
    inverse_square: complex
    truncation_order: int

    @staticmethod
    def principal(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return (1j / (4 * np.pi * r ** 3))[..., None, None] * sigma_dot(x)

    def radial_parts(self, r):
        r = np.asarray(r, dtype=float)
        k = np.arange(self.truncation_order)
        even = (self.analytic * r[..., None] ** (2 * k)).sum(-1)
        odd = (self.pseudo_homogeneous * r[..., None] ** (2 * k - 1)).sum(-1)
        return even, odd

    def reconstruct(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        even, odd = self.radial_parts(r)
        scal = even + odd + self.inverse_square / r ** 2
        return self.principal(x) + scal[..., None, None] * sigma_dot(x)


def split_kernel_t(p, order=16):
    """Power-series split of t(x) from (1 + kr)e^{-kr} = sum_n a_n r^n."""
    if order < 1:
        raise ValueError("order must be >= 1")
    k = p.k
    n = np.arange(2 * order + 4)
    a = np.array([(-k) ** j * (1 - j) / factorial(j) for j in n])
    c = 1j * a[2 * np.arange(order) + 3] / (4 * np.pi)
    d = 1j * a[2 * np.arange(order) + 2] / (4 * np.pi)
    return KernelSplit(analytic=c, pseudo_homogeneous=d,
                       inverse_square=1j * a[1] / (4 * np.pi), truncation_order=order)
