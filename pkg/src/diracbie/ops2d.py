"""Discrete 2D boundary operators in the pulled-back trigonometric basis.

Every operator is assembled on the 2N+1 arc-length nodes and moved to Fourier
coefficients by the exact similarity F A F^{-1}, so products of discrete
operators (including multiplication operators) compose without extra error.

Singular parts:
  * Cauchy kernels: subtract the unit-circle kernel -4/(e^{2 pi i (t - tau)} - 1),
    whose action is diag(2 sgn n) exactly; the rest is smooth and handled by
    the trapezoid rule.
  * K_0 / K_1 log singularities: Kress splitting against log(4 sin^2 pi(t - tau))
    with exact Fourier weights.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.special import i0, i1

from .geometry import reparametrize_arclength
from .kernels import SpectralPoint, k0_regular, k1_regular
from .trigcalc import BlockOperator, TrigSpace

__all__ = [
    "AliasingError", "Assembly2D",
    "assemble_R", "assemble_Rstar", "assemble_C", "log_weights",
    "remainder_K_decomposition", "remainder_K_boundary_triple", "decomposition_corollary",
]

EULER_GAMMA = 0.57721566490153286061
ALIAS_TAIL_TOL = 1e-6


class AliasingError(RuntimeError):
    """Smooth correction kernel is not resolved at this truncation."""


def _space_for(curve, space):
    if space is None:
        return TrigSpace(curve.n, curve.length)
    if space.M != curve.n_nodes:
        raise ValueError(f"space N={space.N} does not match curve with {curve.n_nodes} nodes")
    return space


def _pairs(curve):
    t = curve.t
    dt = t[:, None] - t[None, :]
    w = curve.zeta[:, None] - curve.zeta[None, :]
    return dt, w


def _circle_kernel(dt):
    """-4 / (e^{2 pi i dt} - 1) off the diagonal, 0 on it."""
    e = np.exp(2j * np.pi * dt) - 1
    np.fill_diagonal(e, 1.0)
    out = -4.0 / e
    np.fill_diagonal(out, 0.0)
    return out


def _check_tail(D, name):
    M = D.shape[0]
    N = (M - 1) // 2
    Dh = np.abs(np.fft.fft2(D))
    n = np.abs(np.fft.fftfreq(M, 1.0 / M))
    band = (n[:, None] > 3 * N / 4) | (n[None, :] > 3 * N / 4)
    # relative to an O(1) kernel so an identically vanishing correction passes
    tail = Dh[band].max() / max(Dh.max(), M * M)
    if tail > ALIAS_TAIL_TOL:
        raise AliasingError(f"{name}: smooth correction tail mass {tail:.1e} exceeds "
                            f"{ALIAS_TAIL_TOL:.0e} at N={N}; increase resolution")
    return tail


def _cauchy_correction(curve, adjoint=False):
    dt, w = _pairs(curve)
    tau = curve.tangent_c
    ell = curve.length
    off = ~np.eye(curve.n_nodes, dtype=bool)
    k = np.zeros_like(w)
    if adjoint:
        num = np.broadcast_to(tau.conj()[:, None], w.shape)
        k[off] = (2j / np.pi) * ell * num[off] / w.conj()[off]
    else:
        num = np.broadcast_to(tau[None, :], w.shape)
        k[off] = (2j / np.pi) * ell * num[off] / w[off]
    D = k - _circle_kernel(dt)
    np.fill_diagonal(D, curve.curvature * ell / np.pi - 2.0)
    return D


def _assemble_cauchy(curve, space, adjoint, check):
    space = _space_for(curve, space)
    D = _cauchy_correction(curve, adjoint)
    if check:
        _check_tail(D, "R*" if adjoint else "R")
    mat = np.diag(2.0 * np.where(space.modes >= 0, 1.0, -1.0)).astype(complex)
    mat = mat + space.to_coef(D / space.M)
    return BlockOperator(mat, space, channels=1, claimed_order=0.0,
                         name="R*" if adjoint else "R")


def assemble_R(curve, space=None, check_aliasing=True):
    """Cauchy-type operator R = 2 C_Sigma (scalar; acts componentwise on C^2)."""
    return _assemble_cauchy(curve, space, False, check_aliasing)


def assemble_Rstar(curve, space=None, check_aliasing=True):
    """Formal adjoint of R, assembled from its own kernel."""
    return _assemble_cauchy(curve, space, True, check_aliasing)


def log_weights(M):
    """Nodal weights integrating log(4 sin^2 pi(t_i - tau)) phi(tau) exactly for trig polynomials."""
    N = (M - 1) // 2
    n = np.arange(-N, N + 1)
    lam = np.zeros(len(n))
    lam[n != 0] = -1.0 / np.abs(n[n != 0])
    t = np.arange(M) / M
    diff = t[:, None] - t[None, :]
    # real and even in n, so a cosine sum suffices
    W = lam[N] + 2 * np.einsum("k,ijk->ij", lam[N + 1:],
                               np.cos(2 * np.pi * diff[..., None] * n[N + 1:]))
    return W / M


def _log4sin2(dt):
    s = np.abs(np.sin(np.pi * dt))
    np.fill_diagonal(s, 1.0)
    return np.log(4 * s * s), s


def _c_blocks(curve, p):
    """Nodal matrices of S_k and of the smooth parts of the off-diagonal blocks."""
    M = curve.n_nodes
    ell = curve.length
    k = p.k
    dt, w = _pairs(curve)
    r = np.abs(w)
    np.fill_diagonal(r, 1.0)
    x = k * r
    L4, s = _log4sin2(dt)
    W = log_weights(M)
    diag = np.eye(M, dtype=bool)

    I0x, I1x = i0(x), i1(x)
    # log(x/2) - log(4 sin^2)/2, smooth across the diagonal
    rel = np.log(x / (4 * s))

    A = -(ell / (4 * np.pi)) * I0x
    np.fill_diagonal(A, -(ell / (4 * np.pi)))
    B = (ell / (2 * np.pi)) * (k0_regular(x) - I0x * rel)
    np.fill_diagonal(B, (ell / (2 * np.pi)) * (-EULER_GAMMA - np.log(k * ell / (4 * np.pi))))
    S = A * W + B / M

    wbar = w.conj()
    blocks = {}
    for key, ww in (("ur", wbar), ("ll", w)):
        a = ell * (1j / (4 * np.pi)) * ww * k * k * I1x / x
        b = ell * (1j / (2 * np.pi)) * (ww / r ** 2) * (x * I1x * rel + k1_regular(x))
        a[diag] = 0.0
        b[diag] = 0.0
        blocks[key] = a * W + b / M
    if p.branch == -1:
        # continuation terms of K_0, K_1 to the negative axis: smooth, trapezoid rule
        extra = -(k / 2) * I1x / r
        extra[diag] = 0.0
        blocks["ur"] = blocks["ur"] + extra * wbar * ell / M
        blocks["ll"] = blocks["ll"] + extra * w * ell / M
        S_flip = (-0.5j) * I0x * ell / M
        np.fill_diagonal(S_flip, -0.5j * ell / M)
        blocks["flip"] = S_flip
    return S, blocks


def assemble_C(curve, space, p, R=None, Rstar=None):
    """Single layer boundary operator C_z as a 2x2 block operator on C^2 densities."""
    if not isinstance(p, SpectralPoint):
        raise TypeError("p must be a SpectralPoint")
    if not p.m > 0:
        raise ValueError("mass must be positive (m = 0 leaves no spectral gap)")
    if not abs(p.z) < p.m:
        raise ValueError(f"z outside spectral gap: z={p.z}, m={p.m}")
    space = _space_for(curve, space)
    R = R if R is not None else assemble_R(curve, space)
    Rstar = Rstar if Rstar is not None else assemble_Rstar(curve, space)
    S, blk = _c_blocks(curve, p)
    nu = curve.normal
    num = nu[:, 0] - 1j * nu[:, 1]
    nup = nu[:, 0] + 1j * nu[:, 1]
    Sk = space.to_coef(S)
    ur = -0.25j * R.matrix @ space.mult(num) + space.to_coef(blk["ur"])
    ll = 0.25j * space.mult(nup) @ Rstar.matrix + space.to_coef(blk["ll"])
    d1 = (p.z + p.m) * Sk
    d2 = (p.z - p.m) * Sk
    if "flip" in blk:
        fl = space.to_coef(blk["flip"])
        d1 = d1 + (p.z + p.m) * fl
        d2 = d2 + (p.z - p.m) * fl
    mat = np.block([[d1, ur], [ll, d2]])
    return BlockOperator(mat, space, channels=2, claimed_order=0.0, name="C_z")


class Assembly2D:
    """Cached discrete operators for one curve, truncation and spectral point.

    Operators are assembled on an oversampled work space of degree
    ``max(oversample * N, N + pad)`` and compositions are formed there; ``compress`` restricts
    a work-space operator to the modes |n| <= N of the reported space.  With
    ``oversample=1`` the circulant wrap-around of the nodal algebra leaves an
    O(N^-2) defect on the highest modes of products like (C_z sigma.nu)^2.
    """

    def __init__(self, curve, p, c_lambda=1.0, oversample=2, pad=64, check_aliasing=True):
        if oversample < 1 or pad < 0:
            raise ValueError("oversample must be >= 1 and pad >= 0")
        self.curve = curve
        self.p = p
        self.c_lambda = c_lambda
        self.oversample = int(oversample)
        self.space = TrigSpace(curve.n, curve.length, c_lambda)
        n_work = curve.n if oversample == 1 else max(self.oversample * curve.n, curve.n + pad)
        if n_work == curve.n:
            self.work_curve = curve
        else:
            self.work_curve = reparametrize_arclength(
                curve.coeffs_x, curve.coeffs_y, n_work,
                n_modes=curve.n_modes, name=curve.name, params=curve.params)
        self.work = TrigSpace(self.work_curve.n, curve.length, c_lambda)
        self.check_aliasing = check_aliasing
        keep = np.abs(self.work.modes) <= self.space.N
        self._keep = {1: keep, 2: np.concatenate([keep, keep])}

    @property
    def N(self):
        return self.space.N

    def compress(self, op, name=None, order=None):
        """Restrict a work-space operator to the reported degree-N space."""
        A = op.matrix if isinstance(op, BlockOperator) else np.asarray(op)
        ch = A.shape[0] // self.work.M
        k = self._keep[ch]
        if name is None and isinstance(op, BlockOperator):
            name = op.name
        if order is None and isinstance(op, BlockOperator):
            order = op.claimed_order
        return BlockOperator(A[np.ix_(k, k)], self.space, ch, order, name or "")

    def _op(self, A, name, order=None, channels=2):
        return BlockOperator(A, self.work, channels=channels, claimed_order=order, name=name)

    @cached_property
    def R(self):
        return assemble_R(self.work_curve, self.work, self.check_aliasing)

    @cached_property
    def Rstar(self):
        return assemble_Rstar(self.work_curve, self.work, self.check_aliasing)

    @cached_property
    def C(self):
        return assemble_C(self.work_curve, self.work, self.p, self.R, self.Rstar)

    def lam(self, t, channels=2):
        return self._op(self.work.lambda_matrix(t, channels), f"Lambda^{t:g}", t / 2, channels)

    def proj(self, sign, channels=1):
        return self._op(self.work.projection_matrix(sign, channels), f"P{sign}", 0.0, channels)

    @cached_property
    def nu_minus(self):
        """Multiplication by nu_1 - i nu_2."""
        nu = self.work_curve.normal
        return self.work.mult(nu[:, 0] - 1j * nu[:, 1])

    @cached_property
    def nu_plus(self):
        nu = self.work_curve.normal
        return self.work.mult(nu[:, 0] + 1j * nu[:, 1])

    @cached_property
    def sigma_nu(self):
        Z = np.zeros_like(self.nu_minus)
        return self._op(np.block([[Z, self.nu_minus], [self.nu_plus, Z]]), "sigma.nu", 0.0)

    @cached_property
    def V(self):
        I = np.eye(self.work.M, dtype=complex)
        Z = np.zeros_like(I)
        return self._op(np.block([[I, Z], [Z, -1j * self.nu_minus]]), "V", 0.0)

    def identity(self, channels=2):
        return self._op(np.eye(channels * self.work.M, dtype=complex), "I", 0.0, channels)

    def block2(self, a, b, c, d, name=""):
        """2x2 block operator from scalar work-space operators (None means zero)."""
        M = self.work.M
        Z = np.zeros((M, M), dtype=complex)
        pick = [Z if x is None else (x.matrix if isinstance(x, BlockOperator) else x)
                for x in (a, b, c, d)]
        return self._op(np.block([[pick[0], pick[1]], [pick[2], pick[3]]]), name)

    def principal_decomposition(self):
        """[[(z+m) L^-2, -(i/4) R (nu_1 - i nu_2)], [(i/4)(nu_1 + i nu_2) R*, (z-m) L^-2]]."""
        z, m = self.p.z, self.p.m
        L2 = np.diag(self.work.lambda_symbol(-2)).astype(complex)
        return self.block2((z + m) * L2, -0.25j * self.R.matrix @ self.nu_minus,
                           0.25j * self.nu_plus @ self.Rstar.matrix, (z - m) * L2,
                           name="principal")

    def corollary_principal(self):
        """(1/2)(sigma.nu) V^* [[0, P- - P+], [P- - P+, 0]] V (sigma.nu)."""
        D = self.proj("-").matrix - self.proj("+").matrix
        X = self.block2(None, D, D, None)
        sn, V = self.sigma_nu, self.V
        return 0.5 * (sn @ V.adjoint() @ X @ V @ sn)


def remainder_K_decomposition(asm):
    """K = C_z minus its principal block part; expected of order -2."""
    return asm.compress(asm.C - asm.principal_decomposition(), "K_principal", -2.0)


def remainder_K_boundary_triple(asm):
    """K = 4 L V (s.n) C (s.n) V^* L + L [[0, R*], [R, 0]] L - 4 diag(z - m, z + m)."""
    z, m = asm.p.z, asm.p.m
    L = asm.lam(1)
    sn, V = asm.sigma_nu, asm.V
    lhs = 4.0 * (L @ V @ sn @ asm.C @ sn @ V.adjoint() @ L)
    flip = asm.block2(None, asm.Rstar, asm.R, None)
    I = np.eye(asm.work.M)
    const = asm.block2(4 * (z - m) * I, None, None, 4 * (z + m) * I)
    return asm.compress(lhs + L @ flip @ L - const, "K_boundary_triple", -1.0)


def decomposition_corollary(asm):
    """K = C_z - (1/2)(s.n) V^* [[0, P- - P+], [P- - P+, 0]] V (s.n); expected order -1."""
    return asm.compress(asm.C - asm.corollary_principal(), "K_corollary", -1.0)
