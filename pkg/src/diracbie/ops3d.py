"""Boundary operators on the unit sphere in a spinor-harmonic Galerkin basis.

The discrete space is spanned by the spinor spherical harmonics Omega_{j,l,m}
with j <= L - 1/2, L = n_theta - 1.  It is invariant under every operator
assembled here (all are rotation covariant) and under multiplication by sigma.x,
so compositions inside the space are exact.  Matrix entries are

    A[b, c] = sum_i w_i Omega_b(x_i)^H (K Omega_c)(x_i)

over the product grid, which integrates these products exactly.  The action
(K Omega_c)(x) is computed with a polar rule rotated to put x at its pole:
Gauss-Legendre in the polar angle and an even number of azimuths, so the odd
part of a strongly singular kernel cancels ring by ring and the principal value
is the plain quadrature sum.  Only one target per latitude ring is integrated;
the rest follow from the rotation covariance of the kernels.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import eigh
from scipy.special import sph_harm_y_all

from .geometry import SphereGrid
from .kernels import SIGMA, SpectralPoint, eval_r3, eval_r3_star, eval_t3, sigma_dot, split_kernel_t
from .trigcalc import BlockOperator, operator_norm

__all__ = [
    "SpinorBasis", "Assembly3D", "SpectralSplit", "IndefiniteError",
    "assemble_S", "assemble_Lambda3", "assemble_R3", "assemble_Rstar3", "assemble_C3",
    "spectral_split_RplusRstar", "decomposition_corollary3", "isomorphism_check",
    "weighted_norm3", "richardson_weights",
]

log = logging.getLogger(__name__)


class IndefiniteError(RuntimeError):
    """S(-1) is not positive definite on the discrete space."""


@dataclass(frozen=True, eq=False)
class SpinorBasis:
    """Index set (j, l, m) of spinor spherical harmonics with j <= L - 1/2."""

    L: int
    j: np.ndarray
    l: np.ndarray
    m: np.ndarray

    @property
    def size(self):
        return len(self.j)

    def evaluate(self, theta, phi):
        """Values of every basis spinor, shape theta.shape + (2, size)."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        Y = sph_harm_y_all(self.L, self.L, theta, phi)
        Y = np.moveaxis(Y, (0, 1), (-2, -1))
        l, m = self.l, self.m
        m1 = np.round(m - 0.5).astype(int)
        m2 = np.round(m + 0.5).astype(int)
        up = self.j == l + 0.5
        a = np.where(up, np.sqrt((l + m + 0.5) / (2 * l + 1)), -np.sqrt((l - m + 0.5) / (2 * l + 1)))
        c = np.where(up, np.sqrt((l - m + 0.5) / (2 * l + 1)), np.sqrt((l + m + 0.5) / (2 * l + 1)))
        # negative orders sit at the tail of the order axis
        y1 = Y[..., l, m1] * (np.abs(m1) <= l)
        y2 = Y[..., l, m2] * (np.abs(m2) <= l)
        out = np.empty(theta.shape + (2, self.size), dtype=complex)
        out[..., 0, :] = a * y1
        out[..., 1, :] = c * y2
        return out

    def describe(self):
        return {"type": "spinor_harmonics", "L": self.L, "size": self.size}


def spinor_basis(L):
    js, ls, ms = [], [], []
    for twoj in range(1, 2 * L, 2):
        j = twoj / 2
        for twom in range(-twoj, twoj + 1, 2):
            for l in (j - 0.5, j + 0.5):
                js.append(j)
                ls.append(int(round(l)))
                ms.append(twom / 2)
    return SpinorBasis(L, np.array(js), np.array(ls), np.array(ms))


@dataclass(frozen=True)
class _PolarRule:
    points: np.ndarray      # (P, 3) around the north pole
    weights: np.ndarray     # (P,) including sin(theta')
    polar: np.ndarray       # (P,) geodesic distance to the pole


def _polar_rule(n_theta, n_phi, eps=0.0):
    u, gw = np.polynomial.legendre.leggauss(n_theta)
    half = (np.pi - eps) / 2
    t = eps + half * (u + 1)
    gw = gw * half
    f = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    T, Fp = np.meshgrid(t, f, indexing="ij")
    P = np.stack([np.sin(T) * np.cos(Fp), np.sin(T) * np.sin(Fp), np.cos(T)], -1).reshape(-1, 3)
    w = (gw[:, None] * np.sin(T) * 2 * np.pi / n_phi).reshape(-1)
    return _PolarRule(P, w, T.reshape(-1))


def richardson_weights(eps):
    """Weights c_i with sum_i c_i f(eps_i) = polynomial extrapolation of f to eps = 0."""
    eps = np.asarray(eps, dtype=float)
    c = np.ones(len(eps))
    for i in range(len(eps)):
        for k in range(len(eps)):
            if k != i:
                c[i] *= eps[k] / (eps[k] - eps[i])
    return c


def _yukawa(kappa, scale=1.0):
    def kern(x, Y):
        r = np.linalg.norm(x[None, :] - Y, axis=-1)
        v = scale * np.exp(-kappa * r) / (4 * np.pi * r)
        return v[:, None, None] * np.eye(2)
    return kern


_SECOND_KIND = {"R", "Rstar", "T", "Tm"}
# default exclusion radii in units of 1/L
EPS_GRID_SCALED = (0.1, 0.05, 0.025)


class Assembly3D:
    """Cached discrete operators on a sphere grid for one spectral point.

    ``pv="polar"`` takes the principal value directly with the ring-symmetric
    polar rule.  ``pv="richardson"`` excludes geodesic balls of radii
    ``eps_schedule`` (radians) and extrapolates to zero radius; the default
    schedule is EPS_GRID_SCALED / L, since the balls must be small against the
    wavelength pi / L of the top harmonics.  ``pv="naive"`` is the product-grid
    node sum with the self term dropped (a negative control).
    """

    def __init__(self, grid, p, c_lambda=1.0, pv="polar", eps_schedule=None,
                 t_mode="split", split_order=16, polar_factor=2):
        if not isinstance(grid, SphereGrid):
            raise TypeError("grid must be a SphereGrid")
        if pv not in ("polar", "richardson", "naive"):
            raise ValueError(f"unknown principal-value scheme {pv!r}")
        L = grid.n_theta - 1
        if eps_schedule is None:
            eps_schedule = tuple(e / L for e in EPS_GRID_SCALED)
        eps_schedule = tuple(float(e) for e in eps_schedule)
        if pv == "richardson":
            if len(eps_schedule) < 3 or any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
                raise ValueError("eps_schedule needs >= 3 strictly decreasing radii")
            if eps_schedule[0] * L > 0.5:
                log.warning("eps_schedule %s is coarse for L=%d; extrapolation is not asymptotic "
                            "until eps * L << 1", eps_schedule, L)
        if t_mode not in ("split", "direct"):
            raise ValueError("t_mode must be 'split' or 'direct'")
        self.grid = grid
        self.p = p
        self.c_lambda = float(c_lambda)
        self.pv = pv
        self.eps_schedule = tuple(eps_schedule)
        self.t_mode = t_mode
        self.split_order = split_order
        self.polar_factor = polar_factor
        self.basis = spinor_basis(grid.n_theta - 1)
        self.diagnostics = {}
        self._cache = {}

    # ----- basis and quadrature plumbing -------------------------------------

    @property
    def size(self):
        return self.basis.size

    @cached_property
    def _ring(self):
        g = self.grid
        nt, nph = g.n_theta, g.n_phi
        th = g.theta.reshape(nt, nph)[:, 0]
        ph = g.phi.reshape(nt, nph)[0]
        return th, ph

    @cached_property
    def Phi(self):
        return self.basis.evaluate(self.grid.theta, self.grid.phi)

    @cached_property
    def _project(self):
        return (self.Phi * self.grid.weights[:, None, None]).reshape(-1, self.size).conj().T

    def galerkin_nodal(self, f):
        """Galerkin matrix of multiplication by a 2x2 matrix field sampled at the grid nodes."""
        vals = np.einsum("nij,njb->nib", f, self.Phi).reshape(-1, self.size)
        return self._project @ vals

    def _integrate(self, kernels, rule):
        """Galerkin matrices for several kernels sharing one polar rule."""
        g, B = self.grid, self.basis
        nt, nph, nb = g.n_theta, g.n_phi, B.size
        th, ph = self._ring
        out = {name: np.empty((nt, nph, 2, nb), dtype=complex) for name in kernels}
        rot = np.exp(1j * np.outer(ph, B.m))
        Uph = np.stack([np.exp(-0.5j * ph), np.exp(0.5j * ph)], -1)
        for a in range(nt):
            c, s = np.cos(th[a]), np.sin(th[a])
            Ry = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
            P = rule.points @ Ry.T
            x = np.array([s, 0.0, c])
            vals = B.evaluate(np.arccos(np.clip(P[:, 2], -1, 1)),
                              np.arctan2(P[:, 1], P[:, 0])).reshape(-1, nb)
            for name, kern in kernels.items():
                K = kern(x, P) * rule.weights[:, None, None]
                res = K.transpose(1, 0, 2).reshape(2, -1) @ vals
                out[name][a] = Uph[:, :, None] * res[None, :, :] * rot[:, None, :]
        return {name: self._project @ o.reshape(-1, nb) for name, o in out.items()}

    def _integrate_naive(self, kernels):
        X = self.grid.nodes
        w = self.grid.weights
        out = {}
        for name, kern in kernels.items():
            rows = []
            for i in range(len(X)):
                mask = np.ones(len(X), dtype=bool)
                mask[i] = False
                K = kern(X[i], X[mask]) * w[mask, None, None]
                rows.append(np.einsum("pij,pjb->ib", K, self.Phi[mask]))
            out[name] = self._project @ np.asarray(rows).reshape(-1, self.size)
        return out

    def _rule(self, eps=0.0):
        nt = self.grid.n_theta
        return _polar_rule(self.polar_factor * nt, 2 * nt + 2, eps)

    def _assemble(self, kernels):
        todo = {k: v for k, v in kernels.items() if k not in self._cache}
        if not todo:
            return
        if self.pv == "naive":
            self._cache.update(self._integrate_naive(todo))
            return
        weak = {k: v for k, v in todo.items() if k not in _SECOND_KIND}
        strong = {k: v for k, v in todo.items() if k in _SECOND_KIND}
        if weak:
            self._cache.update(self._integrate(weak, self._rule()))
        if strong and self.pv == "polar":
            self._cache.update(self._integrate(strong, self._rule()))
        elif strong:
            levels = [self._integrate(strong, self._rule(e)) for e in self.eps_schedule]
            c = richardson_weights(self.eps_schedule)
            for name in strong:
                mats = [lv[name] for lv in levels]
                steps = [operator_norm(b - a) for a, b in zip(mats, mats[1:])]
                monotone = all(b < a for a, b in zip(steps, steps[1:]))
                self.diagnostics[f"richardson_{name}"] = {"steps": steps, "monotone": monotone}
                if not monotone:
                    log.warning("non-monotone extrapolation residuals for %s: %s", name, steps)
                self._cache[name] = sum(ci * Mi for ci, Mi in zip(c, mats))

    def _get(self, name, kern):
        if name not in self._cache:
            self._assemble({name: kern})
        return self._cache[name]

    def _op(self, A, name, order=None, channels=1):
        return BlockOperator(A, self.basis, channels, order, name)

    def prefetch(self):
        """Assemble every kernel of the standard suite in one pass over the grid."""
        self._assemble(self._kernels())

    def _kernels(self):
        kz = self.p.k
        ks = {"S_m1": _yukawa(1.0), "S_z": _yukawa(kz), "S_hat": _yukawa(0.0, 4.0),
              "R": lambda x, Y: eval_r3(x, Y, Y),
              "Rstar": lambda x, Y: eval_r3_star(x, Y, x)}
        if self.t_mode == "split":
            sp = split_kernel_t(self.p, self.split_order)

            def t_rem(x, Y):
                d = x[None, :] - Y
                even, odd = sp.radial_parts(np.linalg.norm(d, axis=-1))
                return (even + odd)[:, None, None] * sigma_dot(d)
            ks["T_rem"] = t_rem
        else:
            ks["T"] = lambda x, Y: eval_t3(self.p, x[None, :] - Y)
        return ks

    def _kernel(self, name):
        return self._kernels()[name]

    # ----- operators ---------------------------------------------------------

    def S(self, which="S_m1"):
        return self._op(self._get(which, self._kernel(which)), which, -0.5)

    @cached_property
    def sigma_nu(self):
        return self._op(self.galerkin_nodal(sigma_dot(self.grid.nodes)), "sigma.nu", 0.0)

    @cached_property
    def R(self):
        return self._op(self._get("R", self._kernel("R")), "R", 0.0)

    @cached_property
    def Rstar(self):
        return self._op(self._get("Rstar", self._kernel("Rstar")), "R*", 0.0)

    @cached_property
    def T(self):
        if self.t_mode == "direct":
            return self._op(self._get("T", self._kernel("T")), "T", 0.0)
        rem = self._get("T_rem", self._kernel("T_rem"))
        return self._op(-0.25j * self.R.matrix @ self.sigma_nu.matrix + rem, "T", 0.0)

    @cached_property
    def _s_eig(self):
        S = self.S("S_m1").matrix
        herm = operator_norm(S - S.conj().T)
        s, U = eigh((S + S.conj().T) / 2)
        if s.min() <= 0:
            raise IndefiniteError(f"S(-1) has eigenvalue {s.min():.3e} <= 0; grid too coarse")
        self.diagnostics["S_m1_hermitian_defect"] = herm
        return s, U

    def lam(self, t, channels=1):
        """Lambda^t = (S(-1)^{-1} + c_Lambda)^{t/2}."""
        s, U = self._s_eig
        A = (U * (1 / s + self.c_lambda) ** (t / 2)) @ U.conj().T
        return self._op(np.kron(np.eye(channels), A), f"Lambda^{t:g}", t / 2, channels)

    def block(self, blocks, name=""):
        nb = self.size
        Z = np.zeros((nb, nb), dtype=complex)
        rows = [[Z if b is None else (b.matrix if isinstance(b, BlockOperator) else b)
                 for b in row] for row in blocks]
        return self._op(np.block(rows), name, None, len(blocks))

    @cached_property
    def C(self):
        self.p.require_gap()
        z, m = self.p.z, self.p.m
        S = self.S("S_z").matrix
        return self.block([[(z + m) * S, self.T], [self.T, (z - m) * S]], "C_z")

    @cached_property
    def alpha_nu(self):
        sn = self.sigma_nu
        return self.block([[None, sn], [sn, None]], "alpha.nu")

    @cached_property
    def V(self):
        return self.block([[np.eye(self.size), None], [None, -1j * self.sigma_nu.matrix]], "V")

    def C_m_direct(self):
        """z -> m limit of C_z assembled from the k = 0 kernels."""
        m = self.p.m
        tm = self._get("Tm", lambda x, Y: (1j / (4 * np.pi)) * sigma_dot(x[None, :] - Y)
                       / (np.linalg.norm(x[None, :] - Y, axis=-1) ** 3)[:, None, None])
        s0 = self._get("S_0", _yukawa(0.0))
        return self.block([[2 * m * s0, tm], [tm, None]], "C_m")

    def C_m_formula(self):
        """(1/4)[[2m S_hat, -i R (sigma.nu)], [-i R (sigma.nu), 0]] with S_hat kernel 1/(pi r)."""
        m = self.p.m
        Sh = self.S("S_hat").matrix
        Rs = -1j * self.R.matrix @ self.sigma_nu.matrix
        return self.block([[0.5 * m * Sh, 0.25 * Rs], [0.25 * Rs, None]], "C_m formula")

    def principal_decomposition(self):
        z, m = self.p.z, self.p.m
        L2 = self.lam(-2).matrix
        sn = self.sigma_nu.matrix
        return self.block([[(z + m) * L2, -0.25j * self.R.matrix @ sn],
                           [0.25j * sn @ self.Rstar.matrix, (z - m) * L2]], "principal")

    def weight(self, s, channels=1):
        """Sobolev weight W_s = Lambda^{2s}."""
        return self.lam(2 * s, channels)

    @cached_property
    def split(self):
        return spectral_split_RplusRstar(self)


# ----- module-level operations ------------------------------------------------

def assemble_S(grid, mu, asm=None):
    """Single layer operator for -Delta - mu, mu < 0, on the spinor basis (componentwise)."""
    if not mu < 0:
        raise ValueError(f"assemble_S needs mu < 0, got {mu}")
    asm = asm or Assembly3D(grid, SpectralPoint(0.0, 1.0))
    kappa = float(np.sqrt(-mu))
    name = f"S_mu{mu:g}"
    return asm._op(asm._get(name, _yukawa(kappa)), name, -0.5)


def assemble_Lambda3(asm, t=1):
    return asm.lam(t)


def assemble_R3(asm):
    return asm.R


def assemble_Rstar3(asm):
    return asm.Rstar


def assemble_C3(asm):
    return asm.C


@dataclass
class SpectralSplit:
    mu: np.ndarray
    vectors: np.ndarray
    P_plus: np.ndarray
    P_minus: np.ndarray
    K: np.ndarray
    A: np.ndarray
    M: np.ndarray
    antihermitian: float

    @property
    def dims(self):
        return int((self.mu > 0).sum()), int((self.mu < 0).sum())

    def pairing(self):
        """For sorted eigenvalues, partner index n-1-k and residual |mu_k + mu_partner|."""
        n = len(self.mu)
        partner = np.arange(n)[::-1]
        return partner, np.abs(self.mu + self.mu[partner])


def spectral_split_RplusRstar(asm):
    M = asm.R.matrix + asm.Rstar.matrix
    anti = operator_norm((M - M.conj().T) / 2)
    Ms = (M + M.conj().T) / 2
    mu, U = eigh(Ms)
    pos = mu > 0
    Pp = U[:, pos] @ U[:, pos].conj().T
    Pm = U[:, ~pos] @ U[:, ~pos].conj().T
    K = Ms - 4 * Pp + 4 * Pm
    A = 1j * (asm.R.matrix - asm.Rstar.matrix)
    return SpectralSplit(mu, U, Pp, Pm, K, A, Ms, anti)


def decomposition_corollary3(asm):
    """K = C_z - (1/2)(alpha.nu) V^* [[0, P- - P+], [P- - P+, 0]] V (alpha.nu)."""
    sp = asm.split
    D = sp.P_minus - sp.P_plus
    X = asm.block([[None, D], [D, None]])
    an, V = asm.alpha_nu, asm.V
    principal = 0.5 * (an @ V.adjoint() @ X @ V @ an)
    K = asm.C - principal
    return BlockOperator(K.matrix, asm.basis, 2, -1.0, "K_corollary3")


def isomorphism_check(asm, tol=1e-4):
    """max over signs of ||P_-+ (sigma.nu) P_+- - (sigma.nu) P_+-||."""
    sp = asm.split
    sn = asm.sigma_nu.matrix
    r1 = operator_norm(sp.P_minus @ sn @ sp.P_plus - sn @ sp.P_plus)
    r2 = operator_norm(sp.P_plus @ sn @ sp.P_minus - sn @ sp.P_minus)
    res = max(r1, r2)
    return ("PASS" if res <= tol else "FAIL"), res


def weighted_norm3(asm, A, r, s):
    """||W_{r-s} A W_{-r}|| with W built from S(-1)."""
    mat = A.matrix if isinstance(A, BlockOperator) else np.asarray(A)
    ch = mat.shape[0] // asm.size
    return operator_norm(asm.weight(r - s, ch).matrix @ mat @ asm.weight(-r, ch).matrix)


# keep a reference for callers that want the raw Pauli matrices alongside operators
PAULI = SIGMA
