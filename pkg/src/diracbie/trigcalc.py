"""Fourier calculus on the unit torus and discrete Sobolev-weighted norms.

Coefficient vectors are ordered by mode n = -N..N.  C^2-valued functions stack
their channels: ``[channel 0 modes, channel 1 modes]``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import svds

__all__ = [
    "TrigSpace", "BlockOperator", "OrderEstimate",
    "analyze", "synthesize", "apply_lambda", "apply_projection",
    "operator_norm", "weighted_norm", "estimate_order",
    "ORDER_GROWTH_LIMIT", "ORDER_NORM_FLOOR",
]

ORDER_GROWTH_LIMIT = 1.5
# an operator whose plain size is below this is roundoff; its weighted norm is
# compared against ORDER_NORM_FLOOR * (weight amplification at N)
ORDER_NORM_FLOOR = 1e-12
_DENSE_NORM_MAX = 2500


@dataclass(frozen=True, eq=False)
class TrigSpace:
    """Span of e_n(t) = exp(2 pi i n t), |n| <= N, on a curve of length ``length``."""

    N: int
    length: float = 2 * np.pi
    c_lambda: float = 1.0

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if not self.c_lambda > 0:
            raise ValueError("c_lambda must be positive")

    @property
    def M(self):
        return 2 * self.N + 1

    @cached_property
    def modes(self):
        return np.arange(-self.N, self.N + 1)

    @cached_property
    def nodes(self):
        return np.arange(self.M) / self.M

    def nbar(self):
        return np.maximum(np.abs(self.modes), 1)

    def weight(self, s, channels=1):
        return np.tile(self.nbar().astype(float) ** s, channels)

    def lambda_symbol(self, t):
        return (4 * np.pi / self.length) ** (t / 2) * (self.c_lambda + np.abs(self.modes)) ** (t / 2)

    @cached_property
    def F(self):
        """Nodal values -> coefficients."""
        return np.exp(-2j * np.pi * np.outer(self.modes, self.nodes)) / self.M

    @cached_property
    def Finv(self):
        """Coefficients -> nodal values."""
        return np.exp(2j * np.pi * np.outer(self.nodes, self.modes))

    def to_coef(self, A):
        """Similarity transform of a nodal matrix to the coefficient basis."""
        return self.F @ A @ self.Finv

    def mult(self, f):
        """Coefficient matrix of multiplication by nodal values ``f``."""
        return (self.F * np.asarray(f)[None, :]) @ self.Finv

    def lambda_matrix(self, t, channels=2):
        return np.diag(np.tile(self.lambda_symbol(t), channels)).astype(complex)

    def projection_matrix(self, sign, channels=2):
        return np.diag(np.tile(_proj_mask(self.modes, sign), channels)).astype(complex)

    def weight_matrix(self, s, channels=2):
        return np.diag(self.weight(s, channels)).astype(complex)

    def hs_inner(self, f, g, s=0):
        w = self.weight(2 * s, len(f) // self.M)
        return np.vdot(g * w, f)

    def describe(self):
        return {"N": self.N, "length": self.length, "c_lambda": self.c_lambda}


def _proj_mask(modes, sign):
    if sign in ("+", 1, +1):
        return (modes >= 0).astype(float)
    if sign in ("-", -1):
        return (modes <= -1).astype(float)
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def analyze(samples, space=None):
    """Fourier coefficients of samples at t_j = j/M, exact trigonometric interpolation.

    ``samples`` may carry trailing channel axes; the node axis is first.
    """
    f = np.asarray(samples)
    M = f.shape[0]
    if M % 2 == 0:
        raise ValueError(f"need an odd node count 2N+1, got {M}")
    if space is not None and M != space.M:
        raise ValueError(f"node count {M} does not match truncation N={space.N}")
    N = (M - 1) // 2
    fh = np.fft.fft(f, axis=0) / M
    return fh[np.arange(-N, N + 1) % M]


def synthesize(coeffs, space=None):
    c = np.asarray(coeffs)
    M = c.shape[0]
    if space is not None and M != space.M:
        raise ValueError(f"coefficient count {M} does not match truncation N={space.N}")
    N = (M - 1) // 2
    buf = np.zeros_like(c, dtype=complex)
    buf[np.arange(-N, N + 1) % M] = c
    return np.fft.ifft(buf, axis=0) * M


def _channels(v, space):
    n = len(v)
    if n % space.M:
        raise ValueError(f"vector length {n} is not a multiple of {space.M}")
    return n // space.M


def apply_lambda(t, v, space):
    v = np.asarray(v)
    return v * np.tile(space.lambda_symbol(t), _channels(v, space))


def apply_projection(sign, v, space):
    v = np.asarray(v)
    return v * np.tile(_proj_mask(space.modes, sign), _channels(v, space))


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """Dense matrix on a discretized boundary space.

    ``basis`` is the TrigSpace (2D) or the 3D Galerkin basis descriptor; the
    basis is orthonormal for the L2 pairing up to a constant, so the adjoint is
    the conjugate transpose.
    """

    matrix: np.ndarray
    basis: object = None
    channels: int = 2
    claimed_order: float | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A = self.matrix
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"operator matrix must be square, got {A.shape}")
        size = getattr(self.basis, "M", None) or getattr(self.basis, "size", None)
        if size is not None and A.shape[0] != size * self.channels:
            raise ValueError(f"matrix size {A.shape[0]} inconsistent with basis size "
                             f"{size} x {self.channels} channels")

    @property
    def shape(self):
        return self.matrix.shape

    def adjoint(self):
        return self._like(self.matrix.conj().T, name=f"{self.name}^*")

    def _like(self, A, **kw):
        kw.setdefault("name", self.name)
        kw.setdefault("claimed_order", self.claimed_order)
        return BlockOperator(A, self.basis, self.channels, kw["claimed_order"], kw["name"])

    def _coerce(self, other):
        if isinstance(other, BlockOperator):
            if other.basis is not None and self.basis is not None and other.basis is not self.basis:
                raise ValueError("basis mismatch")
            return other.matrix
        return other

    def __matmul__(self, other):
        if isinstance(other, BlockOperator):
            return self._like(self.matrix @ self._coerce(other), name="")
        return self.matrix @ other

    def __rmatmul__(self, other):
        return self._like(other @ self.matrix, name="")

    def __add__(self, other):
        return self._like(self.matrix + self._coerce(other), name="")

    def __sub__(self, other):
        return self._like(self.matrix - self._coerce(other), name="")

    def __mul__(self, c):
        return self._like(self.matrix * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.matrix)

    def norm(self, seed=0):
        return operator_norm(self.matrix, seed=seed)

    def hermitian_defect(self):
        return operator_norm(self.matrix - self.matrix.conj().T)


def operator_norm(A, seed=0):
    """Largest singular value.  Exact LAPACK for moderate sizes, ARPACK otherwise."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    if max(A.shape) <= _DENSE_NORM_MAX:
        return float(sla.svdvals(A, check_finite=False)[0])
    v0 = np.random.default_rng(seed).standard_normal(min(A.shape))
    return float(svds(A, k=1, v0=v0, tol=1e-6, return_singular_vectors=False)[0])


def weighted_norm(A, r, s, space=None):
    """Discrete H^r -> H^{r-s} norm, ||W_{r-s} A W_{-r}||_2."""
    if isinstance(A, BlockOperator):
        space = space or A.basis
        ch, mat = A.channels, A.matrix
    else:
        mat = np.asarray(A)
        ch = mat.shape[0] // space.M
    if not isinstance(space, TrigSpace):
        raise ValueError("weighted_norm needs an operator on a TrigSpace basis")
    if mat.shape[0] != ch * space.M:
        raise ValueError("basis mismatch between operator and space")
    left = space.weight(r - s, ch)
    right = space.weight(-r, ch)
    return operator_norm(left[:, None] * mat * right[None, :])


@dataclass
class OrderEstimate:
    verdict: str
    candidate_order: float
    r: float
    rows: list

    @property
    def passed(self):
        return self.verdict == "PASS"

    @property
    def growth(self):
        return self.rows[-1]["ratio_total"]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "norm", "ratio"])
        for row in self.rows:
            w.writerow([row["N"], f"{row['norm']:.12e}", f"{row['ratio']:.6f}"])
        return buf.getvalue()


def estimate_order(family, r, candidate_order, limit=ORDER_GROWTH_LIMIT, floor=ORDER_NORM_FLOOR):
    """Certify bounded H^r -> H^{r - order} norms over a resolution sweep.

    ``family`` is a sequence of BlockOperators on TrigSpaces (or (matrix,
    space) pairs) with increasing N.  PASS when last/first <= limit.  If every
    norm sits below ``floor`` times the largest weight ratio N^{|r-s|+|r|} the
    family is roundoff-level and passes: its growth only measures amplified noise.
    """
    family = list(family)
    if len(family) < 3:
        raise ValueError("estimate_order needs at least 3 resolutions")
    rows = []
    first = prev = None
    for item in family:
        if isinstance(item, BlockOperator):
            A, space = item, item.basis
        else:
            A, space = item
        nv = weighted_norm(A, r, candidate_order, space)
        first = nv if first is None else first
        amp = float(max(space.N, 1)) ** (abs(r - candidate_order) + abs(r))
        rows.append({"N": space.N, "norm": nv, "zero_level": floor * amp,
                     "ratio": nv / prev if prev else 1.0,
                     "ratio_total": nv / first if first else (0.0 if nv == 0 else np.inf)})
        prev = nv
    norms = [row["norm"] for row in rows]
    if all(row["norm"] <= row["zero_level"] for row in rows):
        ok = True
    else:
        ok = norms[-1] <= limit * norms[0]
    return OrderEstimate("PASS" if ok else "FAIL", candidate_order, r, rows)
