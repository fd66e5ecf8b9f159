import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diracbie.geometry import build_preset_curve
from diracbie.kernels import SpectralPoint
from diracbie.ops2d import (AliasingError, Assembly2D, assemble_R, decomposition_corollary,
                            log_weights, remainder_K_boundary_triple, remainder_K_decomposition)
from diracbie.trigcalc import TrigSpace, analyze, operator_norm


# the bean needs N = 128 before the traces zeta^k are resolved to roundoff
TRACE_N = {"ellipse": 64, "bean": 128}


@pytest.mark.parametrize("name", ["ellipse", "bean"])
@pytest.mark.parametrize("k", [0, 1, 3])
def test_R_reproduces_interior_traces(asm2d, name, k):
    # Plemelj: boundary values of an entire function are an eigenvector of R for +2
    a = asm2d(name, TRACE_N[name])
    R = a.compress(a.R).matrix
    c = analyze(a.curve.zeta ** k)
    assert np.abs(R @ c - 2 * c).max() < 1e-10


@pytest.mark.parametrize("name", ["ellipse", "bean"])
@pytest.mark.parametrize("k", [1, 2])
def test_R_reproduces_exterior_traces(asm2d, name, k):
    # functions holomorphic outside and vanishing at infinity give -2
    a = asm2d(name, TRACE_N[name])
    R = a.compress(a.R).matrix
    c = analyze(a.curve.zeta ** (-k))
    assert np.abs(R @ c + 2 * c).max() < 1e-10


def test_R_on_circle_is_diagonal(asm2d):
    a = asm2d("circle", 32)
    R = a.compress(a.R).matrix
    Rs = a.compress(a.Rstar).matrix
    sgn = np.where(a.space.modes >= 0, 2.0, -2.0)
    assert np.abs(R - np.diag(sgn)).max() < 1e-12
    assert np.abs(Rs - np.diag(sgn)).max() < 1e-12


@pytest.mark.parametrize("name", ["circle", "ellipse", "bean"])
def test_R_squares_to_four(asm2d, name):
    # truncation drops P R (1 - P) R P, negligible once the curve is resolved
    a = asm2d(name, 64)
    R = a.compress(a.R).matrix
    assert operator_norm(R @ R - 4 * np.eye(a.space.M)) < 1e-10
    assert operator_norm(a.compress(a.Rstar).matrix - R.conj().T) < 1e-10


@pytest.mark.parametrize("name", ["circle", "ellipse", "bean"])
def test_square_identity_and_hermiticity(asm2d, name):
    a = asm2d(name, 32)
    C = a.compress(a.C)
    assert C.hermitian_defect() < 1e-10
    E = a.compress(4 * (a.C @ a.sigma_nu) @ (a.C @ a.sigma_nu) + a.identity())
    assert E.norm() < 1e-8


@settings(max_examples=8)
@given(z=st.floats(-0.95, 0.95), m=st.floats(0.5, 2.0))
def test_hermiticity_across_the_gap(z, m):
    z = z * m
    a = Assembly2D(build_preset_curve("ellipse", n=12), SpectralPoint(z, m))
    assert a.compress(a.C).hermitian_defect() < 1e-10


def test_flipped_branch_is_not_hermitian():
    a = Assembly2D(build_preset_curve("ellipse", n=16), SpectralPoint(0.3, 1.0, branch=-1))
    assert a.compress(a.C).hermitian_defect() > 1e-3


def test_remainders_are_hermitian(asm2d):
    a = asm2d("bean", 32)
    for fn in (remainder_K_decomposition, remainder_K_boundary_triple, decomposition_corollary):
        K = fn(a)
        assert K.basis is a.space
        assert K.hermitian_defect() < 1e-10


def test_sigma_nu_is_an_involution(asm2d):
    a = asm2d("ellipse", 32)
    S = a.compress(a.sigma_nu @ a.sigma_nu).matrix
    assert np.abs(S - np.eye(2 * a.space.M)).max() < 1e-12


def test_aliasing_guard_fires_without_padding():
    # the bean correction is not resolved on 2N + 1 = 33 nodes
    c = build_preset_curve("bean", n=16)
    with pytest.raises(AliasingError, match="increase resolution"):
        assemble_R(c, TrigSpace(16, c.length))
    assemble_R(c, TrigSpace(16, c.length), check_aliasing=False)


def test_log_weights_reproduce_log_kernel():
    # int_0^1 log(4 sin^2(pi (t - s))) e^{2 pi i n s} ds = -1/|n| for n != 0, 0 for n = 0
    M = 21
    W = log_weights(M)
    t = np.arange(M) / M
    for n in (0, 1, 4, 10):
        got = W @ np.exp(2j * np.pi * n * t)
        expect = (0.0 if n == 0 else -1.0 / n) * np.exp(2j * np.pi * n * t)
        assert np.allclose(got, expect, atol=1e-13)


def test_compress_restricts_to_user_modes(asm2d):
    a = asm2d("ellipse", 16)
    assert a.work.N > a.N
    C = a.compress(a.C)
    assert C.shape == (2 * a.space.M, 2 * a.space.M)
