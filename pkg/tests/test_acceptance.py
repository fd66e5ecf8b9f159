"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed and collected into the
"acceptance criteria" section of the pytest terminal summary).
"""
import json
import time

import mpmath as mp
import numpy as np
import pytest

from diracbie import cli
from diracbie.geometry import build_preset_curve
from diracbie.kernels import SpectralPoint, bessel_k
from diracbie.oracles import C_entry_oracle, R_entry_oracle
from diracbie.ops2d import Assembly2D
from diracbie.trigcalc import estimate_order, operator_norm
from diracbie.verify import identity_residuals_3d, order_family_2d

PRESETS = ["circle", "ellipse", "bean"]


# ----- 1. 2D square identity --------------------------------------------------

@pytest.mark.parametrize("name", ["circle", "ellipse"])
@pytest.mark.parametrize("z", [-0.5, 0.0, 0.3])
def test_1_square_identity_2d(acceptance, name, z):
    t0 = time.perf_counter()
    a = Assembly2D(build_preset_curve(name, n=128), SpectralPoint(z, 1.0))
    E = a.compress(4 * (a.C @ a.sigma_nu) @ (a.C @ a.sigma_nu) + a.identity())
    res = E.norm()
    dt = time.perf_counter() - t0
    ok = res <= 1e-8 and dt <= 30
    acceptance(1, "2D ||4(C_z sigma.nu)^2 + I|| <= 1e-8 at N=128, <= 30 s per case", ok,
               f"{name} z={z}: {res:.2e} in {dt:.1f}s")
    assert res <= 1e-8
    assert dt <= 30


# ----- 2. 2D Cauchy identity --------------------------------------------------

@pytest.mark.parametrize("name", PRESETS)
def test_2_cauchy_identity_2d(acceptance, asm2d, name):
    a = asm2d(name, 128)
    I = np.eye(a.space.M)
    R = a.compress(a.R).matrix
    Rs = a.compress(a.Rstar).matrix
    r1 = operator_norm(R @ R - 4 * I)
    r2 = operator_norm(Rs @ Rs - 4 * I)
    acceptance(2, "2D ||R^2 - 4I||, ||(R*)^2 - 4I|| <= 1e-10 at N=128", max(r1, r2) <= 1e-10,
               f"{name}: {r1:.2e}/{r2:.2e}")
    assert r1 <= 1e-10 and r2 <= 1e-10


# ----- 3. circle diagonalization ----------------------------------------------

def test_3_circle_diagonalization(acceptance, asm2d):
    a = asm2d("circle", 128)
    R = a.compress(a.R).matrix
    sgn = np.where(a.space.modes >= 0, 2.0, -2.0)
    # R e_n for every pulled-back mode e_n, compared with +-2 e_n
    res = np.abs(R - np.diag(sgn)).max()
    acceptance(3, "circle: R e_n = +2 e_n (n >= 0), -2 e_n (n < 0) within 1e-12", res <= 1e-12,
               f"{res:.2e}")
    assert res <= 1e-12


# ----- 4. smoothing orders ----------------------------------------------------

ORDER_CASES = [("R_minus_Rstar", (-1, -2, -3)), ("K_principal", (-2,)),
               ("K_corollary", (-1,)), ("R_plus_Rstar_split", (-1, -2, -3))]


@pytest.mark.parametrize("name", PRESETS)
def test_4_smoothing_orders(acceptance, asm2d, name):
    fams = {fam: [order_family_2d(asm2d(name, n), fam) for n in (32, 64, 128)]
            for fam, _ in ORDER_CASES}
    failed = []
    worst = 0.0
    for fam, orders in ORDER_CASES:
        for s in orders:
            est = estimate_order(fams[fam], 0.0, s, limit=1.5)
            if not est.passed:
                failed.append(f"{fam}@{s}")
            rows = est.rows
            if not all(r["norm"] <= r["zero_level"] for r in rows):
                worst = max(worst, est.growth)
    acceptance(4, "estimate_order PASS (growth <= 1.5 over N = 32, 64, 128)", not failed,
               f"{name}: worst growth {worst:.3f}" + (f", failed {failed}" if failed else ""))
    assert not failed


# ----- 5. adjointness and the branch control ----------------------------------

@pytest.mark.parametrize("name", PRESETS)
@pytest.mark.parametrize("z", [-0.5, 0.0, 0.3])
def test_5_adjointness(acceptance, asm2d, name, z):
    a = asm2d(name, 128, z=z)
    res = a.compress(a.C).hermitian_defect()
    acceptance(5, "||C_z - C_z^dagger|| <= 1e-10; flipped branch must fail", res <= 1e-10,
               f"{name} z={z}: {res:.2e}")
    assert res <= 1e-10


def test_5_negative_control_branch_flip(acceptance, asm2d):
    a = asm2d("ellipse", 128, branch=-1)
    res = a.compress(a.C).hermitian_defect()
    fails = res > 1e-10
    acceptance(5, "||C_z - C_z^dagger|| <= 1e-10; flipped branch must fail", fails,
               f"flipped branch defect {res:.2e} (check FAILs as required)")
    assert fails


# ----- 6. 3D identities and refinement ---------------------------------------

_RES3D = {}


def _level(asm3d, level):
    if level not in _RES3D:
        t0 = time.perf_counter()
        a = asm3d(level)
        res = identity_residuals_3d(a)
        _RES3D[level] = (res, time.perf_counter() - t0, a.grid.size)
    return _RES3D[level]


@pytest.mark.parametrize("level", [2, 3])
def test_6_identities_3d(acceptance, asm3d, level):
    res, dt, nodes = _level(asm3d, level)
    ok = (res["R_squared"] <= 1e-2 and res["anticommutation"] <= 1e-6
          and res["square_identity"] <= 1e-2 and dt <= 300)
    acceptance(6, "3D ||R^2-4I|| <= 1e-2, anticommutation <= 1e-6, square <= 1e-2; "
               "strict decrease level 2 -> 3; <= 5 min per level", ok,
               f"level {level} ({nodes} nodes, {dt:.0f}s): R2 {res['R_squared']:.2e}, "
               f"anti {res['anticommutation']:.2e}, square {res['square_identity']:.2e}")
    assert ok


def test_6_strict_decrease_level2_to_3(acceptance, asm3d):
    r2, _, _ = _level(asm3d, 2)
    r3, _, _ = _level(asm3d, 3)
    grew = [k for k in r2 if not r3[k] < r2[k]]
    acceptance(6, "3D ||R^2-4I|| <= 1e-2, anticommutation <= 1e-6, square <= 1e-2; "
               "strict decrease level 2 -> 3; <= 5 min per level", not grew,
               "decrease: " + ", ".join(f"{k} {r2[k]:.2e}->{r3[k]:.2e}" for k in r2))
    assert not grew, f"not strictly decreasing: {grew}"


# ----- 7. 3D spectral structure -----------------------------------------------

def test_7_spectral_structure_3d(acceptance, asm3d):
    a = asm3d(2)
    sp = a.split
    _, pair = sp.pairing()
    gap = np.abs(sp.mu).min()
    cons = operator_norm(sp.M @ sp.M - 16 * np.eye(a.size) - sp.A @ sp.A)
    dp, dm = sp.dims
    ok = pair.max() <= 1e-4 and gap >= 4 - 1e-2 and cons <= 1e-2 and dp == dm
    acceptance(7, "3D mu <-> -mu within 1e-4, min|mu| >= 4 - 1e-2, (R+R*)^2 = 16I + A^2 "
               "within 1e-2, dim ran P+ = dim ran P-", ok,
               f"pairing {pair.max():.1e}, min|mu| {gap:.6f}, consistency {cons:.1e}, dims {dp}/{dm}")
    assert ok


# ----- 8. oracle equivalence --------------------------------------------------

ORACLE_N = 32


@pytest.fixture(scope="module")
def oracle_case(asm2d):
    a = asm2d("bean", ORACLE_N)
    rng = np.random.default_rng(2024)
    entries = rng.integers(-ORACLE_N, ORACLE_N + 1, size=(5, 2))
    channels = rng.integers(0, 2, size=(5, 2))
    return a, entries, channels


def test_8_oracle_R(acceptance, oracle_case):
    a, entries, _ = oracle_case
    R = a.compress(a.R).matrix
    N = ORACLE_N
    errs = [abs(R_entry_oracle(a.curve, m, n) - R[m + N, n + N]) for m, n in entries]
    ok = max(errs) <= 1e-6
    acceptance(8, "5 random entries each of R and C_z match brute-force oracles within 1e-6", ok,
               f"R max err {max(errs):.1e}")
    assert ok


def test_8_oracle_C(acceptance, oracle_case):
    a, entries, channels = oracle_case
    C = a.compress(a.C).matrix
    N, M = ORACLE_N, 2 * ORACLE_N + 1
    p = a.p
    errs = []
    for (m, n), (ca, cb) in zip(entries, channels):
        o = C_entry_oracle(a.curve, p.z, p.m, (ca, m), (cb, n))
        errs.append(abs(o - C[ca * M + m + N, cb * M + n + N]))
    ok = max(errs) <= 1e-6
    acceptance(8, "5 random entries each of R and C_z match brute-force oracles within 1e-6", ok,
               f"C max err {max(errs):.1e}")
    assert ok


# ----- 9. special functions ---------------------------------------------------

def test_9_bessel_against_mpmath(acceptance):
    x = np.geomspace(1e-4, 50, 102)[1:-1]
    mp.mp.dps = 40
    worst = 0.0
    for order in (0, 1):
        ref = np.array([float(mp.besselk(order, mp.mpf(float(v)))) for v in x])
        rel = np.abs(bessel_k(order, x) - ref) / np.abs(ref)
        worst = max(worst, rel.max())
    ok = worst <= 1e-13
    acceptance(9, "K0, K1 within 1e-13 relative on 100 log-spaced points in (1e-4, 50)", ok,
               f"max rel err {worst:.1e}")
    assert ok


# ----- 10. determinism --------------------------------------------------------

def _strip_timestamp(text):
    d = json.loads(text)
    d.pop("timestamp")
    return json.dumps(d, indent=2, sort_keys=True)


@pytest.mark.parametrize("argv", [["--dim", "2", "--geometry", "bean", "--n", "48",
                                   "--resolutions", "32", "40", "48", "--seed", "3"],
                                  ["--dim", "3", "--level", "1", "--levels", "1", "--seed", "3"]])
def test_10_determinism(acceptance, tmp_path, argv):
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        cli.main(["verify", *argv, "--out", str(out)])
        texts.append(out.read_text())
    same = _strip_timestamp(texts[0]) == _strip_timestamp(texts[1])
    # everything but the timestamp line is byte-identical
    lines = [[ln for ln in t.splitlines() if '"timestamp"' not in ln] for t in texts]
    ok = same and lines[0] == lines[1]
    acceptance(10, "identical config + seed gives byte-identical reports modulo timestamp", ok,
               f"dim {argv[1]}")
    assert ok
