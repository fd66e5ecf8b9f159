"""Identity suites, order estimation, convergence sweeps and reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .geometry import build_preset_curve, build_sphere_grid
from .kernels import SpectralPoint, sigma_dot
from .ops2d import (Assembly2D, decomposition_corollary, remainder_K_boundary_triple,
                    remainder_K_decomposition)
from .ops3d import (Assembly3D, decomposition_corollary3, isomorphism_check, weighted_norm3)
from .trigcalc import estimate_order, operator_norm

__all__ = ["Check", "VerificationReport", "run_suite_2d", "run_suite_3d",
           "convergence_sweep", "order_family_2d", "SWEEP_FLOOR_2D", "SWEEP_FLOOR_3D"]

log = logging.getLogger(__name__)

# below these, residuals are roundoff and a sweep is counted as converged
SWEEP_FLOOR_2D = 1e-12
SWEEP_FLOOR_3D = 1e-10


def _sig(x, digits=6):
    """Round to a fixed number of significant digits so reports are byte-stable."""
    x = float(x)
    if not np.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits - 1}e}")


@dataclass
class Check:
    id: str
    statement: str
    residual: float
    tolerance: float

    @property
    def verdict(self):
        return "PASS" if self.residual <= self.tolerance else "FAIL"

    def to_dict(self):
        return {"id": self.id, "statement": self.statement, "residual": _sig(self.residual),
                "tolerance": self.tolerance, "verdict": self.verdict}


@dataclass
class VerificationReport:
    suite: str
    geometry: dict
    params: dict
    checks: list = field(default_factory=list)
    tables: list = field(default_factory=list)
    timestamp: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S"))

    def add(self, id, ref, residual, tol):
        self.checks.append(Check(id, ref, float(residual), float(tol)))

    def add_table(self, name, rows):
        self.tables.append({"name": name, "rows": rows})

    @property
    def passed(self):
        return all(c.verdict == "PASS" for c in self.checks)

    def check(self, id):
        for c in self.checks:
            if c.id == id:
                return c
        raise KeyError(id)

    def to_dict(self, timestamp=True):
        d = {"suite": self.suite, "geometry": self.geometry, "params": self.params,
             "checks": [c.to_dict() for c in self.checks],
             "tables": [{"name": t["name"], "rows": _clean(t["rows"])} for t in self.tables]}
        if timestamp:
            d["timestamp"] = self.timestamp
        return d

    def to_json(self, timestamp=True):
        return json.dumps(self.to_dict(timestamp), indent=2, sort_keys=True) + "\n"

    def table_csv(self, name):
        rows = next(t["rows"] for t in self.tables if t["name"] == name)
        rows = _clean(rows)
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return buf.getvalue()

    def summary(self):
        lines = [f"{self.suite}: {self.geometry.get('name', '')} {self.params}"]
        for c in self.checks:
            lines.append(f"  {c.verdict}  {c.id:<34s} residual={c.residual:.3e}  tol={c.tolerance:.1e}")
        n_fail = sum(c.verdict == "FAIL" for c in self.checks)
        lines.append(f"  {len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def _clean(rows):
    out = []
    for row in rows:
        out.append({k: (_sig(v) if isinstance(v, (float, np.floating)) else
                        int(v) if isinstance(v, (np.integer,)) else v) for k, v in row.items()})
    return out


def _probe(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


# ----- 2D ---------------------------------------------------------------------

def _curve(cfg, n):
    return build_preset_curve(cfg.geometry, n=n, **cfg.geometry_params())


def _asm2d(cfg, n, branch=1):
    p = SpectralPoint(cfg.z, cfg.m, branch)
    return Assembly2D(_curve(cfg, n), p, cfg.c_lambda, oversample=cfg.oversample)


ORDER_FAMILIES_2D = {
    "R_minus_Rstar": ("R - R* is infinitely smoothing", (-1, -2, -3)),
    "R_Rstar_minus_4I": ("R R* - 4I is infinitely smoothing", (-1, -2, -3)),
    "commutator_Lambda_R": ("Lambda^-2 R - R Lambda^-2 has order -2", (-2,)),
    "K_principal": ("C_z minus its principal block part has order -2", (-2,)),
    "K_boundary_triple": ("boundary-triple remainder is compact (order -1 surrogate)", (-1,)),
    "K_corollary": ("positive/negative decomposition remainder has order -1", (-1,)),
    "R_plus_Rstar_split": ("R + R* - 4P+ + 4P- is infinitely smoothing", (-1, -2, -3)),
}


def order_family_2d(asm, name):
    """One member of a named order-test family at the assembly's resolution."""
    if name == "R_minus_Rstar":
        return asm.compress(asm.R - asm.Rstar)
    if name == "R_Rstar_minus_4I":
        return asm.compress(asm.R @ asm.Rstar - 4 * asm.identity(1))
    if name == "commutator_Lambda_R":
        L2 = asm.lam(-2, 1)
        return asm.compress(L2 @ asm.R - asm.R @ L2)
    if name == "K_principal":
        return remainder_K_decomposition(asm)
    if name == "K_boundary_triple":
        return remainder_K_boundary_triple(asm)
    if name == "K_corollary":
        return decomposition_corollary(asm)
    if name == "R_plus_Rstar_split":
        D = asm.proj("+").matrix - asm.proj("-").matrix
        return asm.compress(asm.R + asm.Rstar - 4 * D)
    raise KeyError(name)


def _single_checks_2d(rep, asm, cfg, rng):
    C = asm.compress(asm.C)
    R = asm.compress(asm.R)
    Rs = asm.compress(asm.Rstar)
    I1 = np.eye(asm.space.M)
    rep.add("hermitian_C", "C_z is self-adjoint for real z in the gap",
            C.hermitian_defect(), 1e-10)
    E = asm.compress(4 * (asm.C @ asm.sigma_nu) @ (asm.C @ asm.sigma_nu) + asm.identity())
    rep.add("square_identity", "-4 (C_z sigma.nu)^2 = I", E.norm(), 1e-8)
    rep.add("R_squared", "R^2 = 4I", operator_norm(R.matrix @ R.matrix - 4 * I1), 1e-10)
    rep.add("Rstar_squared", "(R*)^2 = 4I", operator_norm(Rs.matrix @ Rs.matrix - 4 * I1), 1e-10)
    v, w = _probe(rng, asm.space.M), _probe(rng, asm.space.M)
    rep.add("adjoint_R_Rstar", "R and R* are adjoint to each other",
            abs(np.vdot(w, R.matrix @ v) - np.vdot(Rs.matrix @ w, v)), 1e-10)
    if cfg.geometry == "circle":
        sgn = 2.0 * np.where(asm.space.modes >= 0, 1.0, -1.0)
        rep.add("circle_diagonal", "on the circle R acts as 2(P+ - P-)",
                np.abs(R.matrix - np.diag(sgn)).max(), 1e-12)
    nu = asm.curve.normal
    VS = np.zeros((asm.space.M, 2, 2), dtype=complex)
    VS[:, 0, 1] = nu[:, 0] - 1j * nu[:, 1]
    VS[:, 1, 0] = -1j
    Vn = np.zeros_like(VS)
    Vn[:, 0, 0] = 1
    Vn[:, 1, 1] = -1j * (nu[:, 0] - 1j * nu[:, 1])
    rep.add("V_sigma_nu_form", "V(sigma.nu) = [[0, nu1 - i nu2], [-i, 0]] at the nodes",
            np.abs(Vn @ sigma_dot(nu) - VS).max(), 1e-12)
    for fn, name, ref in ((remainder_K_decomposition, "hermitian_K_principal",
                           "principal-decomposition remainder is self-adjoint"),
                          (remainder_K_boundary_triple, "hermitian_K_boundary_triple",
                           "boundary-triple remainder is self-adjoint"),
                          (decomposition_corollary, "hermitian_K_corollary",
                           "corollary remainder is self-adjoint")):
        rep.add(name, ref, fn(asm).hermitian_defect(), 1e-10)
    P = asm.corollary_principal()
    E = asm.compress(4 * (P @ asm.sigma_nu) @ (P @ asm.sigma_nu) + asm.identity())
    rep.add("corollary_principal_square", "corollary principal part satisfies the square identity",
            E.norm(), 1e-8)


def run_suite_2d(cfg: RunConfig):
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    asm = _asm2d(cfg, cfg.n)
    rep = VerificationReport("2d", json.loads(asm.curve.to_json()),
                             {"z": cfg.z, "m": cfg.m, "c_lambda": cfg.c_lambda, "N": cfg.n,
                              "resolutions": list(cfg.resolutions), "oversample": cfg.oversample,
                              "seed": cfg.seed})
    _single_checks_2d(rep, asm, cfg, rng)

    if len(cfg.resolutions) >= 3:
        fams = {name: [] for name in ORDER_FAMILIES_2D}
        for n in cfg.resolutions:
            a = asm if n == cfg.n else _asm2d(cfg, n)
            for name in fams:
                fams[name].append(order_family_2d(a, name))
        for name, (ref, orders) in ORDER_FAMILIES_2D.items():
            for s in orders:
                est = estimate_order(fams[name], 0.0, s)
                rep.add(f"order_{name}_{s}", ref, _order_residual(est), 1.5)
                rep.add_table(f"order_{name}_{s}", [{"N": r["N"], "norm": r["norm"],
                                                     "ratio": r["ratio"]} for r in est.rows])

    if cfg.controls:
        flipped = _asm2d(cfg, min(cfg.n, 64), branch=-1)
        defect = asm.compress(flipped.C).hermitian_defect()
        rep.add("control_branch_flip", "wrong square-root branch must break self-adjointness "
                "(residual = tolerance / defect)", 1e-10 / max(defect, 1e-300), 1e-3)
    return rep


def _order_residual(est):
    """Growth ratio last/first, or 0 for a family that is roundoff throughout."""
    rows = est.rows
    if all(r["norm"] <= r["zero_level"] for r in rows):
        return 0.0
    return rows[-1]["norm"] / rows[0]["norm"]


# ----- 3D ---------------------------------------------------------------------

def _asm3d(cfg, level, pv=None):
    grid = build_sphere_grid(level)
    return Assembly3D(grid, SpectralPoint(cfg.z, cfg.m), cfg.c_lambda,
                      pv=pv or cfg.pv, eps_schedule=cfg.eps_schedule)


def identity_residuals_3d(asm):
    """The three headline residuals used in refinement comparisons."""
    I = np.eye(asm.size)
    R, Rs, sn = asm.R.matrix, asm.Rstar.matrix, asm.sigma_nu.matrix
    C, an = asm.C.matrix, asm.alpha_nu.matrix
    return {"R_squared": operator_norm(R @ R - 4 * I),
            "anticommutation": operator_norm(sn @ R + Rs @ sn),
            "square_identity": operator_norm(4 * (C @ an) @ (C @ an) + np.eye(2 * asm.size))}


def _weighted_3d(asm):
    Kp = asm.C - asm.principal_decomposition()
    L2 = asm.lam(-2)
    return {"K_principal": weighted_norm3(asm, Kp, 0, -1),
            "K_corollary": weighted_norm3(asm, decomposition_corollary3(asm), 0, -1),
            "K_spectral": weighted_norm3(asm, asm.split.K, 0, -1),
            "R_minus_Rstar": weighted_norm3(asm, asm.R - asm.Rstar, 0, -1),
            "commutator_Lambda_R": weighted_norm3(asm, L2 @ asm.R - asm.R @ L2, 0, -1)}


def run_suite_3d(cfg: RunConfig):
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    asm = _asm3d(cfg, cfg.level)
    asm.prefetch()
    g = asm.grid
    rep = VerificationReport("3d", {"name": "sphere", "level": cfg.level, "n_theta": g.n_theta,
                                    "n_phi": g.n_phi, "nodes": g.size, "basis": asm.size},
                             {"z": cfg.z, "m": cfg.m, "c_lambda": cfg.c_lambda, "level": cfg.level,
                              "levels": list(cfg.levels), "pv": cfg.pv, "seed": cfg.seed})
    n = asm.size
    I = np.eye(n)
    S = asm.S("S_m1").matrix
    rep.add("hermitian_S", "S(-1) is self-adjoint", operator_norm(S - S.conj().T), 1e-10)
    smin = np.linalg.eigvalsh((S + S.conj().T) / 2).min()
    rep.add("positive_S", "S(-1) is positive (residual = max(0, -min eigenvalue))",
            max(0.0, -smin), 0.0)
    Sh = asm.S("S_hat").matrix
    const = np.nonzero(asm.basis.l == 0)[0]
    rep.add("S_constant_density", "the 1/(4 pi r) potential of a constant density is 1",
            np.abs(np.diag(Sh)[const] / 4 - 1).max(), 1e-10)
    L = asm.lam(1).matrix
    s_eig = asm._s_eig[0]
    target = np.linalg.inv((S + S.conj().T) / 2) + asm.c_lambda * I
    rep.add("Lambda_squared", "Lambda^2 = S(-1)^-1 + c_Lambda",
            operator_norm(L @ L - target) / operator_norm(target), 1e-9)
    rep.add("Lambda_commutes_S", "Lambda commutes with S(-1)", operator_norm(L @ S - S @ L), 1e-9)
    lmin = np.sqrt(1 / s_eig.max() + asm.c_lambda)
    rep.add("Lambda_lower_bound", "smallest eigenvalue of Lambda is at least sqrt(c_Lambda)",
            max(0.0, np.sqrt(asm.c_lambda) - lmin), 1e-12)

    res = identity_residuals_3d(asm)
    R, Rs, sn = asm.R.matrix, asm.Rstar.matrix, asm.sigma_nu.matrix
    rep.add("R_squared", "R^2 = 4I", res["R_squared"], 1e-2)
    rep.add("Rstar_squared", "(R*)^2 = 4I", operator_norm(Rs @ Rs - 4 * I), 1e-2)
    rep.add("anticommutation", "(sigma.nu) R + R* (sigma.nu) = 0", res["anticommutation"], 1e-6)
    v, w = _probe(rng, n), _probe(rng, n)
    rep.add("adjoint_R_Rstar", "R and R* are formally adjoint",
            abs(np.vdot(w, R @ v) - np.vdot(Rs @ w, v)), 1e-6)
    rep.add("sigma_nu_squared", "(sigma.nu)^2 = I", operator_norm(sn @ sn - I), 1e-12)
    rep.add("hermitian_C", "C_z is self-adjoint for real z in the gap", asm.C.hermitian_defect(), 1e-6)
    rep.add("square_identity", "-4 (C_z alpha.nu)^2 = I", res["square_identity"], 1e-2)
    rep.add("C_m_limit", "z -> m limit equals (1/4)[[2m S_hat, -iR(s.n)], [-iR(s.n), 0]]",
            operator_norm(asm.C_m_direct().matrix - asm.C_m_formula().matrix), 1e-6)

    sp = asm.split
    _, pair = sp.pairing()
    dp, dm = sp.dims
    rep.add("RplusRstar_antihermitian", "discrete R + R* is self-adjoint before symmetrization",
            sp.antihermitian, 1e-4)
    rep.add("spectral_pairing", "spectrum of R + R* is symmetric (mu <-> -mu)", pair.max(), 1e-4)
    rep.add("spectral_gap", "min |mu| >= 4 (residual = 4 - min|mu|)",
            max(0.0, 4 - np.abs(sp.mu).min()), 1e-2)
    rep.add("square_consistency", "(R + R*)^2 = 16 I + A^2 with A = i(R - R*)",
            operator_norm(sp.M @ sp.M - 16 * I - sp.A @ sp.A), 1e-2)
    rep.add("dimension_balance", "dim ran P+ = dim ran P-", abs(dp - dm), 0)
    verdict, iso = isomorphism_check(asm)
    rep.add("isomorphism", "sigma.nu maps ran P+- onto ran P-+", iso, 1e-4)
    Kc = decomposition_corollary3(asm)
    rep.add("hermitian_K_corollary", "corollary remainder is self-adjoint", Kc.hermitian_defect(), 1e-6)
    Kp = asm.C - asm.principal_decomposition()
    rep.add("hermitian_K_principal", "principal-decomposition remainder is self-adjoint",
            Kp.hermitian_defect(), 1e-6)

    mu = sp.mu
    rows = [{"index": i, "mu": float(mu[i]), "partner": int(n - 1 - i), "pairing_residual": float(pair[i])}
            for i in range(n)]
    rep.add_table("eigenvalues", rows)
    near = float(np.mean(np.abs(np.abs(mu) - 4) < 0.1))
    info = [{"quantity": "corollary_remainder_norm", "value": Kc.norm()},
            {"quantity": "principal_remainder_norm", "value": Kp.norm()},
            {"quantity": "fraction_within_0.1_of_pm4", "value": near}]

    wn = _weighted_3d(asm)
    levels = [lv for lv in cfg.levels if lv != cfg.level]
    if levels:
        wrows = []
        for lv in sorted(set(levels + [cfg.level])):
            if lv == cfg.level:
                vals = wn
            else:
                other = _asm3d(cfg, lv)
                other.prefetch()
                vals = _weighted_3d(other)
            wrows.append({"level": lv, **vals})
        rep.add_table("weighted_norms", wrows)
        for key in wn:
            first, last = wrows[0][key], wrows[-1][key]
            zero = max(first, last) <= SWEEP_FLOOR_3D
            ratio = 0.0 if zero else last / first
            rep.add(f"bounded_{key}", f"{key} stays bounded in the S(-1)-weighted norm across levels",
                    ratio, 1.5)
    else:
        rep.add_table("weighted_norms", [{"level": cfg.level, **wn}])

    if cfg.controls:
        naive = _asm3d(cfg, cfg.level, pv="naive")
        Rn = naive._get("R", naive._kernels()["R"])
        bad = operator_norm(Rn @ Rn - 4 * I)
        rep.add("control_naive_pv", "dropping the singular quadrature must worsen R^2 - 4I by >= 5x "
                "(residual = good / naive)", res["R_squared"] / bad, 0.2)
        info.append({"quantity": "naive_R_squared", "value": bad})
    rep.add_table("informational", info)
    return rep


# ----- sweeps -----------------------------------------------------------------

def _fit_rate(x, y):
    x, y = np.log(np.asarray(x, float)), np.log(np.maximum(np.asarray(y, float), 1e-300))
    return float(-np.polyfit(x, y, 1)[0])


def convergence_sweep(cfg: RunConfig, resolutions=None):
    """Residuals versus resolution with fitted algebraic decay rates."""
    cfg.validate()
    rep = VerificationReport(f"convergence_{cfg.dim}d", {"name": cfg.geometry if cfg.dim == 2 else "sphere"},
                             {"z": cfg.z, "m": cfg.m, "c_lambda": cfg.c_lambda, "seed": cfg.seed})
    if cfg.dim == 2:
        res = list(resolutions or cfg.resolutions)
        if len(res) < 3:
            raise ValueError("a convergence sweep needs >= 3 resolutions")
        rep.params["resolutions"] = res
        rows = []
        norms = {name: [] for name in ("R_minus_Rstar", "R_plus_Rstar_split")}
        for n in res:
            asm = _asm2d(cfg, n)
            M = asm.space.M
            R = asm.compress(asm.R).matrix
            Rs = asm.compress(asm.Rstar).matrix
            E = asm.compress(4 * (asm.C @ asm.sigma_nu) @ (asm.C @ asm.sigma_nu) + asm.identity())
            row = {"N": n, "square_identity": E.norm(),
                   "R_squared": operator_norm(R @ R - 4 * np.eye(M)),
                   "Rstar_squared": operator_norm(Rs @ Rs - 4 * np.eye(M)),
                   "hermitian_C": asm.compress(asm.C).hermitian_defect()}
            for name in norms:
                norms[name].append(order_family_2d(asm, name))
            rows.append(row)
        rep.add_table("identity_residuals", rows)
        for key in ("square_identity", "R_squared", "Rstar_squared"):
            vals = [r[key] for r in rows]
            rep.add(f"{key}_nonincreasing", f"{key} does not grow beyond the roundoff floor",
                    _growth_excess(vals, SWEEP_FLOOR_2D), 0.0)
        rep.add("square_identity_final", "-4 (C_z sigma.nu)^2 = I at the finest resolution",
                rows[-1]["square_identity"], 1e-8)
        for name, fam in norms.items():
            for s in (-1, -2, -3):
                est = estimate_order(fam, 0.0, s)
                rep.add(f"flat_{name}_{s}", f"{name} weighted norms flat in N",
                        _order_residual(est), 1.5)
                rep.add_table(f"order_{name}_{s}", [{"N": r["N"], "norm": r["norm"],
                                                      "ratio": r["ratio"]} for r in est.rows])
    else:
        levels = list(resolutions or cfg.levels)
        if len(levels) < 3:
            raise ValueError("a convergence sweep needs >= 3 grid levels")
        rep.params["levels"] = levels
        rows = []
        for lv in levels:
            asm = _asm3d(cfg, lv)
            asm.prefetch()
            rows.append({"level": lv, "nodes": asm.grid.size, **identity_residuals_3d(asm)})
        rep.add_table("identity_residuals", rows)
        sizes = [r["nodes"] for r in rows]
        for key in ("R_squared", "anticommutation", "square_identity"):
            vals = [r[key] for r in rows]
            rate = _fit_rate(np.sqrt(sizes), vals)
            rep.add_table(f"rate_{key}", [{"rate": rate, "floor": SWEEP_FLOOR_3D}])
            # a positive rate is only meaningful above the roundoff floor
            resid = 0.0 if max(vals) <= SWEEP_FLOOR_3D else max(0.0, 0.8 - rate)
            rep.add(f"rate_{key}", f"{key} decays under refinement (fitted rate >= 0.8 or at roundoff)",
                    resid, 0.0)
    return rep


def _growth_excess(vals, floor):
    """Largest increase of a sequence over its running minimum, ignoring values below floor."""
    excess = 0.0
    best = vals[0]
    for v in vals[1:]:
        if v > max(best, floor):
            excess = max(excess, v - max(best, floor))
        best = min(best, v)
    return excess
