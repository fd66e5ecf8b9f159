"""Walk through the 2D boundary operators on the bean curve.

Run: python demos/curve_identities.py
"""
import numpy as np

from diracbie.geometry import build_preset_curve
from diracbie.kernels import SpectralPoint
from diracbie.ops2d import Assembly2D
from diracbie.trigcalc import analyze, estimate_order, operator_norm
from diracbie.verify import order_family_2d

curve = build_preset_curve("bean", n=96)
print(f"bean: length {curve.length:.12f}, {curve.n_nodes} arc-length nodes")

asm = Assembly2D(curve, SpectralPoint(z=0.3, m=1.0))
R = asm.compress(asm.R).matrix
print("||R^2 - 4I||              ", f"{operator_norm(R @ R - 4 * np.eye(asm.space.M)):.2e}")

# boundary values of zeta^2 extend holomorphically inside, so R maps them to twice themselves
c = analyze(curve.zeta ** 2)
print("||R zeta^2 - 2 zeta^2||   ", f"{np.abs(R @ c - 2 * c).max():.2e}")

C = asm.compress(asm.C)
E = asm.compress(4 * (asm.C @ asm.sigma_nu) @ (asm.C @ asm.sigma_nu) + asm.identity())
print("||C - C^dagger||          ", f"{C.hermitian_defect():.2e}")
print("||4 (C sigma.nu)^2 + I||  ", f"{E.norm():.2e}")

# weighted norms of R - R* stay flat even when we ask for three orders of smoothing
fam = [order_family_2d(Assembly2D(build_preset_curve("bean", n=n), asm.p), "R_minus_Rstar")
       for n in (32, 64, 128)]
est = estimate_order(fam, r=0.0, candidate_order=-3)
print(f"R - R* at order -3: {est.verdict}")
print(est.to_csv())
