"""Boundary integral operators of the free Dirac equation and numerical checks of their identities."""

from .geometry import Curve2D, SphereGrid, build_preset_curve, build_sphere_grid, reparametrize_arclength
from .kernels import SpectralPoint, bessel_k, eval_G2, eval_G3, eval_r3, split_kernel_t
from .ops2d import Assembly2D, assemble_C, assemble_R, assemble_Rstar
from .ops3d import Assembly3D
from .trigcalc import BlockOperator, TrigSpace, analyze, estimate_order, synthesize, weighted_norm

__version__ = "0.1.0"

__all__ = [
    "Curve2D", "SphereGrid", "build_preset_curve", "build_sphere_grid", "reparametrize_arclength",
    "SpectralPoint", "bessel_k", "eval_G2", "eval_G3", "eval_r3", "split_kernel_t",
    "Assembly2D", "assemble_C", "assemble_R", "assemble_Rstar", "Assembly3D",
    "BlockOperator", "TrigSpace", "analyze", "estimate_order", "synthesize", "weighted_norm",
]
