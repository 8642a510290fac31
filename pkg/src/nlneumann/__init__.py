"""Mixed local/nonlocal Neumann problems on an interval.

Solves ``-u'' + gamma (-Delta)^s u~ + q u' + a u = f`` with ``u' = 0`` on the
boundary, where ``u~`` is the kernel-weighted extension of ``u`` (so its
nonlocal normal derivative vanishes), and checks the associated identities.
"""
from .extension import GridFunction, extend, exterior_gradient_rate, neumann_derivative
from .geometry import Domain, Grid, ShellPolicy, build_grid
from .kernels import FracParams, QuadratureRule, boundary_factor, normalization_constant, regional_kernel
from .operators import frac_laplacian_extended, gradient, local_laplacian
from .solver import (ContinuationTrace, ProblemData, assemble, continuation_solve, fixed_point_step,
                     solve, solve_fixed_gamma)

__all__ = [
    "ContinuationTrace", "Domain", "FracParams", "Grid", "GridFunction", "ProblemData", "QuadratureRule",
    "ShellPolicy", "assemble", "boundary_factor", "build_grid", "continuation_solve", "extend",
    "exterior_gradient_rate", "fixed_point_step", "frac_laplacian_extended", "gradient", "local_laplacian",
    "neumann_derivative", "normalization_constant", "regional_kernel", "solve", "solve_fixed_gamma",
]
