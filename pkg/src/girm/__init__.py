"""Integral-representation solvers for 1D unsteady and 2D steady diffusion."""

from .kernels import KernelParams, heat_kernel, heat_kernel_dx, log_kernel, log_kernel_dn, slab_double_layer, slab_single_layer
from .oracle import FourierOracle, dirichlet_exact, fdm_reference, neumann_exact, project_cosine, project_sine
from .problem import DiffusionProblem, FieldGrid
from .steady_bem import RobinData, SteadyBemMesh, assemble_and_solve, interior_value
from .stum import BoundaryHistory, SpaceGrid, TimeGrid, march_dirichlet, march_neumann, march_robin, reconstruct, solve_field

__version__ = "0.1.0"
