"""dielshape: spectral boundary-integral solver for dielectric Maxwell
scattering on star-shaped surfaces, with shape-derivative engines.

Subpackage layout
-----------------
geometry   reference grid, surfaces, deformations, pullbacks
surfcalc   surface differential operators and their shape derivatives
bio        boundary integral operators / potentials in Helmholtz coordinates
solver     the single-source transmission integral equation
shapederiv three routes to the first shape derivative of the far field
oracle     Mie series ground truth for the dielectric sphere
cli        configuration-driven command line entry points
"""

from .grid import ReferenceGrid
from .geometry import Surface, DeformationField, Material, build_surface, sphere, deform
from .solver import PlaneWave, solve, far_field
from .shapederiv import d_solution_routeA, d_solution_routeB, d_solution_routeC
from .oracle import mie_far_field, mie_radius_derivative

__all__ = [
    "ReferenceGrid",
    "Surface",
    "DeformationField",
    "Material",
    "build_surface",
    "sphere",
    "deform",
    "PlaneWave",
    "solve",
    "far_field",
    "d_solution_routeA",
    "d_solution_routeB",
    "d_solution_routeC",
    "mie_far_field",
    "mie_radius_derivative",
]

__version__ = "0.1.0"
