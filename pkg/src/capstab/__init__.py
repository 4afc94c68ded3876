"""capstab: a numerical verification lab for capillary cmc surface stability.

Builds conformal charts of model capillary surfaces, evaluates the
variational quadratic forms of their stability theory, validates every
closed-form second-variation formula against finite-difference oracles,
and evaluates Morse indices, conformal deficits, and explicit index
bounds.
"""

__version__ = "0.1.0"

from .ambient import half_space, make_region, solid_cylinder, unit_ball
from .bounds import (BoundInputs, TopologySignature, index_bound, maslov_index,
                     normal_extension, sobolev_check, topological_r)
from .charts import (cylinder_bridge, flat_disk, graph_perturbation, linear_map,
                     make_chart, spherical_cap)
from .deficit import conformal_deficit, fd_derivative, verify_comparison
from .functionals import (FunctionalId, area, dirichlet_energy, first_variation,
                          functional_along_family)
from .geometry import GeometryField, contact_angle, export_obj, sample_geometry
from .grids import Grid, build_grid
from .hessians import analytic_hessian, hessian_oracle_check
from .reparam import solve_conformal_reparam
from .spectral import assemble_Q, assemble_QE, eigs, heat_trace, morse_index
from .variations import VariationFamily, VariationField, make_family, make_variation

__all__ = [
    "__version__",
    "build_grid", "Grid",
    "make_chart", "spherical_cap", "flat_disk", "graph_perturbation",
    "linear_map", "cylinder_bridge",
    "make_region", "half_space", "unit_ball", "solid_cylinder",
    "sample_geometry", "GeometryField", "contact_angle", "export_obj",
    "FunctionalId", "area", "dirichlet_energy", "first_variation",
    "functional_along_family",
    "make_variation", "make_family", "VariationField", "VariationFamily",
    "conformal_deficit", "fd_derivative", "verify_comparison",
    "analytic_hessian", "hessian_oracle_check",
    "solve_conformal_reparam",
    "assemble_Q", "assemble_QE", "eigs", "morse_index", "heat_trace",
    "TopologySignature", "BoundInputs", "topological_r", "maslov_index",
    "index_bound", "sobolev_check", "normal_extension",
]
