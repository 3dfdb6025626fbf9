"""Dual cones, meshes of Omega and its cone, and index strata."""

from .cone import PolyhedralCone, UnsupportedDimensionError, cone_from_spec, dual_cone, in_dual
from .mesh import OmegaComplex, build_mesh, cone_complex
from .refine import adaptive_refine
from .strata import label_indices, omega_V_strata, subcomplex_for
