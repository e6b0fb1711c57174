"""Singular points, singular curvature and Gauss-Bonnet checks for frontals
and coherent tangent bundles."""

from .expr import Expression, eval_jet, parse
from .gallery import gallery_list, gallery_run, gallery_surface
from .gb import integrate_singular_curvature, verify_global_GB, verify_local_GB
from .sectors import sector_angles, verify_theorem_A
from .singular import analyze, classify, null_direction
from .surface import FrontalSurface, IntrinsicCTB, ParamDomain, load_spec, to_frame_form

__version__ = "0.1.0"
