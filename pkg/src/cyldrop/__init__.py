"""Equilibrium profile curves of rotating cylindrical liquid drops."""

from .core import (
    Band,
    ClassLabel,
    CriticalLevel,
    CriticalLevels,
    DropParams,
    QuarticQ,
    build_q,
    circle_radii,
    classify,
    critical_level,
    critical_levels,
    eval_G,
    positive_roots,
)
from .errors import *  # noqa: F401,F403
from .profile import (
    ProfileCurve,
    SymmetryType,
    assemble_curve,
    circle_curve,
    exceptional_trace,
    fundamental_piece,
    integrate_profile,
    is_embedded,
    symmetry_type,
    trace_band,
)
from .quadrature import AngleResult, arc_length, delta_theta, delta_theta_band_pair_check, limit_delta_theta, rho
from .stability import (
    HillProblem,
    StabilityReport,
    Verdict,
    cp_instability_test,
    curve_energy,
    curve_report,
    fixed_necessary_conditions,
    height_bounds,
    hill_eigenvalues,
    round_cylinder_report,
    second_variation,
)

__version__ = "0.1.0"
