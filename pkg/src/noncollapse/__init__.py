"""Numerical laboratory for fully nonlinear curvature flows of hypersurfaces.

Evolves closed plane curves and axisymmetric surfaces by dX/dt = -F nu and
empirically checks non-collapsing of touching-sphere curvatures, the
containment principle for pairs of solutions, and the linearized-flow
identities satisfied by the speed, normal components, and the scaling field.
"""

from .analyzer import (chordal_Z, circum_inradius_ratio, exterior_sphere_curvature,
                       interior_sphere_curvature, ratio_series,
                       sphere_curvature_field, tangency_residual)
from .containment import min_distance, run_pair
from .flow import FlowConfig, FlowTrajectory, cfl_dt, run, step
from .geometry import (DiscreteHypersurface, axisym_profile, load_geometry,
                       make_circle, make_dumbbell, make_ellipse, make_ellipsoid,
                       make_sphere, make_torus, plane_curve, resample_arclength,
                       save_geometry, self_intersection_check)
from .linearized import (convergence_order, flow_time_derivative, lin_operator,
                         scalar_field, solution_residual)
from .speeds import (EuclideanNormSpeed, PowerMeanSpeed, SpeedFunction, SumSpeed,
                     check_euler_homogeneity, check_monotonicity,
                     classify_convexity, eval_gradient, eval_speed, parse_speed,
                     support_inequality_residual)

__version__ = "0.1.0"
