"""collapselab: a numerical laboratory for metric deformations.

Chart-based curvature engine (hyper-dual second derivatives), Cheeger
deformations of isometric torus actions, foliated collapse (regular
vertical shrink and the singular strata-tube construction), finite
metric-space Gromov-Hausdorff machinery, and transformation-groupoid
Cheeger deformations with their reduction to the classical case.
"""

from .config import DEFAULT_TOL, Tolerances
from .geometry.manifolds import Point, SampleSet, TangentVector
from .geometry.metric import MetricField, builtin_manifold, builtin_metric, metric_eval
from .geometry.curvature import (CurvatureReport, curvature_scan,
                                 curvature_tensor, sectional_curvature)
from .geometry.distances import (diameter_estimate, geodesic_distances,
                                 volume_estimate)
from .lie import (GroupElement, LieGroupData, biinvariant_sec_term, bracket,
                  exponentiate, identity, invert, multiply, q_inner, q_norm,
                  su2_group, torus_group)
from .action import (IsometricActionData, action_field, builtin_action,
                     isometry_check, orbit_sample, shape_tensor, split_tangent)
from .cheeger import (CheegerContext, SubmersionData, a_tensor, cheeger_tensor,
                      cheeger_tensor_inverse, deformed_metric, hopf_submersion,
                      oneill_residual, product_submersion, rhs_curvature)
from .foliation import (CollapseReport, FoliatedModel, collapse_scan,
                        fit_variation_exponent, hopf_s3_model,
                        partition_of_unity, shrink_vertical,
                        singular_collapse_metric, t2_s3_singular_model,
                        torus_linear_model, variation_identity_residuals,
                        volume_decay_fit)
from .gh import (ApproximationWitness, FiniteMetricSpace, NetWitness,
                 epsilon_net, gh_brute_force, gh_upper_bound, pair_distortion,
                 quotient_sample, validate_metric)
from .groupoid import (GroupoidActionData, TransformationGroupoidData,
                       group_case_action, groupoid_action_field,
                       groupoid_cheeger_metric, groupoid_shape_tensor,
                       horizontal_lift, hypothesis_check,
                       left_translation_action, rhs_full_curvature,
                       second_fundamental_form, validate_groupoid)

__version__ = "0.1.0"
