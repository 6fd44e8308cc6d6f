"""Central numerical tolerances and scheme defaults.

Every acceptance-level check reads its tolerance from here so that the
whole suite can be retuned from one place.
"""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Tolerances:
    # metric evaluation
    metric_symmetry: float = 1e-12
    spd_min_eig: float = 0.0          # strict: smallest eigenvalue must exceed this

    # curvature engine
    riemann_antisym_rel: float = 1e-8
    riemann_pair_rel: float = 1e-8
    bianchi_rel: float = 1e-7
    plane_invariance_rel: float = 1e-8
    gram_min: float = 1e-12
    degenerate_plane_retries: int = 16

    # finite-difference fallback / oracles
    fd_step: float = 1e-4
    fd_richardson: bool = True

    # actions and deformations
    isometry_residual: float = 1e-9
    action_identity: float = 1e-12
    action_composition: float = 1e-10
    horizontality: float = 1e-10
    a_tensor_extension: float = 1e-6
    oneill_residual: float = 1e-3
    cheeger_formula_rel: float = 1e-3
    curvature_gain: float = -1e-8

    # groupoids
    groupoid_axioms: float = 1e-10
    one_metric_residual: float = 1e-8
    hypothesis_residual: float = 1e-8
    reduction_deviation: float = 1e-9
    ii_symmetry: float = 1e-8

    # foliations
    leaf_constancy: float = 1e-9
    partition_sum: float = 1e-12
    delta_max_singular: float = 0.36787944117144233  # 1/e

    # metric spaces
    triangle_slack: float = 1e-9
    distance_symmetry: float = 1e-12


@dataclass(frozen=True)
class Schedules:
    t_grid: tuple = (0.1, 0.5, 1.0, 2.0, 10.0)
    delta_regular: tuple = (1.0, 0.5, 0.1, 0.01, 0.001)
    delta_singular: tuple = (0.36787944117144233, 0.1, 0.03, 0.01, 0.003, 0.001)


DEFAULT_TOL = Tolerances()
DEFAULT_SCHEDULES = Schedules()
