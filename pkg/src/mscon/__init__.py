"""Multi-scale region consensus for low-level vision.

A dense pyramid of overlapping regions each fits a small linear model to the
scene map and votes; the per-pixel mean over inlying regions is the estimate
and the vote count its confidence.  The package ships the generic alternating
minimization engine, a brute-force oracle used to test it, and a complete
binocular-stereo application on top.
"""

from .boxsum import parent_scatter, quadrant_sum, scatter_sum, window_sum
from .local_model import (
    LocalModel,
    RegionMoment,
    make_affine_flow,
    make_planar_disparity,
    make_quadratic_normals,
    moment_from_children,
    moment_of_region,
)
from .oracle import (
    DenseReference,
    count_operations,
    dense_consensus,
    dense_consistency_terms,
)
from .region_pyramid import RegionId, RegionPyramid, build_pyramid
from .sgm_seed import (
    SeedField,
    SgmParams,
    census_transform,
    classify_weights,
    compute_seed,
    load_seed,
    save_seed,
)
from .solver import (
    Hooks,
    RunResult,
    SceneMap,
    SolverConfig,
    SolverState,
    TraceRow,
    evaluate_cost,
    evaluate_cost_split,
    reconstruct_consensus,
    run,
)
from .stereo_app import (
    StereoParams,
    StereoResult,
    VarianceTable,
    build_data_quadratics,
    build_outlier_costs,
    initialize_scene,
    occlusion_correct,
    run_stereo,
)

__version__ = "0.1.0"

__all__ = [
    "DenseReference",
    "LocalModel",
    "RegionMoment",
    "RegionId",
    "RegionPyramid",
    "SeedField",
    "SgmParams",
    "SceneMap",
    "SolverConfig",
    "SolverState",
    "StereoParams",
    "StereoResult",
    "TraceRow",
    "VarianceTable",
    "Hooks",
    "RunResult",
    "build_data_quadratics",
    "build_outlier_costs",
    "build_pyramid",
    "census_transform",
    "classify_weights",
    "compute_seed",
    "count_operations",
    "dense_consensus",
    "dense_consistency_terms",
    "evaluate_cost",
    "evaluate_cost_split",
    "initialize_scene",
    "load_seed",
    "make_affine_flow",
    "make_planar_disparity",
    "make_quadratic_normals",
    "moment_from_children",
    "moment_of_region",
    "occlusion_correct",
    "parent_scatter",
    "quadrant_sum",
    "reconstruct_consensus",
    "run",
    "run_stereo",
    "save_seed",
    "scatter_sum",
    "window_sum",
]
