"""Possibilistic labeled multi-Bernoulli tracking with multi-sensor fusion.

Multi-target tracking where uncertainty is carried by possibility functions
(supremum-normalized, no normalizing constants) instead of probability
densities.  Spatial uncertainty uses Gaussian max-mixtures, tracks are
labeled Bernoulli triples, and multiple sensors are combined either at a
central node or by Metropolis-weighted consensus over a network.
"""

from .errors import (
    DegenerateUpdateError,
    DuplicateLabelError,
    EmptyMixtureError,
    InvalidModelError,
    PlmbError,
    TopologyError,
)
from .maxmix import (
    GaussianComponent,
    MaxMixture,
    gaussian_possibility,
    hellinger_distance,
    mixture_power,
    mixture_product,
    normalize,
    reduce_mixture,
    supremum,
    weighted_product,
)
from .labeled import (
    BernoulliTrack,
    DeltaGlmb,
    GlmbHypothesis,
    Label,
    LmbDensity,
    cardinality_possibility,
    delta_glmb_to_lmb,
    k_best_subsets,
    lmb_to_delta_glmb,
    map_estimate,
)
from .assignment import ranked_assignments
from .filtering import (
    BirthModel,
    FilterParams,
    MotionModel,
    SensorModel,
    adaptive_birth,
    cv_motion,
    drop_weak_tracks,
    joint_predict_update,
    predict,
    update,
    update_detailed,
)
from .fusion import (
    FusionWeights,
    MissedDetectionModel,
    fuse_lmb_shared_labels,
    fuse_tracks,
    match_and_fuse,
    merge_duplicate_tracks,
)
from .network import (
    SensorGraph,
    centralized_step,
    complete_graph,
    distributed_step,
    load_topology,
    metropolis_weights,
    ring_graph,
    save_topology,
)
from .metrics import ospa, ospa2
from .scenario import (
    ScenarioConfig,
    Truth,
    generate_measurements,
    generate_truth,
    load_config,
    save_config,
)
from .runner import RunResult, recompute_metrics, run_batch, run_once

__version__ = "0.1.0"

__all__ = [
    "PlmbError",
    "InvalidModelError",
    "EmptyMixtureError",
    "DuplicateLabelError",
    "DegenerateUpdateError",
    "TopologyError",
    "GaussianComponent",
    "MaxMixture",
    "gaussian_possibility",
    "hellinger_distance",
    "mixture_power",
    "mixture_product",
    "normalize",
    "weighted_product",
    "reduce_mixture",
    "supremum",
    "Label",
    "BernoulliTrack",
    "LmbDensity",
    "GlmbHypothesis",
    "DeltaGlmb",
    "cardinality_possibility",
    "lmb_to_delta_glmb",
    "delta_glmb_to_lmb",
    "k_best_subsets",
    "map_estimate",
    "ranked_assignments",
    "MotionModel",
    "SensorModel",
    "BirthModel",
    "FilterParams",
    "cv_motion",
    "predict",
    "update",
    "update_detailed",
    "joint_predict_update",
    "adaptive_birth",
    "drop_weak_tracks",
    "FusionWeights",
    "MissedDetectionModel",
    "fuse_tracks",
    "fuse_lmb_shared_labels",
    "match_and_fuse",
    "merge_duplicate_tracks",
    "SensorGraph",
    "complete_graph",
    "ring_graph",
    "metropolis_weights",
    "save_topology",
    "load_topology",
    "centralized_step",
    "distributed_step",
    "ospa",
    "ospa2",
    "ScenarioConfig",
    "Truth",
    "generate_truth",
    "generate_measurements",
    "load_config",
    "save_config",
    "RunResult",
    "run_once",
    "run_batch",
    "recompute_metrics",
    "__version__",
]
