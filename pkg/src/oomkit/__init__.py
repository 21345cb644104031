"""Operator models of discrete stochastic processes, learned from
trajectories with missing values.

The package splits into small layers: :mod:`oomkit.core` defines the
model algebra, :mod:`oomkit.estimator` counts word frequencies across
missing values, :mod:`oomkit.learner` runs the spectral recovery,
:mod:`oomkit.simulate` provides HMM ground truth and the knockout
mechanism, :mod:`oomkit.evaluation` scores learned models, and
:mod:`oomkit.formats` reads and writes the file formats shared with the
``oomkit`` command line tool.
"""

from .core import (
    MISSING,
    Alphabet,
    IoOom,
    MissingToken,
    MissObsSeq,
    ObsToken,
    Oom,
    augment_to_ioom,
    external_fn,
    is_missing,
    reduce_to_oom,
    similarity_transform,
    stationary_state,
    wildcard_prob,
)
from .estimator import (
    HankelSet,
    QueryWord,
    assemble_hankel,
    count_obs,
    freq_estimate,
    indicator,
    select_words,
)
from .evaluation import (
    CurvePoint,
    RingExperimentConfig,
    RobustEvalConfig,
    RobustPredictor,
    anll,
    laospe,
    learning_curve,
    oom_conditional_robust,
    render_curve_csv,
    write_curve_csv,
)
from .formats import (
    load_hmm,
    load_model,
    read_trajectories,
    save_hmm,
    save_model,
    write_trajectories,
)
from .learner import (
    LearnParams,
    LearnReport,
    RankDeficiencyWarning,
    learn_missing_value_oom,
    learn_short_trajectory_oom,
    pseudo_inverse,
    segment_missing_free,
    spectral_learn,
    truncated_svd,
)
from .simulate import (
    AmsarTriggerPolicy,
    Hmm,
    child_seed,
    corrupt_amsar,
    forward_prob,
    gen_ring_hmm,
    hmm_conditional,
    hmm_stationary,
    hmm_to_oom,
    mild_policy,
    sample_hmm,
    sampled_policy,
    severe_policy,
    spawn_rng,
)

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "MissingToken",
    "ObsToken",
    "is_missing",
    "Alphabet",
    "MissObsSeq",
    "Oom",
    "IoOom",
    "external_fn",
    "wildcard_prob",
    "stationary_state",
    "similarity_transform",
    "augment_to_ioom",
    "reduce_to_oom",
    "QueryWord",
    "indicator",
    "count_obs",
    "freq_estimate",
    "select_words",
    "HankelSet",
    "assemble_hankel",
    "LearnParams",
    "LearnReport",
    "RankDeficiencyWarning",
    "truncated_svd",
    "pseudo_inverse",
    "spectral_learn",
    "segment_missing_free",
    "learn_missing_value_oom",
    "learn_short_trajectory_oom",
    "Hmm",
    "spawn_rng",
    "child_seed",
    "gen_ring_hmm",
    "sample_hmm",
    "forward_prob",
    "hmm_conditional",
    "hmm_stationary",
    "hmm_to_oom",
    "AmsarTriggerPolicy",
    "corrupt_amsar",
    "sampled_policy",
    "mild_policy",
    "severe_policy",
    "RobustEvalConfig",
    "RobustPredictor",
    "oom_conditional_robust",
    "laospe",
    "anll",
    "CurvePoint",
    "RingExperimentConfig",
    "learning_curve",
    "render_curve_csv",
    "write_curve_csv",
    "read_trajectories",
    "write_trajectories",
    "save_model",
    "load_model",
    "save_hmm",
    "load_hmm",
    "__version__",
]
