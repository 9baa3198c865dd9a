"""Subset selection for weakly-labeled training data.

Pipeline: aggregate labeling-function outputs into pseudolabels (majority
vote or Dawid-Skene), rank covered examples by a neighborhood cut statistic
or soft-label entropy, keep the best beta fraction, and train a linear end
model across a beta grid. A synthetic module checks the class-conditional
noise theory the ranking relies on.
"""

from ._kernels import backend_name
from .data_model import (
    ABSTAIN,
    Dataset,
    EmbeddingMatrix,
    LabelMatrix,
    PseudoLabeling,
    load_embeddings,
    load_gold,
    load_label_matrix,
    validate_dataset,
    write_embeddings,
    write_gold,
    write_label_matrix,
)
from .end_model import (
    DEFAULT_BETAS,
    EvalReport,
    LinearModel,
    SelectorConfig,
    SweepResult,
    TrainConfig,
    beta_sweep,
    compute_scores,
    evaluate,
    fit_logistic,
    train,
)
from .errors import (
    CutselectError,
    DegenerateError,
    FormatError,
    MethodUnavailableError,
    ParameterError,
)
from .label_models import (
    DawidSkeneModel,
    class_marginals,
    dawid_skene_fit,
    dawid_skene_posteriors,
    majority_vote,
    model_to_json,
)
from .neighbor_graph import NeighborGraph, dump_graph_csv, knn_brute_force, symmetrize
from .selectors import (
    ScoredSelection,
    cut_statistic_score_with_reference,
    cut_statistic_scores,
    entropy_scores,
    relabel_by_neighbors,
    select_stratified,
    select_top_beta,
)
from .synth_theory import (
    TwoViewConfig,
    TwoViewSample,
    generate,
    lemma_rhs,
    noise_params,
    tradeoff_curve,
    verify_lemma,
)

__version__ = "0.1.0"
