"""Deep restricted kernel machines: stacked kernel-PCA levels under
orthonormality constraints with a trainable classification head."""

__version__ = "0.1.0"

from .baselines import EigenResult, LssvmDualModel, kpca_eigen, lssvm_dual_train, mlp_baseline_train
from .data_io import Dataset, load_csv, load_libsvm, load_paired, standardize_split, stratified_subset
from .errors import (
    ConfigError,
    DataError,
    DrkmError,
    InvalidInputError,
    NumericalFailureError,
    RankDeficiencyWarning,
    UnderflowError,
    UnsupportedGradientError,
)
from .inference import (
    DrkmModel,
    OneVsAllModel,
    decision_values,
    evaluate_accuracy,
    fit_model,
    predict,
    predict_batch,
    smoother_latent,
    smoother_latent_batch,
    train_one_vs_all,
)
from .kernels import KernelSpec, eval_kernel, kernel_input_gradient, kernel_matrix, median_pairwise_distance
from .model import (
    DrkmState,
    HeadLssvm,
    HeadMlp,
    LevelConfig,
    ObjectiveBreakdown,
    conjugate_features,
    eval_gradients,
    eval_objective,
    head_decision,
)
from .model_io import deserialize_model, serialize_model
from .optimizer import AdamConfig, TrainConfig, TrainTrace, adam_update, pgd_train
from .stiefel import is_on_stiefel, project_stiefel, random_stiefel, tangent_project
