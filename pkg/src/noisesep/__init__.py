"""Robust learning under sparse corruption via over-parameterized descent.

The package studies one mechanism in two settings.  A corruption vector is
written as an elementwise difference of squares ``u*u - v*v`` and trained
jointly with the model by gradient descent from a tiny initialization; the
discrepant learning rate ``alpha`` acts as an implicit l1 penalty with
weight ``-ln(gamma) / (2 alpha)``, so the method sparsely separates the
corruption from the signal without an explicit regularizer.

Modules: :mod:`~noisesep.linalg` (SVD conventions, seeded RNG),
:mod:`~noisesep.instances` (corrupted linear systems, noisy-label blobs),
:mod:`~noisesep.descent` (the over-parameterized GD solver and reduced
flow), :mod:`~noisesep.convex` (the equivalent constrained l2/l1 program,
KKT verification), :mod:`~noisesep.landscape` (strict-saddle certificates),
:mod:`~noisesep.recovery` (incoherence and null-space recovery conditions),
:mod:`~noisesep.classifier` / :mod:`~noisesep.training` (noise-separating
classifier), :mod:`~noisesep.experiments` + :mod:`~noisesep.cli`
(reproduction tables and figures).
"""

from .convex import (
    ConvexSolution,
    KktReport,
    alpha_from_lambda,
    lambda_threshold,
    solve_convex,
    verify_kkt,
)
from .descent import (
    DivergenceError,
    FlowResult,
    GdConfig,
    GdResult,
    GdState,
    StiffnessError,
    gd_step,
    init_state,
    objective,
    run_flow_ode,
    run_gd,
)
from .instances import (
    LinearInstance,
    NoisyDataset,
    apply_asymmetric_noise,
    apply_symmetric_noise,
    coherence,
    gen_classification_dataset,
    gen_linear_instance,
    onehot,
)
from .landscape import (
    CriticalPointReport,
    classify_critical_point,
    full_gradient,
    hessian_quadratic_form,
)
from .linalg import (
    CompactSvd,
    RangeViolationError,
    make_rng,
    min_norm_solve,
    project_row_space,
    svd_compact,
)
from .recovery import (
    RecoveryCertificate,
    RecoveryErrors,
    build_certificate,
    incoherence_condition,
    nsp_rho_bound,
    nsp_sampled_estimate,
    recovery_errors,
)
from .classifier import (
    ClassifierState,
    MlpClassifier,
    ce_loss_and_grads,
    class_balance_penalty,
    consistency_penalty,
    corrected_forward,
    floor_normalize,
    mse_loss_and_grad_v,
    noise_detection_metrics,
    noise_term,
)
from .training import TrainConfig, load_checkpoint, save_checkpoint, train_model

__all__ = [name for name in dir() if not name.startswith("_")]
