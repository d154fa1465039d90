"""Low-rank quaternion matrix completion for color-image recovery.

Color images become pure quaternion matrices (one quaternion per pixel),
are lifted to structured complex matrices, and missing pixels are filled
by regularized alternating minimization with automatic rank estimation.
"""

from ._errors import ConfigError, DataError
from .completer import CompletionResult, LowRankImageCompleter, complete_masked_image
from .imaging import (
    ObservationMask,
    decode_image,
    encode_image,
    load_image,
    project_omega,
    sample_image_path,
    sample_mask,
    save_image,
    validate_image,
)
from .metrics import MetricsConfig, fsim, psnr, rse, ssim
from .quatmat import (
    AdjointMatrix,
    QSVDResult,
    Quaternion,
    QuaternionMatrix,
    adjoint,
    adjoint_inverse,
    frobenius_norm,
    qmat_mul,
    qrank,
    qsvd,
    qsvd_values,
    quat_conj,
    quat_modulus,
    quat_mul,
    structure_project,
    structure_residual,
)
from .solver import (
    FactorPair,
    RankGapReport,
    SolveResult,
    SolverConfig,
    SolverTrace,
    objective,
    rank_gap_statistic,
    shrink_rank,
    solve,
    update_completion,
    update_factor_u,
    update_factor_v,
    zero_fill,
)

__version__ = "0.1.0"

__all__ = [
    "AdjointMatrix",
    "CompletionResult",
    "ConfigError",
    "DataError",
    "FactorPair",
    "LowRankImageCompleter",
    "MetricsConfig",
    "ObservationMask",
    "QSVDResult",
    "Quaternion",
    "QuaternionMatrix",
    "RankGapReport",
    "SolveResult",
    "SolverConfig",
    "SolverTrace",
    "adjoint",
    "adjoint_inverse",
    "complete_masked_image",
    "decode_image",
    "encode_image",
    "frobenius_norm",
    "fsim",
    "load_image",
    "objective",
    "project_omega",
    "psnr",
    "qmat_mul",
    "qrank",
    "qsvd",
    "qsvd_values",
    "quat_conj",
    "quat_modulus",
    "quat_mul",
    "rank_gap_statistic",
    "rse",
    "sample_image_path",
    "sample_mask",
    "save_image",
    "shrink_rank",
    "solve",
    "ssim",
    "structure_project",
    "structure_residual",
    "update_completion",
    "update_factor_u",
    "update_factor_v",
    "validate_image",
    "zero_fill",
]
