"""Estimator-style front end for color-image completion.

`LowRankImageCompleter` follows the scikit-learn transformer protocol so the
recovery step composes with pipelines and parameter search: hyperparameters
in `__init__`, `fit`/`transform` over arrays, `get_params`/`set_params` from
the base class.  Missing data is marked with NaN; a pixel with any NaN
channel counts as unobserved (observation is per pixel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._errors import DataError
from .imaging import ObservationMask, decode_image, encode_image, project_omega, validate_image
from .quatmat import QuaternionMatrix
from .solver import SolverConfig, SolverTrace, solve

__all__ = ["CompletionResult", "complete_masked_image", "LowRankImageCompleter"]


@dataclass
class CompletionResult:
    """Outcome of one image-completion run."""

    recovered: np.ndarray          # (M, N, 3) in [0, 255]
    observed: np.ndarray           # zero-filled input image
    mask: ObservationMask
    completed_matrix: QuaternionMatrix
    trace: SolverTrace

    @property
    def final_rank(self) -> int:
        return self.trace.final_rank

    @property
    def final_quaternion_rank(self) -> int:
        return self.trace.final_rank // 2


def clamp_init_rank(init_rank: int, m: int, n: int) -> int:
    """Clamp the starting rank to the largest feasible even value."""
    cap = 2 * min(m, n)
    rank = min(init_rank, cap)
    return rank - (rank % 2)


def complete_masked_image(image, mask: ObservationMask,
                          cfg: SolverConfig = None) -> CompletionResult:
    """Run the completion pipeline: encode, solve, decode."""
    arr = validate_image(image)
    cfg = cfg or SolverConfig()
    t = encode_image(arr)
    result = solve(t, mask, cfg)
    recovered = decode_image(result.x)
    observed = decode_image(project_omega(t, mask))
    return CompletionResult(
        recovered=recovered,
        observed=observed,
        mask=mask,
        completed_matrix=result.x,
        trace=result.trace,
    )


class LowRankImageCompleter(TransformerMixin, BaseEstimator):
    """Impute missing pixels of an (M, N, 3) image by low-rank completion.

    Parameters mirror the solver configuration; `init_rank` is clamped to the
    image size at solve time.  `fit(X)` runs the completion and stores the
    result; `transform(X)` returns the completed image (reusing the fitted
    result when X is the fitted input, re-solving otherwise).
    """

    def __init__(self, lam=0.5, init_rank=50, tol=1e-3, max_iters=1000,
                 mu_threshold=10.0, seed=0, allow_multiple_rank_drops=True,
                 relative_tol=False):
        self.lam = lam
        self.init_rank = init_rank
        self.tol = tol
        self.max_iters = max_iters
        self.mu_threshold = mu_threshold
        self.seed = seed
        self.allow_multiple_rank_drops = allow_multiple_rank_drops
        self.relative_tol = relative_tol

    # -- protocol -----------------------------------------------------

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        result = self._solve(X)
        self.fitted_input_ = X
        self.result_ = result
        self.completed_image_ = result.recovered
        self.trace_ = result.trace
        self.rank_ = result.final_quaternion_rank
        self.n_iter_ = result.trace.iterations
        return self

    def transform(self, X):
        if not hasattr(self, "result_"):
            raise NotFittedError("this LowRankImageCompleter instance is not fitted yet")
        X = np.asarray(X, dtype=float)
        if X.shape == self.fitted_input_.shape and np.array_equal(
                X, self.fitted_input_, equal_nan=True):
            return self.completed_image_
        return self._solve(X).recovered

    def fit_transform(self, X, y=None):
        return self.fit(X, y).completed_image_

    # -- internals ----------------------------------------------------

    def _solve(self, X) -> CompletionResult:
        if X.ndim != 3 or X.shape[2] != 3:
            raise DataError(f"expected an (M, N, 3) image array, got shape {X.shape}")
        missing = np.isnan(X).any(axis=2)
        filled = np.where(missing[:, :, None], 0.0, X)
        m, n = missing.shape
        total = m * n
        ratio = float(total - missing.sum()) / total if total else 0.0
        mask = ObservationMask(~missing, ratio, "explicit")
        cfg = SolverConfig(
            lam=self.lam,
            init_rank=clamp_init_rank(self.init_rank, m, n),
            tol=self.tol,
            max_iters=self.max_iters,
            mu_threshold=self.mu_threshold,
            seed=self.seed,
            allow_multiple_rank_drops=self.allow_multiple_rank_drops,
            relative_tol=self.relative_tol,
        )
        return complete_masked_image(filled, mask, cfg)
