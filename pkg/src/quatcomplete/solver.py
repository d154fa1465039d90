"""Low-rank quaternion matrix completion by regularized alternating minimization.

Working on the complex lift, the objective

    G(fU, fV, X) = 1/2 ||fU @ fV - f(X)||_F^2 + lam/2 (||fU||_F^2 + ||fV||_F^2)

is minimized subject to X matching the observed data on the mask.  Each
iteration solves the two ridge subproblems for the factors in closed form,
refills X from the factor product off the mask, and runs an eigenvalue-gap
heuristic that shrinks the working rank when a pronounced spectral drop
appears.  Block minimizations are exact, so the objective sequence is
non-increasing while the rank stays fixed.

Factors live on the lift with its block structure maintained throughout;
ranks on the lift are even (each quaternion rank contributes a conjugate
pair), and every truncation respects that pairing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from ._errors import ConfigError, DataError
from .imaging import ObservationMask, project_omega
from .quatmat import (
    AdjointMatrix,
    QuaternionMatrix,
    _columns_to_quaternion,
    _svd_lift,
    adjoint,
    adjoint_inverse,
    structure_project,
)

__all__ = [
    "SolverConfig",
    "FactorPair",
    "RankGapReport",
    "SolverTrace",
    "SolveResult",
    "zero_fill",
    "objective",
    "update_factor_u",
    "update_factor_v",
    "update_completion",
    "rank_gap_statistic",
    "shrink_rank",
    "initial_factors",
    "solve",
]

EIGENVALUE_FLOOR = 1e-12  # relative floor below which eigenvalues are not trusted
PINV_CUT = 1e-12          # relative eigenvalue cutoff for the lam = 0 pseudoinverse


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a completion run.

    lam         ridge weight on the factor norms (>= 0)
    init_rank   starting rank of the lifted factors; must be even
    tol         stopping threshold on |eps(t) - eps(t+1)| where
                eps = ||off-mask part of X||_F; absolute by default
    relative_tol  interpret tol relative to ||observed data||_F
    mu_threshold  eigenvalue-gap statistic level that triggers a rank drop
    seed        RNG seed for the factor initialization
    allow_multiple_rank_drops  if False, at most one drop per run
    """

    lam: float = 0.5
    init_rank: int = 50
    tol: float = 1e-3
    max_iters: int = 1000
    mu_threshold: float = 10.0
    seed: int = 0
    allow_multiple_rank_drops: bool = True
    relative_tol: bool = False
    blas_threads: int = 1  # deterministic default; desk-scale kernels gain nothing from more

    def validate(self, m: int, n: int) -> None:
        if self.lam < 0.0:
            raise ConfigError("lam must be non-negative")
        if self.init_rank <= 0 or self.init_rank % 2:
            raise ConfigError("init_rank must be a positive even integer")
        if self.init_rank > 2 * min(m, n):
            raise ConfigError(
                f"init_rank {self.init_rank} exceeds 2*min(M, N) = {2 * min(m, n)}")
        if self.tol <= 0.0:
            raise ConfigError("tol must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")


@dataclass(frozen=True)
class FactorPair:
    """Lifted factors u (2M x r) and v (r x 2N), r even, both structured."""

    u: AdjointMatrix
    v: AdjointMatrix

    @property
    def rank(self) -> int:
        return 2 * self.u.block_shape[1]

    def product(self) -> AdjointMatrix:
        return self.u @ self.v


@dataclass(frozen=True)
class RankGapReport:
    """Eigenvalue-gap diagnostics of the factor Gram spectrum."""

    eigenvalues: np.ndarray   # non-increasing
    quotients: np.ndarray     # d_m / d_{m+1} over the usable prefix
    gap_index: int            # 1-based index of the largest quotient; 0 = none
    mu: float                 # gap statistic; drop when >= threshold


@dataclass
class SolverTrace:
    """Per-iteration history of a solve run."""

    objectives: List[float] = field(default_factory=list)
    eps_history: List[float] = field(default_factory=list)
    rank_history: List[int] = field(default_factory=list)
    iter_seconds: List[float] = field(default_factory=list)
    termination: str = ""

    @property
    def iterations(self) -> int:
        return len(self.eps_history)

    @property
    def rank_drops(self) -> int:
        ranks = self.rank_history
        return sum(1 for a, b in zip(ranks, ranks[1:]) if b < a)

    @property
    def final_rank(self) -> int:
        return self.rank_history[-1] if self.rank_history else 0


class SolveResult(NamedTuple):
    x: QuaternionMatrix
    factors: FactorPair
    trace: SolverTrace


def zero_fill(t: QuaternionMatrix, omega: ObservationMask) -> QuaternionMatrix:
    """Observed entries of t, zero elsewhere."""
    return project_omega(t, omega)


def objective(pair: FactorPair, x: QuaternionMatrix, lam: float) -> float:
    """Value of the regularized factorization objective at (pair, x)."""
    return _objective(pair.product(), adjoint(x), pair.u, pair.v, lam)


def _objective(product: AdjointMatrix, fx: AdjointMatrix,
               fu: AdjointMatrix, fv: AdjointMatrix, lam: float) -> float:
    fit = (product - fx).frobenius_norm() ** 2
    reg = fu.frobenius_norm() ** 2 + fv.frobenius_norm() ** 2
    return 0.5 * fit + 0.5 * lam * reg


def _ridge_solve(gram: np.ndarray, lam: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (gram + lam I) Y = rhs for Hermitian PSD gram.

    lam > 0 uses a definite Cholesky factor-and-solve; lam = 0 falls back to
    an eigendecomposition pseudoinverse with a relative eigenvalue cutoff.
    """
    r = gram.shape[0]
    if lam > 0.0:
        c, low = scipy.linalg.cho_factor(gram + lam * np.eye(r), check_finite=False)
        return scipy.linalg.cho_solve((c, low), rhs, check_finite=False)
    w, q = np.linalg.eigh(gram)
    cut = PINV_CUT * max(w[-1], 0.0)
    inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    return q @ (inv[:, None] * (q.conj().T @ rhs))


def _update_u(fx: AdjointMatrix, fv: AdjointMatrix, lam: float) -> AdjointMatrix:
    fvh = fv.conj_transpose()
    gram = (fv @ fvh).to_dense()
    rhs = (fx @ fvh).to_dense()
    # U = RHS (gram + lam I)^-1, via the Hermitian solve on U^H
    sol = _ridge_solve(gram, lam, rhs.conj().T)
    return structure_project(sol.conj().T)


def _update_v(fx: AdjointMatrix, fu: AdjointMatrix, lam: float):
    fuh = fu.conj_transpose()
    gram = (fuh @ fu).to_dense()
    rhs = (fuh @ fx).to_dense()
    v = structure_project(_ridge_solve(gram, lam, rhs))
    return v, gram


def update_factor_u(pair: FactorPair, x: QuaternionMatrix, lam: float) -> AdjointMatrix:
    """Exact minimizer of the objective in the left factor."""
    if lam < 0.0:
        raise ConfigError("lam must be non-negative")
    return _update_u(adjoint(x), pair.v, lam)


def update_factor_v(pair: FactorPair, x: QuaternionMatrix, lam: float) -> AdjointMatrix:
    """Exact minimizer of the objective in the right factor."""
    if lam < 0.0:
        raise ConfigError("lam must be non-negative")
    v, _ = _update_v(adjoint(x), pair.u, lam)
    return v


def _complete(product: AdjointMatrix, t_fill: QuaternionMatrix,
              omega: ObservationMask) -> QuaternionMatrix:
    low_rank = adjoint_inverse(product)
    keep = omega.observed
    planes = [np.where(keep, tp, lp)
              for tp, lp in zip(t_fill.planes, low_rank.planes)]
    return QuaternionMatrix(*planes)


def update_completion(pair: FactorPair, t: QuaternionMatrix,
                      omega: ObservationMask) -> QuaternionMatrix:
    """Refill: observed entries from t, the rest from the factor product."""
    if t.shape != omega.shape:
        raise DataError(f"mask shape {omega.shape} does not match data {t.shape}")
    return _complete(pair.product(), zero_fill(t, omega), omega)


def rank_gap_statistic(d) -> RankGapReport:
    """Gap statistic over a non-increasing eigenvalue sequence.

    Values below EIGENVALUE_FLOOR relative to the largest are dropped before
    quotients are formed; with fewer than two usable values the report is
    a no-drop (mu = 0).
    """
    d = np.asarray(d, dtype=float)
    if d.size and np.any(d[:-1] - d[1:] < -1e-9 * max(d[0], 1.0)):
        raise ValueError("eigenvalues must be sorted non-increasing")
    usable = d[d > EIGENVALUE_FLOOR * d[0]] if d.size and d[0] > 0 else d[:0]
    if usable.size < 2:
        return RankGapReport(d, np.empty(0), 0, 0.0)
    quot = usable[:-1] / usable[1:]
    p = int(np.argmax(quot))  # first index on ties
    rest = float(np.sum(quot) - quot[p])
    mu = float("inf") if rest <= 0.0 else (usable.size - 1) * float(quot[p]) / rest
    return RankGapReport(d, quot, p + 1, mu)


def shrink_rank(pair: FactorPair, p: int) -> FactorPair:
    """Truncate the factors to rank p (rounded up to even) via the product SVD.

    The kept singular pairs are rebuilt as structured columns, so the new
    factors reproduce the best even-rank-p approximation of the old product
    and keep the lift structure exactly.  No-op when p >= current rank.
    """
    if p <= 0:
        raise ValueError("target rank must be positive")
    p_even = p + (p & 1)
    if p_even >= pair.rank:
        return pair
    m = pair.u.block_shape[0]
    n = pair.v.block_shape[1]
    dense = pair.product().to_dense()
    left, sigma, right = _svd_lift(dense, m, n, npairs=p_even // 2)
    u_quat = _columns_to_quaternion(left, m)
    new_u = adjoint(u_quat).scale_columns(sigma[: p_even // 2])
    new_v = adjoint(_columns_to_quaternion(right, n)).conj_transpose()
    return FactorPair(new_u, new_v)


def initial_factors(m: int, n: int, rank: int, seed: int) -> FactorPair:
    """Lifts of random quaternion factors (all components standard normal)."""
    rng = np.random.default_rng(seed)
    k = rank // 2
    u0 = QuaternionMatrix.random(m, k, rng)
    v0 = QuaternionMatrix.random(k, n, rng)
    return FactorPair(adjoint(u0), adjoint(v0))


def solve(t: QuaternionMatrix, omega: ObservationMask,
          cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Complete t on the unobserved set by alternating minimization.

    Per iteration: closed-form ridge update of each factor, refill of the
    completion from the factor product, then the rank-decreasing check on
    the spectrum of the left factor's Gram matrix.  Stops when consecutive
    eps values stabilize within tol or the iteration budget is exhausted.
    The returned completion matches t exactly on the observed set.
    """
    cfg = cfg or SolverConfig()
    m, n = t.shape
    cfg.validate(m, n)
    if t.shape != omega.shape:
        raise DataError(f"mask shape {omega.shape} does not match data {t.shape}")
    if omega.n_observed == 0:
        raise ConfigError("observation mask is empty")
    if not all(np.all(np.isfinite(p)) for p in t.planes):
        raise DataError("input matrix contains non-finite entries")
    with threadpool_limits(limits=cfg.blas_threads):
        return _solve_loop(t, omega, cfg)


def _solve_loop(t: QuaternionMatrix, omega: ObservationMask,
                cfg: SolverConfig) -> SolveResult:
    m, n = t.shape
    pair = initial_factors(m, n, cfg.init_rank, cfg.seed)
    t_fill = zero_fill(t, omega)
    x = t_fill
    fx = adjoint(x)

    threshold = cfg.tol * (t_fill.frobenius_norm() if cfg.relative_tol else 1.0)
    trace = SolverTrace()
    drops_allowed = True
    eps_prev = None

    for _ in range(cfg.max_iters):
        tic = time.perf_counter()

        fu = _update_u(fx, pair.v, cfg.lam)
        fv, gram_u = _update_v(fx, fu, cfg.lam)
        pair = FactorPair(fu, fv)

        product = pair.product()
        x = _complete(product, t_fill, omega)
        fx = adjoint(x)

        eps = (x - t_fill).frobenius_norm()
        trace.objectives.append(_objective(product, fx, fu, fv, cfg.lam))
        trace.eps_history.append(eps)
        trace.rank_history.append(pair.rank)

        if drops_allowed:
            d = np.linalg.eigvalsh(gram_u)[::-1]
            report = rank_gap_statistic(np.maximum(d, 0.0))
            if report.mu >= cfg.mu_threshold and report.gap_index > 0:
                shrunk = shrink_rank(pair, report.gap_index)
                if shrunk.rank < pair.rank:
                    pair = shrunk
                    if not cfg.allow_multiple_rank_drops:
                        drops_allowed = False

        trace.iter_seconds.append(time.perf_counter() - tic)

        if eps_prev is not None and abs(eps_prev - eps) < threshold:
            trace.termination = "tolerance"
            break
        eps_prev = eps
    else:
        trace.termination = "max_iters"

    return SolveResult(x, pair, trace)
