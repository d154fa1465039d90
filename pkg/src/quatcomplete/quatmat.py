"""Quaternion scalars, dense quaternion matrices, and their complex lift.

A quaternion q = q0 + q1*i + q2*j + q3*k is stored as four reals; an M x N
quaternion matrix is stored as four real planes (component-major layout,
cache friendly for the lift below).  Writing Q = Qa + Qb*j with complex
blocks Qa = Q0 + Q1*sqrt(-1) and Qb = Q2 + Q3*sqrt(-1), the complex adjoint
lift is the 2M x 2N matrix

    [[ Qa,        Qb       ],
     [-conj(Qb),  conj(Qa) ]]

The lift is an algebra homomorphism (products, sums, conjugate transposes
and inverses commute with it), doubles squared Frobenius norms, and doubles
rank, so every heavy numerical kernel here (SVD, eigensolves, linear
solves) runs on ordinary complex matrices and is mapped back afterwards.

All values are immutable after construction; operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Quaternion",
    "QuaternionMatrix",
    "AdjointMatrix",
    "QSVDResult",
    "quat_mul",
    "quat_conj",
    "quat_modulus",
    "adjoint",
    "adjoint_inverse",
    "structure_project",
    "structure_residual",
    "qmat_mul",
    "frobenius_norm",
    "qsvd",
    "qsvd_values",
    "qrank",
]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class Quaternion:
    """Scalar quaternion q0 + q1*i + q2*j + q3*k."""

    q0: float = 0.0
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return quat_mul(self, other)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.q0 + other.q0, self.q1 + other.q1,
                          self.q2 + other.q2, self.q3 + other.q3)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.q0, -self.q1, -self.q2, -self.q3)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return self + (-other)

    def conj(self) -> "Quaternion":
        return quat_conj(self)

    def modulus(self) -> float:
        return quat_modulus(self)

    def is_pure(self, tol: float = 0.0) -> bool:
        return abs(self.q0) <= tol

    def components(self) -> tuple:
        return (self.q0, self.q1, self.q2, self.q3)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product; non-commutative (i*j = k = -j*i)."""
    return Quaternion(
        a.q0 * b.q0 - a.q1 * b.q1 - a.q2 * b.q2 - a.q3 * b.q3,
        a.q0 * b.q1 + a.q1 * b.q0 + a.q2 * b.q3 - a.q3 * b.q2,
        a.q0 * b.q2 - a.q1 * b.q3 + a.q2 * b.q0 + a.q3 * b.q1,
        a.q0 * b.q3 + a.q1 * b.q2 - a.q2 * b.q1 + a.q3 * b.q0,
    )


def quat_conj(a: Quaternion) -> Quaternion:
    """Quaternion conjugate: negate the three imaginary components."""
    return Quaternion(a.q0, -a.q1, -a.q2, -a.q3)


def quat_modulus(a: Quaternion) -> float:
    return math.sqrt(a.q0 ** 2 + a.q1 ** 2 + a.q2 ** 2 + a.q3 ** 2)


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


class QuaternionMatrix:
    """Dense M x N quaternion matrix stored as four read-only real planes."""

    __slots__ = ("q0", "q1", "q2", "q3")

    def __init__(self, q0, q1, q2, q3):
        planes = [np.asarray(p, dtype=float) for p in (q0, q1, q2, q3)]
        shape = planes[0].shape
        if len(shape) != 2:
            raise ValueError("component planes must be 2-D")
        if any(p.shape != shape for p in planes):
            raise ValueError("component planes must share one shape")
        self.q0 = _frozen(planes[0], float)
        self.q1 = _frozen(planes[1], float)
        self.q2 = _frozen(planes[2], float)
        self.q3 = _frozen(planes[3], float)

    # -- constructors -------------------------------------------------

    @classmethod
    def zeros(cls, m: int, n: int) -> "QuaternionMatrix":
        z = np.zeros((m, n))
        return cls(z, z, z, z)

    @classmethod
    def eye(cls, n: int) -> "QuaternionMatrix":
        z = np.zeros((n, n))
        return cls(np.eye(n), z, z, z)

    @classmethod
    def real_diag(cls, values, m: int, n: int) -> "QuaternionMatrix":
        """M x N matrix with the given reals on the main diagonal."""
        values = np.asarray(values, dtype=float)
        d = np.zeros((m, n))
        k = min(m, n, values.size)
        d[np.arange(k), np.arange(k)] = values[:k]
        z = np.zeros((m, n))
        return cls(d, z, z, z)

    @classmethod
    def random(cls, m: int, n: int, rng: np.random.Generator) -> "QuaternionMatrix":
        """All four components i.i.d. standard normal."""
        c = rng.standard_normal((4, m, n))
        return cls(c[0], c[1], c[2], c[3])

    @classmethod
    def from_complex_blocks(cls, qa, qb) -> "QuaternionMatrix":
        qa = np.asarray(qa, dtype=complex)
        qb = np.asarray(qb, dtype=complex)
        return cls(qa.real, qa.imag, qb.real, qb.imag)

    @classmethod
    def from_scalar(cls, q: Quaternion) -> "QuaternionMatrix":
        return cls(*[np.array([[c]]) for c in q.components()])

    # -- basic queries ------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.q0.shape

    @property
    def planes(self) -> tuple:
        return (self.q0, self.q1, self.q2, self.q3)

    def entry(self, i: int, j: int) -> Quaternion:
        return Quaternion(self.q0[i, j], self.q1[i, j], self.q2[i, j], self.q3[i, j])

    def is_pure(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.q0), initial=0.0) <= tol)

    def complex_blocks(self) -> tuple:
        """(Qa, Qb) with Q = Qa + Qb*j."""
        return (self.q0 + 1j * self.q1, self.q2 + 1j * self.q3)

    def frobenius_norm(self) -> float:
        return math.sqrt(sum(float(np.sum(p * p)) for p in self.planes))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(p), initial=0.0)) for p in self.planes)

    def allclose(self, other: "QuaternionMatrix", atol: float = 1e-12) -> bool:
        return all(np.allclose(a, b, atol=atol, rtol=0.0)
                   for a, b in zip(self.planes, other.planes))

    # -- algebra ------------------------------------------------------

    def conj(self) -> "QuaternionMatrix":
        return QuaternionMatrix(self.q0, -self.q1, -self.q2, -self.q3)

    def transpose(self) -> "QuaternionMatrix":
        return QuaternionMatrix(*[p.T for p in self.planes])

    def conj_transpose(self) -> "QuaternionMatrix":
        return QuaternionMatrix(self.q0.T, -self.q1.T, -self.q2.T, -self.q3.T)

    def __add__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        return QuaternionMatrix(*[a + b for a, b in zip(self.planes, other.planes)])

    def __sub__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        return QuaternionMatrix(*[a - b for a, b in zip(self.planes, other.planes)])

    def __neg__(self) -> "QuaternionMatrix":
        return QuaternionMatrix(*[-p for p in self.planes])

    def __mul__(self, scalar: float) -> "QuaternionMatrix":
        s = float(scalar)
        return QuaternionMatrix(*[s * p for p in self.planes])

    __rmul__ = __mul__

    def __matmul__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        return qmat_mul(self, other)

    def __repr__(self) -> str:
        return f"QuaternionMatrix(shape={self.shape})"


class AdjointMatrix:
    """Complex lift of a quaternion matrix, stored by its two defining blocks.

    The logical matrix is 2M x 2N with layout [[Qa, Qb], [-conj(Qb), conj(Qa)]];
    only Qa and Qb (M x N each) are kept.  Full materialization is an explicit
    conversion (to_dense) used by dense kernels.
    """

    __slots__ = ("qa", "qb")

    def __init__(self, qa, qb):
        qa = np.asarray(qa, dtype=complex)
        qb = np.asarray(qb, dtype=complex)
        if qa.ndim != 2 or qa.shape != qb.shape:
            raise ValueError("Qa and Qb must be 2-D with matching shapes")
        self.qa = _frozen(qa, complex)
        self.qb = _frozen(qb, complex)

    @property
    def block_shape(self) -> tuple:
        return self.qa.shape

    @property
    def shape(self) -> tuple:
        m, n = self.qa.shape
        return (2 * m, 2 * n)

    def to_dense(self) -> np.ndarray:
        return np.block([[self.qa, self.qb],
                         [-np.conj(self.qb), np.conj(self.qa)]])

    def to_quaternion(self) -> QuaternionMatrix:
        return QuaternionMatrix.from_complex_blocks(self.qa, self.qb)

    def conj_transpose(self) -> "AdjointMatrix":
        return AdjointMatrix(self.qa.conj().T, -self.qb.T)

    def __matmul__(self, other: "AdjointMatrix") -> "AdjointMatrix":
        # block product of two lifts; exact, structure-preserving by construction
        if self.qa.shape[1] != other.qa.shape[0]:
            raise ValueError("inner dimensions do not agree")
        qa = self.qa @ other.qa - self.qb @ np.conj(other.qb)
        qb = self.qa @ other.qb + self.qb @ np.conj(other.qa)
        return AdjointMatrix(qa, qb)

    def __add__(self, other: "AdjointMatrix") -> "AdjointMatrix":
        return AdjointMatrix(self.qa + other.qa, self.qb + other.qb)

    def __sub__(self, other: "AdjointMatrix") -> "AdjointMatrix":
        return AdjointMatrix(self.qa - other.qa, self.qb - other.qb)

    def __mul__(self, scalar: float) -> "AdjointMatrix":
        s = float(scalar)
        return AdjointMatrix(s * self.qa, s * self.qb)

    __rmul__ = __mul__

    def scale_columns(self, values) -> "AdjointMatrix":
        """Right-multiply by the lift of a real diagonal (per-pair column scaling)."""
        v = np.asarray(values, dtype=float)
        return AdjointMatrix(self.qa * v[None, :], self.qb * v[None, :])

    def frobenius_norm(self) -> float:
        acc = float(np.sum(np.abs(self.qa) ** 2) + np.sum(np.abs(self.qb) ** 2))
        return math.sqrt(2.0 * acc)

    def __repr__(self) -> str:
        return f"AdjointMatrix(shape={self.shape})"


def adjoint(q: QuaternionMatrix) -> AdjointMatrix:
    """Complex lift of a quaternion matrix."""
    qa, qb = q.complex_blocks()
    return AdjointMatrix(qa, qb)


def adjoint_inverse(c: AdjointMatrix) -> QuaternionMatrix:
    """Inverse lift; exact round trip with adjoint()."""
    return c.to_quaternion()


def structure_project(c) -> AdjointMatrix:
    """Nearest structured lift of a raw even-dimensioned complex matrix.

    Fixed point on already-structured input; used to repair rounding drift
    after dense kernels whose exact result is structured.
    """
    c = np.asarray(c, dtype=complex)
    if c.ndim != 2 or c.shape[0] % 2 or c.shape[1] % 2:
        raise ValueError("expected a 2-D complex matrix with even dimensions")
    m, n = c.shape[0] // 2, c.shape[1] // 2
    qa = 0.5 * (c[:m, :n] + np.conj(c[m:, n:]))
    qb = 0.5 * (c[:m, n:] - np.conj(c[m:, :n]))
    return AdjointMatrix(qa, qb)


def structure_residual(c) -> float:
    """Relative distance of a raw complex matrix from its structured projection."""
    c = np.asarray(c, dtype=complex)
    nrm = np.linalg.norm(c)
    if nrm == 0.0:
        return 0.0
    return float(np.linalg.norm(c - structure_project(c).to_dense()) / nrm)


def qmat_mul(p: QuaternionMatrix, q: QuaternionMatrix) -> QuaternionMatrix:
    """Quaternion matrix product, computed through the complex lift."""
    if p.shape[1] != q.shape[0]:
        raise ValueError(f"inner dimensions do not agree: {p.shape} x {q.shape}")
    return adjoint_inverse(adjoint(p) @ adjoint(q))


def frobenius_norm(q: QuaternionMatrix) -> float:
    return q.frobenius_norm()


# -- singular value machinery on the lift ------------------------------

def _pair_partner(u: np.ndarray, half: int) -> np.ndarray:
    """Structured partner column: [u_top; u_bot] -> [-conj(u_bot); conj(u_top)].

    [u, partner(u)] is the lift of a quaternion column; the partner is always
    orthogonal to u and has the same norm.
    """
    return np.concatenate([-np.conj(u[half:]), np.conj(u[:half])])


def _orthogonalize(vec: np.ndarray, basis: np.ndarray) -> np.ndarray:
    v = vec.astype(complex, copy=True)
    if basis.shape[1]:
        for _ in range(2):  # two Gram-Schmidt sweeps for stability
            v -= basis @ (basis.conj().T @ v)
    return v


def _extend_structured(basis: np.ndarray, candidates, half: int) -> np.ndarray:
    """Append one structured orthonormal pair built from the first usable candidate."""
    dim = 2 * half
    fallbacks = (np.eye(dim)[:, t] for t in range(dim))

    def _gen():
        yield from candidates
        yield from fallbacks

    for cand in _gen():
        v = _orthogonalize(cand, basis)
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            v = v / nrm
            return np.concatenate([basis, v[:, None], _pair_partner(v, half)[:, None]], axis=1)
    raise np.linalg.LinAlgError("could not extend structured basis")  # pragma: no cover


def _svd_lift(dense: np.ndarray, m: int, n: int, npairs: int,
              full_left: bool = False, full_right: bool = False):
    """Paired, structure-respecting SVD of a lifted 2m x 2n matrix.

    Singular values of a lift occur in equal pairs but LAPACK's basis within
    each degenerate pair is gauge-arbitrary, so raw singular vectors need not
    be structured.  For each pair one representative left column is extracted
    and completed with its structured partner (re-orthonormalized against
    everything accepted so far); right columns are recovered from the matrix
    itself so the triple reconstructs the input.

    Returns (left, sigma, right): left is 2m x L with one representative per
    pair (L = m if full_left else npairs), right is 2n x R likewise, sigma has
    min(m, n) per-pair values (entries beyond npairs retain the raw pairing
    average).
    """
    w, s, zh = np.linalg.svd(dense)
    z = zh.conj().T
    k = min(m, n)
    sigma = np.zeros(k)
    if s.size:
        t = np.arange(k)
        sigma = 0.5 * (s[2 * t] + s[2 * t + 1])
    scale = sigma[0] if k and sigma[0] > 0 else 0.0
    cutoff = 1e-14 * scale

    nleft = m if full_left else min(npairs, m)
    left = np.zeros((2 * m, 0), dtype=complex)
    for t in range(nleft):
        cands = [w[:, 2 * t], w[:, 2 * t + 1]] if 2 * t + 1 < 2 * m else []
        left = _extend_structured(left, cands, m)

    nright = n if full_right else min(npairs, n)
    right = np.zeros((2 * n, 0), dtype=complex)
    for t in range(nright):
        if t < k and sigma[t] > cutoff:
            v = dense.conj().T @ left[:, 2 * t]
            sigma[t] = np.linalg.norm(v)
            cands = [v]
        else:
            cands = [z[:, 2 * t], z[:, 2 * t + 1]] if 2 * t + 1 < 2 * n else []
        right = _extend_structured(right, cands, n)

    # keep pair representatives only (even columns); partners are implied
    return left[:, 0::2], sigma, right[:, 0::2]


def _columns_to_quaternion(reps: np.ndarray, half: int) -> QuaternionMatrix:
    """Quaternion matrix whose lift has the given pair representatives as columns."""
    qa = reps[:half, :]
    qb = -np.conj(reps[half:, :])
    return QuaternionMatrix.from_complex_blocks(qa, qb)


@dataclass(frozen=True)
class QSVDResult:
    """Quaternion SVD: q = a @ diag_embed(sigma) @ b with unitary a (MxM), b (NxN)."""

    a: QuaternionMatrix
    sigma: np.ndarray  # min(M, N) non-increasing per-pair singular values
    b: QuaternionMatrix
    rank: int

    def diag_embed(self) -> QuaternionMatrix:
        m = self.a.shape[0]
        n = self.b.shape[0]
        return QuaternionMatrix.real_diag(self.sigma, m, n)

    def reconstruct(self) -> QuaternionMatrix:
        return self.a @ self.diag_embed() @ self.b


def qsvd(q: QuaternionMatrix, tol: float = RANK_TOL) -> QSVDResult:
    """Singular value decomposition of a quaternion matrix via its lift.

    The complex SVD of the lift has each singular value twice; one value per
    pair is kept and unitary quaternion factors are rebuilt from structured
    pair columns.  rank counts values above tol * sigma_max.
    """
    m, n = q.shape
    dense = adjoint(q).to_dense()
    left, sigma, right = _svd_lift(dense, m, n, npairs=min(m, n),
                                   full_left=True, full_right=True)
    a = _columns_to_quaternion(left, m)
    b = _columns_to_quaternion(right, n).conj_transpose()
    if sigma.size and sigma[0] > 0:
        rank = int(np.count_nonzero(sigma > tol * sigma[0]))
    else:
        rank = 0
    sig = sigma.copy()
    sig.setflags(write=False)
    return QSVDResult(a=a, sigma=sig, b=b, rank=rank)


def qsvd_values(q: QuaternionMatrix) -> np.ndarray:
    """Per-pair singular values only (no factor recovery; cheap for large inputs)."""
    s = np.linalg.svd(adjoint(q).to_dense(), compute_uv=False)
    k = min(q.shape)
    t = np.arange(k)
    return 0.5 * (s[2 * t] + s[2 * t + 1])


def qrank(q: QuaternionMatrix, tol: float = RANK_TOL) -> int:
    """Quaternion rank: half the numerical rank of the lift."""
    s = np.linalg.svd(adjoint(q).to_dense(), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0])) // 2
