"""Solver tests: closed-form updates, gap statistic, shrink, full runs.

Expected values for the gap statistic were computed by hand from the
quotient formula and are re-derived in-test with an independent
implementation.
"""

import math

import numpy as np
import pytest

from quatcomplete import (
    ConfigError,
    DataError,
    FactorPair,
    Quaternion,
    QuaternionMatrix,
    SolverConfig,
    adjoint,
    adjoint_inverse,
    objective,
    qrank,
    rank_gap_statistic,
    shrink_rank,
    solve,
    structure_residual,
    update_completion,
    update_factor_u,
    update_factor_v,
    zero_fill,
)
from quatcomplete.imaging import ObservationMask, sample_mask
from quatcomplete.solver import initial_factors


def rank2_problem():
    """Frozen exact-recovery instance: rank-2 30x30 at SR 0.7."""
    rng = np.random.default_rng(5)
    truth = QuaternionMatrix.random(30, 2, rng) @ QuaternionMatrix.random(2, 30, rng)
    mask = sample_mask(30, 30, 0.7, seed=102)
    return truth, mask


def gap_oracle(d):
    """Independent quotient-statistic computation."""
    d = [v for v in d if v > 1e-12 * d[0]]
    quots = [d[m] / d[m + 1] for m in range(len(d) - 1)]
    p = quots.index(max(quots))
    mu = (len(d) - 1) * quots[p] / (sum(quots) - quots[p])
    return p + 1, mu


# -- zero fill ------------------------------------------------------------

def test_zero_fill_full_and_empty():
    rng = np.random.default_rng(0)
    t = QuaternionMatrix.random(3, 4, rng)
    assert zero_fill(t, ObservationMask.full(3, 4)).allclose(t, atol=0)
    assert zero_fill(t, ObservationMask.empty(3, 4)).frobenius_norm() == 0.0


def test_zero_fill_single_entry():
    rng = np.random.default_rng(1)
    t = QuaternionMatrix.random(2, 2, rng)
    mask = ObservationMask.from_indices(2, 2, [(0, 0)])
    filled = zero_fill(t, mask)
    assert filled.entry(0, 0) == t.entry(0, 0)
    assert filled.entry(0, 1).components() == (0, 0, 0, 0)
    assert filled.entry(1, 1).components() == (0, 0, 0, 0)


def test_zero_fill_dimension_mismatch():
    rng = np.random.default_rng(2)
    with pytest.raises(DataError):
        zero_fill(QuaternionMatrix.random(3, 3, rng), ObservationMask.full(2, 3))


# -- objective -------------------------------------------------------------

def test_objective_zero_case():
    z = adjoint(QuaternionMatrix.zeros(2, 1))
    pair = FactorPair(z, adjoint(QuaternionMatrix.zeros(1, 2)))
    assert objective(pair, QuaternionMatrix.zeros(2, 2), 1.0) == 0.0


def test_objective_exact_factorization():
    rng = np.random.default_rng(3)
    u = QuaternionMatrix.random(4, 2, rng)
    v = QuaternionMatrix.random(2, 3, rng)
    pair = FactorPair(adjoint(u), adjoint(v))
    assert objective(pair, u @ v, 0.0) == pytest.approx(0.0, abs=1e-18)


def test_objective_identity_hand_value():
    # lift of the quaternion scalar 1 is the 2x2 identity: fit term is zero,
    # each factor contributes Frobenius norm squared 2, so 0.5 * 1 * (2 + 2) = 2
    one = QuaternionMatrix.eye(1)
    pair = FactorPair(adjoint(one), adjoint(one))
    assert objective(pair, one, 1.0) == pytest.approx(2.0, abs=1e-15)


# -- factor updates ----------------------------------------------------------

def test_update_u_identity_embedded_v():
    rng = np.random.default_rng(4)
    x = QuaternionMatrix.random(4, 3, rng)
    pair = FactorPair(adjoint(QuaternionMatrix.zeros(4, 3)), adjoint(QuaternionMatrix.eye(3)))
    u = update_factor_u(pair, x, 0.0)
    assert np.allclose(u.to_dense(), adjoint(x).to_dense(), atol=1e-12)


def test_update_v_identity_embedded_u():
    rng = np.random.default_rng(5)
    x = QuaternionMatrix.random(3, 5, rng)
    pair = FactorPair(adjoint(QuaternionMatrix.eye(3)), adjoint(QuaternionMatrix.zeros(3, 5)))
    v = update_factor_v(pair, x, 0.0)
    assert np.allclose(v.to_dense(), adjoint(x).to_dense(), atol=1e-12)


def test_update_ridge_limit():
    rng = np.random.default_rng(6)
    x = QuaternionMatrix.random(4, 4, rng)
    pair = FactorPair(adjoint(QuaternionMatrix.random(4, 2, rng)),
                      adjoint(QuaternionMatrix.random(2, 4, rng)))
    u = update_factor_u(pair, x, 1e12)
    v = update_factor_v(pair, x, 1e12)
    assert u.frobenius_norm() < 1e-9
    assert v.frobenius_norm() < 1e-9


def test_update_scalar_normal_equation():
    # X = 1 + i, V = 1, lam = 1: U = X V^H (V V^H + 1)^-1 = (1 + i) / 2
    x = QuaternionMatrix.from_scalar(Quaternion(1, 1, 0, 0))
    one = QuaternionMatrix.eye(1)
    pair = FactorPair(adjoint(one), adjoint(one))
    u = update_factor_u(pair, x, 1.0)
    want = adjoint(QuaternionMatrix.from_scalar(Quaternion(0.5, 0.5, 0, 0))).to_dense()
    assert np.allclose(u.to_dense(), want, atol=1e-14)
    v = update_factor_v(pair, x, 1.0)
    assert np.allclose(v.to_dense(), want, atol=1e-14)


def test_updates_keep_structure():
    rng = np.random.default_rng(7)
    x = QuaternionMatrix.random(6, 5, rng)
    pair = initial_factors(6, 5, 4, seed=11)
    u = update_factor_u(pair, x, 0.3)
    pair2 = FactorPair(u, pair.v)
    v = update_factor_v(pair2, x, 0.3)
    assert structure_residual(u.to_dense()) <= 1e-12
    assert structure_residual(v.to_dense()) <= 1e-12


# -- completion update -------------------------------------------------------

def test_update_completion_full_mask():
    rng = np.random.default_rng(8)
    t = QuaternionMatrix.random(3, 3, rng)
    pair = initial_factors(3, 3, 2, seed=1)
    x = update_completion(pair, t, ObservationMask.full(3, 3))
    assert x.allclose(t, atol=0)


def test_update_completion_empty_mask():
    rng = np.random.default_rng(9)
    t = QuaternionMatrix.random(3, 3, rng)
    pair = initial_factors(3, 3, 2, seed=2)
    x = update_completion(pair, t, ObservationMask.empty(3, 3))
    prod = adjoint_inverse(pair.u @ pair.v)
    assert x.allclose(prod, atol=0)


def test_update_completion_mixed():
    rng = np.random.default_rng(10)
    u = QuaternionMatrix.random(2, 1, rng)
    v = QuaternionMatrix.random(1, 2, rng)
    pair = FactorPair(adjoint(u), adjoint(v))
    t = QuaternionMatrix.random(2, 2, rng)
    mask = ObservationMask.from_indices(2, 2, [(0, 0)])
    x = update_completion(pair, t, mask)
    prod = u @ v
    assert x.entry(0, 0) == t.entry(0, 0)
    for i, j in ((0, 1), (1, 0), (1, 1)):
        assert x.entry(i, j).components() == pytest.approx(prod.entry(i, j).components())


# -- rank gap statistic --------------------------------------------------------

def test_rank_gap_cliff():
    d = [100.0, 99.0, 98.0, 1.0, 0.9]
    rep = rank_gap_statistic(d)
    p, mu = gap_oracle(d)
    assert rep.gap_index == p == 3
    assert rep.mu == pytest.approx(mu)
    assert rep.mu == pytest.approx(125.18, abs=0.01)


def test_rank_gap_paired_spectrum():
    d = [50.0, 50.0, 49.0, 49.0, 0.5, 0.5]
    rep = rank_gap_statistic(d)
    p, mu = gap_oracle(d)
    assert rep.gap_index == p == 4
    assert rep.mu == pytest.approx(mu)
    assert rep.mu == pytest.approx(121.88, abs=0.01)


def test_rank_gap_geometric_no_drop():
    rep = rank_gap_statistic([8.0, 4.0, 2.0, 1.0])
    assert rep.gap_index == 1  # ties resolve to the first index
    assert rep.mu == pytest.approx(1.5)
    assert rep.mu < 10.0


def test_rank_gap_degenerate_inputs():
    assert rank_gap_statistic([]).mu == 0.0
    assert rank_gap_statistic([5.0]).mu == 0.0
    # everything below the relative floor is discarded
    rep = rank_gap_statistic([1.0, 1e-15, 1e-16])
    assert rep.mu == 0.0 and rep.gap_index == 0


def test_rank_gap_rejects_unsorted():
    with pytest.raises(ValueError):
        rank_gap_statistic([1.0, 2.0, 3.0])


# -- shrink -------------------------------------------------------------------

def test_shrink_noop_at_current_rank():
    pair = initial_factors(5, 6, 6, seed=3)
    same = shrink_rank(pair, 6)
    assert same is pair
    assert shrink_rank(pair, 5) is pair  # rounds up to 6


def test_shrink_exact_rank_preserved():
    # product with complex rank 4 (quaternion rank 2) held in rank-10 factors
    rng = np.random.default_rng(11)
    a = QuaternionMatrix.random(8, 2, rng)
    b = QuaternionMatrix.random(2, 9, rng)
    pad_a = QuaternionMatrix(*[np.concatenate([p, np.zeros((8, 3))], axis=1) for p in a.planes])
    pad_b = QuaternionMatrix(*[np.concatenate([p, np.zeros((3, 9))], axis=0) for p in b.planes])
    pair = FactorPair(adjoint(pad_a), adjoint(pad_b))
    assert pair.rank == 10
    shrunk = shrink_rank(pair, 4)
    assert shrunk.rank == 4
    before = adjoint_inverse(pair.product())
    after = adjoint_inverse(shrunk.product())
    assert (after - before).frobenius_norm() / before.frobenius_norm() <= 1e-10
    assert structure_residual(shrunk.u.to_dense()) <= 1e-12
    assert structure_residual(shrunk.v.to_dense()) <= 1e-12


def test_shrink_truncation_never_grows_norm():
    pair = initial_factors(7, 6, 8, seed=4)
    shrunk = shrink_rank(pair, 4)
    assert shrunk.product().frobenius_norm() <= pair.product().frobenius_norm() + 1e-12


def test_shrink_rejects_nonpositive():
    pair = initial_factors(4, 4, 4, seed=5)
    with pytest.raises(ValueError):
        shrink_rank(pair, 0)


# -- solve --------------------------------------------------------------------

def test_solve_full_observation_returns_data():
    rng = np.random.default_rng(12)
    t = QuaternionMatrix.random(8, 8, rng)
    x, pair, trace = solve(t, ObservationMask.full(8, 8),
                           SolverConfig(lam=0.5, init_rank=4, tol=1e-3, max_iters=50, seed=0))
    assert x.allclose(t, atol=0)
    assert trace.iterations == 2  # eps is 0 from the first iteration on
    assert trace.termination == "tolerance"


def test_solve_exact_recovery_rank2():
    truth, mask = rank2_problem()
    cfg = SolverConfig(lam=1e-3, init_rank=10, tol=1e-9, max_iters=500, seed=200)
    x, pair, trace = solve(truth, mask, cfg)
    err = (x - truth).frobenius_norm() / truth.frobenius_norm()
    assert 10 * math.log10(err) <= -40.0
    assert trace.rank_drops >= 1


def test_solve_rank_estimation_rank3():
    rng = np.random.default_rng(4)
    truth = QuaternionMatrix.random(40, 3, rng) @ QuaternionMatrix.random(3, 40, rng)
    mask = sample_mask(40, 40, 0.8, seed=300)
    cfg = SolverConfig(lam=0.1, init_rank=20, tol=1e-9, max_iters=120, seed=400)
    x, pair, trace = solve(truth, mask, cfg)
    assert trace.final_rank == 6          # complex rank 6 = quaternion rank 3
    assert pair.rank == 6
    assert trace.rank_drops == 1


def test_solve_monotone_objective_and_constraint():
    for trial in range(5):
        t = QuaternionMatrix.random(40, 40, np.random.default_rng(100 + trial))
        mask = sample_mask(40, 40, 0.5, seed=200 + trial)
        cfg = SolverConfig(lam=0.1, init_rank=12, tol=1e-8, max_iters=60, seed=300 + trial)
        x, pair, trace = solve(t, mask, cfg)
        g = np.array(trace.objectives)
        assert np.all(g[1:] <= g[:-1] + 1e-9 * g[0])
        t_fill = zero_fill(t, mask)
        obs = mask.observed
        for xp, tp in zip(x.planes, t_fill.planes):
            assert np.max(np.abs(np.where(obs, xp - tp, 0.0))) == 0.0
        assert structure_residual(pair.u.to_dense()) <= 1e-12
        assert structure_residual(pair.v.to_dense()) <= 1e-12


def test_solve_kkt_residuals_at_convergence():
    truth, mask = rank2_problem()
    lam = 0.1
    cfg = SolverConfig(lam=lam, init_rank=10, tol=1e-14, max_iters=6000, seed=200)
    x, pair, trace = solve(truth, mask, cfg)
    fx = adjoint(x)
    fu, fv = pair.u, pair.v
    r_u = ((fu @ fv - fx) @ fv.conj_transpose() + lam * fu).frobenius_norm()
    r_v = (fu.conj_transpose() @ (fu @ fv - fx) + lam * fv).frobenius_norm()
    bound = 1e-6 * fx.frobenius_norm()
    assert r_u <= bound
    assert r_v <= bound


def test_solve_eps_matches_offmask_norm():
    rng = np.random.default_rng(13)
    t = QuaternionMatrix.random(12, 12, rng)
    mask = sample_mask(12, 12, 0.6, seed=7)
    x, pair, trace = solve(t, mask, SolverConfig(lam=0.5, init_rank=6, tol=1e-6,
                                                 max_iters=30, seed=8))
    comp = mask.complement()
    off = zero_fill(x, comp)
    assert trace.eps_history[-1] == pytest.approx(off.frobenius_norm(), rel=1e-12)


def test_solve_errors():
    rng = np.random.default_rng(14)
    t = QuaternionMatrix.random(5, 5, rng)
    with pytest.raises(ConfigError):
        solve(t, ObservationMask.empty(5, 5), SolverConfig(init_rank=4))
    bad = QuaternionMatrix(np.full((5, 5), np.nan), *[np.zeros((5, 5))] * 3)
    with pytest.raises(DataError):
        solve(bad, ObservationMask.full(5, 5), SolverConfig(init_rank=4))
    with pytest.raises(ConfigError):
        solve(t, ObservationMask.full(5, 5), SolverConfig(init_rank=5))  # odd
    with pytest.raises(ConfigError):
        solve(t, ObservationMask.full(5, 5), SolverConfig(init_rank=12))  # > 2 min(M,N)
    with pytest.raises(ConfigError):
        solve(t, ObservationMask.full(5, 5), SolverConfig(init_rank=4, tol=0.0))


def test_solve_single_drop_cap():
    rng = np.random.default_rng(4)
    truth = QuaternionMatrix.random(40, 3, rng) @ QuaternionMatrix.random(3, 40, rng)
    mask = sample_mask(40, 40, 0.8, seed=301)
    cfg = SolverConfig(lam=0.5, init_rank=20, tol=1e-9, max_iters=120, seed=401,
                       allow_multiple_rank_drops=False)
    x, pair, trace = solve(truth, mask, cfg)
    assert trace.rank_drops <= 1


def test_solve_deterministic():
    rng = np.random.default_rng(15)
    t = QuaternionMatrix.random(15, 15, rng)
    mask = sample_mask(15, 15, 0.5, seed=5)
    cfg = SolverConfig(lam=0.5, init_rank=8, tol=1e-6, max_iters=40, seed=77)
    x1, _, tr1 = solve(t, mask, cfg)
    x2, _, tr2 = solve(t, mask, cfg)
    for a, b in zip(x1.planes, x2.planes):
        assert np.array_equal(a, b)
    assert tr1.eps_history == tr2.eps_history


def test_solve_pure_input_keeps_real_part_negligible():
    # pure quaternion data with balanced spectrum, solved at its exact rank:
    # the recovered matrix should decode without the real-residue warning
    import warnings as _w

    from quatcomplete.imaging import decode_image

    rng = np.random.default_rng(9)
    qc, _ = np.linalg.qr(rng.normal(size=(24, 3)))
    qr, _ = np.linalg.qr(rng.normal(size=(24, 3)))
    planes = [np.zeros((24, 24)) for _ in range(4)]
    for k in range(3):
        pattern = np.outer(qc[:, k], qr[:, k]) * 100.0
        mu = rng.normal(size=3)
        mu /= np.linalg.norm(mu)
        for c in range(3):
            planes[c + 1] += pattern * mu[c]
    t = QuaternionMatrix(*planes)
    assert t.is_pure() and qrank(t) == 3
    mask = sample_mask(24, 24, 0.75, seed=41)
    cfg = SolverConfig(lam=0.0, init_rank=6, tol=1e-13, max_iters=3000, seed=43)
    x, pair, trace = solve(t, mask, cfg)
    assert float(np.max(np.abs(x.q0))) <= 1e-6
    with _w.catch_warnings():
        _w.simplefilter("error")
        decode_image(x)


# -- factorization properties (quadratic surrogate vs nuclear norm) -------

def test_balanced_factorization_attains_nuclear_norm():
    from quatcomplete import qsvd

    rng = np.random.default_rng(16)
    x = QuaternionMatrix.random(8, 6, rng)
    res = qsvd(x)
    k = res.sigma.size
    root = np.sqrt(res.sigma)
    u = res.a @ QuaternionMatrix.real_diag(root, 8, k)
    v = QuaternionMatrix.real_diag(root, k, 6) @ res.b
    assert (u @ v - x).frobenius_norm() / x.frobenius_norm() <= 1e-12
    nuclear = float(np.sum(np.linalg.svd(adjoint(x).to_dense(), compute_uv=False)))
    quad = 0.5 * (adjoint(u).frobenius_norm() ** 2 + adjoint(v).frobenius_norm() ** 2)
    assert quad == pytest.approx(nuclear, rel=1e-8)

    # alternative factorizations of the same matrix never beat the nuclear norm
    for trial in range(50):
        g_quat = QuaternionMatrix.random(k, k, np.random.default_rng(500 + trial))
        g = adjoint(g_quat)
        g_inv_dense = np.linalg.inv(g.to_dense())
        from quatcomplete import structure_project

        g_inv = structure_project(g_inv_dense)
        u2 = adjoint(u) @ g
        v2 = g_inv @ adjoint(v)
        prod = adjoint_inverse(u2 @ v2)
        assert (prod - x).frobenius_norm() / x.frobenius_norm() <= 1e-8
        quad2 = 0.5 * (u2.frobenius_norm() ** 2 + v2.frobenius_norm() ** 2)
        assert quad2 >= nuclear * (1.0 - 1e-8)


def test_constructive_rank_factorization():
    from quatcomplete import qsvd

    rng = np.random.default_rng(17)
    k = 3
    x = QuaternionMatrix.random(9, k, rng) @ QuaternionMatrix.random(k, 7, rng)
    res = qsvd(x)
    assert res.rank == k
    u = QuaternionMatrix(*[p[:, :k] for p in res.a.planes])
    v = QuaternionMatrix.real_diag(res.sigma[:k], k, k) @ \
        QuaternionMatrix(*[p[:k, :] for p in res.b.planes])
    assert (u @ v - x).frobenius_norm() / x.frobenius_norm() <= 1e-10
    assert qrank(u) == k
    assert qrank(v) == k


def test_update_u_rank_deficient_v_at_lambda_zero():
    # duplicate quaternion columns make f(V) rank deficient; the pseudoinverse
    # path must still satisfy the normal equation
    rng = np.random.default_rng(18)
    col = QuaternionMatrix.random(1, 5, rng)
    v = QuaternionMatrix(*[np.vstack([p, p]) for p in col.planes])
    x = QuaternionMatrix.random(4, 5, rng)
    pair = FactorPair(adjoint(QuaternionMatrix.zeros(4, 2)), adjoint(v))
    u = update_factor_u(pair, x, 0.0)
    fv = adjoint(v)
    gram = fv @ fv.conj_transpose()
    lhs = u @ gram
    rhs = adjoint(x) @ fv.conj_transpose()
    assert (lhs - rhs).frobenius_norm() <= 1e-9 * max(rhs.frobenius_norm(), 1.0)


def test_rank_gap_two_values_is_infinite():
    # a lone quotient has an empty comparison set; treated as an unbounded gap
    rep = rank_gap_statistic([10.0, 1.0])
    assert rep.mu == float("inf")
    assert rep.gap_index == 1


def test_solve_non_square():
    rng = np.random.default_rng(19)
    t = QuaternionMatrix.random(12, 20, rng)
    mask = sample_mask(12, 20, 0.6, seed=1)
    x, pair, trace = solve(t, mask, SolverConfig(lam=0.5, init_rank=8, tol=1e-6,
                                                 max_iters=40, seed=2))
    assert x.shape == (12, 20)
    assert pair.u.shape == (24, 8) and pair.v.shape == (8, 40)
