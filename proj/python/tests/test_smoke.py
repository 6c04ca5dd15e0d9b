import numpy as np
import pytest

import sfk


def test_version():
    assert sfk.__version__ == "0.1.0"


def test_dense_operator_round_trip():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((7, 4))
    op = sfk.from_dense(a)
    assert op.shape == (7, 4)
    assert op.matched
    x = rng.standard_normal(4)
    y = rng.standard_normal(7)
    np.testing.assert_allclose(op.forward(x), a @ x, rtol=1e-13)
    np.testing.assert_allclose(op.adjoint(y), a.T @ y, rtol=1e-13)
    np.testing.assert_allclose(op.materialize(), a)


def test_lsqr_matches_numpy_lstsq():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((40, 10))
    b = rng.standard_normal(40)
    h = sfk.solve("lsqr", sfk.from_dense(a), b, maxit=10)
    ref = np.linalg.lstsq(a, b, rcond=None)[0]
    np.testing.assert_allclose(h.x, ref, rtol=1e-8, atol=1e-10)
    assert h.iterations == 10
    assert h.true_residual.shape == (10,)


def test_python_callback_operator():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((30, 8))
    op = sfk.LinearOperator(30, 8, lambda x: a @ x, lambda y: a.T @ y, matched=True)
    b = rng.standard_normal(30)
    h = sfk.solve("flsqr", op, b, maxit=8)
    ref = sfk.solve("flsqr", sfk.from_dense(a), b, maxit=8)
    np.testing.assert_allclose(h.x, ref.x, rtol=1e-12)


def test_sketched_solvers_on_synthetic_problem():
    p = sfk.synthetic_decay(200, 100, 1.05, 0.1, 3)
    s_m = sfk.gaussian_sketch(41, 200, 7)
    s_n = sfk.gaussian_sketch(41, 100, 8)
    q = sfk.solve("sflsqr", p.a, p.b, maxit=20, sketch=s_m, x_true=p.x_true)
    r = sfk.solve("sflsmr", p.a, p.b, maxit=20, sketch=s_n, x_true=p.x_true)
    assert np.all(np.isfinite(q.error)) and np.all(np.isfinite(r.error))
    assert q.true_residual[-1] < q.true_residual[0]
    rep = sfk.bound_report(p.a, p.b, s_m, s_n, maxit=10)
    assert rep["violations"] == 0
    assert np.all(rep["r_sflsqr"] <= rep["bound1"] + 1e-9)


def test_unmatched_ct_rejects_lsqr():
    p = sfk.ct_problem(16, 10, 20, 0.05, 4e-2, 1)
    assert not p.a.matched
    with pytest.raises(ValueError):
        sfk.solve("lsqr", p.a, p.b, maxit=3)
    h = sfk.solve("sflsqr", p.a, p.b, maxit=5, sketch=sfk.countsketch(11, p.a.shape[0], 1))
    assert p.image(h.x).shape == (16, 16)


def test_truncated_flexible_solver_on_deblur():
    p = sfk.deblur_inpaint_problem(24, rank_hint=4, seed=5)
    tau = sfk.TruncationOperator.rank_exact(p.grid, 4)
    h = sfk.solve("flsqr", p.a, p.b, maxit=6, tau=tau, keep_basis=True)
    for j in range(h.basis.shape[1]):
        col = h.basis[:, j].reshape(24, 24, order="F")
        assert np.linalg.matrix_rank(col, tol=1e-10) <= 4


def test_pgm_round_trip(tmp_path):
    img = sfk.shepp_logan(20)
    path = str(tmp_path / "x.pgm")
    sfk.write_pgm(path, img, 0.0, 1.0)
    np.testing.assert_allclose(sfk.read_pgm(path), img, atol=1e-5)


def test_corollary_check_runs():
    p = sfk.synthetic_decay(80, 40, 1.05, 0.1, 2)
    z = np.random.default_rng(3).standard_normal((40, 4))
    r = sfk.corollary_check(p.a, z, p.b, 20, 200, 9)
    assert r["rel_err_exact"] < 0.2


def test_staged_build_is_under_test():
    import os

    stage = os.environ.get("SFK_PYTHON_STAGE")
    if stage:
        assert sfk._core.__file__.startswith(stage)
