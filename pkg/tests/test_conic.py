import numpy as np
import pytest

from relaysec.conic import (
    BlockSpec,
    ConicProblem,
    LinExpr,
    ProblemError,
    SolveOutcome,
    SolverSettings,
    VecExpr,
    complex_map_rows,
    embedding_structure_rows,
    hermitian_coeff,
    recover_hermitian,
    solve,
)
from relaysec.linalg import real_embed, vec

rng = np.random.default_rng(314)


def crandn(*shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rand_hermitian(n):
    a = crandn(n, n)
    return (a + a.conj().T) / 2


# ---------------------------------------------------------------------------
# expression layer
# ---------------------------------------------------------------------------


def test_lin_expr_value():
    c = np.array([[1.0, 2.0], [2.0, -1.0]])
    e = LinExpr(coeffs={"X": c, "t": 3.0}, const=0.5)
    x = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert e.value({"X": x, "t": 2.0}) == pytest.approx(1.0 - 2.0 + 6.0 + 0.5)


def test_vec_expr_value():
    mat = np.arange(8.0).reshape(2, 4)
    v = VecExpr(mats={"X": mat}, const=np.array([1.0, -1.0]))
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    expected = mat @ x.reshape(-1) + np.array([1.0, -1.0])
    assert np.allclose(v.value({"X": x}), expected)


def test_validate_rejects_undeclared_block():
    prob = ConicProblem(
        blocks=[BlockSpec("X", "psd", 2)],
        objective=LinExpr(coeffs={"Y": np.eye(2)}),
    )
    with pytest.raises(ProblemError):
        prob.validate()


def test_validate_rejects_nonfinite():
    prob = ConicProblem(
        blocks=[BlockSpec("X", "psd", 2)],
        objective=LinExpr(coeffs={"X": np.array([[np.inf, 0], [0, 1.0]])}),
    )
    with pytest.raises(ProblemError):
        prob.validate()


# ---------------------------------------------------------------------------
# complex -> real lowering
# ---------------------------------------------------------------------------


def test_hermitian_coeff_trace_identity():
    for _ in range(10):
        a, z = rand_hermitian(4), rand_hermitian(4)
        val = float(np.sum(hermitian_coeff(a) * real_embed(z)))
        assert val == pytest.approx(np.trace(a @ z).real, rel=1e-12, abs=1e-12)


def test_embedding_structure_rows_vanish_on_embeddings():
    rows = embedding_structure_rows("X", 3)
    assert len(rows) == 3 * 4  # n(n+1) rows
    s = real_embed(rand_hermitian(3))
    for row in rows:
        assert row.value({"X": s}) == pytest.approx(0.0, abs=1e-12)


def test_embedding_structure_rows_catch_defects():
    s = real_embed(rand_hermitian(3))
    s = s + 1e-3 * np.outer(np.eye(6)[0], np.eye(6)[5])
    s = (s + s.T) / 2
    rows = embedding_structure_rows("X", 3)
    assert max(abs(r.value({"X": s})) for r in rows) > 1e-5


def test_complex_map_rows_matches_complex_action():
    n, k = 3, 4
    lc = crandn(k, n * n)
    rows = complex_map_rows(lc, n)
    for _ in range(10):
        z = rand_hermitian(n)
        want = lc @ vec(z)
        got = rows @ real_embed(z).reshape(-1)
        assert np.allclose(got[:k], want.real, atol=1e-12)
        assert np.allclose(got[k:], want.imag, atol=1e-12)


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------


def test_solve_analytic_soc():
    # min t subject to ||(1, 1)|| <= t
    prob = ConicProblem(
        blocks=[BlockSpec("t", "scalar")],
        objective=LinExpr(coeffs={"t": 1.0}),
        soc_rows=[
            (
                VecExpr(mats={}, const=np.array([1.0, 1.0])),
                LinExpr(coeffs={"t": 1.0}),
            )
        ],
    )
    out = solve(prob)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(np.sqrt(2.0), abs=1e-7)


def test_solve_analytic_sdp():
    # min Tr(X) subject to X PSD, X[0,0] >= 1
    pick = np.zeros((2, 2))
    pick[0, 0] = 1.0
    prob = ConicProblem(
        blocks=[BlockSpec("X", "psd", 2)],
        objective=LinExpr(coeffs={"X": np.eye(2)}),
        ineq_rows=[LinExpr(coeffs={"X": pick}, const=-1.0)],
        psd_blocks=["X"],
    )
    out = solve(prob)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(1.0, abs=1e-7)
    assert out.assignment["X"][0, 0] == pytest.approx(1.0, abs=1e-6)


def test_solve_detects_infeasible():
    prob = ConicProblem(
        blocks=[BlockSpec("x", "scalar")],
        objective=LinExpr(coeffs={"x": 1.0}),
        ineq_rows=[
            LinExpr(coeffs={"x": 1.0}, const=-1.0),   # x >= 1
            LinExpr(coeffs={"x": -1.0}, const=0.0),   # x <= 0
        ],
    )
    out = solve(prob)
    assert out.status == "infeasible"
    assert np.isnan(out.objective)


def test_solve_equality_rows():
    # min x + y subject to x = y, x >= 1
    prob = ConicProblem(
        blocks=[BlockSpec("x", "scalar"), BlockSpec("y", "scalar")],
        objective=LinExpr(coeffs={"x": 1.0, "y": 1.0}),
        eq_rows=[LinExpr(coeffs={"x": 1.0, "y": -1.0})],
        ineq_rows=[LinExpr(coeffs={"x": 1.0}, const=-1.0)],
    )
    out = solve(prob)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(2.0, abs=1e-7)


def test_solve_deterministic():
    pick = np.zeros((2, 2))
    pick[0, 1] = pick[1, 0] = 0.5
    prob = ConicProblem(
        blocks=[BlockSpec("X", "psd", 2)],
        objective=LinExpr(coeffs={"X": np.eye(2)}),
        ineq_rows=[LinExpr(coeffs={"X": pick}, const=-1.0)],  # X01 >= 1
        psd_blocks=["X"],
    )
    a = solve(prob)
    b = solve(prob)
    assert a.objective == b.objective
    assert np.array_equal(a.assignment["X"], b.assignment["X"])
    # analytic optimum: X = [[1, 1], [1, 1]], trace 2
    assert a.objective == pytest.approx(2.0, abs=1e-6)


def test_solve_carries_objective_constant():
    prob = ConicProblem(
        blocks=[BlockSpec("x", "scalar")],
        objective=LinExpr(coeffs={"x": 1.0}, const=5.0),
        ineq_rows=[LinExpr(coeffs={"x": 1.0}, const=-1.0)],
    )
    out = solve(prob)
    assert out.objective == pytest.approx(6.0, abs=1e-7)


def test_residual_reports_violation():
    prob = ConicProblem(
        blocks=[BlockSpec("x", "scalar")],
        objective=LinExpr(coeffs={"x": 1.0}),
        ineq_rows=[LinExpr(coeffs={"x": 1.0}, const=-1.0)],
    )
    assert prob.residual({"x": 2.0}) == 0.0
    assert prob.residual({"x": 0.0}) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# hermitian recovery
# ---------------------------------------------------------------------------


def _outcome_with(block, value):
    return SolveOutcome("optimal", 0.0, {block: value}, {})


def test_recover_round_trip():
    z = rand_hermitian(4)
    z = z @ z.conj().T if False else z + 2.5 * np.eye(4)  # make it comfortably PSD
    rec = recover_hermitian(_outcome_with("Z", real_embed(z)), "Z", 4)
    assert np.linalg.norm(rec - z) <= 1e-12 * np.linalg.norm(z)


def test_recover_trace_halving():
    z = rand_hermitian(3) + 3 * np.eye(3)
    s = real_embed(z)
    rec = recover_hermitian(_outcome_with("Z", s), "Z", 3)
    assert np.trace(rec).real == pytest.approx(np.trace(s) / 2.0, rel=1e-12)


def test_recover_rejects_structure_defect():
    s = real_embed(rand_hermitian(3) + 3 * np.eye(3))
    s[0, 3] += 1.0
    s[3, 0] += 1.0
    with pytest.raises(ValueError):
        recover_hermitian(_outcome_with("Z", s), "Z", 3)


def test_recover_clamps_tiny_negative_eigs():
    z = np.diag([1.0, -5e-8, 0.5]).astype(complex)
    rec = recover_hermitian(_outcome_with("Z", real_embed(z)), "Z", 3)
    w = np.linalg.eigvalsh(rec)
    assert w[0] >= 0.0


def test_recover_rejects_indefinite():
    z = np.diag([1.0, -0.5]).astype(complex)
    with pytest.raises(ValueError):
        recover_hermitian(_outcome_with("Z", real_embed(z)), "Z", 2)


def test_recover_requires_optimal():
    with pytest.raises(ValueError):
        recover_hermitian(SolveOutcome("infeasible", np.nan, {}, {}), "Z", 2)
