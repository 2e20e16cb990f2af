import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaysec import linalg
from relaysec.linalg import (
    ball_lin_extreme,
    conj_kron_permutation,
    hermitian_eig,
    kron,
    partial_contract_inner,
    partial_contract_outer,
    psd_factor,
    real_embed,
    real_embed_vec,
    trace_kron,
    unvec,
    vec,
)

rng = np.random.default_rng(20240521)


def crandn(*shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rand_hermitian(n):
    a = crandn(n, n)
    return (a + a.conj().T) / 2


def rand_psd(n):
    a = crandn(n, n)
    return a @ a.conj().T


def int_complex(*shape):
    """Integer-valued complex draws: products are exact in float64."""
    return rng.integers(-3, 4, shape) + 1j * rng.integers(-3, 4, shape)


# ---------------------------------------------------------------------------
# vec / kron
# ---------------------------------------------------------------------------


def test_vec_is_column_major():
    a = np.array([[1, 3], [2, 4]])
    assert np.array_equal(vec(a), [1, 2, 3, 4])


def test_vec_identity_on_column_vectors():
    v = crandn(5).reshape(5, 1)
    assert np.array_equal(vec(v), v.reshape(-1))


def test_vec_preserves_frobenius_norm():
    for _ in range(20):
        a = crandn(3, 2)
        assert abs(np.linalg.norm(vec(a)) - np.linalg.norm(a)) <= 1e-14 * np.linalg.norm(a)


def test_unvec_round_trip():
    a = crandn(4, 3)
    assert np.array_equal(unvec(vec(a), 4, 3), a)


def test_kron_scalar():
    assert np.array_equal(kron(np.array([[2]]), np.array([[3]])), [[6]])


def test_kron_identity_factor_is_block_diagonal():
    x = crandn(2, 2)
    k = kron(np.eye(2), x)
    assert np.array_equal(k[:2, :2], x)
    assert np.array_equal(k[2:, 2:], x)
    assert np.all(k[:2, 2:] == 0) and np.all(k[2:, :2] == 0)


@pytest.mark.parametrize("dims", [(2, 3, 4, 2), (3, 2, 2, 3)])
def test_vec_of_triple_product(dims):
    m, n, p, q = dims
    a, x, b = crandn(m, n), crandn(n, p), crandn(p, q)
    lhs = vec(a @ x @ b)
    rhs = kron(b.T, a) @ vec(x)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(lhs)


def test_quadratic_form_identity():
    # Tr(X A X^H B) = vec(X)^H (A^T kron B) vec(X): the workhorse of every
    # lifted expression in the package
    for _ in range(20):
        x, a, b = crandn(3, 3), crandn(3, 3), crandn(3, 3)
        lhs = np.trace(x @ a @ x.conj().T @ b)
        rhs = vec(x).conj() @ kron(a.T, b) @ vec(x)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


# ---------------------------------------------------------------------------
# conjugate-Kronecker permutation
# ---------------------------------------------------------------------------


def test_tf_scalar_case():
    tf = conj_kron_permutation(1, 1)
    assert np.array_equal(tf.to_dense(), [[1.0]])


def test_tf_2x1_exhaustive_index_check():
    # the defining relation determines T uniquely (rank-one outer products
    # span the full matrix space), so solve for it from scratch and compare
    p, q = 2, 1
    n = (p * q) ** 2
    cols_in, cols_out = [], []
    for _ in range(4 * n):
        f = crandn(p, q)
        fv = vec(f)
        cols_in.append(vec(np.outer(fv, fv.conj())))
        cols_out.append(vec(np.kron(f.conj(), f)))
    x = np.stack(cols_in, axis=1)
    y = np.stack(cols_out, axis=1)
    t_solved, *_ = np.linalg.lstsq(x.T, y.T, rcond=None)
    t_solved = t_solved.T.real
    dense = conj_kron_permutation(p, q).to_dense()
    assert np.max(np.abs(t_solved - dense)) <= 1e-10
    # every one of the 16 cells is exactly 0 or 1 in the constructed matrix
    assert set(np.unique(dense)) <= {0.0, 1.0}


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)])
def test_tf_defining_relation_exact(p, q):
    tf = conj_kron_permutation(p, q)
    for _ in range(100):
        f = int_complex(p, q)
        fv = vec(f)
        lhs = vec(np.kron(f.conj(), f))
        rhs = tf.apply(vec(np.outer(fv, fv.conj())))
        assert np.array_equal(lhs, rhs)


def test_tf_defining_relation_gaussian():
    tf = conj_kron_permutation(2, 2)
    for _ in range(100):
        f = crandn(2, 2)
        fv = vec(f)
        lhs = vec(np.kron(f.conj(), f))
        rhs = tf.apply(vec(np.outer(fv, fv.conj())))
        assert np.max(np.abs(lhs - rhs)) <= 1e-14


@pytest.mark.parametrize("p,q", [(2, 2), (3, 3), (2, 3)])
def test_tf_is_permutation(p, q):
    dense = conj_kron_permutation(p, q).to_dense()
    assert np.array_equal(dense.sum(axis=0), np.ones(dense.shape[0]))
    assert np.array_equal(dense.sum(axis=1), np.ones(dense.shape[0]))


def test_tf_norm_chain():
    # || X1 F X2 F^H X3 || through the permutation, for rectangular F
    for n1, n2, n3, n4 in [(2, 3, 2, 4), (3, 2, 3, 2), (2, 2, 2, 2)]:
        x1, f = crandn(n1, n2), crandn(n2, n3)
        x2, x3 = crandn(n3, n3), crandn(n2, n4)
        lhs = np.linalg.norm(x1 @ f @ x2 @ f.conj().T @ x3)
        tf = conj_kron_permutation(n2, n3)
        coeff = kron(vec(x2)[None, :], kron(x3.T, x1))
        fv = vec(f)
        rhs = np.linalg.norm(coeff @ tf.apply(vec(np.outer(fv, fv.conj()))))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, lhs)


def test_tf_rejects_bad_dims():
    with pytest.raises(ValueError):
        conj_kron_permutation(0, 2)


# ---------------------------------------------------------------------------
# trace of Kronecker products
# ---------------------------------------------------------------------------


def test_trace_kron_identity():
    z = np.eye(6, dtype=complex)
    assert trace_kron(z, np.eye(2), np.eye(3)) == pytest.approx(6.0)


def test_trace_kron_matches_dense():
    for m, n in [(2, 2), (2, 3), (3, 3)]:
        z, y, x = crandn(m * n, m * n), crandn(m, m), crandn(n, n)
        dense = np.trace(z @ kron(y, x))
        val = trace_kron(z, y, x)
        assert abs(val - dense) <= 1e-12 * max(1.0, abs(dense))


def test_trace_kron_block_sum():
    # with y = I the contraction is the sum of diagonal blocks
    m, n = 3, 2
    z = rand_psd(m * n)
    x = crandn(n, n)
    blocks = sum(z[k * n : (k + 1) * n, k * n : (k + 1) * n] for k in range(m))
    assert abs(trace_kron(z, np.eye(m), x) - np.trace(blocks @ x)) <= 1e-12


def test_partial_contractions_agree():
    m, n = 2, 3
    z, y, x = crandn(m * n, m * n), crandn(m, m), crandn(n, n)
    ref = np.trace(z @ kron(y, x))
    assert abs(np.trace(partial_contract_outer(z, y) @ x) - ref) <= 1e-12
    assert abs(np.trace(y @ partial_contract_inner(z, x)) - ref) <= 1e-12


def test_trace_kron_dimension_mismatch():
    with pytest.raises(ValueError):
        trace_kron(np.eye(5), np.eye(2), np.eye(3))


# ---------------------------------------------------------------------------
# ball-constrained linear extremum
# ---------------------------------------------------------------------------


def test_ball_extreme_zero_objective():
    val, x = ball_lin_extreme(np.zeros(3), 1.0)
    assert val == 0.0 and np.all(x == 0)


def test_ball_extreme_unit_direction():
    y = np.array([1.0, 0.0, 0.0], dtype=complex)
    val, x = ball_lin_extreme(y, 2.0, "max")
    assert val == pytest.approx(2.0)
    assert np.allclose(x, 2.0 * y)


def test_ball_extreme_dominates_samples():
    for _ in range(10):
        y = crandn(4)
        delta = 0.1
        val_max, x_max = ball_lin_extreme(y, delta, "max")
        val_min, x_min = ball_lin_extreme(y, delta, "min")
        samples = crandn(10_000, 4)
        samples *= (delta * rng.uniform(size=(10_000, 1)) ** (1 / 8)) / np.linalg.norm(
            samples, axis=1, keepdims=True
        )
        vals = np.real(samples.conj() @ y)
        assert vals.max() <= val_max + 1e-12
        assert vals.min() >= val_min - 1e-12
        assert np.real(x_max.conj() @ y) == pytest.approx(val_max, abs=1e-12)
        assert np.real(x_min.conj() @ y) == pytest.approx(val_min, abs=1e-12)
        assert np.linalg.norm(x_max) <= delta + 1e-12


def test_ball_extreme_rejects_bad_args():
    with pytest.raises(ValueError):
        ball_lin_extreme(np.ones(2), -1.0)
    with pytest.raises(ValueError):
        ball_lin_extreme(np.ones(2), 1.0, "sideways")


# ---------------------------------------------------------------------------
# Hermitian eigen tools
# ---------------------------------------------------------------------------


def test_hermitian_eig_identity():
    w, _ = hermitian_eig(np.eye(3))
    assert np.allclose(w, 1.0)


def test_hermitian_eig_diag_sorted_descending():
    w, u = hermitian_eig(np.diag([1.0, 3.0]))
    assert np.allclose(w, [3.0, 1.0])
    assert abs(abs(u[1, 0]) - 1.0) <= 1e-14


def test_hermitian_eig_reconstruction():
    for _ in range(10):
        a = rand_hermitian(4)
        w, u = hermitian_eig(a)
        rec = (u * w) @ u.conj().T
        assert np.linalg.norm(rec - a) <= 1e-10 * max(1.0, np.linalg.norm(a))
        assert np.all(np.diff(w) <= 0)


def test_hermitian_eig_rejects_non_square():
    with pytest.raises(ValueError):
        hermitian_eig(np.ones((2, 3)))


def test_hermitian_eig_rejects_asymmetric():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        hermitian_eig(a)


def test_psd_factor_identity():
    s = psd_factor(np.eye(3))
    assert np.linalg.norm(s @ s.conj().T - np.eye(3)) <= 1e-10


def test_psd_factor_rank_one():
    q = crandn(4)
    a = np.outer(q, q.conj())
    s = psd_factor(a)
    assert np.linalg.norm(s @ s.conj().T - a) <= 1e-10 * np.linalg.norm(a)


def test_psd_factor_random_psd():
    for _ in range(10):
        a = rand_psd(5)
        s = psd_factor(a)
        assert np.linalg.norm(s @ s.conj().T - a) <= 1e-8 * max(1.0, np.linalg.norm(a))


def test_psd_factor_rejects_indefinite():
    with pytest.raises(ValueError):
        psd_factor(np.diag([1.0, -0.5]))


# ---------------------------------------------------------------------------
# real embedding
# ---------------------------------------------------------------------------


def test_real_embed_scalar():
    assert np.array_equal(real_embed(np.array([[1.0]])), np.eye(2))


def test_real_embed_trace_factor_two():
    for _ in range(10):
        a, b = rand_hermitian(3), rand_hermitian(3)
        lhs = np.trace(real_embed(a) @ real_embed(b))
        rhs = 2.0 * np.trace(a @ b).real
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_real_embed_vec_preserves_norm():
    u = crandn(5)
    assert abs(np.linalg.norm(real_embed_vec(u)) - np.linalg.norm(u)) <= 1e-14


def test_real_embed_preserves_definiteness():
    for _ in range(10):
        a = rand_hermitian(4)
        lo_c = np.linalg.eigvalsh(a)[0]
        lo_r = np.linalg.eigvalsh(real_embed(a))[0]
        assert abs(lo_c - lo_r) <= 1e-10 * max(1.0, abs(lo_c))


def test_real_embed_rejects_non_hermitian():
    with pytest.raises(ValueError):
        real_embed(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_hermitian_part_idempotent(n, seed):
    local = np.random.default_rng(seed)
    a = local.standard_normal((n, n)) + 1j * local.standard_normal((n, n))
    h = (a + a.conj().T) / 2
    assert np.allclose(linalg.hermitian_part(h), h)
    w, _ = hermitian_eig(h)
    assert np.all(np.isreal(w))
