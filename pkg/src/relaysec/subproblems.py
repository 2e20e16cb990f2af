"""Builders for the two convex halves of the relaxed design problem.

Fixing ``Q`` leaves a semidefinite program in ``Z`` (relay side); fixing ``Z``
leaves one in ``Q`` (source side). Both carry the full power objective
``Tr(Q) + Tr(Z R(Q))`` with the fixed variable folded into constants, Bob's
QoS row, and the worst-case eavesdropper cap whose two norm terms become
second-order cone rows. Setting ``eps = 0`` drops every cone row and
reproduces the non-robust problem exactly.

Linear-map coefficients for the cone rows are extracted by probing the
system-model functions with basis matrices, so the solver sees exactly the
maps the oracles test.

``include_sigma_e`` switches between the two printed readings of the
eavesdropper row: the default omits the ``r_e * sigma_e^2`` constant; enabling
it credits the denominator's noise floor to the right-hand side.
"""

from __future__ import annotations

import numpy as np

from . import linalg, sysmodel
from .conic import (
    BlockSpec,
    ConicProblem,
    LinExpr,
    VecExpr,
    complex_map_rows,
    embedding_structure_rows,
    hermitian_coeff,
)
from .sysmodel import ChannelSet, LiftedPair, SystemConfig

__all__ = ["build_q_subproblem", "build_z_subproblem"]


def _lifted(q_big: np.ndarray, z_big: np.ndarray) -> LiftedPair:
    return LiftedPair(q_big=np.asarray(q_big, dtype=complex),
                      z_big=np.asarray(z_big, dtype=complex))


def _probe_complex_map(fn, dim: int, out_len: int) -> np.ndarray:
    """Coefficient matrix of a map linear in ``vec(X)``, by basis probing."""
    lc = np.empty((out_len, dim * dim), dtype=complex)
    basis = np.zeros((dim, dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            basis[a, b] = 1.0
            lc[:, b * dim + a] = fn(basis)  # column-major vec index
            basis[a, b] = 0.0
    return lc


def build_z_subproblem(
    q_big: np.ndarray,
    ch: ChannelSet,
    cfg: SystemConfig,
    include_sigma_e: bool = False,
) -> ConicProblem:
    """Relay-side problem: minimize total power over ``Z ⪰ 0`` at fixed ``Q``.

    Variable blocks: the embedded ``Z`` (side ``2 M^2``) plus two epigraph
    scalars when ``eps > 0``. Constraints: Bob's row ``Tr(Z A) >= r_b
    sigma_b^2``; the eavesdropper row ``Tr(Z B) >= 2 eps t1 + 2 r_e eps
    sigma_r^2 t2`` with ``||u(Z)|| <= t1``, ``||v(Z)|| <= t2``.
    """
    m = cfg.n_relay
    d = m * m
    q_big = np.asarray(q_big, dtype=complex)
    lp_probe = _lifted(q_big, np.zeros((d, d)))

    blocks = [BlockSpec("Z", "psd", 2 * d)]
    objective = LinExpr(
        coeffs={"Z": hermitian_coeff(sysmodel.lifted_relay_operator(q_big, ch, cfg))},
        const=float(np.trace(q_big).real),
    )
    eq_rows = embedding_structure_rows("Z", d)

    a_mat = sysmodel.bob_constraint_matrix(lp_probe, ch, cfg)
    b_mat = sysmodel.eve_constraint_matrix(lp_probe, ch, cfg)
    ineq_rows = [
        LinExpr(coeffs={"Z": hermitian_coeff(a_mat)}, const=-cfg.r_b * cfg.sigma2_b)
    ]
    soc_rows = []
    eve_const = cfg.r_e * cfg.sigma2_e if include_sigma_e else 0.0

    if cfg.eps > 0:
        blocks += [BlockSpec("t1", "scalar"), BlockSpec("t2", "scalar")]
        ineq_rows.append(
            LinExpr(
                coeffs={
                    "Z": hermitian_coeff(b_mat),
                    "t1": -2.0 * cfg.eps,
                    "t2": -2.0 * cfg.r_e * cfg.eps * cfg.sigma2_r,
                },
                const=eve_const,
            )
        )
        lu = _probe_complex_map(
            lambda z: sysmodel.eve_numerator_soc_vec(z, q_big, ch), d, m
        )
        lv = _probe_complex_map(lambda z: sysmodel.eve_denominator_soc_vec(z, ch), d, m)
        soc_rows.append(
            (
                VecExpr(mats={"Z": complex_map_rows(lu, d)}, const=np.zeros(2 * m)),
                LinExpr(coeffs={"t1": 1.0}),
            )
        )
        soc_rows.append(
            (
                VecExpr(mats={"Z": complex_map_rows(lv, d)}, const=np.zeros(2 * m)),
                LinExpr(coeffs={"t2": 1.0}),
            )
        )
    else:
        ineq_rows.append(
            LinExpr(coeffs={"Z": hermitian_coeff(b_mat)}, const=eve_const)
        )

    problem = ConicProblem(
        blocks=blocks,
        objective=objective,
        eq_rows=eq_rows,
        ineq_rows=ineq_rows,
        soc_rows=soc_rows,
        psd_blocks=["Z"],
    )
    problem.validate()
    return problem


def build_q_subproblem(
    z_big: np.ndarray,
    ch: ChannelSet,
    cfg: SystemConfig,
    include_sigma_e: bool = False,
) -> ConicProblem:
    """Source-side problem: minimize total power over ``Q ⪰ 0`` at fixed ``Z``.

    The relay-power coupling contracts to ``Tr(Q H^H G^T H)`` with ``G`` the
    block partial trace of ``Z``; Bob's row is affine in ``Q`` and the
    eavesdropper cap becomes a single cone row with ``v(Z)`` precomputed.
    """
    n = cfg.n_src
    m = cfg.n_relay
    z_big = np.asarray(z_big, dtype=complex)
    h = ch.h

    def q_coeff(inner: np.ndarray) -> np.ndarray:
        # Tr(Z ((H Q H^H)^T kron inner)) == Tr(Q H^H G^T H)
        g = linalg.partial_contract_inner(z_big, inner)
        return h.conj().T @ g.T @ h

    gout_b = np.outer(ch.g_b.conj(), ch.g_b)
    gout_e = np.outer(ch.g_e_hat.conj(), ch.g_e_hat)
    tr_z_db = float(np.trace(z_big @ linalg.kron(np.eye(m), gout_b)).real)
    tr_z_de = float(np.trace(z_big @ linalg.kron(np.eye(m), gout_e)).real)

    objective = LinExpr(
        coeffs={"Q": hermitian_coeff(np.eye(n) + q_coeff(np.eye(m)))},
        const=float(cfg.sigma2_r * np.trace(z_big).real),
    )
    eq_rows = embedding_structure_rows("Q", n)
    ineq_rows = [
        LinExpr(
            coeffs={"Q": hermitian_coeff(q_coeff(gout_b))},
            const=-cfg.r_b * cfg.sigma2_r * tr_z_db - cfg.r_b * cfg.sigma2_b,
        )
    ]
    soc_rows = []
    eve_const = cfg.r_e * cfg.sigma2_e if include_sigma_e else 0.0
    v_norm = float(np.linalg.norm(sysmodel.eve_denominator_soc_vec(z_big, ch)))
    eve_scalar = LinExpr(
        coeffs={"Q": -hermitian_coeff(q_coeff(gout_e))},
        const=cfg.r_e * cfg.sigma2_r * tr_z_de
        - 2.0 * cfg.r_e * cfg.eps * cfg.sigma2_r * v_norm
        + eve_const,
    )
    if cfg.eps > 0:
        lq = _probe_complex_map(
            lambda q: sysmodel.eve_numerator_soc_vec(z_big, q, ch), n, m
        )
        soc_rows.append(
            (
                VecExpr(
                    mats={"Q": 2.0 * cfg.eps * complex_map_rows(lq, n)},
                    const=np.zeros(2 * m),
                ),
                eve_scalar,
            )
        )
    else:
        ineq_rows.append(eve_scalar)

    problem = ConicProblem(
        blocks=[BlockSpec("Q", "psd", 2 * n)],
        objective=objective,
        eq_rows=eq_rows,
        ineq_rows=ineq_rows,
        soc_rows=soc_rows,
        psd_blocks=["Q"],
    )
    problem.validate()
    return problem
