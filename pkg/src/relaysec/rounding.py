"""Rank-one precoder recovery from the relaxed solution.

If both relaxed matrices are numerically rank one, eigen-extraction gives the
precoders directly. Otherwise candidates are drawn from zero-mean complex
Gaussians with the relaxed matrices as covariances; candidates that violate
the surrogate constraints are rescaled toward the constraint boundary (the
relay factor ``alpha`` from Bob's row, the source factor ``beta`` from the
eavesdropper row) and re-verified. The cheapest feasible candidate wins.

The scale factors restore constraints that couple through ``Q``, so scaling
is treated as a heuristic repair: every scaled candidate is re-checked against
the constraints recomputed at its own lifted point, never trusted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitian_eig, psd_factor, unvec, vec
from .sysmodel import BeamformingPair, ChannelSet, SystemConfig

__all__ = [
    "PrecoderSolution",
    "RoundingConfig",
    "candidate_metrics",
    "gaussian_candidates",
    "randomize_select",
    "rank_one_extract",
    "scale_candidate",
    "verify_pair",
]

_FEAS_TOL = 1e-7


@dataclass(frozen=True)
class RoundingConfig:
    k_samples: int = 100
    rank_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.k_samples < 1:
            raise ValueError("k_samples must be >= 1")
        if not (0.0 < self.rank_tol < 1.0):
            raise ValueError("rank_tol must lie in (0, 1)")


@dataclass
class PrecoderSolution:
    """Recovered precoders with achieved power and a feasibility report.

    ``alpha``/``beta`` are the applied scale factors (1 when unused);
    ``source`` records whether the pair came from eigen-extraction or the
    randomization pool.
    """

    pair: BeamformingPair
    total_power: float
    feasible: bool
    alpha: float = 1.0
    beta: float = 1.0
    source: str = "eigen"
    diagnostics: dict = field(default_factory=dict)


def rank_one_extract(x: np.ndarray, tol: float):
    """Principal component ``sqrt(lam1) u1`` if ``lam2/lam1 <= tol``, else None."""
    w, u = hermitian_eig(x)
    if w[0] <= 0:
        return None
    if w.size > 1 and w[1] / w[0] > tol:
        return None
    return np.sqrt(w[0]) * u[:, 0]


def gaussian_candidates(q_opt: np.ndarray, z_opt: np.ndarray, rc: RoundingConfig):
    """K candidate pairs ``(q_t, w_t)`` with ``q_t ~ CN(0, Q)``, ``w_t ~ CN(0, Z)``.

    Deterministic per seed; components are complex normal with variance 1/2
    per real and imaginary part.
    """
    rng = np.random.default_rng(rc.seed)
    s_q = psd_factor(q_opt)
    s_z = psd_factor(z_opt)
    n, d = s_q.shape[0], s_z.shape[0]

    def crandn(k):
        return (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)

    return [(s_q @ crandn(n), s_z @ crandn(d)) for _ in range(rc.k_samples)]


def candidate_metrics(q: np.ndarray, w_mat: np.ndarray, ch: ChannelSet, cfg: SystemConfig) -> dict:
    """Direct-form ingredients of the surrogate constraints at a rank-one point.

    Cheap closed forms of the lifted traces and cone norms evaluated at
    ``Q = q q^H``, ``Z = vec(W) vec(W)^H``.
    """
    q = np.asarray(q, dtype=complex)
    hq = ch.h @ q
    w_hq = w_mat @ hq
    gb_w = ch.g_b @ w_mat
    ge_w = ch.g_e_hat @ w_mat
    u_vec = w_mat @ np.outer(hq, hq.conj()) @ w_mat.conj().T @ ch.g_e_hat.conj()
    v_vec = w_mat @ w_mat.conj().T @ ch.g_e_hat.conj()
    return {
        "num_b": float(abs(gb_w @ hq) ** 2),
        "den_b": float(cfg.sigma2_r * np.linalg.norm(gb_w) ** 2),
        "num_e": float(abs(ge_w @ hq) ** 2),
        "den_e": float(cfg.sigma2_r * np.linalg.norm(ge_w) ** 2),
        "u_norm": float(np.linalg.norm(u_vec)),
        "v_norm": float(np.linalg.norm(v_vec)),
        "power": float(
            np.linalg.norm(q) ** 2
            + np.linalg.norm(w_hq) ** 2
            + cfg.sigma2_r * np.linalg.norm(w_mat) ** 2
        ),
    }


def _constraint_residuals(mt: dict, cfg: SystemConfig, include_sigma_e: bool):
    """Normalized residuals of Bob's row and the eavesdropper row (>= 0 is
    feasible)."""
    bob = mt["num_b"] - cfg.r_b * mt["den_b"] - cfg.r_b * cfg.sigma2_b
    bob_scale = max(1.0, abs(mt["num_b"]), cfg.r_b * cfg.sigma2_b)
    eve_const = cfg.r_e * cfg.sigma2_e if include_sigma_e else 0.0
    eve = (
        cfg.r_e * mt["den_e"]
        - mt["num_e"]
        - 2.0 * cfg.eps * mt["u_norm"]
        - 2.0 * cfg.r_e * cfg.eps * cfg.sigma2_r * mt["v_norm"]
        + eve_const
    )
    eve_scale = max(1.0, abs(mt["num_e"]), cfg.r_e * mt["den_e"])
    return bob / bob_scale, eve / eve_scale


def _is_feasible(mt, cfg, include_sigma_e):
    rb, re_ = _constraint_residuals(mt, cfg, include_sigma_e)
    return rb >= -_FEAS_TOL and re_ >= -_FEAS_TOL


def verify_pair(pair: BeamformingPair, ch: ChannelSet, cfg: SystemConfig,
                include_sigma_e: bool = False):
    """(feasible, total_power) of an existing pair under ``cfg``'s surrogate
    constraints; lets callers inject candidates found elsewhere."""
    mt = candidate_metrics(pair.q, pair.w_mat, ch, cfg)
    return _is_feasible(mt, cfg, include_sigma_e), mt["power"]


def scale_candidate(q_t, w_t, ch: ChannelSet, cfg: SystemConfig, include_sigma_e: bool = False):
    """Constraint-restoring scale factors for one candidate.

    ``alpha`` forces Bob's row to equality at the candidate's own source
    covariance; ``beta`` then forces the eavesdropper row to equality with the
    source-dependent load scaled by ``beta^2`` (the source-free surplus over
    the source-dependent load). Returns ``None`` when either square root has a
    nonpositive argument (the candidate is unsalvageable).
    """
    m = cfg.n_relay
    w_mat = unvec(np.asarray(w_t, dtype=complex), m, m)
    mt = candidate_metrics(q_t, w_mat, ch, cfg)

    t_bob = mt["num_b"] - cfg.r_b * mt["den_b"]
    if t_bob <= 0:
        return None
    alpha2 = cfg.r_b * cfg.sigma2_b / t_bob

    surplus = alpha2 * cfg.r_e * (mt["den_e"] - 2.0 * cfg.eps * cfg.sigma2_r * mt["v_norm"])
    if include_sigma_e:
        surplus += cfg.r_e * cfg.sigma2_e
    load = alpha2 * (mt["num_e"] + 2.0 * cfg.eps * mt["u_norm"])
    if load <= 1e-300:
        # the eavesdropper row cannot be moved by scaling the source; keep
        # beta = 1 and let re-verification decide
        beta2 = 1.0
    else:
        beta2 = surplus / load
        if beta2 <= 0:
            return None
    alpha = float(np.sqrt(alpha2))
    beta = float(np.sqrt(beta2))
    return alpha, beta, beta * np.asarray(q_t, dtype=complex), alpha * w_mat


def _phase_normalize(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    if abs(v[idx]) == 0:
        return v
    return v * np.exp(-1j * np.angle(v[idx]))


def randomize_select(
    q_opt: np.ndarray,
    z_opt: np.ndarray,
    ch: ChannelSet,
    cfg: SystemConfig,
    rc: RoundingConfig | None = None,
    include_sigma_e: bool = False,
) -> PrecoderSolution:
    """Pick the cheapest feasible rank-one pair recoverable from ``(Q, Z)``.

    Eigen candidates (the principal components of both matrices) are always in
    the pool alongside the Gaussian draws. Unscaled-feasible candidates are
    kept as-is; violating ones go through :func:`scale_candidate` and are
    re-verified at the scaled point. Ties break to the lowest candidate index.
    If nothing is feasible the best-effort lowest-violation candidate is
    returned flagged infeasible, with diagnostics.
    """
    rc = rc or RoundingConfig()
    m = cfg.n_relay

    q1 = rank_one_extract(q_opt, rc.rank_tol)
    w1 = rank_one_extract(z_opt, rc.rank_tol)
    eigen_path = q1 is not None and w1 is not None

    wq, uq = hermitian_eig(q_opt)
    wz, uz = hermitian_eig(z_opt)
    eigen_q = np.sqrt(max(wq[0], 0.0)) * uq[:, 0]
    eigen_w = np.sqrt(max(wz[0], 0.0)) * uz[:, 0]

    candidates = [(eigen_q, eigen_w, "eigen")]
    if not eigen_path:
        # deterministic fallback: projecting the relay rows orthogonal to the
        # estimated eavesdropper channel kills both cone terms identically,
        # so this candidate survives arbitrarily tight caps
        g_norm = np.linalg.norm(ch.g_e_hat)
        if g_norm > 0:
            g_hat = ch.g_e_hat / g_norm
            proj = np.eye(m) - np.outer(g_hat.conj(), g_hat)
            w_zf = vec(proj @ unvec(eigen_w, m, m))
            candidates.append((eigen_q, w_zf, "zero-forcing"))
        candidates += [
            (q_t, w_t, "randomized")
            for q_t, w_t in gaussian_candidates(q_opt, z_opt, rc)
        ]

    best = None
    best_effort = None
    n_unsalvageable = 0
    for idx, (q_t, w_t, src) in enumerate(candidates):
        w_mat_t = unvec(np.asarray(w_t, dtype=complex), m, m)
        mt = candidate_metrics(q_t, w_mat_t, ch, cfg)
        if _is_feasible(mt, cfg, include_sigma_e):
            entry = (mt["power"], idx, q_t, w_mat_t, 1.0, 1.0, src, mt)
        else:
            scaled = scale_candidate(q_t, w_t, ch, cfg, include_sigma_e)
            if scaled is None:
                n_unsalvageable += 1
                entry = None
            else:
                alpha, beta, q_s, w_s = scaled
                mt_s = candidate_metrics(q_s, w_s, ch, cfg)
                if _is_feasible(mt_s, cfg, include_sigma_e):
                    entry = (mt_s["power"], idx, q_s, w_s, alpha, beta, src, mt_s)
                else:
                    entry = None
                    n_unsalvageable += 1
        if entry is not None and (best is None or entry[0] < best[0]):
            best = entry
        if entry is None:
            viol = min(_constraint_residuals(mt, cfg, include_sigma_e))
            if best_effort is None or viol > best_effort[0]:
                best_effort = (viol, idx, q_t, w_mat_t, mt, src)

    if best is not None:
        power, idx, q_f, w_f, alpha, beta, src, mt = best
        return PrecoderSolution(
            pair=BeamformingPair(q=_phase_normalize(q_f), w_mat=w_f),
            total_power=power,
            feasible=True,
            alpha=alpha,
            beta=beta,
            source=src,
            diagnostics={"candidate_index": idx, "unsalvageable": n_unsalvageable},
        )

    viol, idx, q_f, w_f, mt, src = best_effort
    return PrecoderSolution(
        pair=BeamformingPair(q=_phase_normalize(q_f), w_mat=w_f),
        total_power=mt["power"],
        feasible=False,
        source=src,
        diagnostics={
            "candidate_index": idx,
            "unsalvageable": n_unsalvageable,
            "worst_residual": viol,
        },
    )
