"""Two-hop relay network model: configuration, channel sampling, the
norm-bounded eavesdropper error model, and every power/SNR expression in both
direct ``(q, W)`` and lifted ``(Q, Z)`` form.

Direct form: the source sends ``q x``, the relay applies ``W`` and forwards,
Bob receives through the row channel ``g_b`` and the eavesdropper through
``g_e = g_e_hat + delta`` with ``||delta|| <= eps``.

Lifted form: with ``w = vec(W)`` (column-major), ``Z = w w^H``, ``Q = q q^H``,
every quadratic form in ``W`` becomes a trace against a Kronecker operator:

    Tr(W A W^H B) = vec(W)^H (A^T kron B) vec(W)

so, e.g., Bob's received signal power is ``Tr(Z ((H Q H^H)^T kron g_b^H g_b))``.
Worst-case eavesdropper bounds keep the second-order error term out and bound
the linear term over the ball, which turns into norm terms that are linear in
``vec(Z)`` through the conjugate-Kronecker permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import conj_kron_permutation, unvec, vec

__all__ = [
    "BeamformingPair",
    "ChannelSet",
    "EveError",
    "LiftedPair",
    "SystemConfig",
    "bob_constraint_matrix",
    "bob_snr",
    "eve_constraint_matrix",
    "eve_denominator_lower_bound",
    "eve_denominator_soc_vec",
    "eve_numerator_soc_vec",
    "eve_numerator_upper_bound",
    "eve_snr",
    "lifted_relay_operator",
    "relay_power",
    "sample_channels",
    "sample_eve_error",
    "source_power",
    "worst_case_error",
]


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, noise powers, QoS thresholds and the uncertainty radius.

    Thresholds are linear (not dB): ``r_b`` is the SNR floor for Bob, ``r_e``
    the SNR cap for the eavesdropper.
    """

    n_src: int
    n_relay: int
    sigma2_r: float = 1.0
    sigma2_b: float = 1.0
    sigma2_e: float = 1.0
    r_b: float = 1.0
    r_e: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if self.n_src < 1 or self.n_relay < 1:
            raise ValueError("antenna counts must be >= 1")
        for name in ("sigma2_r", "sigma2_b", "sigma2_e", "r_b", "r_e"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization: ``h`` is M x N source->relay, ``g_b`` and
    ``g_e_hat`` are length-M rows (relay->Bob, estimated relay->eavesdropper)."""

    h: np.ndarray
    g_b: np.ndarray
    g_e_hat: np.ndarray

    def __post_init__(self):
        m, _ = self.h.shape
        if self.g_b.shape != (m,) or self.g_e_hat.shape != (m,):
            raise ValueError("g_b / g_e_hat must be length-M rows")
        for a in (self.h, self.g_b, self.g_e_hat):
            if not np.all(np.isfinite(a.view(float))):
                raise ValueError("channel entries must be finite")


@dataclass(frozen=True)
class BeamformingPair:
    """Source beamformer ``q`` (length N) and relay precoder ``w_mat`` (M x M)."""

    q: np.ndarray
    w_mat: np.ndarray

    @property
    def w(self) -> np.ndarray:
        """Column-major ``vec(W)``."""
        return vec(self.w_mat)


@dataclass(frozen=True)
class LiftedPair:
    """Relaxed decision variables ``Q`` (N x N) and ``Z`` (M^2 x M^2), both
    Hermitian PSD within tolerance."""

    q_big: np.ndarray
    z_big: np.ndarray

    def __post_init__(self):
        for name, a in (("q_big", self.q_big), ("z_big", self.z_big)):
            h = linalg.hermitian_part(a)
            w = np.linalg.eigvalsh(h)
            lam_max = float(w[-1]) if w.size else 0.0
            if w.size and float(w[0]) < -1e-8 * max(1.0, lam_max):
                raise ValueError(f"{name} is not PSD within tolerance")

    @classmethod
    def from_pair(cls, pair: BeamformingPair) -> "LiftedPair":
        q = np.asarray(pair.q, dtype=complex)
        w = pair.w
        return cls(q_big=np.outer(q, q.conj()), z_big=np.outer(w, w.conj()))


@dataclass(frozen=True)
class EveError:
    """One realization ``delta`` (length-M row) of the eavesdropper channel
    estimation error; creators guarantee ``||delta|| <= eps``."""

    delta: np.ndarray


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, zero mean, unit total variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(cfg: SystemConfig, seed) -> ChannelSet:
    """Draw one i.i.d. CN(0, 1) channel realization (Rayleigh fading).

    Deterministic for a fixed seed; accepts an int, ``SeedSequence`` or
    ``Generator``.
    """
    rng = _rng(seed)
    return ChannelSet(
        h=_crandn(rng, cfg.n_relay, cfg.n_src),
        g_b=_crandn(rng, cfg.n_relay),
        g_e_hat=_crandn(rng, cfg.n_relay),
    )


def sample_eve_error(cfg: SystemConfig, seed) -> EveError:
    """Draw ``delta`` uniformly on the complex ``eps``-ball.

    Uniform direction, radius ``eps * u**(1/(2M))`` with ``u ~ U(0,1)`` (the
    complex M-ball is a real 2M-ball). ``eps = 0`` gives the zero vector.
    """
    rng = _rng(seed)
    m = cfg.n_relay
    if cfg.eps == 0.0:
        return EveError(delta=np.zeros(m, dtype=complex))
    direction = _crandn(rng, m)
    direction /= np.linalg.norm(direction)
    radius = cfg.eps * rng.uniform() ** (1.0 / (2 * m))
    return EveError(delta=radius * direction)


# ---------------------------------------------------------------------------
# power and SNR, direct and lifted
# ---------------------------------------------------------------------------


def source_power(lp: LiftedPair) -> float:
    """Transmit power at the source, ``Tr(Q)``."""
    return float(np.trace(lp.q_big).real)


def lifted_relay_operator(q_big: np.ndarray, ch: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """R(Q) with relay power ``= Tr(Z R(Q))``: ``(H Q H^H + sigma_r^2 I)^T kron I_M``."""
    m = ch.h.shape[0]
    p = ch.h @ np.asarray(q_big) @ ch.h.conj().T
    return linalg.kron((p + cfg.sigma2_r * np.eye(m)).T, np.eye(m))


def relay_power(arg, ch: ChannelSet, cfg: SystemConfig) -> float:
    """Relay transmit power.

    Direct form ``Tr(W H Q H^H W^H) + sigma_r^2 ||W||_F^2``; lifted form
    ``Tr(Z R(Q))``. Both agree when ``Q = q q^H`` and ``Z = vec(W) vec(W)^H``.
    """
    if isinstance(arg, BeamformingPair):
        whq = arg.w_mat @ ch.h @ np.asarray(arg.q, dtype=complex)
        return float(
            np.linalg.norm(whq) ** 2 + cfg.sigma2_r * np.linalg.norm(arg.w_mat) ** 2
        )
    return float(np.trace(arg.z_big @ lifted_relay_operator(arg.q_big, ch, cfg)).real)


def _row_outer(g: np.ndarray) -> np.ndarray:
    """``g^H g`` for a length-M row ``g``."""
    return np.outer(np.asarray(g).conj(), np.asarray(g))


def bob_snr(arg, ch: ChannelSet, cfg: SystemConfig) -> float:
    """Bob's SNR, direct or lifted.

    Direct: ``|g_b W H q|^2 / (sigma_r^2 ||g_b W||^2 + sigma_b^2)``.
    Lifted numerator/denominator are traces against
    ``(H Q H^H)^T kron g_b^H g_b`` and ``sigma_r^2 (I kron g_b^H g_b)``.
    """
    if isinstance(arg, BeamformingPair):
        gw = ch.g_b @ arg.w_mat
        num = abs(gw @ ch.h @ np.asarray(arg.q, dtype=complex)) ** 2
        den = cfg.sigma2_r * np.linalg.norm(gw) ** 2 + cfg.sigma2_b
        return float(num / den)
    m = ch.h.shape[0]
    gout = _row_outer(ch.g_b)
    p = ch.h @ arg.q_big @ ch.h.conj().T
    num = np.trace(arg.z_big @ linalg.kron(p.T, gout)).real
    den = cfg.sigma2_r * np.trace(arg.z_big @ linalg.kron(np.eye(m), gout)).real
    return float(num / (den + cfg.sigma2_b))


def eve_snr(pair: BeamformingPair, ch: ChannelSet, cfg: SystemConfig, err: EveError) -> float:
    """Exact eavesdropper SNR at the error realization ``err`` (direct form only,
    so it stays independent of the lifted pipeline it is used to validate)."""
    g = ch.g_e_hat + err.delta
    gw = g @ pair.w_mat
    num = abs(gw @ ch.h @ np.asarray(pair.q, dtype=complex)) ** 2
    den = cfg.sigma2_r * np.linalg.norm(gw) ** 2 + cfg.sigma2_e
    return float(num / den)


# ---------------------------------------------------------------------------
# worst-case eavesdropper bounds over the error ball
# ---------------------------------------------------------------------------


def eve_numerator_soc_vec(z_big: np.ndarray, q_big: np.ndarray, ch: ChannelSet) -> np.ndarray:
    """u(Z, Q) = (vec(H Q H^H)^T kron (g_e_hat^* kron I_M)) T vec(Z), with
    ``T`` the conjugate-Kronecker permutation.

    Linear in ``vec(Z)`` and in ``Q``; at rank-one ``Z = vec(W) vec(W)^H`` it
    equals ``W H Q H^H W^H g_e_hat^H``, the coefficient of the numerator's
    linear error term.
    """
    m = ch.h.shape[0]
    p = ch.h @ np.asarray(q_big) @ ch.h.conj().T
    tf = conj_kron_permutation(m, m)
    y = unvec(tf.apply(vec(z_big)), m * m, m * m)
    g_fac = linalg.kron(ch.g_e_hat.conj()[None, :], np.eye(m))
    return (g_fac @ y @ vec(p)).reshape(m)


def eve_denominator_soc_vec(z_big: np.ndarray, ch: ChannelSet) -> np.ndarray:
    """v(Z) = (vec(I_M)^T kron (g_e_hat^* kron I_M)) T vec(Z), with ``T`` the
    conjugate-Kronecker permutation.

    At rank-one ``Z`` it equals ``W W^H g_e_hat^H``, the coefficient of the
    denominator's linear error term (up to the ``sigma_r^2`` factor carried by
    the caller).
    """
    m = ch.h.shape[0]
    tf = conj_kron_permutation(m, m)
    y = unvec(tf.apply(vec(z_big)), m * m, m * m)
    g_fac = linalg.kron(ch.g_e_hat.conj()[None, :], np.eye(m))
    return (g_fac @ y @ vec(np.eye(m))).reshape(m)


def eve_numerator_upper_bound(lp: LiftedPair, ch: ChannelSet, cfg: SystemConfig) -> float:
    """First-order upper bound of the eavesdropper SNR numerator over the ball.

    ``Tr(Z ((H Q H^H)^T kron ghat^H ghat)) + 2 eps ||u(Z, Q)||``: the linear
    error term is bounded by the ball extremum; the dropped second-order term
    is PSD, so the exact numerator can exceed this by at most
    ``eps^2 * lam_max(W H Q H^H W^H)``.
    """
    gout = _row_outer(ch.g_e_hat)
    p = ch.h @ lp.q_big @ ch.h.conj().T
    base = np.trace(lp.z_big @ linalg.kron(p.T, gout)).real
    u = eve_numerator_soc_vec(lp.z_big, lp.q_big, ch)
    return float(base + 2.0 * cfg.eps * np.linalg.norm(u))


def eve_denominator_lower_bound(lp: LiftedPair, ch: ChannelSet, cfg: SystemConfig) -> float:
    """Strict lower bound of the eavesdropper SNR denominator over the ball.

    ``sigma_r^2 Tr(Z (I kron ghat^H ghat)) - 2 eps sigma_r^2 ||v(Z)|| +
    sigma_e^2``. The dropped quadratic ``sigma_r^2 delta W W^H delta^H`` is
    nonnegative and the linear term is bounded below by its ball extremum, so
    the bound is valid for every ``||delta|| <= eps``. The ``sigma_e^2``
    constant is carried explicitly, and ``sigma_r^2`` multiplies the norm term
    (it scales the linear error term it bounds).
    """
    m = ch.h.shape[0]
    gout = _row_outer(ch.g_e_hat)
    base = cfg.sigma2_r * np.trace(lp.z_big @ linalg.kron(np.eye(m), gout)).real
    v = eve_denominator_soc_vec(lp.z_big, ch)
    return float(base - 2.0 * cfg.eps * cfg.sigma2_r * np.linalg.norm(v) + cfg.sigma2_e)


# ---------------------------------------------------------------------------
# constraint matrices of the relaxed problem
# ---------------------------------------------------------------------------


def bob_constraint_matrix(lp: LiftedPair, ch: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """A(Q) with Bob's QoS constraint ``Tr(Z A) >= r_b sigma_b^2``.

    ``A = ((H Q H^H)^T - r_b sigma_r^2 I) kron g_b^H g_b``; for rank-one
    ``Z`` the trace inequality is equivalent to ``SNR_b >= r_b``.
    """
    m = ch.h.shape[0]
    p = ch.h @ lp.q_big @ ch.h.conj().T
    return linalg.kron(p.T - cfg.r_b * cfg.sigma2_r * np.eye(m), _row_outer(ch.g_b))


def eve_constraint_matrix(lp: LiftedPair, ch: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """B(Q) for the worst-case eavesdropper cap.

    ``B = (r_e sigma_r^2 I - (H Q H^H)^T) kron ghat^H ghat``; the relaxed
    constraint reads ``Tr(Z B) >= 2 eps ||u|| + 2 r_e eps sigma_r^2 ||v||``
    (plus ``- r_e sigma_e^2`` on the right when the denominator's noise
    constant is kept, see the subproblem builders).
    """
    m = ch.h.shape[0]
    p = ch.h @ lp.q_big @ ch.h.conj().T
    return linalg.kron(cfg.r_e * cfg.sigma2_r * np.eye(m) - p.T, _row_outer(ch.g_e_hat))


def worst_case_error(
    pair: BeamformingPair, ch: ChannelSet, cfg: SystemConfig, target: str
) -> EveError:
    """Closed-form extremal error direction on the ball boundary.

    ``target='numerator'`` maximizes the numerator's linear term
    (``delta = eps * conj(y)/||y||`` with ``y = W H Q H^H W^H ghat^H``);
    ``target='denominator'`` minimizes the denominator's
    (``delta = -eps * conj(y)/||y||`` with ``y = W W^H ghat^H``).
    """
    if cfg.eps <= 0:
        raise ValueError("worst_case_error requires eps > 0")
    if target not in ("numerator", "denominator"):
        raise ValueError(f"unknown target {target!r}")
    w = pair.w_mat
    if target == "numerator":
        hq = ch.h @ np.asarray(pair.q, dtype=complex)
        y = w @ np.outer(hq, hq.conj()) @ w.conj().T @ ch.g_e_hat.conj()
        sign = 1.0
    else:
        y = w @ w.conj().T @ ch.g_e_hat.conj()
        sign = -1.0
    norm = np.linalg.norm(y)
    if norm == 0.0:
        # degenerate coefficient: any boundary point is extremal
        delta = np.zeros(ch.h.shape[0], dtype=complex)
        delta[0] = cfg.eps
        return EveError(delta=delta)
    return EveError(delta=sign * cfg.eps * y.conj() / norm)
