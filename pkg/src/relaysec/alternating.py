"""Alternating convex optimization over the lifted pair.

The relaxed design problem is bilinear in ``(Q, Z)`` but convex in each block
with the other fixed, so it is driven to a stationary point by alternating
the two subproblem solves. The per-iteration power value is recorded after
the source-side half step, giving a trace that cannot increase: the previous
iterate stays feasible for every subsequent subproblem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import SolveOutcome, SolverSettings, recover_hermitian, solve
from .subproblems import build_q_subproblem, build_z_subproblem
from .sysmodel import ChannelSet, SystemConfig

__all__ = ["AltConfig", "LiftedSolution", "run_alternating"]


@dataclass(frozen=True)
class AltConfig:
    """Outer-loop knobs: sentinel objective ``xi0``, relative convergence
    threshold ``tol``, iteration cap ``n_max``, initialization power ``p_s``
    (the starting source covariance is ``(p_s / N) I``)."""

    xi0: float = 1e3
    tol: float = 1e-3
    n_max: int = 30
    p_s: float = 10.0

    def __post_init__(self):
        if self.tol <= 0 or self.n_max < 1 or self.p_s <= 0:
            raise ValueError("invalid alternating configuration")


@dataclass
class LiftedSolution:
    """Final iterates with the recorded power trace.

    ``status``: converged | iteration-capped | infeasible | failed. On the
    unhappy statuses the partial trace and last iterates are retained.
    ``init_retries`` counts restarts of the first relay-side solve;
    ``q_skips`` counts source-side half steps that were skipped because the
    solver stalled on a degenerate boundary problem (the previous source
    covariance stays feasible, so skipping preserves descent).
    """

    q_big: np.ndarray
    z_big: np.ndarray | None
    xi_trace: list = field(default_factory=list)
    iterations: int = 0
    status: str = "failed"
    init_retries: int = 0
    q_skips: int = 0

    @property
    def power(self) -> float:
        return self.xi_trace[-1] if self.xi_trace else float("nan")

    @property
    def ok(self) -> bool:
        return self.status in ("converged", "iteration-capped")


def _bad_status(out: SolveOutcome) -> str:
    return "infeasible" if out.status == "infeasible" else "failed"


def _solve_robust(problem, settings: SolverSettings | None) -> SolveOutcome:
    """Solve, retrying once at a looser target tolerance on a numerical stall
    (the retry must still clear the outcome's own residual audit)."""
    out = solve(problem, settings)
    if out.status == "numerical-failure":
        retry = solve(problem, SolverSettings(tol=1e-8))
        if retry.ok:
            return retry
    return out


def _init_ladder(ch: ChannelSet, cfg: SystemConfig, ac: AltConfig):
    """Fallback starting covariances tried when the first relay-side solve is
    infeasible.

    The scaled-up isotropic retry helps when the Bob floor is out of reach;
    the remaining entries target the opposite failure mode, where the initial
    source power is so large that the eavesdropper cap is unattainable for
    every relay precoder: an isotropic point inside the feasibility window
    ``p in (r_b sigma_r^2 / lam_max(HH^H), r_e sigma_r^2 / lam_min(HH^H))``
    and a rank-one covariance along the dominant source direction (which
    always satisfies the cap's necessary condition).
    """
    n = cfg.n_src
    eye = np.eye(n, dtype=complex)
    ladder = [10.0 * (ac.p_s / n) * eye]
    ev = np.linalg.eigvalsh(ch.h @ ch.h.conj().T)
    lo = cfg.r_b * cfg.sigma2_r / max(float(ev[-1]), 1e-300)
    hi = cfg.r_e * cfg.sigma2_r / max(float(ev[0]), 1e-300)
    if lo < hi:
        ladder.append(np.sqrt(lo * hi) * eye)
    _, _, vh = np.linalg.svd(ch.h)
    u1 = vh[0].conj()
    ladder.append(ac.p_s * np.outer(u1, u1.conj()))
    return ladder


def run_alternating(
    ch: ChannelSet,
    cfg: SystemConfig,
    ac: AltConfig | None = None,
    include_sigma_e: bool = False,
    settings: SolverSettings | None = None,
    q_init: np.ndarray | None = None,
) -> LiftedSolution:
    """Alternate relay-side and source-side solves until the power converges.

    Starts from ``Q = (p_s / N) I`` unless ``q_init`` supplies an explicit
    starting covariance (the experiment driver uses this to warm-restart from
    a rounded point when randomization certifies a better basin). Each
    iteration solves for ``Z`` at the current ``Q``, then for ``Q`` at the new
    ``Z``, and records the full power objective. Stops when
    ``|xi_n - xi_{n-1}| / xi_n <= tol`` (values at or below 1e-12 count as
    converged) or at ``n_max`` iterations.

    Robustness: if the first relay-side problem is infeasible the
    initialization ladder is walked (scaled-up isotropic first, then inits
    targeting an unattainable eavesdropper cap) before declaring
    infeasibility. A source-side solve that stalls or misreports on a
    degenerate boundary problem is skipped: the relay-side optimum already
    makes its constraints exactly active, so the previous source covariance
    remains feasible and ``xi`` equals the relay-side optimum for that sweep.
    """
    ac = ac or AltConfig()
    n = cfg.n_src
    m2 = cfg.n_relay**2
    if q_init is not None:
        q_curr = np.asarray(q_init, dtype=complex)
    else:
        q_curr = (ac.p_s / n) * np.eye(n, dtype=complex)
    sol = LiftedSolution(q_big=q_curr, z_big=None)
    xi_prev = ac.xi0
    ladder = None

    it = 1
    while it <= ac.n_max:
        out_z = _solve_robust(build_z_subproblem(q_curr, ch, cfg, include_sigma_e), settings)
        if not out_z.ok:
            if out_z.status == "infeasible" and it == 1 and q_init is None:
                if ladder is None:
                    ladder = _init_ladder(ch, cfg, ac)
                if ladder:
                    sol.init_retries += 1
                    q_curr = ladder.pop(0)
                    sol.q_big = q_curr
                    continue
            sol.status = _bad_status(out_z)
            return sol
        try:
            z_curr = recover_hermitian(out_z, "Z", m2)
        except ValueError:
            sol.status = "failed"
            return sol
        sol.z_big = z_curr

        out_q = _solve_robust(build_q_subproblem(z_curr, ch, cfg, include_sigma_e), settings)
        q_next = None
        if out_q.ok:
            try:
                q_next = recover_hermitian(out_q, "Q", n)
            except ValueError:
                q_next = None
        if q_next is not None:
            q_curr = q_next
            sol.q_big = q_curr
            xi = out_q.objective
        else:
            # degenerate boundary problem: keep the previous source covariance
            # (feasible by construction) and score the relay-side optimum
            sol.q_skips += 1
            xi = out_z.objective

        sol.xi_trace.append(xi)
        sol.iterations = it
        if abs(xi) <= 1e-12 or abs(xi - xi_prev) / abs(xi) <= ac.tol:
            sol.status = "converged"
            return sol
        xi_prev = xi
        it += 1

    sol.status = "iteration-capped"
    return sol
