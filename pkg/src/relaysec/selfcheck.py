"""Runtime invariant self-checks.

Runs compact versions of the identity, permutation, bound-validity,
monotonicity and feasibility property suites against the installed build and
reports per-suite trial counts and worst residuals. The bound functions are
injectable so a deliberately broken implementation is caught (mutation
canary) and so tests can exercise the failure path.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg, sysmodel
from .alternating import AltConfig, run_alternating
from .conic import solve
from .rounding import RoundingConfig
from .experiments import run_single
from .subproblems import build_z_subproblem
from .sysmodel import BeamformingPair, LiftedPair, SystemConfig, sample_channels

__all__ = ["CheckReport", "SuiteResult", "run_self_check"]


@dataclass
class SuiteResult:
    name: str
    trials: int
    max_residual: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "max_residual": self.max_residual,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class CheckReport:
    suites: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "suites": [s.to_dict() for s in self.suites]}


def _rand_pair(rng, cfg) -> BeamformingPair:
    n, m = cfg.n_src, cfg.n_relay

    def crandn(*s):
        return (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2.0)

    return BeamformingPair(q=crandn(n), w_mat=crandn(m, m))


def _identity_suite(dims, trials, rng) -> SuiteResult:
    worst = 0.0
    n_checks = 0
    for m, n in dims:
        cfg = SystemConfig(n_src=n, n_relay=m)
        for _ in range(trials):
            ch = sample_channels(cfg, rng)
            pair = _rand_pair(rng, cfg)
            lp = LiftedPair.from_pair(pair)
            for fn in (sysmodel.relay_power, sysmodel.bob_snr):
                a = fn(pair, ch, cfg)
                b = fn(lp, ch, cfg)
                worst = max(worst, abs(a - b) / max(1.0, abs(a)))
            n_checks += 1
    return SuiteResult("identity", n_checks, worst, worst <= 1e-10)


def _tf_suite(dims, trials, rng) -> SuiteResult:
    worst = 0.0
    n_checks = 0
    for m, _ in dims:
        tf = linalg.conj_kron_permutation(m, m)
        dense = tf.to_dense()
        if not (
            np.array_equal(dense.sum(axis=0), np.ones(tf.dimension))
            and np.array_equal(dense.sum(axis=1), np.ones(tf.dimension))
        ):
            return SuiteResult("tf-permutation", n_checks, 1.0, False, "row/col sums")
        for _ in range(trials):
            f = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            lhs = linalg.vec(np.kron(f.conj(), f))
            fv = linalg.vec(f)
            rhs = tf.apply(linalg.vec(np.outer(fv, fv.conj())))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
            n_checks += 1
    return SuiteResult("tf-permutation", n_checks, worst, worst <= 1e-13)


def _bound_suite(dims, trials, rng, num_ub_fn, den_lb_fn, n_delta=200) -> SuiteResult:
    worst = 0.0
    n_checks = 0
    for m, n in dims:
        cfg = SystemConfig(n_src=n, n_relay=m, eps=0.1)
        for _ in range(trials):
            ch = sample_channels(cfg, rng)
            pair = _rand_pair(rng, cfg)
            lp = LiftedPair.from_pair(pair)
            ub = num_ub_fn(lp, ch, cfg)
            lb = den_lb_fn(lp, ch, cfg)
            whqw = (
                pair.w_mat
                @ ch.h
                @ lp.q_big
                @ ch.h.conj().T
                @ pair.w_mat.conj().T
            )
            quad = cfg.eps**2 * float(np.linalg.eigvalsh(
                (whqw + whqw.conj().T) / 2
            )[-1])
            for _ in range(n_delta):
                err = sysmodel.sample_eve_error(cfg, rng)
                g = ch.g_e_hat + err.delta
                gw = g @ pair.w_mat
                num = float(abs(gw @ ch.h @ pair.q) ** 2)
                den = float(cfg.sigma2_r * np.linalg.norm(gw) ** 2 + cfg.sigma2_e)
                worst = max(worst, (num - ub - quad - 1e-9) / max(1.0, num))
                worst = max(worst, (lb - den) / max(1.0, den))
            n_checks += 1
    return SuiteResult("bound-validity", n_checks, max(worst, 0.0), worst <= 0.0)


def _monotonicity_suite(dims, trials, rng) -> SuiteResult:
    worst = 0.0
    n_checks = 0
    m, n = dims[0]
    cfg0 = SystemConfig(n_src=n, n_relay=m, r_b=10 ** 0.3, r_e=1.0, eps=0.01)
    for _ in range(max(1, trials // 4)):
        ch = sample_channels(cfg0, rng)
        q0 = (10.0 / n) * np.eye(n, dtype=complex)
        vals = []
        for eps in (0.0, 0.05, 0.1):
            out = solve(build_z_subproblem(q0, ch, replace(cfg0, eps=eps)))
            if not out.ok:
                vals = []
                break
            vals.append(out.objective)
        for lo, hi in zip(vals, vals[1:]):
            worst = max(worst, (lo - hi) / max(1.0, abs(hi)))
        sol = run_alternating(ch, cfg0, AltConfig())
        if sol.ok:
            for a, b in zip(sol.xi_trace, sol.xi_trace[1:]):
                worst = max(worst, (b - a) / max(1.0, abs(a)))
        n_checks += 1
    return SuiteResult("monotonicity", n_checks, max(worst, 0.0), worst <= 1e-6)


def _feasibility_suite(dims, trials, rng) -> SuiteResult:
    worst = 0.0
    n_checks = 0
    m, n = dims[0]
    cfg = SystemConfig(n_src=n, n_relay=m, r_b=10 ** 0.3, r_e=1.0, eps=0.01)
    for k in range(max(1, trials // 4)):
        ch = sample_channels(cfg, rng)
        pr = run_single(ch, cfg, AltConfig(), RoundingConfig(seed=k))
        if not pr.lifted.ok:
            continue
        lp = LiftedPair(q_big=pr.lifted.q_big, z_big=pr.lifted.z_big)
        a_val = float(
            np.trace(lp.z_big @ sysmodel.bob_constraint_matrix(lp, ch, cfg)).real
        )
        worst = max(
            worst, (cfg.r_b * cfg.sigma2_b - a_val) / max(1.0, cfg.r_b * cfg.sigma2_b)
        )
        if pr.ok:
            worst = max(
                worst,
                (pr.lifted.power - pr.rounded.total_power - 1e-6)
                / max(1.0, pr.lifted.power),
            )
        n_checks += 1
    return SuiteResult("feasibility", n_checks, max(worst, 0.0), worst <= 1e-6)


def run_self_check(
    dims=None,
    trials: int = 20,
    seed: int = 0,
    num_ub_fn=None,
    den_lb_fn=None,
) -> CheckReport:
    """Run all property suites; any failure flips the report to failed.

    ``dims`` is a list of (M, N) pairs (default ``[(2, 2), (3, 3)]``).
    ``num_ub_fn``/``den_lb_fn`` override the eavesdropper bound
    implementations under test.
    """
    dims = [(int(m), int(n)) for m, n in (dims or [(2, 2), (3, 3)])]
    rng = np.random.default_rng(seed)
    num_ub_fn = num_ub_fn or sysmodel.eve_numerator_upper_bound
    den_lb_fn = den_lb_fn or sysmodel.eve_denominator_lower_bound
    report = CheckReport()
    report.suites.append(_identity_suite(dims, trials, rng))
    report.suites.append(_tf_suite(dims, trials, rng))
    report.suites.append(_bound_suite(dims, max(1, trials // 4), rng, num_ub_fn, den_lb_fn))
    report.suites.append(_monotonicity_suite(dims, trials, rng))
    report.suites.append(_feasibility_suite(dims, trials, rng))
    return report
