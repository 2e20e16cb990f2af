"""HTTP service wrapping the design pipeline.

Endpoints mirror the CLI verbs: a single-instance ``/solve`` (seeded channel
draw or explicit channels), the invariant ``/check``, and synchronous
desk-scale ``/sweep`` and ``/eve-dist`` runs that return records as JSON
instead of writing files. Complex matrices travel as nested ``[re, im]``
pairs.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .config import ConfigError, SpecModel, spec_from_dict
from .experiments import run_eve_distribution, run_power_sweep, run_single
from .reporting import db, power_sweep_rows
from .rounding import RoundingConfig
from .selfcheck import run_self_check
from .sysmodel import ChannelSet, sample_channels

__all__ = ["app", "create_app"]

Complex = tuple[float, float]


def _encode_mat(a: np.ndarray) -> list:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    return [[(float(v.real), float(v.imag)) for v in row] for row in a]


def _decode_mat(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _clean(x: float) -> float | None:
    return None if (x is None or math.isnan(x)) else float(x)


class ChannelsIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h: list[list[Complex]]
    g_b: list[Complex]
    g_e_hat: list[Complex]

    def to_core(self) -> ChannelSet:
        return ChannelSet(
            h=_decode_mat(self.h),
            g_b=_decode_mat([self.g_b])[0],
            g_e_hat=_decode_mat([self.g_e_hat])[0],
        )


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SpecModel = SpecModel()
    seed: int = 0
    channels: ChannelsIn | None = None


class SolveResponse(BaseModel):
    status: str
    feasible: bool
    relaxed_power: float | None = None
    total_power: float | None = None
    iterations: int = 0
    xi_trace: list[float] = Field(default_factory=list)
    rounding_source: str = ""
    alpha: float = 1.0
    beta: float = 1.0
    polish_rounds: int = 0
    q: list[list[Complex]] | None = None
    w_mat: list[list[Complex]] | None = None


class CheckRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dims: list[int] = [2, 3]
    trials: int = Field(default=10, ge=1, le=200)
    seed: int = 0


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SpecModel = SpecModel()
    max_trials: int = Field(default=10, ge=1, le=200)


def _spec_for(req_config: SpecModel, cap_trials: int | None = None):
    try:
        spec = spec_from_dict(req_config.model_dump())
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    if cap_trials is not None and spec.trials > cap_trials:
        from dataclasses import replace

        spec = replace(spec, trials=cap_trials)
    return spec


def create_app() -> FastAPI:
    app = FastAPI(
        title="relaysec",
        version=__version__,
        description="Power-minimal secure source/relay beamforming service",
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/solve", response_model=SolveResponse)
    def solve_instance(req: SolveRequest) -> SolveResponse:
        spec = _spec_for(req.config)
        cfg = spec.system
        ch = (
            req.channels.to_core()
            if req.channels is not None
            else sample_channels(cfg, req.seed)
        )
        if ch.h.shape != (cfg.n_relay, cfg.n_src):
            raise HTTPException(
                status_code=422,
                detail=f"channel dims {ch.h.shape} do not match config "
                f"({cfg.n_relay}, {cfg.n_src})",
            )
        pr = run_single(
            ch,
            cfg,
            spec.alt,
            RoundingConfig(spec.k_samples, spec.rank_tol, req.seed),
            spec.include_sigma_e,
            spec.max_polish,
        )
        resp = SolveResponse(
            status=pr.lifted.status,
            feasible=pr.ok,
            iterations=pr.lifted.iterations,
            xi_trace=[float(x) for x in pr.lifted.xi_trace],
            polish_rounds=pr.polish_rounds,
        )
        if pr.lifted.ok:
            resp.relaxed_power = _clean(pr.lifted.power)
        if pr.rounded is not None:
            resp.total_power = _clean(pr.rounded.total_power)
            resp.rounding_source = pr.rounded.source
            resp.alpha = pr.rounded.alpha
            resp.beta = pr.rounded.beta
            resp.q = _encode_mat(pr.rounded.pair.q.reshape(-1, 1))
            resp.w_mat = _encode_mat(pr.rounded.pair.w_mat)
        return resp

    @app.post("/check")
    def check(req: CheckRequest) -> dict:
        report = run_self_check(
            dims=[(d, d) for d in req.dims], trials=req.trials, seed=req.seed
        )
        return report.to_dict()

    @app.post("/sweep")
    def sweep(req: SweepRequest) -> dict:
        spec = _spec_for(req.config, cap_trials=req.max_trials)
        rows = power_sweep_rows(run_power_sweep(spec))
        for row in rows:
            for key, val in list(row.items()):
                if isinstance(val, float) and math.isnan(val):
                    row[key] = None
        return {"points": rows}

    @app.post("/eve-dist")
    def eve_dist(req: SweepRequest) -> dict:
        spec = _spec_for(req.config, cap_trials=req.max_trials)
        records = run_eve_distribution(spec)
        out = []
        for rec in records:
            out.append(
                {
                    "trial": rec.trial,
                    "scheme": rec.scheme,
                    "eps": rec.eps,
                    "r_e_db": db(rec.r_e),
                    "feasible": rec.feasible,
                    "exceed_fraction": _clean(rec.exceed_fraction),
                    "worst_numerator_snr": _clean(rec.worst_numerator_snr),
                    "n_samples": int(rec.snr_samples.size),
                }
            )
        return {"records": out}

    return app


app = create_app()
