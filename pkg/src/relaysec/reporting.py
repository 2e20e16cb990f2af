"""CSV/JSON report emission.

Outputs are byte-reproducible for a fixed spec and root seed: fixed column
order, floats printed with 17 significant digits, UTF-8, LF line endings, no
timestamps. ``summary.json`` echoes the full spec and seed so any run can be
replayed.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict

import numpy as np

from . import __version__
from .experiments import EveDistRecord, ExperimentSpec, RunRecord

__all__ = ["db", "emit_reports", "fmt", "power_sweep_rows", "write_json"]


class EmptyReportError(ValueError):
    """No records left after filtering."""


def fmt(x: float) -> str:
    """Canonical float text: 17 significant digits (round-trip exact)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def db(linear: float) -> float:
    return 10.0 * math.log10(linear)


def _json_dump(obj, indent: int = 0) -> str:
    """Minimal canonical JSON emitter: sorted keys, 17-digit floats."""
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad_in}"{k}": {_json_dump(obj[k], indent + 1)}' for k in sorted(obj)
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = ",\n".join(f"{pad_in}{_json_dump(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if math.isnan(obj):
            return '"nan"'
        return fmt(float(obj))
    if obj is None:
        return "null"
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_json_dump(obj) + "\n")


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def power_sweep_rows(records: list) -> list:
    """Aggregate sweep records per (eps, r_b, r_e) point.

    Means are taken over trials where both schemes produced feasible rounded
    pairs; infeasible trials are counted, never averaged in. Both the rounded
    power (headline) and the relaxed power are emitted.
    """
    points = {}
    for rec in records:
        points.setdefault((rec.eps, rec.r_b, rec.r_e), []).append(rec)
    rows = []
    for (eps, r_b, r_e) in sorted(points):
        group = points[(eps, r_b, r_e)]
        good = [r for r in group if r.robust.feasible and r.nonrobust.feasible]
        row = {
            "eps": eps,
            "r_b_db": db(r_b),
            "r_e_db": db(r_e),
            "mean_power_robust": float("nan"),
            "mean_power_nonrobust": float("nan"),
            "n_feasible": len(good),
            "n_trials": len(group),
            "mean_relaxed_robust": float("nan"),
            "mean_relaxed_nonrobust": float("nan"),
        }
        if good:
            row["mean_power_robust"] = float(
                np.mean([r.robust.rounded_power for r in good])
            )
            row["mean_power_nonrobust"] = float(
                np.mean([r.nonrobust.rounded_power for r in good])
            )
            row["mean_relaxed_robust"] = float(
                np.mean([r.robust.relaxed_power for r in good])
            )
            row["mean_relaxed_nonrobust"] = float(
                np.mean([r.nonrobust.relaxed_power for r in good])
            )
        rows.append(row)
    return rows


_SWEEP_COLUMNS = [
    "eps",
    "r_b_db",
    "r_e_db",
    "mean_power_robust",
    "mean_power_nonrobust",
    "n_feasible",
    "n_trials",
    "mean_relaxed_robust",
    "mean_relaxed_nonrobust",
]

_EVE_COLUMNS = ["scheme", "eps", "r_e_db", "snr_e_db", "trial"]


def _spec_echo(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    for key in ("eps_values", "r_b_values", "r_e_values"):
        d[key] = list(d[key])
    return d


def emit_reports(
    records: list,
    spec: ExperimentSpec,
    output_dir: str | None = None,
    extras: dict | None = None,
) -> list:
    """Write the CSV/JSON reports for a batch of records; returns the paths.

    Accepts sweep records (``RunRecord``) or distribution records
    (``EveDistRecord``) and emits ``power_sweep.csv`` or ``eve_dist.csv``
    accordingly, always alongside ``summary.json``. ``extras`` is merged into
    the summary (used for documentation blocks like the initialization-power
    sensitivity rows).
    """
    if not records:
        raise EmptyReportError("no records to report (empty input batch)")
    out = output_dir or spec.output_dir
    os.makedirs(out, exist_ok=True)
    paths = []
    summary = {
        "artifact_version": __version__,
        "root_seed": spec.root_seed,
        "spec": _spec_echo(spec),
    }
    if extras:
        summary.update(extras)

    if isinstance(records[0], RunRecord):
        rows = power_sweep_rows(records)
        if not rows:
            raise EmptyReportError("no sweep points after aggregation")
        path = os.path.join(out, "power_sweep.csv")
        _write_csv(
            path,
            _SWEEP_COLUMNS,
            [[fmt(row[c]) for c in _SWEEP_COLUMNS] for row in rows],
        )
        paths.append(path)
        n_feas = sum(row["n_feasible"] for row in rows)
        n_tot = sum(row["n_trials"] for row in rows)
        summary["aggregate"] = {
            "kind": "power_sweep",
            "points": rows,
            "n_feasible_total": n_feas,
            "n_runs_total": n_tot,
        }
    elif isinstance(records[0], EveDistRecord):
        feas = [r for r in records if r.feasible]
        if not feas:
            raise EmptyReportError(
                "no feasible trials after filtering (filter: feasible)"
            )
        path = os.path.join(out, "eve_dist.csv")
        csv_rows = []
        for rec in feas:
            for s in rec.snr_samples:
                csv_rows.append(
                    [rec.scheme, fmt(rec.eps), fmt(db(rec.r_e)), fmt(db(float(s))), str(rec.trial)]
                )
        _write_csv(path, _EVE_COLUMNS, csv_rows)
        paths.append(path)
        by_scheme = {}
        for rec in feas:
            agg = by_scheme.setdefault(
                rec.scheme,
                {"n_trials": 0, "exceed_fractions": [], "worst_numerator_snr_db": []},
            )
            agg["n_trials"] += 1
            agg["exceed_fractions"].append(rec.exceed_fraction)
            agg["worst_numerator_snr_db"].append(db(rec.worst_numerator_snr))
        for scheme, agg in by_scheme.items():
            agg["mean_exceed_fraction"] = float(np.mean(agg["exceed_fractions"]))
        summary["aggregate"] = {"kind": "eve_dist", "schemes": by_scheme}
    else:
        raise TypeError(f"unknown record type {type(records[0]).__name__}")

    spath = os.path.join(out, "summary.json")
    write_json(spath, summary)
    paths.append(spath)
    return paths
