import json

import numpy as np
import pytest

from relaysec.experiments import (
    EveDistRecord,
    ExperimentSpec,
    RunRecord,
    SchemeResult,
)
from relaysec.reporting import EmptyReportError, db, emit_reports, fmt
from relaysec.sysmodel import SystemConfig


def make_spec(tmp_path):
    return ExperimentSpec(
        system=SystemConfig(n_src=2, n_relay=2, r_b=2.0, r_e=1.0, eps=0.01),
        trials=2,
        eps_values=(0.01,),
        r_b_values=(2.0,),
        r_e_values=(1.0,),
        eve_samples=4,
        root_seed=5,
        output_dir=str(tmp_path),
    )


def scheme(power, relaxed, feasible=True):
    return SchemeResult(
        alt_status="converged",
        relaxed_power=relaxed,
        rounded_power=power,
        iterations=3,
        rounding_source="randomized",
        feasible=feasible,
    )


def make_records():
    return [
        RunRecord(
            trial=t,
            eps=0.01,
            r_b=2.0,
            r_e=1.0,
            robust=scheme(5.0 + t, 4.5 + t),
            nonrobust=scheme(4.0 + t, 3.5 + t),
        )
        for t in range(3)
    ]


def test_fmt_17_digits():
    x = 1.0 / 3.0
    assert fmt(x) == format(x, ".17g")
    assert float(fmt(x)) == x
    assert fmt(3) == "3"


def test_power_sweep_round_trip(tmp_path):
    spec = make_spec(tmp_path)
    paths = emit_reports(make_records(), spec)
    csv_path, json_path = paths
    lines = open(csv_path, encoding="utf-8").read().split("\n")
    header = lines[0].split(",")
    assert header[:7] == [
        "eps",
        "r_b_db",
        "r_e_db",
        "mean_power_robust",
        "mean_power_nonrobust",
        "n_feasible",
        "n_trials",
    ]
    row = dict(zip(header, lines[1].split(",")))
    assert float(row["mean_power_robust"]) == pytest.approx(6.0)
    assert float(row["mean_power_nonrobust"]) == pytest.approx(5.0)
    assert row["n_feasible"] == "3" and row["n_trials"] == "3"
    assert float(row["r_b_db"]) == pytest.approx(db(2.0))
    summary = json.load(open(json_path, encoding="utf-8"))
    assert summary["root_seed"] == 5
    assert summary["spec"]["trials"] == 2


def test_reports_byte_identical(tmp_path):
    spec = make_spec(tmp_path)
    recs = make_records()
    emit_reports(recs, spec, str(tmp_path / "a"))
    emit_reports(recs, spec, str(tmp_path / "b"))
    for name in ("power_sweep.csv", "summary.json"):
        a = open(tmp_path / "a" / name, "rb").read()
        b = open(tmp_path / "b" / name, "rb").read()
        assert a == b
        assert b"\r" not in a


def test_infeasible_trials_excluded_from_means(tmp_path):
    recs = make_records()
    recs.append(
        RunRecord(
            trial=3,
            eps=0.01,
            r_b=2.0,
            r_e=1.0,
            robust=scheme(float("nan"), float("nan"), feasible=False),
            nonrobust=scheme(4.0, 3.5),
        )
    )
    paths = emit_reports(recs, make_spec(tmp_path))
    lines = open(paths[0], encoding="utf-8").read().strip().split("\n")
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert row["n_feasible"] == "3"
    assert row["n_trials"] == "4"
    assert float(row["mean_power_robust"]) == pytest.approx(6.0)


def test_empty_records_raise():
    spec = ExperimentSpec(system=SystemConfig(n_src=2, n_relay=2))
    with pytest.raises(EmptyReportError):
        emit_reports([], spec, "/tmp/never")


def test_eve_dist_emission(tmp_path):
    spec = make_spec(tmp_path)
    recs = [
        EveDistRecord(
            trial=0,
            scheme="robust",
            eps=0.1,
            r_b=2.0,
            r_e=1.0,
            snr_samples=np.array([0.5, 1.5]),
            exceed_fraction=0.5,
            worst_numerator_snr=1.6,
            worst_denominator_snr=1.4,
            feasible=True,
        ),
        EveDistRecord(trial=1, scheme="robust", eps=0.1, r_b=2.0, r_e=1.0),
    ]
    paths = emit_reports(recs, spec)
    lines = open(paths[0], encoding="utf-8").read().strip().split("\n")
    assert lines[0] == "scheme,eps,r_e_db,snr_e_db,trial"
    assert len(lines) == 3  # infeasible record filtered, 2 samples remain
    assert float(lines[1].split(",")[3]) == pytest.approx(db(0.5))
    summary = json.load(open(paths[1], encoding="utf-8"))
    agg = summary["aggregate"]["schemes"]["robust"]
    assert agg["n_trials"] == 1
    assert agg["mean_exceed_fraction"] == pytest.approx(0.5)


def test_eve_dist_all_infeasible_raises(tmp_path):
    spec = make_spec(tmp_path)
    recs = [EveDistRecord(trial=0, scheme="robust", eps=0.1, r_b=2.0, r_e=1.0)]
    with pytest.raises(EmptyReportError, match="feasible"):
        emit_reports(recs, spec)
