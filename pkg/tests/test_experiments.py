import json
import math
import warnings

import numpy as np
import pytest

from swarmlab import experiments as ex
from swarmlab.measures import read_measure_csv

FAST = dict(cells=150, nus=(1e-2, 1e-3, 1e-4), output_times=(0.05, 0.1), figures=False)


def test_defaults_follow_experiment_and_potential():
    cfg = ex.ExperimentConfig(experiment="early", potential="c0")
    assert cfg.nus == ex.DEFAULT_NUS["early"]
    assert cfg.output_times == ex.TABLE_TIMES["c0"]
    assert ex.ExperimentConfig(experiment="minimizers").nus[-1] == 1e-6


@pytest.mark.parametrize("bad", [
    dict(experiment="nope"),
    dict(potential="c7"),
    dict(nus=(1e-3, 1e-2)),
    dict(nus=(1e-3, 1e-3)),
    dict(nus=(1e-3, -1e-4)),
    dict(output_times=(1.0, 0.5)),
    dict(cells=1),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ex.ExperimentConfig(**bad)


def test_json_round_trip_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": "rate", "potential": "c0", "cells": 300}))
    cfg = ex.ExperimentConfig.from_json(path, cells=None, nus=(1e-2, 1e-3, 1e-4))
    assert (cfg.experiment, cfg.potential, cfg.cells) == ("rate", "c0", 300)
    assert cfg.nus == (1e-2, 1e-3, 1e-4)
    back = json.loads(cfg.to_json())
    assert ex.ExperimentConfig(**back) == cfg
    path.write_text(json.dumps({"cels": 3}))
    with pytest.raises(ValueError, match="unknown config keys"):
        ex.ExperimentConfig.from_json(path)


@pytest.mark.parametrize("alpha, m, beta", [
    (1.0, 2.0, 1 / 3),
    (1.0, 1.5, 1 / 3),
    (1.0, 2.5, 1 / 6),
    (0.5, 2.0, -1 / 6),
])
def test_theoretical_beta(alpha, m, beta):
    assert ex.theoretical_beta(alpha, m) == pytest.approx(beta)


def _rows(nus, w, t=0.5):
    return [(nu, t, v) for nu, v in zip(nus, w)]


def test_estimate_rate_recovers_power_law():
    nus = [1e-3, 1e-4, 1e-5, 1e-6]
    est = ex.estimate_rate(_rows(nus, [2.0 * v**0.25 for v in nus]), 0.5)
    assert est.slope == pytest.approx(0.25, abs=1e-12)
    assert est.intercept == pytest.approx(math.log(2.0), abs=1e-10)
    assert est.monotone and est.n_points == 4
    assert est.reference == pytest.approx(1 / 6)


def test_estimate_rate_flags_non_monotone_column():
    with pytest.warns(RuntimeWarning, match="not monotone"):
        est = ex.estimate_rate(_rows([1e-3, 1e-4, 1e-5], [1.0, 2.0, 0.5]), 0.5)
    assert not est.monotone and np.isfinite(est.slope)


@pytest.mark.parametrize("rows", [
    _rows([1e-3, 1e-4], [1.0, 0.5]),
    _rows([1e-3, 1e-4, 1e-5], [1.0, 0.0, 0.5]),
    _rows([1e-3, 1e-4, 1e-5], [1.0, 0.5, 0.2], t=0.1),
])
def test_estimate_rate_rejects_degenerate_columns(rows):
    with pytest.raises(ValueError):
        ex.estimate_rate(rows, 0.5)


def test_early_table_is_deterministic(tmp_path):
    a = ex.ExperimentConfig(experiment="early", out_dir=str(tmp_path / "a"), **FAST)
    b = ex.ExperimentConfig(experiment="early", out_dir=str(tmp_path / "b"), **FAST)
    rows, files = ex.run_early(a)
    ex.run_early(b)
    assert len(rows) == 6 and all(w > 0 for _, _, w in rows)
    text = files[0].read_text()
    assert text == (tmp_path / "b" / "early_c2.csv").read_text()
    assert text.splitlines()[0] == "nu,t,w2"
    table = ex.pivot(rows)
    assert set(table) == set(FAST["nus"]) and set(table[1e-2]) == {0.05, 0.1}


def test_early_figure_next_to_csv(tmp_path):
    cfg = ex.ExperimentConfig(experiment="early", out_dir=str(tmp_path),
                              **{**FAST, "figures": True, "nus": (1e-2, 1e-3)})
    _, files = ex.run_early(cfg)
    png = tmp_path / "early_c2.png"
    assert png in files and png.read_bytes()[:4] == b"\x89PNG"


def test_rate_driver(tmp_path):
    cfg = ex.ExperimentConfig(experiment="rate", out_dir=str(tmp_path), rate_time=0.1, **FAST)
    est, files = ex.run_rate(cfg)
    assert est.t == 0.1 and est.n_points == 3
    assert est.beta == pytest.approx(1 / 3)
    assert (tmp_path / "rate_c2.csv").read_text().startswith("t,slope,")
    assert len((tmp_path / "rate_c2_points.csv").read_text().splitlines()) == 4


def test_minimizers_truncate_with_record(tmp_path):
    cfg = ex.ExperimentConfig(experiment="minimizers", out_dir=str(tmp_path),
                              nus=(1e-1, 1e-2, 1e-6), figures=True)
    rows, record, files = ex.run_minimizers(cfg)
    assert [r[0] for r in rows] == [1e-1, 1e-2]
    assert record["error"] == "ConditioningError" and record["nu"] == 1e-6
    assert json.loads((tmp_path / "minimizers_truncated.json").read_text()) == record
    header = (tmp_path / "minimizers.csv").read_text().splitlines()[0]
    assert header == ",".join(ex.MINIMIZER_COLUMNS)
    assert (tmp_path / "minimizers_profiles.png").exists()


def test_longrun_smoke(tmp_path):
    cfg = ex.ExperimentConfig(experiment="longrun", out_dir=str(tmp_path), cells=150,
                              nus=(1e-3, 1e-4), t_end=0.5, particle_t_end=1.0, figures=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = ex.run_longrun(cfg)
    assert not rep.particle_equilibrium
    assert any("not at equilibrium" in str(w.message) for w in caught)
    assert [r.nu for r in rep.runs] == [1e-3, 1e-4]
    for r in rep.runs:
        t = [row[0] for row in r.series]
        assert t[0] == 0.0 and t[-1] == pytest.approx(0.5) and len(t) == 6
        assert r.min_w2_to_mubar == min(row[2] for row in r.series)
    mubar = read_measure_csv(tmp_path / "longrun_c2_mubar.csv")
    assert mubar.n_atoms > 0 and mubar.atom_masses.sum() == pytest.approx(1.0)
    events = (tmp_path / "longrun_c2_events.csv").read_text().splitlines()
    assert events[0] == "nu,first_transfer,argmin_t,min_w2_to_mubar,particle_equilibrium"
    assert len(events) == 3
    assert (tmp_path / "longrun_c2_w2_mubar.png").exists()


def test_solver_failure_record():
    try:
        try:
            raise FloatingPointError("boom")
        except FloatingPointError as exc:
            raise ex.SolverFailure("run failed", nu=1e-3) from exc
    except ex.SolverFailure as failure:
        rec = failure.record()
    assert rec == {"error": "FloatingPointError", "message": "run failed", "nu": 1e-3}
