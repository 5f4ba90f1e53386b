"""Simulation-harness tests: config parsing, metrics, reproducibility."""

import math

import numpy as np
import pytest

from rpcusum.detector import RepetitionSummary
from rpcusum.harness import (
    RESULT_COLUMNS,
    ExperimentSpec,
    RepetitionRecord,
    _quantile,
    mc_stderr,
    repetition_csv,
    run_experiment,
    run_repetition_study,
    run_rmse,
    run_size_adjusted_power,
    run_size_power,
)


def _small_spec(**overrides):
    base = dict(
        settings=("S1",),
        m_grid=(5,),
        snr_grid=(0.0, 1.5),
        k_grid=(10,),
        methods=("bonf", "bh"),
        replications=40,
        seed=3,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def test_from_dict_defaults():
    spec = ExperimentSpec.from_dict({})
    assert spec.settings == ("S1",)
    assert spec.variant == "standard"
    assert spec.trim.rule == "none"
    assert spec.alpha == 0.05
    assert spec.replications == 1000
    assert spec.methods == ("bonf", "bh", "hmp", "cct")


def test_from_dict_full_mapping():
    raw = {
        "experiment": {
            "replications": 20,
            "seed": 9,
            "metrics": ["size", "rmse"],
            "repetition_datasets": 2,
            "repetition_r": 50,
        },
        "generator": {
            "n": 80,
            "grid_p": 51,
            "n_basis": 11,
            "theta": 0.5,
            "settings": ["S2", "S3"],
            "m": [3, 7],
            "snr": [0.0, 1.0],
        },
        "detector": {
            "k": [10, 20],
            "variant": "weighted",
            "variance": "hac",
            "trim": "sqrtn",
            "methods": ["cct"],
            "alpha": 0.1,
        },
    }
    spec = ExperimentSpec.from_dict(raw)
    assert spec.replications == 20
    assert spec.seed == 9
    assert spec.metrics == ("size", "rmse")
    assert spec.repetition_datasets == 2
    assert spec.repetition_r == 50
    assert (spec.n, spec.grid_p, spec.n_basis, spec.theta) == (80, 51, 11, 0.5)
    assert spec.settings == ("S2", "S3")
    assert spec.m_grid == (3, 7)
    assert spec.snr_grid == (0.0, 1.0)
    assert spec.k_grid == (10, 20)
    assert spec.variant == "weighted"
    assert spec.variance_kind == "hac"
    assert spec.trim.rule == "sqrt_n"
    assert spec.methods == ("cct",)
    assert spec.alpha == 0.1


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="top level"):
        ExperimentSpec.from_dict({"experiments": {}})
    with pytest.raises(ValueError, match="experiment section: reps"):
        ExperimentSpec.from_dict({"experiment": {"reps": 3}})
    with pytest.raises(ValueError, match="generator section"):
        ExperimentSpec.from_dict({"generator": {"p": 100}})
    with pytest.raises(ValueError, match="detector section"):
        ExperimentSpec.from_dict({"detector": {"kmax": 10}})


def test_from_dict_variant_and_trim_validation():
    with pytest.raises(ValueError, match="variant"):
        ExperimentSpec.from_dict({"detector": {"variant": "standard"}})
    with pytest.raises(ValueError, match="trim token"):
        ExperimentSpec.from_dict({"detector": {"trim": "0.1"}})
    spec = ExperimentSpec.from_dict({"detector": {"variant": "cusum", "trim": "logn"}})
    assert spec.variant == "standard"
    assert spec.trim.rule == "log_n"


def test_from_toml(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(
        "[experiment]\nreplications = 5\nseed = 2\nmetrics = [\"size\"]\n"
        "[generator]\nsettings = [\"S1\"]\nsnr = [0.0]\n"
        "[detector]\nk = [10]\nmethods = [\"bonf\"]\n"
    )
    spec, raw = ExperimentSpec.from_toml(str(path))
    assert spec.replications == 5
    assert spec.k_grid == (10,)
    assert raw["experiment"]["seed"] == 2


def test_spec_validation():
    with pytest.raises(ValueError, match="replications"):
        ExperimentSpec(replications=0)
    with pytest.raises(ValueError, match="snr grid"):
        ExperimentSpec(snr_grid=())
    with pytest.raises(ValueError, match="alpha"):
        ExperimentSpec(alpha=0.0)
    with pytest.raises(ValueError, match="alpha"):
        ExperimentSpec(alpha=1.1)
    ExperimentSpec(alpha=1.0)  # closed upper end is allowed
    with pytest.raises(ValueError, match="unknown metrics"):
        ExperimentSpec(metrics=("size", "fdr"))


def test_mc_stderr():
    assert mc_stderr(0.5, 100) == 0.05
    assert mc_stderr(0.0, 1) == 0.0
    assert mc_stderr(1.0, 7) == 0.0
    assert mc_stderr(0.2, 50) == pytest.approx(math.sqrt(0.16 / 50))


def test_quantile_matches_numpy():
    rng = np.random.default_rng(1)
    for size in (1, 2, 17, 400):
        values = rng.normal(size=size).tolist()
        for q in (0.0, 0.05, 0.5, 0.95, 1.0):
            assert _quantile(values, q) == pytest.approx(
                float(np.quantile(values, q)), abs=1e-12
            )


def test_quantile_threshold_recovers_alpha_on_distinct_values():
    rng = np.random.default_rng(7)
    values = rng.random(1000).tolist()
    threshold = _quantile(values, 0.05)
    assert sum(v < threshold for v in values) / 1000 == pytest.approx(0.05, abs=0.001)


def test_run_size_power_table_shape_and_rates():
    table = run_size_power(_small_spec())
    assert len(table.rows) == 4  # 2 snr x 2 methods
    for row in table.rows:
        rate = row["rejection_rate"]
        assert 0.0 <= rate <= 1.0
        assert row["mc_stderr"] == pytest.approx(
            math.sqrt(rate * (1 - rate) / 40), abs=1e-12
        )
    by_key = {(row["snr"], row["method"]): row["rejection_rate"] for row in table.rows}
    assert by_key[(0.0, "bonf")] <= 0.2
    assert by_key[(1.5, "bonf")] >= 0.9


def test_alpha_one_rejects_everything():
    # p_comb is strictly below 1 for any non-flat input, so alpha = 1 means
    # every replication rejects
    table = run_size_power(
        _small_spec(snr_grid=(0.0,), methods=("cct",), replications=30, alpha=1.0)
    )
    assert table.rows[0]["rejection_rate"] == 1.0


def test_adjusted_power_requires_null_cell():
    with pytest.raises(ValueError, match="snr=0"):
        run_size_adjusted_power(_small_spec(snr_grid=(1.0,)))


def test_adjusted_power_columns():
    table = run_size_adjusted_power(_small_spec(replications=30, methods=("bonf",)))
    null_row = next(r for r in table.rows if r["snr"] == 0.0)
    alt_row = next(r for r in table.rows if r["snr"] == 1.5)
    assert "adj_rejection_rate" not in null_row
    assert 0.0 <= alt_row["adj_rejection_rate"] <= 1.0
    # a strong break should clear the empirical null threshold in most runs
    assert alt_row["adj_rejection_rate"] >= 0.9


def test_rmse_zero_for_noiseless_break():
    spec = _small_spec(snr_grid=(0.0, 1e6), methods=("bonf",), replications=10)
    table = run_rmse(spec)
    alt_row = next(r for r in table.rows if r["snr"] == 1e6)
    assert alt_row["rmse_all"] == 0.0
    assert alt_row["rmse_significant"] == 0.0
    null_row = next(r for r in table.rows if r["snr"] == 0.0)
    assert "rmse_all" not in null_row


def test_rmse_significant_empty_when_nothing_rejects():
    spec = _small_spec(
        snr_grid=(0.0, 0.01), methods=("bonf",), replications=5, alpha=1e-6
    )
    table = run_rmse(spec)
    alt_row = next(r for r in table.rows if r["snr"] == 0.01)
    assert alt_row["rmse_significant"] is None
    csv = table.to_csv()
    line = next(ln for ln in csv.splitlines() if ",0.01," in ln)
    assert line.endswith(",")  # trailing mc_stderr empty too
    assert ",," in line


def test_result_table_csv_and_sidecar_are_reproducible():
    spec = _small_spec(replications=15)
    spec_dict = {"experiment": {"replications": 15, "seed": 3}}
    t1 = run_experiment(spec, spec_dict)
    t2 = run_experiment(spec, spec_dict)
    assert t1.to_csv() == t2.to_csv()
    assert t1.sidecar_json() == t2.sidecar_json()
    lines = t1.to_csv().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 1 + len(t1.rows)
    sidecar = t1.sidecar_json()
    assert '"master_seed": 3' in sidecar
    assert '"replications": 15' in sidecar


def test_run_experiment_skips_repetition_metric():
    spec = _small_spec(
        snr_grid=(0.0,), methods=("bonf",), replications=5,
        metrics=("size", "repetition"),
    )
    table = run_experiment(spec)
    assert len(table.rows) == 1
    assert "rejection_rate" in table.rows[0]


def test_run_repetition_study():
    spec = _small_spec(snr_grid=(1.5,), methods=("bonf",), replications=5)
    records = run_repetition_study(spec, dataset_count=2, repetitions=5)
    assert len(records) == 2
    for rec in records:
        assert rec.setting == "S1"
        assert rec.snr == 1.5
        assert rec.k == 10
        assert rec.dataset in (0, 1)
        assert len(rec.summary.locations) == 5
    # strong signal: both datasets should concentrate on the true location
    assert all(abs(rec.summary.mode - 12) <= 3 for rec in records)

    with pytest.raises(ValueError, match="at least 2 repetitions"):
        run_repetition_study(spec, dataset_count=1, repetitions=1)
    with pytest.raises(ValueError, match="at least one dataset"):
        run_repetition_study(spec, dataset_count=0, repetitions=5)


def test_repetition_study_is_deterministic():
    spec = _small_spec(snr_grid=(1.5,), methods=("bonf",), replications=5)
    r1 = run_repetition_study(spec, dataset_count=1, repetitions=4)
    r2 = run_repetition_study(spec, dataset_count=1, repetitions=4)
    assert r1 == r2


def test_repetition_csv_format():
    summary = RepetitionSummary.from_runs((12, 12, 13), (True, True, False))
    record = RepetitionRecord(
        setting="S1", m=5, theta=0.25, snr=0.5, k=200, method="bonf",
        dataset=0, summary=summary,
    )
    csv = repetition_csv([record])
    lines = csv.splitlines()
    assert lines[0] == (
        "setting,m,theta,snr,k,method,dataset,repetitions,mode,mode_count,"
        "significant_count"
    )
    assert lines[1] == "S1,5,0.25,0.5,200,bonf,0,3,12,2,2"
