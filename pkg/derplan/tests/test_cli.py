import json

import numpy as np
import pandas as pd
import pytest

from derplan import artifacts
from derplan.main import cli
from derplan.models import EvaluationReport, RunResult, SplitReport


@pytest.fixture(scope="module")
def ohio_run(tmp_path_factory, runner, ohio_config_path):
    """One full Ohio run shared by the acceptance tests."""
    out = tmp_path_factory.mktemp("ohio")
    result = runner.invoke(cli, ["run", "--config", str(ohio_config_path), "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_full_run_writes_artifacts(ohio_run):
    """
    Test that a full run writes every artifact.
    """
    for name in (
        artifacts.RESULT_FILE,
        artifacts.EVALUATION_FILE,
        artifacts.ITERATIONS_FILE,
        artifacts.BASELINES_FILE,
        artifacts.MODELS_FILE,
        artifacts.REPORT_FILE,
        "split_summer_weekday.csv",
    ):
        assert (ohio_run / name).is_file(), name
    assert artifacts.read_iterations(ohio_run / artifacts.ITERATIONS_FILE)


def test_ohio_mandates_hold(ohio_run):
    """
    Test that the accepted Ohio plan meets every mandate and the NG threshold.
    """
    report = artifacts.read_json(ohio_run / artifacts.EVALUATION_FILE, EvaluationReport)
    for name in ("co2_reduction", "efficiency_increase", "renewable_share", "pv_share", "ng_threshold"):
        assert report.checks[name], name
    assert report.doe_pass and report.mandate_pass


def test_ohio_chp_capacity(ohio_run):
    """
    Test that the Ohio CHP capacity lies between a third of peak and peak, with reserve.
    """
    result = artifacts.read_json(ohio_run / artifacts.RESULT_FILE, RunResult)
    assert result.status == "ok"
    chp = result.co_optimization.final.chp_capacity_mw
    assert 1.485 <= chp <= 4.95
    assert result.renewables.capacities == pytest.approx([1.0, 2.0, 0.5, 1.0], abs=1e-9)


def test_ohio_cost_ordering(ohio_run):
    """
    Test the economic comparison against the gas-only and storage baselines.

    The storage baseline installs the cheapest mandate-satisfying mix and
    splits at its own cost-optimal cut-off, so on these cost rates it
    undercuts the fuel-savings plan on capital and total.
    """
    report = artifacts.read_json(ohio_run / artifacts.EVALUATION_FILE, EvaluationReport)
    baseline_one, baseline_two = report.baselines
    assert baseline_one.cost.capital_usd < report.cost.capital_usd
    assert baseline_one.cost.fuel_usd > report.cost.fuel_usd
    assert baseline_two.cutoff_hz is not None
    assert baseline_two.cost.capital_usd < report.cost.capital_usd
    assert baseline_two.cost.total_usd <= report.cost.total_usd
    frame = pd.read_csv(ohio_run / artifacts.BASELINES_FILE)
    assert list(frame["component"]) == ["baseline_1", "baseline_2", "co_optimized"]


def test_same_seed_same_result(runner, ohio_config_path, tmp_path):
    """
    Test that two runs with one seed write byte-identical results.
    """
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        result = runner.invoke(
            cli, ["run", "--config", str(ohio_config_path), "--seed", "7", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        outputs.append((out / artifacts.RESULT_FILE).read_bytes())
    assert outputs[0] == outputs[1]


def test_step_one_only(runner, ohio_config_path, tmp_path):
    """
    Test that a step1-only run reports capacities and nothing else.
    """
    result = runner.invoke(
        cli, ["run", "--config", str(ohio_config_path), "--mode", "step1-only", "--out", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    record = json.loads((tmp_path / artifacts.RESULT_FILE).read_text())
    assert record["renewables"]["wind_mw"] == pytest.approx(2.0)
    assert record["co_optimization"] is None
    assert record["candidate"] is None
    assert not (tmp_path / artifacts.EVALUATION_FILE).exists()


def test_cost_only(runner, ohio_config_path, tmp_path):
    """
    Test that a cost-only run skips renewables and reports against the configured mandates.
    """
    result = runner.invoke(
        cli, ["run", "--config", str(ohio_config_path), "--mode", "cost-only", "--out", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    record = artifacts.read_json(tmp_path / artifacts.RESULT_FILE, RunResult)
    assert record.mode == "cost-only"
    assert record.renewables.capacities == [0.0, 0.0, 0.5, 0.0]
    assert record.co_optimization.final.capacities["pv"] == 0.0
    assert record.co_optimization.final.capacities["wind"] == 0.0

    report = artifacts.read_json(tmp_path / artifacts.EVALUATION_FILE, EvaluationReport)
    assert report.checks["ng_threshold"]
    assert not report.checks["pv_share"]
    assert not report.mandate_pass
    for name in (artifacts.ITERATIONS_FILE, artifacts.BASELINES_FILE, artifacts.REPORT_FILE):
        assert (tmp_path / name).is_file(), name


def test_split_only(runner, ohio_config_path, tmp_path):
    """
    Test a fixed cut-off run without the search.
    """
    result = runner.invoke(
        cli,
        [
            "run", "--config", str(ohio_config_path), "--mode", "split-only",
            "--cutoff-hz", "0.0001", "--out", str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    record = artifacts.read_json(tmp_path / artifacts.RESULT_FILE, RunResult)
    assert record.candidate.bin_index == 8
    assert len(list(tmp_path.glob("split_*.csv"))) == 8


def test_infeasible_mandates_exit_one(runner, ohio_config_path, tmp_path):
    """
    Test that unreachable mandates exit with status 1 and an infeasible record.
    """
    result = runner.invoke(
        cli,
        ["run", "--config", str(ohio_config_path), "--out", str(tmp_path)],
        env={
            "DERPLAN__REGULATORY_PARAMS__RENEWABLE_SHARE_FLOOR": "1.0",
            "DERPLAN__REGULATORY_PARAMS__CO2_REDUCTION_FLOOR": "1.0",
        },
    )
    assert result.exit_code == 1
    record = json.loads((tmp_path / artifacts.RESULT_FILE).read_text())
    assert record["status"] == "infeasible"
    assert record["reason"] == "lp_infeasible"


def test_config_error_exit_two(runner, ohio_config_path, tmp_path):
    """
    Test that an invalid scenario exits with status 2.
    """
    result = runner.invoke(
        cli,
        ["run", "--config", str(ohio_config_path), "--out", str(tmp_path)],
        env={"DERPLAN__SIZING_PARAMS__SOC_MIN": "0.9", "DERPLAN__SIZING_PARAMS__SOC_MAX": "0.9"},
    )
    assert result.exit_code == 2
    assert "sizing_params" in result.output


def test_validate(runner, ohio_config_path):
    """
    Test validate on a good scenario and on a broken one.
    """
    result = runner.invoke(cli, ["validate", "--config", str(ohio_config_path)])
    assert result.exit_code == 0
    assert result.output.strip() == "ok"

    result = runner.invoke(
        cli,
        ["validate", "--config", str(ohio_config_path)],
        env={"DERPLAN__SIZING_PARAMS__SOC_MIN": "0.9", "DERPLAN__SIZING_PARAMS__SOC_MAX": "0.9"},
    )
    assert result.exit_code == 2
    assert result.output.startswith("sizing_params:")


def test_validate_catches_undefined_mandates(runner, ohio_config_path, tmp_path):
    """
    Test that validate rejects a scenario whose run would stop on a zero emissions base.
    """
    env = {"DERPLAN__DEMAND_CONTEXT__BASE_EMISSIONS_TONS_PER_MW": "0"}
    result = runner.invoke(cli, ["validate", "--config", str(ohio_config_path)], env=env)
    assert result.exit_code == 2
    assert "demand_context:" in result.output

    result = runner.invoke(
        cli, ["run", "--config", str(ohio_config_path), "--out", str(tmp_path)], env=env
    )
    assert result.exit_code == 2


def test_fit(runner, ohio_config_path, tmp_path):
    """
    Test that fit writes models for all eight keys.
    """
    result = runner.invoke(cli, ["fit", "--config", str(ohio_config_path), "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    models = json.loads((tmp_path / artifacts.MODELS_FILE).read_text())
    assert len(models["models"]) == 8


def test_split_command(runner, tmp_path):
    """
    Test splitting a two-day net-load CSV at one cut-off.
    """
    stamps = pd.date_range("2023-07-03", periods=192, freq="15min")
    values = 2.0 + np.cos(2 * np.pi * np.arange(192) / 96)
    net_csv = tmp_path / "net.csv"
    pd.DataFrame({"timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S"), "value": values}).to_csv(
        net_csv, index=False
    )
    out = tmp_path / "out"
    result = runner.invoke(
        cli, ["split", "--net-load", str(net_csv), "--cutoff-hz", "0", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = artifacts.read_json(out / artifacts.SPLIT_FILE, SplitReport)
    assert report.labels == ["2023-07-03", "2023-07-04"]
    assert report.splits[0].chp_capacity_mw == pytest.approx(2.2)
    assert (out / "split_2023-07-03.csv").is_file()


def test_split_command_bad_cutoff(runner, tmp_path):
    """
    Test that a cut-off above Nyquist exits with status 2.
    """
    stamps = pd.date_range("2023-07-03", periods=96, freq="15min")
    net_csv = tmp_path / "net.csv"
    pd.DataFrame({"timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S"), "value": 1.0}).to_csv(
        net_csv, index=False
    )
    result = runner.invoke(
        cli, ["split", "--net-load", str(net_csv), "--cutoff-hz", "1", "--out", str(tmp_path / "out")]
    )
    assert result.exit_code == 2
