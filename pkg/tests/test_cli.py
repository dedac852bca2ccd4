# tests/test_cli.py

import json
import os

import pandas as pd
import pytest

import main
from core.config import CONFIG_ENV_VAR

SMOKE_CONFIG = """
MC_STUDENTS=30
MC_SAMPLES=1
MC_CUTOFF_SAMPLES=1
MC_CUTOFF_DRAWS=20
N_DRAWS=20
MC_BEHAVIOR_CHECK_DRAWS=5
GIBBS_N_ITER=60
GIBBS_BURN_IN=30
GIBBS_CHAINS=2
DGP=TT,MIS_IRR
"""
MC_TABLES = ("table_behavior.csv", "table_estimates.csv", "table_selection.csv")


@pytest.fixture(autouse=True)
def no_config_from_environment(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_infer_single_tau_from_partitions_file(tmp_path, fixtures_dir):
    out = tmp_path / "out"
    partitions = os.path.join(fixtures_dir, "four_classes", "partitions.json")
    code = main.main(["--output-dir", str(out), "--seed", "3", "infer", "--partitions", partitions, "--tau", "95"])
    assert code == 0
    relations = _read_json(out / "relations.json")
    assert relations["methods"] == {"TEPS^95": [[[1, 0], [2, 0], [2, 1], [4, 3]]]}
    assert relations["seed"] == 3
    manifest = _read_json(out / "manifest.json")
    assert manifest["command"] == "infer"
    assert manifest["options"]["tau"] == 95
    assert sorted(manifest["files"]) == ["relations.csv", "relations.json", "relations_summary.csv"]
    assert manifest["config_hash"] == relations["config_hash"]
    table = pd.read_csv(out / "relations.csv", comment="#")
    assert table.values.tolist() == [["TEPS^95", 0, 1, 0], ["TEPS^95", 0, 2, 0], ["TEPS^95", 0, 2, 1],
                                     ["TEPS^95", 0, 4, 3]]


def test_missing_upstream_artifact_exits_with_dependency_code(tmp_path, capsys):
    assert main.main(["--output-dir", str(tmp_path), "select"]) == 4
    assert "[ERROR]" in capsys.readouterr().err


def test_invalid_configuration_exits_with_validation_code(tmp_path, fixtures_dir):
    config = tmp_path / "bad.env"
    config.write_text("BOGUS_KEY=1\n", encoding="utf-8")
    assert main.main(["--config", str(config), "--output-dir", str(tmp_path / "out"), "report"]) == 2
    partitions = os.path.join(fixtures_dir, "four_classes", "partitions.json")
    assert main.main(["--output-dir", str(tmp_path / "out"), "infer", "--tau", "150",
                      "--partitions", partitions]) == 2


def test_stage_without_data_dir_fails(tmp_path):
    assert main.main(["--output-dir", str(tmp_path), "simulate-cutoffs"]) == 4


def test_pipeline_on_minimal_market(tmp_path, fixtures_dir, capsys):
    base = ["--data-dir", os.path.join(fixtures_dir, "minimal"), "--output-dir", str(tmp_path), "--seed", "1"]
    for command in ("simulate-cutoffs", "partition", "infer", "report"):
        assert main.main(base + [command]) == 0, command
    for name in ("cutoffs.csv", "partitions.json", "assignment_probabilities.csv", "feasibility_status.csv",
                 "relations.json", "relations.csv", "relations_summary.csv", "report.txt", "manifest_partition.json",
                 "manifest_infer.json"):
        assert (tmp_path / name).is_file(), name
    partitions = _read_json(tmp_path / "partitions.json")
    assert partitions["students"][0]["classes"] == [{"bitmask": 1, "assigned": 0, "prob": 1.0, "count": 1000}]
    relations = _read_json(tmp_path / "relations.json")
    assert set(relations["methods"]) >= {"WTT", "TEPS^top", "TEPS^all"}
    assert "report: report.txt" in capsys.readouterr().out
    assert _read_json(tmp_path / "manifest.json")["command"] == "report"


def test_montecarlo_smoke_and_replay(tmp_path):
    config = tmp_path / "smoke.env"
    config.write_text(SMOKE_CONFIG, encoding="utf-8")
    first, second = tmp_path / "first", tmp_path / "second"
    assert main.main(["--config", str(config), "--output-dir", str(first), "montecarlo"]) == 0
    manifest = _read_json(first / "manifest.json")
    assert sorted(manifest["files"]) == sorted(MC_TABLES)
    assert manifest["config"]["dgp"] == ["TT", "MIS_IRR"]

    assert main.main(["--replay", str(first / "manifest.json"), "--output-dir", str(second), "montecarlo"]) == 0
    for name in MC_TABLES:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_estimation_pipeline_on_exported_synthetic_market(tmp_path):
    from experiments.synthetic_economy import McConfig, generate_economy
    from services.dataset_store import DatasetStore

    synthetic = generate_economy(McConfig.for_students(60, seed=2), 0)
    data_dir = tmp_path / "datos"
    DatasetStore(str(data_dir)).export(synthetic.economy, synthetic.true_rols)
    config = tmp_path / "run.env"
    config.write_text("\n".join([
        f"DATA_DIR={data_dir}", "N_DRAWS=30", "TAU_GRID=50,100", "GIBBS_N_ITER=40", "GIBBS_BURN_IN=20",
        "GIBBS_CHAINS=2", "CF_PREF_DRAWS=2", "CF_LOTTERY_DRAWS=2",
    ]), encoding="utf-8")
    out = tmp_path / "out"
    base = ["--config", str(config), "--output-dir", str(out)]
    for command in ("partition", "infer", "estimate", "select", "counterfactual", "report"):
        assert main.main(base + [command]) == 0, command

    estimates = _read_json(out / "estimates.json")
    assert set(estimates["estimates"]) == {"WTT", "TEPS^top", "TEPS^50", "TEPS^all"}
    assert estimates["terms"] == ["quality", "D*A", "distance", "small"]
    assert (out / "posterior_teps_top.csv").is_file()
    table = pd.read_csv(out / "estimates.csv", comment="#")
    assert {"mcse", "ess", "psrf"} <= set(table.columns)
    selection = _read_json(out / "selection.json")
    assert selection["chosen"] in estimates["estimates"]
    assert (out / "counterfactual.csv").is_file() and (out / "segregation.csv").is_file()


def test_replay_restores_stage_options(tmp_path):
    from experiments.synthetic_economy import McConfig, generate_economy
    from services.dataset_store import DatasetStore

    synthetic = generate_economy(McConfig.for_students(40, seed=5), 0)
    data_dir = tmp_path / "datos"
    DatasetStore(str(data_dir)).export(synthetic.economy, synthetic.true_rols)
    first, second, plain = tmp_path / "first", tmp_path / "second", tmp_path / "plain"
    base = ["--data-dir", str(data_dir), "--seed", "8"]
    assert main.main(base + ["--output-dir", str(first), "simulate-cutoffs", "--tiebreak", "MTB"]) == 0
    assert main.main(base + ["--output-dir", str(first), "partition"]) == 0
    assert main.main(base + ["--output-dir", str(plain), "simulate-cutoffs"]) == 0

    assert main.main(["--replay", str(first / "manifest_simulate_cutoffs.json"), "--output-dir", str(second)]) == 0
    assert (first / "cutoffs.csv").read_bytes() == (second / "cutoffs.csv").read_bytes()
    assert (first / "cutoffs.csv").read_bytes() != (plain / "cutoffs.csv").read_bytes()
    replayed = _read_json(second / "manifest.json")
    assert replayed["command"] == "simulate-cutoffs"
    assert replayed["options"]["tiebreak"] == "MTB"
    assert _read_json(first / "manifest.json")["command"] == "partition"


def test_priority_logit_supplies_screened_scores(tmp_path, fixtures_dir, capsys):
    base = ["--data-dir", os.path.join(fixtures_dir, "screened"), "--output-dir", str(tmp_path), "--seed", "4"]
    assert main.main(base + ["simulate-cutoffs"]) == 2
    assert main.main(base + ["priority-logit"]) == 3
    assert "ridge" in capsys.readouterr().err

    assert main.main(base + ["priority-logit", "--ridge", "1.0"]) == 0
    fit = _read_json(tmp_path / "priority_logit.json")
    assert fit["covariates"] == ["A"] and fit["ridge"] == 1.0
    assert fit["programs"]["0"]["beta"][0] > 0 and fit["programs"]["0"]["n_pairs"] == 6
    scores = pd.read_csv(tmp_path / "priority_scores.csv", comment="#")
    assert scores["program_id"].tolist() == [0] * 4
    assert sorted(scores["known_score"]) == [0.25, 0.5, 0.75, 1.0]
    assert _read_json(tmp_path / "manifest_priority_logit.json")["options"]["ridge"] == 1.0

    assert main.main(base + ["simulate-cutoffs"]) == 0
