import csv
import io
import json

import pytest

from anneal_lab.config import DEFAULT_TRIALS, ConfigError, ExperimentConfig, parse_config, validate
from anneal_lab.tables import SCHEMAS, read_csv_table, render_table, write_table


def test_empty_csv_is_header_only():
    text = render_table([], "trials", "csv", config_digest="abc", seed=3)
    lines = text.split("\r\n")
    assert lines[0] == "# schema=trials schema_version=1 config_digest=abc seed=3"
    assert lines[1] == "trial,steps,absorbed"
    assert lines[2:] == [""]


def test_schema_columns():
    assert SCHEMAS["ratio-sweep"] == ("ratio", "t_discrete", "t_continuous", "rel_error", "k_opt",
                                      "trials", "timeouts", "stderr")
    assert SCHEMAS["switch-sweep"] == ("config_id", "t_hat", "c", "tau", "mean_T0", "stderr",
                                       "baseline", "is_opt")


def test_csv_float_precision_and_quoting():
    text = render_table([{"config_id": 'x,"y"', "t_hat": 0.1, "tau_opt": 3}], "switch-fit", "csv")
    rows = list(csv.reader(io.StringIO(text.split("\r\n", 1)[1])))
    assert rows[1] == ['x,"y"', "0.10000000000000001", "3"]
    assert float(rows[1][1]) == 0.1


def test_json_layout(tmp_path):
    path = write_table([(0, 1.5, "exact-solve")], "hitting-times", "json", tmp_path / "t.json",
                       config_digest="d", seed=1)
    doc = json.loads(path.read_text())
    assert doc["schema"] == {"name": "hitting-times", "version": 1,
                             "columns": ["state", "expected_steps", "method"]}
    assert doc["config_digest"] == "d"
    assert doc["rows"] == [{"state": 0, "expected_steps": 1.5, "method": "exact-solve"}]


def test_nonfinite_json_is_null():
    text = render_table([(1.0, 2.0, float("nan"))], "temperature-sweep", "json")
    assert json.loads(text)["rows"][0]["t0"] is None


def test_row_mismatch_rejected():
    with pytest.raises(ValueError):
        render_table([(1, 2)], "trials", "csv")
    with pytest.raises(ValueError):
        render_table([{"trial": 1}], "trials", "csv")


def test_csv_roundtrip(tmp_path):
    p = write_table([(0, 12, True), (1, 7, False)], "trials", "csv", tmp_path / "x.csv",
                    config_digest="ff", seed=9)
    meta, rows = read_csv_table(p)
    assert meta["config_digest"] == "ff" and meta["seed"] == "9"
    assert rows[1] == {"trial": "1", "steps": "7", "absorbed": "false"}


def test_missing_temperature_named():
    with pytest.raises(ConfigError, match="temperature"):
        validate({"experiment": "sim-continuous", "geometry": {"width": 20, "depth": 1}})


def test_trials_default():
    cfg = validate({"experiment": "sim-continuous",
                    "geometry": {"width": 20, "depth": 1, "temperature": 3}})
    assert cfg.trials == DEFAULT_TRIALS == 2000


def test_unknown_kind_lists_valid_kinds():
    with pytest.raises(ConfigError, match="predict-single.*switch-fit"):
        validate({"experiment": "anneal"})


@pytest.mark.parametrize("raw, key", [
    ({"experiment": "predict-single", "chain": {"N": 2, "p": 0.7}}, "chain.p"),
    ({"experiment": "predict-two", "chain": {"M": 2, "N": 2, "p": 0.2, "q": 0.1}}, "chain.N"),
    ({"experiment": "predict-single", "chain": {"N": 2, "p": 0.2}, "bogus": 1}, "bogus"),
    ({"experiment": "sweep-ratio", "geometry": {"width": 20, "depth": 1, "temperature": 3}}, "depths"),
    ({"experiment": "sim-continuous", "geometry": {"width": 20, "depth": 1, "temperature": 3},
      "trials": 0}, "trials"),
    ({"experiment": "switch-sweep", "configurations": [{"w1": 10, "d1": 1, "w2": 10}]}, "d2"),
])
def test_errors_name_the_key(raw, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        validate(raw)


def test_chain_R_is_normalised_to_N():
    cfg = validate({"experiment": "predict-two", "chain": {"M": 2, "R": 3, "p": 0.2, "q": 0.1}})
    assert cfg.params["chain"]["N"] == 5 and "R" not in cfg.params["chain"]


@pytest.mark.parametrize("raw", [
    {"experiment": "predict-single", "chain": {"N": 2, "p": 0.25}, "printed_form_check": True},
    {"experiment": "sweep-ratio", "geometry": {"w1": 20, "d1": 2, "w2": 50, "d2": 10,
                                               "temperature": 10}, "depths": [1, 2], "seed": 4},
    {"experiment": "switch-fit", "points": [[1, 2], [2, 3], [3, 5]]},
    {"experiment": "sim-continuous", "geometry": {"width": 20, "depth": 1, "temperature": 3},
     "schedule": [[10, 5], [None, 2]], "format": "json"},
])
def test_canonical_roundtrip(raw, tmp_path):
    cfg = validate(raw)
    path = tmp_path / "c.json"
    path.write_text(cfg.canonical_json())
    again = parse_config(path)
    assert again == cfg
    assert again.digest == cfg.digest


def test_digest_ignores_output_only():
    cfg = validate({"experiment": "predict-single", "chain": {"N": 2, "p": 0.25}})
    assert cfg.with_overrides(output="elsewhere.csv").digest == cfg.digest
    assert cfg.with_overrides(seed=1).digest != cfg.digest


def test_parse_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="JSON"):
        parse_config(bad)
    with pytest.raises(ConfigError, match="requested"):
        parse_config(None, "solve-exact", experiment="predict-single")


def test_config_is_hashable_free_dataclass():
    assert isinstance(validate({"experiment": "sweep-temperature", "w1": 20, "wd_ratios": [4],
                                "temperatures": [1, 2]}), ExperimentConfig)
