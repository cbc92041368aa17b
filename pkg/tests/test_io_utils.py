import json

import pandas as pd
import pytest

from sav_bottleneck.core.errors import ConfigError
from sav_bottleneck.io_utils import load_scenario, read_params_header, read_table, write_csv, write_summary


def test_write_csv_round_trips_parameters(tmp_path, base):
    frame = pd.DataFrame({"x": [1.0, 2.5], "y": [0.1, 1e-9]})
    path = write_csv(frame, tmp_path / "nested" / "table.csv", base, {"command": "test"})
    assert path.exists()
    assert read_params_header(path) == base
    back = read_table(path)
    assert list(back.columns) == ["x", "y"]
    assert back["y"].iloc[1] == pytest.approx(1e-9)


def test_header_without_parameters_is_rejected(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("x\n1\n")
    with pytest.raises(ConfigError):
        read_params_header(path)


def test_load_scenario_collects_derived_choices(tmp_path):
    path = tmp_path / "demo.json"
    path.write_text(
        json.dumps(
            {
                "n_total": 1000.0,
                "mu": 0.025,
                "kappa": 0.01,
                "theta": 0.7,
                "beta": 0.4,
                "gamma": 0.4,
                "derived_choice_f_a": "left at zero",
                "protocol": "BNN",
            }
        )
    )
    scenario = load_scenario(path)
    assert scenario.name == "demo"
    assert scenario.protocol == "BNN"
    assert scenario.params.f_a == 0.0
    assert scenario.derived_choices == {"f_a": "left at zero"}


@pytest.mark.parametrize("content", ["not json", "[1, 2]", '{"n_total": 10.0}', '{"sweep_axis": "speed"}'])
def test_load_scenario_rejects_bad_files(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        load_scenario(path)


def test_write_summary_encodes_infinities(tmp_path):
    path = write_summary({"fare": float("inf"), "n": 3}, tmp_path / "summary.json")
    data = json.loads(path.read_text())
    assert data == {"fare": "inf", "n": 3}
