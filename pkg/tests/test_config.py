import json
from fractions import Fraction
from pathlib import Path

import pytest

from kstrunc.config import (
    ExperimentConfig,
    ScenarioConfig,
    SweepAxes,
    load_config,
    parse_rational,
)
from kstrunc.core.errors import ConfigError
from kstrunc.core.typings import Regime

SCENARIO = {
    "id": "bounded",
    "dim": 3,
    "cells": 8,
    "theta": 0.5,
    "t_final": 0.01,
    "dt": 0.002,
    "source": {"kind": "constant", "value": 1.0},
    "A": {"family": "checkerboard", "values": [1.0, 100.0]},
    "sweep": {"n_values": [64, 128], "grid_sizes": [4, 6, 8]},
}


def scenario(**overrides: object) -> dict:
    document = dict(SCENARIO)
    document.update(overrides)
    return document


def test_parse_scenario() -> None:
    config = ScenarioConfig.from_document(scenario())
    assert config.id == "bounded"
    assert config.problem.grid.cells_per_axis == 8
    assert config.problem.A.beta == 100.0
    assert config.sweep.n_values == (64.0, 128.0)
    assert config.regime.regime is Regime.BOUNDED


def test_theta_out_of_range() -> None:
    with pytest.raises(ConfigError, match="theta must lie in"):
        ScenarioConfig.from_document(scenario(theta=0.9))


def test_summability_below_one() -> None:
    source = {"kind": "spatial-singularity", "m": "1/2"}
    with pytest.raises(ConfigError, match="m >= 1"):
        ScenarioConfig.from_document(scenario(source=source))


def test_center_on_lattice() -> None:
    source = {"kind": "spatial-singularity", "m": "2", "center": [0.5, 0.5, 0.5]}
    with pytest.raises(ConfigError, match="lattice node"):
        ScenarioConfig.from_document(scenario(source=source))


def test_duplicate_scenario_ids() -> None:
    with pytest.raises(ConfigError, match="Duplicate scenario id 'bounded'"):
        ExperimentConfig.from_document({"scenarios": [scenario(), scenario()]})


def test_missing_key() -> None:
    document = scenario()
    del document["t_final"]
    with pytest.raises(ConfigError, match="missing required key 't_final'"):
        ScenarioConfig.from_document(document)


def test_missing_id() -> None:
    with pytest.raises(ConfigError, match="nonempty string id"):
        ScenarioConfig.from_document(scenario(id=""))


def test_bad_sweep_axes() -> None:
    with pytest.raises(ConfigError, match="at least 3 grid sizes"):
        SweepAxes(grid_sizes=(4, 8))
    with pytest.raises(ConfigError, match="at least two levels"):
        SweepAxes(n_values=(8.0,))
    with pytest.raises(ConfigError, match="Malformed sweep axes"):
        SweepAxes.from_document({"n_values": ["many", "more"]})


def test_unknown_compressor() -> None:
    with pytest.raises(ConfigError, match="Unknown compressor"):
        ExperimentConfig.from_document({"scenarios": [], "compressor": "rar"})


def test_distinct_messages() -> None:
    documents = [
        scenario(theta=0.9),
        scenario(source={"kind": "spatial-singularity", "m": "1/2"}),
        scenario(source={"kind": "spatial-singularity", "m": 2, "center": [0.5] * 3}),
    ]
    messages = set()
    for document in documents:
        with pytest.raises(ConfigError) as info:
            ScenarioConfig.from_document(document)
        messages.add(str(info.value))
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_document({"scenarios": [scenario(), scenario()]})
    messages.add(str(info.value))
    assert len(messages) == 4


def test_scenario_document_round_trip() -> None:
    config = ScenarioConfig.from_document(scenario())
    again = ScenarioConfig.from_document(config.to_document())
    assert again.problem.A == config.problem.A
    assert again.problem.source == config.problem.source
    assert again.problem.dt == config.problem.dt


def test_on_grid() -> None:
    config = ScenarioConfig.from_document(scenario())
    moved = config.on_grid(4, 1.0)
    assert moved.problem.grid.cells_per_axis == 4
    assert moved.problem.dt == config.problem.t_final
    assert moved.id == config.id


def test_load_config(tmp_path: Path) -> None:
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"scenarios": [scenario()], "output_dir": "out"}))
    config = load_config(path)
    assert config.output_dir == tmp_path / "out"
    assert [s.id for s in config.scenarios] == ["bounded"]


def test_load_config_errors(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="Cannot read configuration"):
        load_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{scenarios: ")
    with pytest.raises(ConfigError, match="Invalid JSON"):
        load_config(broken)


def test_parse_rational() -> None:
    assert parse_rational("6/5") == Fraction(6, 5)
    assert parse_rational("1.25") == Fraction(5, 4)
    with pytest.raises(ConfigError, match="Not a rational number"):
        parse_rational("six fifths")
