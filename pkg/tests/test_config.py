import textwrap

import pytest

from memsfatigue.campaign import Assignment
from memsfatigue.config import (
    ConfigError,
    dump_population,
    load_config,
    load_population,
    resolve_config_path,
)
from memsfatigue.dut import Axis, FailureMode, PopulationSpec
from memsfatigue.plan import validate_condition


def write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def test_bundled_default():
    cfg = load_config("reference")
    assert validate_condition(cfg.condition) == []
    assert cfg.condition.frequency == 80.0
    assert cfg.population == PopulationSpec(10, {Axis.X: 0.0514, Axis.Y: 0.0514, Axis.Z: 0.018}, 0.0, 42)
    assert cfg.nominal.axes[Axis.Z].natural_frequency == 2000.0
    assert cfg.sweep.points == 256
    assert cfg.rig_capacity == 4
    assert cfg.checkpoint_interval is None
    assert cfg.schedule().total_planned_cycles == 3 * 9_216_000
    assert [s.specimen_id for s in cfg.build_specimens()] == [f"S{i:02d}" for i in range(1, 11)]


def test_bundled_name_resolves_to_file():
    assert resolve_config_path("reference").is_file()


def test_empty_file_gives_defaults(tmp_path):
    cfg = load_config(write(tmp_path, ""))
    assert validate_condition(cfg.condition) == []


def test_overrides(tmp_path):
    cfg = load_config(write(tmp_path, """
        condition: {frequency_hz: 40, duration_per_orientation_h: 24, orientations: [z]}
        nominal:
          axes:
            Z: {natural_frequency_hz: 2500}
        population: {count: 3, seed: 1}
        seed: 9
        checkpoints: {interval_cycles: 5e5}
        campaign: {assignment: dedicated}
        damage:
          - {specimen: S02, failure_mode: stuck_output, stuck_voltage_v: 3.3, onset_cycle: 1e6}
    """))
    assert cfg.condition.orientations == (Axis.Z,)
    assert cfg.nominal.axes[Axis.Z].natural_frequency == 2500.0
    assert cfg.nominal.axes[Axis.X].natural_frequency == 2000.0
    assert cfg.population.seed == 9
    assert cfg.checkpoint_interval == 500_000
    assert cfg.assignment is Assignment.DEDICATED
    specimens = cfg.build_specimens()
    d = specimens[1].degradation
    assert (d.failure_mode, d.stuck_voltage, d.onset_cycle) == (FailureMode.STUCK_OUTPUT, 3.3, 1_000_000)
    assert specimens[0].degradation.is_pristine


def test_invalid_condition_is_loaded_for_validation(tmp_path):
    cfg = load_config(write(tmp_path, "condition: {frequency_hz: 100, orientations: [X, W]}"))
    fields = {v.field for v in validate_condition(cfg.condition)}
    assert fields == {"frequency", "orientations"}


@pytest.mark.parametrize(
    "text, match",
    [
        ("condition: {frequncy_hz: 80}", "unknown key"),
        ("bogus: 1", "unknown key"),
        ("condition: [1, 2]", "mapping"),
        ("condition: {frequency_hz: [80}", "YAML"),
        ("damage: [{failure_mode: open_output}]", "specimen"),
        ("damage: [{specimen: S99}]", "unknown specimen"),
        ("campaign: {chunk_seconds: 120}", "chunk"),
        ("measurement: {sweep: {spacing: cubic}}", "invalid value"),
        ("condition: {frequency_hz: abc}", "invalid value"),
    ],
)
def test_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, text)).build_specimens()


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "nope.yaml")


def test_population_file_round_trip(tmp_path):
    specimens = load_config("reference").build_specimens()
    (tmp_path / "pop.yaml").write_text(dump_population(specimens))
    assert load_population(tmp_path / "pop.yaml") == specimens
    cfg = load_config(write(tmp_path, "specimens_file: pop.yaml"))
    assert cfg.build_specimens() == specimens


def test_empty_population_file(tmp_path):
    (tmp_path / "pop.yaml").write_text("specimens: []\n")
    with pytest.raises(ConfigError, match="non-empty"):
        load_population(tmp_path / "pop.yaml")
