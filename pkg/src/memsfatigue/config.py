"""Campaign configuration files (YAML) and the population file format.

Unknown keys are rejected so a typo cannot silently fall back to a default.
See ``data/reference.yaml`` for an annotated example of every section.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from .campaign import Assignment, CampaignOptions
from .dut import AXES, AxisParams, DegradationState, DutModel, PopulationSpec, as_axis, generate_population
from .excitation import Waveform
from .measurement import SweepSpec, Thresholds
from .plan import CampaignSchedule, CheckpointPolicy, FatigueTestCondition, compile_schedule

BUNDLED = {"reference": "reference.yaml"}


class ConfigError(ValueError):
    pass


def _section(d, name: str, allowed: set[str]) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError(f"{name}: expected a mapping, got {type(d).__name__}")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{name}: unknown key(s) {sorted(extra)}; allowed: {sorted(allowed)}")
    return d


def _axis_map(d, name: str) -> dict:
    if isinstance(d, dict):
        try:
            return {as_axis(k): float(v) for k, v in d.items()}
        except KeyError as exc:
            raise ConfigError(f"{name}: {exc.args[0]}") from None
    return {a: float(d) for a in AXES}


_AXIS_KEYS = {
    "natural_frequency_hz": "natural_frequency",
    "damping_ratio": "damping_ratio",
    "sensitivity_v_per_g": "sensitivity",
    "zero_g_offset_v": "zero_g_offset",
}


def axis_params_from_dict(d: dict, name: str, base: AxisParams | None = None) -> AxisParams:
    d = _section(d, name, set(_AXIS_KEYS))
    kwargs = {_AXIS_KEYS[k]: float(v) for k, v in d.items()}
    return replace(base or AxisParams(), **kwargs)


def axis_params_to_dict(p: AxisParams) -> dict:
    return {k: getattr(p, attr) for k, attr in _AXIS_KEYS.items()}


def dut_from_dict(d: dict, name: str = "specimen", base: DutModel | None = None) -> DutModel:
    d = _section(d, name, {"specimen_id", "supply_current_a", "axis", "axes"})
    base = base or DutModel()
    axes = dict(base.axes)
    if "axis" in d:  # one stanza applied to all three axes
        axes = {a: axis_params_from_dict(d["axis"], f"{name}.axis", axes[a]) for a in AXES}
    for k, v in _section(d.get("axes"), f"{name}.axes", {"X", "Y", "Z", "x", "y", "z"}).items():
        a = as_axis(k)
        axes[a] = axis_params_from_dict(v, f"{name}.axes.{a.value}", axes[a])
    return DutModel(
        specimen_id=str(d.get("specimen_id", base.specimen_id)),
        axes=axes,
        supply_current=float(d.get("supply_current_a", base.supply_current)),
    )


def dut_to_dict(dut: DutModel) -> dict:
    return {
        "specimen_id": dut.specimen_id,
        "supply_current_a": dut.supply_current,
        "axes": {a.value: axis_params_to_dict(p) for a, p in dut.axes.items()},
    }


def dump_population(specimens: list[DutModel]) -> str:
    return yaml.safe_dump({"specimens": [dut_to_dict(s) for s in specimens]}, sort_keys=False)


def load_population(path: str | os.PathLike) -> list[DutModel]:
    doc = _load_yaml(path)
    doc = _section(doc, "population file", {"specimens"})
    items = doc.get("specimens") or []
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{path}: 'specimens' must be a non-empty list")
    try:
        return [dut_from_dict(s, f"specimens[{i}]") for i, s in enumerate(items)]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _damage_from_dict(d: dict, name: str) -> tuple[str, DegradationState]:
    d = _section(d, name, {"specimen", "failure_mode", "onset_cycle", "resonance_shift", "sensitivity_drift", "stuck_voltage_v"})
    if "specimen" not in d:
        raise ConfigError(f"{name}: 'specimen' is required")
    state = DegradationState(
        resonance_shift=_axis_map(d.get("resonance_shift", 0.0), f"{name}.resonance_shift"),
        sensitivity_drift=_axis_map(d.get("sensitivity_drift", 0.0), f"{name}.sensitivity_drift"),
        failure_mode=d.get("failure_mode", "none"),
        onset_cycle=int(float(d.get("onset_cycle", 0))),
        stuck_voltage=None if d.get("stuck_voltage_v") is None else float(d["stuck_voltage_v"]),
    )
    return str(d["specimen"]), state


@dataclass
class CampaignConfig:
    condition: FatigueTestCondition = field(default_factory=FatigueTestCondition)
    nominal: DutModel = field(default_factory=DutModel)
    population: PopulationSpec | None = field(default_factory=PopulationSpec)
    specimens: list[DutModel] | None = None
    damage: dict[str, DegradationState] = field(default_factory=dict)
    output_excitation: float = 1.08
    output_frequency: float = 80.0
    sweep: SweepSpec = field(default_factory=SweepSpec)
    checkpoint_interval: int | None = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    rig_capacity: int = 4
    chunk_seconds: float = 60.0
    time_scale: float = 0.0
    abort_on_failure: bool = False
    assignment: Assignment = Assignment.REMOUNT
    out_dir: Path = Path("out")
    record_log: str = "records.jsonl"
    event_log: str = "events.jsonl"

    def schedule(self) -> CampaignSchedule:
        return compile_schedule(self.condition, CheckpointPolicy(interval_cycles=self.checkpoint_interval))

    def options(self) -> CampaignOptions:
        return CampaignOptions(
            time_scale=self.time_scale,
            abort_on_failure=self.abort_on_failure,
            chunk_seconds=self.chunk_seconds,
            output_excitation=self.output_excitation,
            output_frequency=self.output_frequency,
            sweep=self.sweep,
            thresholds=self.thresholds,
            assignment=self.assignment,
        )

    def build_specimens(self) -> list[DutModel]:
        """Explicit or generated specimens, with configured damage scheduled."""
        if self.specimens is not None:
            specimens = list(self.specimens)
        else:
            specimens = generate_population(self.population, self.nominal)
        ids = {s.specimen_id for s in specimens}
        unknown = set(self.damage) - ids
        if unknown:
            raise ConfigError(f"damage refers to unknown specimen(s) {sorted(unknown)}")
        return [replace(s, degradation=self.damage.get(s.specimen_id, s.degradation)) for s in specimens]

    @property
    def record_log_path(self) -> Path:
        return self.out_dir / self.record_log

    @property
    def event_log_path(self) -> Path:
        return self.out_dir / self.event_log


def _load_yaml(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None


def resolve_config_path(name: str | os.PathLike) -> Path:
    """A file path, or the name of a bundled config such as ``reference``."""
    if str(name) in BUNDLED and not Path(name).exists():
        return Path(str(resources.files("memsfatigue") / "data" / BUNDLED[str(name)]))
    return Path(name)


def load_config(path: str | os.PathLike) -> CampaignConfig:
    path = resolve_config_path(path)
    doc = _load_yaml(path)
    try:
        return _parse(doc, path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: invalid value ({exc})") from None


def _parse(doc, base_dir: Path) -> CampaignConfig:
    top = _section(
        doc if doc is not None else {},
        "config",
        {"condition", "nominal", "population", "specimens_file", "damage", "measurement",
         "checkpoints", "thresholds", "rig", "campaign", "output", "seed"},
    )
    cfg = CampaignConfig()

    c = _section(top.get("condition"), "condition", {
        "target_peak_acceleration_g", "frequency_hz", "duration_per_orientation_h",
        "orientations", "waveform", "amplitude_m"})
    orientations = c.get("orientations", ["X", "Y", "Z"])
    if not isinstance(orientations, list):
        raise ConfigError("condition.orientations must be a list")
    cfg.condition = FatigueTestCondition(
        target_peak_acceleration=float(c.get("target_peak_acceleration_g", 20.0)),
        frequency=float(c.get("frequency_hz", 80.0)),
        duration_per_orientation=float(c.get("duration_per_orientation_h", 32.0)),
        # invalid labels are kept as-is for validate_condition to report
        orientations=tuple(_try_axis(o) for o in orientations),
        waveform=_try_waveform(c.get("waveform", "sine")),
        amplitude=None if c.get("amplitude_m") is None else float(c["amplitude_m"]),
    )

    cfg.nominal = dut_from_dict(top.get("nominal") or {}, "nominal")

    if "specimens_file" in top:
        cfg.specimens = load_population(base_dir / top["specimens_file"])
        cfg.population = None
    p = _section(top.get("population"), "population", {"count", "natural_frequency_cov", "sensitivity_cov", "seed"})
    if cfg.specimens is None:
        cfg.population = PopulationSpec(
            count=int(p.get("count", 10)),
            natural_frequency_cov=_axis_map(p.get("natural_frequency_cov", 0.0), "population.natural_frequency_cov"),
            sensitivity_cov=float(p.get("sensitivity_cov", 0.0)),
            seed=int(p.get("seed", 0)),
        )
    if top.get("seed") is not None and cfg.population is not None:
        cfg.population = replace(cfg.population, seed=int(top["seed"]))

    damage = top.get("damage") or []
    if not isinstance(damage, list):
        raise ConfigError("damage must be a list")
    for i, d in enumerate(damage):
        sid, state = _damage_from_dict(d, f"damage[{i}]")
        cfg.damage[sid] = state

    m = _section(top.get("measurement"), "measurement", {"output_excitation_g", "output_frequency_hz", "sweep"})
    cfg.output_excitation = float(m.get("output_excitation_g", cfg.output_excitation))
    cfg.output_frequency = float(m.get("output_frequency_hz", cfg.output_frequency))
    s = _section(m.get("sweep"), "measurement.sweep", {"f_start_hz", "f_end_hz", "points", "spacing", "excitation_g"})
    cfg.sweep = SweepSpec(
        f_start=float(s.get("f_start_hz", 1000.0)),
        f_end=float(s.get("f_end_hz", 4000.0)),
        points=int(s.get("points", 256)),
        spacing=s.get("spacing", "logarithmic"),
        excitation=float(s.get("excitation_g", 0.156)),
    )

    k = _section(top.get("checkpoints"), "checkpoints", {"interval_cycles"})
    if k.get("interval_cycles") is not None:
        cfg.checkpoint_interval = int(float(k["interval_cycles"]))

    t = _section(top.get("thresholds"), "thresholds", {"output_delta_v", "resonance_shift", "current_shift"})
    cfg.thresholds = Thresholds(
        output_delta_max=float(t.get("output_delta_v", 0.007)),
        resonance_shift_max=float(t.get("resonance_shift", 0.01)),
        current_shift_max=float(t.get("current_shift", 0.20)),
    )

    r = _section(top.get("rig"), "rig", {"capacity"})
    cfg.rig_capacity = int(r.get("capacity", 4))

    cp = _section(top.get("campaign"), "campaign", {"chunk_seconds", "time_scale", "abort_on_failure", "assignment"})
    cfg.chunk_seconds = float(cp.get("chunk_seconds", 60.0))
    cfg.time_scale = float(cp.get("time_scale", 0.0))
    cfg.abort_on_failure = bool(cp.get("abort_on_failure", False))
    cfg.assignment = Assignment(cp.get("assignment", "remount"))
    cfg.options()  # surface option errors at load time

    o = _section(top.get("output"), "output", {"dir", "record_log", "event_log"})
    cfg.out_dir = Path(o.get("dir", "out"))
    cfg.record_log = str(o.get("record_log", cfg.record_log))
    cfg.event_log = str(o.get("event_log", cfg.event_log))
    return cfg


def _try_axis(label):
    try:
        return as_axis(label)
    except KeyError:
        return label


def _try_waveform(label):
    try:
        return Waveform(label)
    except ValueError:
        return label
