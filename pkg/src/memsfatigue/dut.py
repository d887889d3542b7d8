"""Simulated 3-axis capacitive MEMS accelerometer.

Each sensing axis is an independent base-excited second-order resonator read
out through a linear half-bridge stage (offset + sensitivity * acceleration).
Specimens are immutable; fatigue returns a new specimen with an updated cycle
count, and any scheduled damage switches on as a step once the count reaches
its onset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Mapping

import numpy as np


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


AXES = (Axis.X, Axis.Y, Axis.Z)


def as_axis(label) -> Axis:
    if isinstance(label, Axis):
        return label
    try:
        return Axis(str(label).upper())
    except ValueError:
        raise KeyError(f"unknown axis {label!r}; expected one of X, Y, Z") from None


class FailureMode(str, Enum):
    NONE = "none"
    STUCK_OUTPUT = "stuck_output"
    OPEN_OUTPUT = "open_output"


#: Fraction of nominal supply current drawn by a specimen with an open output.
OPEN_OUTPUT_CURRENT_FRACTION = 0.02


@dataclass(frozen=True)
class AxisParams:
    natural_frequency: float = 2000.0  # Hz, undamped
    damping_ratio: float = 0.05
    sensitivity: float = 0.66  # V/g at DC
    zero_g_offset: float = 1.65  # V

    def __post_init__(self):
        if not self.natural_frequency > 0:
            raise ValueError(f"natural_frequency must be > 0, got {self.natural_frequency!r}")
        if not 0 < self.damping_ratio < 1 / math.sqrt(2):
            raise ValueError(f"damping_ratio must lie in (0, 1/sqrt(2)), got {self.damping_ratio!r}")
        if not self.sensitivity > 0:
            raise ValueError(f"sensitivity must be > 0, got {self.sensitivity!r}")

    @property
    def peak_frequency(self) -> float:
        return self.natural_frequency * math.sqrt(1.0 - 2.0 * self.damping_ratio**2)


def _per_axis(values, default: float = 0.0) -> dict[Axis, float]:
    """Normalize a scalar or an axis-keyed mapping to a full X/Y/Z dict."""
    if values is None:
        return {a: default for a in AXES}
    if isinstance(values, Mapping):
        out = {a: default for a in AXES}
        for k, v in values.items():
            out[as_axis(k)] = float(v)
        return out
    return {a: float(values) for a in AXES}


@dataclass(frozen=True)
class DegradationState:
    """Damage that takes effect once a specimen has seen ``onset_cycle`` cycles.

    ``stuck_voltage`` is the level a stuck output sits at; ``None`` means the
    axis zero-g offset.
    """

    resonance_shift: Mapping[Axis, float] = field(default_factory=lambda: _per_axis(None))
    sensitivity_drift: Mapping[Axis, float] = field(default_factory=lambda: _per_axis(None))
    failure_mode: FailureMode = FailureMode.NONE
    onset_cycle: int = 0
    stuck_voltage: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "resonance_shift", _per_axis(self.resonance_shift))
        object.__setattr__(self, "sensitivity_drift", _per_axis(self.sensitivity_drift))
        object.__setattr__(self, "failure_mode", FailureMode(self.failure_mode))
        if self.onset_cycle < 0:
            raise ValueError("onset_cycle must be >= 0")
        for a in AXES:
            if self.resonance_shift[a] <= -1 or self.sensitivity_drift[a] <= -1:
                raise ValueError("shift/drift fractions must be > -1")

    @cached_property
    def is_pristine(self) -> bool:
        return (
            self.failure_mode is FailureMode.NONE
            and not any(self.resonance_shift.values())
            and not any(self.sensitivity_drift.values())
        )


PRISTINE = DegradationState()


def _default_axes() -> dict[Axis, AxisParams]:
    return {a: AxisParams() for a in AXES}


@dataclass(frozen=True)
class DutModel:
    """One simulated specimen.

    ``degradation`` is the damage scheduled for this specimen and ``cycles``
    the cumulative fatigue cycles it has experienced; the damage is active
    only while ``cycles >= degradation.onset_cycle``.
    """

    specimen_id: str = "S01"
    axes: Mapping[Axis, AxisParams] = field(default_factory=_default_axes)
    supply_current: float = 1.5e-3  # A
    degradation: DegradationState = PRISTINE
    cycles: int = 0

    def __post_init__(self):
        axes = {as_axis(k): v for k, v in self.axes.items()}
        if set(axes) != set(AXES):
            raise ValueError(f"a specimen needs exactly the axes X, Y, Z, got {sorted(axes)}")
        object.__setattr__(self, "axes", {a: axes[a] for a in AXES})
        if not self.supply_current > 0:
            raise ValueError("supply_current must be > 0")
        if self.cycles < 0:
            raise ValueError("cycles must be >= 0")

    @property
    def active_degradation(self) -> DegradationState:
        if self.degradation.is_pristine or self.cycles < self.degradation.onset_cycle:
            return PRISTINE
        return self.degradation

    def effective_axis(self, axis) -> AxisParams:
        """Axis parameters with any active shift and drift folded in."""
        axis = as_axis(axis)
        p = self.axes[axis]
        d = self.active_degradation
        if d is PRISTINE:
            return p
        return replace(
            p,
            natural_frequency=p.natural_frequency * (1.0 + d.resonance_shift[axis]),
            sensitivity=p.sensitivity * (1.0 + d.sensitivity_drift[axis]),
        )

    def operating_current(self) -> float:
        if self.active_degradation.failure_mode is FailureMode.OPEN_OUTPUT:
            return self.supply_current * OPEN_OUTPUT_CURRENT_FRACTION
        return self.supply_current


def axis_gain(params: AxisParams, frequency: float) -> float:
    """|H(f)| of the proof-mass response, normalized to 1 at DC."""
    if frequency < 0:
        raise ValueError(f"frequency must be >= 0, got {frequency!r}")
    r = frequency / params.natural_frequency
    return 1.0 / math.hypot(1.0 - r * r, 2.0 * params.damping_ratio * r)


def output_voltage(dut: DutModel, axis, applied_acceleration: float, frequency: float) -> float:
    """Readout voltage for an axis under a harmonic acceleration of the given peak (g)."""
    axis = as_axis(axis)
    d = dut.active_degradation
    if d.failure_mode is FailureMode.OPEN_OUTPUT:
        return 0.0
    if d.failure_mode is FailureMode.STUCK_OUTPUT:
        return dut.axes[axis].zero_g_offset if d.stuck_voltage is None else d.stuck_voltage
    p = dut.effective_axis(axis)
    return p.zero_g_offset + p.sensitivity * axis_gain(p, frequency) * applied_acceleration


def resonance_frequency_true(dut: DutModel, axis) -> float:
    return dut.effective_axis(axis).peak_frequency


def apply_fatigue(dut: DutModel, cycles: int, damage: DegradationState | None = None) -> DutModel:
    """Advance a specimen by ``cycles`` fatigue cycles.

    ``damage`` replaces the specimen's scheduled degradation; ``None`` keeps
    whatever was scheduled, so a pristine specimen stays pristine.
    """
    if cycles < 0:
        raise ValueError(f"cycles must be >= 0, got {cycles!r}")
    new = replace(dut, cycles=dut.cycles + int(cycles))
    if damage is not None:
        new = replace(new, degradation=damage)
    return new


@dataclass(frozen=True)
class PopulationSpec:
    count: int = 10
    natural_frequency_cov: Mapping[Axis, float] = field(default_factory=lambda: _per_axis(None))
    sensitivity_cov: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "natural_frequency_cov", _per_axis(self.natural_frequency_cov))
        if self.count < 1:
            raise ValueError(f"population count must be >= 1, got {self.count!r}")
        if self.sensitivity_cov < 0 or any(v < 0 for v in self.natural_frequency_cov.values()):
            raise ValueError("coefficients of variation must be >= 0")


_TRUNCATE_SIGMA = 4.0


def _truncated_normal(rng: np.random.Generator, mean: float, cov: float, n: int) -> np.ndarray:
    # resample anything beyond 4 sigma or non-positive
    out = np.empty(n)
    filled = 0
    while filled < n:
        z = rng.standard_normal(n - filled)
        vals = mean * (1.0 + cov * z)
        keep = vals[(np.abs(z) <= _TRUNCATE_SIGMA) & (vals > 0)]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


def generate_population(spec: PopulationSpec, nominal: DutModel | None = None) -> list[DutModel]:
    """Draw ``spec.count`` pristine specimens scattered around ``nominal``."""
    nominal = nominal or DutModel()
    rng = np.random.default_rng(spec.seed)
    fn = {a: _truncated_normal(rng, nominal.axes[a].natural_frequency, spec.natural_frequency_cov[a], spec.count) for a in AXES}
    sens = {a: _truncated_normal(rng, nominal.axes[a].sensitivity, spec.sensitivity_cov, spec.count) for a in AXES}
    width = max(2, len(str(spec.count)))
    population = []
    for i in range(spec.count):
        axes = {
            a: replace(nominal.axes[a], natural_frequency=float(fn[a][i]), sensitivity=float(sens[a][i]))
            for a in AXES
        }
        population.append(
            DutModel(
                specimen_id=f"S{i + 1:0{width}d}",
                axes=axes,
                supply_current=nominal.supply_current,
            )
        )
    return population
