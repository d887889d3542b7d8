"""Standard vibration fatigue condition and its compiled execution schedule.

The envelope checked here is MIL-STD-883 method 2005, test condition A:
constant-amplitude harmonic vibration at 60 +/- 20 Hz and 20 g peak, held
for 32 +/- 8 hours in each orientation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dut import Axis, as_axis
from .excitation import ExcitationSpec, Waveform, amplitude_for_acceleration, peak_acceleration_g

FREQUENCY_RANGE_HZ = (40.0, 80.0)
DURATION_RANGE_H = (24.0, 40.0)
CONDITION_A_PEAK_G = 20.0
#: Relative tolerance between a stated amplitude/target pair and harmonic kinematics.
ACCELERATION_TOLERANCE = 0.005


@dataclass(frozen=True)
class FatigueTestCondition:
    """Requested test condition; constructed unchecked so violations can be reported.

    ``amplitude`` is optional. When given (e.g. the 1 mm quoted alongside
    80 Hz), validation checks it actually produces the target acceleration.
    """

    target_peak_acceleration: float = CONDITION_A_PEAK_G  # g
    frequency: float = 80.0  # Hz
    duration_per_orientation: float = 32.0  # h
    orientations: tuple[Axis, ...] = (Axis.X, Axis.Y, Axis.Z)
    waveform: Waveform = Waveform.SINE
    amplitude: float | None = None  # m


@dataclass(frozen=True)
class Violation:
    field: str
    bound: str
    actual: object

    def __str__(self):
        return f"{self.field}: expected {self.bound}, got {self.actual}"


class PlanValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate_condition(cond: FatigueTestCondition) -> list[Violation]:
    """Every envelope violation of ``cond``; an empty list means valid."""
    out = []
    lo, hi = FREQUENCY_RANGE_HZ
    if not lo <= cond.frequency <= hi:
        out.append(Violation("frequency", f"{lo:g} <= f <= {hi:g} Hz", cond.frequency))
    lo, hi = DURATION_RANGE_H
    if not lo <= cond.duration_per_orientation <= hi:
        out.append(Violation("duration_per_orientation", f"{lo:g} <= t <= {hi:g} h", cond.duration_per_orientation))

    target = cond.target_peak_acceleration
    if abs(target - CONDITION_A_PEAK_G) > ACCELERATION_TOLERANCE * CONDITION_A_PEAK_G:
        out.append(Violation("target_peak_acceleration", f"{CONDITION_A_PEAK_G:g} g (condition A)", target))

    if not cond.orientations:
        out.append(Violation("orientations", "at least one of X, Y, Z", list(cond.orientations)))
    else:
        seen = []
        for o in cond.orientations:
            try:
                a = as_axis(o)
            except KeyError:
                out.append(Violation("orientations", "X, Y or Z", o))
                continue
            if a in seen:
                out.append(Violation("orientations", "no duplicates", a.value))
            seen.append(a)

    try:
        Waveform(cond.waveform)
    except ValueError:
        out.append(Violation("waveform", "sine, square or triangle", cond.waveform))

    if cond.amplitude is not None:
        if cond.amplitude < 0 or cond.frequency <= 0:
            out.append(Violation("amplitude", ">= 0 m", cond.amplitude))
        else:
            achieved = peak_acceleration_g(cond.amplitude, cond.frequency)
            if abs(achieved - target) > ACCELERATION_TOLERANCE * abs(target):
                out.append(
                    Violation(
                        "amplitude",
                        f"{target:g} g peak within {ACCELERATION_TOLERANCE:.1%}",
                        f"{cond.amplitude:g} m -> {achieved:.2f} g",
                    )
                )
    return out


@dataclass(frozen=True)
class Phase:
    orientation: Axis
    excitation: ExcitationSpec
    planned_cycles: int
    planned_duration: float  # s


@dataclass(frozen=True)
class CheckpointPolicy:
    before: bool = True
    after: bool = True
    interval_cycles: int | None = None  # cumulative per specimen; None disables mid-run checks

    def __post_init__(self):
        if self.interval_cycles is not None and self.interval_cycles <= 0:
            raise ValueError("checkpoint interval must be a positive cycle count")


@dataclass(frozen=True)
class CampaignSchedule:
    phases: tuple[Phase, ...]
    checkpoints: CheckpointPolicy = field(default_factory=CheckpointPolicy)
    condition: FatigueTestCondition | None = None

    @property
    def total_planned_cycles(self) -> int:
        return sum(p.planned_cycles for p in self.phases)


def compile_schedule(cond: FatigueTestCondition, checkpoints: CheckpointPolicy | None = None) -> CampaignSchedule:
    """One phase per orientation, amplitude derived from the target acceleration.

    Raises:
        PlanValidationError: if ``cond`` breaks the envelope.
    """
    violations = validate_condition(cond)
    if violations:
        raise PlanValidationError(violations)
    amplitude = amplitude_for_acceleration(cond.target_peak_acceleration, cond.frequency)
    excitation = ExcitationSpec(cond.frequency, amplitude, Waveform(cond.waveform))
    duration = cond.duration_per_orientation * 3600.0
    cycles = round(cond.frequency * duration)
    phases = tuple(Phase(as_axis(o), excitation, cycles, duration) for o in cond.orientations)
    return CampaignSchedule(phases, checkpoints or CheckpointPolicy(), cond)
