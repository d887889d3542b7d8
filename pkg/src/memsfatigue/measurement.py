"""In-situ characterization procedures run through a :class:`~memsfatigue.rig.Rig`.

Three measurements are taken on every specimen at each checkpoint: the
output signal magnitude at a small excitation, the operating supply current,
and the sensing-element resonance located by a stepped sine sweep.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .dut import Axis, as_axis
from .excitation import ExcitationSpec
from .records import BEFORE, Kind, MeasurementRecord, PhaseTag
from .rig import Rig

#: Plan target the output measurement excitation is judged against.
FULL_SCALE_G = 20.0
#: 5.4 % of the 20 g plan target.
DEFAULT_OUTPUT_EXCITATION_G = 1.08
#: 0.78 % of the 20 g plan target.
DEFAULT_SWEEP_EXCITATION_G = 0.156
DEFAULT_OUTPUT_FREQUENCY_HZ = 80.0


class MeasurementError(RuntimeError):
    pass


class EdgePeakError(MeasurementError):
    """Sweep maximum sits on a grid boundary; widen the sweep."""


class FlatResponseError(MeasurementError):
    """No usable peak in the sweep; suspected dead axis."""


class Spacing(str, Enum):
    LINEAR = "linear"
    LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class SweepSpec:
    f_start: float = 1000.0
    f_end: float = 4000.0
    points: int = 256
    spacing: Spacing = Spacing.LOGARITHMIC
    excitation: float = DEFAULT_SWEEP_EXCITATION_G  # g

    def __post_init__(self):
        object.__setattr__(self, "spacing", Spacing(self.spacing))
        if not 0 < self.f_start < self.f_end:
            raise ValueError(f"sweep needs 0 < f_start < f_end, got {self.f_start}..{self.f_end}")
        if self.points < 8:
            raise ValueError(f"sweep needs at least 8 points, got {self.points}")
        if not self.excitation > 0:
            raise ValueError("sweep excitation must be > 0 g")

    def grid(self) -> np.ndarray:
        if self.spacing is Spacing.LOGARITHMIC:
            return np.geomspace(self.f_start, self.f_end, self.points)
        return np.linspace(self.f_start, self.f_end, self.points)


def _read_offset(rig: Rig, specimen_id: str, axis: Axis, frequency: float) -> float:
    rig.set_excitation(ExcitationSpec(frequency, 0.0), axis)
    return rig.read_output(specimen_id, axis)


def _read_driven(rig: Rig, specimen_id: str, axis: Axis, excitation: float, frequency: float) -> float:
    rig.set_excitation(ExcitationSpec.for_acceleration(excitation, frequency), axis)
    return rig.read_output(specimen_id, axis)


def measure_output_signal(
    rig: Rig,
    specimen_id: str,
    axis,
    excitation: float = DEFAULT_OUTPUT_EXCITATION_G,
    frequency: float = DEFAULT_OUTPUT_FREQUENCY_HZ,
    phase: PhaseTag = BEFORE,
    full_scale: float = FULL_SCALE_G,
) -> MeasurementRecord:
    """Output magnitude above the zero-g offset at a small harmonic excitation.

    The offset is read with the drive at zero amplitude, then the drive is
    set to ``excitation`` g and the peak output read again. The drive is
    left off afterwards.
    """
    axis = as_axis(axis)
    if excitation < 0:
        raise ValueError("excitation must be >= 0 g")
    if excitation > 0.1 * full_scale:
        warnings.warn(
            f"output measurement at {excitation:g} g exceeds 10% of the {full_scale:g} g plan target",
            stacklevel=2,
        )
    try:
        offset = _read_offset(rig, specimen_id, axis, frequency)
        value = abs(_read_driven(rig, specimen_id, axis, excitation, frequency) - offset)
    finally:
        rig.stop()
    return MeasurementRecord(specimen_id, axis, Kind.OUTPUT_SIGNAL, phase, value, excitation, rig.clock)


def measure_current(rig: Rig, specimen_id: str, phase: PhaseTag = BEFORE) -> MeasurementRecord:
    value = rig.read_current(specimen_id)
    return MeasurementRecord(specimen_id, None, Kind.CURRENT, phase, value, None, rig.clock)


def _parabolic_vertex(x: np.ndarray, y: np.ndarray) -> float:
    (x0, x1, x2), (y0, y1, y2) = x, y
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a >= 0:
        return float(x1)
    return float(np.clip(-b / (2 * a), x0, x2))


def sweep_response(rig: Rig, specimen_id: str, axis, sweep: SweepSpec) -> tuple[np.ndarray, np.ndarray]:
    """Stepped-sine magnitude response (V above offset) over the sweep grid.

    The zero-g offset is read once, at the first sweep frequency.
    """
    axis = as_axis(axis)
    freqs = sweep.grid()
    try:
        offset = _read_offset(rig, specimen_id, axis, float(freqs[0]))
        mags = np.array([abs(_read_driven(rig, specimen_id, axis, sweep.excitation, float(f)) - offset) for f in freqs])
    finally:
        rig.stop()
    return freqs, mags


def locate_peak(freqs: np.ndarray, mags: np.ndarray, spacing: Spacing = Spacing.LOGARITHMIC) -> float:
    """Refined peak frequency from a sampled magnitude response.

    Raises:
        FlatResponseError: all-zero/constant response, or max/min below 1.5.
        EdgePeakError: the maximum is the first or last grid point.
    """
    top, bottom = float(np.max(mags)), float(np.min(mags))
    if not top > 0 or top == bottom:
        raise FlatResponseError(f"no response across {freqs[0]:g}-{freqs[-1]:g} Hz")
    i = int(np.argmax(mags))
    if i == 0 or i == len(mags) - 1:
        raise EdgePeakError(f"response maximum at sweep edge {freqs[i]:g} Hz; widen the sweep")
    if bottom > 0 and top / bottom < 1.5:
        raise FlatResponseError(f"max/min response ratio {top / bottom:.3f} < 1.5")
    window = slice(i - 1, i + 2)
    if Spacing(spacing) is Spacing.LOGARITHMIC:
        return math.exp(_parabolic_vertex(np.log(freqs[window]), mags[window]))
    return _parabolic_vertex(freqs[window], mags[window])


def measure_resonance(
    rig: Rig,
    specimen_id: str,
    axis,
    sweep: SweepSpec | None = None,
    phase: PhaseTag = BEFORE,
) -> MeasurementRecord:
    """Resonance frequency from a stepped sine sweep with 3-point parabolic refinement."""
    sweep = sweep or SweepSpec()
    axis = as_axis(axis)
    freqs, mags = sweep_response(rig, specimen_id, axis, sweep)
    peak = locate_peak(freqs, mags, sweep.spacing)
    return MeasurementRecord(specimen_id, axis, Kind.RESONANCE, phase, peak, sweep.excitation, rig.clock)


@dataclass(frozen=True)
class Thresholds:
    """Change limits shared by failure detection and the population report.

    Output is absolute (V); resonance and current are relative fractions.
    """

    output_delta_max: float = 0.007
    resonance_shift_max: float = 0.01
    current_shift_max: float = 0.20

    def limit(self, kind: Kind) -> tuple[float, bool]:
        """(limit, is_relative) for a record kind."""
        kind = Kind(kind)
        if kind is Kind.OUTPUT_SIGNAL:
            return self.output_delta_max, False
        if kind is Kind.RESONANCE:
            return self.resonance_shift_max, True
        return self.current_shift_max, True

    def exceeded(self, kind: Kind, reference: float, value: float) -> bool:
        limit, relative = self.limit(kind)
        delta = abs(value - reference)
        if relative:
            if reference == 0:
                return delta > 0
            delta /= abs(reference)
        return delta > limit


@dataclass(frozen=True)
class Breach:
    specimen_id: str
    axis: Axis | None
    kind: Kind
    before: float
    current: float | None  # None when the measurement itself failed
    limit: float
    reason: str = "threshold"

    def __str__(self):
        where = self.specimen_id + (f"/{self.axis.value}" if self.axis else "")
        if self.current is None:
            return f"{where} {self.kind.value}: {self.reason}"
        return f"{where} {self.kind.value}: {self.before:.6g} -> {self.current:.6g} (limit {self.limit:g})"


@dataclass(frozen=True)
class FailureVerdict:
    breaches: tuple[Breach, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.breaches

    @property
    def kinds(self) -> set[Kind]:
        return {b.kind for b in self.breaches}

    def summary(self) -> str:
        return "pass" if self.passed else "; ".join(str(b) for b in self.breaches)


class UnmatchedRecordsError(ValueError):
    pass


def _index(records: Iterable[MeasurementRecord], label: str) -> dict:
    out = {}
    for r in records:
        if r.key in out:
            raise UnmatchedRecordsError(f"duplicate {label} record for {r.key}")
        out[r.key] = r
    return out


def _sort_key(key):
    specimen, axis, kind = key
    return (specimen, "" if axis is None else axis.value, kind.value)


def detect_failure(
    before: Iterable[MeasurementRecord],
    current: Iterable[MeasurementRecord],
    policy: Thresholds | None = None,
) -> FailureVerdict:
    """Compare each specimen's current readings against its own baseline."""
    policy = policy or Thresholds()
    ref, now = _index(before, "baseline"), _index(current, "current")
    if set(ref) != set(now):
        missing = sorted(set(ref) ^ set(now), key=_sort_key)
        raise UnmatchedRecordsError(f"records do not pair up: {missing}")
    breaches = []
    for key in sorted(ref, key=_sort_key):
        b, c = ref[key], now[key]
        if policy.exceeded(b.kind, b.value, c.value):
            breaches.append(Breach(b.specimen_id, b.axis, b.kind, b.value, c.value, policy.limit(b.kind)[0]))
    return FailureVerdict(tuple(breaches))

