"""Harmonic vibration kinematics and the programmable drive waveform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

#: Gravitational acceleration in m/s^2. Fixed, not configurable.
G = 9.81


class Waveform(str, Enum):
    SINE = "sine"
    SQUARE = "square"
    TRIANGLE = "triangle"


def _check_frequency(frequency: float) -> None:
    if not frequency > 0:
        raise ValueError(f"frequency must be > 0 Hz, got {frequency!r}")


def peak_acceleration_g(amplitude: float, frequency: float) -> float:
    """Peak acceleration, in g, of harmonic motion.

    Args:
        amplitude: zero-to-peak displacement (m)
        frequency: drive frequency (Hz)

    Returns:
        A * (2*pi*f)^2 / g
    """
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0 m, got {amplitude!r}")
    _check_frequency(frequency)
    omega = 2.0 * math.pi * frequency
    return amplitude * (omega * omega) / G


def amplitude_for_acceleration(target: float, frequency: float) -> float:
    """Zero-to-peak amplitude (m) producing ``target`` g at ``frequency`` Hz."""
    if target < 0:
        raise ValueError(f"target acceleration must be >= 0 g, got {target!r}")
    _check_frequency(frequency)
    omega = 2.0 * math.pi * frequency
    return target * G / (omega * omega)


@dataclass(frozen=True)
class ExcitationSpec:
    """One programmed drive setting of the vibration generator.

    ``duty_cycle`` only shapes square waves; sine and triangle ignore it.
    """

    frequency: float
    amplitude: float
    waveform: Waveform = Waveform.SINE
    duty_cycle: float = 0.5

    def __post_init__(self):
        _check_frequency(self.frequency)
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0 m, got {self.amplitude!r}")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError(f"duty_cycle must lie in (0, 1], got {self.duty_cycle!r}")
        object.__setattr__(self, "waveform", Waveform(self.waveform))

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def peak_acceleration_g(self) -> float:
        return peak_acceleration_g(self.amplitude, self.frequency)

    @classmethod
    def for_acceleration(
        cls,
        target_g: float,
        frequency: float,
        waveform: Waveform = Waveform.SINE,
        duty_cycle: float = 0.5,
    ) -> ExcitationSpec:
        return cls(frequency, amplitude_for_acceleration(target_g, frequency), waveform, duty_cycle)


def waveform_sample(spec: ExcitationSpec, t: float) -> float:
    """Base displacement (m) of the drive at time ``t`` (s).

    Sine starts at zero going up; the triangle uses the same phase so both
    peak at a quarter period. Square is +A for the first ``duty_cycle``
    fraction of each period and -A for the rest.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0 s, got {t!r}")
    a = spec.amplitude
    if spec.waveform is Waveform.SINE:
        return a * math.sin(spec.omega * t)
    phase = math.fmod(spec.frequency * t, 1.0)
    if spec.waveform is Waveform.SQUARE:
        return a if phase < spec.duty_cycle else -a
    # triangle
    if phase < 0.25:
        return a * 4.0 * phase
    if phase < 0.75:
        return a * (2.0 - 4.0 * phase)
    return a * (4.0 * phase - 4.0)
