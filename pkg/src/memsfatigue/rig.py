"""Vibration rig contract and the simulated backend.

A rig stands in for the whole bench: function generator, power amplifier,
shaker and readout. Backends implement :class:`Rig`; the campaign engine and
the measurement routines only talk to that surface.
"""

from __future__ import annotations

import abc
from fractions import Fraction
from typing import Sequence

from .dut import Axis, DutModel, apply_fatigue, as_axis, output_voltage
from .excitation import ExcitationSpec, peak_acceleration_g


class RigFault(RuntimeError):
    pass


class Rig(abc.ABC):
    """Backend contract.

    ``run_for`` must be resumable: two calls of N cycles leave the rig and
    its specimens in the same state as one call of 2N.
    """

    capacity: int = 4
    frequency_range: tuple[float, float] = (1.0, 40_000.0)

    @abc.abstractmethod
    def mount(self, specimens: Sequence) -> None: ...

    @abc.abstractmethod
    def set_excitation(self, spec: ExcitationSpec | None, orientation: Axis = Axis.X) -> None:
        """Program the drive; ``None`` switches it off. ``orientation`` is the
        specimen axis aligned with the drive direction."""

    @abc.abstractmethod
    def run_for(self, cycles: int | None = None, seconds: float | None = None) -> int:
        """Drive the programmed excitation; returns the cycles actually run."""

    @abc.abstractmethod
    def read_output(self, specimen_id: str, axis: Axis) -> float:
        """Peak output voltage of one axis under the current drive."""

    @abc.abstractmethod
    def read_current(self, specimen_id: str) -> float: ...

    @abc.abstractmethod
    def stop(self) -> None: ...

    @property
    @abc.abstractmethod
    def clock(self) -> float:
        """Rig time in seconds (simulated for the simulator)."""


class SimulatedRig(Rig):
    """Drives :class:`DutModel` specimens with exact, noise-free physics.

    The readout treats any drive as its harmonic peak acceleration at the drive
    frequency, i.e. as the sinusoid with the same amplitude. Time is kept as
    an exact rational so chunked runs land on identical clocks.
    """

    def __init__(self, capacity: int = 4, frequency_range: tuple[float, float] = (1.0, 40_000.0)):
        if capacity < 1:
            raise ValueError("rig capacity must be >= 1")
        self.capacity = capacity
        self.frequency_range = frequency_range
        self._specimens: dict[str, DutModel] = {}
        self._excitation: ExcitationSpec | None = None
        self._orientation = Axis.X
        self._elapsed = Fraction(0)

    @property
    def clock(self) -> float:
        return float(self._elapsed)

    @property
    def specimens(self) -> list[DutModel]:
        return list(self._specimens.values())

    @property
    def excitation(self) -> ExcitationSpec | None:
        return self._excitation

    def mount(self, specimens: Sequence[DutModel]) -> None:
        if len(specimens) > self.capacity:
            raise RigFault(f"{len(specimens)} specimens exceed rig capacity {self.capacity}")
        ids = [s.specimen_id for s in specimens]
        if len(set(ids)) != len(ids):
            raise RigFault(f"duplicate specimen ids in mount: {ids}")
        self._specimens = {s.specimen_id: s for s in specimens}

    def unmount(self) -> list[DutModel]:
        out = self.specimens
        self._specimens = {}
        return out

    def set_excitation(self, spec: ExcitationSpec | None, orientation: Axis = Axis.X) -> None:
        if spec is not None:
            lo, hi = self.frequency_range
            if not lo <= spec.frequency <= hi:
                raise RigFault(f"drive frequency {spec.frequency} Hz outside rig range {lo}-{hi} Hz")
        self._excitation = spec
        self._orientation = as_axis(orientation)

    def run_for(self, cycles: int | None = None, seconds: float | None = None) -> int:
        if (cycles is None) == (seconds is None):
            raise ValueError("give exactly one of cycles or seconds")
        if self._excitation is None:
            raise RigFault("no excitation programmed")
        if not self._specimens:
            raise RigFault("no specimens mounted")
        f = self._excitation.frequency
        if cycles is None:
            cycles = round(seconds * f)
        if cycles < 0:
            raise ValueError("cannot run a negative number of cycles")
        self._specimens = {k: apply_fatigue(v, cycles) for k, v in self._specimens.items()}
        self._elapsed += Fraction(cycles) / Fraction(f)
        return cycles

    def _specimen(self, specimen_id: str) -> DutModel:
        try:
            return self._specimens[specimen_id]
        except KeyError:
            raise RigFault(f"specimen {specimen_id!r} is not mounted") from None

    def read_output(self, specimen_id: str, axis: Axis) -> float:
        dut = self._specimen(specimen_id)
        axis = as_axis(axis)
        spec = self._excitation
        if spec is None or axis is not self._orientation:
            return output_voltage(dut, axis, 0.0, 0.0)
        return output_voltage(dut, axis, peak_acceleration_g(spec.amplitude, spec.frequency), spec.frequency)

    def read_current(self, specimen_id: str) -> float:
        return self._specimen(specimen_id).operating_current()

    def stop(self) -> None:
        self._excitation = None
