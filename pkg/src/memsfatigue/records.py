"""Measurement records and the append-only, line-oriented record log.

One record per line as a JSON object with sorted keys, so identical runs give
byte-identical logs and an interrupted run leaves every completed line
readable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .dut import Axis, as_axis

SCHEMA_VERSION = 1


class Kind(str, Enum):
    OUTPUT_SIGNAL = "output_signal"
    CURRENT = "current"
    RESONANCE = "resonance"


UNITS = {Kind.OUTPUT_SIGNAL: "V", Kind.CURRENT: "A", Kind.RESONANCE: "Hz"}


class Stage(str, Enum):
    BEFORE = "before"
    AFTER = "after"
    MID = "mid"


@dataclass(frozen=True)
class PhaseTag:
    stage: Stage
    cycles: int | None = None  # cumulative specimen cycles, MID only

    def __post_init__(self):
        object.__setattr__(self, "stage", Stage(self.stage))
        if (self.stage is Stage.MID) != (self.cycles is not None):
            raise ValueError("only mid-run tags carry a cycle count")

    def __str__(self):
        return f"mid({self.cycles})" if self.stage is Stage.MID else self.stage.value


BEFORE = PhaseTag(Stage.BEFORE)
AFTER = PhaseTag(Stage.AFTER)


def mid(cycles: int) -> PhaseTag:
    return PhaseTag(Stage.MID, int(cycles))


@dataclass(frozen=True)
class MeasurementRecord:
    specimen_id: str
    axis: Axis | None  # None for whole-device readings (current)
    kind: Kind
    phase: PhaseTag
    value: float
    excitation_used: float | None = None  # g
    timestamp: float = 0.0  # simulated seconds

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.axis is not None:
            object.__setattr__(self, "axis", as_axis(self.axis))
        if (self.kind is Kind.CURRENT) != (self.axis is None):
            raise ValueError("current records carry no axis; other kinds need one")

    @property
    def unit(self) -> str:
        return UNITS[self.kind]

    @property
    def key(self) -> tuple:
        return (self.specimen_id, self.axis, self.kind)

    def to_dict(self) -> dict:
        return {
            "specimen_id": self.specimen_id,
            "axis": None if self.axis is None else self.axis.value,
            "kind": self.kind.value,
            "phase": self.phase.stage.value,
            "cycles": self.phase.cycles,
            "value": self.value,
            "unit": self.unit,
            "excitation_g": self.excitation_used,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MeasurementRecord:
        kind = Kind(d["kind"])
        if d.get("unit", UNITS[kind]) != UNITS[kind]:
            raise ValueError(f"unit {d['unit']!r} does not match kind {kind.value}")
        return cls(
            specimen_id=str(d["specimen_id"]),
            axis=d["axis"],
            kind=kind,
            phase=PhaseTag(d["phase"], d.get("cycles")),
            value=float(d["value"]),
            excitation_used=None if d.get("excitation_g") is None else float(d["excitation_g"]),
            timestamp=float(d["timestamp"]),
        )


def dumps_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False) + "\n"


class LogFormatError(ValueError):
    def __init__(self, path, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}, line {line_no}: {reason}")


class JsonlWriter:
    """Append-only JSON Lines sink, flushed after every line."""

    def __init__(self, path: str | os.PathLike, truncate: bool = True):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w" if truncate else "a", encoding="utf-8")

    def append(self, obj: dict) -> None:
        self._fh.write(dumps_line(obj))
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def iter_jsonl(path: str | os.PathLike) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogFormatError(path, n, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise LogFormatError(path, n, "expected a JSON object")
            yield n, obj


def read_records(path: str | os.PathLike) -> list[MeasurementRecord]:
    out = []
    for n, obj in iter_jsonl(path):
        try:
            out.append(MeasurementRecord.from_dict(obj))
        except (KeyError, ValueError, TypeError) as exc:
            raise LogFormatError(path, n, f"bad record ({exc})") from None
    return out


def write_records(path: str | os.PathLike, records: Iterable[MeasurementRecord]) -> None:
    with JsonlWriter(path) as w:
        for r in records:
            w.append(r.to_dict())
