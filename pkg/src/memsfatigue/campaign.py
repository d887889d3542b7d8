"""Campaign engine: runs a compiled schedule on a rig against a set of specimens.

The engine owns the rig for the whole run. Fatigue is driven in chunks of at
most one simulated minute so cancellation, pause and progress queries are
honored with bounded latency. All timestamps come from the rig clock, never
the wall clock, so identical inputs give identical record logs.
"""

from __future__ import annotations

import copy
import logging
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

from .dut import AXES, Axis
from .measurement import (
    DEFAULT_OUTPUT_EXCITATION_G,
    DEFAULT_OUTPUT_FREQUENCY_HZ,
    Breach,
    FailureVerdict,
    MeasurementError,
    SweepSpec,
    Thresholds,
    detect_failure,
    measure_current,
    measure_output_signal,
    measure_resonance,
)
from .plan import CONDITION_A_PEAK_G, CampaignSchedule, Phase
from .records import AFTER, BEFORE, Kind, MeasurementRecord, PhaseTag, mid
from .rig import Rig, RigFault

log = logging.getLogger(__name__)

MAX_CHUNK_SECONDS = 60.0


class Status(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    PAUSED = "paused"
    COMPLETED = "completed"
    ABORTED = "aborted"


class AbortKind(str, Enum):
    FAILURE = "failure"
    CANCELLED = "cancelled"
    FAULT = "fault"


class Assignment(str, Enum):
    REMOUNT = "remount"  # every specimen runs every orientation
    DEDICATED = "dedicated"  # specimens split round-robin, one orientation each


_TRANSITIONS = {
    Status.PENDING: {Status.RUNNING, Status.ABORTED},
    Status.RUNNING: {Status.PAUSED, Status.COMPLETED, Status.ABORTED},
    Status.PAUSED: {Status.RUNNING, Status.ABORTED},
    Status.COMPLETED: set(),
    Status.ABORTED: set(),
}


@dataclass(frozen=True)
class CampaignOptions:
    time_scale: float = 0.0  # simulated seconds per wall second; 0 runs unthrottled
    abort_on_failure: bool = False
    chunk_seconds: float = MAX_CHUNK_SECONDS
    output_excitation: float = DEFAULT_OUTPUT_EXCITATION_G
    output_frequency: float = DEFAULT_OUTPUT_FREQUENCY_HZ
    sweep: SweepSpec = field(default_factory=SweepSpec)
    thresholds: Thresholds = field(default_factory=Thresholds)
    assignment: Assignment = Assignment.REMOUNT

    def __post_init__(self):
        object.__setattr__(self, "assignment", Assignment(self.assignment))
        if not 0 < self.chunk_seconds <= MAX_CHUNK_SECONDS:
            raise ValueError(f"chunk_seconds must lie in (0, {MAX_CHUNK_SECONDS:g}]")
        if self.time_scale < 0:
            raise ValueError("time_scale must be >= 0")


@dataclass
class PhaseProgress:
    batch: int
    orientation: Axis
    frequency: float
    planned_cycles: int
    elapsed_cycles: int = 0

    @property
    def elapsed_seconds(self) -> float:
        return self.elapsed_cycles / self.frequency


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"time": self.time, "event": self.kind, **self.detail}


@dataclass(frozen=True)
class CheckpointVerdict:
    batch: int
    phase: PhaseTag
    verdict: FailureVerdict


@dataclass
class CampaignState:
    schedule: CampaignSchedule
    batches: list[tuple[str, ...]]
    phases: list[PhaseProgress]
    status: Status = Status.PENDING
    abort_kind: AbortKind | None = None
    abort_reason: str | None = None
    records: list[MeasurementRecord] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    verdicts: list[CheckpointVerdict] = field(default_factory=list)
    specimens: list = field(default_factory=list)  # final specimen states, when the rig exposes them
    current_phase: int | None = None  # index into ``phases``

    @property
    def failed(self) -> bool:
        return any(not v.verdict.passed for v in self.verdicts)


@dataclass(frozen=True)
class Progress:
    status: Status
    fraction: float
    elapsed_cycles: int
    planned_cycles: int
    elapsed_hours: float
    current_phase: PhaseProgress | None


def progress(state: CampaignState) -> Progress:
    planned = sum(p.planned_cycles for p in state.phases)
    elapsed = sum(p.elapsed_cycles for p in state.phases)
    seconds = sum(p.elapsed_seconds for p in state.phases)
    current = None if state.current_phase is None else copy.copy(state.phases[state.current_phase])
    return Progress(
        status=state.status,
        fraction=elapsed / planned if planned else 0.0,
        elapsed_cycles=elapsed,
        planned_cycles=planned,
        elapsed_hours=seconds / 3600.0,
        current_phase=current,
    )


class _Abort(Exception):
    def __init__(self, kind: AbortKind, reason: str):
        self.kind = kind
        self.reason = reason
        super().__init__(reason)


@dataclass
class _Unit:
    batch: int
    specimens: list
    phases: list[tuple[Phase, int]]  # schedule phase, index into state.phases


class Campaign:
    """One schedule on one rig. ``run`` blocks; other methods are thread-safe."""

    def __init__(
        self,
        schedule: CampaignSchedule,
        rig: Rig,
        specimens: Sequence,
        options: CampaignOptions | None = None,
        on_record: Callable[[MeasurementRecord], None] | None = None,
        on_event: Callable[[Event], None] | None = None,
    ):
        if not schedule.phases:
            raise ValueError("schedule has no phases")
        if not specimens:
            raise ValueError("no specimens to test")
        self.schedule = schedule
        self.rig = rig
        self.options = options or CampaignOptions()
        self._on_record = on_record
        self._on_event = on_event
        self._lock = threading.RLock()
        self._cancel = threading.Event()
        self._resume = threading.Event()
        self._resume.set()
        self._units = self._plan_units(list(specimens))
        phases = []
        for unit in self._units:
            for ph, _ in unit.phases:
                phases.append(PhaseProgress(unit.batch, ph.orientation, ph.excitation.frequency, ph.planned_cycles))
        self.state = CampaignState(
            schedule=schedule,
            batches=[tuple(_specimen_id(s) for s in u.specimens) for u in self._units],
            phases=phases,
        )

    def _plan_units(self, specimens: list) -> list[_Unit]:
        cap = self.rig.capacity
        phases = list(self.schedule.phases)
        if self.options.assignment is Assignment.REMOUNT:
            groups = [(specimens, phases)]
        else:
            groups = [(specimens[i :: len(phases)], [ph]) for i, ph in enumerate(phases)]
        units, idx = [], 0
        for group, group_phases in groups:
            for start in range(0, len(group), cap):
                unit_phases = [(ph, idx + k) for k, ph in enumerate(group_phases)]
                idx += len(group_phases)
                units.append(_Unit(len(units), group[start : start + cap], unit_phases))
        return units

    # control surface

    def cancel(self) -> None:
        self._cancel.set()
        self._resume.set()

    def pause(self) -> None:
        self._resume.clear()

    def resume(self) -> None:
        self._resume.set()

    def progress(self) -> Progress:
        with self._lock:
            return progress(self.state)

    def snapshot(self) -> CampaignState:
        with self._lock:
            s = self.state
            return replace(
                s,
                batches=list(s.batches),
                phases=[copy.copy(p) for p in s.phases],
                records=list(s.records),
                events=list(s.events),
                verdicts=list(s.verdicts),
                specimens=list(s.specimens),
            )

    # internals

    def _set_status(self, status: Status) -> None:
        with self._lock:
            if status not in _TRANSITIONS[self.state.status]:
                raise RuntimeError(f"illegal campaign transition {self.state.status.value} -> {status.value}")
            self.state.status = status

    def _emit(self, event: str, **detail) -> None:
        ev = Event(self.rig.clock, event, detail)
        with self._lock:
            self.state.events.append(ev)
        if self._on_event:
            self._on_event(ev)

    def _record(self, rec: MeasurementRecord) -> None:
        with self._lock:
            self.state.records.append(rec)
        if self._on_record:
            self._on_record(rec)

    def _check_control(self) -> None:
        if not self._resume.is_set() and not self._cancel.is_set():
            self._set_status(Status.PAUSED)
            self._emit("paused")
            self._resume.wait()
            if not self._cancel.is_set():
                self._set_status(Status.RUNNING)
                self._emit("resumed")
        if self._cancel.is_set():
            raise _Abort(AbortKind.CANCELLED, "cancelled")

    def _checkpoint(self, unit: _Unit, tag: PhaseTag) -> tuple[list[MeasurementRecord], list[Breach]]:
        opts = self.options
        full_scale = self.schedule.condition.target_peak_acceleration if self.schedule.condition else CONDITION_A_PEAK_G
        self._emit("checkpoint", batch=unit.batch, phase=str(tag))
        recs, errors = [], []
        for dut in unit.specimens:
            sid = _specimen_id(dut)
            self._check_control()
            recs.append(measure_current(self.rig, sid, tag))
            for axis in AXES:
                recs.append(
                    measure_output_signal(
                        self.rig, sid, axis, opts.output_excitation, opts.output_frequency, tag, full_scale
                    )
                )
            for axis in AXES:
                try:
                    recs.append(measure_resonance(self.rig, sid, axis, opts.sweep, tag))
                except MeasurementError as exc:
                    self._emit("measurement_error", specimen=sid, axis=axis.value, kind=Kind.RESONANCE.value, error=str(exc))
                    errors.append(
                        Breach(sid, axis, Kind.RESONANCE, float("nan"), None, opts.thresholds.resonance_shift_max, type(exc).__name__)
                    )
        for r in recs:
            self._record(r)
        return recs, errors

    def _judge(self, unit: _Unit, tag: PhaseTag, baseline: list[MeasurementRecord], recs, errors) -> None:
        ref = {r.key: r for r in baseline}
        now = [r for r in recs if r.key in ref]
        have = {r.key for r in now}
        verdict = detect_failure([ref[k] for k in have], now, self.options.thresholds)
        breaches = list(verdict.breaches)
        # a resonance the baseline found but this checkpoint could not is a failure too
        for b in errors:
            if (b.specimen_id, b.axis, b.kind) in ref:
                breaches.append(replace(b, before=ref[(b.specimen_id, b.axis, b.kind)].value))
        verdict = FailureVerdict(tuple(breaches))
        with self._lock:
            self.state.verdicts.append(CheckpointVerdict(unit.batch, tag, verdict))
        self._emit("verdict", batch=unit.batch, phase=str(tag), passed=verdict.passed, detail=verdict.summary())
        if not verdict.passed and self.options.abort_on_failure:
            raise _Abort(AbortKind.FAILURE, f"failure at {tag}: {verdict.summary()}")

    def _run_unit(self, unit: _Unit) -> None:
        rig, policy = self.rig, self.schedule.checkpoints
        self._check_control()
        rig.mount(unit.specimens)
        self._emit("mount", batch=unit.batch, specimens=list(self.state.batches[unit.batch]))
        baseline = []
        if policy.before or policy.interval_cycles:
            baseline, _ = self._checkpoint(unit, BEFORE)
        total = sum(ph.planned_cycles for ph, _ in unit.phases)
        interval = policy.interval_cycles
        done = 0
        for ph, idx in unit.phases:
            pp = self.state.phases[idx]
            with self._lock:
                self.state.current_phase = idx
            self._emit("phase_start", batch=unit.batch, orientation=ph.orientation.value, planned_cycles=ph.planned_cycles)
            rig.set_excitation(ph.excitation, ph.orientation)
            chunk = max(1, round(self.options.chunk_seconds * ph.excitation.frequency))
            while pp.elapsed_cycles < pp.planned_cycles:
                self._check_control()
                n = min(chunk, pp.planned_cycles - pp.elapsed_cycles)
                if interval:
                    n = min(n, interval - done % interval)
                ran = rig.run_for(cycles=n)
                with self._lock:
                    pp.elapsed_cycles += ran
                done += ran
                if self.options.time_scale > 0:
                    self._cancel.wait(ran / ph.excitation.frequency / self.options.time_scale)
                if interval and done % interval == 0 and done < total:
                    tag = mid(done)
                    recs, errors = self._checkpoint(unit, tag)
                    self._judge(unit, tag, baseline, recs, errors)
                    rig.set_excitation(ph.excitation, ph.orientation)
            self._emit("phase_end", batch=unit.batch, orientation=ph.orientation.value, elapsed_cycles=pp.elapsed_cycles)
        rig.stop()
        if policy.after:
            recs, errors = self._checkpoint(unit, AFTER)
            if baseline:
                self._judge(unit, AFTER, baseline, recs, errors)

    def _collect_specimens(self) -> None:
        unmount = getattr(self.rig, "unmount", None)
        if unmount is not None:
            with self._lock:
                self.state.specimens.extend(unmount())

    def run(self) -> CampaignState:
        self._set_status(Status.RUNNING)
        self._emit("campaign_start", batches=len(self._units), planned_cycles=progress(self.state).planned_cycles)
        try:
            for unit in self._units:
                try:
                    self._run_unit(unit)
                finally:
                    self.rig.stop()
                    self._collect_specimens()
        except _Abort as exc:
            self._abort(exc.kind, exc.reason)
        except RigFault as exc:
            self._abort(AbortKind.FAULT, f"rig fault: {exc}")
            raise
        else:
            with self._lock:
                self.state.current_phase = None
            self._set_status(Status.COMPLETED)
            self._emit("campaign_end", status=Status.COMPLETED.value)
        return self.state

    def _abort(self, kind: AbortKind, reason: str) -> None:
        log.warning("campaign aborted (%s): %s", kind.value, reason)
        with self._lock:
            self.state.abort_kind = kind
            self.state.abort_reason = reason
        self._set_status(Status.ABORTED)
        self._emit("campaign_end", status=Status.ABORTED.value, abort=kind.value, reason=reason)


def _specimen_id(specimen) -> str:
    return getattr(specimen, "specimen_id", specimen)


def run_campaign(
    schedule: CampaignSchedule,
    rig: Rig,
    specimens: Sequence,
    options: CampaignOptions | None = None,
    **sinks,
) -> CampaignState:
    """Run a whole campaign synchronously; see :class:`Campaign`."""
    return Campaign(schedule, rig, specimens, options, **sinks).run()
