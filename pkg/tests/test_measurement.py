import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memsfatigue.dut import AXES, Axis, AxisParams, DegradationState, DutModel, FailureMode, apply_fatigue, resonance_frequency_true
from memsfatigue.measurement import (
    EdgePeakError,
    FlatResponseError,
    SweepSpec,
    Thresholds,
    UnmatchedRecordsError,
    detect_failure,
    measure_current,
    measure_output_signal,
    measure_resonance,
)
from memsfatigue.records import AFTER, BEFORE, Kind, MeasurementRecord
from memsfatigue.rig import RigFault, SimulatedRig


def rig_with(*specimens):
    rig = SimulatedRig()
    rig.mount(list(specimens))
    return rig


OPEN = DegradationState(failure_mode=FailureMode.OPEN_OUTPUT)


class TestOutputSignal:
    def test_default_specimen(self):
        rec = measure_output_signal(rig_with(DutModel()), "S01", Axis.X, 1.08, 80.0)
        # 0.66 V/g * 1.08 g * gain(80 Hz) = 0.66 * 1.08 * 1.0015945
        assert rec.value == pytest.approx(0.7139366, abs=1e-6)
        assert rec.value == pytest.approx(0.7137, abs=5e-4)
        assert rec.kind is Kind.OUTPUT_SIGNAL and rec.excitation_used == 1.08

    def test_zero_excitation(self):
        assert measure_output_signal(rig_with(DutModel()), "S01", "Y", 0.0).value == 0.0

    def test_offset_is_measured_not_assumed(self):
        p = AxisParams(zero_g_offset=0.4)
        dut = DutModel(axes={a: p for a in AXES})
        assert measure_output_signal(rig_with(dut), "S01", "Z", 1.08).value == pytest.approx(0.7139366, abs=1e-6)

    def test_open_output_reads_zero(self):
        rec = measure_output_signal(rig_with(DutModel(degradation=OPEN)), "S01", "X", 1.08)
        assert rec.value == 0.0

    def test_warns_above_ten_percent_of_target(self):
        with pytest.warns(UserWarning):
            measure_output_signal(rig_with(DutModel()), "S01", "X", 2.5)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            measure_output_signal(rig_with(DutModel()), "S01", "X", 1.37)

    @given(st.floats(min_value=1e-4, max_value=1.0), st.sampled_from(AXES))
    def test_linear_in_excitation(self, eps, axis):
        rig = rig_with(DutModel())
        one = measure_output_signal(rig, "S01", axis, eps).value
        two = measure_output_signal(rig, "S01", axis, 2 * eps).value
        assert two == pytest.approx(2 * one, abs=1e-6)

    def test_specimen_not_mounted(self):
        with pytest.raises(RigFault):
            measure_output_signal(rig_with(DutModel()), "S99", "X", 1.08)


class TestCurrent:
    def test_default(self):
        assert measure_current(rig_with(DutModel()), "S01").value == 1.5e-3

    def test_open_output(self):
        assert measure_current(rig_with(DutModel(degradation=OPEN)), "S01").value < 0.15e-3

    def test_repeatable(self):
        rig = rig_with(DutModel())
        assert measure_current(rig, "S01") == measure_current(rig, "S01")


class TestResonance:
    def test_default_sweep(self):
        rec = measure_resonance(rig_with(DutModel()), "S01", "X", SweepSpec(1000, 4000, 256, "logarithmic", 0.156))
        truth = resonance_frequency_true(DutModel(), "X")
        assert rec.value == pytest.approx(1994.99, rel=0.005)
        assert abs(rec.value / truth - 1) < 0.005

    def test_linear_sweep(self):
        rec = measure_resonance(rig_with(DutModel()), "S01", "X", SweepSpec(1000, 4000, 256, "linear"))
        assert rec.value == pytest.approx(1994.9937, rel=0.005)

    def test_peak_outside_band(self):
        with pytest.raises(EdgePeakError):
            measure_resonance(rig_with(DutModel()), "S01", "X", SweepSpec(100, 500, 64))

    def test_open_output_flat(self):
        with pytest.raises(FlatResponseError):
            measure_resonance(rig_with(DutModel(degradation=OPEN)), "S01", "X")

    def test_stuck_output_flat(self):
        stuck = DutModel(degradation=DegradationState(failure_mode="stuck_output", stuck_voltage=2.0))
        with pytest.raises(FlatResponseError):
            measure_resonance(rig_with(stuck), "S01", "Y")

    def test_low_contrast_flat(self):
        # heavy damping: the peak is interior but barely above the floor
        p = AxisParams(damping_ratio=0.6)
        dut = DutModel(axes={a: p for a in AXES})
        with pytest.raises(FlatResponseError):
            measure_resonance(rig_with(dut), "S01", "X", SweepSpec(500, 1800, 64))

    def test_doubling_points_never_worse(self):
        truth = resonance_frequency_true(DutModel(), "X")
        errors = [
            abs(measure_resonance(rig_with(DutModel()), "S01", "X", SweepSpec(points=n)).value - truth)
            for n in (8, 16, 32, 64, 128, 256, 512, 1024)
        ]
        assert all(b <= a for a, b in zip(errors, errors[1:])), errors

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=100.0, max_value=9000.0), st.floats(min_value=0.01, max_value=0.3))
    def test_agrees_with_closed_form(self, fn, zeta):
        p = AxisParams(fn, zeta)
        dut = DutModel(axes={a: p for a in AXES})
        peak = p.peak_frequency
        rec = measure_resonance(rig_with(dut), "S01", "Z", SweepSpec(peak / 4, 4 * peak, 256))
        assert abs(rec.value / peak - 1) < 0.005

    def test_sweep_spec_invariants(self):
        for bad in (dict(f_start=0), dict(f_start=5000, f_end=4000), dict(points=7), dict(excitation=0)):
            with pytest.raises(ValueError):
                SweepSpec(**bad)


def _records(phase, out=0.7139, res=1994.99, cur=1.5e-3, specimens=("S01", "S02")):
    recs = []
    for s in specimens:
        recs.append(MeasurementRecord(s, None, Kind.CURRENT, phase, cur))
        for a in AXES:
            recs.append(MeasurementRecord(s, a, Kind.OUTPUT_SIGNAL, phase, out, 1.08))
            recs.append(MeasurementRecord(s, a, Kind.RESONANCE, phase, res, 0.156))
    return recs


class TestDetectFailure:
    def test_pristine_after_fatigue_passes(self):
        dut = DutModel()
        before = [
            measure_current(rig_with(dut), "S01", BEFORE),
            measure_output_signal(rig_with(dut), "S01", "X", 1.08, phase=BEFORE),
            measure_resonance(rig_with(dut), "S01", "X", phase=BEFORE),
        ]
        aged = apply_fatigue(dut, 9_216_000)
        after = [
            measure_current(rig_with(aged), "S01", AFTER),
            measure_output_signal(rig_with(aged), "S01", "X", 1.08, phase=AFTER),
            measure_resonance(rig_with(aged), "S01", "X", phase=AFTER),
        ]
        verdict = detect_failure(before, after)
        assert verdict.passed
        assert [a.value - b.value for a, b in zip(after, before)] == [0.0, 0.0, 0.0]

    def test_resonance_shift_fails(self):
        verdict = detect_failure(_records(BEFORE), _records(AFTER, res=1994.99 * 0.98))
        assert not verdict.passed
        assert verdict.kinds == {Kind.RESONANCE}
        assert len(verdict.breaches) == 6

    def test_output_drift_below_threshold_passes(self):
        verdict = detect_failure(_records(BEFORE), _records(AFTER, out=0.7139 + 0.0069))
        assert verdict.passed

    def test_output_drift_above_threshold_fails(self):
        verdict = detect_failure(_records(BEFORE), _records(AFTER, out=0.7139 + 0.0071))
        assert verdict.kinds == {Kind.OUTPUT_SIGNAL}

    def test_current_shift(self):
        assert detect_failure(_records(BEFORE), _records(AFTER, cur=1.5e-3 * 1.19)).passed
        assert detect_failure(_records(BEFORE), _records(AFTER, cur=0.03e-3)).kinds == {Kind.CURRENT}

    def test_custom_policy(self):
        policy = Thresholds(output_delta_max=0.001)
        assert not detect_failure(_records(BEFORE), _records(AFTER, out=0.7169), policy).passed

    def test_unmatched(self):
        with pytest.raises(UnmatchedRecordsError):
            detect_failure(_records(BEFORE), _records(AFTER, specimens=("S01",)))

    def test_duplicate_rejected(self):
        with pytest.raises(UnmatchedRecordsError):
            detect_failure(_records(BEFORE) * 2, _records(AFTER) * 2)

    @given(st.randoms(use_true_random=False))
    def test_order_independent(self, rnd):
        before = _records(BEFORE)
        after = _records(AFTER, res=1994.99 * 1.02, out=0.72)
        expected = detect_failure(before, after)
        rnd.shuffle(before)
        rnd.shuffle(after)
        assert detect_failure(before, after) == expected
