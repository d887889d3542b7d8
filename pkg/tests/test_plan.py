import pytest
from hypothesis import given
from hypothesis import strategies as st

from memsfatigue.dut import Axis
from memsfatigue.excitation import peak_acceleration_g
from memsfatigue.plan import (
    CheckpointPolicy,
    FatigueTestCondition,
    PlanValidationError,
    compile_schedule,
    validate_condition,
)

CONDITION_A = FatigueTestCondition(20.0, 80.0, 32.0, (Axis.X, Axis.Y, Axis.Z))


def fields(violations):
    return [v.field for v in violations]


def test_reference_condition_is_valid():
    assert validate_condition(CONDITION_A) == []


def test_frequency_above_window():
    v = validate_condition(FatigueTestCondition(20.0, 100.0, 32.0))
    assert fields(v) == ["frequency"]
    assert v[0].actual == 100.0


def test_duration_below_window():
    v = validate_condition(FatigueTestCondition(20.0, 80.0, 23.9, (Axis.X,)))
    assert fields(v) == ["duration_per_orientation"]


def test_all_violations_listed():
    v = validate_condition(FatigueTestCondition(15.0, 100.0, 50.0, (Axis.X, Axis.X)))
    assert sorted(fields(v)) == ["duration_per_orientation", "frequency", "orientations", "target_peak_acceleration"]


def test_empty_and_bad_orientations():
    assert fields(validate_condition(FatigueTestCondition(orientations=()))) == ["orientations"]
    assert fields(validate_condition(FatigueTestCondition(orientations=("X", "Q")))) == ["orientations"]


def test_literal_one_mm_amplitude_flagged():
    # 1 mm at 80 Hz is 25.76 g by the kinematics, not the 20 g it is quoted with
    v = validate_condition(FatigueTestCondition(20.0, 80.0, 32.0, amplitude=0.001))
    assert fields(v) == ["amplitude"]
    assert "25.76 g" in str(v[0])


def test_consistent_amplitude_accepted():
    assert validate_condition(FatigueTestCondition(20.0, 80.0, 32.0, amplitude=7.766e-4)) == []


class TestCompile:
    def test_cycle_count(self):
        sched = compile_schedule(FatigueTestCondition(20.0, 80.0, 32.0, (Axis.X,)))
        assert [p.planned_cycles for p in sched.phases] == [9_216_000]
        assert sched.phases[0].planned_duration == 32 * 3600

    def test_amplitude(self):
        sched = compile_schedule(FatigueTestCondition(20.0, 80.0, 32.0, (Axis.X,)))
        assert sched.phases[0].excitation.amplitude == pytest.approx(7.766e-4, abs=1e-7)

    def test_one_phase_per_orientation_in_order(self):
        sched = compile_schedule(CONDITION_A)
        assert [p.orientation for p in sched.phases] == [Axis.X, Axis.Y, Axis.Z]

    def test_default_checkpoints(self):
        sched = compile_schedule(CONDITION_A)
        assert sched.checkpoints == CheckpointPolicy(before=True, after=True, interval_cycles=None)

    def test_invalid_condition_raises(self):
        with pytest.raises(PlanValidationError) as err:
            compile_schedule(FatigueTestCondition(frequency=100.0))
        assert fields(err.value.violations) == ["frequency"]

    @given(
        st.floats(min_value=40.0, max_value=80.0),
        st.floats(min_value=24.0, max_value=40.0),
        st.permutations([Axis.X, Axis.Y, Axis.Z]).flatmap(lambda p: st.integers(1, 3).map(lambda k: tuple(p[:k]))),
        st.floats(min_value=19.91, max_value=20.09),
    )
    def test_compiled_phases_hit_target(self, f, hours, orientations, target):
        sched = compile_schedule(FatigueTestCondition(target, f, hours, orientations))
        per_phase = round(f * hours * 3600)
        for ph in sched.phases:
            assert abs(peak_acceleration_g(ph.excitation.amplitude, ph.excitation.frequency) / target - 1) <= 0.005
            assert ph.planned_cycles == per_phase
        assert sched.total_planned_cycles == len(orientations) * per_phase
