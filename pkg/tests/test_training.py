"""Training state machine and the stiff-string coiling gate."""

import pytest

from tsakit.errors import ParameterError, TrainingGateError
from tsakit.model import LoadCase, Material, StringSpec, TwoPhaseParams, length_overtwist
from tsakit.training import (
    DEFAULT_STAGE_THRESHOLDS,
    TrainingStage,
    TrainingState,
    advance_cycle,
    coiling_available,
    operating_length,
    stage_of,
)
from tsakit.units import rev_to_rad

STIFF = StringSpec(diameter=1.3, initial_length=214.3, material=Material.STIFF)
COMPLIANT = StringSpec(
    diameter=1.05, initial_length=210.0, material=Material.COMPLIANT, ply=6
)


class TestStageOf:
    def test_first_cycle_is_perpendicular(self):
        assert stage_of(0) is TrainingStage.PERPENDICULAR
        assert stage_of(5) is TrainingStage.PERPENDICULAR

    def test_stage_boundaries(self):
        assert stage_of(6) is TrainingStage.MIXED
        assert stage_of(10) is TrainingStage.MIXED
        assert stage_of(11) is TrainingStage.INLINE_UNEVEN
        assert stage_of(18) is TrainingStage.INLINE_UNEVEN
        assert stage_of(49) is TrainingStage.INLINE_UNEVEN
        assert stage_of(50) is TrainingStage.UNIFORM

    def test_custom_thresholds(self):
        assert stage_of(3, (2, 5, 9)) is TrainingStage.MIXED
        assert stage_of(9, (2, 5, 9)) is TrainingStage.UNIFORM

    def test_threshold_validation(self):
        with pytest.raises(ParameterError):
            stage_of(0, (6, 6, 50))
        with pytest.raises(ParameterError):
            stage_of(0, (6, 11))
        with pytest.raises(ParameterError):
            stage_of(0, (0, 11, 50))
        with pytest.raises(ParameterError):
            stage_of(-1)


class TestAdvanceCycle:
    def test_monotone_and_absorbing(self):
        state = TrainingState()
        seen = [state.stage]
        for _ in range(80):
            state = advance_cycle(state)
            seen.append(state.stage)
        assert all(a <= b for a, b in zip(seen, seen[1:]))
        assert seen[-1] is TrainingStage.UNIFORM
        assert advance_cycle(state).stage is TrainingStage.UNIFORM

    def test_named_transitions(self):
        five = TrainingState(cycles_done=5)
        assert five.stage is TrainingStage.PERPENDICULAR
        assert advance_cycle(five).stage is TrainingStage.MIXED
        forty_nine = TrainingState(cycles_done=49)
        assert forty_nine.stage is TrainingStage.INLINE_UNEVEN
        assert advance_cycle(forty_nine).stage is TrainingStage.UNIFORM

    def test_preserves_trained_load(self):
        state = TrainingState(cycles_done=3, trained_load=200.0)
        assert advance_cycle(state).trained_load == 200.0


class TestCoilingGate:
    def test_compliant_never_gated(self):
        fresh = TrainingState()
        assert coiling_available(COMPLIANT, fresh, LoadCase(mass=200.0))

    def test_stiff_needs_uniform_stage(self):
        partial = TrainingState(cycles_done=18, trained_load=200.0)
        assert not coiling_available(STIFF, partial, LoadCase(mass=2900.0))

    def test_stiff_trained_at_minimum_load_covers_higher_loads(self):
        trained = TrainingState(cycles_done=50, trained_load=200.0)
        assert coiling_available(STIFF, trained, LoadCase(mass=2900.0))
        assert coiling_available(STIFF, trained, LoadCase(mass=200.0))

    def test_stiff_gate_monotone_in_load(self):
        trained = TrainingState(cycles_done=50, trained_load=500.0)
        flags = [
            coiling_available(STIFF, trained, LoadCase(mass=m))
            for m in (100.0, 300.0, 500.0, 800.0, 2000.0)
        ]
        assert flags == sorted(flags)
        assert not coiling_available(STIFF, trained, LoadCase(mass=499.0))

    def test_overtwist_model_gated_for_untrained_stiff(self):
        params = TwoPhaseParams(
            r_eff=0.85,
            theta_star=rev_to_rad(28.0),
            coil_diameter=2.6,
            coil_pitch=2.6,
        )
        load = LoadCase(mass=2900.0)
        untrained = TrainingState(cycles_done=10, trained_load=2900.0)
        with pytest.raises(TrainingGateError):
            length_overtwist(
                STIFF, params, load, rev_to_rad(30.0), training=untrained
            )
        trained = TrainingState(cycles_done=50, trained_load=2900.0)
        assert length_overtwist(
            STIFF, params, load, rev_to_rad(30.0), training=trained
        ) > 0.0
        # Without an explicit training record the string is assumed
        # broken in.
        assert length_overtwist(STIFF, params, load, rev_to_rad(30.0)) > 0.0


class TestOperatingLength:
    def test_trained_stiff_string_shortens(self):
        trained = TrainingState(cycles_done=50)
        assert operating_length(STIFF, trained) == pytest.approx(214.3 * 0.98)

    def test_untrained_keeps_initial_length(self):
        assert operating_length(STIFF, TrainingState(cycles_done=3)) == 214.3

    def test_compliant_unchanged(self):
        trained = TrainingState(cycles_done=50)
        assert operating_length(COMPLIANT, trained) == 210.0

    def test_custom_shortening(self):
        trained = TrainingState(cycles_done=50)
        assert operating_length(STIFF, trained, shortening=0.05) == pytest.approx(
            214.3 * 0.95
        )

    def test_defaults_exported(self):
        assert DEFAULT_STAGE_THRESHOLDS == (6, 11, 50)
