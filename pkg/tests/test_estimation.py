"""Filter, calibration, and contact-point estimator tests."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nerveline import (
    CalibrationData,
    CalibrationError,
    ContactEstimate,
    FilterState,
    NerveLineSpec,
    Regime,
    SensorId,
    auto_calibration,
    calibrate,
    detect_touch,
    estimate_p,
    filter_step,
    map_p_to_mm,
    position_reached,
    read_calibration,
    smoothing_coefficient,
    write_calibration,
)

CAL = CalibrationData(v_max=1023, v_mid=236, v_min=93)

# 5 Hz cutoff sampled at 10 ms, frozen from 1 / (1 + 2*pi*0.05)
COEFFICIENT_A = 0.7609427763893117


class TestSensorId:
    def test_paper_table(self):
        labels = [SensorId(i).label for i in range(4)]
        assert labels == ["index_palm", "index_dorsal", "middle_palm", "middle_dorsal"]

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="0..3"):
            SensorId(4)


class TestFilter:
    def test_coefficient_frozen_value(self):
        assert smoothing_coefficient(5.0, 10.0) == COEFFICIENT_A

    def test_coefficient_shrinks_with_cutoff(self):
        assert smoothing_coefficient(50.0, 10.0) < smoothing_coefficient(5.0, 10.0)

    def test_coefficient_validation(self):
        with pytest.raises(ValueError, match="cutoff_hz"):
            smoothing_coefficient(0.0, 10.0)
        with pytest.raises(ValueError, match="dt_ms"):
            smoothing_coefficient(5.0, 0.0)

    def test_first_sample_seeds_state(self):
        state = FilterState(coefficient_a=COEFFICIENT_A)
        state, filtered = filter_step(state, 612)
        assert filtered == 612.0
        assert state.last == 612.0

    def test_step_mixes_previous_and_raw(self):
        state = FilterState(coefficient_a=0.75, last=100.0)
        _, filtered = filter_step(state, 200)
        assert filtered == 125.0

    def test_geometric_convergence_to_step_input(self):
        # from rest, n samples of a constant leave residual a^n of the step
        state = FilterState(coefficient_a=0.9, last=0.0)
        for n in range(1, 40):
            state, filtered = filter_step(state, 1023)
            assert filtered == pytest.approx(1023.0 * (1.0 - 0.9**n), rel=1e-12)

    @given(st.floats(min_value=0.0, max_value=1023.0, allow_nan=False))
    def test_constant_input_is_fixed_point(self, raw):
        state = FilterState(coefficient_a=COEFFICIENT_A, last=raw)
        _, filtered = filter_step(state, raw)
        assert filtered == pytest.approx(raw, abs=1e-9)

    @given(
        st.floats(min_value=0.0, max_value=1023.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=1023.0, allow_nan=False),
    )
    def test_output_between_previous_and_raw(self, last, raw):
        state = FilterState(coefficient_a=COEFFICIENT_A, last=last)
        _, filtered = filter_step(state, raw)
        assert min(last, raw) - 1e-9 <= filtered <= max(last, raw) + 1e-9

    def test_state_validation(self):
        with pytest.raises(ValueError, match="coefficient_a"):
            FilterState(coefficient_a=1.0)
        with pytest.raises(ValueError, match="dt_ms"):
            FilterState(coefficient_a=0.5, dt_ms=0.0)


class TestCalibrate:
    def test_averages_last_window(self):
        open_stream = [0] * 50 + [1023] * 100
        tip_stream = [0] * 10 + [236] * 100
        base_stream = [93] * 100
        data = calibrate(open_stream, tip_stream, base_stream)
        assert (data.v_max, data.v_mid, data.v_min) == (1023, 236, 93)

    def test_rounds_means_to_int(self):
        data = calibrate([1000, 1001], [500, 501], [100, 100], window=2)
        assert (data.v_max, data.v_mid, data.v_min) == (1000, 500, 100)

    def test_short_stream_named_in_error(self):
        with pytest.raises(ValueError, match="base stream has 42"):
            calibrate([1023] * 100, [236] * 100, [93] * 42)

    def test_misordered_poses_rejected(self):
        with pytest.raises(CalibrationError, match="v_min < v_mid"):
            calibrate([100] * 100, [500] * 100, [900] * 100)
        with pytest.raises(CalibrationError, match="v_mid < v_max"):
            calibrate([500] * 100, [500] * 100, [100] * 100)

    def test_auto_calibration_of_default_line(self):
        data = auto_calibration(NerveLineSpec())
        assert (data.v_max, data.v_mid, data.v_min) == (1023, 236, 93)


class TestEstimateP:
    def test_anchor_points_exact(self):
        assert estimate_p(1023.0, CAL).p == 100.0
        assert estimate_p(236.0, CAL).p == 80.0
        assert estimate_p(93.0, CAL).p == 0.0
        assert estimate_p((236.0 + 93.0) / 2.0, CAL).p == 40.0

    def test_fingertip_branch_frozen_point(self):
        # halfway between v_mid and v_max in voltage lands at p = 90
        assert estimate_p(629.5, CAL).p == 90.0

    def test_regimes(self):
        assert estimate_p(1023.0, CAL).regime is Regime.NONE
        assert estimate_p(1100.0, CAL).regime is Regime.NONE
        assert estimate_p(1022.9, CAL).regime is Regime.FINGERTIP
        assert estimate_p(236.0, CAL).regime is Regime.BODY
        assert estimate_p(50.0, CAL).regime is Regime.BODY

    def test_clamps_below_base(self):
        estimate = estimate_p(10.0, CAL)
        assert estimate.p == 0.0
        assert estimate.regime is Regime.BODY

    def test_carries_inputs(self):
        estimate = estimate_p(164.5, CAL, t_ms=120)
        assert estimate.v == 164.5
        assert estimate.t_ms == 120

    @given(st.floats(min_value=0.0, max_value=1100.0, allow_nan=False))
    def test_range_and_branch_consistency(self, v):
        estimate = estimate_p(v, CAL)
        assert 0.0 <= estimate.p <= 100.0
        if estimate.regime is Regime.FINGERTIP:
            assert 80.0 < estimate.p < 100.0
        elif estimate.regime is Regime.BODY:
            assert estimate.p <= 80.0

    @given(
        st.floats(min_value=0.0, max_value=1100.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=1100.0, allow_nan=False),
    )
    def test_monotone_in_v(self, a, b):
        low, high = sorted((a, b))
        assert estimate_p(low, CAL).p <= estimate_p(high, CAL).p

    def test_continuous_at_v_mid(self):
        below = estimate_p(236.0, CAL).p
        above = estimate_p(236.0 + 1e-9, CAL).p
        assert abs(above - below) < 1e-9


class TestThresholds:
    def test_detect_touch_strictly_below(self):
        assert detect_touch(estimate_p(600.0, CAL))  # p ~ 89.25
        assert not detect_touch(estimate_p(1023.0, CAL))
        exactly_90 = ContactEstimate(p=90.0, regime=Regime.FINGERTIP, v=629.5)
        assert not detect_touch(exactly_90)

    def test_detect_touch_threshold_validation(self):
        estimate = estimate_p(600.0, CAL)
        with pytest.raises(ValueError, match="threshold_p"):
            detect_touch(estimate, threshold_p=0.0)
        with pytest.raises(ValueError, match="threshold_p"):
            detect_touch(estimate, threshold_p=100.0)

    def _history(self, p_values):
        return [ContactEstimate(p=p, regime=Regime.BODY, v=0.0) for p in p_values]

    def test_position_reached_waits_for_full_window(self):
        history = self._history([10.0] * 9)
        assert not position_reached(history, window_n=10)
        assert position_reached(self._history([10.0] * 10), window_n=10)

    def test_position_reached_uses_window_mean(self):
        history = self._history([100.0] * 10 + [45.0] * 10)
        assert position_reached(history)
        mixed = self._history([100.0] * 5 + [10.0] * 5)
        assert not position_reached(mixed)  # mean 55 is not below 50

    def test_position_reached_strictly_below(self):
        assert not position_reached(self._history([50.0] * 10))

    def test_position_reached_rejects_dropouts(self):
        # a lost-contact sample voids the hold even if the mean qualifies
        window = self._history([0.0] * 9)
        window.append(ContactEstimate(p=100.0, regime=Regime.NONE, v=1023.0))
        assert not position_reached(window, window_n=10)

    def test_position_reached_validation(self):
        with pytest.raises(ValueError, match="window_n"):
            position_reached([], window_n=0)


class TestMapPToMm:
    def test_anchors(self):
        spec = NerveLineSpec()
        assert map_p_to_mm(0.0, spec).position_mm == 0.0
        assert map_p_to_mm(80.0, spec).position_mm == 80.0
        assert map_p_to_mm(40.0, spec).position_mm == 40.0
        assert map_p_to_mm(100.0, spec).position_mm == 100.0

    def test_zones(self):
        spec = NerveLineSpec()
        assert map_p_to_mm(80.0, spec).zone is Regime.BODY
        assert map_p_to_mm(80.1, spec).zone is Regime.FINGERTIP

    def test_range_validation(self):
        with pytest.raises(ValueError, match="p must be"):
            map_p_to_mm(-0.1, NerveLineSpec())
        with pytest.raises(ValueError, match="p must be"):
            map_p_to_mm(100.1, NerveLineSpec())


class TestCalibrationFile:
    TABLE = {
        0: CalibrationData(1023, 236, 93),
        1: CalibrationData(1020, 240, 95),
    }

    def test_round_trip(self, tmp_path):
        path = tmp_path / "calibration.txt"
        write_calibration(path, self.TABLE)
        assert read_calibration(path) == self.TABLE

    def test_exact_file_format(self, tmp_path):
        path = tmp_path / "calibration.txt"
        write_calibration(path, {0: CalibrationData(1023, 236, 93)})
        assert path.read_text() == "sensor=0\nv_max=1023\nv_mid=236\nv_min=93\n"

    @pytest.mark.parametrize(
        "content,message",
        [
            ("sensor=0\nv_max=1023\nv_mid=236\n", "incomplete sensor group"),
            ("sensor=0\nv_mid=236\nv_max=1023\nv_min=93\n", "line 2: expected key 'v_max'"),
            ("sensor=0\nv_max=10.5\nv_mid=2\nv_min=1\n", "line 2: expected an integer"),
            ("sensor=0\n\nv_max=1023\nv_mid=236\nv_min=93\n", "line 2: blank"),
            ("sensor zero\n", "line 1: expected key=value"),
            (
                "sensor=0\nv_max=100\nv_mid=200\nv_min=93\n",
                "line 4: v_mid < v_max violated",
            ),
            (
                "sensor=0\nv_max=1023\nv_mid=236\nv_min=93\n"
                "sensor=0\nv_max=1023\nv_mid=236\nv_min=93\n",
                "line 8: duplicate sensor 0",
            ),
        ],
    )
    def test_malformed_files_name_the_line(self, tmp_path, content, message):
        path = tmp_path / "calibration.txt"
        path.write_text(content)
        with pytest.raises(ValueError, match=message):
            read_calibration(path)
