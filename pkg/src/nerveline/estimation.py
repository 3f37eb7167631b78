"""Contact-point estimation from nerve-line ADC readings.

The raw counts from one line pass through an exponential smoothing filter,
then a three-point calibration maps the filtered value to a contact-point
ratio p in [0, 100]: 0 at the finger base, 80 at the insulation point where
the sensitive region ends, 100 at the nail tip.  Thresholds on p drive
touch detection and grasp-position checks.
"""

from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .errors import CalibrationError
from .line import ContactPoint, ContactSet, NerveLineSpec, sense

# Ratio assigned to a press at the insulation point; the remaining twenty
# points cover the folded-out fingertip band beyond it.
BODY_SPLIT_P = 80.0

FINGERS = ("index", "middle")
SIDES = ("palm", "dorsal")


class Regime(enum.Enum):
    """Which branch of the piecewise estimator produced a value."""

    NONE = "none"
    FINGERTIP = "fingertip"
    BODY = "body"


@dataclass(frozen=True)
class SensorId:
    """Identity of one of the four lines: index/middle finger, palm/dorsal side."""

    index: int

    def __post_init__(self) -> None:
        if self.index not in range(len(FINGERS) * len(SIDES)):
            raise ValueError(f"sensor index must be 0..3, got {self.index}")

    @property
    def finger(self) -> str:
        return FINGERS[self.index // 2]

    @property
    def side(self) -> str:
        return SIDES[self.index % 2]

    @property
    def label(self) -> str:
        return f"{self.finger}_{self.side}"


@dataclass(frozen=True)
class FilterState:
    """State of the first-order exponential smoother for one sensor.

    ``last`` is None until the first sample arrives; the first raw value
    seeds the filter so startup shows no artificial transient.
    """

    coefficient_a: float
    last: float | None = None
    dt_ms: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.coefficient_a < 1.0:
            raise ValueError(f"coefficient_a must be in [0, 1), got {self.coefficient_a}")
        if self.dt_ms <= 0:
            raise ValueError(f"dt_ms must be positive, got {self.dt_ms}")


def smoothing_coefficient(cutoff_hz: float, dt_ms: float) -> float:
    """Smoothing coefficient of a first-order low-pass at a given cutoff.

    Discretizing an RC low-pass with time constant 1/(2*pi*fc) sampled
    every dt gives out = a * prev + (1 - a) * raw with
    a = 1 / (1 + 2*pi*fc*dt).
    """
    if cutoff_hz <= 0:
        raise ValueError(f"cutoff_hz must be positive, got {cutoff_hz}")
    if dt_ms <= 0:
        raise ValueError(f"dt_ms must be positive, got {dt_ms}")
    omega_dt = 2.0 * math.pi * cutoff_hz * (dt_ms / 1000.0)
    return 1.0 / (1.0 + omega_dt)


def filter_step(state: FilterState, raw: float) -> tuple[FilterState, float]:
    """Advance the smoother by one sample.

    Args:
        state: current filter state.
        raw: new raw value (ADC counts).

    Returns:
        The next state and the filtered value.
    """
    if state.last is None:
        filtered = float(raw)
    else:
        filtered = state.coefficient_a * state.last + (1.0 - state.coefficient_a) * raw
    return replace(state, last=filtered), filtered


@dataclass(frozen=True)
class CalibrationData:
    """Reference counts for the three calibration poses of one line.

    v_max: no contact (open line), v_mid: press at the insulation point,
    v_min: press at the finger base.
    """

    v_max: int
    v_mid: int
    v_min: int

    def __post_init__(self) -> None:
        if not self.v_min < self.v_mid:
            raise CalibrationError(
                f"v_min < v_mid violated (v_min={self.v_min}, v_mid={self.v_mid})"
            )
        if not self.v_mid < self.v_max:
            raise CalibrationError(
                f"v_mid < v_max violated (v_mid={self.v_mid}, v_max={self.v_max})"
            )


def calibrate(
    open_stream: Sequence[int],
    fingertip_stream: Sequence[int],
    base_stream: Sequence[int],
    window: int = 100,
) -> CalibrationData:
    """Average the last ``window`` samples of each calibration pose.

    Args:
        open_stream: counts recorded with nothing touching the line.
        fingertip_stream: counts with a firm press at the insulation point.
        base_stream: counts with a firm press at the finger base.
        window: samples to average per pose.

    Returns:
        The rounded reference triplet.

    Raises:
        ValueError: a stream is shorter than the window.
        CalibrationError: the averaged poses are not strictly ordered.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    streams = {
        "open": open_stream,
        "fingertip": fingertip_stream,
        "base": base_stream,
    }
    means: dict[str, int] = {}
    for name, stream in streams.items():
        if len(stream) < window:
            raise ValueError(
                f"{name} stream has {len(stream)} samples; need >= {window}"
            )
        means[name] = round(statistics.fmean(stream[-window:]))
    return CalibrationData(v_max=means["open"], v_mid=means["fingertip"], v_min=means["base"])


def auto_calibration(spec: NerveLineSpec, window: int = 100) -> CalibrationData:
    """Calibration a simulated line would produce under noise-free capture."""
    open_counts = sense(spec, ContactSet()).counts
    tip_pose = ContactSet(
        contacts=(ContactPoint(spec.effective_length_mm),), quantize_to_spikes=False
    )
    base_pose = ContactSet(contacts=(ContactPoint(0.0),), quantize_to_spikes=False)
    return calibrate(
        [open_counts] * window,
        [sense(spec, tip_pose).counts] * window,
        [sense(spec, base_pose).counts] * window,
        window=window,
    )


@dataclass(frozen=True)
class ContactEstimate:
    """Estimator output for one sample: ratio, regime and the input value."""

    p: float
    regime: Regime
    v: float
    t_ms: int = 0


def estimate_p(v: float, calibration: CalibrationData, t_ms: int = 0) -> ContactEstimate:
    """Map a (filtered) ADC value to the contact-point ratio.

    Piecewise linear in the calibration triplet: values between v_mid and
    v_max land on the fingertip branch (p in (80, 100)); values at or below
    v_mid land on the body branch (p in [0, 80]), clamped at 0 below v_min.
    Values at or above v_max mean no contact and report p = 100.

    Args:
        v: filtered ADC value in counts.
        calibration: reference triplet for this line.
        t_ms: timestamp carried through to the estimate.
    """
    v_max = float(calibration.v_max)
    v_mid = float(calibration.v_mid)
    v_min = float(calibration.v_min)
    if v >= v_max:
        return ContactEstimate(p=100.0, regime=Regime.NONE, v=v, t_ms=t_ms)
    if v > v_mid:
        tip_span = 100.0 - BODY_SPLIT_P
        p = 100.0 - (v_max - v) / (v_max - v_mid) * tip_span
        return ContactEstimate(p=p, regime=Regime.FINGERTIP, v=v, t_ms=t_ms)
    p = (v - v_min) / (v_mid - v_min) * BODY_SPLIT_P
    p = min(max(p, 0.0), BODY_SPLIT_P)
    return ContactEstimate(p=p, regime=Regime.BODY, v=v, t_ms=t_ms)


def detect_touch(estimate: ContactEstimate, threshold_p: float = 90.0) -> bool:
    """True when the ratio has dropped below the touch threshold."""
    if not 0.0 < threshold_p < 100.0:
        raise ValueError(f"threshold_p must be in (0, 100), got {threshold_p}")
    return estimate.p < threshold_p


def position_reached(
    estimates: Sequence[ContactEstimate],
    threshold_p: float = 50.0,
    window_n: int = 10,
) -> bool:
    """True when the mean ratio over the last ``window_n`` estimates is below threshold.

    Averaging a window rather than testing single samples keeps the check
    robust against quantization flicker near the threshold.  False until
    the window has filled, and false if any sample in the window shows no
    contact at all: a window mean dragged down by dropouts is not a hold.
    """
    if not 0.0 < threshold_p < 100.0:
        raise ValueError(f"threshold_p must be in (0, 100), got {threshold_p}")
    if window_n < 1:
        raise ValueError(f"window_n must be >= 1, got {window_n}")
    if len(estimates) < window_n:
        return False
    window = estimates[-window_n:]
    if any(e.regime is Regime.NONE for e in window):
        return False
    mean_p = statistics.fmean(e.p for e in window)
    return mean_p < threshold_p


@dataclass(frozen=True)
class PositionEstimate:
    """Ratio converted to millimetres from the base, with the zone it fell in."""

    position_mm: float
    zone: Regime


def map_p_to_mm(p: float, spec: NerveLineSpec) -> PositionEstimate:
    """Convert a contact-point ratio to a distance along the finger.

    The body branch spans the sensitive region linearly, so p = 80 lands at
    the insulation point; the fingertip branch continues at the same scale
    into the folded-out tip band.
    """
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"p must be in [0, 100], got {p}")
    position = p / BODY_SPLIT_P * spec.effective_length_mm
    zone = Regime.BODY if p <= BODY_SPLIT_P else Regime.FINGERTIP
    return PositionEstimate(position_mm=position, zone=zone)


_CAL_KEYS = ("sensor", "v_max", "v_mid", "v_min")


def write_calibration(path: str | Path, table: Mapping[int, CalibrationData]) -> None:
    """Write calibration triplets as flat key=value lines, one group per sensor."""
    lines: list[str] = []
    for sensor in sorted(table):
        data = table[sensor]
        lines.append(f"sensor={sensor}")
        lines.append(f"v_max={data.v_max}")
        lines.append(f"v_mid={data.v_mid}")
        lines.append(f"v_min={data.v_min}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _parse_int(raw: str, lineno: int) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise ValueError(f"line {lineno}: expected an integer, got {raw!r}") from None


def read_calibration(path: str | Path) -> dict[int, CalibrationData]:
    """Read calibration triplets written by write_calibration.

    The format is strict: groups of exactly four ``key=value`` lines in the
    order sensor, v_max, v_mid, v_min, with integer values and no blanks.

    Raises:
        ValueError: malformed line, wrong key order, duplicate sensor, or
            a triplet that fails the ordering check; messages carry the
            line number.
    """
    text = Path(path).read_text(encoding="ascii")
    table: dict[int, CalibrationData] = {}
    fields: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            raise ValueError(f"line {lineno}: blank line not allowed")
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key=value, got {raw_line!r}")
        expected = _CAL_KEYS[len(fields)]
        if key != expected:
            raise ValueError(f"line {lineno}: expected key {expected!r}, got {key!r}")
        fields[key] = _parse_int(value, lineno)
        if len(fields) == len(_CAL_KEYS):
            sensor = fields["sensor"]
            if sensor in table:
                raise ValueError(f"line {lineno}: duplicate sensor {sensor}")
            try:
                table[sensor] = CalibrationData(
                    v_max=fields["v_max"], v_mid=fields["v_mid"], v_min=fields["v_min"]
                )
            except CalibrationError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            fields = {}
    if fields:
        raise ValueError(f"line {len(text.splitlines())}: incomplete sensor group")
    return table
