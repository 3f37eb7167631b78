"""Wire-driven hand model: pulley kinematics, postures, self-contact masking.

Joints are driven by wires wound on motor pulleys, so wire displacement and
joint angle are related by x = r * theta.  The hand has five fingers; the
index and middle fingers carry nerve lines on both palm and dorsal sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ConfigError

FINGER_NAMES = ("thumb", "index", "middle", "ring", "little")
ACTUATOR_ROLES = ("bend", "extend", "internal_rotation")

DEFAULT_JOINT_LIMITS = (0.0, math.pi / 2)
DEFAULT_PULLEY_RADIUS_MM = 5.0


@dataclass(frozen=True)
class FingerSpec:
    """One finger: its name, sensor coverage, and joint width range."""

    name: str
    sensor_length_mm: float | None = None
    joint_width_range_mm: tuple[float, float] = (9.0, 14.0)

    def __post_init__(self) -> None:
        if self.name not in FINGER_NAMES:
            raise ConfigError(f"unknown finger name {self.name!r}")
        if self.sensor_length_mm is not None and self.sensor_length_mm <= 0:
            raise ConfigError(f"sensor_length_mm must be positive, got {self.sensor_length_mm}")
        low, high = self.joint_width_range_mm
        if not 0 < low <= high:
            raise ConfigError(f"joint_width_range_mm must be 0 < low <= high, got {self.joint_width_range_mm}")


@dataclass(frozen=True)
class ActuatorSpec:
    """One wire actuator: pulley radius, role, and the joint it drives."""

    id: int
    role: str
    pulley_radius_mm: float = DEFAULT_PULLEY_RADIUS_MM
    joint_ref: str | None = None
    displacement_table: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if self.role not in ACTUATOR_ROLES:
            raise ConfigError(f"actuator {self.id}: unknown role {self.role!r}")
        if self.pulley_radius_mm <= 0:
            raise ConfigError(
                f"actuator {self.id}: pulley_radius_mm must be positive, got {self.pulley_radius_mm}"
            )


@dataclass
class JointState:
    """Target joint angles in radians, keyed by finger for flexion."""

    flexion_rad: dict[str, float] = field(default_factory=dict)
    wrist_rotation_rad: float = 0.0
    thumb_internal_rotation_rad: float = 0.0


@dataclass(frozen=True)
class Hand:
    """A finger set plus its wire actuators."""

    fingers: tuple[FingerSpec, ...]
    actuators: tuple[ActuatorSpec, ...]

    def __post_init__(self) -> None:
        ids = [a.id for a in self.actuators]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"actuator ids must be unique, got {ids}")


def wire_displacement(theta_rad: float, pulley_radius_mm: float) -> float:
    """Wire travel for a joint angle: x = r * theta."""
    if pulley_radius_mm <= 0:
        raise ConfigError(f"pulley_radius_mm must be positive, got {pulley_radius_mm}")
    return pulley_radius_mm * theta_rad


def wire_to_angle(
    displacement_mm: float,
    pulley_radius_mm: float,
    limits: tuple[float, float] = DEFAULT_JOINT_LIMITS,
) -> tuple[float, bool]:
    """Joint angle for a wire travel, clamped to the joint limits.

    Returns the clamped angle and a flag saying whether clamping happened.
    """
    if pulley_radius_mm <= 0:
        raise ConfigError(f"pulley_radius_mm must be positive, got {pulley_radius_mm}")
    low, high = limits
    if not low < high:
        raise ConfigError(f"joint limits must satisfy low < high, got {limits}")
    theta = displacement_mm / pulley_radius_mm
    clamped = min(max(theta, low), high)
    return clamped, clamped != theta


def _joint_angle(state: JointState, joint_ref: str) -> float:
    if joint_ref == "wrist_rotation":
        return state.wrist_rotation_rad
    if joint_ref == "thumb_internal_rotation":
        return state.thumb_internal_rotation_rad
    finger, sep, kind = joint_ref.rpartition("_")
    if sep and kind == "flexion" and finger in state.flexion_rad:
        return state.flexion_rad[finger]
    raise KeyError(joint_ref)


def posture_command(
    posture: str,
    actuators: tuple[ActuatorSpec, ...],
    joint_state: JointState | None = None,
) -> dict[int, float]:
    """Wire displacements that realize a named posture.

    Each actuator contributes its table entry for the posture if it has
    one; otherwise the displacement is derived from ``joint_state`` through
    the actuator's joint reference and pulley radius.

    Raises:
        ConfigError: an actuator has neither a table entry nor a derivable
            joint angle for this posture.
    """
    command: dict[int, float] = {}
    for actuator in actuators:
        table = actuator.displacement_table
        if table is not None and posture in table:
            command[actuator.id] = table[posture]
            continue
        if joint_state is not None and actuator.joint_ref is not None:
            try:
                theta = _joint_angle(joint_state, actuator.joint_ref)
            except KeyError:
                raise ConfigError(
                    f"actuator {actuator.id}: no displacement for posture {posture!r} "
                    f"and joint {actuator.joint_ref!r} is not in the target state"
                ) from None
            command[actuator.id] = wire_displacement(theta, actuator.pulley_radius_mm)
            continue
        raise ConfigError(f"actuator {actuator.id}: no displacement for posture {posture!r}")
    return command


def self_contact_mask(state: JointState, sensor_count: int = 4) -> tuple[bool, ...]:
    """Per-sensor flag: True when the sensor stays valid under self-contact.

    The string rail folds outward over the fingertip, so curling a finger
    presses skin on skin without bridging any line; no posture invalidates
    a sensor.
    """
    if sensor_count < 0:
        raise ValueError(f"sensor_count must be non-negative, got {sensor_count}")
    return (True,) * sensor_count


def default_hand() -> Hand:
    """The prototype hand: five fingers, nerve lines on index and middle, seven wires."""
    fingers = tuple(
        FingerSpec(name=name, sensor_length_mm=80.0 if name in ("index", "middle") else None)
        for name in FINGER_NAMES
    )
    actuators = (
        ActuatorSpec(id=0, role="bend", joint_ref="thumb_flexion"),
        ActuatorSpec(id=1, role="bend", joint_ref="index_flexion"),
        ActuatorSpec(id=2, role="bend", joint_ref="middle_flexion"),
        ActuatorSpec(id=3, role="extend", joint_ref="thumb_flexion"),
        ActuatorSpec(id=4, role="extend", joint_ref="index_flexion"),
        ActuatorSpec(id=5, role="extend", joint_ref="middle_flexion"),
        ActuatorSpec(id=6, role="internal_rotation", joint_ref="thumb_internal_rotation"),
    )
    return Hand(fingers=fingers, actuators=actuators)
