"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration value; the message names the offending field path."""


class ScenarioError(ValueError):
    """Scenario file parses as YAML but violates the scenario schema."""


class CalibrationError(ValueError):
    """Calibration voltages do not satisfy v_min < v_mid < v_max."""
