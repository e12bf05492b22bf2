"""Exception hierarchy shared by every stage."""


class InvforgeError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(InvforgeError, ValueError):
    """Malformed circuit, gate, configuration or input document."""


class UnsupportedGateError(ValidationError):
    """A pass or backend met a gate kind it cannot handle."""


class CalibrationError(ValidationError):
    """Calibration file failed to parse or its templates failed the identity check."""


class SimulationBoundError(InvforgeError):
    """Requested simulation exceeds the supported qubit count."""
