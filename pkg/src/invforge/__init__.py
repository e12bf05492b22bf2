"""
invforge: hidden-inverse compilation against coherent over-rotation errors.

A self-adjoint gate that appears twice around a small block can have its
second copy played as the time-reversed, sign-flipped pulse sequence of the
first. Both copies then carry the same systematic over-rotation, and the
pair cancels it exactly instead of doubling it.
"""
__version__ = "0.1.0"

from .circuit import Circuit, Gate, GateKind, Variant
from .decompose import PassConfig, run_pipeline
from .errors import (CalibrationError, InvforgeError, SimulationBoundError, UnsupportedGateError,
                     ValidationError)
from .noisesim import CoherentNoiseModel, Report, distribution, fidelity, run_experiment, simulate
from .pulse import CalibrationConfig, PulseSchedule, default_calibration, invert_schedule
from .synth import BenchmarkSpec, build_circuit, evaluation_suite

__all__ = [
    "BenchmarkSpec", "CalibrationConfig", "CalibrationError", "Circuit", "CoherentNoiseModel",
    "Gate", "GateKind", "InvforgeError", "PassConfig", "PulseSchedule", "Report",
    "SimulationBoundError", "UnsupportedGateError", "ValidationError", "Variant", "build_circuit",
    "default_calibration", "distribution", "evaluation_suite", "fidelity", "invert_schedule",
    "run_experiment", "run_pipeline", "simulate",
]
