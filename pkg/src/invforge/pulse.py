"""
Pulse-level model: channels, schedules, inverse schedules, calibration.

Rotation angles are tied to pulse parameters by a linear map,

    nominal_angle = kappa[channel] * Re(amplitude * e^{i phase}) * duration,

rather than by integrating a Hamiltonian over the waveform. Shapes are
carried as metadata only. Drive pulses realise X rotations on their qubit,
control-channel pulses realise ZX rotations on the bound (control, target)
pair, and RZ is a zero-duration VirtualZ frame change.
"""
from __future__ import annotations

import cmath
import json
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .circuit import (Circuit, Gate, GateKind, embed, equal_up_to_global_phase,
                      gate_matrix, cx as cx_gate, sx as sx_gate, x as x_gate)
from .errors import CalibrationError, UnsupportedGateError, ValidationError

CAL_ENV = "INVFORGE_CAL"
TEMPLATE_ATOL = 1e-8


class ChannelKind(str, Enum):
    DRIVE = "D"
    CONTROL = "U"


class Axis(str, Enum):
    X = "X"
    ZX = "ZX"
    Z = "Z"


class Shape(str, Enum):
    GAUSSIAN = "Gaussian"
    GAUSSIAN_SQUARE = "GaussianSquare"
    DRAG = "Drag"
    VIRTUAL_Z = "VirtualZ"


@dataclass(frozen=True, order=True)
class Channel:
    kind: ChannelKind
    index: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if self.index < 0:
            raise ValidationError(f"channel index must be >= 0, got {self.index}")

    @property
    def name(self) -> str:
        return f"{self.kind.value}{self.index}"

    @classmethod
    def parse(cls, name: str) -> "Channel":
        try:
            return cls(ChannelKind(name[0]), int(name[1:]))
        except (ValueError, IndexError) as exc:
            raise ValidationError(f"bad channel name {name!r}") from exc


@dataclass(frozen=True)
class Primitive:
    """Rotation exp(-i angle/2 * G) with G the Pauli product named by ``axis``."""

    axis: Axis
    qubits: tuple[int, ...]
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != (2 if self.axis is Axis.ZX else 1):
            raise ValidationError(f"{self.axis.value} primitive on wrong qubit count {self.qubits}")

    def negated(self) -> "Primitive":
        return replace(self, angle=-self.angle)

    def to_dict(self) -> dict:
        return {"axis": self.axis.value, "qubits": list(self.qubits), "nominal_angle": self.angle}

    @classmethod
    def from_dict(cls, d: dict) -> "Primitive":
        return cls(Axis(d["axis"]), tuple(d["qubits"]), float(d["nominal_angle"]))


@dataclass(frozen=True)
class PulseInstruction:
    channel: Channel
    t0: int
    duration: int
    amplitude: complex
    phase: float
    shape: Shape
    primitive: Primitive

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if self.duration < 0 or self.t0 < 0:
            raise ValidationError("pulse t0 and duration must be non-negative")
        if self.shape is Shape.VIRTUAL_Z and self.duration != 0:
            raise ValidationError("VirtualZ must have zero duration")
        if abs(self.amplitude) > 1 + 1e-12:
            raise ValidationError(f"|amplitude| > 1 on {self.channel.name}: {self.amplitude}")

    @property
    def end(self) -> int:
        return self.t0 + self.duration

    @property
    def is_virtual(self) -> bool:
        return self.shape is Shape.VIRTUAL_Z

    def to_dict(self) -> dict:
        return {"channel": self.channel.name, "t0": self.t0, "duration": self.duration,
                "amplitude": [self.amplitude.real, self.amplitude.imag], "phase": self.phase,
                "shape": self.shape.value, "primitive": self.primitive.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PulseInstruction":
        re, im = d["amplitude"]
        return cls(Channel.parse(d["channel"]), int(d["t0"]), int(d["duration"]), complex(re, im),
                   float(d["phase"]), Shape(d["shape"]), Primitive.from_dict(d["primitive"]))


@dataclass(frozen=True)
class PulseSchedule:
    """Instructions in time order; list order is authoritative for equal t0."""

    instructions: tuple[PulseInstruction, ...]
    gate: Gate | None = None

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        last_end: dict[Channel, int] = {}
        prev_t0 = 0
        for ins in self.instructions:
            if ins.t0 < prev_t0:
                raise ValidationError("schedule instructions are not ordered by t0")
            if ins.t0 < last_end.get(ins.channel, 0):
                raise ValidationError(f"overlapping instructions on {ins.channel.name}")
            last_end[ins.channel] = ins.end
            prev_t0 = ins.t0

    @property
    def duration(self) -> int:
        return max((ins.end for ins in self.instructions), default=0)

    def to_dict(self) -> dict:
        return {"gate": None if self.gate is None else self.gate.to_dict(),
                "duration": self.duration,
                "instructions": [ins.to_dict() for ins in self.instructions],
                "primitives": [p.to_dict() for p in schedule_to_primitives(self)]}

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSchedule":
        gate = None if d.get("gate") is None else Gate.from_dict(d["gate"])
        return cls(tuple(PulseInstruction.from_dict(i) for i in d["instructions"]), gate)


# Calibration --------------------------------------------------------------

ROLES = ("drive:qubit", "drive:control", "drive:target", "control")


@dataclass(frozen=True)
class TemplatePulse:
    """A calibrated pulse with its channel given by role, not by index."""

    role: str
    t0: int
    duration: int
    amplitude: complex
    phase: float
    shape: Shape
    angle: float = 0.0  # VirtualZ only

    @classmethod
    def from_dict(cls, d: dict) -> "TemplatePulse":
        try:
            role = d["channel"]
            if role not in ROLES:
                raise CalibrationError(f"unknown channel role {role!r}; expected one of {ROLES}")
            amp = complex(*d.get("amplitude", (0.0, 0.0)))
            ph = float(d.get("phase", 0.0))
            if abs(abs(ph) - math.pi) < 1e-12:
                amp, ph = -amp, 0.0
            return cls(role, int(d["t0"]), int(d["duration"]), amp, ph,
                       Shape(d["shape"]), float(d.get("angle", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, CalibrationError):
                raise
            raise CalibrationError(f"malformed template instruction {d!r}: {exc}") from exc

    def to_dict(self) -> dict:
        d = {"channel": self.role, "t0": self.t0, "duration": self.duration,
             "amplitude": [self.amplitude.real, self.amplitude.imag], "phase": self.phase,
             "shape": self.shape.value}
        if self.shape is Shape.VIRTUAL_Z:
            d["angle"] = self.angle
        return d


# template name -> (gate it must reproduce, roles it binds)
TEMPLATE_GATES = {"x": x_gate(0), "sx": sx_gate(0), "cx": cx_gate(0, 1)}


@dataclass(frozen=True)
class CalibrationConfig:
    dt: float
    kappa: dict[str, float]
    control_channels: dict[tuple[int, int], int]
    templates: dict[str, tuple[TemplatePulse, ...]]
    source: str = field(default="<memory>", compare=False)

    def kappa_for(self, ch: Channel) -> float:
        if ch.name in self.kappa:
            return self.kappa[ch.name]
        if ch.kind.value in self.kappa:
            return self.kappa[ch.kind.value]
        raise CalibrationError(f"no kappa for channel {ch.name}")

    def control_channel(self, control: int, target: int) -> Channel:
        try:
            return Channel(ChannelKind.CONTROL, self.control_channels[(control, target)])
        except KeyError:
            raise CalibrationError(f"no control channel bound to pair ({control}, {target})") from None

    def pair_of(self, ch: Channel) -> tuple[int, int]:
        for pair, idx in self.control_channels.items():
            if idx == ch.index:
                return pair
        raise CalibrationError(f"control channel {ch.name} is not bound to a qubit pair")

    def instantiate(self, name: str, qubits: Sequence[int], scale: float = 1.0) -> tuple[PulseInstruction, ...]:
        """Bind a template to concrete qubits; ``scale`` multiplies every amplitude."""
        if name not in self.templates:
            raise CalibrationError(f"calibration has no {name!r} template")
        out = []
        for tp in self.templates[name]:
            ch = self._channel(tp.role, qubits)
            amp = tp.amplitude * scale
            if tp.shape is Shape.VIRTUAL_Z:
                prim = Primitive(Axis.Z, (ch.index,), tp.angle)
            else:
                angle = self.kappa_for(ch) * (amp * cmath.exp(1j * tp.phase)).real * tp.duration
                if ch.kind is ChannelKind.CONTROL:
                    prim = Primitive(Axis.ZX, self.pair_of(ch), angle)
                else:
                    prim = Primitive(Axis.X, (ch.index,), angle)
            out.append(PulseInstruction(ch, tp.t0, tp.duration, amp, tp.phase, tp.shape, prim))
        return tuple(out)

    def _channel(self, role: str, qubits: Sequence[int]) -> Channel:
        if role == "drive:qubit":
            return Channel(ChannelKind.DRIVE, qubits[0])
        if len(qubits) != 2:
            raise CalibrationError(f"role {role!r} needs a (control, target) pair")
        if role == "drive:control":
            return Channel(ChannelKind.DRIVE, qubits[0])
        if role == "drive:target":
            return Channel(ChannelKind.DRIVE, qubits[1])
        return self.control_channel(qubits[0], qubits[1])

    def to_dict(self) -> dict:
        return {"dt": self.dt, "kappa": dict(self.kappa),
                "control_channels": [{"index": i, "control": c, "target": t}
                                     for (c, t), i in sorted(self.control_channels.items(), key=lambda kv: kv[1])],
                "templates": {k: [tp.to_dict() for tp in v] for k, v in self.templates.items()}}


def calibration_from_dict(d: dict, source: str = "<memory>", check: bool = True) -> CalibrationConfig:
    try:
        bindings = {}
        for entry in d["control_channels"]:
            pair = (int(entry["control"]), int(entry["target"]))
            if pair[0] == pair[1]:
                raise CalibrationError(f"control channel {entry['index']} binds a qubit to itself")
            bindings[pair] = int(entry["index"])
        if len(set(bindings.values())) != len(bindings):
            raise CalibrationError("a control channel index is bound to more than one pair")
        templates = {}
        for name, instrs in d["templates"].items():
            if not instrs:
                raise CalibrationError(f"template {name!r} has no instructions")
            templates[name] = tuple(sorted((TemplatePulse.from_dict(i) for i in instrs), key=lambda tp: tp.t0))
        cal = CalibrationConfig(float(d["dt"]), {str(k): float(v) for k, v in d["kappa"].items()},
                                bindings, templates, source)
    except CalibrationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CalibrationError(f"malformed calibration {source}: {exc}") from exc
    if check:
        check_templates(cal)
    return cal


def _template_targets(cal: CalibrationConfig, name: str) -> list[tuple[int, ...]]:
    if name == "cx":
        return sorted(cal.control_channels)
    drives = {int(k[1:]) for k in cal.kappa if k.startswith("D") and k[1:].isdigit()}
    drives |= {q for pair in cal.control_channels for q in pair}
    return [(q,) for q in sorted(drives or {0})]


def check_templates(cal: CalibrationConfig) -> None:
    """Each template must lower, noise-free, to its gate up to global phase."""
    for name, ref in TEMPLATE_GATES.items():
        if name not in cal.templates:
            raise CalibrationError(f"calibration is missing the {name!r} template")
        target = gate_matrix(ref)
        for qubits in _template_targets(cal, name):
            sched = PulseSchedule(cal.instantiate(name, qubits))
            got = primitives_unitary(schedule_to_primitives(sched), qubits)
            if not equal_up_to_global_phase(got, target, TEMPLATE_ATOL):
                ph = np.vdot(target, got)
                dev = float(np.max(np.abs(got - (ph / abs(ph) if abs(ph) > 1e-12 else 1) * target)))
                raise CalibrationError(f"template {name!r} on qubits {qubits} does not reproduce "
                                       f"{ref.kind.value}: max deviation {dev:.3e}")


def load_calibration(path: str | os.PathLike | None = None, check: bool = True) -> CalibrationConfig:
    path = Path(path) if path is not None else default_calibration_path()
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"calibration {path} does not parse: {exc}") from exc
    return calibration_from_dict(d, str(path), check)


def default_calibration_path() -> Path:
    env = os.environ.get(CAL_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("invforge") / "data" / "default_calibration.json"))


@lru_cache(maxsize=8)
def _load_cached(path: str) -> CalibrationConfig:
    return load_calibration(path)


def default_calibration() -> CalibrationConfig:
    return _load_cached(str(default_calibration_path()))


def synthetic_calibration(n_qubits: int = 16) -> dict:
    """The bundled calibration document: all-to-all echoed-CR device.

    CX(c, t) template, in time order:
        ZX(+pi/4) on U(c,t), X(pi) on c, ZX(-pi/4) on U(c,t), X(pi) on c,
        X(-pi/2) on t, VirtualZ(-pi/2) on c
    whose product is RZ_c(-pi/2) RX_t(-pi/2) RZX(pi/2), i.e. CX up to phase.
    """
    x_amp, x_dur = 0.2, 160
    cr_amp, cr_dur = 0.3, 640
    k_drive = math.pi / (x_amp * x_dur)
    k_cr = (math.pi / 4) / (cr_amp * cr_dur)

    def drive(role, t0, amp):
        return {"channel": role, "t0": t0, "duration": x_dur, "amplitude": [amp, 0.0],
                "phase": 0.0, "shape": "Drag"}

    def cr(t0, amp):
        return {"channel": "control", "t0": t0, "duration": cr_dur, "amplitude": [amp, 0.0],
                "phase": 0.0, "shape": "GaussianSquare"}

    t = 0
    cx_t = []
    for part in (cr(0, cr_amp), drive("drive:control", 0, x_amp), cr(0, -cr_amp),
                 drive("drive:control", 0, x_amp), drive("drive:target", 0, -x_amp / 2)):
        part["t0"] = t
        t += part["duration"]
        cx_t.append(part)
    cx_t.append({"channel": "drive:control", "t0": t, "duration": 0, "amplitude": [0.0, 0.0],
                 "phase": 0.0, "shape": "VirtualZ", "angle": -math.pi / 2})

    pairs = [(c, tq) for c in range(n_qubits) for tq in range(n_qubits) if c != tq]
    return {
        "dt": 2.2222222222222221e-10,
        "kappa": {"D": k_drive, "U": k_cr},
        "control_channels": [{"index": i, "control": c, "target": tq} for i, (c, tq) in enumerate(pairs)],
        "templates": {
            "x": [drive("drive:qubit", 0, x_amp)],
            "sx": [drive("drive:qubit", 0, x_amp / 2)],
            "cx": cx_t,
        },
    }


# Schedules ----------------------------------------------------------------

def _wrap(theta: float) -> float:
    """Map to [-pi, pi], odd-symmetric so wrap(-t) == -wrap(t)."""
    return theta - 2 * math.pi * round(theta / (2 * math.pi))


def invert_schedule(s: PulseSchedule) -> PulseSchedule:
    """Reverse the instruction sequence and negate every amplitude and angle."""
    total = s.duration
    out = []
    for ins in reversed(s.instructions):
        out.append(replace(ins, t0=total - ins.end, amplitude=-ins.amplitude if not ins.is_virtual else ins.amplitude,
                           primitive=ins.primitive.negated()))
    return PulseSchedule(tuple(out), s.gate)


def schedule_for_gate(g: Gate, cal: CalibrationConfig) -> PulseSchedule:
    k = g.kind
    if k is GateKind.RZ:
        (q,) = g.qubits
        prim = Primitive(Axis.Z, (q,), g.params[0])
        ins = PulseInstruction(Channel(ChannelKind.DRIVE, q), 0, 0, 0j, 0.0, Shape.VIRTUAL_Z, prim)
        return PulseSchedule((ins,), g)
    if k is GateKind.RX:
        base = PulseSchedule(cal.instantiate("x", g.qubits, _wrap(g.params[0]) / math.pi), g)
    elif k is GateKind.X:
        base = PulseSchedule(cal.instantiate("x", g.qubits), g)
    elif k is GateKind.SX:
        base = PulseSchedule(cal.instantiate("sx", g.qubits), g)
    elif k is GateKind.CX:
        base = PulseSchedule(cal.instantiate("cx", g.qubits), g)
    else:
        raise UnsupportedGateError(f"{k.value} is not a basis gate; run the compile pipeline first")
    return invert_schedule(base) if g.is_inverse else base


def schedule_to_primitives(s: PulseSchedule) -> list[Primitive]:
    return [ins.primitive for ins in s.instructions]


def circuit_to_schedule(c: Circuit, cal: CalibrationConfig) -> list[PulseSchedule]:
    return [schedule_for_gate(g, cal) for g in c.gates]


def circuit_primitives(c: Circuit, cal: CalibrationConfig) -> list[Primitive]:
    return [p for s in circuit_to_schedule(c, cal) for p in schedule_to_primitives(s)]


# Ideal rotation matrices --------------------------------------------------

_PX = np.array([[0, 1], [1, 0]], dtype=complex)
_PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PZ = np.array([[1, 0], [0, -1]], dtype=complex)


def generator(axis: Axis, phase_offset: float = 0.0) -> np.ndarray:
    """Pauli generator of a primitive; a drive phase offset tilts X toward Y.

    ZX is returned on local (control, target) with control as bit 0.
    """
    axis = Axis(axis)
    tilted = math.cos(phase_offset) * _PX + math.sin(phase_offset) * _PY
    if axis is Axis.X:
        return tilted
    if axis is Axis.Z:
        return _PZ.copy()
    return np.kron(tilted, _PZ)


def rotation(gen: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle/2 * gen) for an involutory generator."""
    return math.cos(angle / 2) * np.eye(len(gen)) - 1j * math.sin(angle / 2) * gen


def primitive_matrix(p: Primitive) -> np.ndarray:
    return rotation(generator(p.axis), p.angle)


def primitives_unitary(prims: Iterable[Primitive], qubits: Sequence[int]) -> np.ndarray:
    """Noise-free product of primitives on the local register ``qubits``."""
    pos = {q: i for i, q in enumerate(qubits)}
    u = np.eye(1 << len(qubits), dtype=complex)
    for p in prims:
        u = embed(primitive_matrix(p), tuple(pos[q] for q in p.qubits), len(qubits)) @ u
    return u


def schedules_to_json(schedules: Sequence[PulseSchedule], n_qubits: int, indent: int | None = None) -> str:
    return json.dumps({"n_qubits": n_qubits, "schedules": [s.to_dict() for s in schedules]}, indent=indent)


def schedules_from_json(text: str) -> tuple[int, list[PulseSchedule]]:
    try:
        d = json.loads(text)
        return int(d["n_qubits"]), [PulseSchedule.from_dict(s) for s in d["schedules"]]
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"malformed schedule document: {e}") from e
