"""
Circuit intermediate representation and its dense-matrix semantics.

Conventions:
    - qubit 0 is the least-significant bit of a computational-basis index
    - a gate's local matrix is indexed little-endian over its operand list
      (operand 0 is bit 0), so for CX(c, t) the control is local bit 0
    - RZ(t) = exp(-i t Z / 2), Phase(t) = diag(1, e^{i t})
    - CRZ applies RZ on the target when the control is |1>
    - RZX(t) = exp(-i t/2 Z_control X_target)
    - gates list is time ordered; the earliest gate acts first

The dense helpers here are the correctness oracle for every pass and for the
statevector kernels; they favour clarity over speed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .errors import SimulationBoundError, UnsupportedGateError, ValidationError

MAX_QUBITS = 24
ORACLE_MAX_QUBITS = 12
UNITARY_ATOL = 1e-10


class GateKind(str, Enum):
    X = "X"
    SX = "SX"
    H = "H"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    PHASE = "Phase"
    CX = "CX"
    CRZ = "CRZ"
    CPHASE = "CPhase"
    RZX = "RZX"
    MCU = "MCU"
    BARRIER = "Barrier"


class Variant(str, Enum):
    STANDARD = "standard"
    INVERSE = "inverse"


SELF_ADJOINT = frozenset({GateKind.X, GateKind.H, GateKind.CX})
ROTATIONS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.PHASE,
                       GateKind.CRZ, GateKind.CPHASE, GateKind.RZX})
BASIS = frozenset({GateKind.RZ, GateKind.RX, GateKind.SX, GateKind.X, GateKind.CX})

_ARITY = {
    GateKind.X: 1, GateKind.SX: 1, GateKind.H: 1, GateKind.RX: 1, GateKind.RY: 1,
    GateKind.RZ: 1, GateKind.PHASE: 1, GateKind.CX: 2, GateKind.CRZ: 2,
    GateKind.CPHASE: 2, GateKind.RZX: 2,
}


def _as_unitary2(u) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
    m = np.asarray(u, dtype=complex)
    if m.shape != (2, 2):
        raise ValidationError(f"MCU target must be 2x2, got shape {m.shape}")
    if not np.allclose(m.conj().T @ m, np.eye(2), rtol=0, atol=UNITARY_ATOL):
        raise ValidationError("MCU target matrix is not unitary")
    return ((complex(m[0, 0]), complex(m[0, 1])), (complex(m[1, 0]), complex(m[1, 1])))


@dataclass(frozen=True)
class Gate:
    """One gate application. ``qubits`` lists controls first, target last."""

    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    variant: Variant = Variant.STANDARD
    pair_id: int | None = None
    unitary: tuple[tuple[complex, complex], tuple[complex, complex]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if any(q < 0 for q in self.qubits):
            raise ValidationError(f"negative qubit index in {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValidationError(f"{self.kind.value}: repeated qubit operand {self.qubits}")
        if not all(math.isfinite(p) for p in self.params):
            raise ValidationError(f"{self.kind.value}: non-finite parameter {self.params}")

        arity = _ARITY.get(self.kind)
        if arity is not None and len(self.qubits) != arity:
            raise ValidationError(f"{self.kind.value} takes {arity} qubit(s), got {len(self.qubits)}")
        n_params = 1 if self.kind in ROTATIONS else 0
        if len(self.params) != n_params:
            raise ValidationError(f"{self.kind.value} takes {n_params} parameter(s), got {len(self.params)}")

        if self.kind is GateKind.MCU:
            if not self.qubits:
                raise ValidationError("MCU needs at least a target qubit")
            if self.unitary is None:
                raise ValidationError("MCU requires a target unitary")
            object.__setattr__(self, "unitary", _as_unitary2(self.unitary))
        elif self.unitary is not None:
            raise ValidationError(f"{self.kind.value} does not take a unitary")
        if self.kind is GateKind.BARRIER and not self.qubits:
            raise ValidationError("Barrier needs at least one qubit")

        if self.variant is Variant.INVERSE and not self.self_adjoint:
            raise ValidationError(f"{self.kind.value} is not self-adjoint; inverse variant is illegal")

    @property
    def self_adjoint(self) -> bool:
        if self.kind in SELF_ADJOINT:
            return True
        if self.kind is GateKind.MCU:
            w = self.target_matrix
            return bool(np.allclose(w, w.conj().T, rtol=0, atol=UNITARY_ATOL))
        return False

    @property
    def is_inverse(self) -> bool:
        return self.variant is Variant.INVERSE

    @property
    def target_matrix(self) -> np.ndarray:
        if self.unitary is None:
            raise ValidationError(f"{self.kind.value} has no target unitary")
        return np.array(self.unitary, dtype=complex)

    @property
    def n_controls(self) -> int:
        return len(self.qubits) - 1

    def marked(self, variant: Variant, pair_id: int | None) -> "Gate":
        return replace(self, variant=variant, pair_id=pair_id)

    def unmarked(self) -> "Gate":
        return replace(self, variant=Variant.STANDARD, pair_id=None)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "params": list(self.params), "qubits": list(self.qubits),
             "variant": self.variant.value, "pair_id": self.pair_id}
        if self.unitary is not None:
            d["unitary"] = [[[z.real, z.imag] for z in row] for row in self.unitary]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        try:
            unitary = d.get("unitary")
            if unitary is not None:
                unitary = [[complex(re, im) for re, im in row] for row in unitary]
            return cls(GateKind(d["kind"]), tuple(d["qubits"]), tuple(d.get("params", ())),
                       Variant(d.get("variant", "standard")), d.get("pair_id"), unitary)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed gate record {d!r}: {exc}") from exc


# Constructors, named after the gate they build.
def x(q): return Gate(GateKind.X, (q,))
def sx(q): return Gate(GateKind.SX, (q,))
def h(q): return Gate(GateKind.H, (q,))
def rx(theta, q): return Gate(GateKind.RX, (q,), (theta,))
def ry(theta, q): return Gate(GateKind.RY, (q,), (theta,))
def rz(theta, q): return Gate(GateKind.RZ, (q,), (theta,))
def phase(theta, q): return Gate(GateKind.PHASE, (q,), (theta,))
def cx(c, t): return Gate(GateKind.CX, (c, t))
def crz(theta, c, t): return Gate(GateKind.CRZ, (c, t), (theta,))
def cphase(theta, c, t): return Gate(GateKind.CPHASE, (c, t), (theta,))
def rzx(theta, c, t): return Gate(GateKind.RZX, (c, t), (theta,))
def barrier(*qs): return Gate(GateKind.BARRIER, tuple(qs))


def mcu(unitary, controls: Iterable[int], target: int) -> Gate:
    return Gate(GateKind.MCU, (*controls, target), unitary=unitary)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not isinstance(self.n_qubits, (int, np.integer)) or self.n_qubits < 1:
            raise ValidationError(f"n_qubits must be a positive integer, got {self.n_qubits!r}")
        if self.n_qubits > MAX_QUBITS:
            raise SimulationBoundError(f"{self.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit bound")
        partners: dict[int, tuple[int, ...]] = {}
        for i, g in enumerate(self.gates):
            if not isinstance(g, Gate):
                raise ValidationError(f"gate {i} is not a Gate: {g!r}")
            if any(q >= self.n_qubits for q in g.qubits):
                raise ValidationError(f"gate {i} ({g.kind.value}) uses qubit outside 0..{self.n_qubits - 1}")
            if g.pair_id is not None:
                first = partners.setdefault(g.pair_id, g.qubits)
                if first != g.qubits:
                    raise ValidationError(f"pair {g.pair_id} members act on different qubits: {first} vs {g.qubits}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(max(self.n_qubits, other.n_qubits), self.gates + other.gates)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.n_qubits, tuple(gates))

    def count(self, kind: GateKind) -> int:
        return sum(g.kind is kind for g in self.gates)

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "gates": [g.to_dict() for g in self.gates]}

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        try:
            return cls(int(d["n_qubits"]), tuple(Gate.from_dict(g) for g in d["gates"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed circuit document: {exc}") from exc

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"circuit JSON does not parse: {exc}") from exc


def adjoint_gate(g: Gate) -> Gate:
    """Gate implementing g^dagger; self-adjoint members of a pair swap variant."""
    if g.kind in ROTATIONS:
        return replace(g, params=(-g.params[0],))
    if g.kind is GateKind.SX:
        # SX^dagger = RX(-pi/2) up to global phase
        return rx(-math.pi / 2, g.qubits[0])
    if g.kind is GateKind.MCU:
        w = g.target_matrix.conj().T
        if g.self_adjoint:
            return _swap_variant(g)
        return replace(g, unitary=w)
    if g.kind in SELF_ADJOINT:
        return _swap_variant(g)
    return g


def _swap_variant(g: Gate) -> Gate:
    if g.pair_id is None:
        return g
    flipped = Variant.STANDARD if g.is_inverse else Variant.INVERSE
    return replace(g, variant=flipped)


def adjoint(c: Circuit) -> Circuit:
    """Reverse the gate list and take each gate's adjoint."""
    return c.with_gates(adjoint_gate(g) for g in reversed(c.gates))


# Dense semantics ----------------------------------------------------------

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)


def rx_matrix(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def phase_matrix(t: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * t)]).astype(complex)


def controlled_matrix(w: np.ndarray, n_controls: int) -> np.ndarray:
    """Local matrix of an n_controls-controlled W; controls are the low bits."""
    dim = 1 << (n_controls + 1)
    out = np.eye(dim, dtype=complex)
    lo = (1 << n_controls) - 1          # all controls set, target 0
    hi = lo | (1 << n_controls)         # all controls set, target 1
    out[np.ix_([lo, hi], [lo, hi])] = w
    return out


def gate_matrix(g: Gate) -> np.ndarray:
    """Local 2^k x 2^k matrix of g over its k operands (operand 0 = bit 0)."""
    k = g.kind
    if k is GateKind.X:
        return _X.copy()
    if k is GateKind.SX:
        return _SX.copy()
    if k is GateKind.H:
        return _H.copy()
    if k is GateKind.RX:
        return rx_matrix(g.params[0])
    if k is GateKind.RY:
        return ry_matrix(g.params[0])
    if k is GateKind.RZ:
        return rz_matrix(g.params[0])
    if k is GateKind.PHASE:
        return phase_matrix(g.params[0])
    if k is GateKind.CX:
        return controlled_matrix(_X, 1)
    if k is GateKind.CRZ:
        return controlled_matrix(rz_matrix(g.params[0]), 1)
    if k is GateKind.CPHASE:
        return controlled_matrix(phase_matrix(g.params[0]), 1)
    if k is GateKind.RZX:
        t = g.params[0]
        zx = np.kron(_X, _Z)  # Z on local bit 0 (control), X on bit 1 (target)
        return math.cos(t / 2) * np.eye(4) - 1j * math.sin(t / 2) * zx
    if k is GateKind.MCU:
        return controlled_matrix(g.target_matrix, g.n_controls)
    if k is GateKind.BARRIER:
        return np.eye(1 << len(g.qubits), dtype=complex)
    raise UnsupportedGateError(f"no matrix for gate kind {k!r}")


def embed(local: np.ndarray, qubits: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Embed a local operator on ``qubits`` into the full 2^n space."""
    if any(q >= n_qubits or q < 0 for q in qubits):
        raise ValidationError(f"qubits {qubits} out of range for {n_qubits} qubits")
    dim = 1 << n_qubits
    cols = np.arange(dim)
    local_col = np.zeros(dim, dtype=np.int64)
    mask = 0
    for j, q in enumerate(qubits):
        local_col |= ((cols >> q) & 1) << j
        mask |= 1 << q
    rest = cols & ~mask
    out = np.zeros((dim, dim), dtype=complex)
    for j in range(1 << len(qubits)):
        rows = rest.copy()
        for b, q in enumerate(qubits):
            if (j >> b) & 1:
                rows |= 1 << q
        out[rows, cols] = local[j, local_col]
    return out


def unitary_of_gate(g: Gate, n_qubits: int) -> np.ndarray:
    if n_qubits > ORACLE_MAX_QUBITS:
        raise SimulationBoundError(f"dense oracle limited to {ORACLE_MAX_QUBITS} qubits")
    return embed(gate_matrix(g), g.qubits, n_qubits)


def unitary_of_circuit(c: Circuit) -> np.ndarray:
    if c.n_qubits > ORACLE_MAX_QUBITS:
        raise SimulationBoundError(f"dense oracle limited to {ORACLE_MAX_QUBITS} qubits, got {c.n_qubits}")
    u = np.eye(1 << c.n_qubits, dtype=complex)
    for g in c.gates:
        if g.kind is GateKind.BARRIER:
            continue
        u = unitary_of_gate(g, c.n_qubits) @ u
    return u


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    overlap = np.vdot(b, a)
    if abs(overlap) < 1e-12:
        return False
    ph = overlap / abs(overlap)
    return bool(np.max(np.abs(a - ph * b)) <= tol)
