"""
Gate-level lowering with hidden-inverse pair marking.

Every controlled construction here places a single-qubit block between two
CX gates on the same (control, target) operands. With ``hidden_inverse``
enabled the second CX of each such sandwich is emitted as the Inverse
variant, sharing a pair id with the first, so the pulse layer can realise
it with the time-reversed, negated schedule.

Target basis after ``run_pipeline``: RZ, RX, SX, X, CX.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np
import scipy.linalg

from .circuit import (BASIS, Circuit, Gate, GateKind, Variant, adjoint_gate, cx, h,
                      mcu, phase, rx, ry, rz)
from .errors import UnsupportedGateError, ValidationError

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class PassConfig:
    hidden_inverse: bool = True
    peephole: bool = True
    max_peephole_window: int = 32

    def __post_init__(self):
        if int(self.max_peephole_window) < 1:
            raise ValidationError("max_peephole_window must be >= 1")


@dataclass(frozen=True)
class ZYZAngles:
    """W = e^{i delta} RZ(alpha) RY(theta) RZ(beta)."""

    delta: float
    alpha: float
    theta: float
    beta: float

    def matrix(self) -> np.ndarray:
        a, t, b = self.alpha, self.theta, self.beta
        c, s = math.cos(t / 2), math.sin(t / 2)
        m = np.array([[np.exp(-0.5j * (a + b)) * c, -np.exp(-0.5j * (a - b)) * s],
                      [np.exp(0.5j * (a - b)) * s, np.exp(0.5j * (a + b)) * c]])
        return np.exp(1j * self.delta) * m


def zyz_decompose(w: np.ndarray) -> ZYZAngles:
    w = np.asarray(w, dtype=complex)
    if w.shape != (2, 2) or not np.allclose(w.conj().T @ w, np.eye(2), rtol=0, atol=1e-10):
        raise ValidationError("zyz_decompose needs a 2x2 unitary")
    delta = float(np.angle(np.linalg.det(w))) / 2
    v = w * np.exp(-1j * delta)
    theta = 2 * math.atan2(abs(v[1, 0]), abs(v[1, 1]))
    if abs(v[1, 0]) < 1e-12:
        return ZYZAngles(delta, 2 * float(np.angle(v[1, 1])), 0.0, 0.0)
    if abs(v[1, 1]) < 1e-12:
        return ZYZAngles(delta, 2 * float(np.angle(v[1, 0])), math.pi, 0.0)
    plus = 2 * float(np.angle(v[1, 1]))    # alpha + beta
    minus = 2 * float(np.angle(v[1, 0]))   # alpha - beta
    return ZYZAngles(delta, (plus + minus) / 2, theta, (plus - minus) / 2)


def principal_sqrt(u: np.ndarray) -> np.ndarray:
    """Principal square root of a unitary via its (diagonal) Schur form."""
    t, z = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    d = np.diag(t)
    assert np.max(np.abs(t - np.diag(d))) < 1e-8, "input is not normal"
    return z @ np.diag(np.sqrt(d)) @ z.conj().T


def _ids(ids: Iterator[int] | None) -> Iterator[int]:
    return itertools.count() if ids is None else ids


def _cx_pair(c: int, t: int, cfg: PassConfig, ids: Iterator[int]) -> tuple[Gate, Gate]:
    if not cfg.hidden_inverse:
        return cx(c, t), cx(c, t)
    pid = next(ids)
    return cx(c, t).marked(Variant.STANDARD, pid), cx(c, t).marked(Variant.INVERSE, pid)


def _expect(g: Gate, kind: GateKind, controls: int | None = None):
    if g.kind is not kind:
        raise ValidationError(f"expected {kind.value}, got {g.kind.value}")
    if controls is not None and g.n_controls != controls:
        raise ValidationError(f"expected {controls} control(s), got {g.n_controls}")


def decompose_crz(g: Gate, cfg: PassConfig = PassConfig(), ids: Iterator[int] | None = None) -> list[Gate]:
    _expect(g, GateKind.CRZ)
    c, t = g.qubits
    theta = math.remainder(g.params[0], 4 * math.pi)  # CRZ has period 4*pi
    first, second = _cx_pair(c, t, cfg, _ids(ids))
    return [rz(theta / 2, t), first, rz(-theta / 2, t), second]


def decompose_cphase(g: Gate, cfg: PassConfig = PassConfig(), ids: Iterator[int] | None = None) -> list[Gate]:
    _expect(g, GateKind.CPHASE)
    c, t = g.qubits
    # Phase has period 2*pi; keeping |theta/2| <= pi/2 keeps the sandwiched
    # rotation small, which is where a mirrored CX pair cancels best.
    theta = math.remainder(g.params[0], 2 * math.pi)
    first, second = _cx_pair(c, t, cfg, _ids(ids))
    return [phase(theta / 2, c), phase(theta / 2, t), first, phase(-theta / 2, t), second]


def decompose_rzx(g: Gate, cfg: PassConfig = PassConfig(), ids: Iterator[int] | None = None) -> list[Gate]:
    _expect(g, GateKind.RZX)
    c, t = g.qubits
    first, second = _cx_pair(c, t, cfg, _ids(ids))
    return [h(t), first, rz(g.params[0], t), second, h(t)]


def _lambda1(w: np.ndarray, c: int, t: int, cfg: PassConfig, ids: Iterator[int]) -> list[Gate]:
    a = zyz_decompose(w)
    first, second = _cx_pair(c, t, cfg, ids)
    return [
        rz((a.beta - a.alpha) / 2, t),                              # C
        first,
        rz(-(a.alpha + a.beta) / 2, t), ry(-a.theta / 2, t),        # B
        second,
        ry(a.theta / 2, t), rz(a.alpha, t),                         # A
        phase(a.delta, c),
    ]


def _lambda2(u: np.ndarray, c1: int, c2: int, t: int, cfg: PassConfig, ids: Iterator[int]) -> list[Gate]:
    v = principal_sqrt(u)
    first, second = _cx_pair(c1, c2, cfg, ids)
    return (_lambda1(v, c2, t, cfg, ids) + [first]
            + _lambda1(v.conj().T, c2, t, cfg, ids) + [second]
            + _lambda1(v, c1, t, cfg, ids))


def _mirror(gates: list[Gate], ids: Iterator[int]) -> list[Gate]:
    """Adjoint of a gate list with every pair relabelled to fresh ids."""
    fresh: dict[int, int] = {}
    out = []
    for g in reversed(gates):
        a = adjoint_gate(g)
        if a.pair_id is not None:
            a = replace(a, pair_id=fresh.setdefault(a.pair_id, next(ids)))
        out.append(a)
    return out


def _expand_mcu(g: Gate, cfg: PassConfig, ids: Iterator[int], depth: int = 0) -> list[Gate]:
    m = g.n_controls
    if depth > len(g.qubits):
        raise RecursionError(f"MCU recursion depth {depth} exceeds control count")
    if g.is_inverse:
        return _mirror(_expand_mcu(g.unmarked(), cfg, ids, depth), ids)
    u = g.target_matrix
    *controls, t = g.qubits
    if m == 0:
        a = zyz_decompose(u)
        return [rz(a.beta, t), ry(a.theta, t), rz(a.alpha, t)]
    if m == 1:
        return _lambda1(u, controls[0], t, cfg, ids)
    if m == 2:
        return _lambda2(u, controls[0], controls[1], t, cfg, ids)

    v = principal_sqrt(u)
    cm, rest = controls[-1], controls[:-1]
    toggle = mcu(_PAULI_X, rest, cm)
    if cfg.hidden_inverse:
        pid = next(ids)
        first = toggle.marked(Variant.STANDARD, pid)
        second = toggle.marked(Variant.INVERSE, pid)
    else:
        first = second = toggle
    return (_lambda1(v, cm, t, cfg, ids)
            + _expand_mcu(first, cfg, ids, depth + 1)
            + _lambda1(v.conj().T, cm, t, cfg, ids)
            + _expand_mcu(second, cfg, ids, depth + 1)
            + _expand_mcu(mcu(v, rest, t), cfg, ids, depth + 1))


def decompose_lambda1(g: Gate, cfg: PassConfig = PassConfig(), ids: Iterator[int] | None = None) -> list[Gate]:
    _expect(g, GateKind.MCU, 1)
    return _expand_mcu(g, cfg, _ids(ids))


def decompose_lambda2(g: Gate, cfg: PassConfig = PassConfig(), ids: Iterator[int] | None = None) -> list[Gate]:
    _expect(g, GateKind.MCU, 2)
    return _expand_mcu(g, cfg, _ids(ids))


def decompose_lambda_m(g: Gate, cfg: PassConfig = PassConfig(), ids: Iterator[int] | None = None) -> list[Gate]:
    _expect(g, GateKind.MCU)
    if g.n_controls < 3:
        raise ValidationError(f"decompose_lambda_m needs >= 3 controls, got {g.n_controls}")
    return _expand_mcu(g, cfg, _ids(ids))


def decompose_mcu(g: Gate, cfg: PassConfig = PassConfig(), ids: Iterator[int] | None = None) -> list[Gate]:
    """Expand an MCU gate of any control count into RZ/RY/Phase/CX."""
    _expect(g, GateKind.MCU)
    return _expand_mcu(g, cfg, _ids(ids))


def lower_h(g: Gate, cfg: PassConfig = PassConfig()) -> list[Gate]:
    _expect(g, GateKind.H)
    (q,) = g.qubits
    s = -1.0 if g.is_inverse else 1.0
    half = s * math.pi / 2
    return [rz(half, q), rx(half, q), rz(half, q)]


def _next_free_id(gates) -> int:
    used = [g.pair_id for g in gates if g.pair_id is not None]
    return max(used) + 1 if used else 0


def mark_hidden_inverses_peephole(c: Circuit, cfg: PassConfig = PassConfig(),
                                  ids: Iterator[int] | None = None) -> Circuit:
    """Greedily pair unmarked CX(a,b)...CX(a,b) and H...H on the same operands.

    A CX partner must sit within ``max_peephole_window`` gates and every
    intervening gate touching a or b must be single-qubit. H partners must be
    the next gate on their qubit. Already-marked gates are never touched.
    """
    gates = list(c.gates)
    ids = itertools.count(_next_free_id(gates)) if ids is None else ids
    window = cfg.max_peephole_window
    for i, g in enumerate(gates):
        if g.pair_id is not None or g.kind not in (GateKind.CX, GateKind.H):
            continue
        ops = set(g.qubits)
        for j in range(i + 1, min(len(gates), i + 1 + window)):
            o = gates[j]
            if not ops.intersection(o.qubits):
                continue
            if o.kind is g.kind and o.qubits == g.qubits and o.pair_id is None:
                pid = next(ids)
                gates[i] = g.marked(Variant.STANDARD, pid)
                gates[j] = o.marked(Variant.INVERSE, pid)
                break
            if g.kind is GateKind.H or len(o.qubits) > 1 or o.kind is GateKind.BARRIER:
                break
    return c.with_gates(gates)


_SIMPLE = {
    GateKind.CRZ: decompose_crz,
    GateKind.CPHASE: decompose_cphase,
    GateKind.RZX: decompose_rzx,
    GateKind.MCU: decompose_mcu,
}


def _lower_once(g: Gate, cfg: PassConfig, ids: Iterator[int]) -> list[Gate]:
    if g.kind in BASIS or g.kind is GateKind.H:
        return [g]
    if g.kind in _SIMPLE:
        return _SIMPLE[g.kind](g, cfg, ids)
    if g.kind is GateKind.RY:
        (q,) = g.qubits
        return [rz(-math.pi / 2, q), rx(g.params[0], q), rz(math.pi / 2, q)]
    if g.kind is GateKind.PHASE:
        return [rz(g.params[0], g.qubits[0])]
    if g.kind is GateKind.BARRIER:
        return []
    raise UnsupportedGateError(f"pipeline cannot lower {g.kind.value}")


def run_pipeline(c: Circuit, cfg: PassConfig = PassConfig()) -> Circuit:
    """Lower ``c`` to {RZ, RX, SX, X, CX}, marking hidden-inverse pairs.

    With ``hidden_inverse`` off every existing mark is stripped, so the
    output is the plain (standard) compilation of the same program.
    """
    gates = list(c.gates) if cfg.hidden_inverse else [g.unmarked() for g in c.gates]
    ids = itertools.count(_next_free_id(gates))
    while any(g.kind not in BASIS and g.kind is not GateKind.H for g in gates):
        gates = [out for g in gates for out in _lower_once(g, cfg, ids)]
    lowered = c.with_gates(gates)
    if cfg.hidden_inverse and cfg.peephole:
        lowered = mark_hidden_inverses_peephole(lowered, cfg, ids)
    final = []
    for g in lowered.gates:
        final.extend(lower_h(g, cfg) if g.kind is GateKind.H else [g])
    return c.with_gates(final)
