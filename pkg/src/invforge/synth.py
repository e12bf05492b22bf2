"""
Benchmark program synthesis.

Generators annotate hidden-inverse pairs while they still know the program
structure: the mirrored CX tree of a Pauli-string exponential, the closing
H of an X-basis change, and the second CX of every QAOA cost term.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .circuit import (Circuit, Gate, GateKind, Variant, adjoint, cphase, crz, cx, h, phase, rx,
                      rz, x)
from .decompose import PassConfig, decompose_crz
from .errors import ValidationError

PAULIS = ("X", "Y", "Z")
MODELS = ("ising", "xy", "heisenberg")
BENCHMARKS = ("qaoa-maxcut", "ising", "xy", "heisenberg", "qft-adder", "qpe", "crz-folding")

DEFAULT_GAMMA = 0.4
DEFAULT_BETA = 0.3
DEFAULT_J = 1.0
DEFAULT_H = 1.0
DEFAULT_DT = 0.2


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; identity qubits omitted."""

    ops: tuple[tuple[int, str], ...]
    coefficient: float = 1.0

    def __post_init__(self):
        ops = tuple(sorted((int(q), str(p).upper()) for q, p in self.ops))
        object.__setattr__(self, "ops", ops)
        if not ops:
            raise ValidationError("Pauli string needs at least one non-identity operator")
        qubits = [q for q, _ in ops]
        if len(set(qubits)) != len(qubits):
            raise ValidationError(f"repeated qubit in Pauli string {ops}")
        if any(p not in PAULIS for _, p in ops) or any(q < 0 for q in qubits):
            raise ValidationError(f"bad Pauli operator in {ops}")

    @classmethod
    def parse(cls, label: str, coefficient: float = 1.0) -> "PauliString":
        """Parse labels such as ``"X3 Z2 Z1 Y0"`` or ``"X3Z2Z1Y0"``."""
        terms = re.findall(r"([IXYZ])(\d+)", label.upper())
        if not terms or "".join(p + q for p, q in terms) != re.sub(r"\s+", "", label.upper()):
            raise ValidationError(f"cannot parse Pauli label {label!r}")
        return cls(tuple((int(q), p) for p, q in terms if p != "I"), coefficient)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)

    def matrix(self, n_qubits: int) -> np.ndarray:
        """Dense operator, qubit 0 least significant."""
        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
                "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
        label = dict(self.ops)
        out = np.ones((1, 1), dtype=complex)
        for q in reversed(range(n_qubits)):
            out = np.kron(out, mats[label.get(q, "I")])
        return out


def _tree(qubits: Sequence[int], balanced: bool) -> list[tuple[int, int]]:
    """CX (control, target) list accumulating parity onto qubits[-1]."""
    if not balanced:
        return list(zip(qubits, qubits[1:]))
    pairs, level = [], list(qubits)
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            pairs.append((level[i], level[i + 1]))
            nxt.append(level[i + 1])
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return pairs


def _pauli_gates(p: PauliString, theta: float, ids: Iterator[int], balanced: bool) -> list[Gate]:
    into, out = [], []
    for q, op in p.ops:
        if op == "X":
            pid = next(ids)
            into.append(h(q).marked(Variant.STANDARD, pid))
            out.append(h(q).marked(Variant.INVERSE, pid))
        elif op == "Y":
            into.append(rx(math.pi / 2, q))
            out.append(rx(-math.pi / 2, q))
    left, right = [], []
    for c, t in _tree(p.qubits, balanced):
        pid = next(ids)
        left.append(cx(c, t).marked(Variant.STANDARD, pid))
        right.append(cx(c, t).marked(Variant.INVERSE, pid))
    root = p.qubits[-1]
    return into + left + [rz(p.coefficient * theta, root)] + right[::-1] + out


def pauli_string_circuit(p: PauliString, theta: float, n_qubits: int | None = None, *,
                         balanced_tree: bool = False, ids: Iterator[int] | None = None) -> Circuit:
    """Circuit for exp(-i (coefficient * theta)/2 * P)."""
    if n_qubits is None:
        n_qubits = max(p.qubits) + 1
    ids = itertools.count() if ids is None else ids
    return Circuit(n_qubits, _pauli_gates(p, theta, ids, balanced_tree))


def trotter_terms(model: str, n_qubits: int, J: float = DEFAULT_J, h: float = DEFAULT_H) -> list[PauliString]:
    """Nearest-neighbour open-chain terms, one PauliString per term."""
    if model not in MODELS:
        raise ValidationError(f"unknown model {model!r}; expected one of {MODELS}")
    if n_qubits < 2:
        raise ValidationError("spin chains need at least 2 qubits")
    couplings = {"ising": "Z", "xy": "XY", "heisenberg": "XYZ"}[model]
    terms = [PauliString(((i, p), (i + 1, p)), J)
             for i in range(n_qubits - 1) for p in couplings]
    if model == "ising" and h != 0:
        terms += [PauliString(((i, "X"),), h) for i in range(n_qubits)]
    return terms


def trotter_circuit(model: str, n_qubits: int, J: float = DEFAULT_J, h: float = DEFAULT_H,
                    steps: int = 1, dt: float = DEFAULT_DT, *, balanced_tree: bool = False) -> Circuit:
    """First-order Trotter circuit approximating exp(-i H steps*dt)."""
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    terms = trotter_terms(model, n_qubits, J, h)
    ids = itertools.count()
    gates = []
    for _ in range(steps):
        for term in terms:
            gates += _pauli_gates(term, 2 * dt, ids, balanced_tree)
    return Circuit(n_qubits, gates)


def ring_graph(n: int) -> list[tuple[int, int]]:
    return [(i, (i + 1) % n) for i in range(n)]


def qaoa_maxcut(edges: Sequence[Sequence[int]], gamma: Sequence[float], beta: Sequence[float],
                n_qubits: int | None = None) -> Circuit:
    edges = [(int(u), int(v)) for u, v in edges]
    if len(gamma) != len(beta) or not gamma:
        raise ValidationError("gamma and beta must be non-empty and of equal length")
    if any(u == v for u, v in edges):
        raise ValidationError("self-loop edge in MaxCut graph")
    if n_qubits is None:
        if not edges:
            raise ValidationError("n_qubits is required for an empty graph")
        n_qubits = max(max(e) for e in edges) + 1
    ids = itertools.count()
    gates: list[Gate] = [h(q) for q in range(n_qubits)]
    for g, b in zip(gamma, beta):
        for u, v in edges:
            pid = next(ids)
            gates += [cx(u, v).marked(Variant.STANDARD, pid), rz(2 * g, v),
                      cx(u, v).marked(Variant.INVERSE, pid)]
        gates += [rx(2 * b, q) for q in range(n_qubits)]
    return Circuit(n_qubits, gates)


def fourier_gates(qubits: Sequence[int]) -> list[Gate]:
    """QFT without the final swaps: qubits[k] ends up carrying phase x / 2^(k+1)."""
    gates = []
    for k in reversed(range(len(qubits))):
        gates.append(h(qubits[k]))
        for b in range(k):
            gates.append(cphase(2 * math.pi / 2 ** (k - b + 1), qubits[b], qubits[k]))
    return gates


def qft_adder(n_bits: int, addend: int, initial: int = 0) -> Circuit:
    """Draper constant adder |x> -> |x + addend mod 2^n_bits>, prepared from |initial>."""
    if n_bits < 1:
        raise ValidationError("n_bits must be >= 1")
    if not 0 <= addend < 2 ** n_bits or not 0 <= initial < 2 ** n_bits:
        raise ValidationError(f"addend/initial must lie in [0, {2 ** n_bits})")
    qs = list(range(n_bits))
    prep = [x(q) for q in qs if (initial >> q) & 1]
    qft = Circuit(n_bits, fourier_gates(qs))
    shift = [phase(addend * math.pi / 2 ** q, q) for q in qs]
    return Circuit(n_bits, prep + list(qft.gates) + shift + list(adjoint(qft).gates))


def qpe(n_counting: int, eigenphase: float) -> Circuit:
    """Phase estimation of U = Phase(2 pi eigenphase) on its |1> eigenstate.

    Counting qubits are 0..n_counting-1 (little-endian estimate); the
    eigenstate qubit is n_counting.
    """
    if n_counting < 1:
        raise ValidationError("n_counting must be >= 1")
    if not 0 <= eigenphase < 1:
        raise ValidationError("eigenphase must lie in [0, 1)")
    n = n_counting
    gates: list[Gate] = [x(n)] + [h(q) for q in range(n)]
    for q in range(n):
        gates.append(cphase(2 * math.pi * eigenphase * 2 ** (n - 1 - q), q, n))
    inverse_qft = adjoint(Circuit(n + 1, fourier_gates(list(range(n)))))
    return Circuit(n + 1, gates + list(inverse_qft.gates))


def crz_folding_angles(n_folds: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, math.pi, n_folds)


def crz_folding_circuit(n_folds: int, seed: int) -> Circuit:
    """H H, then n_folds boxes of CRZ(t_k) CRZ(-t_k) on (0, 1), then H H."""
    if n_folds < 1:
        raise ValidationError("n_folds must be >= 1")
    gates = [h(0), h(1)]
    for t in crz_folding_angles(n_folds, seed):
        gates += [crz(float(t), 0, 1), crz(-float(t), 0, 1)]
    return Circuit(2, gates + [h(0), h(1)])


def crz_folding_benchmark(n_folds: int, seed: int) -> tuple[Circuit, Circuit]:
    """(standard, hidden-inverse) CRZ-expanded variants of the folding circuit."""
    raw = crz_folding_circuit(n_folds, seed)
    out = []
    for hidden in (False, True):
        cfg = PassConfig(hidden_inverse=hidden)
        ids = itertools.count()
        gates = []
        for g in raw.gates:
            gates += decompose_crz(g, cfg, ids) if g.kind is GateKind.CRZ else [g]
        out.append(raw.with_gates(gates))
    return out[0], out[1]


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    n_qubits: int
    params: dict = field(default_factory=dict)
    trotter_steps: int = 1

    def __post_init__(self):
        if self.name not in BENCHMARKS:
            raise ValidationError(f"unknown benchmark {self.name!r}; expected one of {BENCHMARKS}")
        if self.name == "crz-folding":
            if self.n_qubits != 2:
                raise ValidationError("crz-folding is a 2-qubit benchmark")
            if int(self.params.get("n_folds", 1)) < 1:
                raise ValidationError("n_folds must be >= 1")
        elif not 4 <= self.n_qubits <= 10:
            raise ValidationError(f"{self.name}: n_qubits must be within 4..10, got {self.n_qubits}")
        if self.trotter_steps < 1:
            raise ValidationError("trotter_steps must be >= 1")

    @property
    def key(self) -> str:
        return f"{self.name}-{self.n_qubits}q"

    def to_dict(self) -> dict:
        return {"name": self.name, "n_qubits": self.n_qubits, "params": dict(self.params),
                "trotter_steps": self.trotter_steps}

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkSpec":
        try:
            return cls(d["name"], int(d["n_qubits"]), dict(d.get("params", {})),
                       int(d.get("trotter_steps", 1)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed benchmark spec: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "BenchmarkSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"benchmark spec JSON does not parse: {exc}") from exc


def build_circuit(spec: BenchmarkSpec) -> Circuit:
    """Instantiate a benchmark, filling unspecified parameters with defaults."""
    p, n = spec.params, spec.n_qubits
    if spec.name == "qaoa-maxcut":
        edges = p.get("edges") or ring_graph(n)
        gamma = p.get("gamma", [DEFAULT_GAMMA])
        beta = p.get("beta", [DEFAULT_BETA])
        return qaoa_maxcut(edges, gamma, beta, n)
    if spec.name in MODELS:
        return trotter_circuit(spec.name, n, p.get("J", DEFAULT_J), p.get("h", DEFAULT_H),
                               spec.trotter_steps, p.get("dt", DEFAULT_DT))
    if spec.name == "qft-adder":
        return qft_adder(n, int(p.get("addend", 2 ** n // 3)), int(p.get("initial", 1)))
    if spec.name == "qpe":
        return qpe(n - 1, float(p.get("eigenphase", 0.3)))
    return crz_folding_circuit(int(p.get("n_folds", 1)), int(p.get("seed", 0)))


def evaluation_suite() -> list[BenchmarkSpec]:
    """The 13 evaluation programs: QAOA 4/6/8/10, spin models at 6, adder 5/7/9, QPE 5/6/7."""
    suite = [BenchmarkSpec("qaoa-maxcut", n) for n in (4, 6, 8, 10)]
    suite += [BenchmarkSpec(m, 6, trotter_steps=2) for m in MODELS]
    suite += [BenchmarkSpec("qft-adder", n) for n in (5, 7, 9)]
    suite += [BenchmarkSpec("qpe", n) for n in (5, 6, 7)]
    return suite
