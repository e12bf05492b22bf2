"""
Coherent-noise statevector simulation and distribution fidelity.

Noise enters at primitive granularity: a primitive with nominal angle t on
axis G is applied as exp(-i (1 + eps) t / 2 * G), with eps looked up by
(axis, qubits). A schedule and its inverse therefore see the same eps, which
makes the noisy inverse schedule the exact adjoint of the noisy original.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import MAX_QUBITS, Circuit, GateKind, gate_matrix
from .decompose import PassConfig, run_pipeline
from .errors import SimulationBoundError, ValidationError
from .pulse import (Axis, CalibrationConfig, Primitive, PulseSchedule, circuit_primitives,
                    default_calibration, generator, rotation, schedule_to_primitives)
from .synth import BenchmarkSpec, build_circuit

EPS_BOUND = 0.5
DEFAULT_EPSILON = {"X": 0.000625, "ZX": 0.02, "Z": 0.0}
_AXIS_CODE = {Axis.X: 1, Axis.ZX: 2, Axis.Z: 3}

Key = tuple[str, tuple[int, ...]]


@dataclass(frozen=True)
class Sampling:
    """Per-key eps = base * (1 + scale * xi), xi ~ N(0,1) or U(-1,1)."""

    dist: str = "normal"
    scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.dist not in ("normal", "uniform"):
            raise ValidationError(f"sampling dist must be normal or uniform, got {self.dist!r}")


@dataclass(frozen=True, eq=False)
class CoherentNoiseModel:
    default_epsilon: Mapping[str, float] = field(default_factory=lambda: dict.fromkeys("X ZX Z".split(), 0.0))
    overrides: Mapping[Key, float] = field(default_factory=dict)
    phase_offsets: Mapping[Key, float] = field(default_factory=dict)
    sampling: Sampling | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for axis in self.default_epsilon:
            Axis(axis)
        for value in list(self.default_epsilon.values()) + list(self.overrides.values()):
            if abs(value) >= EPS_BOUND:
                raise ValidationError(f"|epsilon| must stay below {EPS_BOUND}, got {value}")

    @classmethod
    def zero(cls) -> "CoherentNoiseModel":
        return cls()

    @classmethod
    def default(cls, seed: int = 0) -> "CoherentNoiseModel":
        return cls(dict(DEFAULT_EPSILON), sampling=Sampling("normal", 0.5, seed))

    @classmethod
    def fixed(cls, **eps: float) -> "CoherentNoiseModel":
        base = dict.fromkeys("X ZX Z".split(), 0.0)
        base.update(eps)
        return cls(base)

    def reseeded(self, seed: int) -> "CoherentNoiseModel":
        if self.sampling is None:
            return self
        return replace(self, sampling=replace(self.sampling, seed=seed), _cache={})

    def epsilon(self, axis: Axis | str, qubits: Sequence[int]) -> float:
        axis = Axis(axis)
        key = (axis.value, tuple(qubits))
        if key in self.overrides:
            return self.overrides[key]
        if key in self._cache:
            return self._cache[key]
        eps = float(self.default_epsilon.get(axis.value, 0.0))
        if self.sampling is not None and eps != 0.0:
            s = self.sampling
            entropy = [s.seed, _AXIS_CODE[axis], len(key[1]), *key[1]]
            rng = np.random.default_rng(np.random.SeedSequence(entropy))
            xi = rng.standard_normal() if s.dist == "normal" else rng.uniform(-1.0, 1.0)
            eps *= 1.0 + s.scale * xi
            if abs(eps) >= EPS_BOUND:
                raise ValidationError(f"sampled epsilon {eps} for {key} breaks the |eps| < {EPS_BOUND} bound")
        self._cache[key] = eps
        return eps

    def phase_offset(self, axis: Axis | str, qubits: Sequence[int]) -> float:
        return self.phase_offsets.get((Axis(axis).value, tuple(qubits)), 0.0)

    def to_dict(self) -> dict:
        d = {"default_epsilon": dict(self.default_epsilon),
             "overrides": [{"axis": a, "qubits": list(q), "epsilon": e} for (a, q), e in self.overrides.items()],
             "phase_offsets": [{"axis": a, "qubits": list(q), "offset": v}
                               for (a, q), v in self.phase_offsets.items()],
             "sampling": None}
        if self.sampling is not None:
            s = self.sampling
            d["sampling"] = {"dist": s.dist, "scale": s.scale, "seed": s.seed}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoherentNoiseModel":
        try:
            base = dict.fromkeys("X ZX Z".split(), 0.0)
            base.update({k: float(v) for k, v in d.get("default_epsilon", {}).items()})
            overrides = {(o["axis"], tuple(o["qubits"])): float(o["epsilon"]) for o in d.get("overrides", [])}
            offsets = {(o["axis"], tuple(o["qubits"])): float(o["offset"]) for o in d.get("phase_offsets", [])}
            s = d.get("sampling")
            sampling = None if not s else Sampling(s.get("dist", "normal"), float(s.get("scale", 0.5)),
                                                   int(s.get("seed", 0)))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed noise model: {exc}") from exc
        return cls(base, overrides, offsets, sampling)


def noisy_primitive(prim: Primitive, nm: CoherentNoiseModel) -> np.ndarray:
    """Over-rotated primitive matrix on its own 1 or 2 qubits."""
    eps = nm.epsilon(prim.axis, prim.qubits)
    gen = generator(prim.axis, nm.phase_offset(prim.axis, prim.qubits))
    return rotation(gen, (1.0 + eps) * prim.angle)


# Kernels ------------------------------------------------------------------

def _check_n(n: int):
    if n > MAX_QUBITS:
        raise SimulationBoundError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit simulator bound")


def zero_state(n_qubits: int) -> np.ndarray:
    _check_n(n_qubits)
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def _initial(initial, n: int) -> np.ndarray:
    if initial is None:
        return zero_state(n)
    if isinstance(initial, (int, np.integer)):
        psi = np.zeros(1 << n, dtype=complex)
        psi[int(initial)] = 1.0
        return psi
    psi = np.array(initial, dtype=complex)
    if psi.shape != (1 << n,):
        raise ValidationError(f"initial state has shape {psi.shape}, expected ({1 << n},)")
    return psi


def apply_1q(psi: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    v = psi.reshape(-1, 2, 1 << q)
    a, b = v[:, 0, :].copy(), v[:, 1, :]
    out = np.empty_like(v)
    out[:, 0, :] = m[0, 0] * a + m[0, 1] * b
    out[:, 1, :] = m[1, 0] * a + m[1, 1] * b
    return out.reshape(-1)


def apply_matrix(psi: np.ndarray, m: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a local matrix (operand 0 = local bit 0) to the listed qubits."""
    k = len(qubits)
    if k == 1:
        return apply_1q(psi, m, qubits[0])
    axes = [n - 1 - q for q in reversed(qubits)]
    t = np.tensordot(m.reshape((2,) * (2 * k)), psi.reshape((2,) * n),
                     axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(t, list(range(k)), axes).reshape(-1)


def simulate_primitives(prims: Iterable[Primitive], n_qubits: int, nm: CoherentNoiseModel | None = None,
                        initial=None) -> np.ndarray:
    _check_n(n_qubits)
    nm = CoherentNoiseModel.zero() if nm is None else nm
    psi = _initial(initial, n_qubits)
    for p in prims:
        if max(p.qubits) >= n_qubits:
            raise ValidationError(f"primitive on qubits {p.qubits} outside {n_qubits}-qubit register")
        psi = apply_matrix(psi, noisy_primitive(p, nm), p.qubits, n_qubits)
    return psi


def simulate(program, nm: CoherentNoiseModel | None = None, initial=None, *,
             n_qubits: int | None = None, calibration: CalibrationConfig | None = None) -> np.ndarray:
    """Noisy pulse-level simulation.

    ``program`` is a basis-gate Circuit (lowered with ``calibration``), a
    list of PulseSchedule, or a list of Primitive.
    """
    if isinstance(program, Circuit):
        _check_n(program.n_qubits)
        prims = circuit_primitives(program, calibration or default_calibration())
        return simulate_primitives(prims, program.n_qubits, nm, initial)
    program = list(program)
    if program and isinstance(program[0], PulseSchedule):
        prims = [p for s in program for p in schedule_to_primitives(s)]
    else:
        prims = program
    if n_qubits is None:
        n_qubits = 1 + max((q for p in prims for q in p.qubits), default=0)
    return simulate_primitives(prims, n_qubits, nm, initial)


def simulate_ideal(c: Circuit, initial=None) -> np.ndarray:
    """Noise-free gate-level simulation of any circuit (no pulse lowering)."""
    _check_n(c.n_qubits)
    psi = _initial(initial, c.n_qubits)
    for g in c.gates:
        if g.kind is not GateKind.BARRIER:
            psi = apply_matrix(psi, gate_matrix(g), g.qubits, c.n_qubits)
    return psi


# Distributions ------------------------------------------------------------

def _bits(i: int, n: int) -> str:
    return format(i, f"0{n}b")


def distribution(sv: np.ndarray) -> dict[str, float]:
    """Exact outcome probabilities; keys are bitstrings with qubit 0 rightmost."""
    n = int(round(math.log2(len(sv))))
    probs = np.abs(sv) ** 2
    norm = probs.sum()
    if abs(norm - 1) > 1e-9:
        raise ValidationError(f"statevector is not normalized (norm^2 = {norm})")
    return {_bits(i, n): float(p) for i, p in enumerate(probs) if p > 0}


def sample(sv: np.ndarray, shots: int, seed: int) -> dict[str, float]:
    if shots <= 0:
        raise ValidationError("shots must be positive")
    n = int(round(math.log2(len(sv))))
    probs = np.abs(sv) ** 2
    counts = np.random.default_rng(seed).multinomial(shots, probs / probs.sum())
    return {_bits(i, n): float(c / shots) for i, c in enumerate(counts) if c}


def marginal(dist: Mapping[str, float], qubits: Sequence[int]) -> dict[str, float]:
    """Marginal over ``qubits``; output keys list them highest-first."""
    out: dict[str, float] = {}
    for key, p in dist.items():
        n = len(key)
        sub = "".join(key[n - 1 - q] for q in sorted(qubits, reverse=True))
        out[sub] = out.get(sub, 0.0) + p
    return out


def fidelity(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """Squared Bhattacharyya coefficient (sum_x sqrt(p(x) q(x)))^2."""
    widths = {len(k) for k in p} | {len(k) for k in q}
    if len(widths) > 1:
        raise ValidationError(f"distributions have mismatched bit widths {sorted(widths)}")
    bc = sum(math.sqrt(p[k] * q[k]) for k in sorted(p.keys() & q.keys()))
    return min(1.0, max(0.0, bc * bc))


# Experiments --------------------------------------------------------------

@dataclass(frozen=True)
class Report:
    name: str
    n_qubits: int
    f_std: float
    f_hi: float
    seeds: tuple[int, ...]
    f_std_draws: tuple[float, ...] = ()
    f_hi_draws: tuple[float, ...] = ()

    @property
    def improvement(self) -> float:
        return (self.f_hi - self.f_std) / self.f_std

    def row(self) -> dict:
        return {"name": self.name, "n_qubits": self.n_qubits, "F_std": self.f_std, "F_hi": self.f_hi,
                "improvement": self.improvement, "seeds": " ".join(map(str, self.seeds))}


def compile_pair(c: Circuit, cfg: PassConfig = PassConfig()) -> tuple[Circuit, Circuit]:
    """(standard, hidden-inverse) compilations of one program."""
    return (run_pipeline(c, replace(cfg, hidden_inverse=False)),
            run_pipeline(c, replace(cfg, hidden_inverse=True)))


def draw_seeds(nm: CoherentNoiseModel, draws: int, seed: int | None = None) -> list[int]:
    base = seed if seed is not None else (nm.sampling.seed if nm.sampling else 0)
    return [base + k for k in range(draws)]


def run_experiment(spec: BenchmarkSpec, nm: CoherentNoiseModel, cfg: PassConfig = PassConfig(),
                   cal: CalibrationConfig | None = None, draws: int = 1, seed: int | None = None) -> Report:
    """Compile with and without hidden inverses and compare fidelity to the ideal."""
    if draws < 1:
        raise ValidationError("draws must be >= 1")
    cal = cal or default_calibration()
    program = build_circuit(spec)
    n = program.n_qubits
    ideal = distribution(simulate_ideal(program))
    std, hi = compile_pair(program, cfg)
    prims_std, prims_hi = circuit_primitives(std, cal), circuit_primitives(hi, cal)
    seeds = draw_seeds(nm, draws, seed)
    f_std, f_hi = [], []
    for s in seeds:
        m = nm.reseeded(s)
        f_std.append(fidelity(ideal, distribution(simulate_primitives(prims_std, n, m))))
        f_hi.append(fidelity(ideal, distribution(simulate_primitives(prims_hi, n, m))))
    return Report(spec.key, n, float(np.mean(f_std)), float(np.mean(f_hi)), tuple(seeds),
                  tuple(f_std), tuple(f_hi))
