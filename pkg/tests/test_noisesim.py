import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from invforge.circuit import Circuit, Variant, cx, embed, h, rx, rz, unitary_of_circuit, x
from invforge.decompose import PassConfig, run_pipeline
from invforge.errors import SimulationBoundError, ValidationError
from invforge.noisesim import (CoherentNoiseModel, Sampling, apply_matrix, distribution, fidelity, marginal,
                               noisy_primitive, run_experiment, sample, simulate, simulate_ideal,
                               simulate_primitives, zero_state)
from invforge.pulse import Axis, Primitive, default_calibration, invert_schedule, schedule_for_gate
from invforge.synth import BenchmarkSpec, crz_folding_benchmark

from conftest import random_state, random_unitary

PX = np.array([[0, 1], [1, 0]], dtype=complex)
PZ = np.diag([1, -1]).astype(complex)


def random_model(rng):
    eps = {"X": rng.uniform(-0.2, 0.2), "ZX": rng.uniform(-0.2, 0.2), "Z": rng.uniform(-0.05, 0.05)}
    overrides = {("ZX", (0, 1)): rng.uniform(-0.3, 0.3)}
    offsets = {("X", (0,)): rng.uniform(-0.3, 0.3), ("ZX", (0, 1)): rng.uniform(-0.3, 0.3)}
    return CoherentNoiseModel(eps, overrides, offsets, Sampling("uniform", 0.5, int(rng.integers(1 << 30))))


class TestNoisyPrimitive:
    def test_zero_eps_is_x(self):
        u = noisy_primitive(Primitive(Axis.X, (0,), math.pi), CoherentNoiseModel.zero())
        np.testing.assert_allclose(1j * u, PX, atol=1e-15)

    def test_over_rotation(self):
        u = noisy_primitive(Primitive(Axis.X, (0,), math.pi), CoherentNoiseModel.fixed(X=0.1))
        np.testing.assert_allclose(u, scipy.linalg.expm(-0.5j * 1.1 * math.pi * PX), atol=1e-14)
        assert abs(u[1, 0]) ** 2 == pytest.approx(math.sin(1.1 * math.pi / 2) ** 2)
        assert abs(u[1, 0]) ** 2 == pytest.approx(0.9755, abs=1e-4)

    def test_zx_matches_expm(self):
        p = Primitive(Axis.ZX, (0, 1), 0.7)
        u = noisy_primitive(p, CoherentNoiseModel.fixed(ZX=0.05))
        np.testing.assert_allclose(u, scipy.linalg.expm(-0.5j * 1.05 * 0.7 * np.kron(PX, PZ)), atol=1e-14)

    def test_seeded_draw_deterministic(self):
        p = Primitive(Axis.ZX, (2, 3), math.pi / 4)
        a = noisy_primitive(p, CoherentNoiseModel.default(11))
        b = noisy_primitive(p, CoherentNoiseModel.default(11))
        c = noisy_primitive(p, CoherentNoiseModel.default(12))
        np.testing.assert_array_equal(a, b)
        assert not np.allclose(a, c)

    def test_z_noise_free_by_default(self):
        nm = CoherentNoiseModel.default(3)
        assert nm.epsilon("Z", (0,)) == 0.0
        assert nm.epsilon("ZX", (0, 1)) != nm.epsilon("ZX", (1, 0))

    def test_negated_angle_shares_eps(self):
        nm = CoherentNoiseModel.default(5)
        p = Primitive(Axis.ZX, (1, 0), 0.9)
        np.testing.assert_allclose(noisy_primitive(p.negated(), nm), noisy_primitive(p, nm).conj().T, atol=1e-15)


class TestNoiseModel:
    def test_bound(self):
        with pytest.raises(ValidationError):
            CoherentNoiseModel.fixed(ZX=0.6)
        with pytest.raises(ValidationError):
            CoherentNoiseModel({"ZX": 0.4}, sampling=Sampling("normal", 50.0, 1)).epsilon("ZX", (0, 1))

    def test_json_round_trip(self):
        nm = CoherentNoiseModel({"X": 0.001, "ZX": 0.03, "Z": 0.0}, {("ZX", (0, 1)): 0.01},
                                {("X", (2,)): 0.05}, Sampling("uniform", 0.2, 9))
        back = CoherentNoiseModel.from_dict(json.loads(json.dumps(nm.to_dict())))
        assert back.to_dict() == nm.to_dict()
        for key in [("ZX", (0, 1)), ("ZX", (3, 1)), ("X", (2,))]:
            assert back.epsilon(*key) == nm.epsilon(*key)

    def test_malformed(self):
        with pytest.raises(ValidationError):
            CoherentNoiseModel.from_dict({"overrides": [{"axis": "ZX"}]})
        with pytest.raises(ValidationError):
            CoherentNoiseModel.from_dict({"sampling": {"dist": "cauchy"}})


class TestKernels:
    def test_apply_matrix_matches_dense(self, rng):
        n = 4
        psi = random_state(rng, n)
        for qubits in [(0,), (3,), (1, 3), (3, 0), (2, 0, 1)]:
            m = random_unitary(rng, 1 << len(qubits))
            np.testing.assert_allclose(apply_matrix(psi, m, qubits, n), embed(m, qubits, n) @ psi, atol=1e-12)

    def test_norm_preserved(self, rng):
        nm = CoherentNoiseModel.default(1)
        prims = []
        for _ in range(10_000):
            if rng.random() < 0.5:
                prims.append(Primitive(Axis.X, (int(rng.integers(4)),), rng.uniform(-4, 4)))
            else:
                c, t = rng.choice(4, 2, replace=False)
                prims.append(Primitive(Axis.ZX, (int(c), int(t)), rng.uniform(-4, 4)))
        psi = simulate_primitives(prims, 4, nm)
        assert abs(np.linalg.norm(psi) - 1) < 1e-9

    def test_bounds(self):
        with pytest.raises(SimulationBoundError):
            zero_state(25)
        with pytest.raises(ValidationError):
            simulate_primitives([Primitive(Axis.X, (3,), 1.0)], 2)


class TestSimulate:
    def test_cx_on_zero(self):
        cal = default_calibration()
        psi = simulate([schedule_for_gate(cx(0, 1), cal)], CoherentNoiseModel.zero(), n_qubits=2)
        assert distribution(psi)["00"] == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_cx_round_trip_any_noise(self, seed):
        rng = np.random.default_rng(seed)
        cal = default_calibration()
        nm = random_model(rng)
        s = schedule_for_gate(cx(0, 1), cal)
        psi0 = random_state(rng, 2)
        psi = simulate([s, invert_schedule(s)], nm, psi0, n_qubits=2)
        np.testing.assert_allclose(psi, psi0, atol=1e-10)

    def test_sandwich_composition(self, rng):
        cal = default_calibration()
        nm = CoherentNoiseModel.default(4)
        n_std = schedule_for_gate(cx(0, 1), cal)
        n_inv = invert_schedule(n_std)
        ra, rb = schedule_for_gate(rz(0.37, 1), cal), schedule_for_gate(rz(-1.2, 1), cal)
        psi0 = random_state(rng, 2)
        lhs = simulate([n_std, ra, n_inv, n_std, rb, n_inv], nm, psi0, n_qubits=2)
        rhs = simulate([n_std, ra, rb, n_inv], nm, psi0, n_qubits=2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_noise_free_matches_oracle(self):
        c = Circuit(3, [rx(0.3, 0), cx(0, 1).marked(Variant.STANDARD, 0), rz(1.1, 1), cx(1, 2), x(2),
                        cx(0, 1).marked(Variant.INVERSE, 0)])
        psi = simulate(c, CoherentNoiseModel.zero())
        ref = unitary_of_circuit(c)[:, 0]
        assert abs(abs(np.vdot(ref, psi)) - 1) < 1e-9

    def test_ideal_handles_any_gate(self):
        psi = simulate_ideal(Circuit(2, [h(0), cx(0, 1)]))
        np.testing.assert_allclose(np.abs(psi) ** 2, [0.5, 0, 0, 0.5], atol=1e-15)

    def test_folding_trend_at_eight(self):
        nm = CoherentNoiseModel.fixed(ZX=0.02)
        std, hi = crz_folding_benchmark(8, seed=2)
        p_std = distribution(simulate(_lower(std), nm))["00"]
        p_hi = distribution(simulate(_lower(hi), nm))["00"]
        assert p_std < p_hi


def _lower(c):
    return run_pipeline(c, PassConfig(peephole=False))


class TestDistribution:
    def test_basis(self):
        assert distribution(zero_state(2)) == {"00": 1.0}

    def test_plus(self):
        d = distribution(np.array([1, 1]) / math.sqrt(2))
        assert d == pytest.approx({"0": 0.5, "1": 0.5})

    def test_bit_order(self):
        psi = np.zeros(4)
        psi[1] = 1.0  # qubit 0 set
        assert distribution(psi) == {"01": 1.0}
        assert marginal({"01": 1.0}, [0]) == {"1": 1.0}

    def test_unnormalised(self):
        with pytest.raises(ValidationError):
            distribution(np.array([1.0, 1.0]))

    def test_sample_binomial_bound(self, rng):
        psi = random_state(rng, 3)
        exact = distribution(psi)
        shots = 10 ** 6
        sampled = sample(psi, shots, seed=17)
        for k, p in exact.items():
            assert abs(sampled.get(k, 0.0) - p) <= 3 * math.sqrt(p * (1 - p) / shots) + 1e-12
        assert sample(psi, 1000, 5) == sample(psi, 1000, 5)
        with pytest.raises(ValidationError):
            sample(psi, 0, 1)


class TestFidelity:
    def test_identical(self):
        p = {"00": 0.25, "01": 0.25, "11": 0.5}
        assert fidelity(p, p) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint(self):
        assert fidelity({"0": 1.0}, {"1": 1.0}) == 0.0

    def test_half(self):
        assert fidelity({"0": 0.5, "1": 0.5}, {"0": 1.0}) == pytest.approx(0.5, abs=1e-12)

    def test_width_mismatch(self):
        with pytest.raises(ValidationError):
            fidelity({"0": 1.0}, {"00": 1.0})

    @settings(max_examples=50)
    @given(st.lists(st.floats(0, 1), min_size=8, max_size=8), st.lists(st.floats(0, 1), min_size=8, max_size=8))
    def test_symmetric_and_bounded(self, a, b):
        if sum(a) == 0 or sum(b) == 0:
            return
        p = {format(i, "03b"): v / sum(a) for i, v in enumerate(a) if v}
        q = {format(i, "03b"): v / sum(b) for i, v in enumerate(b) if v}
        assert 0.0 <= fidelity(p, q) <= 1.0
        assert fidelity(p, q) == pytest.approx(fidelity(q, p), abs=1e-12)


class TestExperiment:
    def test_zero_noise(self):
        r = run_experiment(BenchmarkSpec("qaoa-maxcut", 4), CoherentNoiseModel.zero(), draws=2, seed=0)
        assert r.f_std == pytest.approx(1.0, abs=1e-9) and r.f_hi == pytest.approx(1.0, abs=1e-9)
        assert r.improvement == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("eps", [0.01, 0.02, 0.05])
    def test_qaoa_improves(self, eps):
        nm = CoherentNoiseModel({"X": 0.000625, "ZX": eps, "Z": 0.0}, sampling=Sampling("normal", 0.5, 0))
        r = run_experiment(BenchmarkSpec("qaoa-maxcut", 4), nm, draws=10, seed=3)
        assert r.improvement > 0
        assert r.seeds == tuple(range(3, 13)) and len(r.f_std_draws) == 10

    def test_row(self):
        r = run_experiment(BenchmarkSpec("qpe", 5), CoherentNoiseModel.default(), draws=1, seed=1)
        assert set(r.row()) == {"name", "n_qubits", "F_std", "F_hi", "improvement", "seeds"}
        with pytest.raises(ValidationError):
            run_experiment(BenchmarkSpec("qpe", 5), CoherentNoiseModel.default(), draws=0)
