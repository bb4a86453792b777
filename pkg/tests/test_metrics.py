import math

import numpy as np
import pytest

from randpf.formulas import SeededRng, expected_step, qdrift_sample, realize_unitary
from randpf.hamiltonian import Hamiltonian, dense, heisenberg_1d
from randpf.linalg import expm_hermitian, haar_state, haar_unitary, operator_norm
from randpf.metrics import (
    BoundParams,
    ErrorReport,
    bias_bound,
    error_decomposition,
    exact_unitary,
    fixed_input_error,
    fixed_input_trace_distance,
    freedman_tail,
    gate_counts,
    general_freedman_tail,
    mixing_diamond_bound,
    step_bias_bound,
    step_radius_bound,
    theorem3_bounds,
    vector_tail_l2,
    vector_tail_trace,
    worst_case_error,
)

Z = np.diag([1.0, -1.0])


@pytest.fixture(scope="module")
def heis4():
    H = heisenberg_1d(4)
    return H, exact_unitary(H, 2.0)


class TestWorstCase:
    def test_same(self, rng):
        u = haar_unitary(4, rng)
        assert worst_case_error(u, u) == 0.0

    def test_antipodal(self):
        assert worst_case_error(np.eye(2), expm_hermitian(Z, np.pi)) == pytest.approx(2.0, abs=1e-12)

    def test_qdrift_instance_matches_independent_product(self, heis4):
        H, U = heis4
        plan = qdrift_sample(H, 2.0, 160, SeededRng(0))
        V = realize_unitary(plan, H)
        # independent oracle: multiply LAPACK step exponentials, measure with SVD
        ref = np.eye(16, dtype=complex)
        for s in plan.steps:
            term = H.terms[s.term]
            gen = dense(Hamiltonian(4, (term,))) * (H.lam / H.norms[s.term])
            w, q = np.linalg.eigh(gen)
            ref = (q * np.exp(-1j * s.duration * w)) @ q.conj().T @ ref
        w, q = np.linalg.eigh(dense(H))
        u_ref = (q * np.exp(-2j * w)) @ q.conj().T
        val = worst_case_error(U, V)
        assert 0 < val <= 2
        assert val == pytest.approx(np.linalg.norm(u_ref - ref, 2), abs=1e-9)


class TestFixedInput:
    def test_same(self, rng):
        u = haar_unitary(4, rng)
        assert fixed_input_error(u, u, haar_state(4, rng)) == 0.0

    def test_phase(self):
        phi = 0.7
        val = fixed_input_error(np.eye(2), expm_hermitian(Z, phi), [1, 0])
        assert val == pytest.approx(2 * abs(math.sin(phi / 2)), abs=1e-14)

    def test_trace_below_l2(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            u, v, psi = haar_unitary(8, rng), haar_unitary(8, rng), haar_state(8, rng)
            assert fixed_input_trace_distance(u, v, psi) <= fixed_input_error(u, v, psi) + 1e-12


class TestDecomposition:
    def test_single_term(self):
        H = Hamiltonian.from_pauli(2, [(0.5, "XZ")])
        rep = error_decomposition(H, 1.0, 10, qdrift_sample(H, 1.0, 10, SeededRng(0)))
        assert rep.bias == pytest.approx(0, abs=1e-12)
        assert rep.fluctuation == pytest.approx(0, abs=1e-12)

    def test_bias_below_bound(self, heis4):
        H, U = heis4
        rep = error_decomposition(H, 2.0, 160, qdrift_sample(H, 2.0, 160, SeededRng(1)), U)
        assert rep.bias <= 0.225

    def test_triangle_many_seeds(self, heis4):
        H, U = heis4
        for seed in range(50):
            rep = error_decomposition(H, 2.0, 40, qdrift_sample(H, 2.0, 40, SeededRng(seed)), U)
            assert rep.total <= rep.bias + rep.fluctuation + 1e-12

    def test_post_assertion(self):
        with pytest.raises(AssertionError):
            ErrorReport(bias=0.1, fluctuation=0.1, total=0.5)


class TestClosedForms:
    def test_values(self):
        assert bias_bound(2, 3, 160) == pytest.approx(0.225)
        assert step_radius_bound(2, 3, 160) == pytest.approx(0.075)
        assert step_bias_bound(2, 3, 160) == pytest.approx(0.225 / 160)

    def test_halving(self):
        assert bias_bound(1.3, 2.2, 200) == pytest.approx(bias_bound(1.3, 2.2, 100) / 2, rel=1e-15)


class TestFreedman:
    def test_zero_eps(self):
        assert freedman_tail(0.0, 2, 3, 160, 4) == 1.0

    def test_gate_count_guarantee(self):
        eps, delta, t, lam, n = 0.5, 0.1, 2.0, 3.0, 4
        N = math.ceil(44 * (t * lam) ** 2 / eps**2 * math.log(2 * 2**n / delta))
        assert freedman_tail(eps, t, lam, N, n, simplified=True) <= delta
        # the detailed form evaluated at eps/2 is no weaker for eps <= 4 t lam
        assert freedman_tail(eps / 2, t, lam, N, n) <= freedman_tail(eps, t, lam, N, n, simplified=True)

    @pytest.mark.parametrize("simplified", [False, True])
    def test_monotone(self, simplified):
        eps = np.linspace(0, 5, 50)
        vals = [freedman_tail(e, 2, 3, 4000, 4, simplified) for e in eps]
        assert np.all(np.diff(vals) <= 0)
        Ns = [10, 100, 1000, 10_000]
        vals = [freedman_tail(1.0, 2, 3, N, 4, simplified) for N in Ns]
        assert np.all(np.diff(vals) <= 0)

    def test_general_scalar_bernstein(self):
        tau, v, R = 1.2, 0.5, 0.3
        assert general_freedman_tail(tau, v, R, 1) == pytest.approx(min(1, 2 * math.exp(-(tau**2 / 2) / (v + R * tau / 3))))

    def test_general_zero(self):
        assert general_freedman_tail(0.0, 1.0, 1.0, 8) == 1.0

    @pytest.mark.parametrize("tau", [2.7, 3.0, 4.0])
    def test_general_recovers_qdrift(self, tau):
        t, lam, N, n = 2.0, 3.0, 160, 4
        r = 2 * t * lam / N
        assert general_freedman_tail(tau, N * r * r, r, 2**n) == pytest.approx(freedman_tail(tau, t, lam, N, n), rel=1e-12)


class TestVectorTails:
    def test_zero(self):
        assert vector_tail_l2(0, 2, 3, 160) == 1.0
        assert vector_tail_trace(0, 2, 3, 160) == 1.0

    @pytest.mark.parametrize("eps", [0.3, 1.0, 2.5])
    def test_trace_is_l2_at_half_eps(self, eps):
        assert vector_tail_trace(eps, 2, 3, 160) == pytest.approx(vector_tail_l2(eps / 2, 2, 3, 160), rel=1e-14)

    def test_no_dimension(self):
        # the signatures carry no qubit count; spot-check the formula
        assert vector_tail_l2(1.0, 2, 3, 160) == pytest.approx(math.exp(-160 / (8 * math.e * 36)))


class TestMixing:
    def test_single_term(self):
        H = Hamiltonian.from_pauli(1, [(0.4, "X")])
        assert mixing_diamond_bound(H, 1.0, 5) == pytest.approx(0.0, abs=1e-12)

    def test_bound_and_monotone(self, heis4):
        H, U = heis4
        vals = [mixing_diamond_bound(H, 2.0, N, U) for N in (10, 40, 160, 640)]
        for N, v in zip((10, 40, 160, 640), vals):
            assert v <= bias_bound(2.0, 3.0, N) + 1e-9
        assert np.all(np.diff(vals) < 0)


class TestGateCounts:
    def test_lambda_scaling(self):
        a = gate_counts(0.1, 0.01, 1.0, 3.0, 6)
        b = gate_counts(0.1, 0.01, 1.0, 6.0, 6)
        for key in a:
            assert b[key] / a[key] == pytest.approx(4.0, rel=1e-3)

    def test_linear_in_n(self):
        counts = [gate_counts(0.1, 0.01, 1.0, 3.0, n)["worst_case"] for n in range(4, 40, 5)]
        diffs = np.diff(counts)
        assert np.all(np.abs(diffs - diffs[0]) <= 2)

    def test_hand_arithmetic(self):
        # 44 * 36 / 0.25 * ln(32 / 0.1) = 6336 * 5.768320996 = 36548.08
        assert gate_counts(0.5, 0.1, 2, 3, 4)["worst_case"] == 36549
        assert gate_counts(0.5, 0.1, 2, 3, 4)["average"] == 144

    def test_domain(self):
        with pytest.raises(ValueError):
            gate_counts(1.5, 0.1, 1, 1, 1)


class TestErrorScales:
    def test_no_bias(self):
        assert theorem3_bounds(BoundParams(a=0.1, b=0.0, R=0.2, v=0.1, N=10, n=3))["average"] == 0.0

    def test_uniform(self):
        out = theorem3_bounds(BoundParams(a=0.05, b=0.0, R=0.1, v=0.1, N=40, n=9))
        assert out["worst"] == pytest.approx(2 * 40 * 0.05)
        assert out["typical"] / out["fixed"] == pytest.approx(3.0)

    def test_qdrift_substitution(self):
        t, lam, N, n = 2.0, 3.0, 160, 4
        out = theorem3_bounds(BoundParams.qdrift(t, lam, N, n))
        expected = math.sqrt(n * 4 * t**2 * lam**2 / N) + 2 * t**2 * lam**2 / N
        assert out["typical"] == pytest.approx(expected)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            BoundParams(a=-1, b=0, R=0, v=0, N=1, n=1)
