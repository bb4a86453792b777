import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randpf import linalg
from randpf.hamiltonian import dense, heisenberg_1d
from randpf.linalg import (
    EigenConvergenceError,
    apply,
    expm_hermitian,
    haar_state,
    haar_unitary,
    hermitian_eig,
    matmul,
    operator_norm,
    pure_trace_distance,
    unitary_diamond_distance,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])


def random_hermitian(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


class TestMatmul:
    def test_identity(self, rng):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        np.testing.assert_array_equal(matmul(np.eye(4), a), a)

    def test_involution(self):
        np.testing.assert_array_equal(matmul(X, X), np.eye(2))

    def test_z_times_x_is_i_y(self):
        np.testing.assert_allclose(matmul(Z, X), 1j * Y)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matmul(np.eye(2), np.eye(4))


class TestHermitianEig:
    def test_diagonal(self):
        eig = hermitian_eig(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(eig.eigenvalues, [1, 3])
        np.testing.assert_allclose(np.abs(eig.eigenvectors), [[0, 1], [1, 0]], atol=1e-15)

    def test_pauli_x(self):
        np.testing.assert_allclose(hermitian_eig(X).eigenvalues, [-1, 1], atol=1e-15)

    def test_heisenberg_two_sites_matches_characteristic_polynomial(self):
        h = dense(heisenberg_1d(2))
        # compare characteristic polynomials; root finding on the triple root is ill-conditioned
        w = hermitian_eig(h).eigenvalues
        np.testing.assert_allclose(np.poly(w), np.poly(h).real, atol=1e-12)
        np.testing.assert_allclose(hermitian_eig(h).eigenvalues, [-3, 1, 1, 1], atol=1e-12)

    @pytest.mark.parametrize("d", [1, 3, 8, 32])
    def test_invariants(self, d, rng):
        h = random_hermitian(d, rng)
        eig = hermitian_eig(h)
        q = eig.eigenvectors
        assert np.all(np.diff(eig.eigenvalues) >= 0)
        assert np.max(np.abs(eig.reconstruct() - h)) <= 1e-9 * np.max(np.abs(h))
        assert np.max(np.abs(q.conj().T @ q - np.eye(d))) <= 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_sweep_cap_raises(self, monkeypatch, rng):
        monkeypatch.setattr(linalg, "MAX_SWEEPS", 1)
        with pytest.raises(EigenConvergenceError):
            hermitian_eig(random_hermitian(16, rng))


class TestExpm:
    def test_zero_time(self, rng):
        np.testing.assert_allclose(expm_hermitian(random_hermitian(4, rng), 0.0), np.eye(4), atol=1e-13)

    def test_diagonal(self):
        np.testing.assert_allclose(
            expm_hermitian(Z, np.pi / 2), np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)]), atol=1e-15
        )

    def test_matches_taylor_series(self):
        a = -1j * (X + Z)
        term = np.eye(2, dtype=complex)
        total = term.copy()
        for k in range(1, 50):
            term = term @ a / k
            total += term
        np.testing.assert_allclose(expm_hermitian(X + Z, 1.0), total, atol=1e-14)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-5, 5))
    def test_inverse_and_unitary(self, seed, theta):
        h = random_hermitian(6, np.random.default_rng(seed))
        u = expm_hermitian(h, theta)
        assert np.max(np.abs(u @ expm_hermitian(h, -theta) - np.eye(6))) <= 1e-9
        assert np.max(np.abs(u.conj().T @ u - np.eye(6))) <= 1e-10


class TestOperatorNorm:
    def test_identity(self):
        assert operator_norm(np.eye(5)) == pytest.approx(1.0, abs=1e-14)

    def test_zero(self, rng):
        u = haar_unitary(4, rng)
        assert operator_norm(u - u) == 0.0

    def test_phase_gap(self):
        phi = 0.3
        val = operator_norm(np.diag([1, np.exp(1j * phi)]) - np.eye(2))
        assert val == pytest.approx(abs(np.exp(1j * phi) - 1), abs=1e-14)
        assert val == pytest.approx(0.29887626494719843, abs=1e-12)

    @pytest.mark.parametrize("d", [2, 5, 12])
    def test_unitary_invariance(self, d, rng):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        w, q = haar_unitary(d, rng), haar_unitary(d, rng)
        assert operator_norm(w @ a @ q) == pytest.approx(operator_norm(a), abs=1e-9)
        assert operator_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-12)


class TestPureTraceDistance:
    def test_same_state(self, rng):
        u = haar_state(4, rng)
        assert pure_trace_distance(u, u) == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal(self):
        assert pure_trace_distance([1, 0], [0, 1]) == 1.0

    def test_rotation(self):
        v = [np.cos(0.2), np.sin(0.2)]
        assert pure_trace_distance([1, 0], v) == pytest.approx(np.sin(0.2), abs=1e-12)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="normalized"):
            pure_trace_distance([1, 1], [1, 0])


class TestDiamond:
    def test_same(self, rng):
        u = haar_unitary(4, rng)
        assert unitary_diamond_distance(u, u) == pytest.approx(0.0, abs=1e-7)

    def test_antipodal(self):
        assert unitary_diamond_distance(np.eye(2), np.diag([1.0, -1.0])) == pytest.approx(1.0)

    def test_chord_midpoint(self):
        v = expm_hermitian(Z, 0.4)
        assert unitary_diamond_distance(np.eye(2), v) == pytest.approx(np.sin(0.4), abs=1e-12)

    def test_degenerate_spectrum(self, rng):
        w = haar_unitary(6, rng)
        phases = np.exp(1j * np.array([0.1, 0.1, 0.1, 0.5, 0.5, -0.2]))
        v = w @ np.diag(phases) @ w.conj().T
        expected = np.sqrt(1 - np.cos(0.35) ** 2)
        assert unitary_diamond_distance(np.eye(6), v) == pytest.approx(expected, abs=1e-10)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError, match="unitary"):
            unitary_diamond_distance(np.eye(2), 2 * np.eye(2))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_largest_arc_gap(self, seed):
        rng = np.random.default_rng(seed)
        d = 8
        phases = rng.uniform(-0.8, 0.8, size=d) * (seed + 1) / 2
        w = haar_unitary(d, rng)
        v = w @ np.diag(np.exp(1j * phases)) @ w.conj().T
        ang = np.sort(np.mod(phases, 2 * np.pi))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        g = gaps.max()
        delta = np.cos((2 * np.pi - g) / 2) if g > np.pi else 0.0
        assert unitary_diamond_distance(np.eye(d), v) == pytest.approx(np.sqrt(1 - delta**2), abs=1e-9)


class TestApply:
    def test_identity(self, rng):
        psi = haar_state(4, rng)
        np.testing.assert_array_equal(apply(np.eye(4), psi), psi)

    def test_flip(self):
        np.testing.assert_array_equal(apply(X, [1, 0]), [0, 1])

    def test_associativity(self, rng):
        u = haar_unitary(4, rng)
        psi = haar_state(4, rng)
        np.testing.assert_allclose(apply(u, apply(u, psi)), apply(matmul(u, u), psi), atol=1e-12)
        assert np.linalg.norm(apply(u, psi)) == pytest.approx(1.0, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply(np.eye(2), np.ones(3))


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_norm_sandwich(d, rng):
    u, v = haar_unitary(d, rng), haar_unitary(d, rng)
    diamond = unitary_diamond_distance(u, v)
    sampled = max(pure_trace_distance(u @ s, v @ s) for s in (haar_state(d, rng) for _ in range(200)))
    assert sampled <= diamond + 1e-8
    assert diamond <= operator_norm(u - v) + 1e-8
