import numpy as np
import pytest
from hypothesis import given, strategies as st

from almostsync.errors import DimensionMismatch, NonFinite, NonHermitian, NotIsometry, NotNormalized
from almostsync.linalg import (
    complete_to_unitary,
    eigh,
    partial_trace,
    psd_sqrt,
    reduced_density,
    schmidt,
    spectral_map,
    threshold,
    transpose_in_basis,
)


def rand_herm(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2


def rand_psd(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return z @ z.conj().T


seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 12)


class TestEigh:
    def test_identity(self):
        assert np.allclose(eigh(np.eye(2)).eigenvalues, [1, 1])

    def test_diagonal(self):
        es = eigh(np.diag([1.0, 3.0]))
        assert np.allclose(es.eigenvalues, [3, 1])
        assert np.allclose(np.abs(es.eigenvectors), [[0, 1], [1, 0]])

    @given(seeds, dims)
    def test_reconstruction_and_order(self, seed, d):
        h = rand_herm(np.random.default_rng(seed), d)
        es = eigh(h)
        assert np.all(np.diff(es.eigenvalues) <= 0)
        assert np.linalg.norm(es.reconstruct() - h) <= 1e-9
        v = es.eigenvectors
        assert np.linalg.norm(v.conj().T @ v - np.eye(d)) <= 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitian):
            eigh(np.array([[0, 1], [0, 0]]))

    def test_rejects_nan(self):
        with pytest.raises(NonFinite):
            eigh(np.array([[np.nan, 0], [0, 1]]))


class TestSpectralMap:
    def test_identity_function(self, rng):
        h = rand_herm(rng, 5)
        assert np.linalg.norm(spectral_map(h, lambda w: w) - h) <= 1e-9

    def test_threshold_on_diagonal(self):
        out = spectral_map(np.diag([0.5, 0.3, 0.2]), threshold(0.4))
        assert np.allclose(out, np.diag([1, 0, 0]))

    def test_threshold_is_closed(self):
        assert np.allclose(spectral_map(np.diag([0.5, 0.2]), threshold(0.5)), np.diag([1, 0]))

    def test_sqrt_squares_back(self, rng):
        p = rand_psd(rng, 6)
        r = psd_sqrt(p)
        assert np.linalg.norm(r @ r - p) <= 1e-8

    @given(seeds, dims)
    def test_composition(self, seed, d):
        h = rand_herm(np.random.default_rng(seed), d)
        f, g = np.tanh, lambda w: w**2 - w
        lhs = spectral_map(h, lambda w: f(g(w)))
        rhs = spectral_map(spectral_map(h, g), f)
        assert np.linalg.norm(lhs - rhs) <= 1e-8

    @given(seeds, dims)
    def test_indicator_idempotent(self, seed, d):
        p = spectral_map(rand_herm(np.random.default_rng(seed), d), threshold(0.0))
        assert np.linalg.norm(p @ p - p) <= 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitian):
            spectral_map(np.array([[1, 2], [0, 1]]), np.abs)


class TestPartialTrace:
    def test_product(self, rng):
        zero = np.diag([1.0, 0.0])
        sigma = rand_psd(rng, 3)
        sigma /= np.trace(sigma)
        assert np.allclose(partial_trace(np.kron(zero, sigma), (2, 3), "A"), zero)
        assert np.allclose(partial_trace(np.kron(zero, sigma), (2, 3), "B"), sigma)

    def test_maximally_entangled(self):
        d = 3
        psi = np.eye(d).ravel() / np.sqrt(d)
        assert np.allclose(partial_trace(np.outer(psi, psi.conj()), (d, d)), np.eye(d) / d)

    @given(seeds, st.integers(1, 5), st.integers(1, 5))
    def test_trace_and_positivity(self, seed, d_a, d_b):
        rng = np.random.default_rng(seed)
        m = rand_psd(rng, d_a * d_b)
        for keep in "AB":
            out = partial_trace(m, (d_a, d_b), keep)
            assert abs(np.trace(out) - np.trace(m)) <= 1e-10 * max(1, abs(np.trace(m)))
            assert np.linalg.eigvalsh(out).min() >= -1e-10 * np.abs(np.trace(m))

    def test_matches_vector_route(self, rng):
        psi = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        psi /= np.linalg.norm(psi)
        full = np.outer(psi, psi.conj())
        for keep in "AB":
            assert np.allclose(partial_trace(full, (3, 4), keep), reduced_density(psi, 3, 4, keep))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            partial_trace(np.eye(5), (2, 3))

    def test_bad_selector(self):
        with pytest.raises(ValueError):
            partial_trace(np.eye(4), (2, 2), "C")


class TestSchmidt:
    def test_product(self):
        psi = np.kron([1, 0], [0, 1, 0])
        s = schmidt(psi, 2, 3)
        assert np.allclose(s.coefficients, [1.0])

    def test_epr(self):
        s = schmidt(np.array([1, 0, 0, 1]) / np.sqrt(2), 2, 2)
        assert np.allclose(s.coefficients, [1 / np.sqrt(2)] * 2)

    @given(seeds, st.integers(1, 5), st.integers(1, 5))
    def test_reconstruction_and_cross_oracle(self, seed, d_a, d_b):
        rng = np.random.default_rng(seed)
        psi = rng.standard_normal(d_a * d_b) + 1j * rng.standard_normal(d_a * d_b)
        psi /= np.linalg.norm(psi)
        s = schmidt(psi, d_a, d_b)
        assert abs(np.sum(s.coefficients**2) - 1) <= 1e-9
        assert np.all(np.diff(s.coefficients) <= 1e-15)
        rebuilt = sum(c * np.kron(s.left[:, j], s.right[:, j]) for j, c in enumerate(s.coefficients))
        assert np.linalg.norm(rebuilt - psi) <= 1e-8
        rho = partial_trace(np.outer(psi, psi.conj()), (d_a, d_b))
        ev = np.sort(np.linalg.eigvalsh(rho))[::-1][: len(s.coefficients)]
        assert np.allclose(s.coefficients**2, ev, atol=1e-8)

    def test_not_normalized(self):
        with pytest.raises(NotNormalized):
            schmidt(np.ones(4), 2, 2)


class TestCompleteToUnitary:
    def test_square_is_returned(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        assert np.allclose(complete_to_unitary(q), q)

    def test_single_column(self):
        u = complete_to_unitary(np.array([[1.0], [0.0], [0.0]]))
        assert np.allclose(u[:, 0], [1, 0, 0])
        assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-9)

    @given(seeds, st.integers(1, 8), st.integers(0, 8))
    def test_random_isometry(self, seed, k, extra):
        rng = np.random.default_rng(seed)
        n = k + extra
        v, _ = np.linalg.qr(rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))
        u = complete_to_unitary(v)
        assert np.linalg.norm(u.conj().T @ u - np.eye(n)) <= 1e-9
        assert np.allclose(u[:, :k], v)

    def test_deterministic(self, rng):
        v, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        assert np.array_equal(complete_to_unitary(v), complete_to_unitary(v))

    def test_rejects_non_isometry(self):
        with pytest.raises(NotIsometry):
            complete_to_unitary(np.array([[2.0], [0.0]]))


def test_transpose_in_standard_basis_is_plain_transpose(rng):
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.allclose(transpose_in_basis(x, np.eye(3)), x.T)
