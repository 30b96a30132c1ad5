import numpy as np
import pytest

from relaxbdf.linalg import (
    ExponentialOverflowError,
    NotSymmetricError,
    SingularMatrixError,
    is_negative_semidefinite,
    is_spd,
    jacobi_eigh,
    inverse,
    lu_factor,
    lu_solve,
    matrix_exponential,
    validate_matrix,
)


def series_exponential(matrix, t, max_terms=200):
    """Independent oracle: term-by-term Taylor series summed to stagnation."""
    n = matrix.shape[0]
    total = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, max_terms):
        term = term @ (t * matrix) / k
        previous = total.copy()
        total = total + term
        if np.array_equal(previous, total):
            break
    return total


class TestLuSolve:
    def test_identity(self):
        x = lu_solve(np.eye(3), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 2.0, 3.0], rtol=0, atol=0)

    def test_diagonal(self):
        x = lu_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_random_multiply_back(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.standard_normal((5, 5)) + 5.0 * np.eye(5)
            b = rng.standard_normal(5)
            x = lu_solve(a, b)
            residual = np.linalg.norm(a @ x - b)
            bound = 1e-10 * (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b))
            assert residual <= bound

    def test_matrix_rhs_and_complex(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 4)) + 4.0 * np.eye(4)
        b = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        x = lu_factor(a).solve(b)
        assert np.abs(a @ x - b).max() < 1e-12

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))

    def test_factor_reconstruction(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((6, 6)) + 3.0 * np.eye(6)
        fac = lu_factor(a)
        reconstructed = fac.lower() @ fac.upper()
        permuted = a[fac.row_order]
        rel = np.linalg.norm(reconstructed - permuted) / np.linalg.norm(a)
        assert rel <= 1e-12

    def test_inverse(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 4)) + 4.0 * np.eye(4)
        assert np.abs(a @ inverse(a) - np.eye(4)).max() < 1e-12


class TestMatrixExponential:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(matrix_exponential(np.zeros((3, 3)), 2.5), np.eye(3))

    def test_diagonal(self):
        result = matrix_exponential(np.diag([1.0, -2.0]), 0.3)
        np.testing.assert_allclose(np.diag(result), np.exp([0.3, -0.6]), rtol=1e-14)

    def test_random_vs_series_oracle(self):
        rng = np.random.default_rng(42)
        m = rng.standard_normal((4, 4))
        expected = series_exponential(m, 0.7)
        np.testing.assert_allclose(matrix_exponential(m, 0.7), expected, rtol=0, atol=1e-13)

    def test_complex_vs_series_oracle(self):
        rng = np.random.default_rng(9)
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        expected = series_exponential(m, 0.4)
        np.testing.assert_allclose(matrix_exponential(m, 0.4), expected, atol=1e-13)

    @pytest.mark.parametrize("scale", [1.0, 10.0, 50.0])
    def test_semigroup(self, scale):
        rng = np.random.default_rng(int(scale))
        m = rng.standard_normal((4, 4))
        m = (m - m.T) - 0.5 * np.eye(4)  # skew plus damping: bounded propagators
        m *= scale / max(np.abs(scale * m).sum(axis=0).max(), 1.0) * scale
        combined = matrix_exponential(m, 0.9)
        composed = matrix_exponential(m, 0.5) @ matrix_exponential(m, 0.4)
        denom = max(np.abs(combined).max(), 1.0)
        assert np.abs(combined - composed).max() / denom < 1e-10

    def test_derivative_matches_generator(self):
        # d/dt exp(tM) = M exp(tM), checked by central differences in t.
        rng = np.random.default_rng(2)
        m = rng.standard_normal((3, 3))
        t, h = 0.6, 1e-5
        derivative = (matrix_exponential(m, t + h) - matrix_exponential(m, t - h)) / (2 * h)
        np.testing.assert_allclose(derivative, m @ matrix_exponential(m, t), atol=1e-8)

    def test_overflow_reported(self):
        with pytest.raises(ExponentialOverflowError):
            matrix_exponential(np.array([[1.0]]), 1e30)

    def test_stiff_relaxation_block_accuracy(self):
        # Stiff decay pins the deep-squaring path: exact answer is diagonal.
        m = np.diag([0.0, -2.0e6])
        result = matrix_exponential(m, 2.0)
        np.testing.assert_allclose(np.diag(result), [1.0, 0.0], atol=1e-14)
        assert np.abs(result - np.diag(np.diag(result))).max() == 0.0


class TestDefiniteness:
    def test_identity_spd(self):
        assert is_spd(np.eye(4))

    def test_indefinite_witness_pivot(self):
        report = is_spd(np.diag([1.0, -1.0]))
        assert not report
        assert report.pivot_index == 2
        assert report.value == pytest.approx(-1.0)

    def test_asymmetric_fails(self):
        report = is_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))
        assert not report and "asymmetry" in report.detail

    def test_arz_symmetrizer_is_spd(self):
        assert is_spd(np.array([[3.0, 2.0], [2.0, 4.0]]))

    def test_nsd_zero_and_diagonal(self):
        assert is_negative_semidefinite(np.zeros((3, 3)))
        assert is_negative_semidefinite(np.diag([-1.0, -2.0]))

    def test_nsd_rejects_positive(self):
        report = is_negative_semidefinite(np.diag([-1.0, 0.5]))
        assert not report
        assert report.value == pytest.approx(0.5, abs=1e-12)

    def test_nsd_requires_symmetry(self):
        with pytest.raises(NotSymmetricError):
            is_negative_semidefinite(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_moment_model_coupling_matrix(self):
        # With identity witness the 6x6 moment-system coupling matrix reduces
        # to -diag(0,0,0,1,1,1), assembled here by direct matrix arithmetic.
        source = -np.diag([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        projector = np.diag([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        coupling = source + source.T + projector
        np.testing.assert_array_equal(coupling, -projector)
        assert is_negative_semidefinite(coupling)

    def test_spd_matches_jacobi_sign_pattern(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            seed = rng.standard_normal((4, 4))
            sym = seed + seed.T
            eigenvalues, _ = jacobi_eigh(sym)
            assert bool(is_spd(sym, 1e-12)) == bool(eigenvalues[0] > 1e-12)


class TestJacobi:
    def test_known_eigenvalues(self):
        w, v = jacobi_eigh(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(w, [1.0, 3.0], atol=1e-13)
        np.testing.assert_allclose(v @ v.T, np.eye(2), atol=1e-13)

    def test_reconstruction(self):
        rng = np.random.default_rng(19)
        seed = rng.standard_normal((6, 6))
        sym = seed + seed.T
        w, v = jacobi_eigh(sym)
        np.testing.assert_allclose(v @ np.diag(w) @ v.T, sym, atol=1e-11)
        assert np.all(np.diff(w) >= 0)


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            validate_matrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_rejects_nonsquare_when_required(self):
        with pytest.raises(ValueError):
            validate_matrix(np.zeros((2, 3)))
