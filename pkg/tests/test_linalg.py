import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hme import linalg as la
from hme.errors import DimensionError, NotDensityError, NotHermitianError

from .strategies import densities, hermitians, seeds

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def brute_partial_trace_first(m, d_a, d_b):
    # independent oracle: explicit index sum over A
    out = np.zeros((d_b, d_b), dtype=complex)
    for i in range(d_a):
        for b in range(d_b):
            for c in range(d_b):
                out[b, c] += m[i * d_b + b, i * d_b + c]
    return out


def brute_partial_transpose_first(m, d_a, d_b):
    out = np.zeros_like(m)
    for i in range(d_a):
        for j in range(d_a):
            for a in range(d_b):
                for b in range(d_b):
                    out[j * d_b + a, i * d_b + b] = m[i * d_b + a, j * d_b + b]
    return out


class TestKron:
    def test_identities(self):
        assert np.array_equal(la.kron(I2, I2), np.eye(4))

    def test_projector_with_z(self):
        p0 = np.diag([1.0, 0.0])
        assert np.allclose(la.kron(p0, Z), np.diag([1, -1, 0, 0]))

    def test_xx_fixes_phi_plus(self):
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        assert np.allclose(la.kron(X, X) @ phi, phi)

    def test_variadic(self):
        assert la.kron(I2, I2, I2).shape == (8, 8)


class TestPartialTrace:
    def test_product(self, rng):
        a, b = la.random_density(2, rng), la.random_density(3, rng)
        assert np.allclose(la.partial_trace(np.kron(a, b), (2, 3), 1), b)
        assert np.allclose(la.partial_trace(np.kron(a, b), (2, 3), 0), a)

    def test_bell_marginal(self):
        bell = la.phi_plus(2) / 2
        assert np.allclose(la.partial_trace(bell, (2, 2), 0), I2 / 2)
        assert np.allclose(brute_partial_trace_first(bell, 2, 2), I2 / 2)

    def test_against_brute_force(self, rng):
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        assert np.allclose(la.partial_trace(m, (2, 3), 1), brute_partial_trace_first(m, 2, 3))

    def test_full_trace(self, rng):
        m = la.random_hermitian(6, rng)
        out = la.partial_trace(m, (2, 3), ())
        assert out.shape == (1, 1)
        assert np.isclose(out[0, 0], np.trace(m))

    def test_three_systems(self, rng):
        a, b, c = (la.random_density(d, rng) for d in (2, 3, 2))
        m = la.kron(a, b, c)
        assert np.allclose(la.partial_trace(m, (2, 3, 2), (0, 2)), np.kron(a, c))

    def test_bad_dims(self):
        with pytest.raises(DimensionError):
            la.partial_trace(np.eye(4), (2, 3), 0)

    @given(densities(6))
    def test_trace_preserving(self, rho):
        assert np.isclose(np.trace(la.partial_trace(rho, (2, 3), 1)), np.trace(rho))


class TestPartialTranspose:
    def test_diagonal_unchanged(self):
        m = np.diag(np.arange(4.0))
        assert np.array_equal(la.partial_transpose(m, (2, 2), 0), m)

    def test_bell(self):
        pt = la.partial_transpose(la.phi_plus(2) / 2, (2, 2), 0)
        assert np.allclose(pt, la.swap(2) / 2)
        w, _ = la.jacobi_eigh(pt)
        assert np.allclose(w, [0.5, 0.5, 0.5, -0.5])

    def test_product(self, rng):
        a, b = la.random_hermitian(2, rng), la.random_hermitian(3, rng)
        assert np.allclose(la.partial_transpose(np.kron(a, b), (2, 3), 0), np.kron(a.T, b))

    def test_brute_force(self, rng):
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        assert np.allclose(la.partial_transpose(m, (2, 3), 0), brute_partial_transpose_first(m, 2, 3))

    def test_both_is_full_transpose(self, rng):
        m = rng.standard_normal((6, 6))
        assert np.allclose(la.partial_transpose(m, (2, 3), (0, 1)), m.T)

    @given(seeds, st.integers(1, 3), st.integers(1, 3))
    def test_involution_and_trace(self, seed, d_a, d_b):
        rng = np.random.default_rng(seed)
        n = d_a * d_b
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        pt = la.partial_transpose(m, (d_a, d_b), 0)
        assert np.allclose(la.partial_transpose(pt, (d_a, d_b), 0), m)
        assert np.isclose(np.trace(pt), np.trace(m))


class TestEigh:
    def test_z(self):
        w, v = la.eigh(Z)
        assert np.allclose(w, [1, -1])
        assert np.isclose(abs(v[0, 0]), 1) and np.isclose(abs(v[1, 1]), 1)

    def test_x(self):
        w, v = la.eigh(X)
        assert np.allclose(w, [1, -1])
        plus = np.array([1, 1]) / np.sqrt(2)
        assert np.isclose(abs(np.vdot(plus, v[:, 0])), 1)

    def test_descending(self, rng):
        w, _ = la.eigh(la.random_hermitian(8, rng))
        assert np.all(np.diff(w) <= 0)

    def test_reconstruction_8(self, rng):
        h = la.random_hermitian(8, rng)
        w, v = la.eigh(h)
        assert np.max(np.abs(v @ np.diag(w) @ la.dagger(v) - h)) < 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            la.eigh(np.array([[0, 1], [0, 0]], dtype=complex))

    @given(hermitians())
    def test_jacobi_agrees_with_lapack(self, h):
        w1, v1 = la.jacobi_eigh(h)
        w2, _ = la.eigh(h)
        assert np.allclose(w1, w2, atol=1e-10)
        assert np.allclose(v1 @ np.diag(w1) @ la.dagger(v1), h, atol=1e-10)
        assert np.allclose(la.dagger(v1) @ v1, np.eye(h.shape[0]), atol=1e-10)


class TestHermExp:
    def test_zero_time(self, rng):
        assert np.allclose(la.herm_exp(la.random_hermitian(4, rng), 0), np.eye(4))

    def test_projector_at_pi(self, rng):
        psi = la.pure(la.haar_state(3, rng))
        assert np.allclose(la.herm_exp(psi, np.pi), np.eye(3) - 2 * psi)

    def test_diagonal(self):
        assert np.allclose(la.herm_exp(Z, np.pi / 2), np.diag([np.exp(-0.5j * np.pi), np.exp(0.5j * np.pi)]))

    @given(hermitians(), st.floats(-3, 3), st.floats(-3, 3))
    def test_group_law(self, h, s, t):
        assert np.allclose(la.herm_exp(h, s) @ la.herm_exp(h, t), la.herm_exp(h, s + t), atol=1e-8)

    @given(hermitians(), st.floats(-5, 5))
    def test_unitary(self, h, t):
        u = la.herm_exp(h, t)
        assert np.allclose(u @ la.dagger(u), np.eye(h.shape[0]), atol=1e-10)


class TestNorms:
    @given(densities())
    def test_trace_norm_of_state(self, rho):
        assert np.isclose(la.trace_norm(rho), 1.0)

    def test_swap_norm(self):
        assert np.isclose(la.op_norm(la.swap(2)), 1.0)
        assert np.isclose(la.op_norm(la.swap(3)), 1.0)

    def test_nonhermitian_paths(self):
        m = np.array([[0, 2], [0, 0]], dtype=complex)
        assert np.isclose(la.op_norm(m), 2) and np.isclose(la.trace_norm(m), 2)

    @given(seeds)
    def test_trace_norm_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        u, v = la.haar_unitary(8, rng), la.haar_unitary(8, rng)
        assert np.isclose(la.trace_norm(u @ m @ v), la.trace_norm(m), rtol=1e-8)

    def test_frobenius(self):
        assert np.isclose(la.frobenius_norm(np.eye(4)), 2)


class TestFidelity:
    def test_same(self, rng):
        rho = la.random_density(4, rng)
        assert np.isclose(la.fidelity(rho, rho), 1)

    def test_orthogonal(self):
        assert np.isclose(la.fidelity(np.diag([1.0, 0]), np.diag([0, 1.0])), 0)

    def test_pure_overlap(self, rng):
        a, b = la.haar_state(3, rng), la.haar_state(3, rng)
        assert np.isclose(la.fidelity(la.pure(a), la.pure(b)), abs(np.vdot(a, b)) ** 2)

    @given(seeds)
    def test_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        r, s = la.random_density(3, rng), la.random_density(3, rng, rank=2)
        assert np.isclose(la.fidelity(r, s), la.fidelity(s, r), atol=1e-8)


class TestDensity:
    def test_clips_tiny_negative(self):
        m = np.diag([1 + 5e-11, -5e-11]).astype(complex)
        out = la.as_density(m)
        assert np.min(np.linalg.eigvalsh(out)) >= 0
        assert np.isclose(np.trace(out), 1)

    def test_rejects_negative(self):
        with pytest.raises(NotDensityError):
            la.as_density(np.diag([1.1, -0.1]))

    def test_rejects_trace(self):
        with pytest.raises(NotDensityError):
            la.as_density(np.eye(2))

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotDensityError):
            la.as_density(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_zero_vector(self):
        with pytest.raises(NotDensityError):
            la.pure(np.zeros(2))


class TestHaar:
    def test_one_dimensional(self, rng):
        psi = la.haar_state(1, rng)
        assert np.isclose(abs(psi[0]), 1)

    def test_deterministic(self):
        a = la.haar_unitary(4, np.random.default_rng(5))
        b = la.haar_unitary(4, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_unitary(self, rng):
        u = la.haar_unitary(6, rng)
        assert np.allclose(u @ la.dagger(u), np.eye(6))

    def test_first_component_mean(self):
        rng = np.random.default_rng(7)
        vals = [abs(la.haar_state(4, rng)[0]) ** 2 for _ in range(10_000)]
        assert abs(np.mean(vals) - 0.25) < 0.02

    def test_marginal_purity(self):
        rng = np.random.default_rng(8)
        pur = []
        for _ in range(10_000):
            r = la.partial_trace(la.pure(la.haar_state(4, rng)), (2, 2), 1)
            pur.append(np.trace(r @ r).real)
        assert abs(np.mean(pur) - 0.8) < 0.02

    def test_haar_unitary_column_is_uniform(self):
        # the phase fix makes |U_00|^2 uniform-sphere distributed with mean 1/d
        rng = np.random.default_rng(9)
        vals = [abs(la.haar_unitary(3, rng)[0, 0]) ** 2 for _ in range(5000)]
        assert abs(np.mean(vals) - 1 / 3) < 0.02

    def test_random_density_rank(self, rng):
        rho = la.random_density(5, rng, rank=2)
        assert np.sum(np.linalg.eigvalsh(rho) > 1e-12) == 2

    def test_random_hermitian_norm(self, rng):
        assert np.isclose(la.op_norm(la.random_hermitian(5, rng, norm=0.3)), 0.3)


class TestMisc:
    def test_permute_systems(self, rng):
        a, b, c = (la.random_hermitian(d, rng) for d in (2, 3, 2))
        got = la.permute_systems(la.kron(a, b, c), (2, 3, 2), (2, 0, 1))
        assert np.allclose(got, la.kron(c, a, b))

    def test_permute_bad(self):
        with pytest.raises(DimensionError):
            la.permute_systems(np.eye(4), (2, 2), (0, 0))

    def test_sqrtm(self, rng):
        rho = la.random_density(4, rng)
        s = la.sqrtm_psd(rho)
        assert np.allclose(s @ s, rho)

    def test_swap_action(self, rng):
        a, b = la.haar_state(3, rng), la.haar_state(3, rng)
        assert np.allclose(la.swap(3) @ np.kron(a, b), np.kron(b, a))
