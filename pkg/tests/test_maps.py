import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hme import engine as en
from hme import linalg as la
from hme import maps as mp
from hme.errors import (
    DimensionError,
    NotHermitianError,
    NotHermitianPreservingError,
    ParameterError,
    SingularMapError,
)

from .strategies import seeds

Z = np.diag([1.0, -1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def builtin_maps():
    return [
        mp.identity(2),
        mp.identity(3),
        mp.transpose(2),
        mp.reduction(3),
        mp.partial_transpose_map(2, 2),
        mp.partial_reduction(2, 3),
        mp.amplitude_damping(0.3),
        mp.amplitude_damping_inverse(0.3),
        mp.observable_map(Z),
        mp.sandwich(np.array([[1, 2j], [0, 1], [1, 1]])),
    ]


def apply_by_basis(n, rho):
    # oracle: expand rho in matrix units and read each image off the Choi blocks
    d_in, d_out = n.d_in, n.d_out
    c = n.choi.reshape(d_in, d_out, d_in, d_out)
    out = np.zeros((d_out, d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            out += rho[i, j] * c[i, :, j, :]
    return out


class TestApply:
    def test_identity(self, rng):
        rho = la.random_density(3, rng)
        assert np.allclose(mp.apply_map(mp.identity(3), rho), rho)

    def test_reduction_fixes_mixed(self):
        assert np.allclose(mp.apply_map(mp.reduction(2), np.eye(2) / 2), np.eye(2) / 2)

    def test_observable(self):
        out = mp.apply_map(mp.observable_map(Z), np.diag([1.0, 0.0]))
        assert np.allclose(out, np.diag([0.0, 1.0]))

    def test_transpose(self, rng):
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.allclose(mp.transpose(3)(m), m.T)

    def test_sandwich(self, rng):
        p = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        rho = la.random_density(2, rng)
        assert np.allclose(mp.sandwich(p)(rho), p @ rho @ la.dagger(p))

    @pytest.mark.parametrize("k", range(len(builtin_maps())))
    def test_matches_basis_oracle(self, k, rng):
        n = builtin_maps()[k]
        rho = la.random_density(n.d_in, rng)
        assert np.allclose(mp.apply_map(n, rho), apply_by_basis(n, rho))

    def test_superop_consistent(self, rng):
        n = mp.amplitude_damping(0.4)
        rho = la.random_density(2, rng)
        vec = n.superop @ rho.reshape(-1, order="F")
        assert np.allclose(vec.reshape(2, 2, order="F"), n(rho))

    def test_choi_superop_roundtrip(self, rng):
        c = la.random_hermitian(6, rng)
        s = mp.choi_to_superop(c, 2, 3)
        assert np.allclose(mp.superop_to_choi(s, 2, 3), c)

    def test_wrong_input_shape(self):
        with pytest.raises(DimensionError):
            mp.apply_map(mp.identity(2), np.eye(3))


class TestHamiltonians:
    def test_identity_is_swap(self):
        h = mp.hamiltonian_of(mp.identity(2))
        assert np.allclose(h.mat, la.swap(2))
        assert np.isclose(h.op_norm, 1)

    @pytest.mark.parametrize("d_a,d_b", [(2, 2), (3, 2), (2, 3)])
    def test_partial_transpose(self, d_a, d_b):
        h = mp.hamiltonian_of(mp.partial_transpose_map(d_a, d_b))
        expect = la.permute_systems(np.kron(la.phi_plus(d_a), la.swap(d_b)), (d_a, d_a, d_b, d_b), (0, 2, 1, 3))
        assert np.allclose(h.mat, expect)
        assert np.isclose(h.op_norm, d_a)

    def test_partial_reduction(self):
        h = mp.hamiltonian_of(mp.partial_reduction(2, 2))
        i_s = la.permute_systems(np.kron(np.eye(4), la.swap(2)), (2, 2, 2, 2), (0, 2, 1, 3))
        expect = i_s - la.swap(4)
        assert np.allclose(h.mat, expect)
        assert np.isclose(h.op_norm, 2)

    def test_partial_reduction_norm_constant(self):
        assert np.isclose(mp.hamiltonian_of(mp.partial_reduction(4, 4)).op_norm, 2)

    def test_damping_inverse_norm(self):
        assert np.isclose(mp.hamiltonian_of(mp.amplitude_damping_inverse(0.5)).op_norm, 2)

    def test_tensor_damping_inverse_norm(self):
        inv = mp.amplitude_damping_inverse(0.5)
        assert np.isclose(mp.hamiltonian_of(mp.tensor_maps(inv, inv)).op_norm, 4)

    def test_non_hermitian_rejected(self):
        with pytest.raises(NotHermitianError):
            mp.Hamiltonian(np.array([[0, 1], [0, 0]], dtype=complex), 1, 2)

    def test_addition(self):
        h = mp.hamiltonian_of(mp.identity(2))
        assert np.allclose((h + h).mat, 2 * la.swap(2))
        with pytest.raises(DimensionError):
            h + mp.hamiltonian_of(mp.identity(3))


class TestHermitianPreserving:
    def test_swap(self):
        assert mp.is_hermitian_preserving(la.swap(2))

    def test_times_i(self):
        assert not mp.is_hermitian_preserving(1j * la.phi_plus(2))
        with pytest.raises(NotHermitianPreservingError):
            mp.from_choi(1j * la.phi_plus(2))

    def test_damping_inverse(self):
        assert mp.is_hermitian_preserving(mp.amplitude_damping_inverse(0.5).choi)

    @pytest.mark.parametrize("k", range(len(builtin_maps())))
    def test_builtins(self, k):
        assert mp.is_hermitian_preserving(builtin_maps()[k].choi)


class TestBuilders:
    def test_damping_zero_is_identity(self):
        assert np.allclose(mp.amplitude_damping(0).choi, mp.identity(2).choi)

    def test_damping_action(self):
        g = 0.3
        out = mp.amplitude_damping(g)(np.diag([0.0, 1.0]))
        assert np.allclose(out, np.diag([g, 1 - g]))

    def test_damping_range(self):
        with pytest.raises(ParameterError):
            mp.amplitude_damping(1.2)
        with pytest.raises(ParameterError):
            mp.amplitude_damping_inverse(-0.1)
        with pytest.raises(SingularMapError):
            mp.amplitude_damping_inverse(1.0)

    def test_partial_reduction_product_kernel(self, rng):
        a, b = la.pure(la.haar_state(2, rng)), la.pure(la.haar_state(2, rng))
        out = mp.partial_reduction(2, 2)(np.kron(a, b))
        assert np.isclose(np.linalg.eigvalsh(out)[0], 0, atol=1e-12)
        assert np.allclose(out, np.kron(np.eye(2), b) - np.kron(a, b))

    def test_from_choi_infers_dims(self):
        n = mp.from_choi(np.eye(6), d_in=2)
        assert (n.d_in, n.d_out) == (2, 3)
        with pytest.raises(DimensionError):
            mp.from_choi(np.eye(6))

    def test_kraus_signed(self):
        n = mp.choi_from_kraus([(1.0, np.eye(2)), (-0.5, Z)])
        assert np.allclose(n(np.eye(2)), 0.5 * np.eye(2))

    def test_kraus_empty(self):
        with pytest.raises(ParameterError):
            mp.choi_from_kraus([])

    def test_kraus_shapes(self):
        with pytest.raises(DimensionError):
            mp.choi_from_kraus([(1.0, np.eye(2)), (1.0, np.eye(3))])


class TestAlgebra:
    def test_invert_identity(self):
        assert np.allclose(mp.invert_map(mp.identity(3)).choi, mp.identity(3).choi)

    def test_invert_matches_closed_form(self):
        got = mp.invert_map(mp.amplitude_damping(0.3)).choi
        assert np.max(np.abs(got - mp.amplitude_damping_inverse(0.3).choi)) < 1e-10

    def test_invert_singular(self):
        with pytest.raises(SingularMapError):
            mp.invert_map(mp.amplitude_damping(1.0))

    def test_invert_rectangular(self):
        with pytest.raises(DimensionError):
            mp.invert_map(mp.observable_map(np.eye(3)))

    def test_tensor_product_inputs(self, rng):
        a, b = mp.amplitude_damping(0.2), mp.reduction(3)
        r, s = la.random_density(2, rng), la.random_density(3, rng)
        assert np.allclose(mp.tensor_maps(a, b)(np.kron(r, s)), np.kron(a(r), b(s)))

    def test_compose(self, rng):
        a, b = mp.amplitude_damping(0.2), mp.transpose(2)
        rho = la.random_density(2, rng)
        assert np.allclose(mp.compose_maps(a, b)(rho), a(b(rho)))
        with pytest.raises(DimensionError):
            mp.compose_maps(mp.identity(3), mp.identity(2))

    def test_condition_number(self):
        assert np.isclose(mp.condition_number(mp.identity(2)), 1)
        assert mp.condition_number(mp.amplitude_damping(1.0)) == np.inf

    @given(seeds, st.floats(0.0, 0.9))
    def test_inverse_roundtrip(self, seed, gamma):
        rng = np.random.default_rng(seed)
        n = mp.amplitude_damping(gamma)
        inv = mp.invert_map(n)
        for _ in range(20):
            rho = la.random_density(2, rng)
            assert np.allclose(inv(n(rho)), rho, atol=1e-8)


class TestProperties:
    @given(seeds, st.sampled_from(range(len(builtin_maps()))))
    def test_hermitian_output(self, seed, k):
        n = builtin_maps()[k]
        h = la.random_hermitian(n.d_in, np.random.default_rng(seed))
        out = n(h)
        assert np.max(np.abs(out - la.dagger(out))) < 1e-10

    @given(seeds, st.sampled_from(range(len(builtin_maps()))))
    def test_output_norm_bounded_by_hamiltonian(self, seed, k):
        n = builtin_maps()[k]
        rho = la.random_density(n.d_in, np.random.default_rng(seed))
        assert la.op_norm(n(rho)) <= mp.hamiltonian_of(n).op_norm + 1e-10

    @given(seeds, st.sampled_from(["pt", "pr"]))
    def test_positive_on_separable(self, seed, kind):
        rng = np.random.default_rng(seed)
        n = mp.partial_transpose_map(2, 3) if kind == "pt" else mp.partial_reduction(2, 3)
        rho = np.kron(la.random_density(2, rng), la.random_density(3, rng))
        assert np.linalg.eigvalsh(n(rho))[0] >= -1e-9


class TestControlled:
    def test_norm(self):
        h = mp.hamiltonian_of(mp.partial_reduction(2, 2))
        assert np.isclose(la.op_norm(mp.controlled_extension(h).mat), 2)
        assert mp.controlled_extension(h).op_norm == h.op_norm

    def test_control_zero_unchanged(self, rng):
        h = mp.hamiltonian_of(mp.identity(2))
        ch = mp.controlled_extension(h)
        rho, sigma = la.random_density(2, rng), la.random_density(2, rng)
        start = np.kron(np.diag([1.0, 0.0]), sigma)
        q = en.hme_channel(rho, en.HMESchedule(ch, 1.0, 20))
        assert np.allclose(q(start), start, atol=1e-12)

    def test_control_one_matches_plain(self, rng):
        h = mp.hamiltonian_of(mp.identity(2))
        ch = mp.controlled_extension(h)
        rho, sigma = la.random_density(2, rng), la.random_density(2, rng)
        q = en.hme_channel(rho, en.HMESchedule(ch, 1.0, 20))
        plain = en.hme_channel(rho, en.HMESchedule(h, 1.0, 20))
        got = q(np.kron(np.diag([0.0, 1.0]), sigma))[2:, 2:]
        assert np.max(np.abs(got - plain(sigma))) < 1e-9


class TestGauge:
    def test_m_tensor_identity(self, rng):
        h = mp.hamiltonian_of(mp.identity(2))
        assert mp.hamiltonian_freedom_check(h, mp.gauge_shift(h, Z), 2, 2)

    def test_identity_tensor_m(self, rng):
        h = mp.Hamiltonian(la.random_hermitian(4, rng), 2, 2)
        other = mp.Hamiltonian(h.mat + np.kron(np.eye(2), Z), 2, 2)
        assert not mp.hamiltonian_freedom_check(h, other, 2, 2)

    def test_shift_leaves_first_order_generator(self, rng):
        # Tr_1[(M (x) I), rho (x) sigma] = Tr([M, rho]) sigma = 0
        m = la.random_hermitian(2, rng)
        rho, sigma = la.random_density(2, rng), la.random_density(2, rng)
        comm = la.commutator(np.kron(m, np.eye(2)), np.kron(rho, sigma))
        assert np.allclose(la.partial_trace(comm, (2, 2), 1), 0)

    def test_channel_difference_decays_as_one_over_k(self, rng):
        h = mp.hamiltonian_of(mp.identity(2))
        h2 = mp.gauge_shift(h, X)
        rho = la.random_density(2, rng)
        diffs = []
        for k in (50, 500, 5000):
            q1 = en.hme_channel(rho, en.HMESchedule(h, 1.0, k))
            q2 = en.hme_channel(rho, en.HMESchedule(h2, 1.0, k))
            diffs.append(la.frobenius_norm(q1.superop - q2.superop))
        assert 8 < diffs[0] / diffs[1] < 12 and 8 < diffs[1] / diffs[2] < 12

    @pytest.mark.xfail(strict=True, reason="the shift cancels only at first order in dt; the channels differ by O(t^2/K)")
    def test_identical_channels_at_k50(self, rng):
        h = mp.hamiltonian_of(mp.identity(2))
        rho = la.random_density(2, rng)
        q1 = en.hme_channel(rho, en.HMESchedule(h, 1.0, 50))
        q2 = en.hme_channel(rho, en.HMESchedule(mp.gauge_shift(h, X), 1.0, 50))
        assert la.frobenius_norm(q1.superop - q2.superop) < 1e-9
