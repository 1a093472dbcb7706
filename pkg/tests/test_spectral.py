import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sevsteps.spectral import (
    DiagonalGenerator,
    GraphNorm,
    SpectralSpace,
    StateVector,
    fractional_power_neg_A,
    multiply_coeffs,
    nemytskij,
    norm_sigma,
    pointwise_multiply,
    resolvent,
    schrodinger_generator,
    semigroup_at,
    smooth_data,
)


def _random_state(space, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(space.n_modes) + 1j * rng.standard_normal(space.n_modes)
    return StateVector(c, space)


class TestSpectralSpace:
    def test_mode_count(self):
        assert SpectralSpace(8).n_modes == 17

    def test_transform_roundtrip(self):
        space = SpectralSpace(16)
        u = _random_state(space).coeffs
        back = space.to_coefficients(space.to_physical(u))
        assert np.max(np.abs(back - u)) <= 1e-12 * np.max(np.abs(u))

    def test_invalid_cutoff_rejected(self):
        with pytest.raises(ValueError):
            SpectralSpace(0)
        with pytest.raises(ValueError):
            SpectralSpace(4, sigma=-1.0)

    def test_parseval(self):
        space = SpectralSpace(12)
        u = _random_state(space, 3)
        phys = u.physical()
        assert np.sum(np.abs(u.coeffs) ** 2) == pytest.approx(
            np.mean(np.abs(phys) ** 2), rel=1e-12
        )


class TestSemigroup:
    def test_unitary_mode(self):
        gen = DiagonalGenerator(np.array([-1j]))
        mult = semigroup_at(gen, np.pi).multipliers
        assert mult[0] == pytest.approx(-1.0)
        assert abs(mult[0]) == pytest.approx(1.0)

    def test_time_zero_identity(self):
        gen = schrodinger_generator(SpectralSpace(8))
        assert np.all(semigroup_at(gen, 0.0).multipliers == 1.0)

    def test_scalar_decay(self):
        gen = DiagonalGenerator(np.array([-1.0]))
        assert semigroup_at(gen, np.log(2.0)).multipliers[0] == pytest.approx(0.5)

    def test_negative_time_rejected(self):
        gen = DiagonalGenerator(np.array([-1.0]))
        with pytest.raises(ValueError):
            semigroup_at(gen, -0.1)

    def test_contraction(self):
        space = SpectralSpace(10)
        gen = DiagonalGenerator(-np.abs(np.random.default_rng(1).random(space.n_modes)))
        u = _random_state(space, 2)
        for t in (0.1, 1.0, 7.3):
            su = semigroup_at(gen, t).apply(u.coeffs)
            assert np.linalg.norm(su) <= np.linalg.norm(u.coeffs) * (1 + 1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        t=st.floats(0.0, 5.0),
        s=st.floats(0.0, 5.0),
    )
    def test_semigroup_property(self, t, s):
        space = SpectralSpace(6)
        gen = schrodinger_generator(space)
        u = _random_state(space, 5).coeffs
        lhs = semigroup_at(gen, t).apply(semigroup_at(gen, s).apply(u))
        rhs = semigroup_at(gen, t + s).apply(u)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(u)))

    def test_schrodinger_unitary_on_every_sobolev_norm(self):
        space = SpectralSpace(8, sigma=1.5)
        gen = schrodinger_generator(space)
        u = _random_state(space, 7)
        su = StateVector(semigroup_at(gen, 0.37).apply(u.coeffs), space)
        for sig in (0.0, 0.5, 1.5):
            assert norm_sigma(su, sig) == pytest.approx(norm_sigma(u, sig), rel=1e-12)


class TestGenerator:
    def test_positive_real_part_rejected(self):
        with pytest.raises(ValueError):
            DiagonalGenerator(np.array([0.5]))

    def test_schrodinger_eigenvalues(self):
        space = SpectralSpace(4)
        gen = schrodinger_generator(space)
        n = space.frequencies
        assert np.all(gen.eigenvalues == -1j * n.astype(float) ** 2)
        assert np.all(gen.eigenvalues.real == 0.0)

    def test_graph_norm_definition(self):
        space = SpectralSpace(6)
        gen = schrodinger_generator(space)
        u = _random_state(space, 1).coeffs
        gn = GraphNorm(gen)(u)
        direct = np.sqrt(np.linalg.norm(u) ** 2 + np.linalg.norm(gen.apply(u)) ** 2)
        assert gn == pytest.approx(direct, rel=1e-14)


class TestResolvent:
    def test_zero_mode(self):
        gen = DiagonalGenerator(np.array([0.0]))
        assert resolvent(gen, 2.0).multipliers[0] == pytest.approx(0.5)

    def test_schrodinger_modulus(self):
        space = SpectralSpace(5)
        gen = schrodinger_generator(space)
        mult = resolvent(gen, 1.0).multipliers
        n = space.frequencies.astype(float)
        assert np.abs(mult) == pytest.approx((1.0 + n**4) ** -0.5, rel=1e-12)
        assert np.max(np.abs(mult)) <= 1.0

    def test_real_eigenvalue(self):
        gen = DiagonalGenerator(np.array([-3.0]))
        assert resolvent(gen, 1.0).multipliers[0] == pytest.approx(0.25)

    def test_nonpositive_m_rejected(self):
        gen = DiagonalGenerator(np.array([-1.0]))
        with pytest.raises(ValueError):
            resolvent(gen, 0.0)

    def test_resolvent_identity(self):
        space = SpectralSpace(9)
        gen = schrodinger_generator(space)
        u = _random_state(space, 11).coeffs
        m = 3.0
        ru = resolvent(gen, m).apply(u)
        back = m * ru - gen.apply(ru)
        assert np.max(np.abs(back - u)) <= 1e-10 * np.max(np.abs(u))

    def test_yosida_contraction_bound(self):
        space = SpectralSpace(9)
        gen = schrodinger_generator(space)
        u = _random_state(space, 4).coeffs
        for m in (0.5, 1.0, 10.0, 1e4):
            ju = m * resolvent(gen, m).apply(u)
            assert np.linalg.norm(ju) <= np.linalg.norm(u) * (1 + 1e-12)


class TestFractionalPower:
    def test_real_square_root(self):
        gen = DiagonalGenerator(np.array([-4.0]))
        assert fractional_power_neg_A(gen, 0.5).multipliers[0] == pytest.approx(2.0)

    def test_imaginary_unit(self):
        gen = DiagonalGenerator(np.array([-1j]))
        assert fractional_power_neg_A(gen, 1.0).multipliers[0] == pytest.approx(1j)

    def test_beta_one_is_minus_A(self):
        space = SpectralSpace(7)
        gen = schrodinger_generator(space)
        u = _random_state(space, 2).coeffs
        lhs = fractional_power_neg_A(gen, 1.0).apply(u)
        rhs = -gen.apply(u)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))

    def test_nonpositive_beta_rejected(self):
        gen = DiagonalGenerator(np.array([-1.0]))
        with pytest.raises(ValueError):
            fractional_power_neg_A(gen, 0.0)


class TestNormSigma:
    def test_zero_mode_any_sigma(self):
        space = SpectralSpace(4)
        c = np.zeros(space.n_modes, dtype=complex)
        c[0] = 1.0
        u = StateVector(c, space)
        for sig in (0.0, 1.0, 3.5):
            assert norm_sigma(u, sig) == pytest.approx(1.0)

    def test_first_mode_sigma_one(self):
        space = SpectralSpace(4)
        c = np.zeros(space.n_modes, dtype=complex)
        c[1] = 1.0
        assert norm_sigma(StateVector(c, space), 1.0) == pytest.approx(np.sqrt(2.0))

    def test_sigma_zero_is_euclidean(self):
        space = SpectralSpace(10)
        u = _random_state(space, 6)
        assert norm_sigma(u, 0.0) == pytest.approx(
            np.linalg.norm(u.coeffs), rel=1e-12
        )

    def test_monotone_in_sigma(self):
        space = SpectralSpace(10)
        u = _random_state(space, 8)
        norms = [norm_sigma(u, s) for s in (0.0, 0.5, 1.0, 2.0)]
        assert np.all(np.diff(norms) >= 0)


def _convolution_oracle(a, b, space):
    """Truncated convolution of coefficient sequences, by direct summation."""
    K = space.mode_cutoff
    freqs = space.frequencies
    out = np.zeros(space.n_modes, dtype=complex)
    index = {int(n): i for i, n in enumerate(freqs)}
    for i, n in enumerate(freqs):
        for j, m in enumerate(freqs):
            s = int(n) + int(m)
            if abs(s) <= K:
                out[index[s]] += a[i] * b[j]
    return out


class TestMultiply:
    def test_unit_field(self):
        space = SpectralSpace(8)
        one = np.zeros(space.n_modes, dtype=complex)
        one[0] = 1.0
        b = _random_state(space, 3).coeffs
        prod = multiply_coeffs(one, b, space)
        assert np.max(np.abs(prod - b)) <= 1e-12 * np.max(np.abs(b))

    def test_frequency_addition(self):
        space = SpectralSpace(8)
        e1 = np.zeros(space.n_modes, dtype=complex)
        e1[1] = 1.0
        prod = multiply_coeffs(e1, e1, space)
        want = np.zeros(space.n_modes, dtype=complex)
        want[2] = 1.0
        assert np.max(np.abs(prod - want)) <= 1e-12

    def test_dealiased_top_mode_product(self):
        # e^{iKx} * e^{iKx} has frequency 2K beyond the cutoff: the dealiased
        # product must agree with the truncated direct convolution (zero).
        space = SpectralSpace(6)
        eK = np.zeros(space.n_modes, dtype=complex)
        eK[space.mode_cutoff] = 1.0
        prod = multiply_coeffs(eK, eK, space)
        oracle = _convolution_oracle(eK, eK, space)
        assert np.max(np.abs(oracle)) == 0.0
        assert np.max(np.abs(prod - oracle)) <= 1e-12

    def test_matches_direct_convolution_on_random_fields(self):
        space = SpectralSpace(5)
        a = _random_state(space, 1).coeffs
        b = _random_state(space, 2).coeffs
        prod = multiply_coeffs(a, b, space)
        oracle = _convolution_oracle(a, b, space)
        assert np.max(np.abs(prod - oracle)) <= 1e-12 * max(1.0, np.max(np.abs(oracle)))

    def test_space_mismatch_rejected(self):
        a = _random_state(SpectralSpace(4), 1)
        b = _random_state(SpectralSpace(5), 1)
        with pytest.raises(ValueError):
            pointwise_multiply(a, b)


class TestNemytskij:
    def test_identity(self):
        space = SpectralSpace(8)
        u = _random_state(space, 9)
        out = nemytskij(lambda z: z, u)
        assert np.max(np.abs(out.coeffs - u.coeffs)) <= 1e-12 * np.max(np.abs(u.coeffs))

    def test_zero_map(self):
        space = SpectralSpace(8)
        u = _random_state(space, 9)
        out = nemytskij(lambda z: np.zeros_like(z), u)
        assert np.max(np.abs(out.coeffs)) <= 1e-14

    def test_saturating_map_on_constant_field(self):
        space = SpectralSpace(8)
        c = 2.0 - 1.0j
        coeffs = np.zeros(space.n_modes, dtype=complex)
        coeffs[0] = c
        out = nemytskij(lambda z: z / (1.0 + np.abs(z)), StateVector(coeffs, space))
        want = c / (1.0 + abs(c))
        assert out.coeffs[0] == pytest.approx(want, rel=1e-12)
        assert np.max(np.abs(out.coeffs[1:])) <= 1e-12


class TestSmoothData:
    def test_normalised(self):
        u = smooth_data(SpectralSpace(16), 3.0, seed=1)
        assert np.linalg.norm(u.coeffs) == pytest.approx(1.0, rel=1e-12)

    def test_decay_controls_fractional_power_norm(self):
        # decay d puts the state in D((-A)^beta) for the Schroedinger generator
        # when d > 2 beta + 1/2; the graph-type norm must then be finite and
        # dominated by the explicit spectral sum.
        space = SpectralSpace(32)
        gen = schrodinger_generator(space)
        u = smooth_data(space, 5.0)
        out = fractional_power_neg_A(gen, 2.0).apply(u.coeffs)
        n = np.abs(space.frequencies).astype(float)
        direct = np.sqrt(np.sum((n**4 * np.abs(u.coeffs)) ** 2))
        assert np.linalg.norm(out) == pytest.approx(direct, rel=1e-12)
