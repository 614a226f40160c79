import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qetlab import (
    GridSpec,
    LightConeError,
    ValidationError,
    brute_force_overlap_oracle,
    commutator_residual,
    make_curl_gaussian,
    overlap_kernel,
    pauli_jordan_delta,
    pauli_jordan_delta_quadrature,
    spectral_transform,
    weighted_spectral_integral,
)
from qetlab.fields import GridSpectrum
from qetlab.spectral import min_oracle_wait, parseval_norm_position

from oracles import grid_norm_reference, kernel_reference, weighted_norm_reference


class TestWeightedIntegral:
    def test_damping_exponent_canonical(self, canonical_field):
        # closed radial form: (4 pi/3) Gamma(3) = 8 pi/3
        res = weighted_spectral_integral(canonical_field.spectrum(), 1)
        assert res.method == "radial-quadrature"
        np.testing.assert_allclose(res.value, 8.0 * np.pi / 3.0, rtol=1e-10)
        np.testing.assert_allclose(
            res.value, weighted_norm_reference(1.0, 1.0, 1), rtol=1e-10
        )

    def test_energy_moment_canonical(self, canonical_field):
        # (4 pi/3) Gamma(7/2) = 5 pi^{3/2}/2, so E_m = 5 pi^{3/2}/4
        res = weighted_spectral_integral(canonical_field.spectrum(), 2)
        np.testing.assert_allclose(res.value, 2.5 * np.pi**1.5, rtol=1e-10)

    @pytest.mark.parametrize("power", [0, 1, 2])
    def test_grid_sum_agrees(self, canonical_field, power):
        res = weighted_spectral_integral(canonical_field.spectrum(), power)
        grid = grid_norm_reference(canonical_field, power)
        np.testing.assert_allclose(res.value, grid, rtol=1e-6)

    @pytest.mark.parametrize("power", [0, 1, 2])
    def test_general_field_against_reference(self, power):
        a = make_curl_gaussian(1.7, 0.6, center=(1.0, 2.0, 3.0), axis=(1.0, 1.0, 0.0))
        res = weighted_spectral_integral(a.spectrum(), power)
        np.testing.assert_allclose(
            res.value, weighted_norm_reference(1.7, 0.6, power), rtol=1e-10
        )

    def test_zero_field(self):
        for p in (0, 1, 2):
            assert weighted_spectral_integral(make_curl_gaussian(0.0, 1.0).spectrum(), p).value == 0.0

    def test_parseval_against_position_quadrature(self, canonical_field):
        spec_val = weighted_spectral_integral(canonical_field.spectrum(), 0).value
        pos_val = parseval_norm_position(canonical_field)
        np.testing.assert_allclose(spec_val, pos_val, rtol=1e-6)

    def test_rejects_bad_power(self, canonical_field):
        with pytest.raises(ValidationError):
            weighted_spectral_integral(canonical_field.spectrum(), 3)

    def test_rejects_longitudinal_grid_input(self):
        n = 16
        k = 2 * np.pi * np.fft.fftfreq(n, d=0.5)
        kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
        kvec = np.stack([kx, ky, kz], axis=-1).astype(complex)
        gs = GridSpectrum((k, k.copy(), k.copy()), kvec, dk=float(k[1] - k[0]))
        with pytest.raises(ValidationError, match="transverse"):
            weighted_spectral_integral(gs, 0)

    def test_grid_route_through_public_op(self, canonical_field):
        gs = spectral_transform(canonical_field, GridSpec(n=64, k_max=8.0))
        res = weighted_spectral_integral(gs, 1)
        assert res.method == "grid-sum"
        np.testing.assert_allclose(res.value, 8.0 * np.pi / 3.0, rtol=1e-6)


class TestPauliJordanDelta:
    def test_timelike_value(self):
        np.testing.assert_allclose(pauli_jordan_delta(2.0, 1.0), -1.0 / (6.0 * np.pi**2), rtol=1e-14)

    def test_spacelike_value(self):
        np.testing.assert_allclose(pauli_jordan_delta(1.0, 2.0), 1.0 / (6.0 * np.pi**2), rtol=1e-14)

    def test_coincident_point(self):
        np.testing.assert_allclose(pauli_jordan_delta(10.0, 0.0), -1.0 / (200.0 * np.pi**2), rtol=1e-14)

    @given(t=st.floats(0.3, 20.0), r=st.floats(0.0, 20.0))
    def test_antisymmetric_under_interval_flip(self, t, r):
        # swapping t <-> r flips the sign of t^2 - r^2
        if abs(t * t - r * r) <= 1e-6 * (t * t + r * r):
            return
        np.testing.assert_allclose(
            pauli_jordan_delta(t, r), -pauli_jordan_delta(r, t), rtol=1e-12
        )

    def test_on_cone_rejected(self):
        with pytest.raises(LightConeError):
            pauli_jordan_delta(3.0, 3.0)
        with pytest.raises(LightConeError):
            pauli_jordan_delta(1.0, 1.0 + 1e-12)

    @pytest.mark.parametrize("t,r", [(2.0, 1.0), (1.0, 2.0), (10.0, 0.0), (5.0, 3.0)])
    def test_quadrature_route_agrees(self, t, r):
        closed = pauli_jordan_delta(t, r)
        quadr = pauli_jordan_delta_quadrature(t, r)
        np.testing.assert_allclose(quadr.value, closed, rtol=1e-6)


class TestOverlapKernel:
    def test_against_dawson_reference(self, canonical_field):
        spec = canonical_field.spectrum()
        for T in (5.0, 8.0, 12.0, 16.0):
            K = overlap_kernel(spec, spec, T)
            np.testing.assert_allclose(K.value, kernel_reference(T), rtol=1e-8)

    def test_against_monte_carlo(self, canonical_field):
        T = 14.0
        K = overlap_kernel(canonical_field.spectrum(), canonical_field.spectrum(), T)
        mc = brute_force_overlap_oracle(canonical_field, canonical_field, T, samples=400_000, seed=3)
        assert abs(K.value - mc.value) <= 3.0 * mc.estimated_error

    def test_perpendicular_axes_cancel(self):
        a = make_curl_gaussian(1.0, 1.0, axis=(0.0, 0.0, 1.0))
        f = make_curl_gaussian(1.0, 1.0, axis=(1.0, 0.0, 0.0))
        K = overlap_kernel(f.spectrum(), a.spectrum(), 8.0)
        assert abs(K.value) < 1e-12
        # the angular cancellation also holds on a plain grid sum
        gs_a = spectral_transform(a, GridSpec(n=48, k_max=6.0))
        gs_f = spectral_transform(f, GridSpec(n=48, k_max=6.0))
        dot = np.sum(np.real(np.conj(gs_f.values) * gs_a.values), axis=-1)
        total = np.sum(dot * gs_a.k_magnitude()) * gs_a.dk**3
        assert abs(total) < 1e-8 * np.max(np.abs(dot)) * dot.size * gs_a.dk**3 + 1e-12

    def test_bilinear_in_amplitude(self, canonical_field):
        spec = canonical_field.spectrum()
        K1 = overlap_kernel(spec, spec, 9.0).value
        K3 = overlap_kernel(spec, spec.scaled(3.0), 9.0).value
        np.testing.assert_allclose(K3, 3.0 * K1, rtol=1e-12)

    def test_symmetric_in_arguments(self):
        f = make_curl_gaussian(1.1, 0.8, center=(0.5, 0.0, 0.0), axis=(0.0, 1.0, 1.0))
        a = make_curl_gaussian(0.9, 1.2, center=(0.0, 0.3, 0.0), axis=(0.0, 0.0, 1.0))
        K_fa = overlap_kernel(f.spectrum(), a.spectrum(), 11.0).value
        K_af = overlap_kernel(a.spectrum(), f.spectrum(), 11.0).value
        np.testing.assert_allclose(K_fa, K_af, rtol=1e-12)

    def test_displaced_pair_against_monte_carlo(self):
        f = make_curl_gaussian(1.0, 1.0, center=(1.0, 0.0, 0.0), axis=(0.0, 1.0, 1.0))
        a = make_curl_gaussian(1.3, 0.9, center=(-0.5, 0.5, 0.0))
        T = 16.0
        K = overlap_kernel(f.spectrum(), a.spectrum(), T)
        mc = brute_force_overlap_oracle(f, a, T, samples=600_000, seed=17)
        assert abs(K.value - mc.value) <= 3.0 * mc.estimated_error

    def test_grid_route_agrees_at_moderate_T(self, canonical_field):
        T = 6.0
        gs = spectral_transform(canonical_field, GridSpec(n=96, k_max=8.0))
        K_grid = overlap_kernel(gs, canonical_field.spectrum(), T)
        K_closed = overlap_kernel(canonical_field.spectrum(), canonical_field.spectrum(), T)
        np.testing.assert_allclose(K_grid.value, K_closed.value, rtol=1e-4)

    def test_rejects_nonpositive_T(self, canonical_field):
        with pytest.raises(ValidationError):
            overlap_kernel(canonical_field.spectrum(), canonical_field.spectrum(), 0.0)

    def test_flags_quadrature_error_above_tolerance(self, canonical_field):
        # at T=200 the kernel is ~1e-11 while the quadrature error is ~1e-14;
        # with the tolerance floor removed the flag must fire, not silently return
        from qetlab import ToleranceFailure

        spec = canonical_field.spectrum()
        with pytest.raises(ToleranceFailure):
            overlap_kernel(spec, spec, 200.0, err_tol=0.0)


class TestBruteForceOracle:
    def test_deterministic_bit_exact(self, canonical_field):
        a = canonical_field
        r1 = brute_force_overlap_oracle(a, a, 13.0, samples=100_000, seed=42)
        r2 = brute_force_overlap_oracle(a, a, 13.0, samples=100_000, seed=42)
        assert r1.value == r2.value
        assert r1.estimated_error == r2.estimated_error

    def test_worker_count_invariance(self, canonical_field):
        a = canonical_field
        r1 = brute_force_overlap_oracle(a, a, 13.0, samples=200_000, seed=7, workers=1)
        r4 = brute_force_overlap_oracle(a, a, 13.0, samples=200_000, seed=7, workers=4)
        assert r1.value == r4.value

    def test_zero_field_returns_zero(self, canonical_field):
        res = brute_force_overlap_oracle(
            make_curl_gaussian(0.0, 1.0), canonical_field, 13.0, samples=1000, seed=1
        )
        assert res.value == 0.0 and res.estimated_error == 0.0

    def test_error_scaling_with_samples(self, canonical_field):
        a = canonical_field
        se1 = brute_force_overlap_oracle(a, a, 13.0, samples=100_000, seed=5).estimated_error
        se2 = brute_force_overlap_oracle(a, a, 13.0, samples=200_000, seed=5).estimated_error
        assert 0.6 <= se2 / se1 / (1.0 / np.sqrt(2.0)) <= 1.4

    def test_rejects_cone_regime(self, canonical_field):
        a = canonical_field
        with pytest.raises(ValidationError):
            brute_force_overlap_oracle(a, a, 0.9 * min_oracle_wait(a, a), samples=1000, seed=0)

    def test_seed_recorded(self, canonical_field):
        res = brute_force_overlap_oracle(canonical_field, canonical_field, 13.0, samples=1000, seed=99)
        assert res.seed == 99


class TestCommutatorResidual:
    def test_negligible_at_strict_separation(self, canonical_field):
        spec = canonical_field.spectrum()
        T = 2.0 * canonical_field.effective_radius + 6.0
        K = overlap_kernel(spec, spec, T).value
        res = commutator_residual(spec, spec, T)
        assert abs(res) < 1e-6 * abs(K)

    def test_zero_time(self, canonical_field):
        spec = canonical_field.spectrum()
        assert commutator_residual(spec, spec, 0.0) == 0.0

    def test_zero_field(self, canonical_field):
        res = commutator_residual(
            canonical_field.spectrum(), make_curl_gaussian(0.0, 1.0).spectrum(), 10.0
        )
        assert res == 0.0


@settings(max_examples=10)
@given(
    amp=st.floats(0.2, 2.0),
    sigma=st.floats(0.5, 1.6),
    T=st.floats(10.0, 25.0),
)
def test_kernel_matches_reference_over_family(amp, sigma, T):
    a = make_curl_gaussian(amp, sigma)
    K = overlap_kernel(a.spectrum(), a.spectrum(), T)
    ref = kernel_reference(T, amp, sigma, amp, sigma)
    np.testing.assert_allclose(K.value, ref, rtol=1e-7, atol=1e-16)


def test_kernel_large_separation_prefactor(canonical_field):
    """Moment oracle for the far-separation law.

    Expanding the off-cone kernel in |x-y|/T, the zeroth moment cancels (the
    fields integrate to zero), leaving K(T) -> -(10/pi^2 T^6) M1 with
    M1 = -2 sum_jl [int x_j f_l d^3x][int y_j a_l d^3y].  The moments come
    from direct lattice quadrature, independent of the quadrature engine.
    """
    half, n = 8.0, 64
    ax = np.linspace(-half, half, n, endpoint=False) + half / n
    xs, ys, zs = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.stack([xs, ys, zs], axis=-1)
    vals = canonical_field(pts)
    dx3 = (ax[1] - ax[0]) ** 3
    moments = np.einsum("xyzj,xyzl->jl", pts, vals) * dx3
    M1 = -2.0 * float(np.sum(moments * moments))
    coeff = -10.0 * M1 / np.pi**2
    assert coeff > 0.0
    spec = canonical_field.spectrum()
    for T in (200.0, 400.0):
        K = overlap_kernel(spec, spec, T).value
        np.testing.assert_allclose(K, coeff / T**6, rtol=2e-2)


class TestDeltaKernels:
    def test_unknown_kind_rejected(self):
        from qetlab import DeltaKernel

        with pytest.raises(ValidationError):
            DeltaKernel("nope")

    @pytest.mark.parametrize("t,d", [(2.0, 1.0), (1.0, 2.0), (5.0, 1.5)])
    def test_smeared_delta_approaches_closed_form(self, t, d):
        from qetlab import DeltaKernel

        smeared = DeltaKernel("delta").smeared(t, d, width=0.03)
        np.testing.assert_allclose(smeared, pauli_jordan_delta(t, d), rtol=5e-3)

    @pytest.mark.parametrize("t,d", [(4.0, 1.0), (6.0, 2.0)])
    def test_smeared_second_derivative_matches_oracle_kernel(self, t, d):
        # same closed form the Monte Carlo oracle integrates against
        from qetlab import DeltaKernel
        from qetlab.spectral import d2_delta_offcone

        smeared = DeltaKernel("dtt_delta").smeared(t, d, width=0.03)
        np.testing.assert_allclose(smeared, float(d2_delta_offcone(t, d)), rtol=5e-3)

    @pytest.mark.parametrize("kind", ["delta1", "delta2", "dt_delta2"])
    def test_cone_supported_kernels_vanish_off_cone(self, kind):
        from qetlab import DeltaKernel

        kernel = DeltaKernel(kind)
        t, width = 2.0, 0.05
        # a symmetric probe centered on the cone annihilates the odd
        # (derivative-type) kernels, so reference slightly off-center
        on_cone = max(
            abs(kernel.smeared(t, t, width)), abs(kernel.smeared(t, t + width, width))
        )
        for d in (0.5, 1.0, 3.0, 4.0):
            assert abs(kernel.smeared(t, d, width)) < 1e-10 * on_cone

    def test_weight_limits_at_zero_wavenumber(self):
        from qetlab import DeltaKernel

        assert DeltaKernel("delta1").spectral_weight(0.0, 3.0) == pytest.approx(3.0)
        assert DeltaKernel("delta2").spectral_weight(0.0, 3.0) == 1.0
        assert DeltaKernel("dt_delta2").spectral_weight(0.0, 3.0) == 0.0
