"""Pathwise solutions of the noisy transport equation and their audits.

Oracles: the pure-noise solution is a translation of the initial data;
constant drift adds a uniform displacement; contraction by b(x) = -x
scales the L1 mass by e^{-t} exactly in the continuum.
"""

import math
import warnings

import numpy as np
import pytest

from stochtransport.errors import ConfigError
from stochtransport.drifts import (
    constant_drift,
    linear_drift,
    stream_function_drift,
    zero_drift,
)
from stochtransport.fields import ScalarField, SpatialGrid, lp_norm, shift_field
from stochtransport.paths import (
    SamplePath,
    eval_path,
    piecewise_linear_approx,
    sample_brownian,
    zero_path,
)
from stochtransport.profiles import bump, sample_profile
from stochtransport.spde import (
    exact_solution,
    renormalize_check,
    smoothed_truncated_power,
    solve_spde,
    solve_spde_wong_zakai,
    squared_renormalization,
    time_continuity_modulus,
)


@pytest.fixture
def setting512():
    g = SpatialGrid(d=1, half_width=4.0, n=512)
    prof = bump(1, center=0.0, radius=1.0)
    return g, prof, sample_profile(g, prof)


class TestRepresentation:
    def test_pure_noise_is_translation_of_initial_data(self, setting512):
        g, prof, u0 = setting512
        path = sample_brownian(24, 1.0, 512, 1)
        sol = solve_spde(zero_drift(1), path, u0, dt=1.0 / 512, horizon=1.0, p=1.0)
        tol = 1e-3 * lp_norm(u0, 1.0)
        for m, t in enumerate(sol.times):
            want = shift_field(u0, eval_path(path, float(t)))
            assert lp_norm(sol.fields[m] - want, 1.0) <= tol

    def test_first_snapshot_is_initial_data(self, setting512):
        g, prof, u0 = setting512
        path = sample_brownian(24, 1.0, 512, 1)
        sol = solve_spde(zero_drift(1), path, u0, dt=1.0 / 512, horizon=1.0)
        assert np.array_equal(sol.fields[0].values, u0.values)

    def test_constant_drift_closed_form(self):
        g = SpatialGrid(d=1, half_width=8.0, n=512)
        prof = bump(1, center=-0.5, radius=2.0)
        u0 = sample_profile(g, prof)
        path = sample_brownian(24, 1.0, 512, 1)
        b = constant_drift([1.0])
        sol = solve_spde(b, path, u0, dt=1.0 / 512, horizon=1.0, p=1.0)
        truth = exact_solution(b, path, prof, 1.0, g)
        rel = lp_norm(sol.fields[-1] - truth, 1.0) / lp_norm(u0, 1.0)
        assert rel <= 5e-3

    def test_shifting_back_recovers_auxiliary_frame(self, setting512):
        # one interpolation round trip is the price of the shift, so the
        # budget is twice the measured single round-trip defect
        g, prof, u0 = setting512
        path = sample_brownian(24, 1.0, 512, 1)
        sol = solve_spde(zero_drift(1), path, u0, dt=1.0 / 512, horizon=1.0, p=1.0)
        round_trip = lp_norm(
            shift_field(shift_field(u0, [0.37]), [-0.37]) - u0, 1.0
        )
        for m, t in enumerate(sol.times):
            back = shift_field(sol.fields[m], -eval_path(path, float(t)))
            assert lp_norm(back - sol.transport.fields[m], 1.0) <= 2.0 * round_trip

    def test_null_initial_data_stays_null_bit_exactly(self, setting512):
        g, prof, u0 = setting512
        path = sample_brownian(24, 1.0, 512, 1)
        for scheme in ("semi_lagrangian", "upwind_fv"):
            sol = solve_spde(constant_drift([0.5]), path, ScalarField.zeros(g),
                             dt=1.0 / 512, horizon=1.0, scheme=scheme)
            assert all(np.all(f.values == 0.0) for f in sol.fields)

    def test_linearity_within_scheme_tolerance(self, setting512):
        g, prof, u0 = setting512
        u0b = sample_profile(g, bump(1, center=0.8, radius=0.7))
        path = sample_brownian(24, 1.0, 512, 1)
        a = -1.7
        combo = ScalarField(g, a * u0.values + u0b.values)
        tol = {"semi_lagrangian": 1e-3, "upwind_fv": 1e-12}
        for scheme in ("semi_lagrangian", "upwind_fv"):
            s_combo = solve_spde(constant_drift([0.5]), path, combo,
                                 dt=1.0 / 512, horizon=1.0, scheme=scheme, p=1.0)
            s_a = solve_spde(constant_drift([0.5]), path, u0,
                             dt=1.0 / 512, horizon=1.0, scheme=scheme, p=1.0)
            s_b = solve_spde(constant_drift([0.5]), path, u0b,
                             dt=1.0 / 512, horizon=1.0, scheme=scheme, p=1.0)
            worst = max(
                lp_norm(s_combo.fields[m] - (s_a.fields[m] * a + s_b.fields[m]), 1.0)
                for m in range(len(s_combo.times))
            )
            assert worst <= tol[scheme] * lp_norm(combo, 1.0) + 1e-15

    def test_gronwall_envelope_on_auxiliary_frame(self):
        # b(x) = -x has sup |div b| = 1, so the mass of the auxiliary
        # solution is bounded by e^{1.1 t} times the initial mass
        g = SpatialGrid(d=1, half_width=8.0, n=512)
        u0 = sample_profile(g, bump(1, center=0.0, radius=1.2))
        path = sample_brownian(24, 1.0, 1024, 1)
        sol = solve_spde(linear_drift([[-1.0]]), path, u0, dt=1.0 / 1024,
                         horizon=1.0, p=1.0)
        n0 = lp_norm(u0, 1.0)
        for m, t in enumerate(sol.times):
            assert lp_norm(sol.transport.fields[m], 1.0) <= math.exp(1.1 * float(t)) * n0 + 1e-12

    def test_brownian_path_kind_required(self, setting512):
        g, prof, u0 = setting512
        bn = piecewise_linear_approx(sample_brownian(24, 1.0, 512, 1), 16)
        with pytest.raises(ConfigError):
            solve_spde(zero_drift(1), bn, u0, dt=1.0 / 512, horizon=1.0)


class TestWongZakaiPipeline:
    def test_zero_path_reduces_to_deterministic_problem(self, setting512):
        g, prof, u0 = setting512
        w = zero_path(1.0, 512, 1)
        sol = solve_spde_wong_zakai(constant_drift([0.5]), w, u0,
                                    dt=1.0 / 512, horizon=1.0)
        for m in range(len(sol.times)):
            assert np.array_equal(sol.fields[m].values,
                                  sol.transport.fields[m].values)

    def test_finest_approximant_matches_brownian_run_bitwise(self, setting512):
        g, prof, u0 = setting512
        path = sample_brownian(24, 1.0, 512, 1)
        full = piecewise_linear_approx(path, 512)
        ref = solve_spde(zero_drift(1), path, u0, dt=1.0 / 512, horizon=1.0)
        wz = solve_spde_wong_zakai(zero_drift(1), full, u0, dt=1.0 / 512,
                                   horizon=1.0)
        for a, b in zip(ref.fields, wz.fields):
            assert np.array_equal(a.values, b.values)

    def test_pure_noise_approximant_is_translation(self, setting512):
        g, prof, u0 = setting512
        path = sample_brownian(24, 1.0, 512, 1)
        bn = piecewise_linear_approx(path, 32)
        sol = solve_spde_wong_zakai(zero_drift(1), bn, u0, dt=1.0 / 512,
                                    horizon=1.0, p=1.0)
        tol = 1e-3 * lp_norm(u0, 1.0)
        for m, t in enumerate(sol.times):
            want = shift_field(u0, eval_path(bn, float(t)))
            assert lp_norm(sol.fields[m] - want, 1.0) <= tol

    def test_brownian_path_rejected(self, setting512):
        g, prof, u0 = setting512
        path = sample_brownian(24, 1.0, 512, 1)
        with pytest.raises(ConfigError):
            solve_spde_wong_zakai(zero_drift(1), path, u0, dt=1.0 / 512,
                                  horizon=1.0)


class TestExactSolution:
    def test_time_zero_is_sampled_initial_data(self):
        g = SpatialGrid(d=1, half_width=4.0, n=128)
        prof = bump(1, center=0.0, radius=1.0)
        path = zero_path(1.0, 8, 1)
        got = exact_solution(constant_drift([0.0]), path, prof, 0.0, g)
        assert np.array_equal(got.values, sample_profile(g, prof).values)

    def test_lattice_displacement_is_exact_index_shift(self):
        g = SpatialGrid(d=1, half_width=4.0, n=128)
        prof = bump(1, center=0.0, radius=1.0)
        times = np.linspace(0.0, 1.0, 9)
        vals = np.zeros((9, 1))
        vals[-1, 0] = 5.0 * g.h
        path = SamplePath(kind="piecewise_linear_bv", times=times, values=vals,
                          seed=None)
        got = exact_solution(constant_drift([0.0]), path, prof, 1.0, g)
        u0 = sample_profile(g, prof)
        assert np.allclose(got.values, np.roll(u0.values, 5), atol=1e-15)

    def test_constant_drift_combines_displacements(self):
        g = SpatialGrid(d=2, half_width=4.0, n=64)
        prof = bump(2, center=(0.0, 0.0), radius=1.0)
        times = np.linspace(0.0, 1.0, 9)
        vals = np.zeros((9, 2))
        vals[-1] = [0.3, -0.2]
        path = SamplePath(kind="piecewise_linear_bv", times=times, values=vals,
                          seed=None)
        got = exact_solution(constant_drift([1.0, 0.0]), path, prof, 1.0, g)
        want = ScalarField.from_function(
            g, lambda p: prof.fn(p - np.array([1.3, -0.2]))
        )
        assert np.array_equal(got.values, want.values)

    def test_no_closed_form_for_general_drift(self):
        g = SpatialGrid(d=1, half_width=4.0, n=128)
        prof = bump(1, center=0.0, radius=1.0)
        with pytest.raises(ConfigError):
            exact_solution(linear_drift([[-1.0]]), zero_path(1.0, 8, 1), prof,
                           1.0, g)


class TestRenormalization:
    def test_divergence_free_advection_conserves_square_integral(self):
        g = SpatialGrid(d=2, half_width=4.0, n=256)
        u0 = sample_profile(g, bump(2, center=(0.0, 0.0), radius=1.2))
        b = stream_function_drift(4.0)
        path = sample_brownian(14, 1.0, 128, 2)
        sol = solve_spde(b, path, u0, dt=1.0 / 128, horizon=1.0, p=2.0)
        rep = renormalize_check(sol, squared_renormalization(), b)
        assert rep.passed
        assert rep.div_bound == 0.0
        drift = float(np.max(np.abs(rep.integrals - rep.integrals[0])))
        assert drift <= 0.01 * rep.integrals[0]

    def test_null_solution_has_null_integrals(self):
        g = SpatialGrid(d=2, half_width=4.0, n=64)
        b = stream_function_drift(4.0)
        path = sample_brownian(14, 1.0, 64, 2)
        sol = solve_spde(b, path, ScalarField.zeros(g), dt=1.0 / 64, horizon=1.0)
        rep = renormalize_check(sol, squared_renormalization(), b)
        assert np.all(rep.integrals == 0.0)

    def test_contraction_decays_mass_at_unit_rate(self):
        # d|V|/dt = -div(b) |V| pointwise along the flow gives
        # I(t) = e^{-t} I(0) for b(x) = -x; the envelope must hold too
        g = SpatialGrid(d=1, half_width=8.0, n=512)
        u0 = sample_profile(g, bump(1, center=0.0, radius=1.2))
        b = linear_drift([[-1.0]])
        path = sample_brownian(24, 1.0, 1024, 1)
        sol = solve_spde(b, path, u0, dt=1.0 / 1024, horizon=1.0, p=1.0)
        beta = smoothed_truncated_power(M=10.0, p=1.0)
        rep = renormalize_check(sol, beta, b)
        assert rep.passed
        assert rep.div_bound == pytest.approx(1.0, abs=1e-12)
        decay = rep.integrals / rep.integrals[0]
        target = np.exp(-np.asarray(rep.times))
        assert float(np.max(np.abs(decay - target))) <= 0.02

    def test_smoothed_power_is_c1_with_declared_bound(self):
        # a centered difference with h far below the blend width exposes
        # any remaining derivative jump as an O(jump) error
        h = 1e-7
        for p in (1.0, 2.0):
            beta = smoothed_truncated_power(M=10.0, p=p)
            beta.validate()
            s = np.linspace(-15.0, 15.0, 30001)
            num = (beta.beta(s + h) - beta.beta(s - h)) / (2.0 * h)
            ana = beta.beta_prime(s)
            assert float(np.max(np.abs(num - ana))) <= 1e-3 * beta.derivative_bound
            assert float(np.max(np.abs(ana))) <= beta.derivative_bound * (1 + 1e-12)
            assert beta.beta(np.array([0.0]))[0] <= 1e-2

    def test_smoothed_power_tracks_raw_truncation(self):
        beta = smoothed_truncated_power(M=10.0, p=2.0)
        s = np.array([0.5, 3.0, 9.9, 12.0, -4.0])
        raw = np.minimum(np.abs(s), 10.0) ** 2
        assert np.max(np.abs(beta.beta(s) - raw)) <= 10.0 * 2 * 10.0 * 1e-3 * 2


class TestTimeContinuity:
    def test_frozen_solution_has_zero_modulus(self):
        g = SpatialGrid(d=1, half_width=4.0, n=128)
        u0 = sample_profile(g, bump(1, center=0.0, radius=1.0))
        w = zero_path(1.0, 128, 1)
        sol = solve_spde(zero_drift(1), w, u0, dt=1.0 / 128, horizon=1.0)
        assert time_continuity_modulus(sol) == 0.0

    def test_pure_noise_modulus_obeys_translation_bound(self):
        g = SpatialGrid(d=1, half_width=4.0, n=512)
        prof = bump(1, center=0.0, radius=1.0)
        u0 = sample_profile(g, prof)
        path = sample_brownian(24, 1.0, 512, 1)
        sol = solve_spde(zero_drift(1), path, u0, dt=1.0 / 512, horizon=1.0, p=1.0)
        grad = ScalarField.from_function(
            g, lambda p: np.abs(prof.gradient(p)[..., 0])
        )
        incs = np.abs(np.diff(
            [eval_path(path, float(t))[0] for t in sol.times]
        ))
        bound = lp_norm(grad, 1.0) * float(np.max(incs))
        modulus = time_continuity_modulus(sol)
        assert 0.5 * bound <= modulus <= 1.02 * bound

    def test_halving_snapshot_spacing_does_not_inflate_modulus(self):
        g = SpatialGrid(d=1, half_width=4.0, n=512)
        u0 = sample_profile(g, bump(1, center=0.0, radius=1.0))
        path = sample_brownian(24, 1.0, 512, 1)
        coarse = solve_spde(zero_drift(1), path, u0, dt=1.0 / 512, horizon=1.0,
                            p=1.0, n_snapshots=16)
        fine = solve_spde(zero_drift(1), path, u0, dt=1.0 / 512, horizon=1.0,
                          p=1.0, n_snapshots=32)
        assert time_continuity_modulus(fine) <= 1.05 * time_continuity_modulus(coarse)
