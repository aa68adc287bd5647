import numpy as np
import pytest
from scipy.linalg import expm

from dampedwaves import evolution as ev
from dampedwaves import geometry as geo
from dampedwaves import spectral as sp
from dampedwaves.errors import ConfigurationError


def small_grid(n_modes=32, n_depth=129):
    return geo.StripGrid(n_modes, depth=8.0, n_depth=n_depth)


def linear_reference(state0, alpha, t, modes):
    out = np.empty((2, len(modes)), dtype=np.complex128)
    u0 = np.stack([state0.xi.coeffs, state0.h.coeffs])
    for i, n in enumerate(modes):
        m = np.array([[-alpha * n ** 2, -1.0], [abs(n), -alpha * n ** 2]])
        out[:, i] = expm(t * m) @ u0[:, i]
    return out


class TestPropagator:
    def test_rotation_full_period(self):
        p = ev.linear_propagator(1, 0.0, 2.0 * np.pi)
        assert np.max(np.abs(p - np.eye(2))) < 1e-12

    def test_mode_zero_shear(self):
        p = ev.linear_propagator(0, 5.0, 0.25)
        assert np.max(np.abs(p - np.array([[1.0, -0.25], [0.0, 1.0]]))) == 0.0

    def test_series_oracle(self):
        n, alpha, dt = 2, 3.0, 0.1
        m = np.array([[-alpha * n ** 2, -1.0], [abs(n), -alpha * n ** 2]])
        p = ev.linear_propagator(n, alpha, dt)
        assert np.max(np.abs(p - expm(dt * m))) < 1e-12
        assert np.max(np.abs(np.linalg.eigvals(p))) == pytest.approx(
            np.exp(-alpha * n ** 2 * dt), rel=1e-12)

    def test_mollified_generator_consistency(self):
        modes = np.array([0, 1, 2, 3, -3, -2, -1])
        kappa, alpha, dt = 0.05, 2.0, 0.08
        p = ev.propagator_entries(modes, alpha, dt, kappa)
        for i, n in enumerate(modes):
            heat = np.exp(-kappa * n ** 2)
            m = np.array([[-alpha * n ** 2 * heat ** 2, -heat],
                          [abs(n) * heat ** 2, -alpha * n ** 2 * heat ** 2]])
            ref = expm(dt * m)
            got = np.array([[p[0][i], p[1][i]], [p[2][i], p[3][i]]])
            assert np.max(np.abs(got - ref)) < 1e-12

    def test_rejects_bad_dt(self):
        with pytest.raises(ConfigurationError):
            ev.linear_propagator(1, 1.0, 0.0)


class TestRhs:
    def test_zero_state(self):
        grid = small_grid()
        st = ev.SimState(h=sp.zero_field(32), xi=sp.zero_field(32), t=0.0)
        r = ev.evaluate_rhs(st, ev.ModelParams(alpha=2.0), grid)
        assert np.max(np.abs(r.h_t.coeffs)) == 0.0
        assert np.max(np.abs(r.xi_t.coeffs)) == 0.0

    def test_linearization_oracle(self):
        grid = small_grid()
        delta = 1e-6
        alpha = 1.0
        st = ev.SimState(h=sp.cosine(1, delta, 32), xi=sp.sine(1, delta, 32), t=0.0)
        r = ev.evaluate_rhs(st, ev.ModelParams(alpha=alpha), grid,
                            ev.StepOptions(picard_tol=1e-16, picard_max_iter=30))
        modes = sp.mode_numbers(32)
        lin = ev.linear_rhs_arrays(np.stack([st.xi.coeffs, st.h.coeffs]),
                                   modes, alpha)
        assert np.max(np.abs(r.h_t.coeffs - lin[1])) <= 10 * delta ** 2
        assert np.max(np.abs(r.xi_t.coeffs - lin[0])) <= 10 * delta ** 2

    def test_flat_geometry_closed_form(self):
        """h = 0, α = 0, ε = 1: ξ_t = −½((ξ,₁)² + (Λξ)²) + (Λξ)², h_t = Λξ.

        Independent evaluation with A = Id from the boundary system.
        """
        grid = small_grid()
        xi = sp.cosine(1, 0.3, 32)
        st = ev.SimState(h=sp.zero_field(32), xi=xi, t=0.0)
        r = ev.evaluate_rhs(st, ev.ModelParams(alpha=0.0, epsilon=1.0), grid,
                            ev.StepOptions(picard_tol=1e-15))
        xix, lxi = sp.dx(xi), sp.lam(xi)
        ref = (-0.5) * (sp.pointwise_product(xix, xix) +
                        sp.pointwise_product(lxi, lxi)) + \
            sp.pointwise_product(lxi, lxi)
        assert np.max(np.abs(r.xi_t.coeffs - ref.coeffs)) < 1e-14
        assert np.max(np.abs(r.h_t.coeffs - lxi.coeffs)) < 1e-14

    def test_mean_preservation_random_states(self):
        grid = small_grid()
        rng = np.random.default_rng(0)
        for _ in range(5):
            c = np.zeros(32, dtype=np.complex128)
            for n in range(1, 6):
                c[n] = 0.004 * (rng.standard_normal() + 1j * rng.standard_normal())
                c[-n] = np.conj(c[n])
            h = sp.SpectrumField(c)
            xi = sp.SpectrumField(np.roll(c, 1) * 0 + c * 0.7)
            st = ev.SimState(h=h, xi=xi, t=0.0)
            # mean error tracks the elliptic tolerance; pin it tight
            r = ev.evaluate_rhs(st, ev.ModelParams(alpha=1.0), grid,
                                ev.StepOptions(picard_tol=1e-14,
                                               picard_max_iter=30))
            assert abs(r.h_t.coeffs[0]) < 1e-12

    def test_epsilon_zero_is_exactly_linear(self):
        grid = small_grid()
        # large data: with ε = 0 the geometry is flat and the rhs is linear
        h = sp.cosine(1, 0.4, 32) + sp.cosine(3, 0.2, 32)
        xi = sp.sine(1, 0.5, 32)
        st = ev.SimState(h=h, xi=xi, t=0.0)
        r = ev.evaluate_rhs(st, ev.ModelParams(alpha=2.0, epsilon=0.0), grid)
        lin = ev.linear_rhs_arrays(np.stack([xi.coeffs, h.coeffs]),
                                   sp.mode_numbers(32), 2.0)
        assert np.max(np.abs(r.xi_t.coeffs - lin[0])) < 1e-14
        assert np.max(np.abs(r.h_t.coeffs - lin[1])) < 1e-14

    def test_mollified_rhs_converges_to_unmollified(self):
        grid = small_grid()
        h = sp.cosine(1, 0.02, 32) + sp.cosine(2, 0.01, 32)
        xi = sp.sine(1, 0.02, 32)
        st = ev.SimState(h=h, xi=xi, t=0.0)
        base = ev.evaluate_rhs(st, ev.ModelParams(alpha=1.0), grid,
                               ev.StepOptions(picard_tol=1e-14))
        diffs = []
        for kappa in (2e-3, 1e-3, 5e-4):
            r = ev.evaluate_rhs(st, ev.ModelParams(alpha=1.0, kappa=kappa), grid,
                                ev.StepOptions(picard_tol=1e-14))
            diffs.append(max(np.max(np.abs(r.h_t.coeffs - base.h_t.coeffs)),
                             np.max(np.abs(r.xi_t.coeffs - base.xi_t.coeffs))))
        # leading error linear in κ
        assert diffs[0] / diffs[1] == pytest.approx(2.0, rel=0.15)
        assert diffs[1] / diffs[2] == pytest.approx(2.0, rel=0.15)

    def test_stale_cache_rejected(self):
        grid = small_grid()
        st = ev.SimState(h=sp.cosine(1, 0.01, 32), xi=sp.sine(1, 0.01, 32), t=0.0)
        params = ev.ModelParams(alpha=1.0)
        r = ev.evaluate_rhs(st, params, grid)
        tampered = ev.SimState(h=sp.cosine(1, 0.02, 32), xi=st.xi, t=0.0,
                               cache=r.cache)
        with pytest.raises(RuntimeError, match="stale"):
            ev.evaluate_rhs(tampered, params, grid)


class TestStep:
    def test_linear_only_matches_propagator(self):
        grid = small_grid()
        st = ev.SimState(h=sp.cosine(2, 0.1, 32), xi=sp.sine(1, 0.2, 32), t=0.0)
        out, _ = ev.step(st, ev.ModelParams(alpha=3.0), grid, 1e-2,
                         ev.StepOptions(linear_only=True))
        ref = linear_reference(st, 3.0, 1e-2, sp.mode_numbers(32))
        assert np.max(np.abs(out.xi.coeffs - ref[0])) < 1e-12
        assert np.max(np.abs(out.h.coeffs - ref[1])) < 1e-12

    def test_zero_state_stays_zero(self):
        grid = small_grid()
        st = ev.SimState(h=sp.zero_field(32), xi=sp.zero_field(32), t=0.0)
        traj = ev.run(st.h, st.xi, ev.ModelParams(alpha=3.0), grid, 1e-2, 0.1)
        last = traj.states[-1]
        assert np.max(np.abs(last.h.coeffs)) == 0.0
        assert np.max(np.abs(last.xi.coeffs)) == 0.0

    def test_richardson_order(self):
        grid = small_grid()
        params = ev.ModelParams(alpha=3.0)
        h0 = sp.cosine(1, 0.02, 32) + sp.cosine(2, 0.01, 32)
        xi0 = sp.sine(1, 0.02, 32) + sp.sine(2, 0.01, 32)

        def final(dt):
            opts = ev.StepOptions(picard_tol=1e-14, picard_max_iter=30)
            traj = ev.run(h0, xi0, params, grid, dt, 0.08,
                          record_every=10 ** 6, opts=opts)
            s = traj.states[-1]
            return np.stack([s.xi.coeffs, s.h.coeffs])

        u1, u2, u3 = final(4e-3), final(2e-3), final(1e-3)
        order = np.log2(np.max(np.abs(u1 - u2)) / np.max(np.abs(u2 - u3)))
        assert order >= 1.8

    def test_mean_projected(self):
        grid = small_grid()
        traj = ev.run(sp.cosine(1, 0.02, 32), sp.sine(1, 0.02, 32),
                      ev.ModelParams(alpha=3.0), grid, 1e-2, 0.3)
        assert traj.max_mean_drift < 1e-12
        assert abs(traj.states[-1].h.coeffs[0]) == 0.0

    def test_t_zero_trajectory(self):
        grid = small_grid()
        traj = ev.run(sp.cosine(1, 0.01, 32), sp.zero_field(32),
                      ev.ModelParams(alpha=1.0), grid, 1e-2, 0.0)
        assert len(traj.states) == 1

    def test_linear_run_matches_closed_form(self):
        grid = small_grid(n_modes=16, n_depth=65)
        h0 = sp.cosine(1, 0.05, 16)
        xi0 = sp.sine(1, 0.07, 16)
        traj = ev.run(h0, xi0, ev.ModelParams(alpha=3.0), grid, 1e-3, 0.5,
                      record_every=100, opts=ev.StepOptions(linear_only=True))
        for state in traj.states:
            ref = linear_reference(traj.states[0], 3.0, state.t,
                                   sp.mode_numbers(16))
            assert np.max(np.abs(state.xi.coeffs - ref[0])) < 1e-10
            assert np.max(np.abs(state.h.coeffs - ref[1])) < 1e-10


class TestHermitianStability:
    def test_long_linear_only_run_conserves_mean(self):
        grid = small_grid(n_modes=8, n_depth=48)
        h0 = sp.cosine(1, 0.01, 8)
        xi0 = sp.sine(1, 0.01, 8)
        traj = ev.run(h0, xi0, ev.ModelParams(alpha=3.0), grid, 1e-3, 10.0,
                      record_every=2000, opts=ev.StepOptions(linear_only=True))
        assert traj.max_mean_drift <= 1e-10

    def test_nonlinear_run_mean_drift_bound(self):
        grid = small_grid(n_modes=8, n_depth=48)
        h0 = sp.cosine(1, 0.02, 8)
        xi0 = sp.sine(1, 0.02, 8)
        traj = ev.run(h0, xi0, ev.ModelParams(alpha=3.0), grid, 1e-3, 1.0,
                      record_every=200)
        assert traj.max_mean_drift <= 1e-10
        s = traj.states[-1]
        assert s.h.hermitian_defect() <= 1e-13
        assert s.xi.hermitian_defect() <= 1e-13
