import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from enzyme_rd.core import (
    DiffusionCoeffs,
    Grid1D,
    RateConstants,
    Regime,
    SystemState,
    conserved_masses,
    integrate,
    project_indicator,
)
from enzyme_rd.dynamics import (
    PositivityError,
    Scheme,
    StepperConfig,
    check_min_enzyme,
    equilibrium,
    neumann_laplacian,
    reaction_dt_limit,
    reaction_terms,
    simulate,
    step_imex,
)

pos = st.floats(0, 10, allow_nan=False)


def fig1_initial(n=200):
    g = Grid1D(n)
    z = np.zeros(n)
    return SystemState(g, project_indicator(0.4, 0.6, 0.2, g), project_indicator(0.1, 0.3, 1.5, g),
                       z, z)


FIG1_RATES = RateConstants(100.0, 1.0, 1.0)
FIG1_DIFF = DiffusionCoeffs(0.0, 0.02, 0.0, 0.02)


class TestReactionTerms:
    def test_zero(self):
        g = Grid1D(5)
        for f in reaction_terms(SystemState.zeros(g), RateConstants(3, 2, 1)):
            np.testing.assert_array_equal(f, 0)

    def test_single_term(self):
        g = Grid1D(5)
        o, z = np.ones(5), np.zeros(5)
        f_e, f_s, f_c, f_p = reaction_terms(SystemState(g, o, o, z, z), RateConstants(1, 2, 3))
        np.testing.assert_array_equal(f_e, -1)
        np.testing.assert_array_equal(f_s, -1)
        np.testing.assert_array_equal(f_c, 1)
        np.testing.assert_array_equal(f_p, 0)

    @given(arrays(float, 12, elements=pos), arrays(float, 12, elements=pos),
           arrays(float, 12, elements=pos), st.floats(0.01, 100), st.floats(0.01, 100),
           st.floats(0.01, 100))
    def test_cancellations(self, e, s, c, k_f, k_r, k_c):
        g = Grid1D(12)
        f_e, f_s, f_c, f_p = reaction_terms(SystemState(g, e, s, c, np.zeros(12)),
                                            RateConstants(k_f, k_r, k_c))
        scale = 1.0 + k_f * e * s + (k_r + k_c) * c
        assert np.all(np.abs(f_e + f_c) <= 1e-14 * scale)
        assert np.all(np.abs(f_s + f_c + f_p) <= 1e-14 * scale)


class TestLaplacian:
    def test_constant(self):
        np.testing.assert_array_equal(neumann_laplacian(np.full(9, 3.7), Grid1D(9)), 0)

    @settings(max_examples=50)
    @given(arrays(float, st.integers(2, 60), elements=st.floats(-100, 100)))
    def test_zero_flux(self, f):
        g = Grid1D(f.size)
        lap = neumann_laplacian(f, g)
        assert abs(integrate(lap, g)) <= 1e-12 * max(1.0, np.abs(f).max() / g.h**2)

    def test_cosine_second_order(self):
        errs, hs = [], []
        for n in (50, 100, 200, 400):
            g = Grid1D(n)
            x = g.cell_centers
            err = np.abs(neumann_laplacian(np.cos(np.pi * x), g) + np.pi**2 * np.cos(np.pi * x))
            errs.append(err.max())
            hs.append(g.h)
        order = np.polyfit(np.log(hs[-3:]), np.log(errs[-3:]), 1)[0]
        assert order >= 1.9


class TestStep:
    def test_fixed_point(self, unit_diff):
        g = Grid1D(20)
        c = np.full(20, 0.3)
        # rates must be positive, so the reaction is switched off by s = c = 0
        out = step_imex(SystemState(g, c, np.zeros(20), np.zeros(20), c), RateConstants(1, 1, 1),
                        unit_diff, StepperConfig(1e-3, 1.0))
        np.testing.assert_allclose(out.e, c, atol=1e-12)
        np.testing.assert_allclose(out.p, c, atol=1e-12)
        assert out.t == pytest.approx(1e-3)

    @pytest.mark.parametrize("scheme,order", [(Scheme.BACKWARD_EULER, 1), (Scheme.CRANK_NICOLSON, 2)])
    def test_heat_mode(self, scheme, order):
        # decay per step of the discrete cosine mode against exp(-d pi^2 dt)
        g = Grid1D(400)
        x = g.cell_centers
        d = 0.1
        lam_h = 4.0 / g.h**2 * np.sin(np.pi * g.h / 2) ** 2  # discrete eigenvalue
        errs = []
        dts = (4e-3, 2e-3, 1e-3)
        for dt in dts:
            s0 = np.cos(np.pi * x)
            z = np.zeros(400)
            st_ = SystemState(g, z, s0 + 1.0, z, z)
            out = step_imex(st_, RateConstants(1, 1, 1), DiffusionCoeffs(1, d, 1, 1),
                            StepperConfig(dt, 1.0, diffusion_scheme=scheme))
            ratio = np.linalg.norm(out.s - out.s.mean()) / np.linalg.norm(s0)
            errs.append(abs(ratio - np.exp(-d * lam_h * dt)))
            assert ratio == pytest.approx(np.exp(-d * np.pi**2 * dt), rel=1e-3)
        fitted = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert fitted >= order + 0.9  # local error is one order above global

    def test_fig1_step_conserves(self):
        st0 = fig1_initial()
        out = step_imex(st0, FIG1_RATES, FIG1_DIFF, StepperConfig(1e-4, 1.0))
        m0, m1 = conserved_masses(st0), conserved_masses(out)
        assert abs(m1.M0 - m0.M0) <= 1e-12 * m0.M0
        assert abs(m1.M1 - m0.M1) <= 1e-12 * m0.M1

    def test_negative_input(self, unit_rates, unit_diff):
        g = Grid1D(4)
        bad = SystemState(g, np.array([1, 1, -1e-6, 1.0]), np.ones(4), np.zeros(4), np.zeros(4))
        with pytest.raises(PositivityError):
            step_imex(bad, unit_rates, unit_diff, StepperConfig(1e-3, 1.0))

    def test_kernel_matches_reference(self):
        st0 = fig1_initial(50)
        cfg = StepperConfig(1e-4, 0.05, record_every=1)
        traj = simulate(st0, FIG1_RATES, FIG1_DIFF, cfg)
        ref = st0
        for _ in range(len(traj) - 1):
            ref = step_imex(ref, FIG1_RATES, FIG1_DIFF, cfg)
        np.testing.assert_allclose(traj.fields[-1], ref.stacked(), atol=1e-13)


class TestStepperConfig:
    @pytest.mark.parametrize("kw", [dict(dt=0, t_end=1), dict(dt=1, t_end=1),
                                    dict(dt=0.1, t_end=1, record_every=0),
                                    dict(dt=0.1, t_end=1, negativity_tolerance=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            StepperConfig(**kw)

    def test_dt_limit(self):
        assert reaction_dt_limit(np.array([2.0]), np.array([1.0]), RateConstants(1, 1, 1)) == 0.125
        # substrate also bounds the step
        assert reaction_dt_limit(np.array([0.1]), np.array([3.0]), RateConstants(1, 1, 1)) == 0.1


class TestSimulate:
    def test_zero_data(self, unit_rates, unit_diff):
        traj = simulate(SystemState.zeros(Grid1D(10)), unit_rates, unit_diff,
                        StepperConfig(0.01, 0.5, 5))
        assert np.all(traj.fields == 0)

    def test_heat_flow_only(self, unit_rates):
        g = Grid1D(40)
        z = np.zeros(40)
        e0 = 1.0 + np.cos(np.pi * g.cell_centers)
        traj = simulate(SystemState(g, e0, z, z, z), unit_rates, DiffusionCoeffs(1, 1, 1, 1),
                        StepperConfig(1e-3, 2.0, 100))
        assert np.all(traj.fields[:, 1:] == 0)
        assert traj.diagnostics["e_dev_inf"][-1] < 1e-6
        assert traj.diagnostics["e_dev_inf"][-1] < traj.diagnostics["e_dev_inf"][0]

    def test_snapshot_times(self, unit_rates, unit_diff):
        traj = simulate(SystemState.zeros(Grid1D(10)), unit_rates, unit_diff,
                        StepperConfig(0.01, 0.255, 10))
        np.testing.assert_allclose(traj.times, [0, 0.1, 0.2, 0.255], atol=1e-12)
        assert np.all(np.diff(traj.times) > 0)

    def test_dt_guard_halves(self, caplog):
        g = Grid1D(10)
        z = np.zeros(10)
        st0 = SystemState(g, np.full(10, 10.0), np.full(10, 10.0), z, z)
        with caplog.at_level(logging.WARNING, logger="enzyme_rd"):
            traj = simulate(st0, RateConstants(1, 1, 1), DiffusionCoeffs(1, 1, 1, 1),
                            StepperConfig(0.05, 0.5, 2))
        assert traj.halvings >= 1
        assert traj.dt_final < 0.05
        assert "halving" in caplog.text
        np.testing.assert_allclose(traj.times, np.arange(0, 0.51, 0.1), atol=1e-12)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**31))
    def test_random_conservation_and_bounds(self, seed):
        rng = np.random.default_rng(seed)
        n = 30
        g = Grid1D(n)
        degenerate = bool(rng.integers(2))
        d = (0.0 if degenerate else rng.uniform(0.1, 1), rng.uniform(0.1, 1),
             0.0 if degenerate else rng.uniform(0.1, 1), rng.uniform(0.1, 1))
        e0, s0, c0, p0 = (rng.uniform(0, 1, n) for _ in range(4))
        rates = RateConstants(*rng.uniform(0.2, 5, 3))
        traj = simulate(SystemState(g, e0, s0, c0, p0), rates, DiffusionCoeffs(*d),
                        StepperConfig(2e-3, 0.4, 20))
        dg = traj.diagnostics
        assert np.max(np.abs(dg["M0"] - dg["M0"][0])) <= 1e-10 * max(1, dg["M0"][0])
        assert np.max(np.abs(dg["M1"] - dg["M1"][0])) <= 1e-10 * max(1, dg["M1"][0])
        assert traj.fields.min() >= 0
        if degenerate:
            ec = traj.fields[:, 0] + traj.fields[:, 2]
            assert np.max(np.abs(ec - (e0 + c0))) <= 1e-10
            # max(|e|, |c|) <= |e0 + c0|_inf <= |e0|_inf + |c0|_inf; the sum of the two
            # sup norms is not bounded this way, the maxima can sit in different cells
            sharp = (e0 + c0).max() + 1e-8
            assert np.abs(traj.fields[:, 0]).max() <= sharp
            assert np.abs(traj.fields[:, 2]).max() <= sharp
            assert sharp <= np.abs(e0).max() + np.abs(c0).max() + 1e-8

    def test_sup_norm_sum_can_grow(self):
        # counterexample to bounding |e|_inf + |c|_inf by its initial value
        rng = np.random.default_rng(1424628234)
        g = Grid1D(30)
        rng.integers(2)
        d = (0.0, rng.uniform(0.1, 1), 0.0, rng.uniform(0.1, 1))
        e0, s0, c0, p0 = (rng.uniform(0, 1, 30) for _ in range(4))
        rates = RateConstants(*rng.uniform(0.2, 5, 3))
        traj = simulate(SystemState(g, e0, s0, c0, p0), rates, DiffusionCoeffs(*d),
                        StepperConfig(2e-3, 0.4, 20))
        e, c = traj.fields[:, 0], traj.fields[:, 2]
        assert np.max(e.max(axis=1) + c.max(axis=1)) > e0.max() + c0.max() + 1e-3
        assert max(e.max(), c.max()) <= (e0 + c0).max() + 1e-12

    def test_fig1_endpoints(self, fig1_run):
        d = fig1_run.traj.diagnostics
        assert fig1_run.traj.times[-1] == pytest.approx(200.0)
        assert d["s_inf"][-1] < 1e-3 and d["c_inf"][-1] < 1e-3
        assert abs(fig1_run.traj.fields[-1, 3].mean() - 0.3) < 3e-3


class TestEquilibrium:
    def test_degenerate_reference(self):
        st0 = fig1_initial()
        eq = equilibrium(st0, FIG1_DIFF)
        np.testing.assert_array_equal(eq.e_inf, project_indicator(0.4, 0.6, 0.2, st0.grid))
        assert eq.p_inf == pytest.approx(0.3, abs=1e-15)
        assert eq.regime is Regime.DEGENERATE
        assert integrate(eq.e_inf, st0.grid) == pytest.approx(0.04, abs=1e-15)

    def test_full_constant(self):
        st0 = fig1_initial()
        eq = equilibrium(st0, DiffusionCoeffs(1, 1, 1, 1))
        np.testing.assert_allclose(eq.e_inf, 0.04, rtol=0, atol=1e-16)
        assert eq.s_inf == eq.c_inf == 0

    def test_zero_complex(self):
        g = Grid1D(10)
        e0 = np.linspace(0, 1, 10)
        st0 = SystemState(g, e0, np.ones(10), np.zeros(10), np.zeros(10))
        np.testing.assert_array_equal(equilibrium(st0, FIG1_DIFF).e_inf, e0)


class TestMinEnzyme:
    def test_reference_zero(self):
        assert check_min_enzyme(fig1_initial()) == 0

    def test_constant(self):
        g = Grid1D(10)
        z = np.zeros(10)
        assert check_min_enzyme(SystemState(g, np.full(10, 0.5), z, z, z)) == 0.5

    def test_complementary(self):
        g = Grid1D(10)
        z = np.zeros(10)
        st0 = SystemState(g, project_indicator(0, 0.5, 1, g), z, project_indicator(0.5, 1, 1, g), z)
        assert check_min_enzyme(st0) == 1.0
