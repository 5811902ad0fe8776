import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from enzyme_rd.cli import run_checks
from enzyme_rd.core import DiffusionCoeffs, GeometryConstants, Grid1D, RateConstants, Regime, SystemState
from enzyme_rd.dynamics import StepperConfig, equilibrium, simulate
from enzyme_rd.rates import FitError, default_params_full
from enzyme_rd.verify import (
    CheckReport,
    Status,
    check_ckp_bounds,
    check_conservation,
    check_entropy_decay,
    check_functional_inequality,
    check_important_inequality,
    check_mass_dissipation,
    check_p_l2_decay,
    check_rate_predictions,
    check_truncated_lsi,
    random_audit_states,
    reports_to_json,
    smooth_positive_samples,
)


def fi_args(run):
    return (run.setup.params, run.traj.equilibrium, run.rates, run.diff, run.geometry)


class TestMassDissipation:
    def test_fig1(self, fig1_run):
        rep = check_mass_dissipation(fig1_run.traj, fig1_run.rates)
        assert rep.passed and rep.details["monotone"]
        assert rep.details["mismatch"] < 5e-2

    def test_equilibrium(self):
        g = Grid1D(10)
        z = np.zeros(10)
        traj = simulate(SystemState(g, np.full(10, 0.5), z, z, np.ones(10)), RateConstants(1, 1, 1),
                        DiffusionCoeffs(1, 1, 1, 1), StepperConfig(0.01, 0.1))
        rep = check_mass_dissipation(traj, RateConstants(1, 1, 1))
        assert rep.passed and rep.details["mismatch"] == 0

    def test_needs_snapshots(self, fig1_run):
        g = Grid1D(4)
        traj = simulate(SystemState.zeros(g), RateConstants(1, 1, 1), DiffusionCoeffs(1, 1, 1, 1),
                        StepperConfig(0.1, 0.2, record_every=10))
        with pytest.raises(ValueError):
            check_mass_dissipation(traj, fig1_run.rates)


class TestEntropyDecay:
    def test_degenerate(self, degenerate_run):
        r = degenerate_run
        rep = check_entropy_decay(r.traj, *fi_args(r), r.setup.gamma_value, r.series)
        assert rep.status is Status.PASS
        assert rep.details["monotone"] and rep.details["bound_applicable"]
        assert rep.details["beta"] == pytest.approx(0.5)

    def test_fig1_not_applicable(self, fig1_run):
        r = fig1_run
        rep = check_entropy_decay(r.traj, *fi_args(r), 1.0, r.series)
        assert rep.status is Status.NOT_APPLICABLE
        assert rep.details["beta"] == 0 and rep.details["monotone"]

    def test_monotone_failure_reported(self, degenerate_run):
        r = degenerate_run
        E = r.series.E.copy()
        E[5] = E[4] * 1.5
        fake = SimpleNamespace(E=E, t=r.series.t)
        rep = check_entropy_decay(r.traj, *fi_args(r), None, fake)
        assert rep.status is Status.FAIL and not rep.details["monotone"]


class TestFunctionalInequality:
    def test_equilibrium(self, full_run, geometry):
        r = full_run
        eq = r.traj.equilibrium
        g = r.grid
        st = SystemState(g, eq.e_inf, np.zeros(g.n_cells), np.zeros(g.n_cells), np.full(g.n_cells, eq.p_inf))
        rep = check_functional_inequality(st, r.setup.params, eq, r.rates, r.diff, r.geometry, 1.0)
        assert rep.passed and rep.details["E"] == 0 and rep.details["rhs"] == 0

    def test_slack_linear_in_gamma(self, full_run, rng):
        r = full_run
        m = r.setup.masses
        st = random_audit_states(r.grid, Regime.FULL, rng, m.M0, m.M1)
        eq = equilibrium(st, r.diff)
        args = (st, r.setup.params, eq, r.rates, r.diff, r.geometry)
        a = check_functional_inequality(*args, 0.01).details
        b = check_functional_inequality(*args, 0.03).details
        assert a["rhs"] == b["rhs"]
        assert (a["rhs"] - a["lhs"]) - (b["rhs"] - b["lhs"]) == pytest.approx(0.02 * a["E"], rel=1e-13)

    def test_terms_add_up(self, full_run):
        r = full_run
        eq = r.traj.equilibrium
        g = r.grid
        n = g.n_cells
        st = SystemState(g, eq.e_inf, np.full(n, 50.0), np.zeros(n), np.zeros(n))
        d = check_functional_inequality(st, r.setup.params, eq, r.rates, r.diff, r.geometry, 0.0).details
        assert sum(d["terms"].values()) == pytest.approx(d["D"], rel=1e-13)
        assert all(v >= 0 for v in d["terms"].values())
        # c = 0 < eps_c and s above eps_s: every cell sits in the s-only domain
        assert all(v == 0 for k, v in d["terms"].items() if not k.startswith("O2"))

    def test_full_run_trajectory(self, full_run):
        r = full_run
        worst = math.inf
        for i in range(0, len(r.traj), 10):
            rep = check_functional_inequality(r.traj.state(i), *fi_args(r), r.setup.gamma_value)
            worst = min(worst, rep.worst_margin)
        assert worst > 0

    def test_audit_state_masses(self, rng, grid50):
        for _ in range(50):
            st = random_audit_states(grid50, Regime.FULL, rng, 0.7, 0.2)
            assert (st.e + st.c).mean() == pytest.approx(0.7, rel=1e-12)
            assert (st.s + st.c + st.p).mean() == pytest.approx(0.2, rel=1e-12)
            assert min(st.e.min(), st.s.min(), st.c.min()) > 0
        e_inf = rng.uniform(0.2, 1.0, 50)
        st = random_audit_states(grid50, Regime.DEGENERATE, rng, 1.0, 0.3, e_inf)
        np.testing.assert_allclose(st.e + st.c, e_inf, rtol=1e-14)


class TestBounds:
    def test_ckp(self, full_run):
        r = full_run
        rep = check_ckp_bounds(r.traj, r.setup.params, r.traj.equilibrium, r.rates, r.geometry)
        assert rep.passed and all(v >= 0 for v in rep.details["per_bound_margin"].values())

    def test_ckp_degenerate_rejected(self, degenerate_run):
        r = degenerate_run
        with pytest.raises(ValueError):
            check_ckp_bounds(r.traj, r.setup.params, r.traj.equilibrium, r.rates, r.geometry)

    def test_truncated_lsi(self, grid50, rng):
        geo = GeometryConstants(10.0)
        const = [np.full(50, 2.0)]
        assert check_truncated_lsi(const, 0.5, geo, grid50).worst_margin == 0
        below = [np.full(50, 0.1), np.linspace(0.01, 0.2, 50)]
        assert check_truncated_lsi(below, 0.5, geo, grid50).passed
        rep = check_truncated_lsi(smooth_positive_samples(grid50, 100, rng), 0.1, geo, grid50)
        assert rep.passed

    def test_truncated_lsi_detects_large_constant(self, grid50, rng):
        rep = check_truncated_lsi(smooth_positive_samples(grid50, 100, rng), 0.1,
                                  GeometryConstants(1e4), grid50)
        assert rep.status is Status.FAIL

    def test_p_l2(self, fig1_run, degenerate_run):
        for r in (fig1_run, degenerate_run):
            rep = check_p_l2_decay(r.traj, r.diff.d_p, r.geometry, r.rates)
            assert rep.passed, rep

    def test_important_inequality(self):
        rep = check_important_inequality(100_000, seed=3)
        assert rep.passed and rep.details["n_samples"] == 100_000


class TestRatePredictions:
    def synthetic(self, rate):
        t = np.linspace(0, 10, 201)
        y = 0.3 * np.exp(-rate * t)
        return SimpleNamespace(times=t, diagnostics={"s_inf": y, "c_inf": y, "e_dev_inf": y,
                                                     "p_dev_inf": y})

    def test_exact(self):
        rep = check_rate_predictions(self.synthetic(0.4), {"s": 0.4, "c": 0.4}, tolerance=0.0)
        assert abs(rep.worst_margin) < 1e-10

    def test_too_slow(self):
        rep = check_rate_predictions(self.synthetic(0.3), {"s": 0.4})
        assert rep.status is Status.FAIL and rep.locator == "s"

    def test_floor(self):
        with pytest.raises(FitError):
            check_rate_predictions(self.synthetic(10.0), {"s": 1.0})


class TestRunChecks:
    def test_degenerate_all_pass(self, degenerate_run):
        r = degenerate_run
        reports = run_checks(r.setup, r.traj, r.series, seed=0)
        names = [x.name for x in reports]
        assert "rate_predictions" in names and "functional_inequality_audit" in names
        for rep in reports:
            assert rep.status is not Status.FAIL, rep

    def test_json_round_trip_and_determinism(self, degenerate_run):
        r = degenerate_run
        a = run_checks(r.setup, r.traj, r.series, seed=7)
        b = run_checks(r.setup, r.traj, r.series, seed=7)
        text = reports_to_json(a)
        assert text == reports_to_json(b)
        back = [CheckReport.from_dict(d) for d in json.loads(text)]
        assert [x.status for x in back] == [x.status for x in a]
        assert reports_to_json(back) == text


def test_conservation_pointwise(degenerate_run):
    rep = check_conservation(degenerate_run.traj)
    assert rep.passed and rep.details["pointwise_drift"] < 1e-12


def test_default_params_match_setup(full_run):
    r = full_run
    p = default_params_full(r.rates, r.setup.masses.M0, r.geometry, r.diff.d_e)
    assert p.eps_s == pytest.approx(r.setup.params.eps_s, rel=1e-15)
