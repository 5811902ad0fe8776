import time

import numpy as np
import pytest

from enzyme_rd.cli import prepare, run_simulation
from enzyme_rd.config import preset
from enzyme_rd.core import DiffusionCoeffs, GeometryConstants, Grid1D, RateConstants


class Run:
    """A preset run: setup, trajectory and entropy series."""

    def __init__(self, name, **overrides):
        self.name = name
        cfg = preset(name)
        if overrides:
            cfg = cfg.with_overrides(overrides)
        self.setup = prepare(cfg)
        self.cfg = cfg
        t0 = time.perf_counter()
        self.traj, self.series = run_simulation(self.setup)
        self.elapsed = time.perf_counter() - t0

    @property
    def rates(self):
        return self.cfg.rates

    @property
    def diff(self):
        return self.cfg.diffusion

    @property
    def geometry(self):
        return self.cfg.geometry

    @property
    def grid(self):
        return self.cfg.grid


@pytest.fixture(scope="session")
def fig1_run():
    return Run("fig1")


@pytest.fixture(scope="session")
def degenerate_run():
    return Run("degenerate-benchmark")


@pytest.fixture(scope="session")
def full_run():
    return Run("full-benchmark")


@pytest.fixture(scope="session")
def tight_run():
    return Run("full-tight")


@pytest.fixture
def unit_rates():
    return RateConstants(1.0, 1.0, 1.0)


@pytest.fixture
def unit_diff():
    return DiffusionCoeffs(1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def geometry():
    return GeometryConstants(10.0)


@pytest.fixture
def grid50():
    return Grid1D(50)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


@pytest.fixture
def acceptance(capsys):
    """Record one PASS/FAIL line per acceptance criterion and echo it."""

    def record(criterion, ok, detail):
        line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[criterion] = line
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
