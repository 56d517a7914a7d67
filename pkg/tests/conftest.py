"""Shared fixtures: the expensive stationary runs, built once per session."""

import numpy as np
import pytest

from dyson_traces import bernoulli as bn
from dyson_traces import dyson_sim as sim
from dyson_traces import fokker_planck as fp
from dyson_traces.ensembles import EnsembleSpec

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


def _matrix_run(beta: int, dim: int) -> sim.SampleSet:
    cfg = sim.SdeConfig(
        dt=2e-3,
        burn_in=3.0,
        sample_interval=1.0 if dim == 2 else 0.5,
        n_trajectories=500,
        samples_per_trajectory=200,
        seed=1000 + 10 * dim + beta,
        k_max=dim,
    )
    return sim.simulate_matrix_flow(EnsembleSpec(beta=beta, dim=dim), cfg)


def _trace_run(beta: int, dim: int) -> sim.SampleSet:
    spec = EnsembleSpec(beta=beta, dim=dim)
    means = fp.stationary_trace_means(spec, dim)
    initial = [float(means[k]) for k in range(1, dim + 1)]
    cfg = sim.SdeConfig(
        dt=2e-3,
        burn_in=3.0,
        sample_interval=0.5,
        n_trajectories=500,
        samples_per_trajectory=200,
        seed=2000 + 10 * dim + beta,
    )
    return sim.simulate_trace_sde(spec, cfg, initial)


class SamplerBank:
    """Memoized access to the 1e5-sample stationary runs (~1 min each)."""

    def __init__(self):
        self._memo = {}

    def matrix(self, beta: int, dim: int) -> sim.SampleSet:
        key = ("matrix", beta, dim)
        if key not in self._memo:
            self._memo[key] = _matrix_run(beta, dim)
        return self._memo[key]

    def trace(self, beta: int, dim: int) -> sim.SampleSet:
        key = ("trace", beta, dim)
        if key not in self._memo:
            self._memo[key] = _trace_run(beta, dim)
        return self._memo[key]


@pytest.fixture(scope="session")
def sampler_bank():
    return SamplerBank()


@pytest.fixture(scope="session")
def walk128():
    """One long sign-flip walk at dim 128, shared by the walk statistics tests."""
    rng = np.random.default_rng(np.random.SeedSequence((4242, 128)))
    return bn.walk_and_measure(128, 20_000, ("tau2", "tau4", "zeta22", "zeta33"), rng)
