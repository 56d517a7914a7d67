"""Batched SDE samplers: determinism, discretization order, constraint handling."""

import math
from dataclasses import replace

import numpy as np
import pytest

from dyson_traces import dyson_sim as sim
from dyson_traces import fokker_planck as fp
from dyson_traces import symfun as sf
from dyson_traces.ensembles import EnsembleSpec

SMALL = sim.SdeConfig(
    dt=5e-3,
    burn_in=0.5,
    sample_interval=0.1,
    n_trajectories=20,
    samples_per_trajectory=30,
    seed=77,
)


# ---------------------------------------------------------------------------
# configuration plumbing


def test_config_validation():
    with pytest.raises(ValueError):
        replace(SMALL, dt=0.0)
    with pytest.raises(ValueError):
        replace(SMALL, burn_in=-1.0)
    with pytest.raises(ValueError):
        replace(SMALL, sample_interval=0.0)
    with pytest.raises(ValueError):
        replace(SMALL, n_trajectories=0)
    with pytest.raises(ValueError):
        replace(SMALL, k_max=0)
    assert SMALL.total_samples == 600


def test_config_hash_tracks_content():
    assert SMALL.config_hash() == replace(SMALL, seed=77).config_hash()
    assert SMALL.config_hash() != replace(SMALL, seed=78).config_hash()
    assert len(SMALL.config_hash()) == 16


def test_sample_set_shape_validation():
    spec = EnsembleSpec(beta=1, dim=2)
    with pytest.raises(ValueError):
        sim.SampleSet(
            system="matrix",
            spec=spec,
            columns=("t1", "t2"),
            times=np.zeros(3),
            values=np.zeros((3, 1)),
            trajectory=np.zeros(3, dtype=int),
            config=SMALL,
            provenance={},
        )


def test_unknown_column_rejected():
    ss = sim.simulate_matrix_flow(EnsembleSpec(beta=1, dim=2), SMALL)
    with pytest.raises(KeyError):
        ss.column("t9")


# ---------------------------------------------------------------------------
# determinism


@pytest.mark.parametrize("system", ["matrix", "eigenvalue", "trace"])
def test_runs_are_bit_reproducible(system):
    spec = EnsembleSpec(beta=1, dim=2)
    if system == "matrix":
        a = sim.simulate_matrix_flow(spec, SMALL)
        b = sim.simulate_matrix_flow(spec, SMALL)
    elif system == "eigenvalue":
        a = sim.simulate_eigenvalue_sde(spec, SMALL, (-1.0, 1.0))
        b = sim.simulate_eigenvalue_sde(spec, SMALL, (-1.0, 1.0))
    else:
        a = sim.simulate_trace_sde(spec, SMALL, (0.0, 3.0))
        b = sim.simulate_trace_sde(spec, SMALL, (0.0, 3.0))
    assert np.array_equal(a.values, b.values)
    assert a.system == system


def test_seed_changes_samples():
    spec = EnsembleSpec(beta=2, dim=2)
    a = sim.simulate_matrix_flow(spec, SMALL)
    b = sim.simulate_matrix_flow(spec, replace(SMALL, seed=78))
    assert not np.array_equal(a.values, b.values)


def test_trajectory_layout():
    ss = sim.simulate_matrix_flow(EnsembleSpec(beta=1, dim=2), SMALL)
    n_traj = SMALL.n_trajectories
    assert ss.n_samples == SMALL.total_samples
    # sample-major blocks: each block holds every trajectory once
    assert np.array_equal(ss.trajectory[:n_traj], np.arange(n_traj))
    assert np.array_equal(ss.trajectory, np.tile(np.arange(n_traj), SMALL.samples_per_trajectory))
    assert np.all(np.diff(ss.times[::n_traj]) > 0)
    assert np.all(ss.times[:n_traj] == ss.times[0])


# ---------------------------------------------------------------------------
# discretization order (strong error under a shared noise ladder)


def test_euler_error_scales_linearly_in_dt():
    """Halving dt roughly triples the distance to a dt/4 reference path.

    With common noise the strong error of the Euler map is C dt + O(dt^2),
    so err(dt)/err(dt/2) = (1 - 1/4)/(1/2 - 1/4) = 3 against the dt/4 path.
    """
    rng = np.random.default_rng(314)
    batch, n, beta = 256, 2, 1
    state0 = sim._symmetrize(rng.standard_normal((batch, beta, n, n))) * math.sqrt(0.5)
    dt, n_coarse = 0.08, 16

    fine = sim._symmetrize(rng.standard_normal((4 * n_coarse, batch, beta, n, n)))
    mid = (fine[0::2] + fine[1::2]) / math.sqrt(2.0)
    coarse = (mid[0::2] + mid[1::2]) / math.sqrt(2.0)

    def run(increments, h):
        x = state0.copy()
        for z in increments:
            x = sim._matrix_euler_update(x, h, z, beta)
        return x

    x_ref = run(fine, dt / 4)
    err1 = np.sqrt(np.mean((run(coarse, dt) - x_ref) ** 2))
    err2 = np.sqrt(np.mean((run(mid, dt / 2) - x_ref) ** 2))
    ratio = err1 / err2
    assert 1.8 < ratio < 4.5


# ---------------------------------------------------------------------------
# batched helpers against the exact scalar modules


def test_extend_batch_matches_exact():
    rng = np.random.default_rng(21)
    pts = rng.uniform(-1.5, 1.5, size=(40, 3))
    t = np.stack([np.sum(pts**k, axis=1) for k in (1, 2, 3)], axis=1)
    ext = sim._extend_batch(t, 3, 6)
    for row in range(0, 40, 7):
        tv = sf.TraceVector(dim=3, values=tuple(float(v) for v in t[row]))
        exact = sf.extend_traces(tv, 3)
        for k in range(1, 7):
            assert ext[row, k - 1] == pytest.approx(float(exact[k]), rel=1e-12, abs=1e-12)


def test_trace_drift_batch_matches_exact():
    rng = np.random.default_rng(22)
    for beta in (1, 2, 4):
        spec = EnsembleSpec(beta=beta, dim=3)
        pts = rng.uniform(-1.5, 1.5, size=(12, 3))
        t = np.stack([np.sum(pts**k, axis=1) for k in (1, 2, 3)], axis=1)
        drift = sim._trace_drift_batch(t, spec)
        for row in range(12):
            tv = sf.TraceVector(dim=3, values=tuple(float(v) for v in t[row]))
            exact = fp.drift_traces(tv, spec)
            for k in range(3):
                assert drift[row, k] == pytest.approx(float(exact[k]), rel=1e-10, abs=1e-10)


def test_trace_diffusion_batch_matches_exact():
    rng = np.random.default_rng(23)
    spec = EnsembleSpec(beta=1, dim=3)
    pts = rng.uniform(-1.5, 1.5, size=(6, 3))
    t = np.stack([np.sum(pts**k, axis=1) for k in (1, 2, 3, 4)], axis=1)
    diff = sim._trace_diffusion_batch(t, spec)
    for row in range(6):
        tv = sf.TraceVector(dim=3, values=tuple(float(v) for v in t[row]))
        exact = fp.diffusion_traces(tv, spec)
        for i in range(3):
            for j in range(3):
                assert diff[row, i, j] == pytest.approx(float(exact[i][j]), rel=1e-10)


def test_psd_sqrt_roundtrip():
    rng = np.random.default_rng(24)
    for n in (2, 5):
        g = rng.standard_normal((30, n, n))
        mats = g @ np.swapaxes(g, 1, 2) + 1e-6 * np.eye(n)
        roots = sim._psd_sqrt_batch(mats)
        assert np.allclose(roots @ np.swapaxes(roots, 1, 2), mats, atol=1e-8)
        assert np.allclose(roots, np.swapaxes(roots, 1, 2))


def test_psd_sqrt_clips_roundoff_but_rejects_negative():
    tiny = np.array([[[1.0, 1.0], [1.0, 1.0 - 1e-14]]])  # det barely below zero
    out = sim._psd_sqrt_batch(tiny)
    assert np.all(np.isfinite(out))
    for shape in (2, 3):
        bad = np.tile(np.diag([1.0] * (shape - 1) + [-0.5])[None], (4, 1, 1))
        with pytest.raises(sim.StepFloorError):
            sim._psd_sqrt_batch(bad)


def test_domain_batch_matches_scalar():
    rng = np.random.default_rng(25)
    for dim in (2, 3):
        dom = fp.DomainMembership(dim=dim, tol=1e-8)
        # mix of realizable points (power sums of real nodes) and noise
        pts = rng.uniform(-1.2, 1.2, size=(25, dim))
        real = np.stack([np.sum(pts**k, axis=1) for k in range(1, dim + 1)], axis=1)
        noise = rng.uniform(-2.0, 2.0, size=(25, dim))
        rows = np.concatenate([real, noise], axis=0)
        got = sim._domain_batch(rows, dim, 1e-8)
        expected = np.array([dom.contains(tuple(float(v) for v in row)) for row in rows])
        assert np.array_equal(got, expected)
        assert got[:25].all()


def test_advance_constrained_bisects_then_gives_up():
    calls = []

    def propose(x, h, z):
        calls.append(h)
        return x + h * z

    def draw():
        return 1.0

    def reject_first(x):
        return len(calls) > 1

    out = sim._advance_constrained(np.array([0.0]), 0.5, 0, draw, propose, reject_first)
    # full step rejected, then two accepted half steps with fresh noise
    assert calls == [0.5, 0.25, 0.25]
    assert out[0] == pytest.approx(0.5)

    with pytest.raises(sim.StepFloorError):
        sim._advance_constrained(np.array([0.0]), 0.5, 0, draw, propose, lambda x: False)


# ---------------------------------------------------------------------------
# sampler-level behavior


def test_eigenvalue_samples_stay_ordered():
    spec = EnsembleSpec(beta=1, dim=3)
    ss = sim.simulate_eigenvalue_sde(spec, SMALL, (-2.0, 0.0, 2.0))
    vals = ss.values
    assert vals.shape[1] == 3
    assert np.all(np.diff(vals, axis=1) > 0)


def test_eigenvalue_initial_must_be_ordered():
    spec = EnsembleSpec(beta=1, dim=2)
    with pytest.raises(ValueError):
        sim.simulate_eigenvalue_sde(spec, SMALL, (1.0, -1.0))


def test_trace_initial_validation():
    spec = EnsembleSpec(beta=1, dim=2)
    with pytest.raises(ValueError):
        sim.simulate_trace_sde(spec, SMALL, (0.0, -1.0))  # outside the domain
    with pytest.raises(ValueError):
        sim.simulate_trace_sde(spec, SMALL, (0.0, 1.0, 2.0))  # wrong length
    tv = sf.power_sums([-1.0, 1.0], 2)
    ss = sim.simulate_trace_sde(spec, SMALL, tv)
    assert ss.columns == ("t1", "t2")


def test_trace_samples_remain_in_domain():
    spec = EnsembleSpec(beta=1, dim=2)
    ss = sim.simulate_trace_sde(spec, SMALL, (0.0, 3.0))
    disc = 2.0 * ss.column("t2") - ss.column("t1") ** 2
    assert np.all(disc >= -4e-16)


def test_matrix_flow_k_max_columns():
    spec = EnsembleSpec(beta=2, dim=4)
    ss = sim.simulate_matrix_flow(spec, replace(SMALL, k_max=3))
    assert ss.columns == ("t1", "t2", "t3")
    # power-sum inequality t_1^2 <= N t_2 holds pointwise
    assert np.all(ss.column("t1") ** 2 <= 4.0 * ss.column("t2") + 1e-12)


def test_boundary_start_recovers():
    """A start on the domain boundary (repeated spectrum) is legal and survives."""
    spec = EnsembleSpec(beta=1, dim=2)
    ss = sim.simulate_trace_sde(spec, replace(SMALL, samples_per_trajectory=5), (0.0, 0.0))
    assert ss.n_samples == 100
    assert np.all(np.isfinite(ss.values))


# ---------------------------------------------------------------------------
# cross-sampler comparison machinery


def test_compare_samplers_same_law():
    spec = EnsembleSpec(beta=1, dim=2)
    cfg = replace(SMALL, n_trajectories=40, samples_per_trajectory=200, sample_interval=0.25)
    a = sim.simulate_matrix_flow(spec, cfg)
    b = sim.simulate_matrix_flow(spec, replace(cfg, seed=1234))
    rep = sim.compare_samplers(a, b, {"t2": "t2", "skew": lambda s: s.column("t1") ** 3})
    for stat in rep.values():
        assert stat["n_a"] == stat["n_b"] == 8000
        assert stat["ks"] < 0.05
        assert abs(stat["z_mean"]) < 4.0
        assert abs(stat["z_var"]) < 4.0
    assert rep["t2"]["mean_a"] == pytest.approx(3.0, abs=0.15)


def test_compare_samplers_detects_disagreement():
    spec1 = EnsembleSpec(beta=1, dim=2)
    spec4 = EnsembleSpec(beta=4, dim=2)
    cfg = replace(SMALL, n_trajectories=40, samples_per_trajectory=100)
    a = sim.simulate_matrix_flow(spec1, cfg)
    b = sim.simulate_matrix_flow(spec4, replace(cfg, seed=99))
    rep = sim.compare_samplers(a, b, {"t2": "t2"})
    assert rep["t2"]["ks"] > 0.2
    assert abs(rep["t2"]["z_mean"]) > 5.0
