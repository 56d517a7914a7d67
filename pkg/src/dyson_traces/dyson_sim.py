"""Euler-Maruyama samplers for the flow in all three coordinate systems.

All samplers run ``n_trajectories`` independent walkers in lockstep with
vectorized numpy updates.  Every trajectory owns a counter-based Philox
stream seeded by (master seed, stream salt, trajectory index), so runs
are bit-reproducible regardless of batch shape, and a trajectory's
noise sequence does not depend on how many neighbors it is batched with.

The eigenvalue and trace samplers are constrained: the first must keep
the spectrum strictly ordered, the second must stay inside the domain of
trace vectors realized by real spectra.  A proposal that leaves the
constraint set is replaced by two recursive half steps with fresh noise
(bisection); after MAX_BISECT halvings the integrator aborts with
StepFloorError, which signals a configuration too stiff for the chosen
dt rather than a recoverable event.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sp_stats

from dyson_traces.ensembles import EnsembleSpec, complex_embedding, unit_noise
from dyson_traces.symfun import TraceVector

__all__ = [
    "SdeConfig",
    "SampleSet",
    "StepFloorError",
    "simulate_matrix_flow",
    "simulate_eigenvalue_sde",
    "simulate_trace_sde",
    "compare_samplers",
]

MAX_BISECT = 10

# diffusion matrices are PSD up to roundoff inside the domain; anything
# more negative than this (times the spectral scale) means the state is bad
PSD_CLIP_TOL = 1e-10


class StepFloorError(RuntimeError):
    """Raised when bisection reaches dt / 2**MAX_BISECT without a valid step."""


@dataclass(frozen=True)
class SdeConfig:
    """Integration schedule shared by the three samplers.

    ``samples_per_trajectory`` states are recorded per walker, spaced
    ``sample_interval`` time units apart after ``burn_in`` time units.
    ``k_max`` limits how many traces the matrix sampler records
    (default: all N).
    """

    dt: float = 1e-3
    burn_in: float = 10.0
    sample_interval: float = 0.5
    n_trajectories: int = 1
    samples_per_trajectory: int = 1
    seed: int = 0
    k_max: int | None = None
    domain_tol: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.burn_in < 0 or self.sample_interval <= 0:
            raise ValueError("burn_in must be >= 0 and sample_interval > 0")
        if self.n_trajectories < 1 or self.samples_per_trajectory < 1:
            raise ValueError("trajectory and sample counts must be >= 1")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be >= 1 when given")

    @property
    def total_samples(self) -> int:
        return self.n_trajectories * self.samples_per_trajectory

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SampleSet:
    """Recorded observables of one run: row r is trajectory[r] at times[r]."""

    system: str
    spec: EnsembleSpec
    columns: tuple
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    trajectory: np.ndarray = field(repr=False)
    config: SdeConfig
    provenance: str

    def __post_init__(self):
        if self.values.shape != (len(self.times), len(self.columns)):
            raise ValueError("values shape does not match times x columns")

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"no column {name!r}; have {self.columns}")
        return self.values[:, self.columns.index(name)]


def _trajectory_generators(seed: int, n: int, salt: int) -> list:
    return [
        np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, salt, i))))
        for i in range(n)
    ]


class _NoiseBuffer:
    """Per-trajectory standard normals, pre-drawn in chunks of steps.

    Chunking amortizes generator call overhead for small states while the
    draw order per trajectory stays fixed: chunk boundaries depend only
    on the step shape, never on rejections (retries draw directly from
    the trajectory's generator via ``direct``).
    """

    def __init__(self, gens: list, step_shape: tuple):
        self.gens = gens
        self.step_shape = step_shape
        per_step = int(np.prod(step_shape))
        self.chunk = max(1, min(512, (1 << 14) // max(per_step, 1)))
        self.buf = None
        self.pos = 0

    def next_step(self) -> np.ndarray:
        if self.buf is None or self.pos == self.chunk:
            self.buf = np.stack(
                [g.standard_normal((self.chunk, *self.step_shape)) for g in self.gens]
            )
            self.pos = 0
        out = self.buf[:, self.pos]
        self.pos += 1
        return out

    def direct(self, i: int, shape: tuple) -> np.ndarray:
        return self.gens[i].standard_normal(shape)


def _symmetrize(raw: np.ndarray) -> np.ndarray:
    """(..., n_comp, N, N) iid normals -> self-adjoint unit noise per component."""
    rt = np.swapaxes(raw, -1, -2)
    out = np.empty_like(raw)
    out[..., 0, :, :] = (raw[..., 0, :, :] + rt[..., 0, :, :]) / math.sqrt(2.0)
    if raw.shape[-3] > 1:
        out[..., 1:, :, :] = (raw[..., 1:, :, :] - rt[..., 1:, :, :]) / math.sqrt(2.0)
    return out


def _matrix_euler_update(state: np.ndarray, dt: float, unit_sym: np.ndarray, beta: int) -> np.ndarray:
    """One Euler step of the coefficient OU flow given symmetrized unit noise."""
    return state * (1.0 - dt) + math.sqrt(dt / beta) * unit_sym


def _traces_batch(state: np.ndarray, beta: int, k_max: int) -> np.ndarray:
    """Traces t_1..t_k of a batch of coefficient states (B, n_comp, N, N)."""
    e = complex_embedding(state, beta)
    half = 0.5 if beta == 4 else 1.0
    b = e.shape[0]
    out = np.empty((b, k_max))
    out[:, 0] = np.trace(e, axis1=1, axis2=2).real
    if k_max >= 2:
        if k_max <= 4:
            out[:, 1] = np.sum(np.abs(e) ** 2, axis=(1, 2))
            if k_max >= 3:
                e2 = e @ e
                out[:, 2] = np.sum(e2 * np.conj(e), axis=(1, 2)).real
            if k_max >= 4:
                out[:, 3] = np.sum(np.abs(e2) ** 2, axis=(1, 2))
        else:
            p = e
            for k in range(2, k_max + 1):
                p = p @ e
                out[:, k - 1] = np.trace(p, axis1=1, axis2=2).real
    return out * half


def _sample_schedule(config: SdeConfig) -> tuple:
    steps_per_sample = max(1, round(config.sample_interval / config.dt))
    burn_steps = round(config.burn_in / config.dt)
    return burn_steps, steps_per_sample


def _assemble(system, spec, columns, rows, config, n_traj) -> SampleSet:
    values = np.concatenate(rows, axis=0) if rows else np.zeros((0, len(columns)))
    burn_steps, sps = _sample_schedule(config)
    n_rec = len(rows)
    times = np.repeat(
        (burn_steps + np.arange(n_rec) * sps) * config.dt, n_traj
    )
    traj = np.tile(np.arange(n_traj), n_rec)
    return SampleSet(
        system=system,
        spec=spec,
        columns=tuple(columns),
        times=times,
        values=values,
        trajectory=traj,
        config=config,
        provenance=config.config_hash(),
    )


def simulate_matrix_flow(spec: EnsembleSpec, config: SdeConfig) -> SampleSet:
    """Sample the matrix OU flow, recording traces t_1..t_k at each sample time.

    Walkers start from independent stationary draws, so burn-in only has
    to wash out discretization transients, not the initial condition.
    """
    n, beta = spec.dim, spec.beta
    k_max = config.k_max or n
    gens = _trajectory_generators(config.seed, config.n_trajectories, salt=1)
    state = np.stack([unit_noise(n, beta, g) for g in gens]) * math.sqrt(
        1.0 / (2.0 * beta)
    )
    noise = _NoiseBuffer(gens, (beta, n, n))
    burn_steps, sps = _sample_schedule(config)

    def step():
        nonlocal state
        xi = _symmetrize(noise.next_step())
        state = _matrix_euler_update(state, config.dt, xi, beta)

    for _ in range(burn_steps):
        step()
    rows = []
    for j in range(config.samples_per_trajectory):
        if j > 0:
            for _ in range(sps):
                step()
        rows.append(_traces_batch(state, beta, k_max))
    columns = [f"t{k}" for k in range(1, k_max + 1)]
    return _assemble("matrix", spec, columns, rows, config, config.n_trajectories)


def _eigen_drift(x: np.ndarray) -> np.ndarray:
    """Repulsive drift for a batch of ordered spectra (B, N)."""
    d = x[:, :, None] - x[:, None, :]
    n = x.shape[1]
    idx = np.arange(n)
    d[:, idx, idx] = 1.0
    inv = 1.0 / d
    inv[:, idx, idx] = 0.0
    return inv.sum(axis=2) - x


def _strictly_increasing(x: np.ndarray) -> np.ndarray:
    if x.shape[1] == 1:
        return np.ones(x.shape[0], dtype=bool)
    return np.all(np.diff(x, axis=1) > 0.0, axis=1)


def _advance_constrained(x_row, h, depth, draw, propose, valid):
    """Recursive bisection: fresh-noise proposal at step h, else two h/2 steps."""
    prop = propose(x_row, h, draw())
    if valid(prop):
        return prop
    if depth >= MAX_BISECT:
        raise StepFloorError(
            f"no valid step at dt/2^{depth}; configuration too stiff"
        )
    y = _advance_constrained(x_row, h / 2, depth + 1, draw, propose, valid)
    return _advance_constrained(y, h / 2, depth + 1, draw, propose, valid)


def simulate_eigenvalue_sde(spec: EnsembleSpec, config: SdeConfig, initial: Sequence) -> SampleSet:
    """Integrate the coupled eigenvalue SDE from a strictly ordered start.

    Proposals that break the ordering are bisected with fresh noise; the
    recorded spectra are therefore ordered by construction.
    """
    n, beta = spec.dim, spec.beta
    x0 = np.asarray([float(v) for v in initial])
    if x0.shape != (n,) or not np.all(np.diff(x0) > 0):
        raise ValueError("initial spectrum must be strictly increasing of length dim")
    gens = _trajectory_generators(config.seed, config.n_trajectories, salt=2)
    state = np.tile(x0, (config.n_trajectories, 1))
    noise = _NoiseBuffer(gens, (n,))
    sig = math.sqrt(2.0 / beta)

    def propose_row(x, h, xi):
        return x + _eigen_drift(x[None, :])[0] * h + sig * math.sqrt(h) * xi

    def step():
        nonlocal state
        xi = noise.next_step()
        prop = state + _eigen_drift(state) * config.dt + sig * math.sqrt(config.dt) * xi
        ok = _strictly_increasing(prop)
        if not np.all(ok):
            for i in np.flatnonzero(~ok):
                half = config.dt / 2
                y = _advance_constrained(
                    state[i], half, 1, lambda: noise.direct(i, (n,)),
                    propose_row, lambda p: bool(np.all(np.diff(p) > 0)),
                )
                prop[i] = _advance_constrained(
                    y, half, 1, lambda: noise.direct(i, (n,)),
                    propose_row, lambda p: bool(np.all(np.diff(p) > 0)),
                )
        state = prop

    burn_steps, sps = _sample_schedule(config)
    for _ in range(burn_steps):
        step()
    rows = []
    for j in range(config.samples_per_trajectory):
        if j > 0:
            for _ in range(sps):
                step()
        rows.append(state.copy())
    columns = [f"lambda{k}" for k in range(1, n + 1)]
    return _assemble("eigenvalue", spec, columns, rows, config, config.n_trajectories)


def _extend_batch(t: np.ndarray, dim: int, order: int) -> np.ndarray:
    """Newton extension of batched trace rows (B, dim) to (B, order)."""
    b = t.shape[0]
    c = np.zeros((b, dim + 1))
    c[:, 0] = 1.0
    for k in range(1, dim + 1):
        acc = t[:, k - 1].copy()
        for i in range(1, k):
            acc += c[:, i] * t[:, k - i - 1]
        c[:, k] = -acc / k
    out = np.zeros((b, order))
    out[:, :dim] = t[:, :dim]
    for idx in range(dim + 1, order + 1):
        acc = np.zeros(b)
        for k in range(1, dim + 1):
            acc += c[:, k] * out[:, idx - k - 1]
        out[:, idx - 1] = -acc
    return out


def _trace_drift_batch(t: np.ndarray, spec: EnsembleSpec) -> np.ndarray:
    """Drift rows (B, N); t must carry at least N columns (t_1..)."""
    n_dim, beta = spec.dim, spec.beta
    b = t.shape[0]
    t0 = float(n_dim)

    def get(i):
        if i == 0:
            return np.full(b, t0)
        return t[:, i - 1]

    out = np.empty((b, n_dim))
    for n in range(1, n_dim + 1):
        r = -n * get(n)
        if n >= 2:
            conv = np.zeros(b)
            for x in range(n - 1):
                conv += get(x) * get(n - 2 - x)
            r = r + 0.5 * n * conv + ((2.0 - beta) / beta) * 0.5 * n * (n - 1) * get(n - 2)
        out[:, n - 1] = r
    return out


def _trace_diffusion_batch(t_ext: np.ndarray, spec: EnsembleSpec) -> np.ndarray:
    """Diffusion matrices (B, N, N) from rows extended to 2N-2 columns."""
    n_dim, beta = spec.dim, spec.beta
    b = t_ext.shape[0]

    def get(i):
        if i == 0:
            return np.full(b, float(n_dim))
        return t_ext[:, i - 1]

    out = np.empty((b, n_dim, n_dim))
    for n in range(1, n_dim + 1):
        for m in range(n, n_dim + 1):
            val = (2.0 * n * m / beta) * get(n + m - 2)
            out[:, n - 1, m - 1] = val
            out[:, m - 1, n - 1] = val
    return out


def _psd_sqrt_batch(mats: np.ndarray) -> np.ndarray:
    """Symmetric PSD square roots with eigenvalue clipping at zero.

    Eigenvalues in [-PSD_CLIP_TOL * scale, 0) are treated as roundoff and
    clipped; anything lower raises, because diffusion matrices evaluated
    inside the domain are PSD by construction.
    """
    if mats.shape[-1] == 2:
        a, bb, c = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 1]
        disc = np.sqrt(np.maximum((a - c) ** 2 + 4 * bb ** 2, 0.0))
        w_min, w_max = 0.5 * (a + c - disc), 0.5 * (a + c + disc)
        scale = np.maximum(np.abs(w_max), 1.0)
        if np.any(w_min < -PSD_CLIP_TOL * scale):
            raise StepFloorError("diffusion matrix has a genuinely negative eigenvalue")
        det = np.maximum(a * c - bb ** 2, 0.0)
        s = np.sqrt(det)
        tr = np.sqrt(a + c + 2.0 * s)
        out = mats.copy()
        out[:, 0, 0] += s
        out[:, 1, 1] += s
        return out / tr[:, None, None]
    w, v = np.linalg.eigh(mats)
    scale = np.maximum(np.abs(w).max(axis=1), 1.0)
    if np.any(w[:, 0] < -PSD_CLIP_TOL * scale):
        raise StepFloorError("diffusion matrix has a genuinely negative eigenvalue")
    w = np.maximum(w, 0.0)
    return (v * np.sqrt(w)[:, None, :]) @ np.swapaxes(v, 1, 2)


def _domain_batch(t: np.ndarray, dim: int, tol: float) -> np.ndarray:
    """Vectorized membership test matching fokker_planck.DomainMembership.

    dim 2 uses the closed form equivalent to |Im root| <= tol, higher
    dims the companion-matrix spectrum.
    """
    if dim == 1:
        return np.isfinite(t[:, 0])
    if dim == 2:
        # roots have imaginary part sqrt(t1^2 - 2 t2 + ...)/2 when complex
        disc = 2.0 * t[:, 1] - t[:, 0] ** 2
        return disc >= -4.0 * tol * tol
    b = t.shape[0]
    c = np.zeros((b, dim + 1))
    c[:, 0] = 1.0
    for k in range(1, dim + 1):
        acc = t[:, k - 1].copy()
        for i in range(1, k):
            acc += c[:, i] * t[:, k - i - 1]
        c[:, k] = -acc / k
    comp = np.zeros((b, dim, dim))
    comp[:, 0, :] = -c[:, 1:]
    idx = np.arange(dim - 1)
    comp[:, idx + 1, idx] = 1.0
    roots = np.linalg.eigvals(comp)
    return np.max(np.abs(roots.imag), axis=1) <= tol


def simulate_trace_sde(spec: EnsembleSpec, config: SdeConfig, initial) -> SampleSet:
    """Integrate the closed SDE for (t_1, ..., t_N) from a point inside the domain.

    Drift and diffusion are polynomial in the traces (diffusion rebuilt
    from the Newton extension each step); noise is the symmetric PSD
    square root of the diffusion matrix.  Proposals leaving the domain
    are bisected with fresh noise, so recorded states always lie inside.
    """
    n, beta = spec.dim, spec.beta
    if isinstance(initial, TraceVector):
        x0 = np.asarray([float(initial[k]) for k in range(1, n + 1)])
    else:
        x0 = np.asarray([float(v) for v in initial])
    if x0.shape != (n,):
        raise ValueError("initial must provide t_1..t_N")
    if not bool(_domain_batch(x0[None, :], n, config.domain_tol)[0]):
        raise ValueError("initial trace vector lies outside the real-spectrum domain")
    gens = _trajectory_generators(config.seed, config.n_trajectories, salt=3)
    state = np.tile(x0, (config.n_trajectories, 1))
    noise = _NoiseBuffer(gens, (n,))
    ext_order = max(2 * n - 2, n)

    def propose_batch(x, h, xi):
        ext = _extend_batch(x, n, ext_order)
        drift = _trace_drift_batch(x, spec)
        factor = _psd_sqrt_batch(_trace_diffusion_batch(ext, spec))
        return x + drift * h + math.sqrt(h) * (factor @ xi[..., None])[..., 0]

    def propose_row(x, h, xi):
        return propose_batch(x[None, :], h, xi[None, :])[0]

    def valid_row(p):
        return bool(_domain_batch(p[None, :], n, config.domain_tol)[0])

    def step():
        nonlocal state
        xi = noise.next_step()
        prop = propose_batch(state, config.dt, xi)
        ok = _domain_batch(prop, n, config.domain_tol)
        if not np.all(ok):
            for i in np.flatnonzero(~ok):
                half = config.dt / 2
                y = _advance_constrained(
                    state[i], half, 1, lambda: noise.direct(i, (n,)),
                    propose_row, valid_row,
                )
                prop[i] = _advance_constrained(
                    y, half, 1, lambda: noise.direct(i, (n,)),
                    propose_row, valid_row,
                )
        state = prop

    burn_steps, sps = _sample_schedule(config)
    for _ in range(burn_steps):
        step()
    rows = []
    for j in range(config.samples_per_trajectory):
        if j > 0:
            for _ in range(sps):
                step()
        rows.append(state.copy())
    columns = [f"t{k}" for k in range(1, n + 1)]
    return _assemble("trace", spec, columns, rows, config, config.n_trajectories)


def _resolve_statistic(stat, sample_set: SampleSet) -> np.ndarray:
    if isinstance(stat, str):
        return sample_set.column(stat)
    return np.asarray(stat(sample_set))


def _trajectory_means(x: np.ndarray, traj: np.ndarray) -> np.ndarray:
    ids = np.unique(traj)
    return np.array([x[traj == i].mean() for i in ids])


def compare_samplers(a: SampleSet, b: SampleSet, statistics: dict) -> dict:
    """Two-sample agreement report between coordinate systems.

    ``statistics`` maps a name to a column name or a callable on the
    SampleSet.  For each statistic: the two-sample Kolmogorov-Smirnov
    distance and z-scores for the difference of means and of variances.
    Standard errors are batched over trajectories (independent walkers),
    which is robust to autocorrelation within a trajectory.
    """
    if a.n_samples == 0 or b.n_samples == 0:
        raise ValueError("cannot compare empty sample sets")
    report = {}
    for name, stat in statistics.items():
        xs = _resolve_statistic(stat, a)
        ys = _resolve_statistic(stat, b)
        ks = sp_stats.ks_2samp(xs, ys)
        za = _trajectory_means(xs, a.trajectory)
        zb = _trajectory_means(ys, b.trajectory)
        se = math.sqrt(za.var(ddof=1) / len(za) + zb.var(ddof=1) / len(zb))
        va = _trajectory_means((xs - xs.mean()) ** 2, a.trajectory)
        vb = _trajectory_means((ys - ys.mean()) ** 2, b.trajectory)
        sev = math.sqrt(va.var(ddof=1) / len(va) + vb.var(ddof=1) / len(vb))
        report[name] = {
            "ks": float(ks.statistic),
            "ks_pvalue": float(ks.pvalue),
            "mean_a": float(xs.mean()),
            "mean_b": float(ys.mean()),
            "z_mean": float((xs.mean() - ys.mean()) / se) if se > 0 else 0.0,
            "z_var": float((xs.var() - ys.var()) / sev) if sev > 0 else 0.0,
            "n_a": int(xs.size),
            "n_b": int(ys.size),
        }
    return report
