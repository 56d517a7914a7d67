"""Gaussian self-adjoint matrix ensembles and their Ornstein-Uhlenbeck flow.

A matrix is stored as a real coefficient array of shape (N, N, 4): entry
(i, j) is ``sum_a coeffs[i, j, a] e_a`` over the algebra units
(1, i) for beta = 2 and (1, i, j, k) for beta = 4; beta = 1 uses only the
real unit.  Self-adjointness means component 0 is symmetric and the
imaginary/quaternion components are antisymmetric with zero diagonal.
Components at or above beta are identically zero, so all three ensembles
share one storage layout and one code path.

Independent coefficients are stationary Ornstein-Uhlenbeck processes:

    E(d c) = -c ds,    E((d c)^2) = (1/beta) (1 + delta_ij) ds,

whose invariant law is centered Gaussian with variance
(1 + delta_ij) / (2 beta).  That normalization puts the equilibrium
spectral density on [-sqrt(2 N), sqrt(2 N)] for every beta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from dyson_traces.symfun import TraceVector

__all__ = [
    "EnsembleSpec",
    "SelfAdjointMatrix",
    "sample_gaussian",
    "ou_step",
    "eigenvalues",
    "traces",
]

_SQRT2 = math.sqrt(2.0)

# eigenvalue pairs of the beta = 4 complex embedding must coincide to this
KRAMERS_TOL = 1e-8


@dataclass(frozen=True)
class EnsembleSpec:
    """Which Gaussian ensemble: beta in {1, 2, 4} and matrix dimension."""

    beta: int
    dim: int

    def __post_init__(self):
        if self.beta not in (1, 2, 4):
            raise ValueError(f"beta must be 1, 2, or 4, got {self.beta}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @property
    def n_components(self) -> int:
        """Active algebra units: 1 (real), 2 (complex), or 4 (quaternion)."""
        return self.beta


@dataclass(frozen=True)
class SelfAdjointMatrix:
    """Immutable self-adjoint matrix over the beta-algebra.

    ``coeffs`` has shape (dim, dim, 4); the array is copied and locked at
    construction.  Component symmetry is validated bitwise, not to a
    tolerance: the flow preserves it exactly and any drift indicates a
    bug upstream.
    """

    spec: EnsembleSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.spec.dim
        c = np.array(self.coeffs, dtype=np.float64)
        if c.shape != (n, n, 4):
            raise ValueError(f"coeffs must have shape ({n}, {n}, 4), got {c.shape}")
        if not np.array_equal(c[:, :, 0], c[:, :, 0].T):
            raise ValueError("component 0 must be symmetric")
        for a in range(1, 4):
            if not np.array_equal(c[:, :, a], -c[:, :, a].T):
                raise ValueError(f"component {a} must be antisymmetric")
        if np.any(c[:, :, self.spec.beta:] != 0.0):
            raise ValueError(f"components >= {self.spec.beta} must vanish for beta={self.spec.beta}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, spec: EnsembleSpec) -> "SelfAdjointMatrix":
        return cls(spec, np.zeros((spec.dim, spec.dim, 4)))

    def embedding(self) -> np.ndarray:
        """Real symmetric (beta=1), complex Hermitian (beta=2), or the
        2N x 2N complex Hermitian image of the quaternion matrix (beta=4)."""
        return complex_embedding(np.moveaxis(self.coeffs, -1, 0)[: self.spec.beta], self.spec.beta)

    def to_json(self) -> str:
        payload = {
            "beta": self.spec.beta,
            "dim": self.spec.dim,
            "coefficients": [self.coeffs[:, :, a].ravel().tolist() for a in range(4)],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "SelfAdjointMatrix":
        payload = json.loads(text)
        spec = EnsembleSpec(beta=payload["beta"], dim=payload["dim"])
        n = spec.dim
        coeffs = np.stack(
            [np.asarray(payload["coefficients"][a], dtype=np.float64).reshape(n, n) for a in range(4)],
            axis=-1,
        )
        return cls(spec, coeffs)


def unit_noise(dim: int, n_components: int, rng: np.random.Generator, batch_shape: tuple = ()) -> np.ndarray:
    """Self-adjoint standard noise, component-first layout (..., n_comp, dim, dim).

    Component 0 entries have variance 1 + delta_ij, antisymmetric
    components variance 1 off the diagonal.  Built as (A +/- A^T)/sqrt(2)
    from iid standard normals, which realizes those variances exactly and
    keeps the symmetry bitwise.
    """
    a = rng.standard_normal((*batch_shape, n_components, dim, dim))
    at = np.swapaxes(a, -1, -2)
    out = np.empty_like(a)
    out[..., 0, :, :] = (a[..., 0, :, :] + at[..., 0, :, :]) / _SQRT2
    if n_components > 1:
        out[..., 1:, :, :] = (a[..., 1:, :, :] - at[..., 1:, :, :]) / _SQRT2
    return out


def _pad_components(active: np.ndarray) -> np.ndarray:
    """(n_comp, N, N) component-first -> (N, N, 4) storage with zero padding."""
    n = active.shape[-1]
    out = np.zeros((n, n, 4))
    out[:, :, : active.shape[0]] = np.moveaxis(active, 0, -1)
    return out


def sample_gaussian(spec: EnsembleSpec, rng: np.random.Generator) -> SelfAdjointMatrix:
    """One draw from the stationary ensemble: coefficient std sqrt((1+delta_ij)/(2 beta))."""
    active = unit_noise(spec.dim, spec.beta, rng) * math.sqrt(1.0 / (2.0 * spec.beta))
    return SelfAdjointMatrix(spec, _pad_components(active))


def ou_step(state: SelfAdjointMatrix, dt: float, rng: np.random.Generator) -> SelfAdjointMatrix:
    """One Euler-Maruyama step of the matrix Ornstein-Uhlenbeck flow.

    c -> c (1 - dt) + xi with Var(xi) = (1 + delta_ij) dt / beta per
    active coefficient.  Raises ValueError for dt <= 0.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    spec = state.spec
    active = np.moveaxis(state.coeffs, -1, 0)[: spec.beta]
    noise = unit_noise(spec.dim, spec.beta, rng) * math.sqrt(dt / spec.beta)
    return SelfAdjointMatrix(spec, _pad_components(active * (1.0 - dt) + noise))


def complex_embedding(active: np.ndarray, beta: int) -> np.ndarray:
    """Embed component-first coefficients (..., n_comp, N, N) as a numeric matrix.

    beta = 1 returns the real symmetric matrix, beta = 2 the Hermitian
    matrix c0 + i c1, and beta = 4 the 2N x 2N Hermitian matrix obtained
    by replacing each quaternion entry with its standard 2 x 2 complex
    block.  Works on leading batch dimensions.
    """
    if beta == 1:
        return active[..., 0, :, :].copy()
    if beta == 2:
        return active[..., 0, :, :] + 1j * active[..., 1, :, :]
    n = active.shape[-1]
    out = np.zeros((*active.shape[:-3], 2 * n, 2 * n), dtype=np.complex128)
    c0, c1, c2, c3 = (active[..., a, :, :] for a in range(4))
    out[..., 0::2, 0::2] = c0 + 1j * c1
    out[..., 0::2, 1::2] = c2 + 1j * c3
    out[..., 1::2, 0::2] = -c2 + 1j * c3
    out[..., 1::2, 1::2] = c0 - 1j * c1
    return out


def eigenvalues(state: SelfAdjointMatrix) -> np.ndarray:
    """Ascending real spectrum; the beta = 4 Kramers doublets are collapsed.

    Each quaternion eigenvalue appears twice in the complex embedding;
    the pairs must agree to KRAMERS_TOL (scaled by the spectral radius)
    or a ValueError is raised.  LinAlgError from a non-converged solver
    propagates to the caller.
    """
    w = np.linalg.eigvalsh(state.embedding())
    if state.spec.beta != 4:
        return w
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    gaps = np.abs(w[1::2] - w[0::2])
    if np.any(gaps > KRAMERS_TOL * scale):
        raise ValueError(f"Kramers pairing violated: max gap {gaps.max():.3e}")
    return 0.5 * (w[0::2] + w[1::2])


def traces(state: SelfAdjointMatrix, k_max: int) -> TraceVector:
    """Power-sum traces t_k = tr M^k for k = 1..k_max, as floats.

    Computed from powers of the complex embedding (halved for beta = 4,
    whose embedding doubles every eigenvalue).
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    e = state.embedding()
    half = 0.5 if state.spec.beta == 4 else 1.0
    vals = []
    p = e
    for _ in range(k_max):
        vals.append(float(np.trace(p).real) * half)
        p = p @ e
    return TraceVector(dim=state.spec.dim, values=tuple(vals))
