"""Drift, diffusion, and stationary laws of the flow in each coordinate system.

Trace coordinates t_n = tr M^n evolve with drift

    R_n = -n t_n + (n/2) sum_{x=0}^{n-2} t_x t_{n-2-x}
          + ((2-beta)/beta) (n/2) (n-1) t_{n-2}

and diffusion matrix R_nm = (2 n m / beta) t_{n+m-2}, both polynomial in
the traces, with t_0 = N and higher traces given by the Newton extension.
The stationary density factorizes as
Q ~ Delta^((beta-1)/2) exp(-beta t_2 / 2) on the domain T of trace
vectors realized by real spectra, where Delta is the Hankel determinant.
``stationarity_residual`` verifies, exactly over rationals, that Q
solves the stationary Fokker-Planck system; the verification reduces to
the two derivative identities in ``symfun``.

The eigenvalue-coordinate drift implemented here is the mutually
repelling one, F_mu = sum_{nu != mu} 1/(l_mu - l_nu) - l_mu, which is
what the second-order perturbation of the matrix flow produces and the
only sign for which the spectral density below is stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import special

from dyson_traces.ensembles import EnsembleSpec
from dyson_traces.symfun import (
    CharPoly,
    LagrangeBasis,
    TraceVector,
    all_roots_real,
    charpoly_from_traces,
    discriminant_derivative,
    extend_traces,
    hankel_matrix,
    lagrange_basis,
    power_sums,
    trace_derivative,
)

__all__ = [
    "drift_traces",
    "diffusion_traces",
    "DriftDiffusion",
    "drift_diffusion",
    "drift_eigenvalues",
    "eigenvalue_diffusion",
    "DomainMembership",
    "domain_membership",
    "StationaryTraceDensity",
    "stationary_trace_density",
    "StationarySpectralDensity",
    "stationary_spectral_density",
    "stationarity_residual",
    "Marginal",
    "trace_sum_marginal",
    "trace_square_marginal",
    "stationary_trace_means",
    "stationary_tau_means",
    "N2_CONSTANTS",
]


def _beta_frac(t: TraceVector | Sequence, beta: int):
    """beta as a Fraction on exact inputs, float otherwise, to keep exact paths exact."""
    vals = t.values if isinstance(t, TraceVector) else tuple(t)
    if any(isinstance(v, float) for v in vals):
        return float(beta)
    return Fraction(beta)


def drift_traces(t: TraceVector, spec: EnsembleSpec) -> tuple:
    """Drift vector (R_1, ..., R_N) of the trace coordinates."""
    n_dim = spec.dim
    if t.dim != n_dim:
        raise ValueError(f"trace vector has dim {t.dim}, spec has {n_dim}")
    b = _beta_frac(t, spec.beta)
    out = []
    for n in range(1, n_dim + 1):
        r = -n * t[n]
        if n >= 2:
            conv = sum(t[x] * t[n - 2 - x] for x in range(n - 1))
            r = r + conv * n / 2
            r = r + ((2 - b) / b) * n * (n - 1) * t[n - 2] / 2
        out.append(r)
    return tuple(out)


def diffusion_traces(t: TraceVector, spec: EnsembleSpec) -> tuple:
    """Diffusion matrix R_nm = (2 n m / beta) t_{n+m-2}, extended beyond t_N as needed."""
    n_dim = spec.dim
    if t.dim != n_dim:
        raise ValueError(f"trace vector has dim {t.dim}, spec has {n_dim}")
    need = 2 * n_dim - 2
    if t.order < need:
        t = extend_traces(t, need - t.order)
    b = _beta_frac(t, spec.beta)
    return tuple(
        tuple(2 * n * m * t[n + m - 2] / b for m in range(1, n_dim + 1))
        for n in range(1, n_dim + 1)
    )


@dataclass(frozen=True)
class DriftDiffusion:
    """Drift vector and symmetric diffusion matrix at one trace point."""

    drift: tuple
    diffusion: tuple


def drift_diffusion(t: TraceVector, spec: EnsembleSpec) -> DriftDiffusion:
    return DriftDiffusion(drift=drift_traces(t, spec), diffusion=diffusion_traces(t, spec))


def drift_eigenvalues(lam: Sequence, spec: EnsembleSpec) -> tuple:
    """Repulsive eigenvalue drift F_mu = sum_{nu != mu} 1/(l_mu - l_nu) - l_mu.

    Requires strictly increasing input; the pairwise terms blow up at
    coincidences, which the flow never reaches for beta >= 1.
    """
    lam = tuple(lam)
    for a, b in zip(lam, lam[1:]):
        if not a < b:
            raise ValueError("eigenvalues must be strictly increasing")
    out = []
    for mu, x in enumerate(lam):
        f = -x
        for nu, y in enumerate(lam):
            if nu != mu:
                f = f + 1 / (x - y)
        out.append(f)
    return tuple(out)


def eigenvalue_diffusion(spec: EnsembleSpec) -> Fraction:
    """Constant diffusion coefficient of each eigenvalue, E(d l^2) = (2/beta) ds."""
    return Fraction(2, spec.beta)


@dataclass(frozen=True)
class DomainMembership:
    """Test whether a trace vector is realized by a real N point spectrum.

    Exact inputs use Sturm's theorem on the Newton polynomial (closed
    domain: repeated roots count as inside).  Float inputs use the
    companion-matrix spectrum and accept imaginary parts up to ``tol``.
    """

    dim: int
    tol: float = 1e-8

    def contains(self, t: TraceVector | Sequence) -> bool:
        if not isinstance(t, TraceVector):
            t = TraceVector(dim=self.dim, values=tuple(t))
        if t.dim != self.dim:
            raise ValueError(f"expected dim {self.dim}, got {t.dim}")
        poly = charpoly_from_traces(t)
        if any(isinstance(v, float) for v in t.values):
            roots = np.roots([float(c) for c in poly.coeffs])
            return bool(np.all(np.abs(roots.imag) <= self.tol))
        return all_roots_real(poly)

    __call__ = contains


def domain_membership(t: TraceVector | Sequence, tol: float = 1e-8) -> bool:
    dim = t.dim if isinstance(t, TraceVector) else len(tuple(t))
    return DomainMembership(dim=dim, tol=tol).contains(t)


# N=2 normalization data: C is the constant making the unordered spectral
# density C |l2 - l1|^beta exp(-beta (l1^2 + l2^2)/2) integrate to one over
# the plane; r and s are the marginal prefactors with
# q(t_1) = C r exp(-beta t_1^2 / 4) and q(t_2) = C s t_2^(beta/2) exp(-beta t_2 / 2).
N2_CONSTANTS = {
    1: {"C": 1.0 / (4.0 * math.sqrt(math.pi)), "r": 2.0, "s": 2.0 ** 1.5},
    2: {"C": 1.0 / math.pi, "r": math.sqrt(math.pi / 2.0), "s": math.pi},
    4: {"C": 8.0 / (3.0 * math.pi), "r": 3.0 * math.sqrt(math.pi) / 8.0, "s": 1.5 * math.pi},
}


@dataclass(frozen=True)
class StationaryTraceDensity:
    """Unnormalized stationary density over trace coordinates.

    q(t) = Delta^((beta-1)/2) exp(-beta t_2 / 2) inside the domain, 0
    outside.  ``normalization`` is the constant making q integrate to
    one; it is known in closed form only for dim = 2.
    """

    spec: EnsembleSpec
    domain: DomainMembership
    normalization: float | None

    def __call__(self, t: TraceVector | Sequence) -> float:
        if not isinstance(t, TraceVector):
            t = TraceVector(dim=self.spec.dim, values=tuple(float(v) for v in t))
        if not self.domain.contains(t):
            return 0.0
        h = np.array(hankel_matrix(t), dtype=np.float64)
        delta = max(float(np.linalg.det(h)), 0.0)
        beta = self.spec.beta
        weight = 1.0 if beta == 1 else delta ** ((beta - 1) / 2.0)
        return weight * math.exp(-beta * float(t[2]) / 2.0)


def stationary_trace_density(spec: EnsembleSpec, tol: float = 1e-8) -> StationaryTraceDensity:
    norm = N2_CONSTANTS[spec.beta]["C"] if spec.dim == 2 else None
    return StationaryTraceDensity(spec=spec, domain=DomainMembership(spec.dim, tol), normalization=norm)


@dataclass(frozen=True)
class StationarySpectralDensity:
    """Unnormalized eigenvalue density prod |l_mu - l_nu|^beta exp(-beta/2 sum l^2).

    Defined over unordered real N tuples; ``normalization`` (dim = 2
    only) normalizes it over the whole plane, not the ordered sector.
    """

    spec: EnsembleSpec
    normalization: float | None

    def __call__(self, lam: Sequence) -> float:
        lam = [float(x) for x in lam]
        beta = self.spec.beta
        acc = 1.0
        for i in range(len(lam)):
            for j in range(i + 1, len(lam)):
                acc *= abs(lam[i] - lam[j]) ** beta
        return acc * math.exp(-0.5 * beta * sum(x * x for x in lam))


def stationary_spectral_density(spec: EnsembleSpec) -> StationarySpectralDensity:
    norm = N2_CONSTANTS[spec.beta]["C"] if spec.dim == 2 else None
    return StationarySpectralDensity(spec=spec, normalization=norm)


def stationarity_residual(
    point,
    spec: EnsembleSpec,
    n: int,
    relative: bool = False,
    basis: LagrangeBasis | None = None,
):
    """Residual of the n-th stationary Fokker-Planck equation at a spectrum.

    Evaluates R_n - (n/beta) sum_m m [ d t_{n+m-2}/d t_m
    + t_{n+m-2} (beta-1)/(2 Delta) dDelta/dt_m - (beta/2) t_{n+m-2} dt_2/dt_m ],
    the stationary equation divided by the density Q (strictly positive in
    the interior).  ``point`` is the node tuple (exact rationals give an
    exactly zero residual) or a float TraceVector, in which case nodes
    are recovered from the companion matrix.  With ``relative=True`` the
    residual is divided by the largest contributing term magnitude.
    """
    if isinstance(point, TraceVector):
        poly = charpoly_from_traces(point)
        roots = np.roots([float(c) for c in poly.coeffs])
        if np.max(np.abs(roots.imag)) > 1e-8:
            raise ValueError("trace point is outside the real-spectrum domain")
        nodes = tuple(sorted(roots.real))
    else:
        nodes = tuple(point)
    if basis is None:
        basis = lagrange_basis(nodes)
    n_dim = basis.dim
    if n_dim != spec.dim:
        raise ValueError(f"point has dim {n_dim}, spec has {spec.dim}")
    if not 1 <= n <= n_dim:
        raise ValueError(f"equation index n must be in 1..{n_dim}")
    exact = not any(isinstance(x, float) for x in basis.nodes)
    b = Fraction(spec.beta) if exact else float(spec.beta)
    t = power_sums(basis.nodes, max(n, n + n_dim - 2, 2))
    delta = basis.discriminant
    if delta == 0:
        raise ValueError("point is on the domain boundary (Delta = 0)")

    terms = list(drift_traces_at(t, spec, n, b))
    for m in range(1, n_dim + 1):
        common = Fraction(n, 1) / b * m if exact else n / b * m
        terms.append(-common * trace_derivative(basis, n + m - 2, m))
        terms.append(-common * t[n + m - 2] * (b - 1) / (2 * delta) * discriminant_derivative(basis, m))
        # d/dt_m of the Gaussian factor: -(beta/2) dt_2/dt_m, which is the
        # Kronecker delta for dim >= 2 but 2 t_1 at dim 1 where t_2 = t_1^2
        terms.append(common * (b / 2) * t[n + m - 2] * trace_derivative(basis, 2, m))
    residual = sum(terms)
    if relative:
        scale = max(max(abs(float(x)) for x in terms), 1.0)
        return float(residual) / scale
    return residual


def drift_traces_at(t: TraceVector, spec: EnsembleSpec, n: int, b) -> tuple:
    """Individual terms of the drift component R_n (kept separate for scaling)."""
    terms = [-n * t[n]]
    if n >= 2:
        terms.append(sum(t[x] * t[n - 2 - x] for x in range(n - 1)) * n / 2)
        terms.append(((2 - b) / b) * n * (n - 1) * t[n - 2] / 2)
    return tuple(terms)


@dataclass(frozen=True)
class Marginal:
    """A one-dimensional stationary marginal with closed-form pdf and cdf."""

    name: str
    beta: int
    pdf: Callable[[float], float]
    cdf: Callable[[float], float]
    mean: float
    constants: dict


def trace_sum_marginal(beta: int) -> Marginal:
    """Stationary law of t_1 at dim 2: centered Gaussian with variance 2/beta.

    The density equals C r exp(-beta t_1^2 / 4) with the tabulated
    constants; it integrates to one.
    """
    if beta not in N2_CONSTANTS:
        raise ValueError(f"beta must be 1, 2, or 4, got {beta}")
    c = N2_CONSTANTS[beta]
    sigma2 = 2.0 / beta

    def pdf(x: float) -> float:
        return math.exp(-beta * x * x / 4.0) / math.sqrt(2.0 * math.pi * sigma2)

    def cdf(x: float) -> float:
        return 0.5 * (1.0 + special.erf(x / math.sqrt(2.0 * sigma2)))

    return Marginal(name="t1", beta=beta, pdf=pdf, cdf=cdf, mean=0.0,
                    constants={"C": c["C"], "r": c["r"]})


def trace_square_marginal(beta: int) -> Marginal:
    """Stationary law of t_2 at dim 2: Gamma with shape beta/2 + 1 and rate beta/2.

    The density equals C s t_2^(beta/2) exp(-beta t_2 / 2); its mean is
    1 + 2/beta, i.e. 3, 2, 3/2 for beta = 1, 2, 4.
    """
    if beta not in N2_CONSTANTS:
        raise ValueError(f"beta must be 1, 2, or 4, got {beta}")
    c = N2_CONSTANTS[beta]
    shape = beta / 2.0 + 1.0
    rate = beta / 2.0
    log_norm = shape * math.log(rate) - special.gammaln(shape)

    def pdf(x: float) -> float:
        if x <= 0.0:
            return 0.0
        return math.exp(log_norm + (shape - 1.0) * math.log(x) - rate * x)

    def cdf(x: float) -> float:
        if x <= 0.0:
            return 0.0
        return float(special.gammainc(shape, rate * x))

    return Marginal(name="t2", beta=beta, pdf=pdf, cdf=cdf, mean=1.0 + 2.0 / beta,
                    constants={"C": c["C"], "s": c["s"]})


def stationary_trace_means(spec: EnsembleSpec, order: int) -> TraceVector:
    """Fixed point of the trace drift: <t_n> with the product factorization.

    <t_n> = 1/2 sum_x <t_x><t_{n-2-x}> + (2-beta)/(2 beta) (n-1) <t_{n-2}>,
    seeded by <t_0> = N, <t_1> = 0.  Replacing <t_x t_y> by <t_x><t_y>
    is a mean-field step: exact for n <= 2 and in the large-N limit
    (for beta = 2 it reproduces the Catalan moments at every N), a
    controlled approximation otherwise.
    """
    means = [Fraction(spec.dim), Fraction(0)]
    corr = Fraction(2 - spec.beta, 2 * spec.beta)
    for n in range(2, order + 1):
        val = sum(means[x] * means[n - 2 - x] for x in range(n - 1)) / 2
        val += corr * (n - 1) * means[n - 2]
        means.append(val)
    return TraceVector(dim=spec.dim, values=tuple(means[1:]))


def stationary_tau_means(beta: int, dim: int | None, order: int) -> tuple:
    """Normalized moments <tau_n>, tau_n = N^(-n/2-1) t_n, same recursion.

    <tau_n> = 1/2 sum_x <tau_x><tau_{n-2-x}> + (2-beta)/(2 beta N) (n-1) <tau_{n-2}>
    with tau_0 = 1, tau_1 = 0.  For beta = 2 this yields the Catalan
    moments <tau_2k> = C_k / 2^k exactly.  ``dim=None`` takes the
    infinite-size limit, where the correction term drops and the values
    are the Catalan moments for every beta.  Returns (tau_0, ..., tau_order).
    """
    if beta not in (1, 2, 4):
        raise ValueError(f"beta must be 1, 2, or 4, got {beta}")
    means = [Fraction(1), Fraction(0)]
    corr = Fraction(0) if dim is None else Fraction(2 - beta, 2 * beta * dim)
    for n in range(2, order + 1):
        val = sum(means[x] * means[n - 2 - x] for x in range(n - 1)) / 2
        val += corr * (n - 1) * means[n - 2]
        means.append(val)
    return tuple(means[: order + 1])
