"""Exact symmetric-function kernel for trace coordinates.

Everything here works over exact rationals (``fractions.Fraction``) so
that identity checks can assert residuals are literally zero.  The same
code paths accept floats, in which case results are floating point; this
is used for finite-difference cross-checks and the simulation helpers.

Conventions.  For an N point configuration ``lam = (l_1, ..., l_N)`` the
power sums are ``t_n = sum(l**n)`` with ``t_0 = N``.  The monic
polynomial with those roots is ``Phi(X) = sum(c_k X**(N-k))`` with
``c_0 = 1``.  The first N power sums are free coordinates; higher ones
are polynomial functions of them through the Newton recursion, and the
partial derivatives ``d t_n / d t_m`` below are taken in that coordinate
system.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = [
    "TraceVector",
    "CharPoly",
    "GramHankel",
    "LagrangeBasis",
    "power_sums",
    "charpoly_from_traces",
    "charpoly_determinant_oracle",
    "extend_traces",
    "hankel_matrix",
    "bareiss_determinant",
    "gram_hankel",
    "jacobian_factor",
    "lagrange_basis",
    "trace_derivative",
    "discriminant_derivative",
    "derivative_sum_identity",
    "discriminant_identity",
    "triple_product_identity",
    "count_real_roots",
    "all_roots_real",
    "random_rational_nodes",
]


def _coerce(x):
    """Normalize scalars: floats stay float, everything rational becomes Fraction."""
    if isinstance(x, float):
        return x
    return Fraction(x)


@dataclass(frozen=True)
class TraceVector:
    """Power-sum coordinates t_1..t_K of an N point configuration.

    ``dim`` is N; ``t_0 = N`` is implicit and returned by ``tv[0]``.
    Entries may be Fractions (exact) or floats.  Entries with index
    above N, when present, are the unique polynomial extension of the
    first N (see ``extend_traces``).
    """

    dim: int
    values: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "values", tuple(_coerce(v) for v in self.values))

    @property
    def order(self) -> int:
        """Highest available index."""
        return len(self.values)

    def __getitem__(self, n: int):
        if n == 0:
            if self.values and isinstance(self.values[0], float):
                return float(self.dim)
            return Fraction(self.dim)
        if n < 0:
            raise IndexError("trace index must be >= 0")
        if n > len(self.values):
            raise IndexError(f"t_{n} not available (order {len(self.values)})")
        return self.values[n - 1]

    def extend(self, extra: int) -> "TraceVector":
        return extend_traces(self, extra)


@dataclass(frozen=True)
class CharPoly:
    """Monic polynomial sum(c_k X**(N-k)), stored as (c_0, ..., c_N) with c_0 = 1."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(_coerce(c) for c in self.coeffs))
        if len(self.coeffs) < 1 or self.coeffs[0] != 1:
            raise ValueError("leading coefficient must be 1")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = self.coeffs[0]
        for c in self.coeffs[1:]:
            acc = acc * x + c
        return acc

    def ascending(self) -> list:
        """Coefficients ordered by ascending power of X."""
        return list(reversed(self.coeffs))


def power_sums(nodes: Sequence, order: int) -> TraceVector:
    """Power sums t_1..t_order of the given nodes, exact for rational nodes."""
    nodes = [_coerce(x) for x in nodes]
    vals = []
    powers = list(nodes)
    for _ in range(order):
        vals.append(sum(powers))
        powers = [p * x for p, x in zip(powers, nodes)]
    return TraceVector(dim=len(nodes), values=tuple(vals))


def charpoly_from_traces(t: TraceVector) -> CharPoly:
    """Monic polynomial whose root power sums are t_1..t_N (Newton's recursion).

    c_k = -(t_k + sum_{i=1}^{k-1} c_i t_{k-i}) / k  for k = 1..N.
    """
    n = t.dim
    if t.order < n:
        raise ValueError(f"need t_1..t_{n}, got order {t.order}")
    c = [_coerce(1)]
    for k in range(1, n + 1):
        acc = t[k]
        for i in range(1, k):
            acc = acc + c[i] * t[k - i]
        c.append(-acc / k)
    return CharPoly(tuple(c))


def charpoly_determinant_oracle(t: TraceVector, k: int):
    """Coefficient c_k via the k x k Hessenberg determinant, ((-1)^k / k!) det A.

    A[i][j] = t_{i-j+1} for j <= i, = i on the superdiagonal, 0 above it
    (1-based indices).  Slower than the recursion; kept as an independent
    cross-check for small k.
    """
    if k == 0:
        return Fraction(1)
    rows = []
    for i in range(1, k + 1):
        row = []
        for j in range(1, k + 1):
            if j <= i:
                row.append(t[i - j + 1])
            elif j == i + 1:
                row.append(Fraction(i))
            else:
                row.append(Fraction(0))
        rows.append(row)
    det = bareiss_determinant(rows)
    return (-1) ** k * det / math.factorial(k)


def extend_traces(t: TraceVector, extra: int) -> TraceVector:
    """Append t_{N+1}..t_{N+extra} using t_n = -sum_{k=1}^{N} c_k t_{n-k}.

    Entries already present above index N are kept; only missing ones are
    computed.  The recursion is the defining property of the extension:
    every power sum of the underlying nodes satisfies it beyond index N.
    """
    n = t.dim
    target = max(t.order, n) + extra
    if t.order < n:
        raise ValueError(f"need t_1..t_{n} before extending")
    c = charpoly_from_traces(t).coeffs
    vals = list(t.values)
    while len(vals) < target:
        idx = len(vals) + 1
        acc = 0
        for k in range(1, n + 1):
            acc = acc + c[k] * vals[idx - k - 1]
        vals.append(-acc)
    return TraceVector(dim=n, values=tuple(vals))


def hankel_matrix(t: TraceVector) -> list:
    """N x N moment matrix H[n][m] = t_{n+m-2} (0-based: H[i][j] = t_{i+j})."""
    n = t.dim
    need = 2 * n - 2
    if t.order < need:
        t = extend_traces(t, need - t.order)
    return [[t[i + j] for j in range(n)] for i in range(n)]


def bareiss_determinant(rows: Sequence[Sequence]) -> Fraction:
    """Exact determinant of a square rational matrix (fraction-free elimination)."""
    n = len(rows)
    if n == 0:
        return Fraction(1)
    scale = Fraction(1)
    a = []
    for row in rows:
        if len(row) != n:
            raise ValueError("matrix must be square")
        frs = [Fraction(x) for x in row]
        den = math.lcm(*(f.denominator for f in frs))
        scale = scale * den
        a.append([int(f * den) for f in frs])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            pivot = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if pivot is None:
                return Fraction(0)
            a[k], a[pivot] = a[pivot], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return Fraction(sign * a[n - 1][n - 1]) / scale


@dataclass(frozen=True)
class GramHankel:
    """Moment matrix of a trace vector together with its determinant Delta.

    Delta equals the squared Vandermonde product of the underlying nodes,
    i.e. the discriminant of their monic polynomial.  ``sqrt_delta`` is a
    floating square root, defined only when Delta >= 0.
    """

    entries: tuple
    delta: Fraction

    @property
    def sqrt_delta(self):
        if self.delta < 0:
            return None
        return math.sqrt(float(self.delta))


def gram_hankel(t: TraceVector) -> GramHankel:
    """Hankel moment matrix and its exact determinant."""
    h = hankel_matrix(t)
    return GramHankel(
        entries=tuple(tuple(row) for row in h),
        delta=bareiss_determinant(h),
    )


def jacobian_factor(nodes: Sequence) -> Fraction:
    """|prod_{mu < nu} (l_mu - l_nu)|, the unsigned Vandermonde product."""
    nodes = [_coerce(x) for x in nodes]
    acc = 1.0 if any(isinstance(x, float) for x in nodes) else Fraction(1)
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            acc = acc * (nodes[i] - nodes[j])
    return abs(acc)


@dataclass(frozen=True)
class LagrangeBasis:
    """Lagrange interpolation data at distinct nodes.

    ``coeffs[a][n]`` is the coefficient of X^n in the a-th cardinal
    polynomial Phi_a (Phi_a(l_b) = delta_ab); the coefficient table is
    the inverse of the Vandermonde matrix V[n][a] = l_a**n.
    ``log_derivs[a]`` caches Phi''(l_a) / Phi'(l_a) for the full nodal
    polynomial Phi, and ``discriminant`` is the squared Vandermonde
    product.
    """

    nodes: tuple
    coeffs: tuple
    log_derivs: tuple
    discriminant: Fraction

    @property
    def dim(self) -> int:
        return len(self.nodes)


def lagrange_basis(nodes: Sequence) -> LagrangeBasis:
    """Build the cardinal-polynomial coefficient table for distinct nodes."""
    nodes = [_coerce(x) for x in nodes]
    n = len(nodes)
    for i in range(n):
        for j in range(i + 1, n):
            if nodes[i] == nodes[j]:
                raise ValueError("nodes must be pairwise distinct")
    one = 1.0 if any(isinstance(x, float) for x in nodes) else Fraction(1)

    # nodal polynomial Phi(X) = prod (X - l_b), ascending coefficients
    phi = [one]
    for x in nodes:
        new = [0 * one] * (len(phi) + 1)
        for k, c in enumerate(phi):
            new[k + 1] = new[k + 1] + c
            new[k] = new[k] - x * c
        phi = new
    coeffs = []
    log_derivs = []
    vander = one
    for a, xa in enumerate(nodes):
        dphi = one
        ratio = 0 * one
        for b, xb in enumerate(nodes):
            if b != a:
                dphi = dphi * (xa - xb)
                ratio = ratio + 1 / (xa - xb)
        # synthetic division: Phi / (X - xa), ascending output
        q = [0 * one] * n
        rem = phi[n]
        for k in range(n - 1, -1, -1):
            q[k] = rem
            rem = phi[k] + xa * rem
        coeffs.append(tuple(ck / dphi for ck in q))
        log_derivs.append(2 * ratio)
        for b in range(a + 1, n):
            vander = vander * (xa - nodes[b])
    return LagrangeBasis(
        nodes=tuple(nodes),
        coeffs=tuple(coeffs),
        log_derivs=tuple(log_derivs),
        discriminant=vander * vander,
    )


def _as_basis(nodes_or_basis) -> LagrangeBasis:
    if isinstance(nodes_or_basis, LagrangeBasis):
        return nodes_or_basis
    return lagrange_basis(nodes_or_basis)


def trace_derivative(nodes_or_basis, n: int, m: int):
    """Partial derivative d t_n / d t_m at the given node configuration.

    The first N power sums are the coordinates (1 <= m <= N); t_n for
    n > N is their polynomial extension.  Evaluates
    (n/m) * sum_a l_a**(n-1) * coeffs[a][m-1], which reduces to the
    Kronecker delta for n <= N.
    """
    basis = _as_basis(nodes_or_basis)
    nn = basis.dim
    if not 1 <= m <= nn:
        raise ValueError(f"m must be in 1..{nn}")
    if n <= 0:
        return Fraction(0)
    acc = 0
    for a, xa in enumerate(basis.nodes):
        acc = acc + xa ** (n - 1) * basis.coeffs[a][m - 1]
    return Fraction(n, m) * acc if not isinstance(acc, float) else (n / m) * acc


def discriminant_derivative(nodes_or_basis, m: int):
    """Partial derivative d Delta / d t_m of the Hankel determinant.

    Uses Delta/m * sum_a coeffs[a][m-1] * Phi''(l_a)/Phi'(l_a), valid at
    configurations with distinct nodes.
    """
    basis = _as_basis(nodes_or_basis)
    nn = basis.dim
    if not 1 <= m <= nn:
        raise ValueError(f"m must be in 1..{nn}")
    acc = 0
    for a in range(nn):
        acc = acc + basis.coeffs[a][m - 1] * basis.log_derivs[a]
    if isinstance(acc, float) or isinstance(basis.discriminant, float):
        return basis.discriminant / m * acc
    return basis.discriminant * Fraction(1, m) * acc


def _pair_sum(ps: TraceVector, n: int):
    """sum_{i+j=n, i,j >= 0} t_i t_j."""
    return sum(ps[i] * ps[n - i] for i in range(n + 1))


def _triple_sum(ps: TraceVector, n: int):
    """sum_{i+j+k=n, i,j,k >= 0} t_i t_j t_k."""
    return sum(
        ps[i] * ps[j] * ps[n - i - j]
        for i in range(n + 1)
        for j in range(n - i + 1)
    )


def derivative_sum_identity(nodes, n: int, basis: LagrangeBasis | None = None):
    """Residual of:  2 sum_{m=1}^{N} m * d t_{n+m}/d t_m
                       = sum_{i+j=n} t_i t_j + (n+1) t_n.

    Returns LHS - RHS; exactly zero (as a Fraction) for every rational
    node configuration and every n >= 0.
    """
    basis = basis if basis is not None else lagrange_basis(nodes)
    nn = basis.dim
    ps = power_sums(basis.nodes, max(n, 1))
    lhs = 0
    for m in range(1, nn + 1):
        lhs = lhs + 2 * m * trace_derivative(basis, n + m, m)
    rhs = _pair_sum(ps, n) + (n + 1) * ps[n]
    return lhs - rhs


def discriminant_identity(nodes, n: int, basis: LagrangeBasis | None = None):
    """Residual of:  (1/Delta) sum_{m=1}^{N} m * t_{n+m} * d Delta/d t_m
                       = sum_{i+j=n} t_i t_j - (n+1) t_n.

    Returns LHS - RHS; exactly zero for distinct rational nodes.
    """
    basis = basis if basis is not None else lagrange_basis(nodes)
    nn = basis.dim
    ps = power_sums(basis.nodes, n + nn)
    lhs = 0
    for m in range(1, nn + 1):
        lhs = lhs + m * ps[n + m] * discriminant_derivative(basis, m)
    lhs = lhs / basis.discriminant
    rhs = _pair_sum(ps, n) - (n + 1) * ps[n]
    return lhs - rhs


def triple_product_identity(nodes, n: int, basis: LagrangeBasis | None = None):
    """Residual of:  3 sum_{m=1}^{N} m (m-1) * d t_{n+m}/d t_m
                       = sum_{i+j+k=n} t_i t_j t_k - (n+1)(n+2)/2 * t_n.

    Second-order analogue of ``derivative_sum_identity`` (cubic source
    term, weight m(m-1) instead of m).  Returns LHS - RHS.
    """
    basis = basis if basis is not None else lagrange_basis(nodes)
    nn = basis.dim
    ps = power_sums(basis.nodes, max(n, 1))
    lhs = 0
    for m in range(1, nn + 1):
        lhs = lhs + 3 * m * (m - 1) * trace_derivative(basis, n + m, m)
    rhs = _triple_sum(ps, n) - Fraction((n + 1) * (n + 2), 2) * ps[n]
    return lhs - rhs


def _poly_divmod(num: list, den: list):
    """Quotient and remainder of Fraction polynomials (ascending coefficients)."""
    num = list(num)
    dn = len(den) - 1
    lead = den[-1]
    quot = [Fraction(0)] * max(len(num) - dn, 0)
    for k in range(len(num) - 1, dn - 1, -1):
        q = num[k] / lead
        quot[k - dn] = q
        for i in range(dn + 1):
            num[k - dn + i] -= q * den[i]
    while num and num[-1] == 0:
        num.pop()
    return quot, num


def _poly_deriv(p: list) -> list:
    return [k * p[k] for k in range(1, len(p))]


def _poly_normalize(p: list) -> list:
    """Make monic (exact)."""
    if not p:
        return p
    lead = p[-1]
    return [c / lead for c in p]


def _poly_gcd(a: list, b: list) -> list:
    a, b = list(a), list(b)
    while b:
        _, r = _poly_divmod(a, b)
        a, b = b, _poly_normalize(r)
    return _poly_normalize(a)


def count_real_roots(poly: CharPoly) -> int:
    """Number of distinct real roots, by Sturm's theorem (exact rationals only)."""
    p0 = [Fraction(c) for c in poly.ascending()]
    while p0 and p0[-1] == 0:
        p0.pop()
    if len(p0) <= 1:
        return 0
    chain = [p0, _poly_deriv(p0)]
    while len(chain[-1]) > 1:
        _, r = _poly_divmod(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    if len(chain[-1]) > 1:
        # non-squarefree input: restart on the squarefree part
        g = _poly_gcd(p0, _poly_deriv(p0))
        sf, _ = _poly_divmod(p0, g)
        return count_real_roots(CharPoly(tuple(reversed(_poly_normalize(sf)))))

    def variations(at_plus_infinity: bool) -> int:
        signs = []
        for p in chain:
            lead = p[-1]
            deg = len(p) - 1
            s = lead if at_plus_infinity else lead * (-1) ** deg
            if s != 0:
                signs.append(1 if s > 0 else -1)
        return sum(1 for x, y in zip(signs, signs[1:]) if x != y)

    return variations(False) - variations(True)


def all_roots_real(poly: CharPoly) -> bool:
    """Exact test that every root (with multiplicity) is real."""
    p0 = [Fraction(c) for c in poly.ascending()]
    g = _poly_gcd(p0, _poly_deriv(p0))
    sf, _ = _poly_divmod(p0, g)
    sf = _poly_normalize(sf)
    squarefree = CharPoly(tuple(reversed(sf)))
    return count_real_roots(squarefree) == squarefree.degree


def random_rational_nodes(
    dim: int,
    rng: random.Random,
    num_bound: int = 12,
    den_bound: int = 8,
) -> tuple:
    """Pairwise distinct random Fractions, reproducible from the given Random."""
    nodes: list = []
    while len(nodes) < dim:
        x = Fraction(rng.randint(-num_bound, num_bound), rng.randint(1, den_bound))
        if x not in nodes:
            nodes.append(x)
    return tuple(nodes)
