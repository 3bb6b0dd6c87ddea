"""Confluent multivariate divided differences of finite-support polynomials.

A divided difference of order ``i`` at coordinate ``j`` consumes ``i + 1``
interpolation nodes and eliminates the variable ``z_j``; several coordinates
may be processed at once, and the operations at distinct coordinates commute.
On a monomial ``z_j^d`` the order-``i`` difference equals the complete
homogeneous sum ``h_{d-i}`` of the nodes, which handles repeated (confluent)
nodes exactly without taking numerical limits.  Two independent routes are
provided for cross-checking: a tie-aware recursion with exact-derivative base
cases, and a nested Gauss-Legendre quadrature of the mixed partial derivative
over a product of simplices (mapped to the unit cube, with node counts chosen
from the polynomial degree so the quadrature is exact).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .mpoly import DomainKind, MultiPoly

__all__ = [
    "complete_homogeneous",
    "DividedDiffSpec",
    "divdiff_univariate",
    "divdiff_recursive",
    "divdiff_monomial",
    "divdiff_apply",
    "divdiff_apply_recursive",
    "divdiff_integral",
    "divdiff_bound",
]


def complete_homogeneous(degree: int, nodes) -> complex:
    """Complete homogeneous sum ``h_degree`` of the nodes.

    Computed by the stable one-node-at-a-time recurrence
    ``h_e(..., x) = h_e(...) + x * h_{e-1}(..., x)`` rather than enumerating
    weak compositions.  ``h_d`` of an empty node list is ``1`` for ``d = 0``
    and ``0`` otherwise; negative degree gives ``0``.
    """
    if degree < 0:
        return 0j
    h = np.zeros(degree + 1, dtype=np.complex128)
    h[0] = 1.0
    for x in nodes:
        xx = complex(x)
        for e in range(1, degree + 1):
            h[e] += xx * h[e - 1]
    return complex(h[degree])


@dataclass(frozen=True)
class DividedDiffSpec:
    """Which coordinates to difference and at which nodes.

    ``coords`` is a tuple of ``(j, nodes)`` pairs with 1-based coordinate
    indices ``j`` strictly increasing; a pair with ``i + 1`` nodes applies an
    order-``i`` difference (``i >= 1``).  Node lists may repeat entries.
    """

    coords: tuple[tuple[int, tuple[complex, ...]], ...]

    def __post_init__(self):
        if not self.coords:
            raise ValueError("spec needs at least one coordinate")
        norm = []
        last = 0
        for j, nodes in self.coords:
            j = int(j)
            if j <= last:
                raise ValueError("coordinates must be strictly increasing and >= 1")
            nn = tuple(complex(x) for x in nodes)
            if len(nn) < 2:
                raise ValueError(f"coordinate {j}: an order >= 1 difference needs >= 2 nodes")
            norm.append((j, nn))
            last = j
        object.__setattr__(self, "coords", tuple(norm))

    @classmethod
    def single(cls, j: int, nodes) -> "DividedDiffSpec":
        return cls(((j, tuple(nodes)),))

    @property
    def js(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.coords)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(len(nodes) - 1 for _, nodes in self.coords)

    @property
    def total_order(self) -> int:
        return sum(self.orders)

    def order_multi_index(self, n_vars: int) -> tuple[int, ...]:
        self.check_within(n_vars)
        out = [0] * n_vars
        for (j, nodes) in self.coords:
            out[j - 1] = len(nodes) - 1
        return tuple(out)

    def check_within(self, n_vars: int) -> None:
        if self.coords[-1][0] > n_vars:
            raise ValueError(
                f"spec touches coordinate {self.coords[-1][0]} but only {n_vars} variables exist"
            )


def _coeffs1d(f) -> np.ndarray:
    if isinstance(f, MultiPoly):
        if f.n_vars != 1:
            raise ValueError("univariate divided difference needs a 1-variable polynomial")
        deg = f.max_degrees[0]
        c = np.zeros(deg + 1, dtype=np.complex128)
        for k, v in f.terms.items():
            c[k[0]] = v
        return c
    c = np.asarray(list(f), dtype=np.complex128)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficients must be a non-empty 1-d sequence (ascending powers)")
    return c


def divdiff_univariate(f, nodes) -> complex:
    """Divided difference of a univariate polynomial at the given nodes.

    ``f`` is a :class:`MultiPoly` in one variable or an ascending coefficient
    sequence.  Repeated nodes are confluent and handled exactly through the
    complete homogeneous sums of the monomials.
    """
    c = _coeffs1d(f)
    nn = [complex(x) for x in nodes]
    if not nn:
        raise ValueError("need at least one node")
    k = len(nn) - 1
    return complex(sum(c[d] * complete_homogeneous(d - k, nn) for d in range(len(c)) if c[d]))


def divdiff_recursive(f, nodes) -> complex:
    """Divided difference by the two-point recursion, with exact-derivative
    base cases for groups of equal nodes.  Independent of the complete-
    homogeneous route; kept for cross-checking.
    """
    c = _coeffs1d(f)
    nn = sorted((complex(x) for x in nodes), key=lambda w: (w.real, w.imag))
    if not nn:
        raise ValueError("need at least one node")
    return _rec_scalar(c, nn)


def _polyval(c: np.ndarray, x: complex) -> complex:
    acc = 0j
    for v in c[::-1]:
        acc = acc * x + v
    return complex(acc)


def _polyder(c: np.ndarray, r: int) -> np.ndarray:
    for _ in range(r):
        if c.size <= 1:
            return np.zeros(1, dtype=np.complex128)
        c = c[1:] * np.arange(1, c.size, dtype=np.float64)
    return c


def _rec_scalar(c: np.ndarray, nodes: list[complex]) -> complex:
    if len(nodes) == 1:
        return _polyval(c, nodes[0])
    if nodes[0] == nodes[-1]:
        r = len(nodes) - 1
        return _polyval(_polyder(c, r), nodes[0]) / factorial(r)
    left = _rec_scalar(c, nodes[:-1])
    right = _rec_scalar(c, nodes[1:])
    return (right - left) / (nodes[-1] - nodes[0])


def _term_image(k: tuple[int, ...], spec: DividedDiffSpec) -> tuple[tuple[int, ...], complex]:
    """(remaining multi-index, scalar factor) for one monomial; factor 0 when
    any touched exponent is below the difference order."""
    coeff = 1 + 0j
    out = list(k)
    for j, nodes in spec.coords:
        i = len(nodes) - 1
        d = k[j - 1] - i
        if d < 0:
            return k, 0j
        coeff *= complete_homogeneous(d, nodes)
        out[j - 1] = 0
    return tuple(out), coeff


def divdiff_monomial(k, spec: DividedDiffSpec) -> MultiPoly:
    """Divided difference of the monomial ``z^k``: a single monomial in the
    untouched variables scaled by the product of complete homogeneous sums."""
    kk = tuple(int(e) for e in k)
    spec.check_within(len(kk))
    out_k, coeff = _term_image(kk, spec)
    if coeff == 0:
        return MultiPoly.zero(len(kk))
    return MultiPoly(len(kk), {out_k: coeff})


def divdiff_apply(f: MultiPoly, spec: DividedDiffSpec) -> MultiPoly:
    """Linear extension of :func:`divdiff_monomial` over the support of f."""
    spec.check_within(f.n_vars)
    out: dict[tuple[int, ...], complex] = {}
    for k, c in f.terms.items():
        out_k, coeff = _term_image(k, spec)
        if coeff != 0:
            out[out_k] = out.get(out_k, 0j) + c * coeff
    return MultiPoly(f.n_vars, out)


def _substitute(f: MultiPoly, j: int, lam: complex) -> MultiPoly:
    jz = j - 1
    out: dict[tuple[int, ...], complex] = {}
    for k, c in f.terms.items():
        kk = k[:jz] + (0,) + k[jz + 1 :]
        out[kk] = out.get(kk, 0j) + c * lam ** k[jz]
    return MultiPoly(f.n_vars, out)


def _recursive_in_coordinate(f: MultiPoly, j: int, nodes: list[complex]) -> MultiPoly:
    if len(nodes) == 1:
        return _substitute(f, j, nodes[0])
    if nodes[0] == nodes[-1]:
        r = len(nodes) - 1
        order = tuple(r if jj == j - 1 else 0 for jj in range(f.n_vars))
        return _substitute(f.partial_derivative(order), j, nodes[0]) * (1.0 / factorial(r))
    left = _recursive_in_coordinate(f, j, nodes[:-1])
    right = _recursive_in_coordinate(f, j, nodes[1:])
    return (right - left) * (1.0 / (nodes[-1] - nodes[0]))


def divdiff_apply_recursive(f: MultiPoly, spec: DividedDiffSpec) -> MultiPoly:
    """Same operation as :func:`divdiff_apply` through the recursion route."""
    spec.check_within(f.n_vars)
    out = f
    for j, nodes in spec.coords:
        nn = sorted(nodes, key=lambda w: (w.real, w.imag))
        out = _recursive_in_coordinate(out, j, nn)
    return out


def _gauss01(q: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def divdiff_integral(
    f: MultiPoly,
    spec: DividedDiffSpec,
    z,
    nodes_per_axis: int | None = None,
) -> complex:
    """Divided difference evaluated at the point ``z`` through the simplex
    integral of the mixed partial derivative.

    For each coordinate group the order-``i`` simplex ``0 <= t_i <= ... <=
    t_1 <= 1`` is mapped to the unit cube by ``t_a = u_1 ... u_a``; the
    integrand substitutes the affine node interpolation for the touched
    coordinate.  The integrand is a polynomial, so Gauss-Legendre with
    ``ceil((maxdeg + 1) / 2)`` points per axis integrates it exactly.
    Entries of ``z`` at touched coordinates are ignored.
    """
    spec.check_within(f.n_vars)
    zz = [complex(w) for w in z]
    if len(zz) != f.n_vars:
        raise ValueError(f"point length {len(zz)} != n_vars {f.n_vars}")
    g = f.partial_derivative(spec.order_multi_index(f.n_vars))
    if not g.terms:
        return 0j
    if nodes_per_axis is None:
        maxdeg = max(f.max_degrees[j - 1] for j in spec.js)
        nodes_per_axis = (maxdeg + 2) // 2
    nodes_per_axis = max(1, int(nodes_per_axis))
    u, uw = _gauss01(nodes_per_axis)

    m = spec.total_order
    total = 0j
    for idx in np.ndindex(*([nodes_per_axis] * m)):
        weight = 1.0
        point = list(zz)
        pos = 0
        for j, nodes in spec.coords:
            i = len(nodes) - 1
            us = [u[idx[pos + a]] for a in range(i)]
            for a in range(i):
                weight *= uw[idx[pos + a]]
            # Jacobian of the simplex-to-cube substitution
            for a in range(i - 1):
                weight *= us[a] ** (i - 1 - a)
            t = np.cumprod(us)
            arg = nodes[i]
            for l in range(1, i + 1):
                arg = arg + (nodes[l - 1] - nodes[l]) * t[i - l]
            point[j - 1] = arg
            pos += i
        total += weight * g.eval_scalar(point)
    return complex(total)


def divdiff_bound(f: MultiPoly, spec: DividedDiffSpec, dom: DomainKind) -> float:
    """Sound bound ``(1 / prod i_l!) * coeff_upper`` of the mixed partial
    derivative; every divided-difference value with nodes and point in the
    domain is dominated by it."""
    spec.check_within(f.n_vars)
    g = f.partial_derivative(spec.order_multi_index(f.n_vars))
    denom = 1
    for i in spec.orders:
        denom *= factorial(i)
    radius = dom.radius if dom.kind == "torus" else 1.0
    return g.coeff_upper(radius) / denom
