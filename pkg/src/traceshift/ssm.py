"""Spectral-shift-measure functionals.

The measures representing higher-order remainder traces are known here only
through their linear functionals: phi applied to a mixed partial derivative
g equals the weighted t-integral of the matching derivative-term trace, with
the polynomial antiderivative of g standing in for the generating function.
Moment tables collect phi on monomials — the values any representing measure
must reproduce — together with the total-variation bound
``(1/m!) * prod ||V_{j_l}||_2^{i_l}``.  The trace formula check equates the
remainder trace with the multinomial-weighted sum of functional values, and
the single-variable reduction ties the one-coordinate functionals to the
univariate remainder trace computed entirely within a one-variable pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .matcore import PerturbationPath, build_path, certify_tuple
from .mpoly import MultiPoly
from .opderiv import DerivTermSpec, _PathContext, _d_term, enumerate_terms
from .remainder import gauss01, taylor_remainder

__all__ = [
    "phi",
    "SSMFunctional",
    "MomentTable",
    "moment_table",
    "tv_bound",
    "TraceFormulaReport",
    "trace_formula_check",
    "ReductionReport",
    "single_variable_reduction",
]


def _hs_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, "fro"))


def tv_bound(term: DerivTermSpec, path: PerturbationPath) -> float:
    """Total-variation bound of the measure behind one functional."""
    out = 1.0
    for j, i in term.coords:
        out *= _hs_norm(path.v[j - 1]) ** i
    return out / factorial(term.m)


def phi(term: DerivTermSpec, g: MultiPoly, path: PerturbationPath,
        quad_nodes: int | None = None) -> complex:
    """Functional value on g: integrate ``(1-t)^{m-1}/(m-1)!`` times the
    trace of the derivative term of the antiderivative of g.

    The integrand is polynomial in t, so the default node count (set by the
    degree of the reconstructed function) integrates exactly.
    """
    if g.n_vars != path.n:
        raise ValueError(f"arity mismatch: g has {g.n_vars} vars, path has {path.n}")
    order = term.order_multi_index(g.n_vars)
    f = g.antiderivative(order)
    m = term.m
    if quad_nodes is None:
        deg = f.total_degree
        quad_nodes = max(1, ((m - 1) + max(deg - m, 0)) // 2 + 1)
    ts, ws = gauss01(quad_nodes)
    pref = 1.0 / factorial(m - 1)
    total = 0j
    degs = f.max_degrees
    for t, w in zip(ts, ws):
        ctx = _PathContext(path, float(t), degs)
        total += w * (1.0 - t) ** (m - 1) * pref * np.trace(_d_term(f, term, ctx))
    return complex(total)


@dataclass(frozen=True)
class SSMFunctional:
    """A fixed (term, path) pair as a callable functional on polynomials."""

    term: DerivTermSpec
    path: PerturbationPath
    quad_nodes: int | None = None

    def __call__(self, g: MultiPoly) -> complex:
        return phi(self.term, g, self.path, self.quad_nodes)

    @property
    def tv_bound(self) -> float:
        return tv_bound(self.term, self.path)


@dataclass(frozen=True)
class MomentTable:
    """phi on all monomials up to a per-variable degree cap."""

    term: DerivTermSpec
    m: int
    entries: dict[tuple[int, ...], complex]
    tv_bound: float

    def max_abs_entry(self) -> float:
        return max((abs(v) for v in self.entries.values()), default=0.0)

    def to_json(self) -> dict:
        return {
            "term": self.term.to_json(),
            "m": self.m,
            "tv_bound": self.tv_bound,
            "entries": [
                {"a": list(a), "re": v.real, "im": v.imag}
                for a, v in sorted(self.entries.items())
            ],
        }


def moment_table(term: DerivTermSpec, path: PerturbationPath, max_degree) -> MomentTable:
    """Evaluate phi on every monomial with exponents componentwise below the
    cap."""
    cap = tuple(int(d) for d in max_degree)
    if len(cap) != path.n:
        raise ValueError(f"max_degree length {len(cap)} != path arity {path.n}")
    if any(d < 0 for d in cap):
        raise ValueError("degree caps must be non-negative")
    entries: dict[tuple[int, ...], complex] = {}
    for a in np.ndindex(*(d + 1 for d in cap)):
        entries[tuple(int(e) for e in a)] = phi(term, MultiPoly.monomial(a), path)
    return MomentTable(term=term, m=term.m, entries=entries, tv_bound=tv_bound(term, path))


@dataclass(frozen=True)
class TraceFormulaReport:
    m: int
    lhs: complex
    rhs: complex
    abs_gap: float
    tol: float
    passed: bool
    in_hypothesis: bool


def trace_formula_check(f: MultiPoly, path: PerturbationPath, m: int,
                        tol: float = 1e-9) -> TraceFormulaReport:
    """Remainder trace against the multinomial-weighted sum of functionals
    applied to the mixed partial derivatives of f.

    The two sides traverse different code paths (endpoint remainder vs
    per-term t-quadratures), so agreement is a genuine consistency check.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lhs = complex(np.trace(taylor_remainder(f, path, m)))
    q = max(1, (f.total_degree + 2) // 2)
    rhs = 0j
    for term in enumerate_terms(f.n_vars, m):
        g = f.partial_derivative(term.order_multi_index(f.n_vars))
        if not g.terms:
            continue
        rhs += term.multinomial * phi(term, g, path, quad_nodes=q)
    gap = abs(lhs - rhs)
    return TraceFormulaReport(
        m=m,
        lhs=lhs,
        rhs=rhs,
        abs_gap=gap,
        tol=tol,
        passed=gap <= tol * (1.0 + abs(lhs)),
        in_hypothesis=path.path_valid,
    )


@dataclass(frozen=True)
class ReductionReport:
    j: int
    m: int
    phi_value: complex
    remainder_trace: complex
    abs_gap: float
    tol: float
    passed: bool


def single_variable_reduction(g: MultiPoly, j: int, m: int, path: PerturbationPath,
                              tol: float = 1e-10) -> ReductionReport:
    """Check that the one-coordinate functional phi_{j^m} applied to a
    univariate g matches the order-m remainder trace of the pair
    ``(A_j, B_j)`` computed entirely within a one-variable pipeline."""
    if g.n_vars != 1:
        raise ValueError("g must be univariate")
    if not 1 <= j <= path.n:
        raise ValueError(f"coordinate {j} outside 1..{path.n}")
    if m < 1:
        raise ValueError("m must be >= 1")
    term = DerivTermSpec(((j, m),))
    g_lifted = MultiPoly(
        path.n,
        {
            tuple(e if jj == j - 1 else 0 for jj in range(path.n)): c
            for (e,), c in g.terms.items()
        },
    )
    val = phi(term, g_lifted, path)

    f1 = g.antiderivative((m,))
    a1 = certify_tuple([path.a.mats[j - 1]], path.a.ctol, path.a.ntol)
    b1 = certify_tuple([path.b.mats[j - 1]], path.b.ctol, path.b.ntol)
    path1 = build_path(a1, b1)
    lhs = complex(np.trace(taylor_remainder(f1, path1, m)))
    gap = abs(val - lhs)
    return ReductionReport(
        j=j,
        m=m,
        phi_value=val,
        remainder_trace=lhs,
        abs_gap=gap,
        tol=tol,
        passed=gap <= tol * (1.0 + abs(lhs)),
    )
