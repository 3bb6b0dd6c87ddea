"""Taylor remainders of operator functions along linear paths, and the
integral identity equating the remainder trace with a weighted integral of
the top-order derivative trace.

Both sides are computed through different code paths — the remainder from
endpoint evaluation minus the Taylor sum at t = 0, the integral from a
Gauss-Legendre quadrature whose node count is set by degree counting so the
(polynomial) integrand is integrated exactly.  Any gap beyond roundoff is a
formula bug, not integration error.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .matcore import PerturbationPath
from .mpoly import MultiPoly
from .opderiv import full_derivative

__all__ = [
    "RemainderReport",
    "taylor_remainder",
    "remainder_trace_integral",
    "remainder_check",
    "gauss01",
]


def gauss01(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class RemainderReport:
    m: int
    lhs_trace: complex
    rhs_integral: complex
    abs_gap: float
    quadrature_nodes: int
    tol: float
    passed: bool
    in_hypothesis: bool


def taylor_remainder(f: MultiPoly, path: PerturbationPath, m: int) -> np.ndarray:
    """f(B) minus the order-(m-1) Taylor polynomial of t -> f(X(t)) at 0.

    The k = 0 term is f(A).  Vanishes identically once m exceeds the total
    degree of f.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    out = f.eval_operator(path.b) - f.eval_operator(path.a)
    for k in range(1, m):
        out -= full_derivative(f, path, k, 0.0) / factorial(k)
    return out


def remainder_trace_integral(
    f: MultiPoly, path: PerturbationPath, m: int, quad_nodes: int | None = None
) -> complex:
    """Quadrature of ``(1-t)^(m-1)/(m-1)! * trace(d^m/ds^m f(X(s))|_t)``.

    The integrand is a polynomial in t of degree below deg(f), so
    ``ceil((deg f + 1) / 2)`` Gauss nodes integrate it exactly.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    q = quad_nodes if quad_nodes is not None else max(1, (f.total_degree + 2) // 2)
    ts, ws = gauss01(q)
    pref = 1.0 / factorial(m - 1)
    total = 0j
    for t, w in zip(ts, ws):
        total += w * (1.0 - t) ** (m - 1) * pref * np.trace(full_derivative(f, path, m, t))
    return complex(total)


def remainder_check(f: MultiPoly, path: PerturbationPath, m: int, tol: float = 1e-9) -> RemainderReport:
    """Compare trace(taylor_remainder) with the trace integral.

    Passing means ``|lhs - rhs| <= tol * (1 + |lhs|)``.  A path outside the
    commuting-family hypothesis is still computed but flagged.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = max(1, (f.total_degree + 2) // 2)
    lhs = complex(np.trace(taylor_remainder(f, path, m)))
    rhs = remainder_trace_integral(f, path, m, q)
    gap = abs(lhs - rhs)
    return RemainderReport(
        m=m,
        lhs_trace=lhs,
        rhs_integral=rhs,
        abs_gap=gap,
        quadrature_nodes=q,
        tol=tol,
        passed=gap <= tol * (1.0 + abs(lhs)),
        in_hypothesis=path.path_valid,
    )
