"""Explicit higher-order derivatives of operator functions along linear paths.

The m-th derivative of ``t -> f(X(t))`` with ``X_j(t) = A_j + t V_j`` expands
into terms indexed by which coordinates are differentiated and how often: a
term ``(j_1^{i_1}, ..., j_k^{i_k})`` keeps untouched coordinates as plain
powers of ``X_j(t)`` in coordinate order and replaces each touched power
``X_{j_l}(t)^{p}`` by its ``i_l``-th s-derivative, a factorial times a sum
over weak compositions of ``p - i_l`` of products alternating ``X(t)`` powers
with ``V``.  The full derivative is the multinomial-weighted sum over all
terms.  A central finite difference is included as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, factorial

import numpy as np

from .matcore import PerturbationPath, matrix_powers
from .mpoly import MultiPoly

__all__ = [
    "FD_STEPS",
    "fd_step",
    "Composition",
    "compositions",
    "DerivTermSpec",
    "enumerate_terms",
    "power_derivative",
    "d_term",
    "full_derivative",
    "finite_difference",
]

# A weak composition: non-negative parts with a fixed sum.
Composition = tuple[int, ...]

# Central-difference steps per derivative order, balancing truncation against
# cancellation in double precision.
FD_STEPS = {1: 1e-2, 2: 1e-2, 3: 3e-2, 4: 5e-2}


def fd_step(m: int) -> float:
    return FD_STEPS.get(m, 5e-2)


def compositions(total: int, parts: int):
    """All weak compositions of ``total`` into ``parts`` parts, lexicographic.

    Yields ``comb(total + parts - 1, parts - 1)`` tuples, no repetitions.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    if parts < 1:
        raise ValueError("parts must be positive")
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class DerivTermSpec:
    """One derivative term: ``(j, i)`` pairs with 1-based coordinates ``j``
    strictly increasing and orders ``i >= 1``; the term order is ``sum i``."""

    coords: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.coords:
            raise ValueError("term needs at least one coordinate")
        norm = []
        last = 0
        for j, i in self.coords:
            j, i = int(j), int(i)
            if j <= last:
                raise ValueError("coordinates must be strictly increasing and >= 1")
            if i < 1:
                raise ValueError("orders must be >= 1")
            norm.append((j, i))
            last = j
        object.__setattr__(self, "coords", tuple(norm))

    @property
    def m(self) -> int:
        return sum(i for _, i in self.coords)

    @property
    def js(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.coords)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(i for _, i in self.coords)

    @property
    def multinomial(self) -> int:
        """m! / (i_1! ... i_k!)"""
        out = factorial(self.m)
        for i in self.orders:
            out //= factorial(i)
        return out

    def order_multi_index(self, n_vars: int) -> tuple[int, ...]:
        if self.coords[-1][0] > n_vars:
            raise ValueError(
                f"term touches coordinate {self.coords[-1][0]} but only {n_vars} variables exist"
            )
        out = [0] * n_vars
        for j, i in self.coords:
            out[j - 1] = i
        return tuple(out)

    @classmethod
    def parse(cls, text: str) -> "DerivTermSpec":
        """Parse ``"1^2,3^1"``: comma-separated ``j^i`` with increasing j."""
        pairs = []
        for chunk in text.split(","):
            piece = chunk.strip()
            if "^" not in piece:
                raise ValueError(f"bad term {piece!r}: expected j^i")
            left, right = piece.split("^", 1)
            try:
                pairs.append((int(left.strip()), int(right.strip())))
            except ValueError as exc:
                raise ValueError(f"bad term {piece!r}: expected integers j^i") from exc
        return cls(tuple(pairs))

    def __str__(self) -> str:
        return ",".join(f"{j}^{i}" for j, i in self.coords)

    def to_json(self) -> list[list[int]]:
        return [[j, i] for j, i in self.coords]


def enumerate_terms(n_vars: int, m: int, max_k: int | None = None) -> list[DerivTermSpec]:
    """All terms of order m: increasing k, then lexicographic coordinate
    subsets, then lexicographic order splits.  Fixed order keeps summation
    reproducible."""
    if m < 1:
        raise ValueError("m must be >= 1")
    kmax = min(m, n_vars)
    if max_k is not None:
        kmax = min(kmax, max_k)
    out = []
    for k in range(1, kmax + 1):
        for js in combinations(range(1, n_vars + 1), k):
            for comp in compositions(m - k, k):
                out.append(DerivTermSpec(tuple(zip(js, (c + 1 for c in comp)))))
    return out


def _sum_compositions(wpows: list[np.ndarray], v: np.ndarray, p: int, n: int) -> np.ndarray:
    """Sum over compositions p_0+...+p_n = p-n of W^{p_0} V W^{p_1} ... V W^{p_n}."""
    dim = v.shape[0]
    if n > p:
        return np.zeros((dim, dim), dtype=np.complex128)
    if n == 0:
        return wpows[p].copy()
    out = np.zeros((dim, dim), dtype=np.complex128)
    for parts in compositions(p - n, n + 1):
        prod = wpows[parts[0]]
        for part in parts[1:]:
            prod = prod @ v
            if part:
                prod = prod @ wpows[part]
        out += prod
    return out


def power_derivative(H, V, p: int, n: int, t: float) -> np.ndarray:
    """n-th s-derivative of ``(H + sV)^p`` at ``s = t``.

    Equals ``n!`` times the composition sum over products of ``(H + tV)``
    powers separated by ``n`` copies of ``V``; the zero matrix when n > p.
    """
    H = np.asarray(H, dtype=np.complex128)
    V = np.asarray(V, dtype=np.complex128)
    if H.shape != V.shape or H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H and V must be square matrices of equal size")
    if p < 0 or n < 0:
        raise ValueError("p and n must be non-negative")
    w = H + t * V
    wpows = matrix_powers(w, max(p - n, 0) if n else p)
    return factorial(n) * _sum_compositions(wpows, V, p, n)


class _PathContext:
    """Powers of X_j(t) and derivative factors shared across one evaluation."""

    def __init__(self, path: PerturbationPath, t: float, max_degrees: tuple[int, ...]):
        self.v = path.v
        self.x = path.at(t)
        self.dim = path.dim
        self.pows = [matrix_powers(x, d) for x, d in zip(self.x, max_degrees)]
        self._deriv: dict[tuple[int, int, int], np.ndarray] = {}

    def power(self, j0: int, e: int) -> np.ndarray:
        return self.pows[j0][e]

    def deriv_factor(self, j0: int, i: int, p: int) -> np.ndarray:
        key = (j0, i, p)
        got = self._deriv.get(key)
        if got is None:
            got = factorial(i) * _sum_compositions(self.pows[j0], self.v[j0], p, i)
            self._deriv[key] = got
        return got


def _d_term(f: MultiPoly, term: DerivTermSpec, ctx: _PathContext) -> np.ndarray:
    n = f.n_vars
    js = [j - 1 for j in term.js]
    orders = term.orders
    out = np.zeros((ctx.dim, ctx.dim), dtype=np.complex128)
    for k, c in sorted(f.terms.items()):
        if any(k[j0] < i for j0, i in zip(js, orders)):
            continue
        prod = None
        for j0 in range(js[0]):
            if k[j0]:
                prod = ctx.power(j0, k[j0]) if prod is None else prod @ ctx.power(j0, k[j0])
        for l, (j0, i) in enumerate(zip(js, orders)):
            fac = ctx.deriv_factor(j0, i, k[j0])
            prod = fac if prod is None else prod @ fac
            nxt = js[l + 1] if l + 1 < len(js) else n
            for jj in range(j0 + 1, nxt):
                if k[jj]:
                    prod = prod @ ctx.power(jj, k[jj])
        out += c * prod
    return out


def _check_arity(f: MultiPoly, path: PerturbationPath) -> None:
    if f.n_vars != path.n:
        raise ValueError(f"arity mismatch: f has {f.n_vars} vars, path has {path.n}")


def d_term(f: MultiPoly, path: PerturbationPath, term: DerivTermSpec, t: float) -> np.ndarray:
    """One derivative term of ``t -> f(X(t))``: coordinate-ordered products
    with the touched powers replaced by their s-derivatives.

    The formula is a valid matrix identity for any path; whether the result
    sits inside the trace-estimate hypotheses is recorded by the reports
    built on top of it, not here.
    """
    _check_arity(f, path)
    term.order_multi_index(f.n_vars)  # bounds check
    ctx = _PathContext(path, float(t), f.max_degrees)
    return _d_term(f, term, ctx)


def full_derivative(f: MultiPoly, path: PerturbationPath, m: int, t: float) -> np.ndarray:
    """m-th derivative of ``t -> f(X(t))``: multinomial-weighted sum of all
    order-m terms, in the fixed enumeration order."""
    _check_arity(f, path)
    if m < 1:
        raise ValueError("m must be >= 1")
    dim = path.dim
    if m > f.total_degree:
        return np.zeros((dim, dim), dtype=np.complex128)
    ctx = _PathContext(path, float(t), f.max_degrees)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for term in enumerate_terms(f.n_vars, m):
        out += term.multinomial * _d_term(f, term, ctx)
    return out


def finite_difference(f: MultiPoly, path: PerturbationPath, m: int, t: float, h: float) -> np.ndarray:
    """m-th order central difference of ``t -> f(X(t))`` with step ``h``."""
    _check_arity(f, path)
    if m < 1:
        raise ValueError("m must be >= 1")
    if h <= 0:
        raise ValueError("h must be positive")
    dim = path.dim
    out = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(m + 1):
        s = t + (m / 2.0 - j) * h
        out += ((-1) ** j * comb(m, j)) * f.eval_operator(path.at(s))
    return out / h**m
