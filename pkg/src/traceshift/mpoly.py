"""Finite-support multivariate polynomials with scalar and operator evaluation.

A :class:`MultiPoly` maps multi-indices (tuples of non-negative exponents, one
per variable) to complex coefficients.  Zero coefficients are never stored, so
the ``terms`` dict is a canonical form.  These polynomials stand in for the
analytic functions feeding every operator computation: evaluation on a
commuting tuple substitutes ordered monomials for the variables, and the
coefficient-sum norm dominates the sup on the closed polydisc, giving a cheap
sound upper bound next to the sampled grid sup.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import perm

import numpy as np

from .matcore import CommutingTuple, _mats_of, identity, matrix_powers, op_norm

__all__ = [
    "MultiPoly",
    "DomainKind",
    "sup_norm",
    "grid_sup",
    "VonNeumannReport",
    "von_neumann_check",
    "MAX_GRID_PER_AXIS",
    "VN_SLACK",
]

MAX_GRID_PER_AXIS = 512
VN_SLACK = 1e-8

_GRID_CHUNK_CAP = 1 << 21  # cap on grid points held in memory at once


class MultiPoly:
    """Sparse polynomial in ``n_vars`` complex variables."""

    __slots__ = ("n_vars", "_terms")

    def __init__(self, n_vars: int, terms=None):
        n_vars = int(n_vars)
        if n_vars < 1:
            raise ValueError("n_vars must be a positive integer")
        canon: dict[tuple[int, ...], complex] = {}
        for k, c in (terms or {}).items():
            kk = tuple(int(e) for e in k)
            if len(kk) != n_vars:
                raise ValueError(f"multi-index {kk} has length != n_vars={n_vars}")
            if any(e < 0 for e in kk):
                raise ValueError(f"negative exponent in multi-index {kk}")
            cc = complex(c)
            if not (np.isfinite(cc.real) and np.isfinite(cc.imag)):
                raise ValueError("coefficients must be finite")
            if cc != 0:
                canon[kk] = canon.get(kk, 0j) + cc
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(self, "_terms", {k: c for k, c in canon.items() if c != 0})

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int) -> "MultiPoly":
        return cls(n_vars, {})

    @classmethod
    def constant(cls, n_vars: int, value) -> "MultiPoly":
        return cls(n_vars, {(0,) * n_vars: value})

    @classmethod
    def monomial(cls, k, coeff=1.0) -> "MultiPoly":
        k = tuple(int(e) for e in k)
        return cls(len(k), {k: coeff})

    # -- basic structure ---------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, ...], complex]:
        return self._terms

    @property
    def max_degrees(self) -> tuple[int, ...]:
        """Per-variable maximum exponent over the support (zeros if empty)."""
        degs = [0] * self.n_vars
        for k in self._terms:
            for j, e in enumerate(k):
                if e > degs[j]:
                    degs[j] = e
        return tuple(degs)

    @property
    def total_degree(self) -> int:
        return max((sum(k) for k in self._terms), default=0)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiPoly)
            and self.n_vars == other.n_vars
            and self._terms == other._terms
        )

    def __repr__(self) -> str:
        return f"MultiPoly(n_vars={self.n_vars}, terms={len(self._terms)}, deg={self.total_degree})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        if not isinstance(other, MultiPoly) or other.n_vars != self.n_vars:
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0j) + c
        return MultiPoly(self.n_vars, out)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.n_vars, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        neg = -other if isinstance(other, MultiPoly) else NotImplemented
        if neg is NotImplemented:
            return NotImplemented
        return self + neg

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            if other.n_vars != self.n_vars:
                raise ValueError("polynomial arities differ")
            out: dict[tuple[int, ...], complex] = {}
            for k1, c1 in self._terms.items():
                for k2, c2 in other._terms.items():
                    k = tuple(a + b for a, b in zip(k1, k2))
                    out[k] = out.get(k, 0j) + c1 * c2
            return MultiPoly(self.n_vars, out)
        return MultiPoly(self.n_vars, {k: c * other for k, c in self._terms.items()})

    __rmul__ = __mul__

    # -- evaluation ----------------------------------------------------------

    def eval_scalar(self, z) -> complex:
        """Evaluate at a point, Horner-style per variable."""
        zz = [complex(w) for w in z]
        if len(zz) != self.n_vars:
            raise ValueError(f"point length {len(zz)} != n_vars {self.n_vars}")
        if not self._terms:
            return 0j
        return _horner(self._terms, zz)

    def eval_operator(self, tup) -> np.ndarray:
        """Substitute a matrix tuple: sum of coeff * X_1^{k_1}...X_n^{k_n}."""
        mats = _mats_of(tup)
        if len(mats) != self.n_vars:
            raise ValueError(f"tuple arity {len(mats)} != n_vars {self.n_vars}")
        dim = mats[0].shape[0]
        if any(m.shape[0] != dim for m in mats):
            raise ValueError("all matrices must share one dimension")
        pows = [matrix_powers(m, d) for m, d in zip(mats, self.max_degrees)]
        out = np.zeros((dim, dim), dtype=np.complex128)
        for k, c in sorted(self._terms.items()):
            prod = None
            for j, e in enumerate(k):
                if e:
                    prod = pows[j][e] if prod is None else prod @ pows[j][e]
            out += c * (identity(dim) if prod is None else prod)
        return out

    # -- calculus -------------------------------------------------------------

    def partial_derivative(self, order) -> "MultiPoly":
        """Mixed partial derivative of the given multi-index order."""
        oo = _as_order(order, self.n_vars)
        out: dict[tuple[int, ...], complex] = {}
        for k, c in self._terms.items():
            if all(e >= o for e, o in zip(k, oo)):
                scale = 1
                for e, o in zip(k, oo):
                    scale *= perm(e, o)
                out[tuple(e - o for e, o in zip(k, oo))] = c * scale
        return MultiPoly(self.n_vars, out)

    def antiderivative(self, order) -> "MultiPoly":
        """Right inverse of :meth:`partial_derivative` with zero constants."""
        oo = _as_order(order, self.n_vars)
        out: dict[tuple[int, ...], complex] = {}
        for k, c in self._terms.items():
            kk = tuple(e + o for e, o in zip(k, oo))
            scale = 1
            for e, o in zip(kk, oo):
                scale *= perm(e, o)
            out[kk] = c / scale
        return MultiPoly(self.n_vars, out)

    # -- norms and serialization ----------------------------------------------

    def coeff_upper(self, radius: float = 1.0) -> float:
        """Sum of |coeff| * radius^|k|: sup bound on the closed polydisc."""
        return float(sum(abs(c) * radius ** sum(k) for k, c in self._terms.items()))

    def to_json(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "terms": [
                {"k": list(k), "re": c.real, "im": c.imag}
                for k, c in sorted(self._terms.items())
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "MultiPoly":
        terms = {
            tuple(t["k"]): complex(t["re"], t.get("im", 0.0))
            for t in payload["terms"]
        }
        return cls(payload["n_vars"], terms)


def _as_order(order, n_vars: int) -> tuple[int, ...]:
    oo = tuple(int(o) for o in order)
    if len(oo) != n_vars:
        raise ValueError(f"order length {len(oo)} != n_vars {n_vars}")
    if any(o < 0 for o in oo):
        raise ValueError("derivative orders must be non-negative")
    return oo


def _horner(terms: dict, zs: list[complex]) -> complex:
    if not zs:
        return terms[()]
    head, rest = zs[0], zs[1:]
    groups: dict[int, dict] = {}
    for k, c in terms.items():
        groups.setdefault(k[0], {})[k[1:]] = c
    acc = 0j
    prev = None
    for e in sorted(groups, reverse=True):
        val = _horner(groups[e], rest)
        acc = val if prev is None else acc * head ** (prev - e) + val
        prev = e
    return acc * head**prev


# -- sampling domains ----------------------------------------------------------


@dataclass(frozen=True)
class DomainKind:
    """Sampling domain per axis: the circle |z| = radius, or [-1, 1]."""

    kind: str
    grid_per_axis: int
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("torus", "cube"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.grid_per_axis < 1:
            raise ValueError("grid_per_axis must be positive")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.kind == "cube" and self.radius != 1.0:
            raise ValueError("cube domain does not take a radius")

    @classmethod
    def torus(cls, grid_per_axis: int = 64, radius: float = 1.0) -> "DomainKind":
        return cls("torus", grid_per_axis, radius)

    @classmethod
    def cube(cls, grid_per_axis: int = 65) -> "DomainKind":
        return cls("cube", grid_per_axis)

    def with_grid(self, grid_per_axis: int) -> "DomainKind":
        return replace(self, grid_per_axis=grid_per_axis)

    def axis_samples(self, grid_per_axis: int | None = None) -> np.ndarray:
        g = self.grid_per_axis if grid_per_axis is None else grid_per_axis
        if self.kind == "torus":
            return self.radius * np.exp(2j * np.pi * np.arange(g) / g)
        return np.linspace(-1.0, 1.0, g)


def _coeff_tensor(f: MultiPoly) -> np.ndarray:
    degs = f.max_degrees
    out = np.zeros(tuple(d + 1 for d in degs), dtype=np.complex128)
    for k, c in f.terms.items():
        out[k] = c
    return out


def _grid_abs_max(f: MultiPoly, samples: list[np.ndarray]) -> float:
    """Max |f| over the tensor grid, contracted axis by axis and chunked."""
    if not f.terms:
        return 0.0
    degs = f.max_degrees
    t = _coeff_tensor(f)
    for axis in range(f.n_vars - 1, 0, -1):
        p = np.power.outer(samples[axis], np.arange(degs[axis] + 1))
        t = np.tensordot(t, p, axes=([axis], [1]))
    tail = int(np.prod(t.shape[1:], dtype=np.int64)) if t.ndim > 1 else 1
    g0 = samples[0].shape[0]
    p0_exp = np.arange(degs[0] + 1)
    chunk = max(1, _GRID_CHUNK_CAP // max(tail, 1))
    best = 0.0
    for s in range(0, g0, chunk):
        p0 = np.power.outer(samples[0][s : s + chunk], p0_exp)
        vals = np.tensordot(p0, t, axes=([1], [0]))
        best = max(best, float(np.abs(vals).max()))
    return best


def grid_sup(f: MultiPoly, dom: DomainKind, grid_per_axis: int | None = None) -> float:
    """Max |f| over the sample grid: a lower bound of the true sup."""
    s = dom.axis_samples(grid_per_axis)
    return _grid_abs_max(f, [s] * f.n_vars)


def sup_norm(f: MultiPoly, dom: DomainKind) -> tuple[float, float]:
    """(grid max of |f|, coefficient-sum upper bound) on the domain."""
    radius = dom.radius if dom.kind == "torus" else 1.0
    return grid_sup(f, dom), f.coeff_upper(radius)


# -- norm inequality check -----------------------------------------------------


@dataclass(frozen=True)
class VonNeumannReport:
    """Outcome of the operator-norm vs scalar-sup inequality check."""

    status: str  # "ok" or "refused"
    passed: bool | None
    op_value: float
    grid_sup: float | None
    coeff_upper: float
    grid_per_axis: int | None
    reason: str | None = None


def von_neumann_check(
    f: MultiPoly,
    tup: CommutingTuple,
    dom: DomainKind,
    slack: float = VN_SLACK,
    max_grid: int = MAX_GRID_PER_AXIS,
) -> VonNeumannReport:
    """Check ``||f(X)|| <= sup |f|`` for a certified commuting normal
    contraction tuple, refining the sampling grid before comparing against
    the (lower-bound) grid sup.

    Tuples failing certification are refused with an explanatory status:
    without normality the inequality is only guaranteed under a dilation
    hypothesis this library does not verify.
    """
    if not isinstance(tup, CommutingTuple):
        raise TypeError("von_neumann_check needs a certified CommutingTuple")
    if f.n_vars != tup.n:
        raise ValueError(f"arity mismatch: f has {f.n_vars} vars, tuple has {tup.n}")
    value = op_norm(f.eval_operator(tup))
    radius = dom.radius if dom.kind == "torus" else 1.0
    cu = f.coeff_upper(radius)
    reasons = []
    if not tup.is_commuting:
        reasons.append("tuple is not certified commuting")
    if not tup.is_normal:
        reasons.append("tuple is not certified normal")
    if not tup.is_contraction:
        reasons.append("tuple is not certified contractive")
    if reasons:
        return VonNeumannReport(
            status="refused",
            passed=None,
            op_value=value,
            grid_sup=None,
            coeff_upper=cu,
            grid_per_axis=None,
            reason="; ".join(reasons),
        )
    g = dom.grid_per_axis
    gs = grid_sup(f, dom, g)
    while value > gs * (1.0 + slack) and g < max_grid:
        g = min(2 * g, max_grid)
        gs = grid_sup(f, dom, g)
    passed = value <= cu + 1e-12 * (1.0 + cu) and value <= gs * (1.0 + slack)
    return VonNeumannReport(
        status="ok",
        passed=passed,
        op_value=value,
        grid_sup=gs,
        coeff_upper=cu,
        grid_per_axis=g,
    )
