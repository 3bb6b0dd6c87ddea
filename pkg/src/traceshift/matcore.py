"""Dense complex matrix algebra: traces, Schatten norms, commuting-tuple
certification, and linear perturbation paths.

Everything operates on square ``complex128`` numpy arrays.  All functions are
pure and the container types below are immutable value objects (their arrays
are stored read-only), so values can be shared freely across threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_CTOL",
    "DEFAULT_NTOL",
    "PATH_T_GRID",
    "SOFT_MAX_DIM",
    "as_cmatrix",
    "identity",
    "trace",
    "schatten_norm",
    "op_norm",
    "matrix_power",
    "matrix_powers",
    "CommutingTuple",
    "certify_tuple",
    "PerturbationPath",
    "build_path",
    "ordered_monomial",
]

DEFAULT_CTOL = 1e-10  # commutation / normality tolerance
DEFAULT_NTOL = 1e-10  # contraction certification tolerance
PATH_T_GRID = 33      # t samples for contraction checks along a path
SOFT_MAX_DIM = 64     # desk scale; larger inputs only draw a warning


def as_cmatrix(a) -> np.ndarray:
    """Coerce ``a`` to a square complex128 matrix, rejecting NaN/Inf."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    return m


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def trace(m) -> complex:
    """Sum of diagonal entries (the canonical trace)."""
    return complex(np.trace(as_cmatrix(m)))


def schatten_norm(m, p: float) -> float:
    """Schatten p-norm ``(sum_i sigma_i**p) ** (1/p)`` over singular values."""
    if p < 1:
        raise ValueError(f"Schatten norm requires p >= 1, got {p}")
    sv = np.linalg.svd(as_cmatrix(m), compute_uv=False)
    if p == 1:
        return float(sv.sum())
    if p == 2:
        return float(np.sqrt((sv * sv).sum()))
    return float((sv**p).sum() ** (1.0 / p))


def op_norm(m) -> float:
    """Largest singular value."""
    return float(np.linalg.svd(as_cmatrix(m), compute_uv=False)[0])


def norm_report(m) -> dict[str, float]:
    """Operator, trace, and Hilbert-Schmidt norms as one diagnostic record."""
    sv = np.linalg.svd(as_cmatrix(m), compute_uv=False)
    return {
        "op": float(sv[0]) if sv.size else 0.0,
        "trace": float(sv.sum()),
        "hs": float(np.sqrt((sv * sv).sum())),
    }


def _op_norm_raw(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False)[0])


def matrix_power(m: np.ndarray, e: int) -> np.ndarray:
    """Non-negative matrix power by binary exponentiation."""
    if e < 0:
        raise ValueError("exponent must be non-negative")
    out = identity(m.shape[0])
    base = m
    while e:
        if e & 1:
            out = out @ base
        e >>= 1
        if e:
            base = base @ base
    return out


def matrix_powers(m: np.ndarray, max_exp: int) -> list[np.ndarray]:
    """All powers ``[I, m, m@m, ...]`` up to ``max_exp``, left-accumulated."""
    pows = [identity(m.shape[0])]
    for _ in range(max_exp):
        pows.append(pows[-1] @ m)
    return pows


def _readonly(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class CommutingTuple:
    """A tuple of equal-size matrices with certification metadata.

    ``comm_residual`` is the largest operator norm among pairwise commutators;
    ``is_commuting`` compares it against ``ctol * max(1, max_j ||X_j||^2)``.
    ``is_contraction`` and ``is_normal`` certify ``||X_j|| <= 1 + ntol`` and
    ``||X_j X_j* - X_j* X_j|| <= ctol`` for every member.
    """

    mats: tuple[np.ndarray, ...]
    comm_residual: float
    is_commuting: bool
    is_contraction: bool
    is_normal: bool
    ctol: float
    ntol: float

    @property
    def n(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return self.mats[0].shape[0]


def certify_tuple(mats, ctol: float = DEFAULT_CTOL, ntol: float = DEFAULT_NTOL) -> CommutingTuple:
    """Measure commutation, contraction, and normality of a matrix tuple.

    A non-commuting input is not an error: the residual is reported as
    measured and ``is_commuting`` is set accordingly.  Mismatched dimensions
    raise ``ValueError``.
    """
    ms = [as_cmatrix(m) for m in mats]
    if not ms:
        raise ValueError("tuple must contain at least one matrix")
    dim = ms[0].shape[0]
    if any(m.shape[0] != dim for m in ms):
        raise ValueError("all matrices in a tuple must share one dimension")
    if dim > SOFT_MAX_DIM:
        warnings.warn(
            f"dimension {dim} is above the intended desk scale ({SOFT_MAX_DIM})",
            stacklevel=2,
        )
    residual = 0.0
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            residual = max(residual, _op_norm_raw(ms[i] @ ms[j] - ms[j] @ ms[i]))
    norms = [_op_norm_raw(m) for m in ms]
    scale = max(1.0, max(norms) ** 2)
    return CommutingTuple(
        mats=tuple(_readonly(m) for m in ms),
        comm_residual=residual,
        is_commuting=residual <= ctol * scale,
        is_contraction=all(v <= 1.0 + ntol for v in norms),
        is_normal=all(
            _op_norm_raw(m @ m.conj().T - m.conj().T @ m) <= ctol for m in ms
        ),
        ctol=float(ctol),
        ntol=float(ntol),
    )


@dataclass(frozen=True, eq=False)
class PerturbationPath:
    """Linear path ``X_j(t) = A_j + t V_j`` between two certified tuples.

    ``path_valid`` certifies that ``{A_j} + {B_j} + {V_j}`` is one pairwise
    commuting family, which keeps ``X(t)`` commuting for every ``t``;
    ``path_contractive`` certifies the contraction property on a t-grid plus
    both endpoints.
    """

    a: CommutingTuple
    b: CommutingTuple
    v: tuple[np.ndarray, ...]
    path_valid: bool
    path_contractive: bool
    family_residual: float

    @property
    def n(self) -> int:
        return self.a.n

    @property
    def dim(self) -> int:
        return self.a.dim

    def at(self, t: float) -> list[np.ndarray]:
        """Matrices ``A_j + t V_j``."""
        return [a + t * v for a, v in zip(self.a.mats, self.v)]

    def tuple_at(self, t: float, ctol: float | None = None, ntol: float | None = None) -> CommutingTuple:
        """Certify the tuple at path position ``t``."""
        return certify_tuple(
            self.at(t),
            self.a.ctol if ctol is None else ctol,
            self.a.ntol if ntol is None else ntol,
        )


def build_path(a: CommutingTuple, b: CommutingTuple, ctol: float | None = None,
               t_grid: int = PATH_T_GRID) -> PerturbationPath:
    """Form the path from ``a`` to ``b`` with ``V_j = B_j - A_j`` exactly.

    An invalid path (non-commuting family, or losing contractivity along t)
    is a reported state, not an error.
    """
    if a.n != b.n:
        raise ValueError(f"tuple arity mismatch: {a.n} vs {b.n}")
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if ctol is None:
        ctol = a.ctol
    v = [bm - am for am, bm in zip(a.mats, b.mats)]
    family = list(a.mats) + list(b.mats) + v
    residual = 0.0
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            residual = max(residual, _op_norm_raw(family[i] @ family[j] - family[j] @ family[i]))
    scale = max(1.0, max(_op_norm_raw(m) for m in family) ** 2)
    path_valid = residual <= ctol * scale

    contractive = a.is_contraction and b.is_contraction
    if contractive:
        for t in np.linspace(0.0, 1.0, t_grid):
            if not all(_op_norm_raw(am + t * vm) <= 1.0 + a.ntol for am, vm in zip(a.mats, v)):
                contractive = False
                break

    return PerturbationPath(
        a=a,
        b=b,
        v=tuple(_readonly(m) for m in v),
        path_valid=path_valid,
        path_contractive=contractive,
        family_residual=residual,
    )


def _mats_of(tup) -> tuple[np.ndarray, ...]:
    if isinstance(tup, CommutingTuple):
        return tup.mats
    return tuple(as_cmatrix(m) for m in tup)


def ordered_monomial(tup, k) -> np.ndarray:
    """Product ``X_1^{k_1} ... X_n^{k_n}`` in fixed coordinate order."""
    mats = _mats_of(tup)
    kk = tuple(int(e) for e in k)
    if len(kk) != len(mats):
        raise ValueError(f"multi-index length {len(kk)} != tuple arity {len(mats)}")
    if any(e < 0 for e in kk):
        raise ValueError("exponents must be non-negative")
    out = identity(mats[0].shape[0])
    for m, e in zip(mats, kk):
        if e:
            out = out @ matrix_power(m, e)
    return out
