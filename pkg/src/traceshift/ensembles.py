"""Reproducible random inputs: commuting normal contraction tuples whose
linear paths stay commuting, normal, and contractive for every t in [0, 1].

All randomness flows through numpy's Philox generator (64-bit, counter
based), keyed by the spec seed, so any reported case is re-runnable
bit-identically.  Endpoint spectra live in the closed unit disc (or in
[-1, 1] for the self-adjoint kind) and perturbations are clipped by
projection onto that convex set, which both preserves the perturbation
magnitude bound and keeps every point of the segment inside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import (
    DEFAULT_CTOL,
    DEFAULT_NTOL,
    PerturbationPath,
    build_path,
    certify_tuple,
)
from .mpoly import MultiPoly

__all__ = [
    "ENSEMBLE_KINDS",
    "EnsembleSpec",
    "FunctionSpec",
    "EnsembleDraw",
    "make_rng",
    "haar_unitary",
    "draw_path",
    "draw_path_with_data",
    "draw_function",
    "adversarial_path",
    "draw_projector_family",
]

ENSEMBLE_KINDS = ("jointly_diagonal", "circulant", "selfadjoint_diagonal")


@dataclass(frozen=True)
class EnsembleSpec:
    """Generator parameters; the seed fully determines the draw."""

    kind: str
    n: int
    dim: int
    v_scale: float
    seed: int

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; choose from {ENSEMBLE_KINDS}")
        if self.n < 1 or self.dim < 1:
            raise ValueError("n and dim must be positive")
        if self.v_scale < 0:
            raise ValueError("v_scale must be non-negative")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "dim": self.dim,
            "v_scale": self.v_scale,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "EnsembleSpec":
        return cls(
            kind=payload["kind"],
            n=int(payload["n"]),
            dim=int(payload["dim"]),
            v_scale=float(payload["v_scale"]),
            seed=int(payload["seed"]),
        )


@dataclass(frozen=True)
class FunctionSpec:
    """Random test-polynomial parameters."""

    n: int
    max_total_degree: int
    coeff_scale: float
    seed: int


@dataclass(frozen=True)
class EnsembleDraw:
    """Diagonalizing data behind a drawn path: X_j(t) = U diag(eig(t)) U*."""

    unitary: np.ndarray
    eig_a: np.ndarray  # shape (n, dim)
    eig_b: np.ndarray


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    phases = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * phases


def dft_unitary(dim: int) -> np.ndarray:
    p = np.arange(dim)
    return np.exp(-2j * np.pi * np.outer(p, p) / dim) / np.sqrt(dim)


def _disc_uniform(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, dim))
    theta = rng.uniform(0.0, 2.0 * np.pi, dim)
    return r * np.exp(1j * theta)


def _clip_disc(z: np.ndarray) -> np.ndarray:
    mag = np.abs(z)
    return np.where(mag > 1.0, z / np.where(mag > 0, mag, 1.0), z)


def draw_path_with_data(
    spec: EnsembleSpec,
    ctol: float = DEFAULT_CTOL,
    ntol: float = DEFAULT_NTOL,
) -> tuple[PerturbationPath, EnsembleDraw]:
    """Draw a path plus the joint-diagonalization data behind it."""
    rng = make_rng(spec.seed)
    if spec.kind == "circulant":
        u = dft_unitary(spec.dim)
    else:
        u = haar_unitary(rng, spec.dim)

    eig_a = np.zeros((spec.n, spec.dim), dtype=np.complex128)
    eig_b = np.zeros((spec.n, spec.dim), dtype=np.complex128)
    for j in range(spec.n):
        if spec.kind == "selfadjoint_diagonal":
            lam = rng.uniform(-1.0, 1.0, spec.dim).astype(np.complex128)
            delta = rng.uniform(-spec.v_scale, spec.v_scale, spec.dim)
            lam2 = np.clip((lam + delta).real, -1.0, 1.0).astype(np.complex128)
        else:
            lam = _disc_uniform(rng, spec.dim, 1.0)
            delta = _disc_uniform(rng, spec.dim, spec.v_scale)
            lam2 = _clip_disc(lam + delta)
        eig_a[j] = lam
        eig_b[j] = lam2

    uh = u.conj().T
    a_mats = [u @ np.diag(eig_a[j]) @ uh for j in range(spec.n)]
    b_mats = [u @ np.diag(eig_b[j]) @ uh for j in range(spec.n)]
    a = certify_tuple(a_mats, ctol, ntol)
    b = certify_tuple(b_mats, ctol, ntol)
    return build_path(a, b, ctol), EnsembleDraw(unitary=u, eig_a=eig_a, eig_b=eig_b)


def draw_path(spec: EnsembleSpec, ctol: float = DEFAULT_CTOL, ntol: float = DEFAULT_NTOL) -> PerturbationPath:
    return draw_path_with_data(spec, ctol, ntol)[0]


def _draw_function(rng: np.random.Generator, n: int, max_total_degree: int, coeff_scale: float) -> MultiPoly:
    terms: dict[tuple[int, ...], complex] = {}
    for k in _multi_indices(n, max_total_degree):
        g = rng.standard_normal(2)
        c = coeff_scale * complex(g[0], g[1]) / np.sqrt(2.0) / (1.0 + sum(k)) ** 2
        terms[k] = c
    return MultiPoly(n, terms)


def _multi_indices(n: int, max_total: int):
    """All multi-indices with total degree <= max_total, lexicographic."""
    def rec(prefix, remaining, slots):
        if slots == 0:
            yield prefix
            return
        for e in range(remaining + 1):
            yield from rec(prefix + (e,), remaining - e, slots - 1)

    yield from rec((), max_total, n)


def draw_function(fspec: FunctionSpec) -> MultiPoly:
    """Random finite-support polynomial; coefficients are complex Gaussian
    damped by 1/(1+|k|)^2 so coefficient sums stay tame."""
    if fspec.n < 1 or fspec.max_total_degree < 0:
        raise ValueError("need n >= 1 and max_total_degree >= 0")
    return _draw_function(make_rng(fspec.seed), fspec.n, fspec.max_total_degree, fspec.coeff_scale)


def adversarial_path(
    kind: str,
    n: int = 2,
    dim: int = 4,
    v_scale: float = 0.2,
    seed: int = 0,
    ctol: float = DEFAULT_CTOL,
    ntol: float = DEFAULT_NTOL,
) -> PerturbationPath:
    """Deliberately break one hypothesis.

    ``"noncommuting"``: commuting normal endpoints A, but B = A + generic
    Gaussian noise, so the family fails pairwise commutation.
    ``"nonnormal"``: a commuting family of strictly upper-triangular Toeplitz
    matrices (polynomials in the one-step shift), contractions after scaling
    but nowhere normal.
    """
    rng = make_rng(seed)
    if kind == "noncommuting":
        u = haar_unitary(rng, dim)
        uh = u.conj().T
        a_mats = [u @ np.diag(_disc_uniform(rng, dim, 1.0)) @ uh for _ in range(n)]
        b_mats = [
            m + v_scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
            for m in a_mats
        ]
        return build_path(certify_tuple(a_mats, ctol, ntol), certify_tuple(b_mats, ctol, ntol), ctol)
    if kind == "nonnormal":
        shift = np.zeros((dim, dim), dtype=np.complex128)
        for i in range(dim - 1):
            shift[i, i + 1] = 1.0
        shift_pows = [np.linalg.matrix_power(shift, p) for p in range(dim)]

        def toeplitz_poly(coeffs):
            out = np.zeros((dim, dim), dtype=np.complex128)
            for p, c in enumerate(coeffs, start=1):
                out += c * shift_pows[p]
            return out

        a_mats, b_mats = [], []
        for _ in range(n):
            ca = rng.standard_normal(dim - 1) + 1j * rng.standard_normal(dim - 1)
            am = toeplitz_poly(ca)
            nrm = float(np.linalg.svd(am, compute_uv=False)[0])
            if nrm > 0:
                am = am / (nrm * (1.0 + 1e-6))
            cb = rng.standard_normal(dim - 1) + 1j * rng.standard_normal(dim - 1)
            bm = am + v_scale * toeplitz_poly(cb) / max(1.0, dim)
            nrm = float(np.linalg.svd(bm, compute_uv=False)[0])
            if nrm > 1.0:
                bm = bm / (nrm * (1.0 + 1e-6))
            a_mats.append(am)
            b_mats.append(bm)
        return build_path(certify_tuple(a_mats, ctol, ntol), certify_tuple(b_mats, ctol, ntol), ctol)
    raise ValueError(f"unknown adversarial kind {kind!r}")


def draw_projector_family(dim: int, blocks: int, seed: int) -> list[np.ndarray]:
    """Random resolution of identity: orthogonal projectors from a Haar
    unitary's column blocks."""
    if not 1 <= blocks <= dim:
        raise ValueError("need 1 <= blocks <= dim")
    rng = make_rng(seed)
    u = haar_unitary(rng, dim)
    sizes = [dim // blocks + (1 if b < dim % blocks else 0) for b in range(blocks)]
    out = []
    start = 0
    for size in sizes:
        cols = u[:, start : start + size]
        out.append(cols @ cols.conj().T)
        start += size
    return out
