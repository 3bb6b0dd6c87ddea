"""Per-term trace bounds for higher-order operator derivatives.

The core inequality: for an in-hypothesis path (commuting normal contraction
tuple at the probed t, Hilbert-Schmidt perturbations), the trace of one
derivative term is dominated by the product of the touched perturbations'
Hilbert-Schmidt norms (each to its order) times the sup of the matching mixed
partial derivative of the scalar function.  Two sup handlings are kept apart:
the sound check uses the coefficient-sum upper bound and can only fail on a
genuine formula violation; the strict check uses an adaptively refined grid
sup, is tight, and is reported rather than required.  The block bound used in
its proof — summing |trace| over products of spectral projections against
perturbations — is checked directly on eigenprojector resolutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iter_product
from math import factorial

import numpy as np

from .ensembles import ENSEMBLE_KINDS, EnsembleSpec, FunctionSpec, _draw_function, draw_path, make_rng
from .matcore import PerturbationPath
from .mpoly import DomainKind, MAX_GRID_PER_AXIS, MultiPoly, _grid_abs_max
from .opderiv import DerivTermSpec, _PathContext, _d_term, enumerate_terms

__all__ = [
    "SOUND_SLACK",
    "EstimateReport",
    "trace_estimate_check",
    "HSBlockReport",
    "hs_block_bound_check",
    "SweepConfig",
    "SweepReport",
    "estimate_sweep",
]

SOUND_SLACK = 1e-10  # roundoff guard on the coefficient-sum side
STRICT_SLACK = 1e-8


@dataclass(frozen=True)
class EstimateReport:
    """Both sides of the per-term trace bound at one (term, t)."""

    term: DerivTermSpec
    t: float
    lhs: float
    rhs_factor: float
    grid_sup: float
    coeff_upper: float
    grid_per_axis: int
    pass_strict: bool
    pass_sound: bool
    in_hypothesis: bool

    @property
    def ratio(self) -> float | None:
        """Sharpness statistic lhs / (rhs_factor * grid_sup); None when the
        denominator vanishes."""
        denom = self.rhs_factor * self.grid_sup
        return self.lhs / denom if denom > 0 else None


def _hs_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, "fro"))


def trace_estimate_check(
    f: MultiPoly,
    path: PerturbationPath,
    term: DerivTermSpec,
    t: float,
    dom: DomainKind,
    slack: float = STRICT_SLACK,
    max_grid: int = MAX_GRID_PER_AXIS,
    grid_sup_hint: tuple[float, int] | None = None,
) -> EstimateReport:
    """Evaluate |trace| of one derivative term against its bound.

    Hypothesis violations (non-commuting family, non-normal or expansive
    tuple at t) flag the report but the numbers are still computed.
    ``grid_sup_hint`` lets sweeps reuse a previously refined grid sup for the
    same (f, term, domain).
    """
    order = term.order_multi_index(f.n_vars)
    g = f.partial_derivative(order)
    radius = dom.radius if dom.kind == "torus" else 1.0
    coeff_upper = g.coeff_upper(radius)
    rhs_factor = 1.0
    for j, i in term.coords:
        rhs_factor *= _hs_norm(path.v[j - 1]) ** i

    ctx = _PathContext(path, float(t), f.max_degrees)
    lhs = abs(complex(np.trace(_d_term(f, term, ctx))))

    tup_t = path.tuple_at(t)
    in_hypothesis = (
        path.path_valid and tup_t.is_commuting and tup_t.is_normal and tup_t.is_contraction
    )

    if grid_sup_hint is not None:
        gsup, gpts = grid_sup_hint
    else:
        gpts = dom.grid_per_axis
        samples = dom.axis_samples(gpts)
        gsup = _grid_abs_max(g, [samples] * g.n_vars) if g.terms else 0.0
    while lhs > rhs_factor * gsup * (1.0 + slack) and gpts < max_grid and g.terms:
        gpts = min(2 * gpts, max_grid)
        samples = dom.axis_samples(gpts)
        gsup = _grid_abs_max(g, [samples] * g.n_vars)

    pass_sound = lhs <= rhs_factor * coeff_upper * (1.0 + SOUND_SLACK) + 1e-300
    pass_strict = lhs <= rhs_factor * gsup * (1.0 + slack) + 1e-300
    return EstimateReport(
        term=term,
        t=float(t),
        lhs=lhs,
        rhs_factor=rhs_factor,
        grid_sup=gsup,
        coeff_upper=coeff_upper,
        grid_per_axis=gpts,
        pass_strict=pass_strict,
        pass_sound=pass_sound,
        in_hypothesis=in_hypothesis,
    )


@dataclass(frozen=True)
class HSBlockReport:
    total: float
    bound: float
    combos: int
    passed: bool


def _check_resolution(family, dim: int, tol: float = 1e-8) -> list[np.ndarray]:
    mats = [np.asarray(e, dtype=np.complex128) for e in family]
    if not mats:
        raise ValueError("projector family must be non-empty")
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for e in mats:
        if e.shape != (dim, dim):
            raise ValueError("projector shape mismatch")
        if np.abs(e - e.conj().T).max() > tol:
            raise ValueError("projector is not Hermitian")
        if np.abs(e @ e - e).max() > tol:
            raise ValueError("projector is not idempotent")
        acc += e
    if np.abs(acc - np.eye(dim)).max() > tol:
        raise ValueError("projector family does not resolve the identity")
    return mats


def hs_block_bound_check(spectral_partitions, v, slack: float = 1e-10) -> HSBlockReport:
    """Sum of |trace(E_1 V_1 E_2 V_2 ... E_m V_m)| over all projector choices
    against the product of Hilbert-Schmidt norms."""
    vs = [np.asarray(m, dtype=np.complex128) for m in v]
    m = len(vs)
    if m < 2:
        raise ValueError("need at least two perturbations")
    if len(spectral_partitions) != m:
        raise ValueError("need one projector family per perturbation")
    dim = vs[0].shape[0]
    families = [_check_resolution(fam, dim) for fam in spectral_partitions]

    prods = [[e @ vj for e in fam] for fam, vj in zip(families, vs)]
    total = 0.0
    combos = 0
    for pick in iter_product(*prods):
        acc = pick[0]
        for factor in pick[1:]:
            acc = acc @ factor
        total += abs(complex(np.trace(acc)))
        combos += 1
    bound = 1.0
    for vj in vs:
        bound *= _hs_norm(vj)
    return HSBlockReport(
        total=total,
        bound=bound,
        combos=combos,
        passed=total <= bound * (1.0 + slack) + 1e-300,
    )


# -- sweep ----------------------------------------------------------------------


@dataclass
class SweepConfig:
    """Cartesian verification sweep over ensembles, functions, orders, terms,
    and path positions; each draw is seeded ``master_seed + draw_index``."""

    draws: int = 50
    dim: int = 5
    n_vars: int = 2
    m_values: tuple[int, ...] = (2, 3, 4)
    max_k: int = 3
    ensemble_kinds: tuple[str, ...] = ENSEMBLE_KINDS
    include_adversarial: bool = False
    v_scale: float = 0.1
    max_total_degree: int = 4
    coeff_scale: float = 1.0
    t_values: tuple[float, ...] = (0.0, 0.5, 1.0)
    master_seed: int = 0
    grid_per_axis: int = 64
    slack: float = STRICT_SLACK
    general_trace: bool = False
    threads: int = 1

    def validate(self) -> None:
        if self.draws < 0:
            raise ValueError("draws must be >= 0")
        if not self.m_values or any(m < 1 or m > 6 for m in self.m_values):
            raise ValueError("m values must sit in [1, 6]")
        if self.slack <= 0:
            raise ValueError("slack must be positive")
        for kind in self.ensemble_kinds:
            if kind not in ENSEMBLE_KINDS:
                raise ValueError(f"unknown ensemble kind {kind!r}")


@dataclass
class SweepReport:
    total: int = 0
    passed_sound: int = 0
    passed_strict: int = 0
    max_ratio: float = 0.0
    failures: list[dict] = field(default_factory=list)
    out_of_hypothesis: list[dict] = field(default_factory=list)
    cases: list[dict] = field(default_factory=list)

    @property
    def all_sound(self) -> bool:
        return self.passed_sound == self.total

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "total": self.total,
            "passed_sound": self.passed_sound,
            "passed_strict": self.passed_strict,
            "max_ratio": self.max_ratio,
            "failures": self.failures,
            "out_of_hypothesis_total": len(self.out_of_hypothesis),
        }


def _domain_for(kind: str, grid_per_axis: int) -> DomainKind:
    if kind == "selfadjoint_diagonal":
        return DomainKind.cube(grid_per_axis + 1 if grid_per_axis % 2 == 0 else grid_per_axis)
    return DomainKind.torus(grid_per_axis)


def _sweep_draw(cfg: SweepConfig, index: int) -> list[dict]:
    seed = cfg.master_seed + index
    kinds = list(cfg.ensemble_kinds)
    if cfg.include_adversarial:
        kinds = kinds + ["adversarial_noncommuting", "adversarial_nonnormal"]
    kind = kinds[index % len(kinds)]
    m = cfg.m_values[index % len(cfg.m_values)]

    from .ensembles import adversarial_path  # local to avoid cycle at import time

    if kind.startswith("adversarial_"):
        path = adversarial_path(kind.removeprefix("adversarial_"), n=cfg.n_vars,
                                dim=cfg.dim, v_scale=cfg.v_scale, seed=seed)
        dom = _domain_for("jointly_diagonal", cfg.grid_per_axis)
    else:
        spec = EnsembleSpec(kind=kind, n=cfg.n_vars, dim=cfg.dim, v_scale=cfg.v_scale, seed=seed)
        path = draw_path(spec)
        dom = _domain_for(kind, cfg.grid_per_axis)
    rng = make_rng(seed ^ 0x5EED)
    f = _draw_function(rng, cfg.n_vars, cfg.max_total_degree, cfg.coeff_scale)

    records = []
    for term in enumerate_terms(cfg.n_vars, m, cfg.max_k):
        hint = None
        for t in cfg.t_values:
            rep = trace_estimate_check(f, path, term, t, dom, slack=cfg.slack, grid_sup_hint=hint)
            hint = (rep.grid_sup, rep.grid_per_axis)
            theorem_backed = rep.in_hypothesis and (not cfg.general_trace or m == 2)
            records.append(
                {
                    "draw": index,
                    "seed": seed,
                    "ensemble": kind,
                    "m": m,
                    "term": str(term),
                    "t": t,
                    "lhs": rep.lhs,
                    "rhs_factor": rep.rhs_factor,
                    "grid_sup": rep.grid_sup,
                    "coeff_upper": rep.coeff_upper,
                    "pass_sound": rep.pass_sound,
                    "pass_strict": rep.pass_strict,
                    "in_hypothesis": rep.in_hypothesis,
                    "theorem_backed": theorem_backed,
                    "ratio": rep.ratio,
                }
            )
    return records


def estimate_sweep(cfg: SweepConfig) -> SweepReport:
    """Run the sweep; only theorem-backed cases count toward pass totals,
    everything else is segregated."""
    cfg.validate()
    report = SweepReport()
    if cfg.draws == 0:
        return report

    if cfg.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            batches = list(pool.map(lambda i: _sweep_draw(cfg, i), range(cfg.draws)))
    else:
        batches = [_sweep_draw(cfg, i) for i in range(cfg.draws)]

    for batch in batches:  # batches arrive ordered by draw index
        for rec in batch:
            report.cases.append(rec)
            if not rec["theorem_backed"]:
                report.out_of_hypothesis.append(rec)
                continue
            report.total += 1
            if rec["pass_sound"]:
                report.passed_sound += 1
            else:
                report.failures.append(rec)
            if rec["pass_strict"]:
                report.passed_strict += 1
            if rec["ratio"] is not None and rec["ratio"] > report.max_ratio:
                report.max_ratio = rec["ratio"]
    return report
