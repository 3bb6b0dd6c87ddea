"""Batch verification suites behind the command-line front door.

Each suite runs seeded random cases against an identity or inequality and
returns a deterministic report: per-draw RNG streams are keyed by
``master_seed + draw_index``, so every failing case carries a seed that
reproduces it bit-identically, and results merge by draw index under any
thread schedule.

Fixed per-check tolerances (finite-difference comparisons, divided-difference
route agreement, the bound slacks) are pinned here; the configurable ``tol``
only governs the trace-identity checks (remainder, trace formula, reduction).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from . import divdiff as dd
from .ensembles import (
    ENSEMBLE_KINDS,
    EnsembleSpec,
    _draw_function,
    draw_path,
    draw_path_with_data,
    draw_projector_family,
    make_rng,
)
from .estimates import SweepConfig, estimate_sweep, hs_block_bound_check
from .mpoly import DomainKind, MultiPoly
from .opderiv import (
    enumerate_terms,
    fd_step,
    finite_difference,
    full_derivative,
    power_derivative,
)
from .remainder import remainder_check
from .ssm import moment_table, single_variable_reduction, trace_formula_check

__all__ = [
    "SUITE_NAMES",
    "ConfigError",
    "RunConfig",
    "SuiteResult",
    "run_suite",
    "run_all",
    "THREE_ROUTE_TOL",
    "BOUND_SLACK",
    "POWER_FD_TOL",
    "FULL_FD_TOL",
]

SUITE_NAMES = ("divdiff", "derivatives", "remainder", "estimates", "tracefla", "reduction")

THREE_ROUTE_TOL = 1e-10
BOUND_SLACK = 1e-8
POWER_FD_TOL = 1e-6
FULL_FD_TOL = 1e-5
DIAG_ORACLE_TOL = 1e-9
REDUCTION_TOL = 1e-10


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    """Common knobs for the verification suites."""

    seed: int = 0
    draws: int = 50
    dim: int = 5
    n_vars: int = 2
    m_min: int = 2
    m_max: int = 3
    ensemble: str = "jointly_diagonal"
    v_scale: float = 0.05
    max_total_degree: int = 4
    coeff_scale: float = 1.0
    tol: float = 1e-9
    threads: int = 1

    def validate(self) -> None:
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")
        if not (1 <= self.m_min <= self.m_max <= 6):
            raise ConfigError("need 1 <= m_min <= m_max <= 6")
        if self.draws < 0:
            raise ConfigError("draws must be >= 0")
        if self.dim < 1 or self.n_vars < 1:
            raise ConfigError("dim and n_vars must be positive")
        if self.ensemble not in ENSEMBLE_KINDS:
            raise ConfigError(f"unknown ensemble {self.ensemble!r}; choose from {ENSEMBLE_KINDS}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.v_scale < 0 or self.max_total_degree < 0:
            raise ConfigError("v_scale and max_total_degree must be >= 0")

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(payload) - known
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        cfg = cls(**payload)
        cfg.validate()
        return cfg


@dataclass
class SuiteResult:
    suite: str
    total: int = 0
    passed: int = 0
    failures: list[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.passed == self.total and not self.failures

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "suite": self.suite,
            "total": self.total,
            "passed": self.passed,
            "failures": self.failures,
            "stats": self.stats,
        }


def _collect(result: SuiteResult, records: list[dict]) -> None:
    for rec in records:
        result.total += 1
        if rec.pop("passed"):
            result.passed += 1
        else:
            result.failures.append(rec)


def _map_draws(cfg: RunConfig, fn) -> list[list[dict]]:
    indices = range(cfg.draws)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(lambda i: fn(i, cfg.seed + i), indices))
    return [fn(i, cfg.seed + i) for i in indices]


def _dom_for(kind: str) -> DomainKind:
    return DomainKind.cube() if kind == "selfadjoint_diagonal" else DomainKind.torus()


def _rand_spec(rng: np.random.Generator, n: int, m_cap: int) -> dd.DividedDiffSpec:
    k = int(rng.integers(1, min(n, m_cap) + 1))
    js = sorted(rng.choice(np.arange(1, n + 1), size=k, replace=False).tolist())
    rest = m_cap - k
    bumps = [0] * k
    for _ in range(int(rng.integers(0, rest + 1))):
        bumps[int(rng.integers(0, k))] += 1
    coords = []
    for j, bump in zip(js, bumps):
        i = 1 + bump
        nodes = [complex(z) for z in np.exp(2j * np.pi * rng.uniform(0, 1, i + 1))]
        if rng.uniform() < 0.3 and i >= 1:  # exercise the confluent branch
            nodes[-1] = nodes[0]
        coords.append((j, tuple(nodes)))
    return dd.DividedDiffSpec(tuple(coords))


def _torus_points(rng: np.random.Generator, n: int, count: int) -> list[list[complex]]:
    return [
        [complex(z) for z in np.exp(2j * np.pi * rng.uniform(0, 1, n))]
        for _ in range(count)
    ]


def suite_divdiff(cfg: RunConfig) -> SuiteResult:
    """Three-route agreement plus the factorial sup bound on sampled nodes."""
    result = SuiteResult("divdiff")

    def one(i: int, seed: int) -> list[dict]:
        rng = make_rng(seed)
        n = int(rng.integers(1, cfg.n_vars + 1))
        f = _draw_function(rng, n, min(cfg.max_total_degree, 5), cfg.coeff_scale)
        spec = _rand_spec(rng, n, min(cfg.m_max, 4))
        via_h = dd.divdiff_apply(f, spec)
        via_rec = dd.divdiff_apply_recursive(f, spec)
        recs = []
        for z in _torus_points(rng, n, 2):
            a = via_h.eval_scalar(z)
            b = via_rec.eval_scalar(z)
            c = dd.divdiff_integral(f, spec, z)
            worst = max(abs(a - b), abs(a - c), abs(b - c))
            recs.append(
                {
                    "check": "three_route",
                    "draw": i,
                    "seed": seed,
                    "spec": str([(j, len(nodes) - 1) for j, nodes in spec.coords]),
                    "gap": worst,
                    "passed": worst <= THREE_ROUTE_TOL,
                }
            )
        bound = dd.divdiff_bound(f, spec, DomainKind.torus())
        worst = 0.0
        for z in _torus_points(rng, n, 3):
            worst = max(worst, abs(via_h.eval_scalar(z)))
        recs.append(
            {
                "check": "factorial_bound",
                "draw": i,
                "seed": seed,
                "value": worst,
                "bound": bound,
                "passed": worst <= bound * (1.0 + BOUND_SLACK) + 1e-300,
            }
        )
        return recs

    for batch in _map_draws(cfg, one):
        _collect(result, batch)
    return result


def _fd_v_scale(m: int, base: float) -> float:
    # order-m differences of order-4+ need larger perturbations: the h^-m
    # cancellation error must stay small relative to the ~|V|^m derivative
    return max(base, 0.2) if m >= 4 else base


def suite_derivatives(cfg: RunConfig) -> SuiteResult:
    """Derivative formulas against finite differences and, on jointly
    diagonal paths, against the scalar chain-rule oracle."""
    result = SuiteResult("derivatives")

    def one(i: int, seed: int) -> list[dict]:
        rng = make_rng(seed)
        recs = []

        # power derivative vs finite differences
        dim = int(rng.integers(2, min(cfg.dim, 8) + 1))
        spec = EnsembleSpec("jointly_diagonal", 1, dim, 0.0, seed)
        h_mat = draw_path(spec).a.mats[0]
        v_mat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        v_mat *= 0.02 / max(1.0, float(np.linalg.norm(v_mat, 2)))
        p = int(rng.integers(1, 7))
        m = int(rng.integers(1, 4))
        t = float(rng.uniform(0, 1))
        exact = power_derivative(h_mat, v_mat, p, m, t)
        h = fd_step(m)
        fdm = np.zeros_like(exact)
        for jj in range(m + 1):
            s = t + (m / 2.0 - jj) * h
            fdm += ((-1) ** jj * comb(m, jj)) * np.linalg.matrix_power(h_mat + s * v_mat, p)
        fdm /= h**m
        scale = float(np.linalg.norm(exact, "fro"))
        gap = float(np.linalg.norm(fdm - exact, "fro")) / (scale if scale > 0 else 1.0)
        recs.append(
            {
                "check": "power_fd",
                "draw": i,
                "seed": seed,
                "p": p,
                "m": m,
                "rel_err": gap,
                "passed": gap <= POWER_FD_TOL,
            }
        )

        # full derivative vs finite differences on a valid path
        m = int(rng.integers(max(1, cfg.m_min), min(cfg.m_max, 4) + 1))
        pspec = EnsembleSpec(
            cfg.ensemble, cfg.n_vars, cfg.dim,
            _fd_v_scale(m, max(cfg.v_scale, 0.02)), seed + 1,
        )
        path, data = draw_path_with_data(pspec)
        f = _draw_function(rng, cfg.n_vars, min(cfg.max_total_degree, 5), cfg.coeff_scale)
        t = float(rng.uniform(0.1, 0.9))
        exact = full_derivative(f, path, m, t)
        approx = finite_difference(f, path, m, t, fd_step(m))
        scale = float(np.linalg.norm(exact, "fro"))
        gap = float(np.linalg.norm(approx - exact, "fro")) / (scale if scale > 0 else 1.0)
        recs.append(
            {
                "check": "full_fd",
                "draw": i,
                "seed": seed,
                "m": m,
                "rel_err": gap,
                "passed": gap <= FULL_FD_TOL,
            }
        )

        # scalar chain-rule oracle through the joint eigenvalues
        oracle = _diagonal_derivative_oracle(f, data, m, t)
        scale = max(float(np.linalg.norm(exact, "fro")), 1.0)
        gap = float(np.linalg.norm(oracle - exact, "fro")) / scale
        recs.append(
            {
                "check": "diagonal_oracle",
                "draw": i,
                "seed": seed,
                "m": m,
                "rel_err": gap,
                "passed": gap <= DIAG_ORACLE_TOL,
            }
        )
        return recs

    for batch in _map_draws(cfg, one):
        _collect(result, batch)
    return result


def _exact_multi_indices(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _exact_multi_indices(n - 1, total - first):
            yield (first,) + rest


def _diagonal_derivative_oracle(f: MultiPoly, data, m: int, t: float) -> np.ndarray:
    """d^m/dt^m of f along the path, slot by slot through the joint spectrum:
    the classical chain rule on the affine scalar arguments."""
    u = data.unitary
    delta = data.eig_b - data.eig_a
    dim = u.shape[0]
    n = f.n_vars
    partials = {}
    weights = {}
    for alpha in _exact_multi_indices(n, m):
        partials[alpha] = f.partial_derivative(alpha)
        w = factorial(m)
        for a in alpha:
            w //= factorial(a)
        weights[alpha] = w
    diag = np.zeros(dim, dtype=np.complex128)
    for q in range(dim):
        lam = data.eig_a[:, q] + t * delta[:, q]
        dq = 0j
        for alpha, g in partials.items():
            val = weights[alpha] * g.eval_scalar(lam)
            for jz, a in enumerate(alpha):
                if a:
                    val *= delta[jz, q] ** a
            dq += val
        diag[q] = dq
    return u @ np.diag(diag) @ u.conj().T


def suite_remainder(cfg: RunConfig) -> SuiteResult:
    """Remainder trace vs the weighted derivative-trace integral."""
    result = SuiteResult("remainder")
    m_lo = max(2, cfg.m_min)
    m_vals = list(range(m_lo, max(cfg.m_max, m_lo) + 1))

    def one(i: int, seed: int) -> list[dict]:
        rng = make_rng(seed)
        spec = EnsembleSpec(cfg.ensemble, cfg.n_vars, cfg.dim, cfg.v_scale, seed)
        path = draw_path(spec)
        f = _draw_function(rng, cfg.n_vars, cfg.max_total_degree, cfg.coeff_scale)
        m = m_vals[i % len(m_vals)]
        rep = remainder_check(f, path, m, cfg.tol)
        return [
            {
                "check": "remainder_identity",
                "draw": i,
                "seed": seed,
                "m": m,
                "abs_gap": rep.abs_gap,
                "lhs": [rep.lhs_trace.real, rep.lhs_trace.imag],
                "in_hypothesis": rep.in_hypothesis,
                "passed": rep.passed,
            }
        ]

    for batch in _map_draws(cfg, one):
        _collect(result, batch)
    return result


def suite_estimates(cfg: RunConfig) -> SuiteResult:
    """Sound/strict trace bounds over a sweep, plus the projector block bound."""
    result = SuiteResult("estimates")
    sweep_cfg = SweepConfig(
        draws=cfg.draws,
        dim=cfg.dim,
        n_vars=cfg.n_vars,
        m_values=tuple(range(max(2, cfg.m_min), max(cfg.m_max, 2) + 1)),
        ensemble_kinds=(cfg.ensemble,),
        v_scale=cfg.v_scale,
        max_total_degree=cfg.max_total_degree,
        coeff_scale=cfg.coeff_scale,
        t_values=(0.0, 0.5, 1.0),
        master_seed=cfg.seed,
        threads=cfg.threads,
    )
    sweep = estimate_sweep(sweep_cfg)
    result.total += sweep.total
    result.passed += sweep.passed_sound
    result.failures.extend(sweep.failures)
    result.stats["sweep"] = sweep.to_json()

    def one(i: int, seed: int) -> list[dict]:
        rng = make_rng(seed ^ 0xB10C)
        m = int(rng.integers(2, 4))
        dim = cfg.dim
        parts = [
            draw_projector_family(dim, int(rng.integers(1, dim + 1)), seed + 101 + j)
            for j in range(m)
        ]
        vs = []
        for _ in range(m):
            v = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            vs.append(v)
        rep = hs_block_bound_check(parts, vs)
        return [
            {
                "check": "hs_block_bound",
                "draw": i,
                "seed": seed,
                "m": m,
                "total": rep.total,
                "bound": rep.bound,
                "passed": rep.passed,
            }
        ]

    for batch in _map_draws(cfg, one):
        _collect(result, batch)
    return result


def suite_tracefla(cfg: RunConfig) -> SuiteResult:
    """Full trace formula round trip plus the total-variation moment audit."""
    result = SuiteResult("tracefla")
    m_lo = max(2, cfg.m_min)
    m_vals = list(range(m_lo, max(cfg.m_max, m_lo) + 1))

    def one(i: int, seed: int) -> list[dict]:
        rng = make_rng(seed)
        spec = EnsembleSpec(cfg.ensemble, cfg.n_vars, cfg.dim, cfg.v_scale, seed)
        path = draw_path(spec)
        f = _draw_function(rng, cfg.n_vars, cfg.max_total_degree, cfg.coeff_scale)
        m = m_vals[i % len(m_vals)]
        rep = trace_formula_check(f, path, m, cfg.tol)
        recs = [
            {
                "check": "trace_formula",
                "draw": i,
                "seed": seed,
                "m": m,
                "abs_gap": rep.abs_gap,
                "passed": rep.passed,
            }
        ]
        if i % 10 == 0:  # moment audits are heavier; sample them
            cap = (2,) * cfg.n_vars
            for term in enumerate_terms(cfg.n_vars, m, max_k=2):
                table = moment_table(term, path, cap)
                worst = table.max_abs_entry()
                recs.append(
                    {
                        "check": "tv_audit",
                        "draw": i,
                        "seed": seed,
                        "term": str(term),
                        "max_entry": worst,
                        "tv_bound": table.tv_bound,
                        "passed": worst <= table.tv_bound * (1.0 + BOUND_SLACK) + 1e-300,
                    }
                )
        return recs

    for batch in _map_draws(cfg, one):
        _collect(result, batch)
    return result


def suite_reduction(cfg: RunConfig) -> SuiteResult:
    """Single-coordinate functional vs the univariate remainder trace, on
    both the contraction (torus) and self-adjoint (cube) ensembles."""
    result = SuiteResult("reduction")
    m_lo = max(2, cfg.m_min)
    m_vals = list(range(m_lo, max(cfg.m_max, m_lo) + 1))

    def one(i: int, seed: int) -> list[dict]:
        rng = make_rng(seed)
        recs = []
        for kind in ("jointly_diagonal", "selfadjoint_diagonal"):
            spec = EnsembleSpec(kind, cfg.n_vars, cfg.dim, cfg.v_scale, seed)
            path = draw_path(spec)
            g = _draw_function(rng, 1, min(cfg.max_total_degree, 4), cfg.coeff_scale)
            j = int(rng.integers(1, cfg.n_vars + 1))
            m = m_vals[i % len(m_vals)]
            rep = single_variable_reduction(g, j, m, path, REDUCTION_TOL)
            recs.append(
                {
                    "check": "reduction",
                    "draw": i,
                    "seed": seed,
                    "ensemble": kind,
                    "j": j,
                    "m": m,
                    "abs_gap": rep.abs_gap,
                    "passed": rep.passed,
                }
            )
        return recs

    for batch in _map_draws(cfg, one):
        _collect(result, batch)
    return result


_SUITES = {
    "divdiff": suite_divdiff,
    "derivatives": suite_derivatives,
    "remainder": suite_remainder,
    "estimates": suite_estimates,
    "tracefla": suite_tracefla,
    "reduction": suite_reduction,
}


def run_suite(name: str, cfg: RunConfig) -> SuiteResult:
    if name not in _SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {SUITE_NAMES} or 'all'")
    cfg.validate()
    return _SUITES[name](cfg)


def run_all(cfg: RunConfig) -> list[SuiteResult]:
    cfg.validate()
    return [run_suite(name, cfg) for name in SUITE_NAMES]
