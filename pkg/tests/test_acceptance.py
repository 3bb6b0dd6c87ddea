"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is pinned here, nothing is deferred to calibration.
"""

import time
from math import comb, factorial

import numpy as np

from traceshift import (
    DerivTermSpec,
    DividedDiffSpec,
    DomainKind,
    EnsembleSpec,
    MultiPoly,
    divdiff_apply,
    divdiff_apply_recursive,
    divdiff_bound,
    divdiff_integral,
    draw_path,
    draw_projector_family,
    enumerate_terms,
    finite_difference,
    full_derivative,
    hs_block_bound_check,
    moment_table,
    phi,
    power_derivative,
    remainder_check,
    single_variable_reduction,
    taylor_remainder,
    trace_estimate_check,
    trace_formula_check,
)
from traceshift.opderiv import fd_step
from traceshift.suites import RunConfig, run_suite

from _helpers import random_poly, rng, scalar_path_derivative, valid_path, valid_path_with_data

_T0 = time.monotonic()
_TIME_BUDGET_S = 300.0


def _report(num, description, ok, detail=""):
    line = f"ACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'} {description}"
    if detail:
        line += f" [{detail}]"
    print(line, flush=True)
    assert ok, line


def _torus(r, count):
    return tuple(complex(z) for z in np.exp(2j * np.pi * r.uniform(size=count)))


def _random_divdiff_case(r, seed_base, i, max_order=4, max_deg=5):
    n = 1 + i % 3
    f = random_poly(n, max_deg, seed_base + i)
    coords = []
    total = 0
    for j in range(1, n + 1):
        if total >= max_order:
            break
        if j == n and not coords:
            take = True
        else:
            take = r.uniform() < 0.6
        if take:
            order = int(r.integers(1, min(max_order - total, 3) + 1))
            nodes = list(_torus(r, order + 1))
            if r.uniform() < 0.35:
                nodes[-1] = nodes[0]  # confluent case
            coords.append((j, tuple(nodes)))
            total += order
    return f, DividedDiffSpec(tuple(coords))


def test_criterion_01_three_route_agreement():
    start = time.monotonic()
    r = rng(10_001)
    worst = 0.0
    for i in range(200):
        f, spec = _random_divdiff_case(r, 20_000, i)
        n = f.n_vars
        z = [complex(w) for w in np.exp(2j * np.pi * r.uniform(size=n))]
        a = divdiff_apply(f, spec).eval_scalar(z)
        b = divdiff_apply_recursive(f, spec).eval_scalar(z)
        c = divdiff_integral(f, spec, z)
        worst = max(worst, abs(a - b), abs(a - c), abs(b - c))
    elapsed = time.monotonic() - start
    _report(
        1,
        "divided-difference three-route agreement (200 cases, 1e-10)",
        worst <= 1e-10 and elapsed < 10.0,
        f"worst gap {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_02_divided_difference_bound():
    r = rng(10_002)
    violations = 0
    worst_margin = 0.0
    for i in range(200):
        f, spec = _random_divdiff_case(r, 30_000, i)
        n = f.n_vars
        bound = divdiff_bound(f, spec, DomainKind.torus())
        out = divdiff_apply(f, spec)
        for _ in range(3):
            z = [complex(w) for w in np.exp(2j * np.pi * r.uniform(size=n))]
            val = abs(out.eval_scalar(z))
            if val > bound * (1 + 1e-8) + 1e-300:
                violations += 1
            if bound > 0:
                worst_margin = max(worst_margin, val / bound)
    _report(
        2,
        "factorial sup bound, nodes on the torus (200 configs, slack 1e-8)",
        violations == 0,
        f"max value/bound ratio {worst_margin:.3f}",
    )


def test_criterion_03_power_derivative_vs_fd():
    r = rng(10_003)
    worst = 0.0
    for i in range(150):
        dim = int(r.integers(2, 9))
        h_mat = valid_path("jointly_diagonal", 1, dim, 0.0, 40_000 + i).a.mats[0]
        p = int(r.integers(1, 7))
        m = 1 + i % 3
        # p <= m+1 keeps the stencil exact, so a larger perturbation beats
        # cancellation; beyond that the scale trades h^2 truncation against
        # the eps/h^m cancellation floor per order
        v_norm = 0.1 if p <= m + 1 else {1: 0.02, 2: 0.05, 3: 0.025}[m]
        v = r.standard_normal((dim, dim)) + 1j * r.standard_normal((dim, dim))
        v *= v_norm / np.linalg.norm(v, 2)
        t = float(r.uniform(0, 1))
        exact = power_derivative(h_mat, v, p, m, t)
        h = fd_step(m)
        approx = np.zeros_like(exact)
        for j in range(m + 1):
            s = t + (m / 2.0 - j) * h
            approx += ((-1) ** j * comb(m, j)) * np.linalg.matrix_power(h_mat + s * v, p)
        approx /= h**m
        scale = np.linalg.norm(exact, "fro")
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(approx - exact, "fro") / scale))
    zero_ok = True
    for p in (0, 1, 2, 3):
        for m in range(p + 1, p + 3):
            dim = 4
            h_mat = valid_path("jointly_diagonal", 1, dim, 0.0, 41_000 + p).a.mats[0]
            v = r.standard_normal((dim, dim)) + 1j * r.standard_normal((dim, dim))
            zero_ok = zero_ok and bool(np.all(power_derivative(h_mat, v, p, m, 0.5) == 0))
    _report(
        3,
        "power-derivative vs central differences (p<=6, m<=3, rel 1e-6; m>p exactly 0)",
        worst <= 1e-6 and zero_ok,
        f"worst rel err {worst:.2e}",
    )


def test_criterion_04_full_derivative_vs_fd():
    r = rng(10_004)
    fd_scales = {1: 0.05, 2: 0.05, 3: 0.05, 4: 0.2}
    worst_fd = 0.0
    worst_oracle = 0.0
    for i in range(100):
        n = 1 + i % 3
        m = 1 + (i // 3) % 4
        path, data = valid_path_with_data("jointly_diagonal", n, 5, fd_scales[m], 50_000 + i)
        f = random_poly(n, 5, 51_000 + i)
        t = float(r.uniform(0.1, 0.9))
        exact = full_derivative(f, path, m, t)
        approx = finite_difference(f, path, m, t, fd_step(m))
        scale = np.linalg.norm(exact, "fro")
        if scale > 0:
            worst_fd = max(worst_fd, float(np.linalg.norm(approx - exact, "fro") / scale))
        delta = data.eig_b - data.eig_a
        diag = np.array(
            [
                scalar_path_derivative(f.terms, data.eig_a[:, q], delta[:, q], m, t)
                for q in range(path.dim)
            ]
        )
        oracle = data.unitary @ np.diag(diag) @ data.unitary.conj().T
        gap = float(np.linalg.norm(oracle - exact, "fro") / max(1.0, scale))
        worst_oracle = max(worst_oracle, gap)
    _report(
        4,
        "full derivative vs finite differences (100 draws, rel 1e-5) and diagonal chain rule (1e-9)",
        worst_fd <= 1e-5 and worst_oracle <= 1e-9,
        f"fd {worst_fd:.2e}, oracle {worst_oracle:.2e}",
    )


def test_criterion_05_remainder_identity():
    kinds = ("jointly_diagonal", "circulant", "selfadjoint_diagonal")
    worst = 0.0
    for i in range(200):
        m = 2 + i % 3
        n = 2 + i % 2
        path = valid_path(kinds[i % 3], n, 5, 0.3, 60_000 + i)
        f = random_poly(n, 5, 61_000 + i)
        rep = remainder_check(f, path, m, tol=1e-9)
        worst = max(worst, rep.abs_gap / (1 + abs(rep.lhs_trace)))
        if not rep.passed:
            _report(5, "remainder trace identity", False, f"seed {60_000 + i}, m={m}")
    path = valid_path("jointly_diagonal", 2, 5, 0.4, 62_000)
    f = MultiPoly(2, {(1, 1): 1.0})
    lhs = complex(np.trace(taylor_remainder(f, path, 2)))
    expected = complex(np.trace(path.v[0] @ path.v[1]))
    rep = remainder_check(f, path, 2)
    bilinear_ok = abs(lhs - expected) <= 1e-12 and rep.abs_gap <= 1e-12
    _report(
        5,
        "remainder trace identity (200 draws, m in 2..4, 1e-9 scale; bilinear gap <= 1e-12)",
        worst <= 1e-9 and bilinear_ok,
        f"worst scaled gap {worst:.2e}, bilinear gap {rep.abs_gap:.2e}",
    )


def test_criterion_06_trace_estimate_sound():
    kinds = ("jointly_diagonal", "circulant", "selfadjoint_diagonal")
    total = strict = 0
    sound_failures = []
    max_ratio = 0.0
    t_cycle = (0.0, 0.37, 0.5, 1.0)
    for i in range(500):
        n = 2 + i % 2
        m = 2 + i % 3
        kind = kinds[i % 3]
        dom = DomainKind.cube() if kind == "selfadjoint_diagonal" else DomainKind.torus()
        path = valid_path(kind, n, 4, 0.3, 70_000 + i)
        f = random_poly(n, 4, 71_000 + i)
        t = t_cycle[i % 4]
        for term in enumerate_terms(n, m, max_k=3):
            rep = trace_estimate_check(f, path, term, t, dom)
            if not rep.in_hypothesis:
                continue
            total += 1
            if not rep.pass_sound:
                sound_failures.append((70_000 + i, str(term), m))
            if rep.pass_strict:
                strict += 1
            if rep.ratio is not None:
                max_ratio = max(max_ratio, rep.ratio)
    strict_rate = strict / total if total else 0.0
    _report(
        6,
        "trace estimate sound on 100% of 500 in-hypothesis draws (m in 2..4, k <= 3)",
        not sound_failures and total >= 500,
        f"{total} cases, strict rate {strict_rate:.4f} (informational), max ratio {max_ratio:.4f}",
    )


def test_criterion_07_projector_block_bound():
    r = rng(10_007)
    violations = 0
    for i in range(200):
        m = 2 + i % 2
        dim = int(r.integers(3, 7))
        parts = [
            draw_projector_family(dim, int(r.integers(1, dim + 1)), 80_000 + 10 * i + j)
            for j in range(m)
        ]
        vs = [r.standard_normal((dim, dim)) + 1j * r.standard_normal((dim, dim)) for _ in range(m)]
        rep = hs_block_bound_check(parts, vs)
        if not rep.passed:
            violations += 1
    _report(
        7,
        "projector block bound (200 eigenprojector configurations, m in {2,3})",
        violations == 0,
    )


def test_criterion_08_trace_formula_and_tv_audit():
    kinds = ("jointly_diagonal", "circulant", "selfadjoint_diagonal")
    worst = 0.0
    for i in range(200):
        m = 2 + i % 2
        n = 2 + i % 2
        path = valid_path(kinds[i % 3], n, 4, 0.3, 90_000 + i)
        f = random_poly(n, 4, 91_000 + i)
        rep = trace_formula_check(f, path, m, tol=1e-9)
        worst = max(worst, rep.abs_gap / (1 + abs(rep.lhs)))
        if not rep.passed:
            _report(8, "trace formula", False, f"seed {90_000 + i}, m={m}")
    tv_violations = 0
    tv_cases = 0
    for n, paths in ((2, 4), (3, 2)):
        for i in range(paths):
            path = valid_path("jointly_diagonal", n, 4, 0.3, 95_000 + 10 * n + i)
            for m in (2, 3):
                for term in enumerate_terms(n, m):
                    table = moment_table(term, path, (4,) * n)
                    tv_cases += 1
                    if table.max_abs_entry() > table.tv_bound * (1 + 1e-8) + 1e-300:
                        tv_violations += 1
    _report(
        8,
        "trace formula (200 draws, 1e-9 scale) and tv audit up to degree (4,...,4)",
        worst <= 1e-9 and tv_violations == 0,
        f"worst scaled gap {worst:.2e}, {tv_cases} moment tables",
    )


def test_criterion_09_single_variable_reduction():
    worst = 0.0
    for i in range(100):
        m = 2 + i % 2
        for kind in ("jointly_diagonal", "selfadjoint_diagonal"):
            path = valid_path(kind, 2, 4, 0.3, 100_000 + i)
            g = random_poly(1, 4, 101_000 + i)
            j = 1 + i % 2
            rep = single_variable_reduction(g, j, m, path, tol=1e-10)
            worst = max(worst, rep.abs_gap / (1 + abs(rep.remainder_trace)))
            if not rep.passed:
                _report(9, "single-variable reduction", False, f"seed {100_000 + i} {kind}")
    _report(
        9,
        "single-variable reduction on torus and cube ensembles (100 draws, m in {2,3}, 1e-10)",
        worst <= 1e-10,
        f"worst scaled gap {worst:.2e}",
    )


def test_criterion_10_reproducibility_and_runtime():
    spec = EnsembleSpec("circulant", 2, 5, 0.2, 123_456)
    p1, p2 = draw_path(spec), draw_path(spec)
    bits_ok = all(
        np.array_equal(m1, m2)
        for m1, m2 in zip(p1.a.mats + p1.b.mats + p1.v, p2.a.mats + p2.b.mats + p2.v)
    )
    cfg = RunConfig(seed=99, draws=8, dim=4, n_vars=2)
    r1 = run_suite("remainder", cfg).to_json()
    r2 = run_suite("remainder", cfg).to_json()
    reports_ok = r1 == r2
    elapsed = time.monotonic() - _T0
    _report(
        10,
        "seeded reproducibility and acceptance-suite runtime under 5 minutes",
        bits_ok and reports_ok and elapsed < _TIME_BUDGET_S,
        f"elapsed {elapsed:.0f}s",
    )
