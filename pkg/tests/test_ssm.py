import json
from math import factorial

import numpy as np
import pytest

from traceshift import (
    DerivTermSpec,
    EnsembleSpec,
    MomentTable,
    MultiPoly,
    SSMFunctional,
    draw_path,
    moment_table,
    phi,
    single_variable_reduction,
    trace_formula_check,
    tv_bound,
)

from _helpers import random_poly, valid_path


class TestPhi:
    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_single_coordinate_closed_form(self, m):
        path = valid_path("jointly_diagonal", 1, 4, 0.4, 400 + m)
        term = DerivTermSpec(((1, m),))
        g = MultiPoly.constant(1, 1.0)
        expected = complex(np.trace(np.linalg.matrix_power(path.v[0], m))) / factorial(m)
        got = phi(term, g, path)
        assert abs(got - expected) <= 1e-12 * (1 + abs(expected))

    def test_zero_perturbation(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.0, 410)
        term = DerivTermSpec(((1, 1), (2, 1)))
        for seed in (411, 412):
            g = random_poly(2, 3, seed)
            assert abs(phi(term, g, path)) <= 1e-14

    def test_linearity(self):
        path = valid_path("circulant", 2, 5, 0.3, 413)
        term = DerivTermSpec(((1, 2),))
        g1, g2 = random_poly(2, 3, 414), random_poly(2, 3, 415)
        a, b = 1.3 - 0.7j, -0.4 + 0.2j
        lhs = phi(term, a * g1 + b * g2, path)
        rhs = a * phi(term, g1, path) + b * phi(term, g2, path)
        assert abs(lhs - rhs) <= 1e-11 * (1 + abs(rhs))

    def test_functional_wrapper(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.3, 416)
        term = DerivTermSpec(((2, 2),))
        func = SSMFunctional(term, path)
        g = random_poly(2, 2, 417)
        assert func(g) == phi(term, g, path)
        assert func.tv_bound == tv_bound(term, path)

    def test_arity_mismatch(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.3, 418)
        with pytest.raises(ValueError):
            phi(DerivTermSpec(((1, 2),)), MultiPoly(1, {(0,): 1.0}), path)


class TestMomentTable:
    def test_zero_perturbation_all_zero(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.0, 420)
        table = moment_table(DerivTermSpec(((1, 1), (2, 1))), path, (2, 2))
        assert len(table.entries) == 9
        assert table.max_abs_entry() <= 1e-14
        assert table.tv_bound == 0.0

    def test_single_variable_zeroth_moment(self):
        path = valid_path("jointly_diagonal", 1, 5, 0.4, 421)
        m = 3
        table = moment_table(DerivTermSpec(((1, m),)), path, (1,))
        expected = complex(np.trace(np.linalg.matrix_power(path.v[0], m))) / factorial(m)
        assert abs(table.entries[(0,)] - expected) <= 1e-12 * (1 + abs(expected))

    def test_bilinear_zeroth_moment(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.4, 422)
        table = moment_table(DerivTermSpec(((1, 1), (2, 1))), path, (0, 0))
        expected = complex(np.trace(path.v[0] @ path.v[1])) / 2.0
        assert abs(table.entries[(0, 0)] - expected) <= 1e-12 * (1 + abs(expected))

    def test_tv_audit_on_torus(self):
        for i in range(5):
            path = valid_path("jointly_diagonal", 2, 4, 0.3, 4300 + i)
            for coords in (((1, 2),), ((1, 1), (2, 1)), ((2, 3),)):
                table = moment_table(DerivTermSpec(coords), path, (3, 3))
                assert table.max_abs_entry() <= table.tv_bound * (1 + 1e-8) + 1e-300

    def test_json_schema(self):
        path = valid_path("jointly_diagonal", 2, 3, 0.2, 424)
        table = moment_table(DerivTermSpec(((1, 1), (2, 1))), path, (1, 1))
        payload = table.to_json()
        assert payload["term"] == [[1, 1], [2, 1]]
        assert payload["m"] == 2
        assert isinstance(payload["tv_bound"], float)
        assert [e["a"] for e in payload["entries"]] == [[0, 0], [0, 1], [1, 0], [1, 1]]
        assert json.loads(json.dumps(payload)) == payload

    def test_degree_cap_validation(self):
        path = valid_path("jointly_diagonal", 2, 3, 0.2, 425)
        with pytest.raises(ValueError):
            moment_table(DerivTermSpec(((1, 1), (2, 1))), path, (2,))


class TestTraceFormula:
    def test_bilinear_both_sides(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.4, 430)
        rep = trace_formula_check(MultiPoly(2, {(1, 1): 1.0}), path, 2)
        expected = complex(np.trace(path.v[0] @ path.v[1]))
        assert rep.passed
        assert abs(rep.lhs - expected) <= 1e-12 * (1 + abs(expected))
        assert abs(rep.rhs - expected) <= 1e-12 * (1 + abs(expected))

    def test_order_above_degree(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.3, 431)
        f = random_poly(2, 2, 432)
        rep = trace_formula_check(f, path, 3)
        assert abs(rep.lhs) <= 1e-13 and abs(rep.rhs) <= 1e-13
        assert rep.passed

    @pytest.mark.parametrize("kind", ["jointly_diagonal", "circulant", "selfadjoint_diagonal"])
    def test_random_batch(self, kind):
        for i in range(10):
            path = draw_path(EnsembleSpec(kind, 2, 5, 0.3, 4400 + i))
            f = random_poly(2, 4, 4500 + i)
            rep = trace_formula_check(f, path, 2 + i % 2)
            assert rep.in_hypothesis
            assert rep.passed, rep


class TestReduction:
    @pytest.mark.parametrize("m", [2, 3])
    def test_constant_closed_form(self, m):
        path = valid_path("jointly_diagonal", 2, 4, 0.4, 440 + m)
        rep = single_variable_reduction(MultiPoly.constant(1, 1.0), 1, m, path)
        expected = complex(np.trace(np.linalg.matrix_power(path.v[0], m))) / factorial(m)
        assert abs(rep.phi_value - expected) <= 1e-12 * (1 + abs(expected))
        assert rep.passed

    def test_zero_perturbation(self):
        path = valid_path("selfadjoint_diagonal", 2, 4, 0.0, 442)
        rep = single_variable_reduction(random_poly(1, 3, 443), 2, 2, path)
        assert rep.phi_value == 0j
        assert rep.remainder_trace == 0j
        assert rep.passed

    @pytest.mark.parametrize("kind", ["jointly_diagonal", "selfadjoint_diagonal"])
    def test_random_batch(self, kind):
        for i in range(10):
            path = draw_path(EnsembleSpec(kind, 2, 4, 0.25, 4600 + i))
            g = random_poly(1, 4, 4700 + i)
            j = 1 + i % 2
            rep = single_variable_reduction(g, j, 2 + i % 2, path)
            assert rep.passed, rep

    def test_rejects_multivariate_g(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.2, 450)
        with pytest.raises(ValueError):
            single_variable_reduction(MultiPoly(2, {(1, 1): 1.0}), 1, 2, path)

    def test_rejects_out_of_range_coordinate(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.2, 451)
        with pytest.raises(ValueError):
            single_variable_reduction(MultiPoly(1, {(1,): 1.0}), 3, 2, path)
