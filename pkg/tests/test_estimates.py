import numpy as np
import pytest

from traceshift import (
    DerivTermSpec,
    DomainKind,
    MultiPoly,
    SweepConfig,
    adversarial_path,
    build_path,
    certify_tuple,
    draw_projector_family,
    estimate_sweep,
    hs_block_bound_check,
    trace_estimate_check,
)

from _helpers import random_matrix, random_poly, rng, valid_path


class TestTraceEstimate:
    def test_diagonal_hand_case(self):
        eps = 0.01
        a = certify_tuple([np.zeros((2, 2))])
        b = certify_tuple([np.diag([eps, -eps])])
        path = build_path(a, b)
        f = MultiPoly(1, {(2,): 1.0})
        term = DerivTermSpec(((1, 2),))
        rep = trace_estimate_check(f, path, term, 0.0, DomainKind.torus())
        # d^2/ds^2 (sV)^2 = 2V^2, so |tr| = 2 * 2 eps^2
        assert rep.lhs == pytest.approx(4 * eps**2, rel=1e-12)
        assert rep.rhs_factor == pytest.approx(2 * eps**2, rel=1e-12)
        assert rep.coeff_upper == pytest.approx(2.0, rel=1e-12)
        assert rep.grid_sup == pytest.approx(2.0, rel=1e-12)
        # sharp case: equality within the slack guards
        assert rep.pass_sound and rep.pass_strict
        assert rep.ratio == pytest.approx(1.0, rel=1e-10)

    def test_zero_perturbation(self):
        path = valid_path("jointly_diagonal", 2, 4, 0.0, 300)
        f = random_poly(2, 4, 301)
        rep = trace_estimate_check(f, path, DerivTermSpec(((1, 1), (2, 1))), 0.5, DomainKind.torus())
        assert rep.lhs == 0.0
        assert rep.pass_sound and rep.pass_strict

    @pytest.mark.parametrize("kind,dom", [
        ("jointly_diagonal", DomainKind.torus()),
        ("circulant", DomainKind.torus()),
        ("selfadjoint_diagonal", DomainKind.cube()),
    ])
    def test_batch_sound(self, kind, dom):
        from traceshift import EnsembleSpec, draw_path, enumerate_terms

        for i in range(10):
            path = draw_path(EnsembleSpec(kind, 2, 5, 0.3, 3000 + i))
            f = random_poly(2, 4, 3100 + i)
            m = 2 + i % 3
            for term in enumerate_terms(2, m):
                rep = trace_estimate_check(f, path, term, (i % 5) / 4.0, dom)
                assert rep.in_hypothesis
                assert rep.pass_sound

    def test_out_of_hypothesis_flag(self):
        path = adversarial_path("nonnormal", n=2, dim=5, seed=7)
        f = random_poly(2, 4, 310)
        rep = trace_estimate_check(f, path, DerivTermSpec(((1, 2),)), 0.5, DomainKind.torus())
        assert not rep.in_hypothesis
        assert np.isfinite(rep.lhs)


class TestHSBlockBound:
    def test_trivial_partition_cauchy_schwarz(self):
        r = rng(320)
        v1, v2 = random_matrix(r, 5), random_matrix(r, 5)
        rep = hs_block_bound_check([[np.eye(5)], [np.eye(5)]], [v1, v2])
        assert rep.combos == 1
        assert rep.total == pytest.approx(abs(np.trace(v1 @ v2)))
        assert rep.passed

    def test_rank_one_diagonal_scalar_oracle(self):
        r = rng(321)
        d1 = r.standard_normal(4) + 1j * r.standard_normal(4)
        d2 = r.standard_normal(4) + 1j * r.standard_normal(4)
        eis = [np.diag(row) for row in np.eye(4)]
        rep = hs_block_bound_check([eis, eis], [np.diag(d1), np.diag(d2)])
        expected = float(np.abs(d1 * d2).sum())
        assert rep.total == pytest.approx(expected, rel=1e-12)
        assert rep.passed  # scalar Cauchy-Schwarz

    def test_batch_m3(self):
        r = rng(322)
        for i in range(20):
            dim = 5
            parts = [draw_projector_family(dim, int(r.integers(1, dim + 1)), 4000 + 10 * i + j) for j in range(3)]
            vs = [random_matrix(r, dim) for _ in range(3)]
            rep = hs_block_bound_check(parts, vs)
            assert rep.passed

    def test_rejects_non_resolution(self):
        bad = [np.eye(3) * 0.5]
        with pytest.raises(ValueError):
            hs_block_bound_check([bad, bad], [np.eye(3), np.eye(3)])

    def test_rejects_single_perturbation(self):
        with pytest.raises(ValueError):
            hs_block_bound_check([[np.eye(2)]], [np.eye(2)])


class TestSweep:
    def test_empty(self):
        report = estimate_sweep(SweepConfig(draws=0))
        assert report.total == 0
        assert report.to_json()["total"] == 0

    def test_smoke_all_sound(self):
        import time

        cfg = SweepConfig(draws=10, dim=6, n_vars=2, m_values=(2, 3), max_total_degree=3,
                          t_values=(0.0, 1.0), master_seed=5)
        start = time.monotonic()
        report = estimate_sweep(cfg)
        assert time.monotonic() - start < 5.0
        assert report.total > 0
        assert report.all_sound
        assert report.max_ratio <= 1.0 + 1e-8
        assert not report.out_of_hypothesis

    def test_adversarial_segregated(self):
        cfg = SweepConfig(draws=10, dim=4, n_vars=2, m_values=(2,), max_total_degree=3,
                          t_values=(0.5,), master_seed=6, include_adversarial=True)
        report = estimate_sweep(cfg)
        assert report.out_of_hypothesis  # adversarial cases land here
        kinds = {rec["ensemble"] for rec in report.out_of_hypothesis}
        assert any(k.startswith("adversarial_") for k in kinds)
        assert report.all_sound  # in-hypothesis cases still pass

    def test_general_trace_flag_gates_orders(self):
        cfg = SweepConfig(draws=6, dim=4, n_vars=2, m_values=(2, 3), max_total_degree=3,
                          t_values=(0.5,), master_seed=7, general_trace=True)
        report = estimate_sweep(cfg)
        assert all(rec["m"] == 2 for rec in report.cases if rec["theorem_backed"])
        assert any(rec["m"] == 3 for rec in report.out_of_hypothesis)
        assert report.all_sound

    def test_threads_deterministic(self):
        cfg1 = SweepConfig(draws=6, dim=4, n_vars=2, m_values=(2,), t_values=(0.5,), master_seed=8)
        cfg2 = SweepConfig(draws=6, dim=4, n_vars=2, m_values=(2,), t_values=(0.5,), master_seed=8, threads=4)
        r1, r2 = estimate_sweep(cfg1), estimate_sweep(cfg2)
        assert r1.cases == r2.cases

    def test_json_schema_keys(self):
        report = estimate_sweep(SweepConfig(draws=3, dim=3, n_vars=2, m_values=(2,), t_values=(0.5,)))
        payload = report.to_json()
        assert set(payload) == {
            "schema", "total", "passed_sound", "passed_strict", "max_ratio",
            "failures", "out_of_hypothesis_total",
        }

    def test_validation(self):
        with pytest.raises(ValueError):
            estimate_sweep(SweepConfig(draws=-1))
        with pytest.raises(ValueError):
            estimate_sweep(SweepConfig(m_values=(0,)))
