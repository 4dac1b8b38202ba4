import math

import numpy as np
import pytest

from fractalheat.bounds import (
    BoundError,
    EmptyRegimeError,
    EnvelopeForm,
    ReflectionStudy,
    classify_regime,
    evaluate_form,
    fit_envelope_constants,
    form_for,
    refinement_stability,
    relativistic_comparison_reports,
    sandwich_check_f,
    stable_comparison_reports,
)
from fractalheat.kernels import KernelError


@pytest.fixture(scope="module")
def study(gasket, cache):
    return ReflectionStudy.build(gasket, M=1, depth=3, window=2, cache=cache)


class TestForms:
    def test_f_env_at_zero_distance(self, gasket):
        form = form_for(gasket, "f_env")
        t = 0.7
        assert evaluate_form(form, t, 0.0) == pytest.approx(
            t ** (-gasket.hausdorff_dim / gasket.walk_dim)
        )

    def test_stable_form_inner_branch(self, gasket):
        form = form_for(gasket, "stable_form", alpha=0.5)
        t = 2.0
        adw = 0.5 * gasket.walk_dim
        r = 0.5 * t ** (1.0 / adw)  # inside the near branch
        assert evaluate_form(form, t, r) == pytest.approx(t ** (-gasket.hausdorff_dim / adw))

    def test_h_env_flat_branch_exact(self, gasket):
        # from the crossover on, both max(., 1) branches collapse, so the
        # shape is exactly L^(-dM) * e^(-c) independently of t
        form = form_for(gasket, "h_env", M=1, c=0.8)
        lmdw = 5.0
        val = evaluate_form(form, 2.0 * lmdw, 0.0)
        assert val == pytest.approx(
            2.0 ** (-gasket.hausdorff_dim) * math.exp(-0.8), rel=1e-14
        )
        assert evaluate_form(form, 7.0 * lmdw, 0.0) == val
        # below the crossover the shape strictly exceeds its flat value
        assert evaluate_form(form, 0.5 * lmdw, 0.0) != val

    def test_f_env_strictly_decreasing_in_r(self, gasket):
        form = form_for(gasket, "f_env", c=0.7)
        rs = np.linspace(0, 3, 40)
        vals = evaluate_form(form, 1.3, rs)
        assert np.all(np.diff(vals) < 0)

    def test_invalid_combinations_rejected(self, gasket):
        with pytest.raises(BoundError):
            form_for(gasket, "stable_form")  # alpha missing
        with pytest.raises(BoundError):
            form_for(gasket, "flat")  # M missing
        with pytest.raises(BoundError):
            form_for(gasket, "no-such-form")
        with pytest.raises(BoundError):
            evaluate_form(form_for(gasket, "f_env"), -1.0, 0.0)


class TestRegimeClassification:
    def test_stable_boundary_is_flat(self, gasket):
        crossover = 5.0**0.5  # alpha=1/2, M=1
        assert classify_regime(gasket, "stable", crossover, 0.3, 1, 0.5) == "flat"
        assert classify_regime(gasket, "stable", crossover * 0.999, 0.3, 1, 0.5) == "near"

    def test_relativistic_cases(self, gasket):
        assert classify_regime(gasket, "relativistic", 0.5, 2.0, 1, 0.5) == "regime2"
        assert classify_regime(gasket, "relativistic", 2.0, 1.5, 1, 0.5) == "regime1"
        assert classify_regime(gasket, "relativistic", 0.5, 0.5, 1, 0.5) == "regime3"
        assert classify_regime(gasket, "relativistic", 5.0, 0.5, 1, 0.5) == "flat"

    def test_unknown_process(self, gasket):
        with pytest.raises(BoundError):
            classify_regime(gasket, "cauchy", 1.0, 1.0, 0, 0.5)


class TestEnvelopeFitting:
    def test_identical_kernel_and_form_spread_one(self, gasket):
        rng = np.random.default_rng(0)
        form = form_for(gasket, "relativistic_regime_2", c=1.3)
        ts = rng.uniform(0.1, 0.9, 300)
        rs = rng.uniform(1.0, 2.0, 300)
        kern = evaluate_form(form, ts, rs)
        report = fit_envelope_constants(kern, ts, rs, form.with_constant(1.0))
        assert report.spread == pytest.approx(1.0, abs=1e-4)
        assert report.fitted_c == pytest.approx(1.3, abs=1e-3)
        assert report.extras["fit_slope_lsq"] == pytest.approx(1.3, abs=1e-6)
        assert report.fit_r2 == pytest.approx(1.0, abs=1e-9)

    def test_empty_grid_rejected(self, gasket):
        form = form_for(gasket, "f_env")
        with pytest.raises(EmptyRegimeError):
            fit_envelope_constants(np.array([]), np.array([]), np.array([]), form)

    def test_misaligned_grids_rejected(self, gasket):
        form = form_for(gasket, "f_env")
        with pytest.raises(BoundError):
            fit_envelope_constants(np.ones(3), np.ones(2), np.ones(3), form)

    def test_clamp_keeps_ratios_finite(self, gasket):
        form = form_for(gasket, "flat", M=0)
        kern = np.array([0.0, 1e-20, 1.0])
        report = fit_envelope_constants(
            kern, np.ones(3), np.zeros(3), form, threshold=1e20
        )
        assert math.isfinite(report.spread)
        assert report.min_ratio > 0


class TestComparisonReports:
    def test_stable_reports_pass(self, study):
        reports = stable_comparison_reports(study, alpha=0.5, n_times=8)
        assert reports["near"].passed
        assert reports["flat"].passed
        assert reports["near"].min_ratio >= 1.0 - 1e-9  # folding domination
        assert reports["near"].extras["truncation_bracket"] < 1.0

    def test_relativistic_reports_pass(self, study):
        reports = relativistic_comparison_reports(study, alpha=0.5, m=1.0, n_times=8)
        for name in ("flat", "domination", "regime1", "regime2", "regime3"):
            assert reports[name].passed, f"{name}: {reports[name].to_dict()}"
        assert reports["domination"].extras["max_violation"] <= 1e-8

    def test_refinement_stability(self, gasket, cache, study):
        fine = ReflectionStudy.build(gasket, M=1, depth=4, window=2, cache=cache)
        coarse_reports = stable_comparison_reports(study, alpha=0.5, n_times=6)
        fine_reports = stable_comparison_reports(fine, alpha=0.5, n_times=6)
        for name in ("near", "flat"):
            assert refinement_stability(coarse_reports[name], fine_reports[name]) <= 0.5

    def test_bracket_gate_raises(self, study):
        with pytest.raises(KernelError, match="window"):
            stable_comparison_reports(study, alpha=0.5, n_times=4, bracket_tol=0.01)

    def test_window_must_exceed_m(self, gasket, cache):
        with pytest.raises(BoundError):
            ReflectionStudy.build(gasket, M=1, depth=2, window=1, cache=cache)

    def test_metric_selection(self, study):
        geo = study.metric("geodesic")
        euc = study.metric("euclidean")
        ratio = geo[euc > 0] / euc[euc > 0]
        assert ratio.min() >= 1.0 - 1e-9
        assert ratio.max() <= 2.0 + 1e-9
        with pytest.raises(BoundError):
            study.metric("resistance")

    def test_euclidean_metric_inflates_regime3(self, study):
        geo = relativistic_comparison_reports(
            study, alpha=0.5, m=1.0, n_times=4, metric="geodesic"
        )["regime3"]
        euc = relativistic_comparison_reports(
            study, alpha=0.5, m=1.0, n_times=4, metric="euclidean"
        )["regime3"]
        assert euc.spread > geo.spread


class TestSandwich:
    def test_bounds_and_corner_equalities(self, gasket):
        report = sandwich_check_f(gasket, 0.5, 2.0, 1.0, M=1)
        assert report.passed
        assert report.upper_equality_error <= 1e-12
        assert report.prefactor_equality_error <= 1e-12
        assert report.exponential_equality_error <= 1e-12
        assert report.lower_bound <= report.min_seen
        assert report.max_seen <= report.upper_bound + 1e-12

    def test_degenerate_point_ratio_one(self, gasket):
        report = sandwich_check_f(gasket, 1.0, 1.0, 1.0, M=0)
        assert report.max_seen == pytest.approx(1.0, abs=1e-12)
        assert report.upper_bound == pytest.approx(1.0, abs=1e-12)

    def test_interval_order_enforced(self, gasket):
        with pytest.raises(BoundError):
            sandwich_check_f(gasket, 2.0, 1.0, 1.0, M=0)
        with pytest.raises(BoundError):
            sandwich_check_f(gasket, 0.5, 1.0, -1.0, M=0)

    @pytest.mark.parametrize("c1,c2,c3,M", [(0.3, 1.7, 0.8, 0), (2.0, 3.0, 1.0, 1), (0.9, 1.1, 2.5, 2)])
    def test_various_parameters(self, gasket, c1, c2, c3, M):
        report = sandwich_check_f(gasket, c1, c2, c3, M=M)
        assert report.passed
