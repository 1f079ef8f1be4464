"""Frequency planning: budget decomposition, the batch-quantile solver, the
two-moment (Cantelli) benchmark, and pricing of either plan under the truth."""

import math

import numpy as np
import pytest

import satsched as ss
from satsched.errors import (DomainError, InfeasibleBudgetError,
                             InfeasibleConstraintError)

RHO = 0.95


def _batch_cdf(gt, t_proc, n_img, f_hz):
    # reliability of the true batch law at a candidate clock
    return float(ss.gamma_cdf(t_proc, n_img * gt.shape_at(f_hz),
                              gt.scale_at(f_hz)))


# ---------------------------------------------------------------- budget

def test_budget_decomposes_realized_legs():
    budget = ss.processing_budget(0.5, 0.010, 0.0963, 0.0057)
    assert budget.t_proc_s == pytest.approx(0.388, rel=1e-12)
    assert budget.t_proc_s == (budget.t_e2e_s - budget.t_ul_s
                               - budget.t_isl_s - budget.t_dl_s)


def test_budget_with_zero_legs_is_whole_deadline():
    assert ss.processing_budget(0.5, 0.0, 0.0, 0.0).t_proc_s == 0.5


def test_uplink_consuming_deadline_is_rejected():
    with pytest.raises(InfeasibleBudgetError):
        ss.processing_budget(0.5, 0.5, 0.0, 0.0)


def test_negative_leg_rejected():
    with pytest.raises(DomainError):
        ss.processing_budget(0.5, -0.01, 0.0, 0.0)


def test_solver_rejects_spent_budget(gt_nano, nano):
    # LatencyBudget itself allows t_proc <= 0; the solvers must not
    spent = ss.LatencyBudget(t_e2e_s=0.1, t_ul_s=0.1, t_isl_s=0.0, t_dl_s=0.0)
    with pytest.raises(InfeasibleBudgetError):
        ss.solve_optimal_frequency(gt_nano, spent, 1, RHO, nano)
    with pytest.raises(InfeasibleBudgetError):
        ss.solve_cantelli_frequency(
            ss.MomentModel.from_shape_scale_model(gt_nano), spent, 1, RHO, nano)


# ---------------------------------------------------------------- gamma solver

def test_vacuous_constraint_returns_f_min(gt_nano, nano, zenith_budget):
    sol = ss.solve_optimal_frequency(gt_nano, zenith_budget, 1, 1e-9, nano)
    assert sol.frequency_hz == nano.f_min_hz
    assert not sol.non_monotone


def test_solution_is_tight_at_quantile(gt_nano, nano, zenith_budget):
    """The returned clock meets the quantile and a hair less does not."""
    n_img = 4
    sol = ss.solve_optimal_frequency(gt_nano, zenith_budget, n_img, RHO, nano)
    t_proc = zenith_budget.t_proc_s
    assert _batch_cdf(gt_nano, t_proc, n_img, sol.frequency_hz) >= RHO
    delta = 1e-4 * (nano.f_max_hz - nano.f_min_hz)
    assert sol.frequency_hz - delta > nano.f_min_hz
    assert _batch_cdf(gt_nano, t_proc, n_img, sol.frequency_hz - delta) < RHO


def test_predicted_reliability_matches_cdf(gt_agx, agx, zenith_budget):
    sol = ss.solve_optimal_frequency(gt_agx, zenith_budget, 6, RHO, agx)
    direct = _batch_cdf(gt_agx, zenith_budget.t_proc_s, 6, sol.frequency_hz)
    assert sol.predicted_reliability == pytest.approx(direct, rel=1e-12)


def test_frequency_nondecreasing_in_batch_size(gt_nano, nano, zenith_budget):
    freqs = [ss.solve_optimal_frequency(gt_nano, zenith_budget, n, RHO, nano).frequency_hz
             for n in range(1, 8)]
    assert all(b >= a for a, b in zip(freqs, freqs[1:]))
    assert freqs[-1] > freqs[0]


def test_frequency_nonincreasing_in_budget(gt_nano, nano, zenith_budget):
    """A looser deadline never forces a higher clock."""
    freqs = []
    for t_e2e in (0.47, 0.5, 0.55, 0.6, 0.7):
        budget = ss.processing_budget(t_e2e, zenith_budget.t_ul_s,
                                      zenith_budget.t_isl_s,
                                      zenith_budget.t_dl_s)
        freqs.append(ss.solve_optimal_frequency(gt_nano, budget, 4, RHO,
                                                nano).frequency_hz)
    assert all(b <= a for a, b in zip(freqs, freqs[1:]))
    assert freqs[-1] < freqs[0]


def test_infeasible_reports_achievable_reliability(gt_nano, nano, zenith_budget):
    with pytest.raises(InfeasibleConstraintError) as exc_info:
        ss.solve_optimal_frequency(gt_nano, zenith_budget, 20, RHO, nano)
    achievable = exc_info.value.achievable_reliability
    assert 0.0 <= achievable < RHO
    at_fmax = _batch_cdf(gt_nano, zenith_budget.t_proc_s, 20, nano.f_max_hz)
    assert achievable == pytest.approx(at_fmax, rel=1e-9)


def test_ground_truth_plans_are_monotone(gt_nano, gt_agx, nano, agx,
                                         zenith_budget):
    for gt, platform in ((gt_nano, nano), (gt_agx, agx)):
        sol = ss.solve_optimal_frequency(gt, zenith_budget, 3, RHO, platform)
        assert not sol.non_monotone


def test_invalid_batch_and_threshold_rejected(gt_nano, nano, zenith_budget):
    with pytest.raises(DomainError):
        ss.solve_optimal_frequency(gt_nano, zenith_budget, 0, RHO, nano)
    with pytest.raises(DomainError):
        ss.solve_optimal_frequency(gt_nano, zenith_budget, 2.5, RHO, nano)
    for rho in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            ss.solve_optimal_frequency(gt_nano, zenith_budget, 2, rho, nano)


class _BrokenFit:
    """A fit gone wrong: nonpositive shape everywhere."""

    def shape_at(self, f_hz):
        return -1.0 * np.ones_like(np.asarray(f_hz, dtype=np.float64))

    def scale_at(self, f_hz):
        return np.ones_like(np.asarray(f_hz, dtype=np.float64))


def test_broken_model_is_infeasible_not_crash(nano, zenith_budget):
    with pytest.raises(InfeasibleConstraintError) as exc_info:
        ss.solve_optimal_frequency(_BrokenFit(), zenith_budget, 2, RHO, nano)
    assert exc_info.value.achievable_reliability == 0.0


# ---------------------------------------------------------------- cantelli

def _work_per_hz(platform):
    # seconds * Hz of per-image compute: mean(f) = A/f + mu_sync
    return platform.mu_c * platform.work_flops / (platform.n_cores
                                                  * platform.n_flops)


def test_zero_variance_reduces_to_mean_crossing(nano, zenith_budget):
    """With no dispersion the bound degenerates to the mean-deadline
    crossing, which has a closed form on the 1/f mean curve."""
    n_img = 4
    a_coef = _work_per_hz(nano)
    moments = ss.MomentModel(
        mean_fn=lambda f: a_coef / np.asarray(f, dtype=np.float64)
        + nano.mu_sync_s,
        variance_fn=lambda f: np.zeros_like(np.asarray(f, dtype=np.float64)))
    sol = ss.solve_cantelli_frequency(moments, zenith_budget, n_img, RHO, nano)
    expected = n_img * a_coef / (zenith_budget.t_proc_s
                                 - n_img * nano.mu_sync_s)
    assert nano.f_min_hz < expected < nano.f_max_hz  # interior crossing
    assert sol.frequency_hz == pytest.approx(expected, rel=1e-6)


def test_agrees_with_fixed_point_closed_form(gt_nano, nano, zenith_budget):
    """Solving the bound on the frequency axis matches the closed-form
    frequency with the dispersion term frozen at the solution (fixed point)."""
    n_img = 3
    moments = ss.MomentModel.from_shape_scale_model(gt_nano)
    sol = ss.solve_cantelli_frequency(moments, zenith_budget, n_img, RHO, nano)

    a_coef = _work_per_hz(nano)
    k = math.sqrt(RHO / (1.0 - RHO))
    t_proc = zenith_budget.t_proc_s
    f = nano.f_max_hz
    for _ in range(200):
        spread = k * math.sqrt(n_img * moments.variance_at(f))
        f_next = n_img * a_coef / (t_proc - n_img * nano.mu_sync_s - spread)
        if abs(f_next - f) <= 1e-13 * f:
            f = f_next
            break
        f = f_next
    assert sol.frequency_hz == pytest.approx(f, rel=1e-2)


def test_bound_dominates_exact_quantile(gt_nano, gt_agx, nano, agx,
                                        zenith_budget):
    """Trusting two moments can only over-provision relative to knowing the
    whole law with those moments."""
    for gt, platform, n_max in ((gt_nano, nano, 6), (gt_agx, agx, 12)):
        moments = ss.MomentModel.from_shape_scale_model(gt)
        for n_img in range(1, n_max + 1):
            f_gamma = ss.solve_optimal_frequency(
                gt, zenith_budget, n_img, RHO, platform).frequency_hz
            f_cant = ss.solve_cantelli_frequency(
                moments, zenith_budget, n_img, RHO, platform).frequency_hz
            assert f_cant >= f_gamma


def test_moment_bound_score_at_solution(gt_nano, nano, zenith_budget):
    n_img = 3
    moments = ss.MomentModel.from_shape_scale_model(gt_nano)
    sol = ss.solve_cantelli_frequency(moments, zenith_budget, n_img, RHO, nano)
    m = n_img * moments.mean_at(sol.frequency_hz)
    v = n_img * moments.variance_at(sol.frequency_hz)
    slack = zenith_budget.t_proc_s - m
    assert slack > 0.0
    score = 1.0 - v / (v + slack * slack)
    assert sol.predicted_reliability == pytest.approx(score, rel=1e-12)
    assert sol.predicted_reliability >= RHO


def test_mean_above_budget_is_infeasible(nano, zenith_budget):
    a_coef = _work_per_hz(nano)
    moments = ss.MomentModel(
        mean_fn=lambda f: a_coef / np.asarray(f, dtype=np.float64)
        + nano.mu_sync_s,
        variance_fn=lambda f: np.zeros_like(np.asarray(f, dtype=np.float64)))
    # 40 * mu_sync alone exceeds t_proc ~ 0.489 s, so no clock can help
    with pytest.raises(InfeasibleConstraintError) as exc_info:
        ss.solve_cantelli_frequency(moments, zenith_budget, 40, RHO, nano)
    assert exc_info.value.achievable_reliability == 0.0


# ---------------------------------------------------------------- pricing

def test_gamma_choice_meets_threshold_under_truth(gt_nano, nano, zenith_budget):
    sel = ss.select_and_price("gamma", gt_nano, zenith_budget, 3, RHO, nano)
    assert sel.method == "gamma"
    assert sel.reliability >= RHO
    assert sel.energy_j > 0.0


def test_cantelli_choice_never_cheaper(gt_nano, nano, zenith_budget):
    for n_img in range(1, 7):
        gam = ss.select_and_price("gamma", gt_nano, zenith_budget, n_img,
                                  RHO, nano)
        cant = ss.select_and_price("cantelli", gt_nano, zenith_budget, n_img,
                                   RHO, nano)
        assert cant.frequency_hz >= gam.frequency_hz
        assert cant.energy_j >= gam.energy_j
        assert cant.reliability >= gam.reliability


def test_midpoint_overprovision_cost(gt_nano, nano, zenith_budget):
    # mid-range batch: the two-moment plan pays a clear energy premium
    gam = ss.select_and_price("gamma", gt_nano, zenith_budget, 3, RHO, nano)
    cant = ss.select_and_price("cantelli", gt_nano, zenith_budget, 3, RHO, nano)
    ratio = cant.energy_j / gam.energy_j
    assert ratio > 1.5
    assert ratio < 3.0


def test_energy_grows_with_batch_size(gt_nano, nano, zenith_budget):
    energies = [ss.select_and_price("gamma", gt_nano, zenith_budget, n, RHO,
                                    nano).energy_j
                for n in range(1, 7)]
    assert all(b > a for a, b in zip(energies, energies[1:]))


class _Pessimist:
    """Planner belief with the truth's shape but a 20% inflated scale."""

    def __init__(self, truth):
        self._truth = truth

    def shape_at(self, f_hz):
        return self._truth.shape_at(f_hz)

    def scale_at(self, f_hz):
        return 1.2 * np.asarray(self._truth.scale_at(f_hz), dtype=np.float64)


def test_pricing_ignores_planner_model(gt_nano, nano, zenith_budget):
    """Whatever the planner believed, cost and reliability are evaluated
    under the truth at the chosen clock."""
    n_img = 3
    base = ss.select_and_price("gamma", gt_nano, zenith_budget, n_img, RHO,
                               nano)
    sel = ss.select_and_price("gamma", gt_nano, zenith_budget, n_img, RHO,
                              nano, model=_Pessimist(gt_nano))
    assert sel.frequency_hz > base.frequency_hz  # inflated belief, higher clock

    f_hz = sel.frequency_hz
    law = ss.batch_law(ss.GammaLaw(gt_nano.shape_at(f_hz),
                                   gt_nano.scale_at(f_hz)), n_img)
    assert sel.energy_j == pytest.approx(ss.energy(f_hz, nano, law), rel=1e-12)
    assert sel.reliability == pytest.approx(
        float(ss.gamma_cdf(zenith_budget.t_proc_s, law.shape, law.scale)),
        rel=1e-12)


def test_unknown_method_rejected(gt_nano, nano, zenith_budget):
    with pytest.raises(DomainError):
        ss.select_and_price("median", gt_nano, zenith_budget, 2, RHO, nano)
