"""Frequency planning under a probabilistic processing deadline.

Given the end-to-end budget minus the realized communication legs, pick the
lowest GPU clock whose batch execution time meets the deadline with
probability at least rho_th. Two planners share one solver skeleton:

* the Gamma planner evaluates the exact batch Gamma CDF of a fitted or
  ground-truth frequency model;
* the Cantelli planner only trusts the first two moments and applies the
  one-sided Chebyshev (Cantelli) tail bound, which over-provisions.

Both scan a frequency grid for the lowest feasible cell and bisect the
feasibility boundary; neither assumes the constraint is monotone in f, since
polynomial shape/scale fits need not be.
"""

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .compute import Platform, batch_law, energy
from .errors import (DomainError, InfeasibleBudgetError,
                     InfeasibleConstraintError)
from .numerics import GammaLaw, gamma_cdf

GRID_POINTS_DEFAULT = 2048
# bisection stops when the bracket shrinks below this fraction of the span;
# well under the 1e-4-span tightness that callers verify
_BISECT_REL_TOL = 1e-9


@dataclass(frozen=True)
class LatencyBudget:
    """End-to-end deadline split into communication legs and compute slack.

    All legs are realized (deterministic) values; the remaining processing
    budget is what the planner may spend on GPU execution.
    """

    t_e2e_s: float
    t_ul_s: float
    t_isl_s: float
    t_dl_s: float

    def __post_init__(self):
        for field in ("t_e2e_s", "t_ul_s", "t_isl_s", "t_dl_s"):
            v = float(getattr(self, field))
            if not math.isfinite(v) or v < 0.0:
                raise DomainError(f"{field} must be >= 0 and finite, got {v!r}")

    @property
    def t_proc_s(self) -> float:
        return self.t_e2e_s - self.t_ul_s - self.t_isl_s - self.t_dl_s


def processing_budget(t_e2e_s: float, t_ul_s: float, t_isl_s: float,
                      t_dl_s: float) -> LatencyBudget:
    """Assemble the budget, rejecting it when nothing is left for compute."""
    budget = LatencyBudget(t_e2e_s=float(t_e2e_s), t_ul_s=float(t_ul_s),
                           t_isl_s=float(t_isl_s), t_dl_s=float(t_dl_s))
    if budget.t_proc_s <= 0.0:
        raise InfeasibleBudgetError(
            f"communication legs consume the whole deadline: "
            f"t_proc = {budget.t_proc_s:.6g} s <= 0")
    return budget


@dataclass(frozen=True)
class MomentModel:
    """First two moments of per-image execution time versus frequency.

    ``mean_fn(f)`` and ``variance_fn(f)`` return per-image values in seconds
    and seconds squared, and must accept a scalar or a 1-d frequency array
    (a fitted Polynomial qualifies).
    """

    mean_fn: object
    variance_fn: object

    @classmethod
    def from_shape_scale_model(cls, model) -> "MomentModel":
        """Adopt the moments implied by a shape/scale frequency model."""
        def mean_fn(f_hz: float) -> float:
            return model.shape_at(f_hz) * model.scale_at(f_hz)

        def variance_fn(f_hz: float) -> float:
            scale = model.scale_at(f_hz)
            return model.shape_at(f_hz) * scale * scale

        return cls(mean_fn=mean_fn, variance_fn=variance_fn)

    def mean_at(self, f_hz: float) -> float:
        return float(self.mean_fn(f_hz))

    def variance_at(self, f_hz: float) -> float:
        return float(self.variance_fn(f_hz))


@dataclass(frozen=True)
class FrequencySolution:
    """Outcome of a feasibility-boundary search over frequency.

    ``non_monotone`` is set when the grid pre-scan saw an infeasible point
    above the lowest feasible one; the lowest feasible frequency is still
    returned in that case.
    """

    frequency_hz: float
    predicted_reliability: float
    non_monotone: bool


def _check_common(n_img, rho_th, budget):
    if not isinstance(n_img, numbers.Integral) or n_img < 1:
        raise DomainError(f"n_img must be a positive integer, got {n_img!r}")
    rho_th = float(rho_th)
    if not 0.0 < rho_th < 1.0:
        raise DomainError(f"rho_th must lie in (0, 1), got {rho_th!r}")
    if budget.t_proc_s <= 0.0:
        raise InfeasibleBudgetError(
            f"t_proc = {budget.t_proc_s:.6g} s <= 0, nothing left for compute")
    return int(n_img), rho_th


def _boundary_search(achieved_vec, rho_th: float, f_min_hz: float,
                     f_max_hz: float, grid_points: int,
                     what: str) -> FrequencySolution:
    """Lowest f in [f_min, f_max] with achieved(f) >= rho_th.

    ``achieved_vec`` maps a 1-d frequency array to the reliability-like
    score of each point. One vectorized pre-scan over the grid locates the
    lowest feasible cell; bisection then pins the boundary. Feasibility is
    never assumed monotone in f.
    """
    if not f_min_hz < f_max_hz:
        raise DomainError(f"need f_min < f_max, got [{f_min_hz!r}, {f_max_hz!r}]")
    grid = np.linspace(f_min_hz, f_max_hz, int(grid_points))
    scores = np.asarray(achieved_vec(grid), dtype=np.float64)
    flags = scores >= rho_th
    feasible_idx = np.flatnonzero(flags)
    if feasible_idx.size == 0:
        raise InfeasibleConstraintError(
            f"{what}: constraint unsatisfied even at f_max = {f_max_hz:.6g} Hz",
            achievable_reliability=float(scores[-1]))
    first = int(feasible_idx[0])
    non_monotone = not bool(flags[first:].all())

    def achieved_scalar(f_hz: float) -> float:
        return float(achieved_vec(np.array([f_hz], dtype=np.float64))[0])

    if first == 0:
        return FrequencySolution(frequency_hz=float(f_min_hz),
                                 predicted_reliability=float(scores[0]),
                                 non_monotone=non_monotone)
    lo = float(grid[first - 1])  # infeasible
    hi = float(grid[first])      # feasible
    tol = _BISECT_REL_TOL * (f_max_hz - f_min_hz)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if achieved_scalar(mid) >= rho_th:
            hi = mid
        else:
            lo = mid
    return FrequencySolution(frequency_hz=hi,
                             predicted_reliability=achieved_scalar(hi),
                             non_monotone=non_monotone)


def solve_optimal_frequency(model, budget: LatencyBudget, n_img: int,
                            rho_th: float, platform: Platform,
                            grid_points: int = GRID_POINTS_DEFAULT) -> FrequencySolution:
    """Lowest clock whose batch Gamma law meets the deadline quantile.

    ``model`` provides shape_at(f) and scale_at(f) per image, accepting a
    scalar or a 1-d array of frequencies; the batch of n_img images has
    shape n_img * shape_at(f) at the same scale. Feasibility at f means
    CDF(t_proc) >= rho_th under that batch law. Frequencies where the model
    evaluates to nonpositive parameters count as infeasible rather than
    erroring, so damaged fits degrade gracefully.

    Raises:
        InfeasibleConstraintError: even f_max misses the quantile; the error
            carries the reliability achievable at f_max.
    """
    n_img, rho_th = _check_common(n_img, rho_th, budget)
    t_proc = budget.t_proc_s

    def achieved_vec(f_arr: np.ndarray) -> np.ndarray:
        shape = np.asarray(model.shape_at(f_arr), dtype=np.float64)
        scale = np.asarray(model.scale_at(f_arr), dtype=np.float64)
        ok = (np.isfinite(shape) & np.isfinite(scale)
              & (shape > 0.0) & (scale > 0.0))
        out = np.zeros(f_arr.shape[0], dtype=np.float64)
        if ok.any():
            out[ok] = gamma_cdf(t_proc, n_img * shape[ok], scale[ok])
        return out

    return _boundary_search(achieved_vec, rho_th, platform.f_min_hz,
                            platform.f_max_hz, grid_points,
                            "gamma quantile constraint")


def solve_cantelli_frequency(moments: MomentModel, budget: LatencyBudget,
                             n_img: int, rho_th: float, platform: Platform,
                             grid_points: int = GRID_POINTS_DEFAULT) -> FrequencySolution:
    """Lowest clock certified by the one-sided Chebyshev (Cantelli) bound.

    With batch mean m = n_img * mean(f) and batch variance v = n_img * var(f),
    the miss probability is at most v / (v + (t_proc - m)^2) whenever
    t_proc > m. Feasibility requires that bound <= 1 - rho_th. The bound is
    solved directly on the frequency axis; no closed form is assumed because
    the variance depends on f on both sides of the inequality.
    """
    n_img, rho_th = _check_common(n_img, rho_th, budget)
    t_proc = budget.t_proc_s

    def achieved_vec(f_arr: np.ndarray) -> np.ndarray:
        m = n_img * np.asarray(moments.mean_fn(f_arr), dtype=np.float64)
        v = n_img * np.asarray(moments.variance_fn(f_arr), dtype=np.float64)
        slack = t_proc - m
        ok = np.isfinite(m) & np.isfinite(v) & (slack > 0.0) & (v >= 0.0)
        out = np.zeros(f_arr.shape[0], dtype=np.float64)
        pos = ok & (v > 0.0)
        out[pos] = 1.0 - v[pos] / (v[pos] + slack[pos] * slack[pos])
        out[ok & (v == 0.0)] = 1.0  # variance-free mean-crossing limit
        return out

    return _boundary_search(achieved_vec, rho_th, platform.f_min_hz,
                            platform.f_max_hz, grid_points,
                            "cantelli moment bound")


@dataclass(frozen=True)
class PricedSelection:
    """A planner's choice priced under the ground truth."""

    method: str
    frequency_hz: float
    energy_j: float
    reliability: float
    non_monotone: bool


def select_and_price(method: str, ground_truth, budget: LatencyBudget,
                     n_img: int, rho_th: float, platform: Platform,
                     model=None, moments: MomentModel = None,
                     grid_points: int = GRID_POINTS_DEFAULT) -> PricedSelection:
    """Run one planner and price its choice under the ground truth.

    ``method`` is "gamma" (exact quantile under ``model``, defaulting to the
    ground truth itself) or "cantelli" (moment bound under ``moments``,
    defaulting to the ground truth's moments). Energy and reliability are
    always evaluated under ``ground_truth``, regardless of what the planner
    believed.
    """
    if method == "gamma":
        sol = solve_optimal_frequency(model if model is not None else ground_truth,
                                      budget, n_img, rho_th, platform,
                                      grid_points=grid_points)
    elif method == "cantelli":
        if moments is None:
            moments = MomentModel.from_shape_scale_model(ground_truth)
        sol = solve_cantelli_frequency(moments, budget, n_img, rho_th,
                                       platform, grid_points=grid_points)
    else:
        raise DomainError(f"unknown method {method!r}; use 'gamma' or 'cantelli'")
    f_hz = sol.frequency_hz
    per_image = GammaLaw(ground_truth.shape_at(f_hz), ground_truth.scale_at(f_hz))
    law = batch_law(per_image, n_img)
    return PricedSelection(
        method=method,
        frequency_hz=f_hz,
        energy_j=energy(f_hz, platform, law),
        reliability=float(gamma_cdf(budget.t_proc_s, law.shape, law.scale)),
        non_monotone=sol.non_monotone)
