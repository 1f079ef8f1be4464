"""Learning the execution-time distribution from measurements.

Three layers:

1. Moment estimators for the mean-time model (inefficiency factor and sync
   overhead) via closed-form least squares on the 1/f regressor.
2. Per-frequency Gamma MLE fits stitched into a FrequencyModel by polynomial
   regression of shape and scale against frequency.
3. A subset-sampling study: repeatedly fit models from small random subsets
   of the image set, plan a frequency with each, and score the true deadline
   miss probability of that plan under the ground truth.

A "ground truth" here is any object exposing shape_at(f), scale_at(f) for
the pooled per-image law and sample_image_times(image_ids, f, rng) for
per-image draws; the harness module provides the synthetic one.
"""

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .compute import Platform
from .errors import DomainError, EstimationError, InfeasibleConstraintError
from .numerics import GammaLaw, Polynomial, fit_gamma_mle, gamma_cdf, polyfit
from .rand import NS_SUBSET_STUDY, stream
from .scheduler import (LatencyBudget, MomentModel, processing_budget,
                        solve_optimal_frequency)

_POSITIVITY_GRID = 1000


@dataclass(frozen=True)
class ExecSample:
    """One timed execution of one image at one clock."""

    frequency_hz: float
    time_s: float
    image_id: int

    def __post_init__(self):
        if not math.isfinite(float(self.frequency_hz)) or self.frequency_hz <= 0.0:
            raise DomainError(f"frequency_hz must be positive, got {self.frequency_hz!r}")
        if not math.isfinite(float(self.time_s)) or self.time_s <= 0.0:
            raise DomainError(f"time_s must be positive, got {self.time_s!r}")


def estimate_bsp_moments(samples, platform: Platform):
    """Least-squares estimates of (mu_c, mu_sync_s) from timed runs.

    The mean-time model is linear in g(f) = W / (n_cores * n_flops * f):
    T = mu_c * g(f) + mu_sync. The returned pair is the exact closed-form
    OLS solution on that regressor, so the slope estimate is mu_c itself.

    Raises:
        EstimationError: all samples share one frequency (rank-deficient).
    """
    samples = list(samples)
    if len(samples) < 2:
        raise DomainError(f"need at least 2 samples, got {len(samples)}")
    freqs = np.array([s.frequency_hz for s in samples], dtype=np.float64)
    times = np.array([s.time_s for s in samples], dtype=np.float64)
    if np.unique(freqs).size < 2:
        raise EstimationError(
            "all samples share one frequency; the slope is unidentifiable")
    g = platform.work_flops / (platform.n_cores * platform.n_flops * freqs)
    g_bar = g.mean()
    t_bar = times.mean()
    dg = g - g_bar
    slope = float(np.dot(dg, times - t_bar) / np.dot(dg, dg))
    intercept = float(t_bar - slope * g_bar)
    return slope, intercept


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 else 0.0
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class FrequencyModel:
    """Gamma shape/scale as polynomial functions of clock frequency.

    Built from per-frequency MLE fits regressed against frequency. Both
    polynomials must stay strictly positive across the fitted domain; this
    is checked on a 1000-point grid at construction.
    """

    shape_poly: Polynomial
    scale_poly: Polynomial
    per_frequency_fits: dict
    degree: int
    r2_shape: float
    r2_scale: float
    domain_lo_hz: float
    domain_hi_hz: float

    def __post_init__(self):
        if not self.domain_lo_hz < self.domain_hi_hz:
            raise DomainError("frequency domain must have positive width")
        grid = np.linspace(self.domain_lo_hz, self.domain_hi_hz, _POSITIVITY_GRID)
        shapes = self.shape_poly(grid)
        scales = self.scale_poly(grid)
        if np.any(shapes <= 0.0) or np.any(scales <= 0.0):
            raise EstimationError(
                "fitted shape/scale dip to zero or below inside the frequency "
                "domain; the model is unusable")

    def shape_at(self, f_hz):
        """Fitted shape at f; accepts a scalar or a 1-d frequency array."""
        return self.shape_poly(f_hz)

    def scale_at(self, f_hz):
        return self.scale_poly(f_hz)

    def law_at(self, f_hz: float) -> GammaLaw:
        return GammaLaw(float(self.shape_at(f_hz)), float(self.scale_at(f_hz)))


def fit_frequency_model(samples_by_freq, degree: int = 3) -> FrequencyModel:
    """Fit per-frequency Gamma laws and regress them against frequency.

    ``samples_by_freq`` maps clock frequency to an array of positive
    execution times (pooled across images). Needs at least degree+1 distinct
    frequencies with at least 2 samples each.
    """
    if not isinstance(degree, numbers.Integral) or degree < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {degree!r}")
    freqs = sorted(float(f) for f in samples_by_freq)
    if len(freqs) < degree + 1:
        raise DomainError(
            f"need at least degree+1={degree + 1} distinct frequencies, got {len(freqs)}")
    fits = {}
    for f in freqs:
        times = np.asarray(samples_by_freq[f], dtype=np.float64)
        if times.size < 2:
            raise DomainError(f"need >= 2 samples at {f:.6g} Hz, got {times.size}")
        try:
            fits[f] = fit_gamma_mle(times).law
        except (DomainError, EstimationError) as exc:
            raise EstimationError(f"MLE failed at {f:.6g} Hz: {exc}") from exc
    xs = np.array(freqs)
    shapes = np.array([fits[f].shape for f in freqs])
    scales = np.array([fits[f].scale for f in freqs])
    try:
        shape_poly = polyfit(xs, shapes, degree)
        scale_poly = polyfit(xs, scales, degree)
    except EstimationError as exc:
        raise EstimationError(f"frequency regression failed: {exc}") from exc
    return FrequencyModel(
        shape_poly=shape_poly, scale_poly=scale_poly,
        per_frequency_fits=fits, degree=int(degree),
        r2_shape=_r_squared(shapes, shape_poly(xs)),
        r2_scale=_r_squared(scales, scale_poly(xs)),
        domain_lo_hz=float(xs[0]), domain_hi_hz=float(xs[-1]))


def fit_moment_model(samples_by_freq, platform: Platform,
                     degree: int = 3) -> MomentModel:
    """Moment counterpart of fit_frequency_model for the Cantelli planner.

    Mean comes from the least-squares mean-time model; per-frequency sample
    variances are regressed with the same polynomial degree.
    """
    freqs = sorted(float(f) for f in samples_by_freq)
    samples = [ExecSample(frequency_hz=f, time_s=float(t), image_id=-1)
               for f in freqs for t in np.asarray(samples_by_freq[f]).ravel()]
    mu_c, mu_sync = estimate_bsp_moments(samples, platform)
    coeff = mu_c * platform.work_flops / (platform.n_cores * platform.n_flops)
    variances = np.array([np.asarray(samples_by_freq[f], dtype=np.float64).var(ddof=1)
                          for f in freqs])
    var_poly = polyfit(np.array(freqs), variances, degree)

    def mean_fn(f_hz: float) -> float:
        return coeff / f_hz + mu_sync

    return MomentModel(mean_fn=mean_fn, variance_fn=var_poly)


def draw_subset(dataset, n_s: int, rng: np.random.Generator) -> list:
    """Uniform draw of n_s image ids with replacement (n_s may exceed |dataset|)."""
    items = list(dataset)
    if not items:
        raise DomainError("dataset is empty")
    if not isinstance(n_s, numbers.Integral) or n_s < 1:
        raise DomainError(f"n_s must be a positive integer, got {n_s!r}")
    idx = rng.integers(0, len(items), size=int(n_s))
    return [items[i] for i in idx]


def miss_probability(f_hat_hz: float, ground_truth, t_proc_s: float,
                     n_img: int) -> float:
    """True deadline-miss probability of operating at f_hat.

    Evaluated under the ground-truth pooled law, never under whatever model
    chose f_hat: 1 - CDF(t_proc) of the batch Gamma at f_hat.
    """
    if not math.isfinite(float(t_proc_s)) or t_proc_s <= 0.0:
        raise DomainError(f"t_proc_s must be positive, got {t_proc_s!r}")
    if not isinstance(n_img, numbers.Integral) or n_img < 1:
        raise DomainError(f"n_img must be a positive integer, got {n_img!r}")
    shape = ground_truth.shape_at(f_hat_hz)
    scale = ground_truth.scale_at(f_hat_hz)
    return 1.0 - gamma_cdf(float(t_proc_s), n_img * shape, scale)


@dataclass(frozen=True)
class SubsetReplicate:
    """One subset draw: the model it produced and how its plan fared."""

    f_hat_hz: float
    p_miss: float
    infeasible: bool
    model: FrequencyModel = None


@dataclass(frozen=True)
class SubsetStudyResult:
    """Miss-probability statistics across K replicates at one sample size."""

    sample_size: int
    replicates: tuple

    @property
    def p_miss_values(self) -> np.ndarray:
        return np.array([r.p_miss for r in self.replicates], dtype=np.float64)

    @property
    def mean_p_miss(self) -> float:
        return float(self.p_miss_values.mean())

    @property
    def p5_p_miss(self) -> float:
        return float(np.percentile(self.p_miss_values, 5.0))

    @property
    def p95_p_miss(self) -> float:
        return float(np.percentile(self.p_miss_values, 95.0))

    @property
    def min_p_miss(self) -> float:
        return float(self.p_miss_values.min())

    @property
    def max_p_miss(self) -> float:
        return float(self.p_miss_values.max())

    @property
    def iqr_p_miss(self) -> float:
        lo, hi = np.percentile(self.p_miss_values, [25.0, 75.0])
        return float(hi - lo)

    @property
    def n_infeasible(self) -> int:
        return sum(1 for r in self.replicates if r.infeasible)


def run_subset_replicate(ground_truth, dataset, n_s: int, fit_frequencies,
                         budget: LatencyBudget, n_img: int, rho_th: float,
                         platform: Platform, rng: np.random.Generator,
                         degree: int = 3, keep_model: bool = False) -> SubsetReplicate:
    """Draw one subset, fit, plan, and score against the ground truth.

    Each subset image is "executed" once per fit frequency (frequencies in
    ascending order so the stream layout is stable). A subset whose model
    cannot be built or cannot satisfy the constraint falls back to f_max,
    flagged infeasible, and is still scored.
    """
    ids = draw_subset(dataset, n_s, rng)
    samples_by_freq = {}
    for f in sorted(float(f) for f in fit_frequencies):
        samples_by_freq[f] = ground_truth.sample_image_times(ids, f, rng)
    infeasible = False
    model = None
    try:
        model = fit_frequency_model(samples_by_freq, degree=degree)
        f_hat = solve_optimal_frequency(model, budget, n_img, rho_th,
                                        platform).frequency_hz
    except (EstimationError, InfeasibleConstraintError):
        f_hat = platform.f_max_hz
        infeasible = True
    p_miss = miss_probability(f_hat, ground_truth, budget.t_proc_s, n_img)
    return SubsetReplicate(f_hat_hz=f_hat, p_miss=float(p_miss),
                           infeasible=infeasible,
                           model=model if keep_model else None)


def sample_size_study(ground_truth, dataset, ns_grid, k_replicates: int,
                      budget: LatencyBudget, n_img: int, rho_th: float,
                      platform: Platform, fit_frequencies, root_seed: int,
                      bit_generator: str = "philox", degree: int = 3,
                      platform_index: int = 0) -> list:
    """Subset-size sweep: how fast do small-sample plans become safe?

    For every sample size in ``ns_grid`` and every replicate k, an
    independent stream in the subset-study namespace with key
    (platform_index, n_s, k) drives the subset draw and the simulated
    executions. Keying by the size value itself (not its grid position)
    makes every (n_s, k) cell reproducible in any execution order and
    independent of which other sizes were requested alongside it.
    """
    if not isinstance(k_replicates, numbers.Integral) or k_replicates < 1:
        raise DomainError(f"k_replicates must be >= 1, got {k_replicates!r}")
    results = []
    for n_s in ns_grid:
        reps = []
        for k in range(int(k_replicates)):
            rng = stream(root_seed, bit_generator,
                         NS_SUBSET_STUDY, platform_index, int(n_s), k)
            reps.append(run_subset_replicate(
                ground_truth, dataset, int(n_s), fit_frequencies, budget,
                n_img, rho_th, platform, rng, degree=degree))
        results.append(SubsetStudyResult(sample_size=int(n_s),
                                         replicates=tuple(reps)))
    return results
