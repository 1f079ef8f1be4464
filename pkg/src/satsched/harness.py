"""Experiment harness: synthetic ground truth, sweeps, and CSV emission.

The ground truth stands in for a measurement campaign that is not available
at desk scale: per-image Gamma execution-time laws calibrated so the pooled
mean at every frequency equals the platform's mean-time model exactly.

Outputs are pure functions of (config, seed). CSV floats are printed with 9
significant digits, rows in a canonical sort order, newline-terminated, so
re-running a figure with the same seed yields byte-identical files.
"""

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import (LinkGeometry, downlink_delay, expected_uplink_delay,
                      fbl_error_probability, isl_round_trip, slant_range, snr)
from .compute import Platform
from .config import Scenario
from .errors import (DomainError, EstimationError, InfeasibleBudgetError,
                     InfeasibleConstraintError, InfeasibleLinkError)
from .estimation import fit_frequency_model, sample_size_study
from .numerics import GammaLaw, ks_statistic
from .rand import NS_GROUND_TRUTH, stream
from .scheduler import (LatencyBudget, MomentModel, processing_budget,
                        select_and_price)

try:
    from importlib.metadata import PackageNotFoundError
    from importlib.metadata import version as _dist_version

    try:
        _VERSION = _dist_version("satsched")
    except PackageNotFoundError:
        _VERSION = "unknown"
except ImportError:
    _VERSION = "unknown"

_METHODS = ("gamma", "cantelli")


@dataclass(frozen=True)
class GroundTruth:
    """Synthetic per-image execution-time laws plus their pooled summary.

    Each image id carries a fixed work multiplier (mean exactly 1 across the
    set), drawn once; a draw for image i at frequency f comes from
    Gamma(image_shape_at(f), image_scale_at(f) * multiplier_i).

    The pooled table (shape_at / scale_at) is the large-sample limit of a
    single Gamma MLE over samples pooled across images, so a fitted model
    converges to this table as the sample count grows. Its mean equals the
    platform mean-time model exactly at every frequency.

    Two variance models:

    * "structural": only the compute phase is random; the sync overhead is
      deterministic. The per-image coefficient of variation then shrinks
      with frequency as the compute share of the mean shrinks, pinned to
      ``cv_at_fmax`` at f_max.
    * "constant": coefficient of variation fixed at ``cv_at_fmax`` across
      the whole range (per-image shape is 1/cv^2 everywhere).
    """

    platform: Platform
    cv_at_fmax: float
    variance_model: str
    work_multipliers: np.ndarray
    log_multiplier_gap: float
    dense_grid_hz: np.ndarray
    dense_shapes: np.ndarray
    dense_scales: np.ndarray
    provenance: dict

    @property
    def n_images(self) -> int:
        return int(self.work_multipliers.shape[0])

    @property
    def image_ids(self) -> list:
        return list(range(self.n_images))

    def _work_seconds_hz(self) -> float:
        p = self.platform
        return p.mu_c * p.work_flops / (p.n_cores * p.n_flops)

    def mean_at(self, f_hz):
        """Pooled mean execution time; accepts scalar or 1-d array."""
        return self._work_seconds_hz() / f_hz + self.platform.mu_sync_s

    def image_shape_at(self, f_hz):
        """Gamma shape of a single image's law at f (same for all images)."""
        cv2 = self.cv_at_fmax * self.cv_at_fmax
        if self.variance_model == "constant":
            if isinstance(f_hz, np.ndarray):
                return np.full(f_hz.shape, 1.0 / cv2)
            return 1.0 / cv2
        a = self._work_seconds_hz()
        sync = self.platform.mu_sync_s
        ratio = (a + sync * f_hz) / (a + sync * self.platform.f_max_hz)
        return ratio * ratio / cv2

    def image_scale_at(self, f_hz, image_id: int = None):
        """Gamma scale at f; with ``image_id``, that image's multiplier applies."""
        base = self.mean_at(f_hz) / self.image_shape_at(f_hz)
        if image_id is None:
            return base
        return base * float(self.work_multipliers[image_id])

    def per_image_law(self, image_id: int, f_hz: float) -> GammaLaw:
        return GammaLaw(float(self.image_shape_at(float(f_hz))),
                        float(self.image_scale_at(float(f_hz), image_id)))

    def shape_at(self, f_hz):
        """Pooled-fit shape: the MLE limit over the image mixture.

        Solves ln(a) - digamma(a) = [ln(a_img) - digamma(a_img)] + gap,
        where the gap is -mean(ln multiplier) >= 0. Heterogeneity across
        images widens the pooled law, so the pooled shape never exceeds the
        per-image one.
        """
        ab = self.image_shape_at(f_hz)
        gap = self.log_multiplier_gap
        if gap == 0.0:
            return ab
        if isinstance(ab, np.ndarray):
            flat = np.ascontiguousarray(ab.ravel().astype(np.float64))
            s = np.log(flat) - kernels.digamma_arr(flat) + gap
            solved, conv = kernels.solve_gamma_shape_arr(np.ascontiguousarray(s))
            if not np.all(conv):
                raise EstimationError("pooled-shape solve failed to converge")
            return solved.reshape(ab.shape)
        s = math.log(ab) - kernels.digamma(float(ab)) + gap
        solved, _, ok = kernels.solve_gamma_shape(s)
        if not ok:
            raise EstimationError("pooled-shape solve failed to converge")
        return solved

    def scale_at(self, f_hz):
        """Pooled-fit scale, fixed so the pooled mean is exact."""
        return self.mean_at(f_hz) / self.shape_at(f_hz)

    def law_at(self, f_hz: float) -> GammaLaw:
        return GammaLaw(float(self.shape_at(float(f_hz))),
                        float(self.scale_at(float(f_hz))))

    def sample_image_times(self, image_ids, f_hz: float,
                           rng: np.random.Generator) -> np.ndarray:
        """One execution-time draw per listed image at frequency f."""
        ids = np.asarray(image_ids, dtype=np.int64)
        if ids.size == 0:
            return np.empty(0, dtype=np.float64)
        if np.any(ids < 0) or np.any(ids >= self.n_images):
            raise DomainError("image id out of range")
        f = float(f_hz)
        shape = float(self.image_shape_at(f))
        base_scale = float(self.mean_at(f)) / shape
        draws = rng.standard_gamma(shape, size=ids.shape[0])
        return draws * (base_scale * self.work_multipliers[ids])


def synthesize_ground_truth(platform: Platform, cv: float, n_images: int,
                            rng: np.random.Generator,
                            image_sigma: float = 0.15,
                            variance_model: str = "structural",
                            dense_points: int = 513,
                            provenance: dict = None) -> GroundTruth:
    """Build the synthetic workload for one platform.

    Work multipliers are log-normal draws normalized to mean exactly 1, so
    pooled means stay calibrated; their log-mean gap (>= 0 by Jensen) is
    what separates the pooled fit from the per-image law.
    """
    if not (isinstance(cv, float) or isinstance(cv, int)) or not 0.0 < float(cv):
        raise DomainError(f"cv must be > 0, got {cv!r}")
    if float(cv) >= 1.0:
        raise DomainError(f"cv must be < 1 for a peaked law, got {cv!r}")
    if int(n_images) < 1:
        raise DomainError(f"n_images must be >= 1, got {n_images!r}")
    if float(image_sigma) < 0.0:
        raise DomainError(f"image_sigma must be >= 0, got {image_sigma!r}")
    if variance_model not in ("structural", "constant"):
        raise DomainError(f"unknown variance_model {variance_model!r}")
    n_images = int(n_images)
    if image_sigma > 0.0:
        raw = np.exp(rng.normal(0.0, float(image_sigma), size=n_images))
        mult = raw / raw.mean()
        gap = max(0.0, float(-np.mean(np.log(mult))))
    else:
        mult = np.ones(n_images, dtype=np.float64)
        gap = 0.0
    gt = GroundTruth(
        platform=platform, cv_at_fmax=float(cv),
        variance_model=variance_model, work_multipliers=mult,
        log_multiplier_gap=gap,
        dense_grid_hz=np.empty(0), dense_shapes=np.empty(0),
        dense_scales=np.empty(0),
        provenance=dict(provenance or {}))
    grid = np.linspace(platform.f_min_hz, platform.f_max_hz, int(dense_points))
    shapes = np.asarray(gt.shape_at(grid), dtype=np.float64)
    scales = np.asarray(gt.scale_at(grid), dtype=np.float64)
    object.__setattr__(gt, "dense_grid_hz", grid)
    object.__setattr__(gt, "dense_shapes", shapes)
    object.__setattr__(gt, "dense_scales", scales)
    return gt


def ground_truth_for(scenario: Scenario, platform_index: int) -> GroundTruth:
    """The scenario's ground truth for one platform (stream key fixed by index)."""
    platform = scenario.platforms[platform_index]
    rng = stream(scenario.seed, scenario.bit_generator,
                 NS_GROUND_TRUTH, platform_index)
    return synthesize_ground_truth(
        platform, scenario.gt_cv, scenario.gt_n_images, rng,
        image_sigma=scenario.gt_image_sigma,
        variance_model=scenario.gt_variance_model,
        dense_points=scenario.gt_dense_points,
        provenance={
            "root_seed": scenario.seed,
            "bit_generator": scenario.bit_generator,
            "stream_key": [NS_GROUND_TRUTH, platform_index],
            "platform": platform.name,
            "calibration_mean_at_fmax_s": float(
                scenario.platforms[platform_index].mu_sync_s
                + (platform.mu_c * platform.work_flops
                   / (platform.n_cores * platform.n_flops * platform.f_max_hz))),
        })


def fit_frequency_grid(platform: Platform, n_frequencies: int) -> np.ndarray:
    """Evenly spaced fit frequencies spanning the platform's range."""
    if int(n_frequencies) < 2:
        raise DomainError(f"need >= 2 fit frequencies, got {n_frequencies!r}")
    return np.linspace(platform.f_min_hz, platform.f_max_hz, int(n_frequencies))


@dataclass(frozen=True)
class CommLegs:
    """Realized communication delays for one elevation."""

    elevation_deg: float
    slant_range_m: float
    snr_linear: float
    error_probability: float
    expected_uplink_s: float  # inf when every ARQ attempt fails
    isl_round_trip_s: float
    downlink_s: float

    @property
    def total_s(self) -> float:
        return self.expected_uplink_s + self.isl_round_trip_s + self.downlink_s


def comm_legs(scenario: Scenario, elevation_deg: float) -> CommLegs:
    """Evaluate the three communication legs at one elevation.

    Shadowing is budgeted at the scenario's shadow quantile (0.5 = median
    channel). The downlink reuses the serving slant range and is treated as
    error-free; the relay path cost is elevation-independent.
    """
    geom = LinkGeometry(altitude_m=scenario.altitude_m,
                        elevation_rad=math.radians(float(elevation_deg)))
    d = slant_range(geom)
    gamma = snr(scenario.link_ul, d, scenario.shadow_margin_db)
    eps = fbl_error_probability(gamma, scenario.grid.blocklength,
                                scenario.grid.rate)
    if eps >= 1.0:
        e_ul = math.inf
    else:
        e_ul = expected_uplink_delay(scenario.grid, eps, d)
    return CommLegs(
        elevation_deg=float(elevation_deg), slant_range_m=d,
        snr_linear=gamma, error_probability=eps, expected_uplink_s=e_ul,
        isl_round_trip_s=isl_round_trip(scenario.isl, scenario.grid.blocklength),
        downlink_s=downlink_delay(scenario.grid, d))


def budget_from_legs(scenario: Scenario, legs: CommLegs) -> LatencyBudget:
    """Remaining processing budget after the realized legs; may raise."""
    if not math.isfinite(legs.expected_uplink_s):
        raise InfeasibleLinkError(
            f"uplink expectation diverges at {legs.elevation_deg:.3g} deg")
    return processing_budget(scenario.t_e2e_s, legs.expected_uplink_s,
                             legs.isl_round_trip_s, legs.downlink_s)


# ---------------------------------------------------------------------------
# CSV plumbing


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


def _write_csv(path: str, header, rows) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _write_meta(path: str, figure: str, scenario: Scenario) -> str:
    meta = {
        "figure": figure,
        "seed": scenario.seed,
        "bit_generator": scenario.bit_generator,
        "backend": kernels.BACKEND,
        "package_version": _VERSION,
        "config": scenario.raw,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(meta, indent=2, sort_keys=True))
        fh.write("\n")
    return path


def _ensure_dir(out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# figure runners


def run_fig3(scenario: Scenario, out_dir: str) -> dict:
    """Subset-size study: miss probability of plans fitted from N_s samples.

    Writes fig3_replicates.csv (one row per (platform, N_s, k)),
    fig3_summary.csv (mean and spread per (platform, N_s)), and
    fig3_meta.json. Returns the paths and the in-memory study results.
    """
    _ensure_dir(out_dir)
    detail_rows = []
    summary_rows = []
    results = {}
    for pi, platform in enumerate(scenario.platforms):
        gt = ground_truth_for(scenario, pi)
        budget = budget_from_legs(scenario,
                                  comm_legs(scenario, scenario.elevation_deg))
        fit_freqs = fit_frequency_grid(platform, scenario.fit_n_frequencies)
        study = sample_size_study(
            gt, gt.image_ids, scenario.fig3_sample_sizes,
            scenario.fig3_k_replicates, budget,
            scenario.fig3_n_img[platform.name], scenario.rho_th, platform,
            fit_freqs, scenario.seed, scenario.bit_generator,
            degree=scenario.fit_degree, platform_index=pi)
        results[platform.name] = study
        for res in study:
            for k, rep in enumerate(res.replicates):
                detail_rows.append((pi, platform.name, res.sample_size, k,
                                    rep.f_hat_hz, rep.p_miss, rep.infeasible))
            summary_rows.append((pi, platform.name, res.sample_size,
                                 res.mean_p_miss, res.p5_p_miss,
                                 res.p95_p_miss, res.min_p_miss,
                                 res.max_p_miss))
    detail_rows.sort(key=lambda r: (r[0], r[2], r[3]))
    summary_rows.sort(key=lambda r: (r[0], r[2]))
    paths = {
        "replicates_csv": _write_csv(
            os.path.join(out_dir, "fig3_replicates.csv"),
            ["platform", "n_s", "k", "f_hat_hz", "p_miss", "infeasible_flag"],
            [r[1:] for r in detail_rows]),
        "summary_csv": _write_csv(
            os.path.join(out_dir, "fig3_summary.csv"),
            ["platform", "n_s", "mean_p_miss", "p05_p_miss", "p95_p_miss",
             "min_p_miss", "max_p_miss"],
            [r[1:] for r in summary_rows]),
        "meta": _write_meta(os.path.join(out_dir, "fig3_meta.json"),
                            "fig3", scenario),
    }
    return {"paths": paths, "results": results}


def _priced_row(scenario, gt, budget, method, n_img, platform,
                moments) -> tuple:
    """(frequency, energy, feasible) for one planner instance."""
    try:
        sel = select_and_price(method, gt, budget, n_img, scenario.rho_th,
                               platform, moments=moments if method == "cantelli" else None)
        return sel.frequency_hz, sel.energy_j, True
    except InfeasibleConstraintError:
        return None, None, False


def run_fig4(scenario: Scenario, out_dir: str) -> dict:
    """Batch-size sweep at the operating elevation: energy vs n_img.

    Both planners run on the same ground truth; the sweep stops once both
    are infeasible (their terminal infeasible rows are kept) or at the
    configured cap. Writes fig4.csv and fig4_meta.json.
    """
    _ensure_dir(out_dir)
    rows = []
    results = {}
    for pi, platform in enumerate(scenario.platforms):
        gt = ground_truth_for(scenario, pi)
        budget = budget_from_legs(scenario,
                                  comm_legs(scenario, scenario.elevation_deg))
        moments = MomentModel.from_shape_scale_model(gt)
        per_platform = []
        for n_img in range(1, scenario.fig4_n_img_max + 1):
            feas = {}
            for mi, method in enumerate(_METHODS):
                f_hz, e_j, ok = _priced_row(scenario, gt, budget, method,
                                            n_img, platform, moments)
                rows.append((pi, mi, n_img, platform.name, method,
                             f_hz, e_j, ok))
                per_platform.append((method, n_img, f_hz, e_j, ok))
                feas[method] = ok
            if not any(feas.values()):
                break
        results[platform.name] = per_platform
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    paths = {
        "csv": _write_csv(
            os.path.join(out_dir, "fig4.csv"),
            ["platform", "method", "n_img", "frequency_hz", "energy_j",
             "feasible"],
            [(r[3], r[4], r[2], r[5], r[6], r[7]) for r in rows]),
        "meta": _write_meta(os.path.join(out_dir, "fig4_meta.json"),
                            "fig4", scenario),
    }
    return {"paths": paths, "results": results}


def run_fig5(scenario: Scenario, out_dir: str) -> dict:
    """Elevation sweep: energy vs elevation for fixed batch sizes.

    Rows where the uplink expectation diverges or the budget is exhausted
    are emitted infeasible with their communication columns filled in, so
    the critical-elevation region is visible in the CSV. Writes fig5.csv
    and fig5_meta.json.
    """
    _ensure_dir(out_dir)
    rows = []
    for pi, platform in enumerate(scenario.platforms):
        gt = ground_truth_for(scenario, pi)
        moments = MomentModel.from_shape_scale_model(gt)
        for n_img in scenario.fig5_n_img[platform.name]:
            for elevation in scenario.elevation_sweep_deg:
                legs = comm_legs(scenario, elevation)
                t_proc = scenario.t_e2e_s - legs.total_s
                try:
                    budget = budget_from_legs(scenario, legs)
                except (InfeasibleBudgetError, InfeasibleLinkError):
                    budget = None
                for mi, method in enumerate(_METHODS):
                    if budget is None:
                        f_hz, e_j, ok = None, None, False
                    else:
                        f_hz, e_j, ok = _priced_row(
                            scenario, gt, budget, method, n_img, platform,
                            moments)
                    rows.append((pi, mi, n_img, -elevation, platform.name,
                                 method, elevation, legs.expected_uplink_s,
                                 t_proc, f_hz, e_j, ok))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    paths = {
        "csv": _write_csv(
            os.path.join(out_dir, "fig5.csv"),
            ["platform", "n_img", "elevation_deg", "e_t_ul_s", "t_proc_s",
             "method", "frequency_hz", "energy_j", "feasible"],
            [(r[4], r[2], r[6], r[7], r[8], r[5], r[9], r[10], r[11])
             for r in rows]),
        "meta": _write_meta(os.path.join(out_dir, "fig5_meta.json"),
                            "fig5", scenario),
    }
    return {"paths": paths}


# ---------------------------------------------------------------------------
# sample-log ingestion (CLI `fit`)


def ingest_samples_csv(path: str) -> dict:
    """Read an execution log CSV into {frequency: times array}.

    Expected header: image_id,frequency_hz,exec_time_s. Real hardware logs
    in this shape can replace the synthetic ground truth without code
    changes.
    """
    by_freq = {}
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DomainError(f"cannot read sample log {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["image_id", "frequency_hz", "exec_time_s"]:
            raise DomainError(
                "sample log must start with header "
                "'image_id,frequency_hz,exec_time_s', "
                f"got {','.join(header) if header else 'empty file'!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DomainError(f"{path}:{lineno}: expected 3 columns")
            try:
                f = float(row[1])
                t = float(row[2])
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from exc
            by_freq.setdefault(f, []).append(t)
    if not by_freq:
        raise DomainError(f"sample log {path!r} contains no data rows")
    return {f: np.array(ts, dtype=np.float64) for f, ts in sorted(by_freq.items())}


def fit_report(samples_by_freq: dict, degree: int = 3) -> dict:
    """Fit a frequency model from pooled samples and summarize it.

    Returns a JSON-ready dict: per-frequency fitted laws with sample counts
    and KS distances, the two polynomials, and their R-squared diagnostics.
    """
    model = fit_frequency_model(samples_by_freq, degree=degree)
    per_freq = []
    for f in sorted(model.per_frequency_fits):
        law = model.per_frequency_fits[f]
        times = np.asarray(samples_by_freq[f], dtype=np.float64)
        per_freq.append({
            "frequency_hz": f,
            "n_samples": int(times.size),
            "shape": law.shape,
            "scale": law.scale,
            "ks_statistic": ks_statistic(times, law),
        })
    return {
        "degree": model.degree,
        "shape_coefficients": list(model.shape_poly.coefficients),
        "scale_coefficients": list(model.scale_poly.coefficients),
        "r2_shape": model.r2_shape,
        "r2_scale": model.r2_scale,
        "domain_hz": [model.domain_lo_hz, model.domain_hi_hz],
        "per_frequency": per_freq,
    }
