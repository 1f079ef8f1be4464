"""Special functions, Gamma-law utilities, and fitting routines.

This module is domain-free: it knows nothing about links, GPUs, or deadlines.
Everything downstream (channel, compute, estimation, scheduler) builds on the
functions here. Heavy inner loops are delegated to :mod:`satsched.kernels`,
which compiles them with numba when available.
"""

import math
import numbers
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, EstimationError

try:
    from numpy.exceptions import RankWarning as _RankWarning
except ImportError:  # numpy < 1.25
    from numpy import RankWarning as _RankWarning

_SQRT_2PI = 2.5066282746310002


def _require_finite_scalar(name: str, value) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def _require_positive(name: str, value) -> float:
    value = _require_finite_scalar(name, value)
    if value <= 0.0:
        raise DomainError(f"{name} must be > 0, got {value!r}")
    return value


def q_function(x: float) -> float:
    """Gaussian tail probability P(Z > x) for a standard normal Z."""
    x = _require_finite_scalar("x", x)
    return kernels.q_func(x)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, accurate to ~1 ulp.

    Rational initial guess polished with two Halley steps against the
    erfc-based CDF.
    """
    p = _require_finite_scalar("p", p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    x = kernels.norm_ppf_approx(p)
    for _ in range(2):
        err = (1.0 - kernels.q_func(x)) - p
        u = err * _SQRT_2PI * math.exp(0.5 * x * x)
        x -= u / (1.0 + 0.5 * x * u)
    return x


def gamma_cdf(t, shape, scale):
    """Regularized lower incomplete gamma P(shape, t/scale).

    Any of the three arguments may be an ndarray; they broadcast together
    and an array comes back. All-scalar input returns a float.
    """
    if any(isinstance(v, np.ndarray) for v in (t, shape, scale)):
        t_b, a_b, s_b = np.broadcast_arrays(
            np.asarray(t, dtype=np.float64),
            np.asarray(shape, dtype=np.float64),
            np.asarray(scale, dtype=np.float64))
        if not (np.all(np.isfinite(t_b)) and np.all(np.isfinite(a_b))
                and np.all(np.isfinite(s_b))):
            raise DomainError("t, shape, scale must all be finite")
        if np.any(t_b < 0.0):
            raise DomainError("t must be >= 0")
        if np.any(a_b <= 0.0) or np.any(s_b <= 0.0):
            raise DomainError("shape and scale must be > 0")
        x = np.ascontiguousarray(t_b.ravel() / s_b.ravel())
        a = np.ascontiguousarray(a_b.ravel().astype(np.float64))
        return kernels.reg_lower_gamma_arr(a, x).reshape(t_b.shape)
    shape = _require_positive("shape", shape)
    scale = _require_positive("scale", scale)
    t = _require_finite_scalar("t", t)
    if t < 0.0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return kernels.reg_lower_gamma(shape, t / scale)


def gamma_quantile(p: float, shape: float, scale: float) -> float:
    """Time t with gamma_cdf(t, shape, scale) = p, to ~1e-12 relative."""
    p = _require_finite_scalar("p", p)
    shape = _require_positive("shape", shape)
    scale = _require_positive("scale", scale)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    return kernels.gamma_quantile_unit(p, shape) * scale


def sample_gamma(shape: float, scale: float, rng: np.random.Generator, size=None):
    """Draw from Gamma(shape, scale) using the caller's generator."""
    shape = _require_positive("shape", shape)
    scale = _require_positive("scale", scale)
    return rng.gamma(shape, scale, size=size)


@dataclass(frozen=True)
class GammaLaw:
    """A Gamma distribution in shape/scale form.

    Attributes:
        shape: Shape parameter, > 0. Dimensionless.
        scale: Scale parameter, > 0. Carries the units (seconds here).
    """

    shape: float
    scale: float

    def __post_init__(self):
        _require_positive("shape", self.shape)
        _require_positive("scale", self.scale)

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale * self.scale

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def cv(self) -> float:
        """Coefficient of variation, std/mean = 1/sqrt(shape)."""
        return 1.0 / math.sqrt(self.shape)

    def cdf(self, t):
        return gamma_cdf(t, self.shape, self.scale)

    def quantile(self, p: float) -> float:
        return gamma_quantile(p, self.shape, self.scale)

    def sample(self, rng: np.random.Generator, size=None):
        return sample_gamma(self.shape, self.scale, rng, size=size)

    def sum_of(self, n: int) -> "GammaLaw":
        """Law of the sum of ``n`` independent copies (same scale, n-fold shape)."""
        if not isinstance(n, numbers.Integral) or n < 1:
            raise DomainError(f"n must be a positive integer, got {n!r}")
        return GammaLaw(self.shape * int(n), self.scale)

    def scaled_by(self, c: float) -> "GammaLaw":
        """Law of c times a draw (scale multiplies, shape unchanged)."""
        c = _require_positive("c", c)
        return GammaLaw(self.shape, self.scale * c)


@dataclass(frozen=True)
class GammaFitResult:
    """Outcome of a maximum-likelihood Gamma fit.

    ``used_moment_fallback`` is set when the Newton solve of the shape
    equation failed to converge and the method-of-moments estimate was
    returned instead.
    """

    shape: float
    scale: float
    iterations: int
    converged: bool
    used_moment_fallback: bool

    @property
    def law(self) -> GammaLaw:
        return GammaLaw(self.shape, self.scale)


def fit_gamma_mle(samples) -> GammaFitResult:
    """Fit Gamma(shape, scale) to positive samples by maximum likelihood.

    Solves ln(shape) - digamma(shape) = ln(mean) - mean(ln x) by Newton
    iteration (tolerance 1e-12 on the residual, at most 100 steps), then sets
    scale = mean/shape so the fitted mean matches the sample mean exactly.
    Falls back to method-of-moments on non-convergence and flags it.

    Raises:
        DomainError: fewer than two samples, or any sample <= 0.
        EstimationError: the sample is (near-)degenerate, so no finite
            shape maximizes the likelihood.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        x = x.ravel()
    if x.size < 2:
        raise DomainError(f"need at least 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    if np.any(x <= 0.0):
        raise DomainError("samples must be strictly positive")
    mean = float(x.mean())
    spread = float(x.max() - x.min())
    if spread <= 1e-9 * mean:
        raise EstimationError(
            "sample is degenerate (zero or near-zero spread), shape diverges")
    s = math.log(mean) - float(np.mean(np.log(x)))
    if s <= 0.0:
        # log-moment gap can round to <= 0 when the spread is tiny
        raise EstimationError(
            "log-moment gap is nonpositive; sample too concentrated to fit")
    shape, iters, conv = kernels.solve_gamma_shape(s)
    converged = bool(conv)
    fallback = False
    if not converged or shape <= 0.0 or not math.isfinite(shape):
        var = float(x.var(ddof=0))
        if var <= 0.0:
            raise EstimationError("zero-variance sample, cannot fit")
        shape = mean * mean / var
        fallback = True
    scale = mean / shape
    return GammaFitResult(shape=float(shape), scale=float(scale),
                          iterations=int(iters), converged=converged,
                          used_moment_fallback=fallback)


@dataclass(frozen=True)
class Polynomial:
    """Power-basis polynomial c_0 + c_1 x + ... + c_L x^L."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) == 0:
            raise DomainError("polynomial needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise DomainError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            acc = np.zeros_like(np.asarray(x, dtype=np.float64))
            for c in reversed(self.coefficients):
                acc = acc * x + c
            return acc
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * float(x) + c
        return acc


def polyfit(xs, ys, degree: int) -> Polynomial:
    """Least-squares polynomial fit in the power basis.

    Abscissae are rescaled to [-1, 1] internally for conditioning and the
    coefficients mapped back before returning.

    Raises:
        DomainError: length mismatch, too few points, bad degree.
        EstimationError: rank-deficient design (e.g. all xs identical).
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if not isinstance(degree, numbers.Integral) or degree < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {degree!r}")
    degree = int(degree)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise DomainError("xs and ys must be 1-d arrays of equal length")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise DomainError("xs and ys must be finite")
    if xs.size < degree + 1:
        raise DomainError(
            f"need at least degree+1={degree + 1} points, got {xs.size}")
    if degree > 0 and float(xs.max() - xs.min()) == 0.0:
        raise EstimationError("all abscissae identical: design matrix is singular")
    with warnings.catch_warnings():
        warnings.simplefilter("error", category=_RankWarning)
        try:
            fitted = np.polynomial.Polynomial.fit(xs, ys, deg=degree)
        except (_RankWarning, np.linalg.LinAlgError) as exc:
            raise EstimationError(f"polynomial fit failed: {exc}") from exc
    coef = fitted.convert().coef
    if coef.size < degree + 1:
        coef = np.concatenate([coef, np.zeros(degree + 1 - coef.size)])
    return Polynomial(coefficients=tuple(float(c) for c in coef[:degree + 1]))


def ks_statistic(samples, law: GammaLaw) -> float:
    """Kolmogorov-Smirnov sup distance between the sample ECDF and ``law``."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 1:
        raise DomainError("need at least one sample")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    if np.any(x <= 0.0):
        raise DomainError("samples must be strictly positive")
    x = np.sort(x)
    n = x.size
    cdf = gamma_cdf(x, law.shape, law.scale)
    steps_hi = np.arange(1, n + 1, dtype=np.float64) / n
    steps_lo = np.arange(0, n, dtype=np.float64) / n
    d_plus = float(np.max(steps_hi - cdf))
    d_minus = float(np.max(cdf - steps_lo))
    return max(d_plus, d_minus, 0.0)
