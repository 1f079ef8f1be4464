"""Low-level numeric kernels with optional JIT compilation.

The hot loops (regularized incomplete gamma, digamma-family Newton solves,
quantile inversion) run either as numba-compiled machine code or as the same
algorithms on plain numpy, selected once at import time:

* numba importable and ``SATSCHED_DISABLE_NUMBA`` unset -> "numba" backend
* otherwise -> "numpy" backend

Array variants in the numpy backend advance per-lane iterations under an
active mask and freeze lanes once converged, so both backends execute the
same per-element arithmetic. ``benchmarks/bench_kernels.py`` times the two
paths against each other.

Everything here is a pure function. Argument validation lives one level up
in :mod:`satsched.numerics`; kernels assume in-domain inputs.
"""

import math
import os

import numpy as np

try:
    from numba import njit as _numba_njit

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

_DISABLE = os.environ.get("SATSCHED_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}
NUMBA_ENABLED = _HAVE_NUMBA and not _DISABLE
BACKEND = "numba" if NUMBA_ENABLED else "numpy"

_MAX_ITER = 600
_CONV_EPS = 1e-16
_LOG_TINY = -745.0  # below this exp() underflows float64
_FPMIN = 1e-300
_INV_SQRT2 = 0.7071067811865476

_lgamma_vec = np.vectorize(math.lgamma, otypes=[np.float64])


def _jit(fn):
    if NUMBA_ENABLED:
        return _numba_njit(cache=True, nogil=True)(fn)
    return fn


@_jit
def q_func(x: float) -> float:
    # Gaussian tail probability P(Z > x)
    return 0.5 * math.erfc(x * _INV_SQRT2)


@_jit
def norm_ppf_approx(p: float) -> float:
    # Acklam rational approximation to the standard normal quantile.
    # |relative error| < 1.2e-9; callers polish when they need more.
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q
                   - 2.400758277161838e+00) * q - 2.549732539343734e+00) * q
                 + 4.374664141464968e+00) * q + 2.938163982698783e+00) / \
               ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
                  + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0)
    if p <= 0.97575:
        q = p - 0.5
        r = q * q
        return (((((-3.969683028665376e+01 * r + 2.209460984245205e+02) * r
                   - 2.759285104469687e+02) * r + 1.383577518672690e+02) * r
                 - 3.066479806614716e+01) * r + 2.506628277459239e+00) * q / \
               (((((-5.447609879822406e+01 * r + 1.615858368580409e+02) * r
                   - 1.556989798598866e+02) * r + 6.680131188771972e+01) * r
                 - 1.328068155288572e+01) * r + 1.0)
    q = math.sqrt(-2.0 * math.log(1.0 - p))
    return -(((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q
                - 2.400758277161838e+00) * q - 2.549732539343734e+00) * q
              + 4.374664141464968e+00) * q + 2.938163982698783e+00) / \
            ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
               + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0)


@_jit
def reg_lower_gamma(a: float, x: float) -> float:
    # Regularized lower incomplete gamma P(a, x).
    # Power series for x < a + 1, Lentz continued fraction otherwise.
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _CONV_EPS:
                break
        logp = a * math.log(x) - x - math.lgamma(a)
        if logp < _LOG_TINY:
            return 0.0
        val = total * math.exp(logp)
        if val > 1.0:
            return 1.0
        return val
    # continued fraction evaluates the upper tail Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -float(i) * (float(i) - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CONV_EPS:
            break
    logp = a * math.log(x) - x - math.lgamma(a)
    if logp < _LOG_TINY:
        q = 0.0
    else:
        q = h * math.exp(logp)
    p = 1.0 - q
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


@_jit
def digamma(x: float) -> float:
    # recurrence up to x >= 10, then the asymptotic series
    r = 0.0
    while x < 10.0:
        r -= 1.0 / x
        x += 1.0
    f = 1.0 / (x * x)
    return r + math.log(x) - 0.5 / x - f * (
        1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0)))))


@_jit
def trigamma(x: float) -> float:
    r = 0.0
    while x < 15.0:
        r += 1.0 / (x * x)
        x += 1.0
    f = 1.0 / (x * x)
    return r + 1.0 / x + f * (
        0.5 + (1.0 / x) * (1.0 / 6.0 - f * (1.0 / 30.0 - f * (1.0 / 42.0 - f * (1.0 / 30.0)))))


@_jit
def solve_gamma_shape(s: float):
    # Solve ln(a) - digamma(a) = s for a > 0 (s > 0).
    # Returns (shape, iterations, converged 0/1).
    if s <= 0.0:
        return 0.0, 0, 0
    a = (3.0 - s + math.sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s)
    if a <= 0.0:
        a = 1e-8
    for it in range(1, 101):
        h = math.log(a) - digamma(a) - s
        if abs(h) < 1e-12:
            return a, it, 1
        hp = 1.0 / a - trigamma(a)
        a_new = a - h / hp
        if a_new <= 0.0:
            a_new = 0.5 * a
        a = a_new
    return a, 100, 0


@_jit
def gamma_quantile_unit(p: float, a: float) -> float:
    # Inverse of P(a, .) at probability p, unit scale.
    # Wilson-Hilferty start, bracketed Newton afterwards.
    z = norm_ppf_approx(p)
    t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * math.sqrt(a))
    if t > 0.0:
        x = a * t * t * t
    else:
        x = 0.0
    if x <= 0.0:
        # small-x asymptote of the lower tail
        x = math.exp((math.log(p) + math.lgamma(a + 1.0)) / a)
    lo = 0.0
    hi = x
    if hi <= 0.0:
        hi = a
    tries = 0
    while reg_lower_gamma(a, hi) < p and tries < 400:
        hi *= 2.0
        tries += 1
    if x <= lo or x >= hi:
        x = 0.5 * hi
    for _ in range(200):
        f = reg_lower_gamma(a, x) - p
        if f > 0.0:
            hi = x
        else:
            lo = x
        logpdf = (a - 1.0) * math.log(x) - x - math.lgamma(a)
        if logpdf > _LOG_TINY:
            xn = x - f / math.exp(logpdf)
        else:
            xn = -1.0
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-13 * (abs(xn) + _FPMIN):
            return xn
        x = xn
    return x


# ---------------------------------------------------------------------------
# array variants


if NUMBA_ENABLED:

    @_numba_njit(cache=True, nogil=True)
    def reg_lower_gamma_arr(a, x):
        out = np.empty(a.shape[0], dtype=np.float64)
        for i in range(a.shape[0]):
            out[i] = reg_lower_gamma(a[i], x[i])
        return out

    @_numba_njit(cache=True, nogil=True)
    def digamma_arr(x):
        out = np.empty(x.shape[0], dtype=np.float64)
        for i in range(x.shape[0]):
            out[i] = digamma(x[i])
        return out

    @_numba_njit(cache=True, nogil=True)
    def solve_gamma_shape_arr(s):
        out = np.empty(s.shape[0], dtype=np.float64)
        ok = np.empty(s.shape[0], dtype=np.bool_)
        for i in range(s.shape[0]):
            a, _, conv = solve_gamma_shape(s[i])
            out[i] = a
            ok[i] = conv == 1
        return out, ok

else:

    def _series_lanes(a, x):
        ap = a.copy()
        term = 1.0 / a
        total = term.copy()
        active = np.ones(a.shape[0], dtype=bool)
        for _ in range(_MAX_ITER):
            ap[active] += 1.0
            term[active] = term[active] * (x[active] / ap[active])
            total[active] += term[active]
            active &= ~(np.abs(term) < np.abs(total) * _CONV_EPS)
            if not active.any():
                break
        logp = a * np.log(x) - x - _lgamma_vec(a)
        val = np.where(logp < _LOG_TINY, 0.0, total * np.exp(np.maximum(logp, _LOG_TINY)))
        return np.minimum(val, 1.0)

    def _cf_lanes(a, x):
        b = x + 1.0 - a
        c = np.full(a.shape[0], 1.0 / _FPMIN)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(a.shape[0], dtype=bool)
        for i in range(1, _MAX_ITER + 1):
            an = -float(i) * (float(i) - a)
            b2 = b + 2.0
            d2 = an * d + b2
            d2 = np.where(np.abs(d2) < _FPMIN, _FPMIN, d2)
            c2 = b2 + an / c
            c2 = np.where(np.abs(c2) < _FPMIN, _FPMIN, c2)
            d2 = 1.0 / d2
            delta = d2 * c2
            h2 = h * delta
            b = np.where(active, b2, b)
            d = np.where(active, d2, d)
            c = np.where(active, c2, c)
            h = np.where(active, h2, h)
            active &= ~(np.abs(delta - 1.0) < _CONV_EPS)
            if not active.any():
                break
        logp = a * np.log(x) - x - _lgamma_vec(a)
        return np.where(logp < _LOG_TINY, 0.0, np.exp(np.maximum(logp, _LOG_TINY)) * h)

    def reg_lower_gamma_arr(a, x):
        a = np.ascontiguousarray(a, dtype=np.float64)
        x = np.ascontiguousarray(x, dtype=np.float64)
        out = np.zeros(a.shape[0], dtype=np.float64)
        pos = x > 0.0
        ser = pos & (x < a + 1.0)
        if ser.any():
            out[ser] = _series_lanes(a[ser], x[ser])
        cfm = pos & ~ser
        if cfm.any():
            q = _cf_lanes(a[cfm], x[cfm])
            out[cfm] = np.clip(1.0 - q, 0.0, 1.0)
        return out

    def digamma_arr(x):
        x = np.array(x, dtype=np.float64, copy=True)
        r = np.zeros_like(x)
        m = x < 10.0
        while m.any():
            r[m] -= 1.0 / x[m]
            x[m] += 1.0
            m = x < 10.0
        f = 1.0 / (x * x)
        return r + np.log(x) - 0.5 / x - f * (
            1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0)))))

    def _trigamma_arr(x):
        x = np.array(x, dtype=np.float64, copy=True)
        r = np.zeros_like(x)
        m = x < 15.0
        while m.any():
            r[m] += 1.0 / (x[m] * x[m])
            x[m] += 1.0
            m = x < 15.0
        f = 1.0 / (x * x)
        return r + 1.0 / x + f * (
            0.5 + (1.0 / x) * (1.0 / 6.0 - f * (1.0 / 30.0 - f * (1.0 / 42.0 - f * (1.0 / 30.0)))))

    def solve_gamma_shape_arr(s):
        s = np.ascontiguousarray(s, dtype=np.float64)
        a = (3.0 - s + np.sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s)
        a = np.where(a <= 0.0, 1e-8, a)
        conv = np.zeros(s.shape[0], dtype=bool)
        for _ in range(100):
            h = np.log(a) - digamma_arr(a) - s
            conv |= np.abs(h) < 1e-12
            active = ~conv
            if not active.any():
                break
            hp = 1.0 / a - _trigamma_arr(a)
            a_new = a - h / hp
            a_new = np.where(a_new <= 0.0, 0.5 * a, a_new)
            a = np.where(active, a_new, a)
        return a, conv


def warm_up() -> None:
    """Trigger JIT compilation of every kernel (no-op on the numpy path)."""
    reg_lower_gamma(2.0, 1.0)
    reg_lower_gamma(2.0, 5.0)
    digamma(1.5)
    trigamma(1.5)
    solve_gamma_shape(0.01)
    gamma_quantile_unit(0.5, 3.0)
    q_func(1.0)
    one = np.ones(2, dtype=np.float64)
    reg_lower_gamma_arr(one + 1.0, one)
    digamma_arr(one)
    solve_gamma_shape_arr(one * 0.01)
