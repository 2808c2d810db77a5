"""The (alpha/2)-stable subordinator S with E exp(-lam S_t) = exp(-t lam^(alpha/2)).

Density evaluation uses two routes that overlap on a band around a
crossover point ``x*(alpha)``:

* for x >= x* the convergent power series in x^(-alpha/2) (Stirling-bounded
  truncation);
* for x < x* Kanter's non-oscillatory integral over (0, pi), evaluated with
  double-exponential (tanh-sinh) quadrature, which keeps full relative
  accuracy deep in the super-exponentially small left tail.

A third route, Fourier inversion of the characteristic function, is kept as
an independent oracle (:func:`density_fourier`).

Throughout, ``rho = alpha / 2`` is the index of the subordinator.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import specfun
from .errors import DomainError, NonConvergenceError, QuadratureError
from .quadrature import integrate

__all__ = [
    "Alpha",
    "as_alpha",
    "DensityEval",
    "TruncationBound",
    "crossover",
    "density_at_one",
    "density",
    "density_fourier",
    "cdf",
    "sf",
    "series_truncation_bound",
    "density_upper_envelope",
    "envelope_constant",
    "fractional_moment",
    "truncated_moment",
    "tail_half_moment",
    "tail_power_moment",
    "expect",
    "sample",
]

_EPS = np.finfo(float).eps
# series terms kept; enough for rho up to 0.95 at the crossover
_N_SERIES_MAX = 800
_AMPLIFICATION_BUDGET = 1e3


@dataclass(frozen=True)
class Alpha:
    """Stability index alpha in (0, 2) of the subordinate stable process."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a < 2.0) or math.isnan(a):
            raise DomainError(f"alpha must lie strictly inside (0, 2), got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def rho(self):
        return 0.5 * self.alpha

    @property
    def case(self):
        if self.alpha < 1.0:
            return "subcritical"
        if self.alpha == 1.0:
            return "critical"
        return "supercritical"

    def __float__(self):
        return self.alpha


def as_alpha(alpha):
    return alpha if isinstance(alpha, Alpha) else Alpha(alpha)


@dataclass
class DensityEval:
    """Density value(s) with the branch used and an error estimate."""

    value: object
    method: object
    est_error: object


@dataclass(frozen=True)
class TruncationBound:
    n_start: int
    bound: float


# --------------------------------------------------------------------------
# series branch


@lru_cache(maxsize=64)
def _series_coefficients(rho):
    """Signed coefficients c_n of g(1,x) = sum c_n x^(-rho n - 1), n = 1..N.

    Returned as (sign, log|c_n|) to stay finite for large n.
    """
    n = np.arange(1, _N_SERIES_MAX + 1, dtype=float)
    s = np.asarray(specfun.sinpi(rho * n))
    sign = np.where(np.arange(1, _N_SERIES_MAX + 1) % 2 == 1, 1.0, -1.0) * np.sign(s)
    with np.errstate(divide="ignore"):
        logmag = specfun.lgamma(1.0 + rho * n) - specfun.lgamma(n + 1.0) \
            + np.log(np.abs(s)) - math.log(math.pi)
    return n, sign, logmag


def _series_terms(rho, x, power_shift=-1.0, divisor=None):
    """Matrix of series terms c_n x^(-rho n + power_shift) / divisor_n."""
    n, sign, logmag = _series_coefficients(rho)
    logx = np.log(np.asarray(x, dtype=float))
    if logx.size:
        # drop terms below 1e-40 of the largest one at the smallest x
        mags = logmag - rho * n * float(np.min(logx))
        keep = np.flatnonzero(mags > mags.max() - 92.0)
        if keep.size and keep[-1] + 8 < n.size:
            m = keep[-1] + 8
            n, sign, logmag = n[:m], sign[:m], logmag[:m]
            if divisor is not None:
                divisor = divisor[:m]
    expo = logmag[:, None] + (-rho * n[:, None] + power_shift) * logx[None, :]
    if divisor is not None:
        expo = expo - np.log(np.abs(divisor))[:, None]
        sign = sign * np.sign(divisor)
    with np.errstate(under="ignore", over="ignore"):
        return sign[:, None] * np.exp(expo)


def _series_sum(terms):
    with np.errstate(over="ignore", invalid="ignore"):
        return _series_sum_raw(terms)


def _series_sum_raw(terms):
    total = terms.sum(axis=0)
    absum = np.abs(terms).sum(axis=0)
    last = np.abs(terms[-8:]).max(axis=0)
    return total, absum, last


@lru_cache(maxsize=64)
def _crossover(rho):
    grid = np.exp(np.linspace(math.log(1e3), math.log(1e-3), 241))
    terms = _series_terms(rho, grid)
    total, absum, last = _series_sum(terms)
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (total > 0) & (absum / total <= _AMPLIFICATION_BUDGET) & (last <= 1e-17 * total)
    if not ok[0]:
        raise NonConvergenceError(f"series unusable even at x=1e3 for rho={rho}")
    first_bad = np.argmin(ok) if not ok.all() else ok.size
    return float(grid[first_bad - 1])


def crossover(alpha):
    """Smallest x at which the series branch is used for g(1, x)."""
    return _crossover(as_alpha(alpha).rho)


def series_truncation_bound(alpha, x, n_start):
    """Stirling majorant of sum_{n >= n_start} |c_n| x^(-rho n - 1).

    Uses Gamma(1+z) <= sqrt(2 pi z) (z/e)^z e^(1/(12 z)) and
    n! >= sqrt(2 pi n) (n/e)^n.
    """
    rho = as_alpha(alpha).rho
    x = float(x)
    if n_start < 1:
        raise ValueError("n_start must be >= 1")
    total = 0.0
    prev = math.inf
    n = n_start
    while True:
        logb = (1.0 / (12.0 * rho * n) + (rho * n + 0.5) * math.log(rho)
                + (rho - 1.0) * n * (math.log(n) - 1.0)
                - (rho * n + 1.0) * math.log(x) - math.log(math.pi))
        b = math.exp(logb) if logb > -745 else 0.0
        total += b
        if (b <= 1e-40 * total or b == 0.0) and b <= prev:
            break
        if n - n_start > 100000:
            raise NonConvergenceError("majorant summation did not settle")
        prev = b
        n += 1
    return TruncationBound(n_start=n_start, bound=total)


# --------------------------------------------------------------------------
# Kanter integral branch

_TS_TMAX = 4.5
_TS_LEVEL = 64  # 1/h of the fine level for rho <= 0.8


def _ts_level(rho):
    # the peak of A exp(-z A) narrows like (1 - rho); refine the step to match
    return _TS_LEVEL * 2 ** max(0, math.ceil(math.log2(0.2 / (1.0 - rho))))


@lru_cache(maxsize=8)
def _tanh_sinh(level):
    """Nodes on (0, pi) as distances to both endpoints, with weights."""
    h = 1.0 / level
    tau = np.arange(-_TS_TMAX, _TS_TMAX + 0.5 * h, h)
    q = 0.5 * math.pi * np.sinh(tau)
    with np.errstate(over="ignore"):
        left = math.pi / (1.0 + np.exp(-2.0 * q))    # distance to 0
        right = math.pi / (1.0 + np.exp(2.0 * q))    # distance to pi
        e = np.exp(-2.0 * np.abs(q))
        sech2 = 4.0 * e / (1.0 + e) ** 2
    w = h * 0.5 * math.pi * 0.5 * math.pi * np.cosh(tau) * sech2
    return left, right, w


@lru_cache(maxsize=64)
def _kanter_nodes(rho, level):
    """log A(phi) at the tanh-sinh nodes, with log A(0+) and weights."""
    left, right, w = _tanh_sinh(level)
    phi = np.where(left <= right, left, math.pi - right)
    sin_phi = np.where(left <= right, np.sin(left), np.sin(right))
    log_a = (rho * np.log(np.sin(rho * phi))
             + (1.0 - rho) * np.log(np.sin((1.0 - rho) * phi))
             - np.log(sin_phi)) / (1.0 - rho)
    log_a0 = (rho * math.log(rho) + (1.0 - rho) * math.log(1.0 - rho)) / (1.0 - rho)
    # A(phi) - A(0+) > 0, computed without cancellation near phi = 0
    with np.errstate(over="ignore"):
        excess = math.exp(log_a0) * np.expm1(log_a - log_a0)
    return log_a, log_a0, excess, w


def kanter_function(alpha, phi):
    """Kanter's A(phi) = [sin(rho phi)^rho sin((1-rho) phi)^(1-rho) / sin phi]^(1/(1-rho))."""
    rho = as_alpha(alpha).rho
    phi = np.asarray(phi, dtype=float)
    out = np.exp((rho * np.log(np.sin(rho * phi))
                  + (1.0 - rho) * np.log(np.sin((1.0 - rho) * phi))
                  - np.log(np.sin(phi))) / (1.0 - rho))
    return float(out) if out.ndim == 0 else out


def _kanter_sum(rho, z, level, with_a):
    log_a, log_a0, excess, w = _kanter_nodes(rho, level)
    a0 = math.exp(log_a0)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        expo = -z[:, None] * excess[None, :]
        if with_a:
            vals = w[None, :] * np.exp(log_a[None, :] + expo)
        else:
            vals = w[None, :] * np.exp(expo)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    return vals.sum(axis=1), a0


def _kanter_density(rho, x):
    """g(1, x) via Kanter's integral; returns (value, est_error)."""
    x = np.asarray(x, dtype=float)
    kappa = rho / (1.0 - rho)
    z = x ** (-kappa)
    level = _ts_level(rho)
    fine, a0 = _kanter_sum(rho, z, level, True)
    coarse, _ = _kanter_sum(rho, z, level // 2, True)
    with np.errstate(under="ignore", divide="ignore"):
        log_pref = math.log(kappa / math.pi) - np.log(x) / (1.0 - rho) - z * a0
        pref = np.exp(log_pref)
    value = pref * fine
    err = pref * np.abs(fine - coarse) + 4 * _EPS * value
    return value, err


def _kanter_cdf(rho, x):
    x = np.asarray(x, dtype=float)
    z = x ** (-rho / (1.0 - rho))
    s, a0 = _kanter_sum(rho, z, _ts_level(rho), False)
    with np.errstate(under="ignore"):
        return np.exp(-z * a0) * s / math.pi


def _kanter_sf(rho, x):
    x = np.asarray(x, dtype=float)
    z = x ** (-rho / (1.0 - rho))
    log_a, log_a0, excess, w = _kanter_nodes(rho, _ts_level(rho))
    with np.errstate(over="ignore", under="ignore"):
        zA = z[:, None] * np.exp(log_a)[None, :]
        vals = -np.expm1(-zA) * w[None, :]
    return vals.sum(axis=1) / math.pi


# --------------------------------------------------------------------------
# public density API


def _as_positive_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be positive")
    return arr


def _g1(rho, x):
    """Vectorised g(1, x) returning (value, est_error, used_series_mask)."""
    x = np.atleast_1d(x)
    xs = _crossover(rho)
    big = x >= xs
    value = np.empty_like(x)
    err = np.empty_like(x)
    if big.any():
        terms = _series_terms(rho, x[big])
        total, absum, last = _series_sum(terms)
        value[big] = total
        err[big] = absum * 8 * _EPS + last
    if (~big).any():
        v, e = _kanter_density(rho, x[~big])
        value[~big] = v
        err[~big] = e
    return value, err, big


def density_at_one(alpha, x, tol=1e-10):
    """Density g(1, x) of S_1.

    ``x`` may be a scalar or an array.  Raises ``NonConvergenceError`` when
    the estimated relative error exceeds ``tol`` at a point where the
    density is representable.
    """
    a = as_alpha(alpha)
    xa = _as_positive_array(x)
    value, err, big = _g1(a.rho, xa.ravel())
    bad = err > tol * np.maximum(value, 1e-300)
    if np.any(bad & (value > 1e-290)):
        i = np.flatnonzero(bad)[0]
        raise NonConvergenceError(
            f"density at x={xa.ravel()[i]!r} has est. rel. error {err[i] / value[i]:.2e} > {tol}")
    method = np.where(big, "series", "kanter")
    if xa.ndim == 0:
        return DensityEval(float(value[0]), str(method[0]), float(err[0]))
    shape = xa.shape
    return DensityEval(value.reshape(shape), method.reshape(shape), err.reshape(shape))


def g1(alpha, x):
    """Plain vectorised g(1, x) without diagnostics."""
    xa = np.asarray(x, dtype=float)
    value, _, _ = _g1(as_alpha(alpha).rho, xa.ravel())
    return float(value[0]) if xa.ndim == 0 else value.reshape(xa.shape)


def density(alpha, t, x, tol=1e-10):
    """Density g(t, x) of S_t, from g(1, .) by exact scaling."""
    a = as_alpha(alpha)
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    if t == 1.0:
        return density_at_one(a, x, tol)
    scale = t ** (2.0 / a.alpha)
    xa = _as_positive_array(x)
    ev = density_at_one(a, xa / scale, tol)
    return DensityEval(ev.value / scale, ev.method, ev.est_error / scale)


def density_fourier(alpha, x, epsabs=1e-13):
    """g(1, x) by real-form Fourier inversion (oracle; moderate x only).

    g(1,x) = (1/pi) int_0^inf exp(-th^r cos(pi r/2)) cos(x th - th^r sin(pi r/2)) dth.
    """
    from scipy.integrate import quad

    rho = as_alpha(alpha).rho
    c = math.cos(0.5 * math.pi * rho)
    s = math.sin(0.5 * math.pi * rho)
    x = float(x)

    def even(th):
        return math.exp(-th ** rho * c) * math.cos(th ** rho * s)

    def odd(th):
        return math.exp(-th ** rho * c) * math.sin(th ** rho * s)

    # cos(x th - p) = cos(x th) cos p + sin(x th) sin p; the th^rho kink at 0
    # is integrated separately so the Fourier-weighted rule sees a smooth tail
    def near(th):
        return even(th) * math.cos(x * th) + odd(th) * math.sin(x * th)

    i0, e0 = quad(near, 0.0, 1.0, epsabs=epsabs, epsrel=1e-13, limit=400)
    # the damping factor is below 1e-18 beyond th_max
    th_max = max(2.0, (42.0 / c) ** (1.0 / rho))
    i1, e1 = quad(even, 1.0, th_max, weight="cos", wvar=x, epsabs=epsabs, limit=2000)
    i2, e2 = quad(odd, 1.0, th_max, weight="sin", wvar=x, epsabs=epsabs, limit=2000)
    return DensityEval((i0 + i1 + i2) / math.pi, "fourier", (e0 + e1 + e2) / math.pi)


def cdf(alpha, x):
    """P(S_1 <= x)."""
    rho = as_alpha(alpha).rho
    xa = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xa).ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    xs = _crossover(rho)
    big = pos & (flat >= xs)
    small = pos & ~big
    if big.any():
        out[big] = 1.0 - _series_tail(rho, flat[big], 0.0)
    if small.any():
        out[small] = _kanter_cdf(rho, flat[small])
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def sf(alpha, x):
    """P(S_1 > x), accurate in the right tail."""
    rho = as_alpha(alpha).rho
    xa = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xa).ravel()
    out = np.ones_like(flat)
    pos = flat > 0
    xs = _crossover(rho)
    big = pos & (flat >= xs)
    small = pos & ~big
    if big.any():
        out[big] = _series_tail(rho, flat[big], 0.0)
    if small.any():
        out[small] = _kanter_sf(rho, flat[small])
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def _series_tail(rho, x, beta):
    """int_x^inf s^beta g(1, s) ds by termwise integration (x >= x*, beta < rho)."""
    n, _, _ = _series_coefficients(rho)
    terms = _series_terms(rho, x, power_shift=beta, divisor=rho * n - beta)
    return terms.sum(axis=0)


# --------------------------------------------------------------------------
# envelope


@lru_cache(maxsize=64)
def _envelope_constant(rho):
    x = np.exp(np.linspace(math.log(1e-4), math.log(1e8), 4001))
    g = _g1(rho, x)[0]
    ratio = g / np.minimum(1.0, x ** (-1.0 - rho))
    limit = specfun.tail_density_constant(2.0 * rho)
    return 1.05 * max(float(ratio.max()), limit)


def envelope_constant(alpha):
    """Certified C_env(alpha): 1.05 x the scanned max of g(1,x) / min(1, x^(-1-alpha/2))."""
    return _envelope_constant(as_alpha(alpha).rho)


def density_upper_envelope(alpha, t, x):
    """C_env(alpha) * min(t^(-2/alpha), t x^(-1-alpha/2)), an upper bound for g(t, x)."""
    a = as_alpha(alpha)
    x = np.asarray(x, dtype=float)
    t = float(t)
    out = envelope_constant(a) * np.minimum(t ** (-2.0 / a.alpha), t * x ** (-1.0 - a.rho))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# moments and expectations


def fractional_moment(alpha, gamma):
    """E[S_1^gamma] = Gamma(1 - 2 gamma/alpha) / Gamma(1 - gamma), gamma < alpha/2."""
    a = as_alpha(alpha)
    gamma = float(gamma)
    if not gamma < a.rho:
        raise DomainError(f"moment of order {gamma} is infinite for alpha={a.alpha}")
    return specfun.gamma(1.0 - gamma / a.rho) / specfun.gamma(1.0 - gamma)


def left_tail_cut(alpha, depth):
    """Point below which P(S_1 <= u) <= exp(-A(0+) u^(-rho/(1-rho))) < e^-depth."""
    rho = as_alpha(alpha).rho
    a0 = rho ** (rho / (1.0 - rho)) * (1.0 - rho)
    return (float(depth) / a0) ** (-(1.0 - rho) / rho)


@lru_cache(maxsize=64)
def _lower_cut(rho):
    return left_tail_cut(2.0 * rho, 75.0)


def expect(alpha, h, lower=0.0, upper=math.inf, tail=None, rel_tol=1e-11,
           abs_tol=0.0, breakpoints=(), max_intervals=6000):
    """int_lower^upper h(u) g(1, u) du by adaptive quadrature in log u.

    ``h`` must be vectorised.  For ``upper = inf`` a callable ``tail(U)``
    returning the integral beyond U (with U >= x*) must be supplied; the
    quadrature then runs up to ``U = max(x*, max(breakpoints))``.
    """
    a = as_alpha(alpha)
    rho = a.rho
    xs = _crossover(rho)
    if lower > 0:
        lo = float(lower)
    else:
        lo = min(_lower_cut(rho), 0.1 * upper)
    tail_value = 0.0
    if math.isinf(upper):
        if tail is None:
            raise ValueError("an analytic tail is required for an infinite upper limit")
        hi = max([xs, lo * math.e] + [b for b in breakpoints if b > lo])
        tail_value = float(tail(hi))
    else:
        hi = float(upper)
    if hi <= lo:
        return tail_value
    s_lo, s_hi = math.log(lo), math.log(hi)
    pts = [s_lo]
    inner = sorted({math.log(b) for b in list(breakpoints) + [xs, 1.0] if lo < b < hi})
    pts.extend(inner)
    pts.append(s_hi)
    # seed with panels of unit width in log u
    seeded = [pts[0]]
    for p, q in zip(pts[:-1], pts[1:]):
        k = max(1, int(math.ceil(q - p)))
        seeded.extend(np.linspace(p, q, k + 1)[1:].tolist())

    def integrand(s):
        u = np.exp(s)
        return h(u) * g1(a, u) * u

    res = integrate(integrand, seeded, rel_tol=rel_tol, abs_tol=abs_tol,
                    max_intervals=max_intervals)
    return res.value + tail_value


def tail_power_moment(alpha, beta, cutoff):
    """int_cutoff^inf s^beta g(1, s) ds for beta < alpha/2."""
    a = as_alpha(alpha)
    rho = a.rho
    if not beta < rho:
        raise DomainError("tail moment diverges for beta >= alpha/2")
    cutoff = float(cutoff)
    xs = _crossover(rho)
    if cutoff >= xs:
        return float(_series_tail(rho, np.array([cutoff]), beta)[0])

    def tail(u):
        return float(_series_tail(rho, np.array([u]), beta)[0])

    return expect(a, lambda u: u ** beta, lower=max(cutoff, 0.0) if cutoff > 0 else 0.0,
                  tail=tail)


def tail_half_moment(alpha, cutoff):
    """int_cutoff^inf s^(1/2) g(1, s) ds, alpha in (1, 2)."""
    a = as_alpha(alpha)
    if not a.alpha > 1.0:
        raise DomainError("tail_half_moment needs alpha in (1, 2)")
    return tail_power_moment(a, 0.5, cutoff)


def truncated_moment(alpha, k, cutoff, rel_tol=1e-11):
    """E[S_1^(k/2); S_1 < cutoff] by adaptive quadrature."""
    a = as_alpha(alpha)
    if int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    cutoff = float(cutoff)
    if not cutoff > 0:
        raise DomainError("cutoff must be positive")
    beta = 0.5 * k
    try:
        return expect(a, lambda u: u ** beta, upper=cutoff, rel_tol=rel_tol)
    except QuadratureError:
        raise


# --------------------------------------------------------------------------
# sampling


def _open_uniform(rng, size):
    # uniform on the open interval (0, 1)
    return (rng.integers(0, 2 ** 53, size=size, dtype=np.int64) + 0.5) * (1.0 / 2 ** 53)


def sample(alpha, t, rng, size=None):
    """Draw S_t by Kanter's representation S_1 = (A(pi U) / E)^((1-rho)/rho).

    ``rng`` is a ``numpy.random.Generator``.  The draw of S_t equals
    t^(2/alpha) times the draw of S_1 from the same generator state.
    """
    a = as_alpha(alpha)
    rho = a.rho
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    u = _open_uniform(rng, size)
    e = rng.standard_exponential(size)
    phi = math.pi * u
    log_a = (rho * np.log(np.sin(rho * phi))
             + (1.0 - rho) * np.log(np.sin((1.0 - rho) * phi))
             - np.log(np.sin(phi))) / (1.0 - rho)
    s1 = np.exp((1.0 - rho) / rho * (log_a - np.log(e)))
    if t != 1.0:
        s1 = t ** (2.0 / a.alpha) * s1
    return float(s1) if size is None else s1
