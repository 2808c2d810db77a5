"""Spectral heat content and survival probabilities of killed Brownian motion.

Brownian motion here has generator Delta, so its transition density is
(4 pi t)^(-d/2) exp(-|x-y|^2 / (4t)) and the Dirichlet eigenvalues of an
interval of length L are (n pi / L)^2.

Two exact representations are used for every quantity:

* the Dirichlet eigenfunction series, which converges fast for large t;
* the method-of-images sum, which converges fast for small t and keeps
  full relative accuracy for the complement |D| - Q(t) as t -> 0.

Switching happens at t / L^2 = 0.1 (interval) and t / r^2 = 0.25 (ball),
where both series need only a handful of terms.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfc, erfcinv, erfcx

from .errors import DomainError

__all__ = [
    "Domain",
    "Interval",
    "Ball3",
    "parse_domain",
    "SpectralSeries",
    "spectral_series",
    "q2",
    "complement",
    "q2_remainder",
    "survival",
    "exit_cdf",
    "exit_density",
    "exit_time_sample",
    "uniform_points",
]

_SQRT_PI = math.sqrt(math.pi)
_INTERVAL_SWITCH = 0.1
_BALL_SWITCH = 0.25


class Domain:
    """Common interface of the supported domains."""

    kind = None
    dimension = None

    @property
    def volume(self):
        raise NotImplementedError

    @property
    def perimeter(self):
        raise NotImplementedError

    @property
    def scale(self):
        """Characteristic length: the interval length or the ball radius."""
        raise NotImplementedError

    @property
    def two_term_constant(self):
        """2 |dD| / sqrt(pi), the coefficient of sqrt(t) in |D| - Q(t)."""
        return 2.0 * self.perimeter / _SQRT_PI


@dataclass(frozen=True)
class Interval(Domain):
    a: float = 0.0
    b: float = 1.0
    kind = "interval"
    dimension = 1

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise DomainError(f"interval needs a < b, got ({self.a}, {self.b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self):
        return self.b - self.a

    volume = length
    scale = length

    @property
    def perimeter(self):
        return 2.0

    def __str__(self):
        return f"interval:{self.a!r},{self.b!r}"


@dataclass(frozen=True)
class Ball3(Domain):
    radius: float = 1.0
    kind = "ball3"
    dimension = 3

    def __post_init__(self):
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0):
            raise DomainError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", r)

    @property
    def volume(self):
        return 4.0 * math.pi * self.radius ** 3 / 3.0

    @property
    def perimeter(self):
        return 4.0 * math.pi * self.radius ** 2

    @property
    def scale(self):
        return self.radius

    def __str__(self):
        return f"ball3:{self.radius!r}"


def parse_domain(text):
    """Parse ``interval:a,b`` or ``ball3:r``."""
    if isinstance(text, Domain):
        return text
    kind, _, args = str(text).strip().partition(":")
    kind = kind.strip().lower()
    try:
        values = [float(v) for v in args.split(",")] if args.strip() else []
    except ValueError:
        raise DomainError(f"cannot parse domain {text!r}") from None
    if kind == "interval" and len(values) == 2:
        return Interval(*values)
    if kind == "ball3" and len(values) == 1:
        return Ball3(values[0])
    raise DomainError(f"unsupported domain {text!r}; use interval:a,b or ball3:r")


# --------------------------------------------------------------------------
# spectral data


@dataclass(frozen=True)
class SpectralSeries:
    """Dirichlet modes (lambda_n, m_n) with Q(t) = sum m_n exp(-lambda_n t)."""

    eigenvalues: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)
    volume: float = 0.0

    @property
    def truncation(self):
        return int(self.eigenvalues.size)

    def tail_mass(self):
        """|D| minus the retained masses: the t = 0 truncation error."""
        return self.volume - math.fsum(self.masses)

    def tail_bound(self, t):
        """Bound on the discarded part of Q(t) for t > 0.

        Masses decay like 1/n^2 and eigenvalues grow like n^2, so the tail
        is dominated by a geometric series started at the first dropped mode.
        """
        t = float(t)
        n = self.truncation
        lam_next = self.eigenvalues[-1] * ((n + 1.0) / n) ** 2
        gap = lam_next * ((n + 2.0) / (n + 1.0)) ** 2 - lam_next
        first = self.masses[-1] * math.exp(-lam_next * t)
        return first / -math.expm1(-gap * t) if t > 0 else self.tail_mass()

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(-np.multiply.outer(t, self.eigenvalues)) @ self.masses
        return float(out) if t.ndim == 0 else out


def _mode_numbers(domain, n_modes):
    if domain.kind == "interval":
        return 2.0 * np.arange(n_modes) + 1.0  # odd modes only
    return np.arange(1, n_modes + 1, dtype=float)


def _modes(domain, n_modes):
    n = _mode_numbers(domain, n_modes)
    if domain.kind == "interval":
        L = domain.length
        return (n * math.pi / L) ** 2, 8.0 * L / (n * math.pi) ** 2
    if domain.kind == "ball3":
        r = domain.radius
        return (n * math.pi / r) ** 2, 8.0 * r ** 3 / (math.pi * n ** 2)
    raise DomainError(f"unsupported domain {domain!r}")


def spectral_series(domain, n_modes=200):
    """First ``n_modes`` Dirichlet modes carrying mass of the unit initial datum.

    Interval (0, L): odd n, lambda_n = (n pi / L)^2, m_n = 8L / (n pi)^2.
    3-ball of radius r: eigenfunctions sin(n pi rho / r) / rho,
    lambda_n = (n pi / r)^2, m_n = 8 r^3 / (pi n^2).
    """
    if not isinstance(domain, Domain):
        raise DomainError(f"unsupported domain {domain!r}")
    lam, mass = _modes(domain, int(n_modes))
    return SpectralSeries(lam, mass, domain.volume)


def _n_eigen(s_min):
    # modes needed so that exp(-lambda_N t) < 1e-19 given t / L^2 >= s_min
    return int(math.ceil(math.sqrt(44.0 / (math.pi ** 2 * s_min)))) + 2


# --------------------------------------------------------------------------
# heat content


def ierfc(x):
    """First repeated integral of erfc: exp(-x^2)/sqrt(pi) - x erfc(x)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(under="ignore"):
        big = x > 0.5
        xb = np.where(big, x, 1.0)
        tail = np.exp(-xb * xb) * (1.0 / _SQRT_PI - xb * erfcx(xb))
        small = np.exp(-x * x) / _SQRT_PI - x * erfc(x)
    return np.where(big, tail, small)


def _image_count(t, scale, factor):
    # terms with k * factor * scale / sqrt(t) < 6.5 are kept
    return int(math.ceil(6.5 * math.sqrt(float(np.max(t))) / (factor * scale))) + 1


def _interval_complement_images(L, t):
    """L - Q(t) for t / L^2 <= switch, without cancellation."""
    sq = np.sqrt(t)
    m = np.arange(1, _image_count(t, L, 0.5) + 1, dtype=float)
    arg = np.multiply.outer(0.5 * L / sq, m)
    signs = np.where(m % 2 == 1, -1.0, 1.0)
    return 4.0 * sq * (1.0 / _SQRT_PI + 2.0 * (ierfc(arg) @ signs))


def _interval_remainder_images(L, t):
    sq = np.sqrt(t)
    m = np.arange(1, _image_count(t, L, 0.5) + 1, dtype=float)
    arg = np.multiply.outer(0.5 * L / sq, m)
    signs = np.where(m % 2 == 1, -1.0, 1.0)
    return -8.0 * sq * (ierfc(arg) @ signs)


def _ball_image_sum(r, t):
    sq = np.sqrt(t)
    k = np.arange(1, _image_count(t, r, 1.0) + 1, dtype=float)
    return ierfc(np.multiply.outer(r / sq, k)).sum(axis=-1)


def _ball_complement_images(r, t):
    sq = np.sqrt(t)
    return 4.0 * math.pi * r * (2.0 * r * sq / _SQRT_PI - t + 4.0 * r * sq * _ball_image_sum(r, t))


def _ball_remainder_images(r, t):
    sq = np.sqrt(t)
    return 4.0 * math.pi * r * t - 16.0 * math.pi * r * r * sq * _ball_image_sum(r, t)


def _regimes(domain, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("t must be nonnegative")
    switch = _INTERVAL_SWITCH if domain.kind == "interval" else _BALL_SWITCH
    return t, t <= switch * domain.scale ** 2, switch


def _eigen_q(domain, t, switch):
    series = spectral_series(domain, _n_eigen(switch))
    return series.evaluate(t)


def _piecewise(domain, t, small_fn, large_fn, at_zero):
    t, small, switch = _regimes(domain, t)
    flat = np.atleast_1d(t).ravel()
    zero = flat == 0.0
    sm = np.atleast_1d(small).ravel() & ~zero
    out = np.empty_like(flat)
    out[zero] = at_zero
    if sm.any():
        out[sm] = small_fn(flat[sm])
    lg = ~sm & ~zero
    if lg.any():
        out[lg] = large_fn(flat[lg], switch)
    return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)


def complement(domain, t):
    """|D| - Q(t), computed without cancellation for small t."""
    if domain.kind == "interval":
        small = lambda tt: _interval_complement_images(domain.length, tt)
    else:
        small = lambda tt: _ball_complement_images(domain.radius, tt)
    return _piecewise(domain, t, small,
                      lambda tt, sw: domain.volume - _eigen_q(domain, tt, sw), 0.0)


def q2(domain, t):
    """Spectral heat content Q(t) = int_D P_x(tau_D > t) dx of Brownian motion."""
    if domain.kind == "interval":
        small = lambda tt: domain.length - _interval_complement_images(domain.length, tt)
    else:
        small = lambda tt: domain.volume - _ball_complement_images(domain.radius, tt)
    return _piecewise(domain, t, small, lambda tt, sw: _eigen_q(domain, tt, sw), domain.volume)


def q2_remainder(domain, t):
    """Q(t) - (|D| - 2 |dD| sqrt(t) / sqrt(pi)).

    Exponentially small and positive for intervals; 4 pi r t to leading
    order for the 3-ball.
    """
    b = domain.two_term_constant
    if domain.kind == "interval":
        small = lambda tt: _interval_remainder_images(domain.length, tt)
    else:
        small = lambda tt: _ball_remainder_images(domain.radius, tt)
    return _piecewise(domain, t, small,
                      lambda tt, sw: _eigen_q(domain, tt, sw) - domain.volume + b * np.sqrt(tt),
                      0.0)


# --------------------------------------------------------------------------
# survival and exit times


def _local_coordinate(domain, x):
    """Distance-like coordinate used by the 1-d formulas.

    Interval: offset from the left end point.  Ball: radial distance; points
    may be given as arrays with a trailing axis of length 3.
    """
    x = np.asarray(x, dtype=float)
    if domain.kind == "interval":
        y = x - domain.a
        if np.any(~((y > 0) & (y < domain.length))):
            raise DomainError("point outside the interval")
        return y
    if x.shape and x.shape[-1] == 3:
        rad = np.sqrt(np.sum(x * x, axis=-1))
    else:
        raise DomainError("ball points must have a trailing axis of length 3")
    if np.any(~(rad < domain.radius)):
        raise DomainError("point outside the ball")
    return rad


def _erfc_kernel(a, t):
    # d/dt erfc(a / (2 sqrt t))
    with np.errstate(under="ignore"):
        return a / (2.0 * _SQRT_PI) * t ** -1.5 * np.exp(-a * a / (4.0 * t))


def _interval_state(L, y, t):
    """(F, S, f) for the interval with start offset y and time t (same shape)."""
    y = np.minimum(y, L - y)  # symmetric domain
    small = t <= _INTERVAL_SWITCH * L * L
    F = np.empty_like(t)
    S = np.empty_like(t)
    f = np.empty_like(t)
    if small.any():
        ys, ts = y[small], t[small]
        s2 = 2.0 * np.sqrt(ts)
        Fi = erfc(ys / s2)
        fi = _erfc_kernel(ys, ts)
        Si = erf(ys / s2)
        for j in range(1, 5):
            sign = 1.0 if j % 2 == 1 else -1.0
            lo, hi = j * L - ys, j * L + ys
            w = erfc(lo / s2) - erfc(hi / s2)
            Fi = Fi + sign * w
            Si = Si - sign * w
            fi = fi + sign * (_erfc_kernel(lo, ts) - _erfc_kernel(hi, ts))
        F[small], S[small], f[small] = Fi, Si, fi
    big = ~small
    if big.any():
        yb, tb = y[big], t[big]
        n = 2.0 * np.arange(_n_eigen(_INTERVAL_SWITCH) + 8) + 1.0
        lam = (n * math.pi / L) ** 2
        coef = 4.0 / (n * math.pi) * np.sin(np.multiply.outer(yb, n) * (math.pi / L))
        e = np.exp(-np.multiply.outer(tb, lam))
        Sb = np.sum(coef * e, axis=-1)
        S[big] = Sb
        F[big] = 1.0 - Sb
        f[big] = np.sum(coef * e * lam, axis=-1)
    return F, S, f


def _ball_state(r, rad, t):
    """(F, S, f) for the 3-ball at radial distance ``rad``."""
    small = t <= _BALL_SWITCH * r * r
    F = np.empty_like(t)
    S = np.empty_like(t)
    f = np.empty_like(t)
    if small.any():
        p, ts = rad[small], t[small]
        s2 = 2.0 * np.sqrt(ts)
        tiny = p < 1e-7 * r
        pp = np.where(tiny, 1.0, p)
        Fi = np.zeros_like(ts)
        fi = np.zeros_like(ts)
        F0 = np.zeros_like(ts)
        f0 = np.zeros_like(ts)
        for k in range(1, 5):
            c = (2 * k - 1) * r
            Fi = Fi + erfc((c - pp) / s2) - erfc((c + pp) / s2)
            fi = fi + _erfc_kernel(c - pp, ts) - _erfc_kernel(c + pp, ts)
            with np.errstate(under="ignore"):
                g = np.exp(-c * c / (4.0 * ts))
            # first order in p of the same brackets, divided by p
            F0 = F0 + 4.0 * g / (_SQRT_PI * s2)
            f0 = f0 + g * (c * c / (2.0 * ts) - 1.0) / (_SQRT_PI * ts ** 1.5)
        Fi = np.where(tiny, r * F0, r * Fi / pp)
        fi = np.where(tiny, r * f0, r * fi / pp)
        F[small], S[small], f[small] = Fi, 1.0 - Fi, fi
    big = ~small
    if big.any():
        p, tb = rad[big], t[big]
        n = np.arange(1, _n_eigen(_BALL_SWITCH) + 9, dtype=float)
        lam = (n * math.pi / r) ** 2
        coef = 2.0 * np.where(n % 2 == 1, 1.0, -1.0) * np.sinc(np.multiply.outer(p / r, n))
        e = np.exp(-np.multiply.outer(tb, lam))
        Sb = np.sum(coef * e, axis=-1)
        S[big] = Sb
        F[big] = 1.0 - Sb
        f[big] = np.sum(coef * e * lam, axis=-1)
    return F, S, f


def _state(domain, coord, t):
    coord, t = np.broadcast_arrays(np.asarray(coord, float), np.asarray(t, float))
    shape = t.shape
    coord, t = coord.ravel().copy(), t.ravel().copy()
    pos = t > 0
    F = np.zeros_like(t)
    S = np.ones_like(t)
    f = np.zeros_like(t)
    if pos.any():
        if domain.kind == "interval":
            Fp, Sp, fp = _interval_state(domain.length, coord[pos], t[pos])
        else:
            Fp, Sp, fp = _ball_state(domain.radius, coord[pos], t[pos])
        F[pos], S[pos], f[pos] = Fp, np.clip(Sp, 0.0, 1.0), fp
    F = np.clip(F, 0.0, 1.0)
    return F.reshape(shape), S.reshape(shape), f.reshape(shape)


def _scalar(value, *inputs):
    return float(value) if all(np.ndim(v) == 0 for v in inputs) else value


def survival(domain, x, t):
    """P_x(tau_D > t) for Brownian motion with generator Delta."""
    coord = _local_coordinate(domain, x)
    if np.any(np.asarray(t) < 0):
        raise DomainError("t must be nonnegative")
    return _scalar(_state(domain, coord, t)[1], coord, t)


def exit_cdf(domain, x, t):
    """P_x(tau_D <= t), accurate in relative terms for small t."""
    coord = _local_coordinate(domain, x)
    return _scalar(_state(domain, coord, t)[0], coord, t)


def exit_density(domain, x, t):
    """Density of tau_D under P_x."""
    coord = _local_coordinate(domain, x)
    return _scalar(_state(domain, coord, t)[2], coord, t)


def survival_at(domain, coord, t):
    """Survival from a precomputed local coordinate (offset or radius); no checks."""
    return _state(domain, coord, t)[1]


def exit_cdf_at(domain, coord, t):
    return _state(domain, coord, t)[0]


def _distance_to_boundary(domain, coord):
    if domain.kind == "interval":
        return np.minimum(coord, domain.length - coord)
    return domain.radius - coord


def _open_uniform(rng, size):
    return (rng.integers(0, 2 ** 53, size=size, dtype=np.int64) + 0.5) * (1.0 / 2 ** 53)


def invert_exit_time(domain, coord, u, rtol=1e-10, max_iter=200):
    """Solve P(tau <= t) = u for t, elementwise, by safeguarded Newton in log t."""
    coord, u = np.broadcast_arrays(np.asarray(coord, float), np.asarray(u, float))
    shape = u.shape
    coord, u = coord.ravel(), u.ravel()
    lower = u < 0.5
    target = np.where(lower, np.log(u), np.log1p(-u))
    L = domain.scale
    series = spectral_series(domain, 1)
    lam1 = float(series.eigenvalues[0])
    d = _distance_to_boundary(domain, coord)
    # initial guesses: single-boundary law for early exits, first mode for late ones
    with np.errstate(divide="ignore"):
        y_early = np.log((d / (2.0 * erfcinv(np.clip(u, 1e-300, 1.0)))) ** 2)
        y_late = np.log(np.maximum((math.log(4.0 / math.pi) - target) / lam1, 1e-3 * L * L))
    y = np.where(lower, y_early, y_late)
    lo = np.full_like(u, math.log(1e-40 * L * L))
    hi = np.full_like(u, math.log((800.0 + 10.0) / lam1))
    y = np.clip(np.where(np.isfinite(y), y, 0.5 * (lo + hi)), lo, hi)
    active = np.ones(u.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        yi = y[idx]
        ti = np.exp(yi)
        F, S, f = _state(domain, coord[idx], ti)
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(lower[idx], np.log(F) - target[idx], target[idx] - np.log(S))
            dh = ti * f / np.where(lower[idx], F, S)
        # h is increasing in y
        lo[idx] = np.where(h <= 0, np.maximum(lo[idx], yi), lo[idx])
        hi[idx] = np.where(h >= 0, np.minimum(hi[idx], yi), hi[idx])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = h / dh
            y_new = yi - step
        bad = ~np.isfinite(y_new) | (y_new <= lo[idx]) | (y_new >= hi[idx])
        y_new = np.where(bad, 0.5 * (lo[idx] + hi[idx]), y_new)
        moved = np.abs(y_new - yi)
        y[idx] = y_new
        done = ((moved < 0.1 * rtol) & ~bad) | (hi[idx] - lo[idx] < 0.1 * rtol) | (h == 0)
        active[idx[done]] = False
    return np.exp(y).reshape(shape)


def uniform_points(domain, rng, size):
    """Uniform points of D in local coordinates (offset or radius)."""
    if domain.kind == "interval":
        return domain.length * _open_uniform(rng, size)
    return domain.radius * np.cbrt(_open_uniform(rng, size))


def exit_time_sample(domain, x, rng, size=None):
    """Draw tau_D under P_x by inverting the exit-time distribution function."""
    coord = _local_coordinate(domain, x)
    if coord.ndim and size is None:
        size = coord.shape
    u = _open_uniform(rng, size)
    tau = invert_exit_time(domain, coord, u)
    return float(tau) if size is None else tau
