"""Spectral heat content of subordinate killed Brownian motion.

The deterministic route uses the subordination identity

    |D| - Qt(t) = int_0^inf (|D| - Q(t^(2/alpha) u)) g(1, u) du,

integrated in log u with the tail beyond the saturation point closed by the
convergent series of the subordinator density.  The Monte Carlo routes
estimate the same quantity, the heat content of the killed subordinate
process (an isotropic stable process killed on exit), and the expected
running maximum of the symmetric stable process.

Monte Carlo work is split into fixed-size batches.  Batch ``k`` draws from a
generator keyed by ``(master_seed, k)``, and batch sums are combined
in batch order with exact rounding, so results do not depend on the number
of worker threads.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import heat_brownian as hb
from . import subordinator as sub
from .errors import DomainError

__all__ = [
    "QuadratureSpec",
    "McConfig",
    "McEstimate",
    "GridEstimate",
    "q_tilde",
    "q_tilde_complement",
    "remainder_integral",
    "q_tilde_mc",
    "q_alpha_mc",
    "sup_stable_mc",
    "symmetric_stable_sample",
    "worker_count",
    "run_batches",
]

WORKERS_ENV = "SHC_WORKERS"
_Z99 = 2.5758293035489004


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings of the subordination integral.

    ``tail_order`` caps the number of series terms used to close the tail;
    0 means the full convergent series.
    """

    rel_tol: float = 1e-11
    abs_tol: float = 1e-300
    split_points: tuple = ()
    tail_order: int = 0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        pts = tuple(float(p) for p in self.split_points)
        if any(p <= 0 for p in pts) or any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("split points must be positive and strictly increasing")
        object.__setattr__(self, "split_points", pts)
        if self.tail_order < 0:
            raise ValueError("tail_order must be >= 0")


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 100_000
    master_seed: int = 20240101
    batch: int = 50_000

    def __post_init__(self):
        if self.n_samples < 1 or self.batch < 1:
            raise ValueError("n_samples and batch must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int

    @property
    def ci99(self):
        return (self.mean - _Z99 * self.stderr, self.mean + _Z99 * self.stderr)


@dataclass(frozen=True)
class GridEstimate:
    """Monitoring-grid estimates ordered from the finest grid to the coarsest."""

    n_grid: tuple
    estimates: tuple
    trend: float = field(default=float("nan"))

    @property
    def finest(self):
        return self.estimates[0]


# --------------------------------------------------------------------------
# quadrature


def _tail_sf(rho, u, order):
    return _series_tail_trunc(rho, u, 0.0, order)


def _series_tail_trunc(rho, u, beta, order):
    n, _, _ = sub._series_coefficients(rho)
    terms = sub._series_terms(rho, np.array([u]), power_shift=beta, divisor=rho * n - beta)
    if order:
        terms = terms[:order]
    return float(terms.sum())


def _saturation_time(domain):
    # beyond this Brownian time Q(v) < 1e-19 |D|
    lam1 = float(hb.spectral_series(domain, 1).eigenvalues[0])
    return 45.0 / lam1


def _breakpoints(domain, alpha, tau, spec):
    switch = 0.1 if domain.kind == "interval" else 0.25
    pts = [switch * domain.scale ** 2 / tau, domain.scale ** 2 / tau]
    return pts + [float(p) for p in spec.split_points]


def q_tilde_complement(domain, alpha, t, spec=QuadratureSpec()):
    """|D| - Qt(t) by the subordination integral, without cancellation."""
    a = sub.as_alpha(alpha)
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    tau = t ** (2.0 / a.alpha)
    rho = a.rho
    u_sat = _saturation_time(domain) / tau
    vol = domain.volume

    def h(u):
        return hb.complement(domain, tau * u)

    def tail(u):
        return vol * _tail_sf(rho, u, spec.tail_order)

    pts = _breakpoints(domain, a, tau, spec) + [u_sat]
    return sub.expect(a, h, tail=tail, breakpoints=pts, rel_tol=spec.rel_tol,
                      abs_tol=spec.abs_tol * vol)


def q_tilde(domain, alpha, t, spec=QuadratureSpec()):
    """Spectral heat content Qt(t) of subordinate killed Brownian motion."""
    comp = q_tilde_complement(domain, alpha, t, spec)
    if comp < 0.5 * domain.volume:
        return domain.volume - comp
    # late times: |D| - comp cancels, so sum the Dirichlet modes directly.
    # Modes past N carry mass at most |D| - sum(m_n) and are damped by at
    # least exp(-t lambda_(N+1)^(alpha/2)).
    a = sub.as_alpha(alpha)
    t = float(t)
    n = 64
    while n <= 1 << 21:
        s = hb.spectral_series(domain, n + 1)
        decay = np.exp(-t * s.eigenvalues ** a.rho)
        total = math.fsum(s.masses[:n] * decay[:n])
        rest = max(domain.volume - math.fsum(s.masses[:n]), 0.0) + 4e-16 * domain.volume
        if rest * decay[n] <= spec.rel_tol * total:
            return total
        n *= 4
    return domain.volume - comp


def remainder_integral(domain, alpha, t, spec=QuadratureSpec()):
    """int_0^inf R(t^(2/alpha) u) g(1, u) du with R the Brownian remainder.

    R(v) = Q(v) - |D| + 2|dD| sqrt(v)/sqrt(pi).  Equals
    Qt(t) - |D| + c2 t^(1/alpha) for alpha in (1, 2), computed without
    cancellation.
    """
    a = sub.as_alpha(alpha)
    if not a.alpha > 1.0:
        raise DomainError("the remainder integral needs alpha in (1, 2)")
    t = float(t)
    tau = t ** (2.0 / a.alpha)
    rho = a.rho
    u_sat = _saturation_time(domain) / tau
    vol = domain.volume
    b = domain.two_term_constant

    def h(u):
        return hb.q2_remainder(domain, tau * u)

    def tail(u):
        return (b * math.sqrt(tau) * _series_tail_trunc(rho, u, 0.5, spec.tail_order)
                - vol * _series_tail_trunc(rho, u, 0.0, spec.tail_order))

    pts = _breakpoints(domain, a, tau, spec) + [u_sat]
    return sub.expect(a, h, tail=tail, breakpoints=pts, rel_tol=spec.rel_tol,
                      abs_tol=spec.abs_tol * vol)


# --------------------------------------------------------------------------
# parallel batches


def worker_count():
    """Threads used for Monte Carlo batches (env ``SHC_WORKERS``, default all cores)."""
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def batch_generator(master_seed, index):
    """Generator for batch ``index`` of a run keyed by ``(master_seed, index)``.

    The stream depends only on the key, never on which worker runs the batch.
    """
    seq = np.random.SeedSequence([int(master_seed) & (2 ** 64 - 1), int(index)])
    return np.random.Generator(np.random.SFC64(seq))


def run_batches(work, cfg, workers=None):
    """Run ``work(rng, size) -> array of per-batch sums`` over all batches.

    Returns the exactly rounded totals (one per output column) in batch order.
    """
    sizes = [cfg.batch] * (cfg.n_samples // cfg.batch)
    if cfg.n_samples % cfg.batch:
        sizes.append(cfg.n_samples % cfg.batch)
    workers = worker_count() if workers is None else int(workers)

    def one(k):
        return np.atleast_1d(np.asarray(work(batch_generator(cfg.master_seed, k), sizes[k]),
                                        dtype=float))

    if workers <= 1 or len(sizes) == 1:
        parts = [one(k) for k in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    cols = np.stack(parts)
    return [math.fsum(cols[:, j]) for j in range(cols.shape[1])]


def _bernoulli_estimate(total, total_sq, n, scale):
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return McEstimate(scale * mean, scale * math.sqrt(var / n), n)


# --------------------------------------------------------------------------
# Monte Carlo estimators


def q_tilde_mc(domain, alpha, t, cfg=McConfig(), exact_tau=False, workers=None):
    """Monte Carlo estimate of Qt(t) = int_D P_x(tau_D > S_t) dx.

    Each sample draws x uniform in D, S_t, and a uniform U that drives the
    exit time tau = F_x^(-1)(U) by inversion.  Since F_x is increasing,
    {tau > S_t} = {F_x(S_t) < U}; the default evaluates that comparison,
    ``exact_tau=True`` solves for tau explicitly.  Both give the same
    indicator up to the 1e-10 relative inversion tolerance.
    """
    a = sub.as_alpha(alpha)
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")

    def work(rng, size):
        coord = hb.uniform_points(domain, rng, size)
        s = sub.sample(a, t, rng, size)
        u = hb._open_uniform(rng, size)
        if exact_tau:
            alive = hb.invert_exit_time(domain, coord, u) > s
        else:
            alive = hb.exit_cdf_at(domain, coord, s) < u
        k = float(np.count_nonzero(alive))
        return [k, k]

    total, total_sq = run_batches(work, cfg, workers)
    return _bernoulli_estimate(total, total_sq, cfg.n_samples, domain.volume)


def _grid_levels(n_grid, levels=3):
    n_grid = int(n_grid)
    step = 2 ** (levels - 1)
    if n_grid < step or n_grid % step:
        raise DomainError(f"n_grid must be a positive multiple of {step}")
    return tuple(n_grid // 2 ** k for k in range(levels))


def _trend(estimates):
    # successive differences shrink by this factor per grid halving
    d1 = estimates[1].mean - estimates[0].mean
    d2 = estimates[2].mean - estimates[1].mean
    return d1 / d2 if d2 != 0 else float("nan")


def q_alpha_mc(domain, alpha, t, n_grid, cfg=McConfig(), workers=None, block=64):
    """Heat content of the stable process killed on exiting an interval.

    Paths are simulated on the grid k t / n_grid with increments
    sqrt(2 dS) Z, dS an (alpha/2)-stable subordinator increment.  Exit is
    checked at grid points only, so each estimate is biased upwards.  The
    same paths monitored on every second and every fourth grid point give
    the coarser estimates.
    """
    a = sub.as_alpha(alpha)
    if domain.kind != "interval":
        raise DomainError("q_alpha_mc supports intervals only")
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    grids = _grid_levels(n_grid)
    n = grids[0]
    dt = t / n
    L = domain.length

    def work(rng, size):
        x = hb.uniform_points(domain, rng, size)
        alive = np.ones((3, size), dtype=bool)
        idx = np.arange(size)
        done = 0
        while done < n and idx.size:
            m = min(block, n - done)
            k = idx.size
            ds = sub.sample(a, dt, rng, (k, m))
            z = rng.standard_normal((k, m))
            path = x[idx, None] + np.cumsum(np.sqrt(2.0 * ds) * z, axis=1)
            inside = (path > 0.0) & (path < L)
            steps = np.arange(done + 1, done + m + 1)
            for lvl in range(3):
                sel = steps % (2 ** lvl) == 0
                if sel.any():
                    alive[lvl, idx] &= inside[:, sel].all(axis=1)
            x[idx] = path[:, -1]
            done += m
            idx = idx[alive[2, idx]]
        counts = alive.sum(axis=1).astype(float)
        return np.concatenate([counts, counts])

    totals = run_batches(work, cfg, workers)
    ests = tuple(_bernoulli_estimate(totals[j], totals[3 + j], cfg.n_samples, domain.volume)
                 for j in range(3))
    return GridEstimate(grids, ests, _trend(ests))


def symmetric_stable_sample(alpha, rng, size, dtype=np.float64):
    """Symmetric alpha-stable draws with E exp(i theta X) = exp(-|theta|^alpha).

    Chambers-Mallows-Stuck; this is the law of B(S_1) for Brownian motion B
    with generator Delta time-changed by the (alpha/2)-stable subordinator.
    """
    a = float(sub.as_alpha(alpha).alpha)
    dtype = np.dtype(dtype).type
    v = (rng.random(size, dtype=dtype) - dtype(0.5)) * dtype(math.pi)
    w = -np.log(dtype(1.0) - rng.random(size, dtype=dtype))
    # a uniform of exactly 0 would put V on -pi/2; clamp at the grid resolution
    c = np.maximum(np.cos(v), dtype(np.finfo(dtype).eps))
    # w == 0 happens with float32 resolution; the limit of the power is right
    with np.errstate(divide="ignore", over="ignore"):
        return np.sin(dtype(a) * v) / c ** dtype(1.0 / a) \
            * (np.cos(dtype(1.0 - a) * v) / w) ** dtype((1.0 - a) / a)


def sup_stable_mc(alpha, cfg=McConfig(), n_grid=1024, workers=None, block=256,
                  dtype=np.float32):
    """Grid-maximum estimate of E[sup_{s<=1} X_s] for the symmetric stable process.

    The maximum over k/n_grid, k = 0..n_grid, under-estimates the supremum.
    Increments are drawn and summed in ``dtype`` within blocks of ``block``
    steps; block offsets and maxima are kept in float64.  Coarser grids reuse
    the same paths.
    """
    a = sub.as_alpha(alpha)
    if not a.alpha > 1.0:
        raise DomainError("sup_stable_mc needs alpha in (1, 2)")
    grids = _grid_levels(n_grid)
    n = grids[0]
    block = max(4, block - block % 4)
    scale = np.dtype(dtype).type((1.0 / n) ** (1.0 / a.alpha))

    def work(rng, size):
        pos = np.zeros(size)
        best = np.zeros((3, size))
        done = 0
        while done < n:
            m = min(block, n - done)
            inc = symmetric_stable_sample(a, rng, (size, m), dtype)
            inc *= scale
            path = np.cumsum(inc, axis=1)
            for lvl in range(3):
                # grid points are the steps divisible by 2^lvl; done is a multiple of 4
                step = 2 ** lvl
                sub_max = path[:, step - 1::step].max(axis=1)
                np.maximum(best[lvl], pos + sub_max, out=best[lvl])
            pos += path[:, -1]
            done += m
        sums = best.sum(axis=1)
        sq = (best * best).sum(axis=1)
        return np.concatenate([sums, sq])

    totals = run_batches(work, cfg, workers)
    ests = []
    for j in range(3):
        mean = totals[j] / cfg.n_samples
        var = max(totals[3 + j] / cfg.n_samples - mean * mean, 0.0) \
            * cfg.n_samples / max(cfg.n_samples - 1, 1)
        ests.append(McEstimate(mean, math.sqrt(var / cfg.n_samples), cfg.n_samples))
    ests = tuple(ests)
    return GridEstimate(grids, ests, _trend(ests))
