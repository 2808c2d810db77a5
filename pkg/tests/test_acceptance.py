"""Acceptance criteria at their stated tolerances; one verdict line per criterion."""
import math
import time

import numpy as np
import pytest

from spectral_heat import asymptotics as asym
from spectral_heat import cli
from spectral_heat import heat_brownian as hb
from spectral_heat import shc, specfun
from spectral_heat import subordinator as sub

UNIT = hb.Interval(0.0, 1.0)
BALL = hb.Ball3(1.0)


def levy_density(x):
    return x ** -1.5 * np.exp(-0.25 / x) / (2.0 * math.sqrt(math.pi))


def test_01_levy_density(acceptance):
    t0 = time.perf_counter()
    x = np.exp(np.linspace(math.log(1e-3), math.log(1e4), 2001))
    ev = sub.density(1.0, 1.0, x)
    err = float(np.max(np.abs(ev.value / levy_density(x) - 1)))
    both = set(ev.method) == {"series", "kanter"}
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-8 and both
    acceptance.record(1, "Levy density oracle", ok,
                      f"max rel err {err:.2e}, branches {sorted(map(str, set(ev.method)))}, "
                      f"{elapsed:.2f}s")
    assert ok


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
def test_02_laplace_and_normalization(acceptance, alpha):
    worst = 0.0
    for lam in (0.5, 1.0, 2.0, 5.0):
        got = sub.expect(alpha, lambda u: np.exp(-lam * u), upper=2000.0 / lam)
        worst = max(worst, abs(got - math.exp(-lam ** (alpha / 2))))
    mass = sub.expect(alpha, lambda u: np.ones_like(u), tail=lambda U: sub.sf(alpha, U))
    ok = worst <= 1e-7 and abs(mass - 1) <= 1e-8
    acceptance.record(2, "Laplace transform and normalization", ok,
                      f"alpha={alpha}: laplace abs err {worst:.1e}, mass-1 {mass - 1:.1e}")
    assert ok


MOMENT_PAIRS = [(0.6, 0.1), (0.6, 0.25), (0.6, -0.5), (1.0, 0.3), (1.0, -1.0),
                (1.2, 0.5), (1.5, 0.2), (1.5, 0.7), (1.8, 0.85), (1.8, -2.0)]


def test_03_fractional_moments(acceptance):
    worst = 0.0
    for alpha, gamma in MOMENT_PAIRS:
        quad = sub.expect(alpha, lambda u: u ** gamma,
                          tail=lambda U: sub._series_tail(alpha / 2, np.array([U]), gamma)[0])
        worst = max(worst, abs(quad / sub.fractional_moment(alpha, gamma) - 1))
    ok = worst <= 1e-6
    acceptance.record(3, "fractional moments", ok, f"10 pairs, max rel err {worst:.1e}")
    assert ok


@pytest.mark.parametrize("alpha", [
    pytest.param(0.6, marks=pytest.mark.xfail(
        strict=True, reason="the next term in the tail expansion is of relative size "
                            "x^(-alpha/2) = 4e-3 at x = 1e8")),
    1.0, 1.5])
def test_04_tail_law(acceptance, alpha):
    x = 1e8
    ratio = sub.g1(alpha, x) * x ** (1 + alpha / 2) / specfun.tail_density_constant(alpha)
    ok = abs(ratio - 1) <= 1e-3
    acceptance.record(4, "tail law at x=1e8", ok, f"alpha={alpha}: ratio-1 {ratio - 1:+.3e}")
    assert ok


@pytest.mark.parametrize("domain,b", [(UNIT, 2.256758), (BALL, 14.17963)])
def test_05_brownian_two_term(acceptance, domain, b):
    t = 1e-8
    scaled = hb.complement(domain, t) / math.sqrt(t)
    ok = abs(scaled / b - 1) <= 1e-3
    acceptance.record(5, "Brownian two-term law", ok, f"{domain}: {scaled:.7f} vs {b}")
    assert ok


@pytest.mark.parametrize("domain", [UNIT, BALL], ids=str)
@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_06_second_term_supercritical(acceptance, domain, alpha):
    rep = asym.verify_second_term(domain, alpha, t_min=1e-7)
    target = 2 / math.pi * specfun.gamma(1 - 1 / alpha) * domain.perimeter
    ok = rep.rel_err <= 0.01 and math.isclose(rep.predicted, target, rel_tol=1e-14)
    acceptance.record(6, "second term, alpha in (1,2)", ok,
                      f"{rep.check}: rel err {rep.rel_err:.1e}")
    assert ok


@pytest.mark.parametrize("domain", [UNIT, BALL], ids=str)
def test_07_second_term_critical(acceptance, domain):
    rep = asym.verify_second_term(domain, 1.0, t_min=1e-9)
    ok = rep.rel_err <= 0.02 and math.isclose(rep.predicted, 2 / math.pi * domain.perimeter)
    acceptance.record(7, "second term, alpha = 1", ok, f"{rep.check}: rel err {rep.rel_err:.1e}")
    assert ok


@pytest.mark.parametrize("domain", [UNIT, BALL], ids=str)
@pytest.mark.parametrize("alpha", [0.5, 0.8])
def test_08_second_term_subcritical(acceptance, domain, alpha):
    rep = asym.verify_second_term(domain, alpha)
    dual = rep.fit_diagnostics["dual_rel_diff"]
    ok = rep.rel_err <= 0.01 and dual <= 1e-8
    acceptance.record(8, "second term, alpha < 1", ok,
                      f"{rep.check}: rel err {rep.rel_err:.1e}, dual diff {dual:.1e}")
    assert ok


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_09_third_term(acceptance, alpha):
    rep = asym.verify_third_term(BALL, alpha)
    lo, hi = asym.third_term_bracket(BALL, alpha)
    inside = 0 <= rep.predicted and lo <= rep.predicted <= hi
    ok = rep.rel_err <= 0.02 and inside
    acceptance.record(9, "third term on the unit ball", ok,
                      f"alpha={alpha}: rel err {rep.rel_err:.1e}, C3 {rep.predicted:.5f} "
                      f"in [{lo:.3f}, {hi:.1f}]")
    assert ok


@pytest.mark.parametrize("alpha", [1.0, 1.2, 1.5, 1.8])
def test_10_auxiliary_limits(acceptance, alpha):
    reports = asym.verify_lemma_limits(alpha)
    worst = max(r.rel_err for r in reports)
    ok = all(r.rel_err <= 0.01 for r in reports)
    acceptance.record(10, "auxiliary limits", ok,
                      f"alpha={alpha}: {len(reports)} ratios, max rel err {worst:.1e}")
    assert ok


@pytest.mark.slow
def test_11_supremum_gap(acceptance):
    t0 = time.perf_counter()
    rep, est = asym.verify_sup_gap(1.5, shc.McConfig(n_samples=10 ** 6, batch=20_000),
                                  n_grid=10_000)
    elapsed = time.perf_counter() - t0
    d = rep.fit_diagnostics
    lower = specfun.gamma(1 / 3) / math.pi
    sup = est.finest.mean
    in_sandwich = lower <= sup <= 2 * lower
    ok = d["upper99_of_twice_sup"] < 3.410882 and in_sandwich
    acceptance.record(11, "strict supremum gap", ok,
                      f"E sup ~ {sup:.5f} +- {est.finest.stderr:.1e}, 2 x 99% upper "
                      f"{d['upper99_of_twice_sup']:.5f} < 3.410882, runtime {elapsed:.0f}s")
    assert ok


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_12_killed_process_bounds(acceptance, alpha):
    rep, curve = asym.verify_upper_bounds(UNIT, alpha)
    d = rep.fit_diagnostics
    ok = d["relation_holds"] and rep.passed
    acceptance.record(12, "comparison with the killed stable process", ok,
                      f"alpha={alpha}: relation {d['relation_holds']}, max scaled "
                      f"{max(d['scaled']):.4f} vs bound {rep.predicted:.4f}")
    assert ok


MC_CASES = [(UNIT, 0.6, 1e-1), (UNIT, 1.0, 1e-2), (UNIT, 1.5, 1e-3),
            (BALL, 0.6, 1e-2), (BALL, 1.0, 1e-3), (BALL, 1.5, 1e-1),
            (UNIT, 1.8, 1e-1), (BALL, 1.2, 1e-2), (BALL, 0.8, 1e-3)]


@pytest.mark.parametrize("domain,alpha,t", MC_CASES, ids=lambda v: str(v))
def test_13_monte_carlo_matches_quadrature(acceptance, domain, alpha, t):
    est = shc.q_tilde_mc(domain, alpha, t, shc.McConfig(n_samples=10 ** 6))
    quad = shc.q_tilde(domain, alpha, t)
    z = (est.mean - quad) / est.stderr
    ok = abs(z) <= 3
    acceptance.record(13, "Monte Carlo vs quadrature", ok,
                      f"{domain} alpha={alpha} t={t:g}: z={z:+.2f}")
    assert ok


def test_13_worker_independence(acceptance):
    cfg = shc.McConfig(n_samples=10 ** 6, batch=25_000)
    texts = []
    for workers in (1, 4, 16):
        table = cli.Table(cli.CURVE_HEADER, "csv")
        for t in (1e-1, 1e-2):
            e = shc.q_tilde_mc(BALL, 1.5, t, cfg, workers=workers)
            table.row(t, e.mean, e.stderr)
        texts.append(table.text())
    ok = texts[0] == texts[1] == texts[2]
    acceptance.record(13, "Monte Carlo vs quadrature", ok,
                      "byte-identical CSV for 1, 4, 16 workers")
    assert ok
