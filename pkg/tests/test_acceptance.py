"""Acceptance gate: twelve numbered criteria, one pass/fail line each.

Run with -s (or read the -v test lines) to see the per-criterion summary.
The heavy Brownian corpus (20 paths, dt = 2^-20, T = 1) is built once and
shared by criteria 5-8; criterion 11 generates its own 50-seed sweep.
"""

import math
import statistics

import numpy as np
import pytest

import pathwise as pw
from pathwise.calculus import AbsoluteContinuityError


def report(k: int, ok: bool, detail: str) -> None:
    print(f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {k} failed: {detail}"


@pytest.fixture(scope="module")
def corpus100():
    return [pw.random_segment_path(seed) for seed in range(100)]


@pytest.fixture(scope="module")
def brown20():
    return [pw.brownian_path(1.0, 2.0 ** -20, seed=s) for s in range(20)]


def test_criterion_01_discrete_tanaka(corpus100):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for p in corpus100:
        lo, hi = pw.path_extremes(p)
        for n in range(0, 7):
            part = pw.lebesgue_partition(p, n)
            ts = rng.uniform(0.0, p.end_time, size=50)
            us = rng.uniform(lo - 0.25, hi + 0.25, size=50)
            for t, u in zip(ts, us):
                worst = max(worst, abs(pw.tanaka_residual(p, part, float(t), float(u))))
    report(1, worst <= 1e-10,
           f"max |residual| = {worst:.3e} over 100 paths x 7 levels x 50 (t,u)")


def test_criterion_02_total_mass(corpus100):
    rng = np.random.default_rng(77)
    worst = 0.0
    for p in corpus100:
        for n in range(0, 7):
            f = pw.local_time_field(p, n)
            part = f.partition
            for t in (float(rng.uniform(0.05, 1.0)) * p.end_time, p.end_time):
                lhs = f.section(t).integral()
                vals = pw.evaluate_many(p, np.minimum(part.times, t))
                rhs = 0.5 * float(np.sum(np.diff(vals) ** 2))
                rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
                if rhs != 0.0 or lhs != 0.0:
                    worst = max(worst, rel)
    report(2, worst <= 1e-10, f"max relative gap = {worst:.3e}")


def test_criterion_03_follmer_telescoping(corpus100):
    sq = pw.c2_function(lambda x: x * x, lambda x: 2.0 * x, lambda x: 2.0 + 0.0 * x)
    worst = 0.0
    for p in corpus100:
        for n in range(0, 7):
            worst = max(worst, abs(pw.ito_identity_check(sq, p, n)))
    cub = pw.c2_function(lambda x: x ** 3, lambda x: 3.0 * x * x, lambda x: 6.0 * x)
    sin = pw.c2_function(np.sin, np.cos, lambda x: -np.sin(x))
    decays = True
    for seed in (0, 1, 2):
        p = pw.random_segment_path(seed)
        for desc in (cub, sin):
            decays &= abs(pw.ito_identity_check(desc, p, 6)) < abs(
                pw.ito_identity_check(desc, p, 2)
            )
    report(3, worst <= 1e-10 and decays,
           f"max |x^2 residual| = {worst:.3e}; x^3/sin residuals decay: {decays}")


def test_criterion_04_tent_oracle(tent):
    part = pw.lebesgue_partition(tent, 1)
    lt_ok = pw.discrete_local_time(tent, part, 2.0, 0.25) == 0.5
    gap = pw.tanaka_meyer(tent, 1, 0.25, t=2.0).gap
    qv_ok = all(
        pw.quadratic_variation_along(tent, pw.lebesgue_partition(tent, n)).total()
        == 2.0 ** (1 - n)
        for n in range(0, 7)
    )
    report(4, lt_ok and gap == 0.0 and qv_ok,
           f"L(2, 0.25) exact: {lt_ok}; gap = {gap}; qv totals exact n=0..6: {qv_ok}")


def test_criterion_05_convergence_rate(brown20):
    alphas, scaled_last_two, finite = [], [], True
    for p in brown20:
        rep = pw.convergence_study(p, range(4, 9), alpha=0.35)
        alphas.append(rep.alpha_hat)
        finite &= math.isfinite(rep.c_alpha)
        scaled_last_two.append(rep.scaled[-1] - rep.scaled[-2])
    med = statistics.median(alphas)
    n_ok = sum(1 for a in alphas if a >= 0.30)
    trend = statistics.median(scaled_last_two) <= 0.0
    ok = med >= 0.35 and n_ok >= 12 and finite and trend
    report(5, ok,
           f"median alpha_hat = {med:.3f} (>= 0.35), {n_ok}/20 seeds >= 0.30, "
           f"sup finite: {finite}, top-two scaled trend non-increasing: {trend}")


def test_criterion_06_profile_bounded(brown20):
    ratios = []
    for p in brown20:
        profs = [
            pw.p_variation_profile(pw.local_time_field(p, n), 3.0)
            for n in range(4, 9)
        ]
        ratios.append(max(profs) / min(profs))
    n_ok = sum(1 for r in ratios if r <= 4.0)
    report(6, n_ok >= 12,
           f"{n_ok}/20 seeds have max/min p-variation profile <= 4 "
           f"(worst ratio {max(ratios):.2f})")


def test_criterion_07_crossing_bound(brown20, tent):
    n_ok = 0
    for p in brown20:
        rep = pw.crossing_bound_report(p, horizon=1.0)
        pos = [c for c in rep.c_levels if c > 0]
        if pos and max(pos) / min(pos) <= 10.0:
            n_ok += 1
    tent_rep = pw.crossing_bound_report(tent)
    tent_ok = tent_rep.c_levels == tuple(2.0 / (n * n * 2.0 ** n) for n in (3, 4, 5, 6, 7))
    mono_rep = pw.crossing_bound_report(pw.linear_path(T=1.0, slope=1.0))
    mono_ok = mono_rep.c_levels == tuple(1.0 / (n * n * 2.0 ** n) for n in (3, 4, 5, 6, 7))
    report(7, n_ok >= 12 and tent_ok and mono_ok,
           f"{n_ok}/20 seeds with C_n max/min <= 10; closed forms exact: "
           f"tent {tent_ok}, monotone {mono_ok}")


def test_criterion_08_occupation_density(brown20):
    errs = [
        pw.occupation_density_check(p, 7, region=[(0.0, 0.5)], t=1.0).rel_err
        for p in brown20
    ]
    med = statistics.median(errs)
    exact = all(
        pw.occupation_density_check(brown20[s], n, t=1.0).rel_err == 0.0
        for s in (0, 1, 2)
        for n in range(1, 8)
    )
    report(8, med <= 0.05 and exact,
           f"median rel_err on [0, 0.5] = {med:.4f} (<= 0.05); whole-line exact: {exact}")


def test_criterion_09_young_oracle():
    res = pw.young_integral(lambda t: t, lambda t: t * t, 0.0, 1.0, tol=5e-7)
    smooth_ok = res.converged and abs(res.value - 2.0 / 3.0) <= 1e-6

    c = 0.375
    step = pw.young_integral(
        np.sin, lambda t: (t > c).astype(float), 0.0, 1.0, breakpoints=(c,)
    )
    step_ok = step.converged and step.value == math.sin(c)

    def lacunary(offset):
        def fn(t):
            tt = np.asarray(t, dtype=float)
            total = np.zeros(tt.shape)
            for j in range(1, 41):
                x = (tt - offset * 2.0 ** (-j)) * 2.0 ** j
                total += 2.0 ** (-j / 3.0) * (np.maximum(0.0, np.floor((x + 1.0) / 2.0)) % 2.0)
            return total
        return fn

    rough = pw.young_integral(lacunary(0.0), lacunary(1.0 / 3.0), 0.0, 1.0,
                              tol=1e-6, max_depth=18)
    rough_ok = (not rough.converged) and rough.error_estimate > 1.0
    report(9, smooth_ok and step_ok and rough_ok,
           f"u d(u^2): |err| = {abs(res.value - 2/3):.2e}; step atom exact: {step_ok}; "
           f"lacunary pair flagged divergent: {rough_ok}")


def test_criterion_10_strategy_compounding():
    worst = 0.0
    for n, K, m in [(1, 1.0, 2), (2, 2.0, 5), (3, 0.5, 3), (4, 4.0, 7)]:
        h = 2.0 ** -n
        z = pw.zigzag_path(0.0, h, m, start=0.0)
        s = pw.upcrossing_strategy(0.0, n, K=K, max_rounds=m + 1)
        capital = 1.0 + pw.wealth(s, z)
        worst = max(worst, abs(capital - (1.0 + h / (2.0 * K)) ** m))
    strat = pw.upcrossing_strategy(0.25, 2, K=1.0)
    admissible = True
    for seed in range(1000):
        p = pw.random_segment_path(seed, bound=1.0)
        try:
            pw.wealth(strat, p)
        except pw.AdmissibilityError:
            admissible = False
            break
        if 1.0 + pw.min_wealth(strat, p) < -1e-9:
            admissible = False
            break
    report(10, worst <= 1e-12 and admissible,
           f"max |capital - (1 + 2^-n/2K)^m| = {worst:.2e}; "
           f"capital >= 0 on 1000 bounded paths: {admissible}")


def test_criterion_11_deviation_frequency():
    rep = pw.deviation_frequency(pw.MonteCarloConfig(seeds=50, level=8, alpha=0.25, K=4.0))
    se = (
        math.sqrt(rep.empirical_freq * (1.0 - rep.empirical_freq) / rep.n_admitted)
        if rep.n_admitted
        else 0.0
    )
    limit = min(1.0, rep.exponential_bound) + 2.0 * se
    ok = rep.empirical_freq <= limit
    vac = "vacuous" if rep.vacuous else "binding"
    report(11, ok,
           f"freq = {rep.n_deviations}/{rep.n_admitted} = {rep.empirical_freq:.3f} "
           f"<= {limit:.3f}; bound is {vac} (log bound = {rep.log_exponential_bound:.1f})")


def test_criterion_12_negative_control(tent):
    def staircase(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        out = np.zeros(x.shape)
        scale = np.full(x.shape, 0.5)
        active = np.ones(x.shape, dtype=bool)
        for _ in range(40):
            left = active & (x < 1.0 / 3.0)
            right = active & (x > 2.0 / 3.0)
            mid = active & ~left & ~right
            out = np.where(right | mid, out + scale, out)
            active &= ~mid
            x = np.where(left, 3.0 * x, np.where(right, 3.0 * x - 2.0, x))
            scale = np.where(left | right, 0.5 * scale, scale)
        return out

    desc = pw.qvar_function(staircase, lambda x: 0.0 * np.asarray(x), qvar=1.0)
    try:
        pw.change_of_variable(desc, tent, 3)
        rejected = False
    except AbsoluteContinuityError:
        rejected = True
    report(12, rejected, f"staircase primitive rejected: {rejected}")
