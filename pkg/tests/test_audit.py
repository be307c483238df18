"""Trading-event resolution, wealth accounting, crossing-bound audits."""

import math

import numpy as np
import pytest

import pathwise as pw
from pathwise.audit import AdmissibilityError, deviation_event, _admitted


def enter_exit(entry, exit_, position=1.0):
    """Hold ``position`` from the first hit of entry to the first hit of exit_."""
    return pw.SimpleStrategy(events=(
        pw.StrategyEvent(pw.HitRule(targets=(entry,)), float(position)),
        pw.StrategyEvent(pw.HitRule(targets=(exit_,)), 0.0),
    ))


# ------------------------------------------------------------------ validation


def test_rule_and_strategy_validation():
    with pytest.raises(ValueError):
        pw.HitRule()  # no targets, not immediate
    with pytest.raises(ValueError):
        pw.HitRule(targets=(1.0,), terminal_targets=(2.0,))
    with pytest.raises(ValueError):
        pw.SimpleStrategy(events=(
            pw.StrategyEvent(pw.HitRule(targets=(1.0,)), 1.0),
            pw.StrategyEvent(pw.HitRule(immediate=True), 0.0),
        ))
    with pytest.raises(ValueError):
        pw.SimpleStrategy(events=(), admissibility_lambda=-0.5)


# ---------------------------------------------------------------- hand wealths


def test_buy_and_hold(tent):
    bh = pw.buy_and_hold()
    assert pw.wealth(bh, tent) == 0.0  # round trip
    assert pw.wealth(bh, tent, t=1.0) == 1.0
    assert pw.wealth(pw.buy_and_hold(-2.0), tent, t=0.5) == -1.0


def test_enter_exit_wealth(tent):
    # long 2 units from S = .5 (t = .5) to S = 1 (t = 1)
    assert pw.wealth(enter_exit(0.5, 1.0, 2.0), tent) == 1.0
    # buy the peak, sell the retrace
    assert pw.wealth(enter_exit(1.0, 0.5, 1.0), tent) == -0.5
    # evaluation time inside the holding interval clips the open leg
    assert pw.wealth(enter_exit(0.5, 1.0, 2.0), tent, t=0.75) == 0.5


def test_untriggered_and_empty(tent):
    s = enter_exit(5.0, 6.0)
    assert pw.wealth(s, tent) == 0.0
    r = pw.resolve(s, tent)
    assert r.active_events() == 0
    assert np.all(np.isinf(r.times))
    assert pw.wealth(pw.SimpleStrategy(events=()), tent) == 0.0


def test_resolution_details(tent):
    r = pw.resolve(enter_exit(0.5, 1.0, 2.0), tent)
    assert list(r.times) == [0.5, 1.0]
    assert list(r.positions) == [2.0, 0.0]
    assert list(r.hit_values) == [0.5, 1.0]
    assert not r.terminated


def test_wealth_linear_in_position(corpus):
    for p in corpus[:6]:
        base = pw.wealth(pw.buy_and_hold(1.0), p)
        assert base == pytest.approx(p.end_value - p.start_value, abs=1e-12)
        assert pw.wealth(pw.buy_and_hold(-3.5), p) == pytest.approx(-3.5 * base, abs=1e-12)


# ----------------------------------------------------------------- min wealth


def test_min_wealth_short_position(tent):
    short = pw.SimpleStrategy(
        events=(pw.StrategyEvent(pw.HitRule(immediate=True), -1.0),),
    )
    assert pw.min_wealth(short, tent) == -1.0  # the peak hurts the short most
    assert pw.min_wealth(short, tent, t=0.5) == -0.5
    assert pw.min_wealth(pw.buy_and_hold(), tent) == 0.0


def test_admissibility_floor(tent):
    floored = pw.SimpleStrategy(
        events=(pw.StrategyEvent(pw.HitRule(immediate=True), -2.0),),
        admissibility_lambda=0.5,
    )
    with pytest.raises(AdmissibilityError):
        pw.wealth(floored, tent)
    # floor exactly at the running minimum passes (tolerance guard)
    exact = pw.SimpleStrategy(
        events=(pw.StrategyEvent(pw.HitRule(immediate=True), -1.0),),
        admissibility_lambda=1.0,
    )
    assert pw.wealth(exact, tent) == 0.0


def test_min_wealth_brute(corpus, rng):
    # exact interval extremes vs dense sampling of the gain process
    for p in corpus[:5]:
        lo, hi = pw.path_extremes(p)
        mid = 0.5 * (lo + hi)
        s = enter_exit(mid, hi, 1.5)
        m = pw.min_wealth(s, p)
        ts = np.linspace(0.0, p.end_time, 1501)
        sampled = min(pw.wealth(s, p, t=float(t)) for t in ts)
        assert m <= sampled + 1e-12
        assert m == pytest.approx(sampled, abs=0.05)


# ----------------------------------------------------------------- upcrossing


def test_upcrossing_zigzag_compounds():
    z = pw.zigzag_path(0.0, 1.0, 2, start=0.0)
    s = pw.upcrossing_strategy(0.0, 1, K=1.0)
    # two clean rounds at h = 1/2: capital (1 + 1/4)^2
    assert pw.wealth(s, z) == (1.0 + 0.25) ** 2 - 1.0
    r = pw.resolve(s, z)
    assert not r.terminated


def test_upcrossing_capital_formula(corpus):
    # m rounds multiply capital by exactly (1 + 2^-n/(2K)) each
    cases = [(1, 1.0, 3), (2, 2.0, 4), (3, 0.5, 2)]
    for n, K, m in cases:
        h = 2.0 ** -n
        z = pw.zigzag_path(0.0, h, m, start=0.0)
        # the default round budget n^2 2^n can sit below m for small n
        s = pw.upcrossing_strategy(0.0, n, K=K, max_rounds=m + 1)
        want = (1.0 + h / (2.0 * K)) ** m - 1.0
        assert pw.wealth(s, z) == pytest.approx(want, abs=1e-12)


def test_upcrossing_stop_loss():
    p = pw.make_path([0.0, 1.0, 2.0], [0.0, -0.5, 1.0])
    s = pw.upcrossing_strategy(0.0, 2, K=0.5)
    r = pw.resolve(s, p)
    assert r.terminated
    # entered 1 unit at 0, stopped out at -K: loss of K times the unit stake
    assert pw.wealth(s, p) == -0.5
    assert np.all(r.positions[1:] == 0.0)
    assert pw.min_wealth(s, p) >= -1.0 - 1e-9


def test_upcrossing_validation():
    with pytest.raises(ValueError):
        pw.upcrossing_strategy(0.3, 1, K=1.0)  # u off the grid
    with pytest.raises(ValueError):
        pw.upcrossing_strategy(0.0, 1, K=0.0)
    with pytest.raises(ValueError):
        pw.upcrossing_strategy(0.0, 1, K=1.0, max_rounds=0)


def test_upcrossing_never_entered(tent):
    s = pw.upcrossing_strategy(-2.0, 1, K=4.0, max_rounds=3)
    assert pw.wealth(s, tent) == 0.0


def test_upcrossing_admissible_on_random_paths(bounded_corpus):
    s = pw.upcrossing_strategy(0.25, 2, K=1.0, max_rounds=40)
    for p in bounded_corpus:
        w = pw.wealth(s, p)  # must not raise
        assert pw.min_wealth(s, p) >= -1.0 - 1e-9
        assert 1.0 + w >= -1e-9  # capital stays non-negative


# -------------------------------------------------------------- crossing audit


def test_crossing_report_tent_exact(tent):
    rep = pw.crossing_bound_report(tent)
    assert rep.levels == (3, 4, 5, 6, 7)
    assert rep.max_cell_totals == (2, 2, 2, 2, 2)
    assert rep.c_levels == tuple(2.0 / (n * n * 2.0 ** n) for n in (3, 4, 5, 6, 7))
    assert rep.c_overall == 2.0 / (9 * 8)
    assert not rep.flagged  # decaying constants are typical, not suspicious


def test_crossing_report_monotone_and_constant():
    mono = pw.linear_path(T=1.0, slope=1.0)
    rep = pw.crossing_bound_report(mono)
    assert rep.max_cell_totals == (1, 1, 1, 1, 1)
    assert rep.c_levels == tuple(1.0 / (n * n * 2.0 ** n) for n in (3, 4, 5, 6, 7))
    assert not rep.flagged
    flat = pw.constant_path(0.3, T=1.0)
    rep = pw.crossing_bound_report(flat)
    assert rep.c_overall == 0.0
    assert not rep.flagged


def test_crossing_report_flags_growth():
    # one sweep through the range, then thousands of crossings of a single
    # fine cell: C_n grows with n, which is the audit's atypicality signal
    band = 2.0 ** -7
    vals = [0.0, 1.0]
    for _ in range(3000):
        vals.extend([0.5 - band, 0.5 + band])
    p = pw.make_path(np.arange(len(vals), dtype=float), vals)
    rep = pw.crossing_bound_report(p)
    assert rep.flagged
    assert rep.c_levels[-1] > 10.0 * rep.c_levels[0]


def test_crossing_report_validation(tent):
    with pytest.raises(ValueError):
        pw.crossing_bound_report(tent, levels=(0, 1))


def test_audit_report_dict(tent):
    rep = pw.crossing_bound_report(tent)
    d = rep.to_dict()
    assert "wealth_trajectory" not in d
    import dataclasses
    rep2 = dataclasses.replace(rep, wealth_trajectory=((0.0, 0.0), (1.0, 0.5)))
    d2 = rep2.to_dict()
    assert d2["wealth_trajectory"] == [[0.0, 0.0], [1.0, 0.5]]


# ------------------------------------------------------------------ deviations


def test_monte_carlo_config():
    cfg = pw.MonteCarloConfig(seeds=5, level=8)
    assert cfg.seed_list() == [0, 1, 2, 3, 4]
    assert cfg.step() == 2.0 ** -20
    cfg2 = pw.MonteCarloConfig(seeds=[7, 9], level=4, dt=2.0 ** -12)
    assert cfg2.seed_list() == [7, 9]
    assert cfg2.step() == 2.0 ** -12


def test_constant_path_never_deviates():
    flat = pw.constant_path(0.5, T=1.0)
    assert not deviation_event(flat, 3, threshold=1e-6, horizon=1.0)


def test_admission_filter():
    big = pw.constant_path(5.0, T=1.0)
    assert not _admitted(big, 3, 4.0, 1.0)
    small = pw.constant_path(0.5, T=1.0)
    assert _admitted(small, 3, 4.0, 1.0)


def test_deviation_frequency_small():
    cfg = pw.MonteCarloConfig(seeds=3, level=3, alpha=0.25, K=4.0, dt=2.0 ** -10)
    rep = pw.deviation_frequency(cfg)
    assert rep.n_paths == 3
    assert 0 <= rep.n_deviations <= rep.n_admitted <= 3
    assert rep.threshold == 2.0 ** -0.75
    # the exponential bound is astronomically loose at small levels
    assert rep.vacuous
    assert rep.exponential_bound > 1e200
    assert rep.log_exponential_bound == pytest.approx(
        math.log(2.0) - 2.0 ** (3 * 0.25) + 16.0 * 4.0 * 9, abs=1e-12
    )
    d = rep.to_dict()
    assert d["level"] == 3 and d["vacuous"] is True


def test_deviation_frequency_validation():
    with pytest.raises(ValueError):
        pw.deviation_frequency(pw.MonteCarloConfig(seeds=1, level=1))
    with pytest.raises(ValueError):
        pw.deviation_frequency(pw.MonteCarloConfig(seeds=1, level=3, alpha=0.7))
