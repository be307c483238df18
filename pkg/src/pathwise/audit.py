"""Simple strategies, wealth audits, and crossing-bound statistics.

A simple strategy is a finite list of (entry rule, position) events; the
position entered at the n-th event is held until the (n+1)-th entry (or the
evaluation time), so the wealth is the exact telescoping sum
sum_n F_n (S(tau_{n+1} ^ t) - S(tau_n ^ t)).  Entry rules are first-hit
predicates on value levels, which keeps every entry time an exact crossing
time of the interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .localtime import crossing_counts
from .partitions import Grid
from .paths import Path, brownian_path, evaluate, path_extremes

__all__ = [
    "AdmissibilityError",
    "HitRule",
    "StrategyEvent",
    "SimpleStrategy",
    "ResolvedStrategy",
    "buy_and_hold",
    "resolve",
    "wealth",
    "min_wealth",
    "upcrossing_strategy",
    "AuditReport",
    "crossing_bound_report",
    "MonteCarloConfig",
    "DeviationReport",
    "deviation_frequency",
]


class AdmissibilityError(RuntimeError):
    """Wealth dropped below the declared admissibility floor."""


@dataclass(frozen=True)
class HitRule:
    """First hit of any of ``targets`` (value levels) after the previous entry.

    Targets listed in ``terminal_targets`` end the whole strategy when hit
    (stop-loss semantics): the event still activates, later events do not.
    ``immediate`` rules trigger at the search start and are only allowed for
    the first event of a strategy.
    """

    targets: tuple[float, ...] = ()
    terminal_targets: tuple[float, ...] = ()
    immediate: bool = False

    def __post_init__(self):
        if not self.immediate and not self.targets:
            raise ValueError("a hit rule needs targets unless it is immediate")
        unknown = set(self.terminal_targets) - set(self.targets)
        if unknown:
            raise ValueError(f"terminal targets {sorted(unknown)} not among targets")


@dataclass(frozen=True)
class StrategyEvent:
    """Entry rule plus the position to hold from that entry to the next one.

    ``position`` is a number of units, or a callable receiving the strategy's
    cumulative gain at the entry time (for compounding strategies).
    """

    rule: HitRule
    position: object


@dataclass(frozen=True)
class SimpleStrategy:
    events: tuple[StrategyEvent, ...]
    admissibility_lambda: float | None = None

    def __post_init__(self):
        for i, ev in enumerate(self.events):
            if ev.rule.immediate and i > 0:
                raise ValueError("only the first event may be immediate")
        if self.admissibility_lambda is not None and self.admissibility_lambda < 0:
            raise ValueError("admissibility floor must be >= 0")


def buy_and_hold(position: float = 1.0) -> SimpleStrategy:
    return SimpleStrategy(events=(StrategyEvent(HitRule(immediate=True), float(position)),))


def _first_hit_any(path: Path, t0: float, rule: HitRule, include_start: bool):
    """(time, target) of the earliest qualifying hit, or None.

    include_start allows a hit exactly at t0; afterwards entries must be
    strictly later, so a touch at the search start is skipped.
    """
    if rule.immediate:
        return float(t0), evaluate(path, t0)
    times, vals = path.times, path.values
    best = None
    for target in rule.targets:
        if include_start and evaluate(path, t0) == target:
            cand = float(t0)
        else:
            cand = None
            i = min(int(np.searchsorted(times, t0, side="right")) - 1, times.size - 2)
            i = max(i, 0)
            while i < times.size - 1:
                ta, tb = float(times[i]), float(times[i + 1])
                va, vb = float(vals[i]), float(vals[i + 1])
                lo, hi = (va, vb) if va <= vb else (vb, va)
                if lo <= target <= hi:
                    if vb == va:
                        t_hit = max(ta, t0)
                    else:
                        t_hit = max(ta + (target - va) / (vb - va) * (tb - ta), ta)
                    if t_hit > t0:
                        cand = t_hit
                        break
                i += 1
        if cand is not None and (best is None or cand < best[0]):
            best = (cand, float(target))
    return best


@dataclass(frozen=True)
class ResolvedStrategy:
    """Entry times (inf when never triggered), realized positions, hit values."""

    times: np.ndarray
    positions: np.ndarray
    hit_values: np.ndarray
    terminated: bool

    def active_events(self) -> int:
        return int(np.sum(np.isfinite(self.times)))


def resolve(strategy: SimpleStrategy, path: Path) -> ResolvedStrategy:
    """Resolve all entry times and compounded positions along a path."""
    n = len(strategy.events)
    times = np.full(n, math.inf)
    positions = np.zeros(n)
    hits = np.full(n, math.nan)
    t_cur = 0.0
    gain = 0.0
    prev_pos = 0.0
    prev_time = 0.0
    terminated = False
    for i, ev in enumerate(strategy.events):
        found = _first_hit_any(path, t_cur, ev.rule, include_start=(i == 0))
        if found is None:
            break
        t_hit, val = found
        gain += prev_pos * (evaluate(path, t_hit) - evaluate(path, prev_time))
        pos = ev.position(gain) if callable(ev.position) else float(ev.position)
        times[i] = t_hit
        positions[i] = pos
        hits[i] = val
        prev_pos = pos
        prev_time = t_hit
        t_cur = t_hit
        if val in ev.rule.terminal_targets:
            terminated = True
            break
    for a in (times, positions, hits):
        a.setflags(write=False)
    return ResolvedStrategy(times=times, positions=positions, hit_values=hits,
                            terminated=terminated)


def _gain_terms(resolved: ResolvedStrategy, path: Path, t: float):
    """Per-event (entry_clip, exit_clip, position) triples up to time t."""
    out = []
    times = resolved.times
    for i in range(len(times)):
        if not math.isfinite(times[i]) or times[i] >= t:
            break
        t_in = times[i]
        t_out = times[i + 1] if i + 1 < len(times) else math.inf
        t_out = min(t_out, t)
        out.append((t_in, t_out, float(resolved.positions[i])))
    return out


def wealth(strategy: SimpleStrategy, path: Path, t: float | None = None) -> float:
    """Exact gain sum_n F_n (S(tau_{n+1} ^ t) - S(tau_n ^ t)).

    When the strategy declares an admissibility floor, the running minimum of
    the gain over [0, t] is checked against it and a violation raises.
    """
    if t is None:
        t = path.end_time
    resolved = resolve(strategy, path)
    terms = _gain_terms(resolved, path, t)
    gain = math.fsum(p * (evaluate(path, b) - evaluate(path, a)) for a, b, p in terms)
    lam = strategy.admissibility_lambda
    if lam is not None:
        m = min_wealth(strategy, path, t)
        if m < -lam - 1e-9:
            raise AdmissibilityError(
                f"wealth reached {m:.6g}, below the admissibility floor {-lam:.6g}"
            )
    return gain


def min_wealth(strategy: SimpleStrategy, path: Path, t: float | None = None) -> float:
    """Exact minimum of the gain process over [0, t] (piecewise-linear in t)."""
    if t is None:
        t = path.end_time
    resolved = resolve(strategy, path)
    worst = 0.0
    running = 0.0
    for a, b, p in _gain_terms(resolved, path, t):
        s_in = evaluate(path, a)
        lo, hi = path_extremes(path, a, b)
        ext = lo if p >= 0 else hi
        worst = min(worst, running + p * (ext - s_in))
        running += p * (evaluate(path, b) - s_in)
    return worst


def upcrossing_strategy(
    u: float, n: int, K: float, max_rounds: int | None = None
) -> SimpleStrategy:
    """Compounding long strategy over upcrossings of [u, u + 2^-n].

    Each round buys capital/(2K) units at the first hit of u and sells at
    u + 2^-n, multiplying capital by (1 + 2^-n/(2K)); a hit of -K while in
    position exits and stops all trading.  Capital starts at 1, so the
    terminal capital after m clean rounds is (1 + 2^-n/(2K))^m; the returned
    strategy carries the gain (capital - 1) and declares a floor of -1.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    n = int(n)
    h = 2.0 ** (-n)
    if round(u / h) * h != u:
        raise ValueError(f"u={u!r} is not a multiple of 2^-{n}")
    rounds = n * n * 2**n if max_rounds is None else int(max_rounds)
    if rounds < 1:
        raise ValueError("need at least one round")
    events = []
    for _ in range(rounds):
        events.append(StrategyEvent(
            rule=HitRule(targets=(u,)),
            position=lambda gain, K=K: (1.0 + gain) / (2.0 * K),
        ))
        events.append(StrategyEvent(
            rule=HitRule(targets=(u + h, -K), terminal_targets=(-K,)),
            position=0.0,
        ))
    return SimpleStrategy(events=tuple(events), admissibility_lambda=1.0)


# ---------------------------------------------------------------------------
# crossing-bound audit


@dataclass(frozen=True)
class AuditReport:
    """Per-level crossing constants C_n = max_cell(U + D) / (n^2 2^n).

    flagged marks growth of C_n across levels (last positive over first
    positive exceeding 10), the finite-sample signature of an atypical path.
    """

    levels: tuple[int, ...]
    max_cell_totals: tuple[int, ...]
    c_levels: tuple[float, ...]
    c_overall: float
    flagged: bool
    wealth_trajectory: tuple[tuple[float, float], ...] | None = None
    deviation_events: tuple[bool, ...] | None = None

    def to_dict(self) -> dict:
        out = {
            "levels": list(self.levels),
            "max_cell_totals": list(self.max_cell_totals),
            "c_levels": list(self.c_levels),
            "c_overall": self.c_overall,
            "flagged": self.flagged,
        }
        if self.wealth_trajectory is not None:
            out["wealth_trajectory"] = [list(p) for p in self.wealth_trajectory]
        if self.deviation_events is not None:
            out["deviation_events"] = list(self.deviation_events)
        return out


def crossing_bound_report(path: Path, horizon: float | None = None, levels=(3, 4, 5, 6, 7)) -> AuditReport:
    levels = [int(n) for n in levels]
    if any(n < 1 for n in levels):
        raise ValueError("crossing-bound levels must be >= 1")
    if horizon is None:
        horizon = path.end_time
    totals = []
    cs = []
    for n in levels:
        tally = crossing_counts(path, horizon, Grid.dyadic(n))
        m = tally.max_cell_total()
        totals.append(m)
        cs.append(m / (n * n * 2.0**n))
    # growth of C_n across levels is the atypicality signal; decay just means
    # crossings stop accumulating (smooth paths)
    positive = [c for c in cs if c > 0.0]
    flagged = len(positive) >= 2 and (positive[-1] / positive[0] > 10.0)
    return AuditReport(
        levels=tuple(levels),
        max_cell_totals=tuple(totals),
        c_levels=tuple(cs),
        c_overall=max(cs) if cs else 0.0,
        flagged=flagged,
    )


# ---------------------------------------------------------------------------
# deviation-frequency Monte Carlo


@dataclass(frozen=True)
class MonteCarloConfig:
    """Brownian deviation study setup; seeds may be a count or explicit list."""

    seeds: object = 50
    level: int = 8
    alpha: float = 0.25
    K: float = 4.0
    T: float = 1.0
    dt: float | None = None

    def seed_list(self) -> list[int]:
        if isinstance(self.seeds, int):
            return list(range(self.seeds))
        return [int(s) for s in self.seeds]

    def step(self) -> float:
        if self.dt is not None:
            return float(self.dt)
        return 2.0 ** (-(2 * self.level + 4))


@dataclass(frozen=True)
class DeviationReport:
    """Empirical frequency of the sup deviation event among admitted paths.

    The event is sup over the fine grid of the difference between the
    consecutive-level indicator integrals reaching 2^(-level*alpha); admitted
    paths are those with sup|S| < K and crossing constants within K at both
    levels.  exponential_bound is 2 exp(-2^(level(1/2-alpha)) + 16 K level^2),
    reported as vacuous when it is >= 1.
    """

    level: int
    alpha: float
    K: float
    T: float
    threshold: float
    n_paths: int
    n_admitted: int
    n_deviations: int
    empirical_freq: float
    exponential_bound: float
    log_exponential_bound: float
    vacuous: bool

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "alpha": self.alpha,
            "K": self.K,
            "T": self.T,
            "threshold": self.threshold,
            "n_paths": self.n_paths,
            "n_admitted": self.n_admitted,
            "n_deviations": self.n_deviations,
            "empirical_freq": self.empirical_freq,
            "exponential_bound": self.exponential_bound,
            "log_exponential_bound": self.log_exponential_bound,
            "vacuous": self.vacuous,
        }


def _admitted(path: Path, level: int, K: float, horizon: float) -> bool:
    sup_abs = max(abs(float(path.values.min())), abs(float(path.values.max())))
    if sup_abs >= K:
        return False
    for m in (level - 1, level):
        tally = crossing_counts(path, horizon, Grid.dyadic(m))
        if tally.max_cell_total() > K * m * m * 2.0**m:
            return False
    return True


def deviation_event(path: Path, level: int, threshold: float, horizon: float) -> bool:
    """Whether sup |I^n - I^(n-1)| over the level-n grid reaches the threshold."""
    from .localtime import local_time_field, uniform_distance

    coarse = local_time_field(path, level - 1, horizon)
    fine = local_time_field(path, level, horizon)
    return uniform_distance(coarse, fine, early_stop=threshold) >= threshold


def deviation_frequency(config: MonteCarloConfig) -> DeviationReport:
    n = int(config.level)
    if n < 2:
        raise ValueError("need level >= 2 (the study compares with level - 1)")
    if not (0.0 < config.alpha < 0.5):
        raise ValueError("alpha must lie in (0, 1/2)")
    threshold = 2.0 ** (-n * config.alpha)
    log_bound = math.log(2.0) - 2.0 ** (n * (0.5 - config.alpha)) + 16.0 * config.K * n * n
    bound = math.exp(log_bound) if log_bound < 700.0 else math.inf
    seeds = config.seed_list()
    admitted = 0
    deviations = 0
    for seed in seeds:
        path = brownian_path(config.T, config.step(), seed)
        if not _admitted(path, n, config.K, config.T):
            continue
        admitted += 1
        if deviation_event(path, n, threshold, config.T):
            deviations += 1
    freq = deviations / admitted if admitted else 0.0
    return DeviationReport(
        level=n,
        alpha=float(config.alpha),
        K=float(config.K),
        T=float(config.T),
        threshold=threshold,
        n_paths=len(seeds),
        n_admitted=admitted,
        n_deviations=deviations,
        empirical_freq=freq,
        exponential_bound=bound,
        log_exponential_bound=log_bound,
        vacuous=not (bound < 1.0),
    )
