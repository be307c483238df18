"""Quadratic variation along partitions and the pathwise integration toolkit.

All Riemann sums are left-point sums over level-crossing partitions, clipped
at the evaluation time: sum_j f'(S(t_j)) (S(t_{j+1} ^ t) - S(t_j ^ t)).  The
change-of-variable decompositions use the exact piecewise-linear local-time
sections, so at finite level the identities hold to rounding, not just in the
limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .localtime import (
    Section,
    discrete_local_time,
    local_time_field,
    tanaka_term,
)
from .partitions import Partition, as_grid, lebesgue_partition
from .paths import DomainError, Path, evaluate, evaluate_many, path_extremes

__all__ = [
    "QVResult",
    "QVStudy",
    "quadratic_variation_along",
    "quadratic_variation",
    "FunctionDescriptor",
    "AbsoluteContinuityError",
    "c2_function",
    "bv_function",
    "qvar_function",
    "verify_absolute_continuity",
    "IntegralResult",
    "follmer_integral",
    "ito_identity_check",
    "ito_bound_check",
    "young_integral",
    "CVDecomposition",
    "change_of_variable",
    "TanakaMeyerResult",
    "tanaka_meyer",
    "OccupationReport",
    "occupation_density_check",
]


# ---------------------------------------------------------------------------
# quadratic variation


@dataclass(frozen=True, eq=False)
class QVResult:
    """Cumulative squared increments of one partition.

    qv[r] is the sum of squared completed-leg increments up to t_grid[r]
    (qv[0] = 0); between partition times value_at interpolates with the
    clipped leg, so the function is continuous and non-decreasing.  max_atom
    is the largest single squared increment, the finite-level proxy for
    atomlessness of the limit measure.
    """

    path: Path
    partition: Partition
    qv: np.ndarray
    max_atom: float

    @property
    def level(self) -> int | None:
        return self.partition.level

    @property
    def spacing(self) -> float:
        return self.partition.spacing

    @property
    def t_grid(self) -> np.ndarray:
        return self.partition.times

    def value_at(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        scalar = ts.ndim == 0
        tt = np.atleast_1d(ts)
        if tt.size and (tt.min() < 0.0 or tt.max() > self.partition.horizon):
            raise DomainError("query times outside the partition window")
        j = np.searchsorted(self.t_grid, tt, side="right") - 1
        s = evaluate_many(self.path, tt)
        part = s - self.partition.values[j]
        out = self.qv[j] + part * part
        return float(out[0]) if scalar else out

    def total(self) -> float:
        return float(self.qv[-1])


def quadratic_variation_along(path: Path, partition: Partition) -> QVResult:
    inc = np.diff(partition.values)
    sq = inc * inc
    qv = np.concatenate(([0.0], np.cumsum(sq)))
    qv.setflags(write=False)
    return QVResult(
        path=path,
        partition=partition,
        qv=qv,
        max_atom=float(sq.max()) if sq.size else 0.0,
    )


@dataclass(frozen=True)
class QVStudy:
    """Per-level quadratic variations with convergence diagnostics.

    sup_differences[i] is the sup over the union of the two time grids of
    |qv at levels[i] - qv at levels[i+1]|; max_atoms tracks the atomlessness
    proxy per level.
    """

    levels: tuple[int, ...]
    results: tuple[QVResult, ...]
    sup_differences: tuple[float, ...]
    max_atoms: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "totals": [r.total() for r in self.results],
            "sup_differences": list(self.sup_differences),
            "max_atoms": list(self.max_atoms),
        }


def quadratic_variation(path: Path, levels, horizon: float | None = None) -> QVStudy:
    levels = [int(n) for n in levels]
    results = []
    for n in levels:
        part = lebesgue_partition(path, as_grid(n), horizon)
        results.append(quadratic_variation_along(path, part))
    diffs = []
    for a, b in zip(results[:-1], results[1:]):
        grid = np.union1d(a.t_grid, b.t_grid)
        diffs.append(float(np.max(np.abs(a.value_at(grid) - b.value_at(grid)))))
    return QVStudy(
        levels=tuple(levels),
        results=tuple(results),
        sup_differences=tuple(diffs),
        max_atoms=tuple(r.max_atom for r in results),
    )


# ---------------------------------------------------------------------------
# function descriptors


class AbsoluteContinuityError(ValueError):
    """The declared derivative does not integrate back to the function."""


@dataclass(frozen=True)
class FunctionDescriptor:
    """A function together with the data its change-of-variable route needs.

    kind "c2": f_second is an evaluable density of df'.
    kind "bv": df' is a finite list of atoms (site, weight) plus a piecewise
    constant density taking density_values[i] on
    (density_breaks[i], density_breaks[i+1]).
    kind "qvar": f' has finite q-variation (q = qvar); correction integrals
    are Young integrals against f'.
    breakpoints lists the non-smooth sites of f' (jumps and kinks); they are
    inserted into quadrature and refinement grids.
    """

    kind: str
    f: object
    f_prime: object
    f_second: object = None
    atoms: tuple[tuple[float, float], ...] = ()
    density_breaks: tuple[float, ...] = ()
    density_values: tuple[float, ...] = ()
    qvar: float | None = None
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("c2", "bv", "qvar"):
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        if self.kind == "c2" and self.f_second is None:
            raise ValueError("c2 descriptor needs f_second")
        if self.kind == "qvar" and (self.qvar is None or self.qvar < 1.0):
            raise ValueError("qvar descriptor needs qvar >= 1")
        if self.density_breaks and len(self.density_values) != len(self.density_breaks) - 1:
            raise ValueError("need one density value per break interval")


def c2_function(f, f_prime, f_second) -> FunctionDescriptor:
    return FunctionDescriptor(kind="c2", f=f, f_prime=f_prime, f_second=f_second)


def bv_function(
    f, f_prime, atoms=(), density_breaks=(), density_values=()
) -> FunctionDescriptor:
    atoms = tuple((float(a), float(w)) for a, w in atoms)
    bps = tuple(sorted({a for a, _ in atoms} | set(float(x) for x in density_breaks)))
    return FunctionDescriptor(
        kind="bv", f=f, f_prime=f_prime, atoms=atoms,
        density_breaks=tuple(float(x) for x in density_breaks),
        density_values=tuple(float(x) for x in density_values),
        breakpoints=bps,
    )


def qvar_function(f, f_prime, qvar: float, breakpoints=()) -> FunctionDescriptor:
    return FunctionDescriptor(
        kind="qvar", f=f, f_prime=f_prime, qvar=float(qvar),
        breakpoints=tuple(sorted(float(x) for x in breakpoints)),
    )


_GAUSS20_X, _GAUSS20_W = np.polynomial.legendre.leggauss(20)


def _gauss20(fn, lo: float, hi: float) -> float:
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return half * float(np.dot(_GAUSS20_W, _eval(fn, mid + half * _GAUSS20_X)))


def _adaptive_gauss(fn, lo: float, hi: float, tol: float, depth: int = 0) -> float:
    """Bisection-adaptive Gauss-20; handles integrable singularities of f'."""
    whole = _gauss20(fn, lo, hi)
    mid = 0.5 * (lo + hi)
    left = _gauss20(fn, lo, mid)
    right = _gauss20(fn, mid, hi)
    if abs(left + right - whole) <= tol or depth >= 42:
        return left + right
    return _adaptive_gauss(fn, lo, mid, 0.5 * tol, depth + 1) + _adaptive_gauss(
        fn, mid, hi, 0.5 * tol, depth + 1
    )


def _integrate_derivative(desc: FunctionDescriptor, a: float, b: float) -> float:
    """integral of f' over [a, b], split at the declared breakpoints."""
    cuts = [a] + [x for x in desc.breakpoints if a < x < b] + [b]
    total = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total.append(_adaptive_gauss(desc.f_prime, lo, hi, 1e-12 * max(1.0, hi - lo)))
    return math.fsum(total)


def verify_absolute_continuity(
    desc: FunctionDescriptor,
    lo: float,
    hi: float,
    n_intervals: int = 64,
    rtol: float = 1e-8,
    seed: int = 1,
) -> None:
    """Probe f(b) - f(a) against the integral of f' on random subintervals.

    Raises AbsoluteContinuityError on the first interval where the relative
    gap exceeds rtol; functions whose declared derivative misses singular
    mass (staircase primitives) fail here before any route is evaluated.
    """
    rng = np.random.default_rng(seed)
    pairs = rng.uniform(lo, hi, size=(n_intervals, 2))
    for a, b in pairs:
        if a > b:
            a, b = b, a
        if a == b:
            continue
        ends = _eval(desc.f, np.array([a, b]))
        jump = float(ends[1] - ends[0])
        integ = _integrate_derivative(desc, float(a), float(b))
        scale = max(1.0, abs(jump), abs(integ))
        if abs(jump - integ) > rtol * scale:
            raise AbsoluteContinuityError(
                f"f({b:.6g}) - f({a:.6g}) = {jump:.6g} but the declared "
                f"derivative integrates to {integ:.6g}"
            )


def _eval(fn, x):
    """Evaluate fn on an array, falling back to a scalar loop."""
    try:
        out = np.asarray(fn(x), dtype=float)
        if out.shape == np.shape(x):
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(float(v))) for v in np.atleast_1d(x)])


# ---------------------------------------------------------------------------
# integrals


@dataclass(frozen=True)
class IntegralResult:
    value: float
    per_level_trace: tuple[float, ...]
    converged: bool
    error_estimate: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "per_level_trace": list(self.per_level_trace),
            "converged": self.converged,
            "error_estimate": self.error_estimate,
        }


def _left_riemann(g, path: Path, partition: Partition, t: float) -> float:
    times = partition.times
    vals = partition.values
    s_t = evaluate(path, t)
    a = np.where(times[:-1] <= t, vals[:-1], s_t)
    b = np.where(times[1:] <= t, vals[1:], s_t)
    gv = _eval(g, a)
    return math.fsum((gv * (b - a)).tolist())


def follmer_integral(
    g, path: Path, levels, t: float | None = None, tol: float = 1e-6
) -> IntegralResult:
    """Left-point Riemann sums of g(S) dS across partition levels.

    Stops at the first pair of consecutive levels agreeing within tol;
    otherwise returns the last level's sum with converged=False.
    """
    levels = [int(n) for n in levels]
    if not levels:
        raise ValueError("need at least one level")
    if t is None:
        t = path.end_time
    trace = []
    for n in levels:
        part = lebesgue_partition(path, as_grid(n), t)
        trace.append(_left_riemann(g, path, part, t))
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) <= tol:
            return IntegralResult(
                value=trace[-1],
                per_level_trace=tuple(trace),
                converged=True,
                error_estimate=abs(trace[-1] - trace[-2]),
            )
    err = abs(trace[-1] - trace[-2]) if len(trace) >= 2 else math.inf
    return IntegralResult(
        value=trace[-1], per_level_trace=tuple(trace), converged=False, error_estimate=err
    )


def ito_identity_check(
    desc: FunctionDescriptor, path: Path, level, t: float | None = None
) -> float:
    """f(S_t) - f(S_0) - left Riemann sum of f'(S) dS - half sum f''(S)(dS)^2.

    Exactly zero for quadratic f at any level; decays across levels for
    smooth f as the partition refines.
    """
    if desc.kind != "c2":
        raise ValueError("identity check needs a c2 descriptor")
    if t is None:
        t = path.end_time
    part = lebesgue_partition(path, as_grid(level), t)
    times = part.times
    vals = part.values
    s_t = evaluate(path, t)
    a = np.where(times[:-1] <= t, vals[:-1], s_t)
    b = np.where(times[1:] <= t, vals[1:], s_t)
    inc = b - a
    riemann = math.fsum((_eval(desc.f_prime, a) * inc).tolist())
    qv_term = 0.5 * math.fsum((_eval(desc.f_second, a) * inc * inc).tolist())
    f = desc.f
    return float(_eval(f, np.array([s_t]))[0] - _eval(f, np.array([vals[0]]))[0]
                 - riemann - qv_term)


def ito_bound_check(
    desc: FunctionDescriptor, path: Path, level, t: float | None = None, grid: int = 4097
):
    """(lhs, rhs) of |integral of g(S) dS| <= |S_t - S_0| sup|g| + qv/2 sup|g'|.

    g is the descriptor's f_prime and g' its f_second; sup-norms are taken on
    a dense grid over the path's range up to t.
    """
    if desc.kind != "c2":
        raise ValueError("bound check needs a c2 descriptor (g = f_prime, g' = f_second)")
    if t is None:
        t = path.end_time
    part = lebesgue_partition(path, as_grid(level), t)
    lhs = abs(_left_riemann(desc.f_prime, path, part, t))
    lo, hi = path_extremes(path, 0.0, t)
    xs = np.linspace(lo, hi, grid)
    sup_g = float(np.max(np.abs(_eval(desc.f_prime, xs))))
    sup_gp = float(np.max(np.abs(_eval(desc.f_second, xs))))
    qv = quadratic_variation_along(path, part).total()
    s_t = evaluate(path, t)
    rhs = abs(s_t - float(part.values[0])) * sup_g + 0.5 * qv * sup_gp
    return float(lhs), float(rhs)


def young_integral(
    f,
    g,
    a: float,
    b: float,
    tol: float = 1e-6,
    max_depth: int = 24,
    breakpoints=(),
    max_points: int = 4_000_000,
) -> IntegralResult:
    """Left-point Riemann-Stieltjes sums of f dg over dyadic refinements.

    Jump locations of f and g must be passed as breakpoints: they are kept in
    every refinement stage, which is what makes step-function integrators
    exact.  Converged means two consecutive refinement sums agree within tol;
    pairs whose variation orders are too rough (1/p + 1/q <= 1) show up as
    converged=False with a growing error estimate.
    """
    if not (b > a):
        raise ValueError("need b > a")
    pts = np.unique(np.concatenate((
        np.array([a, b], dtype=float),
        np.array([x for x in breakpoints if a < x < b], dtype=float),
    )))
    trace = []
    err = math.inf
    for _depth in range(max_depth + 1):
        gv = _eval(g, pts)
        fv = _eval(f, pts[:-1])
        trace.append(float(np.dot(fv, np.diff(gv))))
        if len(trace) >= 2:
            err = abs(trace[-1] - trace[-2])
            if err <= tol:
                return IntegralResult(
                    value=trace[-1], per_level_trace=tuple(trace),
                    converged=True, error_estimate=err,
                )
        if 2 * pts.size - 1 > max_points:
            break
        pts = np.sort(np.concatenate((pts, 0.5 * (pts[:-1] + pts[1:]))))
    return IntegralResult(
        value=trace[-1], per_level_trace=tuple(trace), converged=False, error_estimate=err
    )


# ---------------------------------------------------------------------------
# change of variable


@dataclass(frozen=True)
class CVDecomposition:
    """f(S_t) - f(S_0) split into Riemann part and local-time correction.

    riemann is defined as boundary - correction; residual is riemann minus
    the directly summed left-point Riemann term and vanishes to rounding
    whenever the correction is evaluated exactly (c2 with exact quadrature,
    bv always).
    """

    level: int | None
    route: str
    boundary: float
    riemann: float
    correction: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "route": self.route,
            "boundary": self.boundary,
            "riemann": self.riemann,
            "correction": self.correction,
            "residual": self.residual,
        }


def _correction_bv(desc: FunctionDescriptor, sec: Section) -> float:
    parts = [w * float(sec.evaluate(site)) for site, w in desc.atoms]
    if desc.density_breaks:
        br = desc.density_breaks
        for i, v in enumerate(desc.density_values):
            if v != 0.0:
                parts.append(v * sec.integral_over([(br[i], br[i + 1])]))
    return math.fsum(parts)


def change_of_variable(
    desc: FunctionDescriptor,
    path: Path,
    level,
    t: float | None = None,
    young_tol: float = 1e-8,
    ac_check: bool = True,
) -> CVDecomposition:
    """Decompose f(S_t) - f(S_0) through the discrete local time at one level.

    The correction is the integral of the local-time section against df',
    evaluated by the route the descriptor declares; the absolute-continuity
    probe runs first and rejects primitives whose derivative misses mass.
    """
    if t is None:
        t = path.end_time
    if ac_check:
        lo, hi = path_extremes(path, 0.0, t)
        pad = 0.5 + 0.05 * (hi - lo)
        verify_absolute_continuity(desc, lo - pad, hi + pad)
    field = local_time_field(path, level, horizon=t)
    sec = field.section(t)
    if desc.kind == "c2":
        correction = sec.integral_against(lambda u: _eval(desc.f_second, u))
    elif desc.kind == "bv":
        correction = _correction_bv(desc, sec)
    else:
        bps = np.union1d(sec.breakpoints, np.asarray(desc.breakpoints, dtype=float))
        res = young_integral(
            lambda u: sec.evaluate(u), lambda u: _eval(desc.f_prime, u),
            float(sec.breakpoints[0]), float(sec.breakpoints[-1]),
            tol=young_tol, breakpoints=tuple(bps),
        )
        correction = res.value
    s_t = evaluate(path, t)
    s_0 = float(field.partition.values[0])
    boundary = float(_eval(desc.f, np.array([s_t]))[0] - _eval(desc.f, np.array([s_0]))[0])
    riemann = boundary - correction
    direct = _left_riemann(desc.f_prime, path, field.partition, t)
    return CVDecomposition(
        level=field.level,
        route=desc.kind,
        boundary=boundary,
        riemann=riemann,
        correction=correction,
        residual=riemann - direct,
    )


@dataclass(frozen=True)
class TanakaMeyerResult:
    local_time: float
    rhs: float
    gap: float

    def to_dict(self) -> dict:
        return {"local_time": self.local_time, "rhs": self.rhs, "gap": self.gap}


def tanaka_meyer(path: Path, level, u: float, t: float | None = None) -> TanakaMeyerResult:
    """Both sides of L_t(u) = (S_t - u)^- - (S_0 - u)^- + short-position gain."""
    if t is None:
        t = path.end_time
    part = lebesgue_partition(path, as_grid(level), t)
    lt = discrete_local_time(path, part, t, u)
    s_t = evaluate(path, t)
    s_0 = float(part.values[0])
    rhs = (max(0.0, u - s_t) - max(0.0, u - s_0)) + tanaka_term(path, part, t, u)
    return TanakaMeyerResult(local_time=lt, rhs=rhs, gap=lt - rhs)


@dataclass(frozen=True)
class OccupationReport:
    lhs: float
    rhs: float
    rel_err: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "rel_err": self.rel_err}


def occupation_density_check(
    path: Path, level, region=None, t: float | None = None
) -> OccupationReport:
    """integral of L_t over a region against half the QV time spent there.

    region is a finite union of closed intervals, or None for the whole line
    (where the identity is exact termwise).  The rhs indicator is evaluated
    at each leg's left endpoint, matching the defining sums.
    """
    if t is None:
        t = path.end_time
    field = local_time_field(path, level, horizon=t)
    sec = field.section(t)
    part = field.partition
    times = part.times
    vals = part.values
    s_t = evaluate(path, t)
    a = np.where(times[:-1] <= t, vals[:-1], s_t)
    b = np.where(times[1:] <= t, vals[1:], s_t)
    inc2 = (b - a) ** 2
    if region is None:
        lhs = sec.integral()
        rhs = 0.5 * math.fsum(inc2.tolist())
    else:
        ivs = []
        mask = np.zeros(a.shape, dtype=bool)
        for lo, hi in np.atleast_2d(np.asarray(region, dtype=float)):
            ivs.append((float(lo), float(hi)))
            mask |= (a >= lo) & (a <= hi)
        lhs = sec.integral_over(ivs)
        rhs = 0.5 * math.fsum(inc2[mask].tolist())
    denom = max(abs(lhs), abs(rhs), 1e-12)
    return OccupationReport(lhs=float(lhs), rhs=float(rhs), rel_err=float(abs(lhs - rhs) / denom))
