"""Continuous piecewise-linear paths.

A path is a finite sample (t_i, v_i) with strictly increasing times starting
at 0; between samples the path is the linear interpolant.  Everything built on
top (partitions, local times, integrals) treats that interpolant, not the raw
samples, as the object of study: crossing times of value levels are solved
exactly on each linear segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Path",
    "HalfOpenInterval",
    "PathValidationError",
    "NonMonotoneTimesError",
    "NonFiniteValueError",
    "LengthMismatchError",
    "EmptyPathError",
    "DomainError",
    "CsvFormatError",
    "make_path",
    "evaluate",
    "evaluate_many",
    "path_extremes",
    "next_grid_hit",
    "first_hit",
    "brownian_path",
    "tent_path",
    "constant_path",
    "linear_path",
    "zigzag_path",
    "random_segment_path",
    "load_csv",
    "save_csv",
]


class PathValidationError(ValueError):
    """Base class for invalid path data."""


class NonMonotoneTimesError(PathValidationError):
    """Times are not strictly increasing from 0."""


class NonFiniteValueError(PathValidationError):
    """A time or value is NaN or infinite."""


class LengthMismatchError(PathValidationError):
    """times and values have different lengths."""


class EmptyPathError(PathValidationError):
    """Fewer than two samples."""


class DomainError(ValueError):
    """Query time outside [0, end_time]."""


class CsvFormatError(PathValidationError):
    """Malformed path CSV."""


@dataclass(frozen=True, eq=False)
class Path:
    """Piecewise-linear path given by its sample grid.

    Construct through ``make_path`` (validating) or one of the generators.
    Arrays are read-only; a Path is a value object.
    """

    times: np.ndarray
    values: np.ndarray

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def start_value(self) -> float:
        return float(self.values[0])

    @property
    def end_value(self) -> float:
        return float(self.values[-1])

    def __len__(self) -> int:
        return int(self.times.size)

    def __repr__(self) -> str:  # keep huge arrays out of logs
        return (
            f"Path(samples={self.times.size}, T={self.end_time!r}, "
            f"start={self.start_value!r}, end={self.end_value!r})"
        )


@dataclass(frozen=True)
class HalfOpenInterval:
    """Order-insensitive half-open bracket between two reals.

    Denotes (min(a,b), max(a,b)]; empty when a == b.  This is the membership
    convention used by the discrete local time sum.
    """

    a: float
    b: float

    def contains(self, u: float) -> bool:
        lo, hi = (self.a, self.b) if self.a <= self.b else (self.b, self.a)
        return (self.a != self.b) and (lo < u <= hi)

    def __contains__(self, u: float) -> bool:
        return self.contains(u)


def make_path(times, values) -> Path:
    """Validate raw samples and build a Path.

    Raises a distinct error per defect: length mismatch, fewer than two
    samples, NaN/inf entries, or a time grid that is not strictly increasing
    from 0.
    """
    t = np.ascontiguousarray(times, dtype=np.float64)
    v = np.ascontiguousarray(values, dtype=np.float64)
    if t.ndim != 1 or v.ndim != 1:
        raise PathValidationError("times and values must be one-dimensional")
    if t.size != v.size:
        raise LengthMismatchError(
            f"times has {t.size} entries, values has {v.size}"
        )
    if t.size < 2:
        raise EmptyPathError("a path needs at least two samples")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise NonFiniteValueError("times and values must be finite")
    if t[0] != 0.0:
        raise NonMonotoneTimesError("time grid must start at 0")
    if np.any(np.diff(t) <= 0.0):
        raise NonMonotoneTimesError("times must be strictly increasing")
    t.setflags(write=False)
    v.setflags(write=False)
    return Path(t, v)


def evaluate(path: Path, t: float) -> float:
    """Interpolant value at time t.

    Exact at sample times: evaluate(path, times[i]) returns values[i] with no
    rounding.  Raises DomainError outside [0, end_time].
    """
    times = path.times
    if not (0.0 <= t <= times[-1]):
        raise DomainError(f"t={t!r} outside [0, {times[-1]!r}]")
    i = int(np.searchsorted(times, t, side="right")) - 1
    if i >= times.size - 1:
        return float(path.values[-1])
    t0 = times[i]
    if t == t0:
        return float(path.values[i])
    v0 = path.values[i]
    v1 = path.values[i + 1]
    return float(v0 + (v1 - v0) * ((t - t0) / (times[i + 1] - t0)))


def evaluate_many(path: Path, ts) -> np.ndarray:
    """Vectorised interpolation (np.interp); exactness at samples not needed here."""
    ts = np.asarray(ts, dtype=float)
    if ts.size and (ts.min() < 0.0 or ts.max() > path.end_time):
        raise DomainError("query times outside the path domain")
    return np.interp(ts, path.times, path.values)


def path_extremes(path: Path, t0: float = 0.0, t1: float | None = None) -> tuple[float, float]:
    """(min, max) of the interpolant over [t0, t1]; extremes sit at samples or endpoints."""
    if t1 is None:
        t1 = path.end_time
    if not (0.0 <= t0 <= t1 <= path.end_time):
        raise DomainError("window outside the path domain")
    a = evaluate(path, t0)
    b = evaluate(path, t1)
    lo = min(a, b)
    hi = max(a, b)
    i = int(np.searchsorted(path.times, t0, side="left"))
    j = int(np.searchsorted(path.times, t1, side="right"))
    if j > i:
        inner = path.values[i:j]
        lo = min(lo, float(inner.min()))
        hi = max(hi, float(inner.max()))
    return lo, hi


def _on_grid(x: float, spacing: float) -> tuple[int, bool]:
    k = round(x / spacing)
    return k, (k * spacing == x)


def next_grid_hit(
    path: Path, t0: float, current: float, spacing: float
) -> tuple[float, float] | None:
    """First time >= t0 the interpolant touches a grid value k*spacing != current.

    Returns (hit_time, grid_value) or None if no further hit exists.  Crossing
    times are solved exactly on each linear segment (anchored at the segment's
    sample endpoints), and a mere touch at a segment endpoint counts as a hit.
    ``current`` is excluded from the target set, which is what makes repeated
    calls walk the Lebesgue stopping times of the grid.
    """
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    times, vals = path.times, path.values
    if not (0.0 <= t0 <= times[-1]):
        raise DomainError(f"t0={t0!r} outside the path domain")
    k_cur, cur_on = _on_grid(current, spacing)

    v_start = evaluate(path, t0)
    k0, start_on = _on_grid(v_start, spacing)
    if start_on and not (cur_on and k0 == k_cur):
        return float(t0), k0 * spacing

    i = min(int(np.searchsorted(times, t0, side="right")) - 1, times.size - 2)
    v_act = v_start
    while i < times.size - 1:
        ta, tb = times[i], times[i + 1]
        va, vb = vals[i], vals[i + 1]
        if vb == va:
            k, on = _on_grid(va, spacing)
            if on and not (cur_on and k == k_cur):
                return float(max(ta, t0)), k * spacing
        else:
            d = 1 if vb > va else -1
            # first candidate strictly beyond the active start value
            if d > 0:
                k = math.floor(v_act / spacing) + 1
            else:
                k = math.ceil(v_act / spacing) - 1
            g = k * spacing
            while (vb - g) * d >= 0.0:
                if not (cur_on and k == k_cur):
                    t_hit = ta + (g - va) / (vb - va) * (tb - ta)
                    return float(max(t_hit, t0)), g
                k += d
                g = k * spacing
        i += 1
        v_act = vals[i]
    return None


def first_hit(path: Path, t0: float, target: float) -> float | None:
    """First time >= t0 the interpolant equals ``target`` (touch counts), else None."""
    times, vals = path.times, path.values
    if not (0.0 <= t0 <= times[-1]):
        raise DomainError(f"t0={t0!r} outside the path domain")
    v_start = evaluate(path, t0)
    if v_start == target:
        return float(t0)
    i = min(int(np.searchsorted(times, t0, side="right")) - 1, times.size - 2)
    first = True
    while i < times.size - 1:
        ta, tb = times[i], times[i + 1]
        va, vb = vals[i], vals[i + 1]
        lo, hi = (va, vb) if va <= vb else (vb, va)
        if lo <= target <= hi:
            if vb == va:
                t_hit = max(ta, t0)
                if not first or t_hit >= t0:
                    return float(t_hit)
            else:
                t_hit = ta + (target - va) / (vb - va) * (tb - ta)
                if t_hit >= t0:
                    return float(max(t_hit, t0))
        i += 1
        first = False
    return None


# ---------------------------------------------------------------------------
# generators


def brownian_path(T: float, dt: float, seed: int) -> Path:
    """Sampled Brownian motion from 0: independent N(0, step) increments.

    Deterministic in ``seed`` (numpy PCG64 stream).  The final step is
    shortened when T is not a multiple of dt, with variance matching the gap.
    """
    if not (T > 0.0) or not (0.0 < dt <= T):
        raise ValueError("need T > 0 and 0 < dt <= T")
    m = int(math.ceil(T / dt - 1e-12))
    times = np.empty(m + 1)
    times[:-1] = dt * np.arange(m)
    times[-1] = T
    rng = np.random.default_rng(seed)
    incs = rng.standard_normal(m) * np.sqrt(np.diff(times))
    values = np.empty(m + 1)
    values[0] = 0.0
    np.cumsum(incs, out=values[1:])
    return make_path(times, values)


def tent_path(height: float = 1.0, half_width: float = 1.0) -> Path:
    """Up-and-back tent: 0 at t=0, ``height`` at t=half_width, 0 at t=2*half_width."""
    return make_path([0.0, half_width, 2.0 * half_width], [0.0, height, 0.0])


def constant_path(level: float, T: float = 1.0) -> Path:
    return make_path([0.0, T], [level, level])


def linear_path(T: float = 1.0, slope: float = 1.0, intercept: float = 0.0) -> Path:
    return make_path([0.0, T], [intercept, intercept + slope * T])


def zigzag_path(low: float, high: float, cycles: int, start: float | None = None) -> Path:
    """Oscillates start -> high -> low -> high ... for ``cycles`` round trips.

    Vertices are one time unit apart; used to drive strategies through a known
    number of upcrossings of [low, high].
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if not low < high:
        raise ValueError("low must be strictly below high")
    vals = [low if start is None else start]
    for _ in range(cycles):
        vals.extend([high, low])
    times = np.arange(len(vals), dtype=float)
    return make_path(times, vals)


def random_segment_path(
    seed: int,
    segments: int | None = None,
    start: float | None = None,
    scale: float = 0.4,
    bound: float | None = None,
) -> Path:
    """Random piecewise-linear test path (seeded, deterministic).

    Durations are uniform in [0.05, 1]; increments centred normal with sd
    ``scale``.  With ``bound`` set, values are squashed into (-bound, bound)
    while keeping the start value's sign structure.
    """
    rng = np.random.default_rng(seed)
    n = int(segments if segments is not None else rng.integers(8, 40))
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 1.0, size=n))])
    s0 = float(rng.uniform(-1.0, 1.0)) if start is None else float(start)
    values = s0 + np.concatenate([[0.0], np.cumsum(rng.normal(0.0, scale, size=n))])
    if bound is not None:
        values = bound * np.tanh(values / bound) * 0.98
    return make_path(times, values)


# ---------------------------------------------------------------------------
# CSV I/O


def save_csv(path: Path, filename) -> None:
    """Write ``t,value`` rows; float repr keeps the round trip exact."""
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write("t,value\n")
        for t, v in zip(path.times, path.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def load_csv(filename) -> Path:
    """Read a ``t,value`` CSV written by save_csv (header required)."""
    times: list[float] = []
    values: list[float] = []
    with open(filename, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "t,value":
            raise CsvFormatError(f"expected header 't,value', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise CsvFormatError(f"line {lineno}: expected two fields")
            try:
                times.append(float(parts[0]))
                values.append(float(parts[1]))
            except ValueError as exc:
                raise CsvFormatError(f"line {lineno}: {exc}") from exc
    if not times:
        raise EmptyPathError("CSV contains a header but no samples")
    return make_path(times, values)
