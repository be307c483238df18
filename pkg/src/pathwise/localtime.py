"""Discrete local times along level-crossing partitions.

The discrete local time of a path S along a partition pi, at time t and site u,
is the sum over partition legs of 1{u in (S(t_j^t), S(t_{j+1}^t)]} * |S(t_{j+1}^t) - u|
with the half-open bracket taken between the min and max of the two endpoints.
For partitions generated by the grid itself the sum collapses to crossing
counts: at a grid site u the value is spacing times the number of completed
downcrossings of the cell below u, and between grid sites the u-section is
piecewise linear with jumps only at grid sites plus kinks at S_0 and S_t.
Everything in this module is organised around that structure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .partitions import Grid, Partition, as_grid, lebesgue_partition
from .paths import DomainError, Path, evaluate, path_extremes

__all__ = [
    "ResolutionWarning",
    "CoarseningWarning",
    "FieldMismatchError",
    "CrossingTally",
    "Section",
    "LocalTimeField",
    "ConvergenceReport",
    "WeakL2Report",
    "TestFunction",
    "discrete_local_time",
    "tanaka_term",
    "tanaka_residual",
    "crossing_counts",
    "downcrossing_estimator",
    "local_time_field",
    "uniform_distance",
    "convergence_study",
    "p_variation",
    "p_variation_profile",
    "holder_coefficient",
    "weak_l2_check",
    "count_differing",
    "default_test_functions",
]


class ResolutionWarning(UserWarning):
    """Partition resolution is close to the path's sample resolution."""


class CoarseningWarning(UserWarning):
    """A p-variation result was subsampled and is only a lower bound."""


class FieldMismatchError(ValueError):
    """Fields do not share a path/horizon, or are ordered coarse/fine wrongly."""


# ---------------------------------------------------------------------------
# pointwise definitions


def _clipped_legs(path: Path, partition: Partition, t: float):
    """Leg endpoint values (S(t_j ^ t), S(t_{j+1} ^ t)) and S_t itself."""
    if not (0.0 <= t <= partition.horizon):
        raise DomainError(f"t={t!r} outside [0, {partition.horizon!r}]")
    s_t = evaluate(path, t)
    times = partition.times
    vals = partition.values
    a = np.where(times[:-1] <= t, vals[:-1], s_t)
    b = np.where(times[1:] <= t, vals[1:], s_t)
    return a, b, s_t


def discrete_local_time(path: Path, partition: Partition, t: float, u: float) -> float:
    """Exact defining sum of the discrete local time at (t, u)."""
    a, b, _ = _clipped_legs(path, partition, t)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    mask = (lo < u) & (u <= hi)
    if not mask.any():
        return 0.0
    return math.fsum(np.abs(b[mask] - u).tolist())


def tanaka_term(path: Path, partition: Partition, t: float, u: float) -> float:
    """Gain of the unit short position below u: sum 1{S(t_j) < u} (S(t_{j+1}^t) - S(t_j^t))."""
    a, b, _ = _clipped_legs(path, partition, t)
    mask = a < u
    if not mask.any():
        return 0.0
    return math.fsum((b[mask] - a[mask]).tolist())


def tanaka_residual(path: Path, partition: Partition, t: float, u: float) -> float:
    """discrete_local_time minus its payoff + integral decomposition.

    Zero up to float accumulation for every path, partition, t, u: the
    decomposition is an algebraic rearrangement of the defining sum.
    """
    _, _, s_t = _clipped_legs(path, partition, t)
    s_0 = float(partition.values[0])
    payoff = max(0.0, u - s_t) - max(0.0, u - s_0)
    lhs = discrete_local_time(path, partition, t, u)
    return lhs - (payoff + tanaka_term(path, partition, t, u))


# ---------------------------------------------------------------------------
# crossing tallies


@dataclass(frozen=True)
class CrossingTally:
    """Completed up/down crossings per grid cell [k*spacing, (k+1)*spacing]."""

    spacing: float
    level: int | None
    k_lo: int                 # cell index of up[0] / down[0]
    up: np.ndarray
    down: np.ndarray

    def cell_range(self) -> range:
        return range(self.k_lo, self.k_lo + len(self.up))

    def up_of_cell(self, k: int) -> int:
        i = k - self.k_lo
        if 0 <= i < len(self.up):
            return int(self.up[i])
        return 0

    def down_of_cell(self, k: int) -> int:
        i = k - self.k_lo
        if 0 <= i < len(self.down):
            return int(self.down[i])
        return 0

    def max_cell_total(self) -> int:
        if len(self.up) == 0:
            return 0
        return int(np.max(self.up + self.down))


def _complete_moves(partition: Partition):
    """(cells, dirs) of the completed one-step grid moves, leg-indexed.

    cells[j] is the lower grid index of the cell leg j traverses, dirs[j] is
    +1/-1, and incomplete legs (off-grid start, truncation marker) carry
    cell -1 / dir 0.
    """
    on = partition.on_grid
    kk = partition.kidx
    pair = on[:-1] & on[1:]
    if partition.truncated and pair.size:
        # the truncation marker is not a stopping time, so the clipped final
        # leg is never a completed move even when S(T) sits on the grid
        pair = pair.copy()
        pair[-1] = False
    dk = kk[1:] - kk[:-1]
    if pair.any() and not np.all(np.abs(dk[pair]) == 1):
        raise RuntimeError("consecutive on-grid partition values must differ by one step")
    cells = np.where(pair, np.minimum(kk[:-1], kk[1:]), -1).astype(np.int64)
    dirs = np.where(pair, dk, 0).astype(np.int8)
    return cells, dirs


def crossing_counts(path: Path, horizon: float, level) -> CrossingTally:
    """Exact tallies of completed cell crossings of the interpolant on [0, horizon]."""
    g = as_grid(level)
    part = lebesgue_partition(path, g, horizon)
    cells, dirs = _complete_moves(part)
    sel = dirs != 0
    if not sel.any():
        return CrossingTally(g.spacing, g.level, 0, np.zeros(0, np.int64), np.zeros(0, np.int64))
    c = cells[sel]
    d = dirs[sel]
    k_lo = int(c.min())
    width = int(c.max()) - k_lo + 1
    up = np.bincount(c[d > 0] - k_lo, minlength=width).astype(np.int64)
    down = np.bincount(c[d < 0] - k_lo, minlength=width).astype(np.int64)
    return CrossingTally(g.spacing, g.level, k_lo, up, down)


def downcrossing_estimator(path: Path, level: int, t: float, u: float) -> float:
    """spacing * (completed downcrossings of [u - spacing, u] on [0, t]).

    u must sit on the grid; this is the crossing-count reading of the local
    time, below it by at most one spacing.
    """
    g = as_grid(level)
    k = round(u / g.spacing)
    if k * g.spacing != u:
        raise ValueError(f"u={u!r} is not a multiple of spacing {g.spacing!r}")
    tally = crossing_counts(path, t, g)
    return g.spacing * tally.down_of_cell(k - 1)


# ---------------------------------------------------------------------------
# exact u-sections


_GAUSS5_X, _GAUSS5_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True, eq=False)
class Section:
    """Exact u-section of a discrete local time at one time.

    Piecewise linear on each (breakpoints[i], breakpoints[i+1]]: the value is
    start_vals[i] just right of the left end and end_vals[i] at the right end
    (sections are left-open/right-closed, matching the half-open bracket of
    the defining sum, so there may be jumps at breakpoints).  Identically 0
    at and outside the outermost breakpoints.
    """

    breakpoints: np.ndarray
    start_vals: np.ndarray
    end_vals: np.ndarray

    def evaluate(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        uu = np.atleast_1d(u)
        out = np.zeros(uu.shape)
        bp = self.breakpoints
        inside = (uu > bp[0]) & (uu <= bp[-1])
        if inside.any():
            ui = uu[inside]
            i = np.searchsorted(bp, ui, side="left") - 1
            w = bp[i + 1] - bp[i]
            lam = (ui - bp[i]) / w
            out[inside] = self.start_vals[i] + (self.end_vals[i] - self.start_vals[i]) * lam
        return float(out[0]) if scalar else out

    def value_sequence(self) -> np.ndarray:
        """One-sided values in u-order, zeros outside; exact input for p_variation."""
        inner = np.empty(2 * len(self.start_vals))
        inner[0::2] = self.start_vals
        inner[1::2] = self.end_vals
        return np.concatenate(([0.0], inner, [0.0]))

    def p_variation(self, p: float, coarsen: bool = False) -> float:
        return p_variation(self.value_sequence(), p, coarsen=coarsen)

    def integral(self) -> float:
        """Exact integral over the line (trapezoid per linear piece)."""
        w = np.diff(self.breakpoints)
        return math.fsum((0.5 * w * (self.start_vals + self.end_vals)).tolist())

    def integral_over(self, intervals) -> float:
        """Exact integral over a finite union of closed intervals."""
        ivs = _as_intervals(intervals)
        bp = self.breakpoints
        total = []
        for lo, hi in ivs:
            a = np.maximum(bp[:-1], lo)
            b = np.minimum(bp[1:], hi)
            w = b - a
            good = w > 0.0
            if not good.any():
                continue
            piece_w = bp[1:] - bp[:-1]
            sl = (self.end_vals - self.start_vals) / piece_w
            va = self.start_vals + sl * (a - bp[:-1])
            vb = self.start_vals + sl * (b - bp[:-1])
            total.extend((0.5 * w[good] * (va[good] + vb[good])).tolist())
        return math.fsum(total)

    def integral_against(self, fn) -> float:
        """integral of fn(u) * section(u) du, Gauss-5 per linear piece.

        Exact (to rounding) for fn polynomial of degree <= 8 on each piece.
        """
        a = self.breakpoints[:-1]
        b = self.breakpoints[1:]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * _GAUSS5_X[None, :]
        lam = (nodes - a[:, None]) / (b - a)[:, None]
        sec = self.start_vals[:, None] + (self.end_vals - self.start_vals)[:, None] * lam
        vals = np.asarray(fn(nodes), dtype=float)
        per_piece = half * np.sum(_GAUSS5_W[None, :] * vals * sec, axis=1)
        return math.fsum(per_piece.tolist())


def _as_intervals(intervals):
    if isinstance(intervals, tuple) and len(intervals) == 2 and np.isscalar(intervals[0]):
        intervals = [intervals]
    out = []
    for lo, hi in intervals:
        lo = float(lo)
        hi = float(hi)
        if hi < lo:
            raise ValueError(f"interval ({lo}, {hi}) is reversed")
        out.append((lo, hi))
    return out


# ---------------------------------------------------------------------------
# the field


@dataclass(frozen=True, eq=False)
class LocalTimeField:
    """Discrete local time on the partition's own (t, u) grid.

    Rows are partition times, columns the grid sites k*spacing covering the
    path range plus one spacing of margin.  Row r holds the local time after
    the first r partition legs; at grid sites only completed downcrossings
    (plus a possible truncation remainder in the last row) contribute, which
    is what the internal per-leg bump arrays encode.
    """

    path: Path
    partition: Partition
    i_lo: int
    i_hi: int
    _cells: np.ndarray = dc_field(repr=False)
    _dirs: np.ndarray = dc_field(repr=False)
    _bump_grid: np.ndarray = dc_field(repr=False)   # u-grid column per leg, -1 = none
    _bump_seq: np.ndarray = dc_field(repr=False)    # section-sequence slot per leg, -1 = none
    _trunc_col: int = dc_field(repr=False)
    _trunc_amount: float = dc_field(repr=False)

    @property
    def spacing(self) -> float:
        return self.partition.spacing

    @property
    def level(self) -> int | None:
        return self.partition.level

    @property
    def horizon(self) -> float:
        return self.partition.horizon

    @property
    def t_grid(self) -> np.ndarray:
        return self.partition.times

    @property
    def u_grid(self) -> np.ndarray:
        return np.arange(self.i_lo, self.i_hi + 1) * self.spacing

    @property
    def n_cells(self) -> int:
        return self.i_hi - self.i_lo

    def row(self, r: int) -> np.ndarray:
        """Values at t_grid[r] over u_grid."""
        n_rows = len(self.t_grid)
        if not (0 <= r < n_rows):
            raise IndexError(f"row {r} out of range")
        nu = self.i_hi - self.i_lo + 1
        sel = self._bump_grid[:r]
        sel = sel[sel >= 0]
        out = np.bincount(sel, minlength=nu).astype(float) * self.spacing
        if r == n_rows - 1 and self._trunc_col >= 0:
            out[self._trunc_col] += self._trunc_amount
        return out

    def dense(self) -> np.ndarray:
        """Full (time, site) matrix; rows in t_grid order."""
        n_rows = len(self.t_grid)
        nu = self.i_hi - self.i_lo + 1
        out = np.zeros((n_rows, nu))
        running = np.zeros(nu)
        for r in range(1, n_rows):
            b = self._bump_grid[r - 1]
            if b >= 0:
                running[b] += self.spacing
            out[r] = running
        if self._trunc_col >= 0:
            out[-1, self._trunc_col] += self._trunc_amount
        return out

    def value(self, r: int, u: float) -> float:
        """Field value at (t_grid[r], u) for arbitrary u (exact section lookup)."""
        return float(self.section(float(self.t_grid[r])).evaluate(u))

    def _incomplete_legs(self) -> np.ndarray:
        """Indices of legs that are not completed grid moves (at most two)."""
        return np.nonzero(self._dirs == 0)[0]

    def counts_before(self, r: int):
        """(up, down) completed-crossing counts per cell among the first r legs."""
        ncells = self.n_cells
        sel = slice(0, r)
        cells = self._cells[sel]
        dirs = self._dirs[sel]
        live = dirs != 0
        c = cells[live] - self.i_lo
        d = dirs[live]
        up = np.bincount(c[d > 0], minlength=ncells).astype(np.int64)
        down = np.bincount(c[d < 0], minlength=ncells).astype(np.int64)
        return up, down

    def section(self, t: float) -> Section:
        """Exact piecewise-linear u-section at any t in [0, horizon]."""
        if not (0.0 <= t <= self.horizon):
            raise DomainError(f"t={t!r} outside [0, {self.horizon!r}]")
        tg = self.t_grid
        vals = self.partition.values
        r = int(np.searchsorted(tg, t, side="right")) - 1
        # legs 0..r-1 are fully elapsed; leg r is partially elapsed unless t == tg[r]
        up, down = self.counts_before(r)
        tents = []
        for j in self._incomplete_legs():
            if j >= r:
                break
            tents.append((float(vals[j]), float(vals[j + 1])))
        if t > tg[r]:
            tents.append((float(vals[r]), evaluate(self.path, t)))
        tents = [(a, b) for a, b in tents if a != b]
        h = self.spacing
        u0 = self.i_lo * h
        bp = self.u_grid
        extra = [v for t_ in tents for v in t_]
        if extra:
            bp = np.union1d(bp, np.asarray(extra, dtype=float))
        left = bp[:-1]
        right = bp[1:]

        def base(x, from_right: bool) -> np.ndarray:
            # cell index of each breakpoint; rel is integral (to rounding) at
            # grid sites, where the two one-sided values use adjacent cells
            rel = (x - u0) / h
            if from_right:
                c = np.floor(rel + 1e-9)
            else:
                c = np.ceil(rel - 1e-9) - 1
            c = np.clip(c.astype(np.int64), 0, self.n_cells - 1)
            lo_edge = u0 + c * h
            hi_edge = lo_edge + h
            return down[c] * (x - lo_edge) + up[c] * (hi_edge - x)

        start = base(left, True)
        end = base(right, False)
        for a, b in tents:
            lo = min(a, b)
            hi = max(a, b)
            m = (left >= lo) & (left < hi)
            start[m] += np.abs(b - left[m])
            m = (right > lo) & (right <= hi)
            end[m] += np.abs(b - right[m])
        return Section(breakpoints=bp, start_vals=start, end_vals=end)

    def export_csv(self, filename) -> None:
        """Long-format `t,u,L` rows over the full (t_grid, u_grid)."""
        mat = self.dense()
        ug = self.u_grid
        with open(filename, "w", encoding="utf-8") as fh:
            fh.write("t,u,L\n")
            for r, t in enumerate(self.t_grid):
                for c, u in enumerate(ug):
                    fh.write(f"{float(t)!r},{float(u)!r},{float(mat[r, c])!r}\n")


def local_time_field(path: Path, level, horizon: float | None = None) -> LocalTimeField:
    """Build the discrete local-time field of ``path`` at a grid level.

    Warns with ResolutionWarning when the partition has more than a tenth as
    many stopping times as the path has samples in the window, since crossing
    counts of the interpolant then under-resolve whatever process the samples
    came from.
    """
    g = as_grid(level)
    part = lebesgue_partition(path, g, horizon)
    n_samples = int(np.searchsorted(path.times, part.horizon, side="right"))
    if part.stop_count() * 10 > n_samples:
        warnings.warn(
            f"{part.stop_count()} stopping times against {n_samples} path samples; "
            "level-crossing statistics may be under-resolved",
            ResolutionWarning,
            stacklevel=2,
        )
    lo, hi = path_extremes(path, 0.0, part.horizon)
    h = g.spacing
    i_lo = int(math.floor(lo / h)) - 1
    i_hi = int(math.ceil(hi / h)) + 1
    cells, dirs = _complete_moves(part)
    # bump columns are u-grid positions rebased to i_lo, so the -1 sentinel
    # cannot collide with sites at negative values
    bump_grid = np.full(cells.shape, -1, np.int64)
    downs = dirs < 0
    bump_grid[downs] = cells[downs] + 1 - i_lo
    bump_seq = np.full(cells.shape, -1, np.int64)
    live = dirs != 0
    bump_seq[live] = 1 + 2 * (cells[live] - i_lo) + (dirs[live] < 0)
    trunc_col = -1
    trunc_amount = 0.0
    if part.truncated and part.on_grid[-2] and part.values[-1] < part.values[-2]:
        trunc_col = int(part.kidx[-2]) - i_lo
        trunc_amount = float(part.values[-2] - part.values[-1])
    for a in (cells, dirs, bump_grid, bump_seq):
        a.setflags(write=False)
    return LocalTimeField(
        path=path, partition=part, i_lo=i_lo, i_hi=i_hi,
        _cells=cells, _dirs=dirs, _bump_grid=bump_grid, _bump_seq=bump_seq,
        _trunc_col=trunc_col, _trunc_amount=trunc_amount,
    )


# ---------------------------------------------------------------------------
# distances and convergence


def _same_path(a: LocalTimeField, b: LocalTimeField) -> bool:
    if a.path is b.path:
        return True
    return np.array_equal(a.path.times, b.path.times) and np.array_equal(
        a.path.values, b.path.values
    )


def uniform_distance(
    coarse: LocalTimeField, fine: LocalTimeField, early_stop: float | None = None
) -> float:
    """sup over the finer field's (t, u) grid of |coarse - fine|.

    Both fields must come from the same path and horizon, with ``fine`` at
    the smaller spacing.  When the spacings have an integer ratio the coarse
    field is reconstructed on the fly while streaming over the fine partition
    (the payoff parts of the two local times cancel exactly, so the distance
    is the sup of the integral-term difference); otherwise the coarse section
    is evaluated row by row.  ``early_stop`` returns as soon as the running
    sup reaches it (used by deviation studies that only need a threshold).
    """
    if not _same_path(coarse, fine):
        raise FieldMismatchError("fields built from different paths")
    if coarse.horizon != fine.horizon:
        raise FieldMismatchError("fields built on different horizons")
    if fine.spacing > coarse.spacing:
        raise FieldMismatchError("second field must be the finer one")
    ratio = coarse.spacing / fine.spacing
    thr = math.inf if early_stop is None else float(early_stop)
    if ratio == math.floor(ratio) and coarse.spacing == round(ratio) * fine.spacing:
        p = fine.partition
        return float(
            _kernels.idiff_sup(
                p.values, p.on_grid, p.kidx, int(round(ratio)),
                fine.spacing, fine.i_lo, fine.i_hi, thr,
            )
        )
    best = 0.0
    mat = fine.dense()
    ug = fine.u_grid
    for r, t in enumerate(fine.t_grid):
        sec = coarse.section(float(t))
        diff = np.abs(sec.evaluate(ug) - mat[r])
        if diff.size:
            best = max(best, float(diff.max()))
        if best >= thr:
            break
    return best


@dataclass(frozen=True)
class ConvergenceReport:
    """Uniform distances of each level's field to the finest level's field.

    The finest requested level stands in for the limit, so distances[i] is
    the gap between levels[i] and levels[-1] for i < len(levels) - 1.
    alpha_hat is the fitted decay exponent of distances in the level (least
    squares on log2, levels with distance <= 1e-12 dropped); c_alpha and
    scaled use the requested alpha.
    """

    levels: tuple[int, ...]
    distances: tuple[float, ...]
    alpha: float
    alpha_hat: float
    c_alpha: float
    scaled: tuple[float, ...]
    p_var_profile: tuple[float, ...] | None = None
    profile_p: float | None = None

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "distances": list(self.distances),
            "alpha": self.alpha,
            "alpha_hat": self.alpha_hat,
            "c_alpha": self.c_alpha,
            "scaled": list(self.scaled),
            "p_var_profile": None if self.p_var_profile is None else list(self.p_var_profile),
            "profile_p": self.profile_p,
        }


def convergence_study(
    path: Path,
    levels,
    horizon: float | None = None,
    alpha: float = 0.35,
    profile_p: float | None = None,
) -> ConvergenceReport:
    """Uniform distances of each level to the finest level plus a rate fit."""
    levels = [int(n) for n in levels]
    if len(levels) < 3:
        raise ValueError("need at least 3 levels to study convergence")
    if sorted(levels) != levels:
        raise ValueError("levels must be increasing")
    fields = [local_time_field(path, n, horizon) for n in levels]
    distances = [
        uniform_distance(fields[i], fields[-1]) for i in range(len(fields) - 1)
    ]
    at = np.array(levels[:-1], dtype=float)
    d = np.array(distances)
    keep = d > 1e-12
    if keep.sum() >= 2:
        slope = np.polyfit(at[keep], np.log2(d[keep]), 1)[0]
        alpha_hat = float(-slope)
    elif keep.any():
        alpha_hat = math.nan
    else:
        alpha_hat = math.inf    # everything already below float noise
    scaled = tuple((2.0 ** (alpha * n)) * dn for n, dn in zip(levels[:-1], distances))
    c_alpha = max([s for s, k in zip(scaled, keep) if k], default=0.0)
    profile = None
    if profile_p is not None:
        profile = tuple(p_variation_profile(f, profile_p) for f in fields)
    return ConvergenceReport(
        levels=tuple(levels),
        distances=tuple(float(x) for x in distances),
        alpha=float(alpha),
        alpha_hat=alpha_hat,
        c_alpha=float(c_alpha),
        scaled=scaled,
        p_var_profile=profile,
        profile_p=profile_p,
    )


# ---------------------------------------------------------------------------
# p-variation and Hölder diagnostics


def _collapse_extrema_np(x: np.ndarray) -> np.ndarray:
    d = np.diff(x)
    keep = np.concatenate(([True], d != 0.0))
    y = x[keep]
    if y.size <= 2:
        return y
    s = np.sign(np.diff(y))
    turn = np.concatenate(([True], s[1:] != s[:-1], [True]))
    return y[turn]


def p_variation(values, p: float, coarsen: bool = False) -> float:
    """Exact p-variation of a finite value sequence.

    The supremum over subsequences is computed by dynamic programming after
    collapsing monotone runs to their endpoints (which never changes the
    optimum).  With ``coarsen`` set, sequences whose extrema exceed 20000 are
    strided down first; the result is then a lower bound and a
    CoarseningWarning is issued.
    """
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    x = np.ascontiguousarray(values, dtype=float).ravel()
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("values must be finite")
    if x.size < 2:
        return 0.0
    ex = _collapse_extrema_np(x)
    if ex.size > 20000 and coarsen:
        stride = int(math.ceil(ex.size / 20000))
        ex = np.concatenate((ex[::stride], ex[-1:]))
        warnings.warn(
            f"p-variation subsampled with stride {stride}; result is a lower bound",
            CoarseningWarning,
            stacklevel=2,
        )
    ex = np.ascontiguousarray(ex)
    return float(_kernels.pvar_dp_pow(ex, float(p)) ** (1.0 / p))


def _profile_fast(field: LocalTimeField, p: float) -> float:
    """Stream the section value sequence row by row with checkpoint pruning.

    Valid when the start value is on the grid: every row's section is then
    determined by crossing counts alone (each completed move bumps one slot
    of the interleaved per-cell [up*h, down*h] sequence), except the final
    truncated row, which the caller handles exactly.  Skipping rows is sound
    because one leg changes the section by a tent of total variation at most
    two spacings, so the p-variation moves by at most 2h per leg.
    """
    h = field.spacing
    bumps = field._bump_seq
    n_legs = bumps.size
    seq = np.zeros(2 * field.n_cells + 2)
    buf = np.empty(seq.size + 2)
    if n_legs == 0:
        return 0.0
    window = max(64, n_legs // 256)
    cps = list(range(0, n_legs + 1, window))
    if cps[-1] != n_legs:
        cps.append(n_legs)
    snaps = []
    cp_pows = [0.0]
    pos = 0
    for cp in cps[1:]:
        snaps.append((pos, seq.copy()))
        _kernels.apply_bumps(bumps, seq, pos, cp, h)
        m = _kernels.collapse_extrema(seq, buf)
        cp_pows.append(float(_kernels.pvar_dp_pow(buf[:m], float(p))))
        pos = cp
    best_pow = max(cp_pows)
    for i in range(len(cps) - 1):
        lo, hi = cps[i], cps[i + 1]
        if hi - lo <= 1:
            continue
        bound = cp_pows[i + 1] ** (1.0 / p) + 2.0 * h * (hi - lo - 1)
        if bound ** p <= best_pow:
            continue
        start_pos, snap = snaps[i]
        work = snap.copy()
        best_pow = float(
            _kernels.profile_scan(bumps, work, start_pos, hi - 1, h, float(p), buf, best_pow)
        )
    return best_pow ** (1.0 / p)


def p_variation_profile(field: LocalTimeField, p: float) -> float:
    """sup over the field's t-grid of the exact p-variation of the u-section."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    tg = field.t_grid
    final = field.section(float(tg[-1])).p_variation(p)
    if field.partition.start_on_grid:
        return max(final, _profile_fast(field, p))
    best = final
    for r in range(len(tg) - 1):
        best = max(best, field.section(float(tg[r])).p_variation(p))
    return best


def holder_coefficient(field: LocalTimeField, alpha: float) -> float:
    """sup over t-grid rows and grid sites u != v of |L(u) - L(v)| / |u - v|^alpha."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    h = field.spacing
    nu = field.i_hi - field.i_lo + 1
    powtab = np.empty(nu)
    powtab[0] = 1.0
    powtab[1:] = (np.arange(1, nu) * h) ** alpha
    bumps = np.ascontiguousarray(field._bump_grid)
    g = np.zeros(nu)
    best = float(_kernels.holder_stream(bumps, g, powtab, h))
    if field._trunc_col >= 0:
        g[field._trunc_col] += field._trunc_amount
        best = max(best, float(_kernels.holder_pairs(g, powtab)))
    return best


# ---------------------------------------------------------------------------
# weak-L2 battery and the position-mismatch count


@dataclass(frozen=True)
class TestFunction:
    """Indicator of an interval or a polynomial, integrable against sections."""

    label: str
    kind: str                    # "indicator" | "poly"
    lo: float = 0.0
    hi: float = 0.0
    coeffs: tuple[float, ...] = ()

    def apply(self, section: Section) -> float:
        if self.kind == "indicator":
            return section.integral_over([(self.lo, self.hi)])
        if self.kind == "poly":
            c = np.array(self.coeffs)
            return section.integral_against(lambda u: np.polyval(c[::-1], u))
        raise ValueError(f"unknown test function kind {self.kind!r}")


def default_test_functions(path: Path, horizon: float) -> list[TestFunction]:
    """Eight equal subinterval indicators of the path range plus 1, u, u^2."""
    lo, hi = path_extremes(path, 0.0, horizon)
    if hi == lo:
        hi = lo + 1.0
    edges = lo + (hi - lo) * np.arange(9) / 8.0
    fns = [
        TestFunction(label=f"ind[{edges[i]:.4g},{edges[i+1]:.4g}]", kind="indicator",
                     lo=float(edges[i]), hi=float(edges[i + 1]))
        for i in range(8)
    ]
    fns.append(TestFunction(label="poly:1", kind="poly", coeffs=(1.0,)))
    fns.append(TestFunction(label="poly:u", kind="poly", coeffs=(0.0, 1.0)))
    fns.append(TestFunction(label="poly:u^2", kind="poly", coeffs=(0.0, 0.0, 1.0)))
    return fns


@dataclass(frozen=True)
class WeakL2Report:
    """Integrals of sections against a test battery across levels.

    values[i][j][k] is the integral at levels[i] of test function j at
    times[k]; cauchy[i] is the max over (j, k) of the absolute difference
    between levels i and i+1.
    """

    levels: tuple[int, ...]
    times: tuple[float, ...]
    labels: tuple[str, ...]
    values: np.ndarray
    cauchy: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "times": list(self.times),
            "labels": list(self.labels),
            "values": self.values.tolist(),
            "cauchy": list(self.cauchy),
        }


def weak_l2_check(
    path: Path,
    levels,
    horizon: float | None = None,
    times=None,
    test_functions=None,
) -> WeakL2Report:
    """Section integrals against a fixed battery, with Cauchy increments across levels."""
    levels = [int(n) for n in levels]
    if horizon is None:
        horizon = path.end_time
    if times is None:
        times = [horizon * k / 4.0 for k in range(1, 5)]
    times = [float(t) for t in times]
    if test_functions is None:
        test_functions = default_test_functions(path, horizon)
    vals = np.zeros((len(levels), len(test_functions), len(times)))
    for i, n in enumerate(levels):
        f = local_time_field(path, n, horizon)
        for k, t in enumerate(times):
            sec = f.section(t)
            for j, fn in enumerate(test_functions):
                vals[i, j, k] = fn.apply(sec)
    cauchy = tuple(
        float(np.max(np.abs(vals[i + 1] - vals[i]))) for i in range(len(levels) - 1)
    )
    vals.setflags(write=False)
    return WeakL2Report(
        levels=tuple(levels),
        times=tuple(times),
        labels=tuple(fn.label for fn in test_functions),
        values=vals,
        cauchy=cauchy,
    )


def count_differing(path: Path, n: int, u: float, t: float) -> int:
    """Number of level-n stopping times up to t at which the held positions of
    levels n and n-1 sit on opposite sides of u.

    The level-(n-1) position is reconstructed along the level-n partition:
    its stopping times are exactly the level-n entries landing on the coarse
    grid with a new value.  Bounded by the crossings of the two cells
    adjacent to u plus 2.
    """
    n = int(n)
    if n < 1:
        raise ValueError("need n >= 1")
    g = Grid.dyadic(n)
    k = round(u / g.spacing)
    if k * g.spacing != u:
        raise ValueError(f"u={u!r} is not a multiple of spacing {g.spacing!r}")
    part = lebesgue_partition(path, g, t)
    vals = part.values
    on = part.on_grid
    kk = part.kidx
    stop_n = part.stop_count()
    coarse = float(vals[0])
    count = 0
    for j in range(stop_n):
        if on[j] and kk[j] % 2 == 0 and vals[j] != coarse:
            coarse = float(vals[j])
        if (vals[j] < u) != (coarse < u):
            count += 1
    return count
