"""Lebesgue (level-crossing) partitions of continuous paths.

A partition at spacing h collects the successive times at which the path
reaches a value on the grid h*Z different from the value it sat on at the
previous stopping time.  Because consecutive stopping values differ by
exactly one grid step, these partitions turn questions about the path into
questions about a +1/-1 walk on grid indices, which everything downstream
exploits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .paths import DomainError, Path, _on_grid, evaluate

__all__ = [
    "Grid",
    "Partition",
    "as_grid",
    "lebesgue_partition",
    "mesh_along",
    "verify_nested",
    "save_partition_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform value grid {k * spacing : k integer}.

    ``level`` is set when the grid is dyadic (spacing = 2**-level); several
    fast paths require it and check for it.
    """

    spacing: float
    level: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.spacing) or self.spacing <= 0.0:
            raise ValueError(f"grid spacing must be positive and finite, got {self.spacing}")
        if self.level is not None and 2.0 ** (-self.level) != self.spacing:
            raise ValueError("level does not match spacing")

    @classmethod
    def dyadic(cls, level: int) -> "Grid":
        if level != int(level):
            raise ValueError("dyadic level must be an integer")
        return cls(spacing=2.0 ** (-int(level)), level=int(level))


def as_grid(level) -> Grid:
    """Coerce an int (dyadic level), float (spacing) or Grid to a Grid."""
    if isinstance(level, Grid):
        return level
    if isinstance(level, (int, np.integer)) and not isinstance(level, bool):
        return Grid.dyadic(int(level))
    if isinstance(level, float):
        # recognize dyadic spacings so the fast paths stay available
        lev = -np.log2(level) if level > 0 else None
        if lev is not None and lev == np.round(lev) and 2.0 ** (-round(lev)) == level:
            return Grid(spacing=level, level=int(round(lev)))
        return Grid(spacing=level)
    raise TypeError(f"cannot interpret {level!r} as a value grid")


@dataclass(frozen=True, eq=False)
class Partition:
    """Stopping times of a path on a value grid, truncated to [0, T].

    times[0] = 0 and values[0] is the start value.  Interior entries sit
    exactly on the grid (values = kidx * spacing bitwise).  When the horizon
    T is reached before the next grid hit, the pair (T, path value at T) is
    appended and ``truncated`` is True; that final entry is not a stopping
    time, it only marks where the observation window ends.
    """

    times: np.ndarray
    values: np.ndarray
    kidx: np.ndarray          # grid index per entry; entry 0 / truncation entry may be off-grid
    on_grid: np.ndarray       # bool per entry: value == kidx * spacing exactly
    grid: Grid
    horizon: float
    truncated: bool

    @property
    def spacing(self) -> float:
        return self.grid.spacing

    @property
    def level(self) -> int | None:
        return self.grid.level

    @property
    def start_on_grid(self) -> bool:
        return bool(self.on_grid[0])

    @property
    def n_legs(self) -> int:
        return len(self.times) - 1

    def __len__(self) -> int:
        return len(self.times)

    def __repr__(self) -> str:
        return (
            f"Partition(spacing={self.spacing:g}, horizon={self.horizon:g}, "
            f"entries={len(self.times)}, truncated={self.truncated})"
        )

    def stop_count(self) -> int:
        """Number of genuine stopping times (excludes the truncation marker)."""
        return len(self.times) - (1 if self.truncated else 0)


def lebesgue_partition(path: Path, grid, horizon: float | None = None) -> Partition:
    """Level-crossing partition of ``path`` on ``grid`` over [0, horizon]."""
    g = as_grid(grid)
    T = path.end_time if horizon is None else float(horizon)
    if not (0.0 < T <= path.end_time):
        raise DomainError(
            f"horizon must lie in (0, {path.end_time}], got {T}"
        )
    k0, on0 = _on_grid(path.values[0], g.spacing)
    hit_t, hit_k = _kernels.lebesgue_sweep(
        path.times, path.values, g.spacing, T, k0, on0
    )
    m = hit_t.size
    truncated = not (m > 0 and hit_t[-1] == T)
    extra = 1 if truncated else 0
    times = np.empty(m + 1 + extra)
    values = np.empty(m + 1 + extra)
    kidx = np.empty(m + 1 + extra, np.int64)
    on = np.empty(m + 1 + extra, bool)
    times[0] = 0.0
    values[0] = path.values[0]
    kidx[0] = k0
    on[0] = on0
    times[1 : m + 1] = hit_t
    values[1 : m + 1] = hit_k * g.spacing
    kidx[1 : m + 1] = hit_k
    on[1 : m + 1] = True
    if truncated:
        sT = evaluate(path, T)
        kT, onT = _on_grid(sT, g.spacing)
        times[-1] = T
        values[-1] = sT
        kidx[-1] = kT
        on[-1] = onT
    if not np.all(np.diff(times) > 0.0):
        raise RuntimeError("partition times are not strictly increasing")
    for a in (times, values, kidx, on):
        a.setflags(write=False)
    return Partition(
        times=times, values=values, kidx=kidx, on_grid=on,
        grid=g, horizon=T, truncated=truncated,
    )


def mesh_along(path: Path, partition: Partition) -> float:
    """Largest |S(t_j) - S(t_{j-1})| over consecutive partition times.

    The path is re-evaluated at the partition times rather than trusting the
    recorded values, so the function also measures partitions that were not
    generated from this path.  For a level-crossing partition of the path the
    result is at most one grid spacing.
    """
    at = np.array([evaluate(path, t) for t in partition.times])
    if at.size < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(at))))


def verify_nested(coarse: Partition, fine: Partition, tol: float = 1e-12) -> bool:
    """True when every coarse stopping time appears among the fine ones.

    The truncation markers are ignored: both partitions end at the same
    horizon by construction, but the marker is not a stopping time.
    """
    ct = coarse.times[:-1] if coarse.truncated else coarse.times
    ft = fine.times[:-1] if fine.truncated else fine.times
    pos = np.searchsorted(ft, ct)
    ok = np.zeros(len(ct), bool)
    for shift in (0, -1, 1):
        idx = np.clip(pos + shift, 0, len(ft) - 1)
        ok |= np.abs(ft[idx] - ct) <= tol
    return bool(ok.all())


def save_partition_csv(partition: Partition, filename) -> None:
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "tau", "value"])
        for k in range(len(partition.times)):
            w.writerow([k, repr(float(partition.times[k])), repr(float(partition.values[k]))])
