"""Value grids and level-crossing partitions.

The numba sweep is cross-checked against a pure-python walk built from
next_grid_hit, which is the definition read off directly.
"""

import numpy as np
import pytest

import pathwise as pw
from pathwise.partitions import Grid, as_grid
from pathwise.paths import DomainError


def python_sweep(path, spacing, horizon):
    """Reference stopping-time walk: repeated next_grid_hit until the horizon."""
    stops = [(0.0, path.values[0])]
    t, cur = 0.0, float(path.values[0])
    while True:
        nxt = pw.next_grid_hit(path, t, cur, spacing)
        if nxt is None or nxt[0] > horizon:
            break
        # a hit at the exact restart time can only be the excluded old level,
        # so nxt[0] > t always holds here
        t, cur = nxt
        stops.append((t, cur))
    return stops


# --------------------------------------------------------------------- grids


def test_grid_dyadic():
    g = Grid.dyadic(3)
    assert g.spacing == 0.125
    assert g.level == 3
    assert as_grid(3) == g
    assert as_grid(0.125) == g  # dyadic float is recognized
    assert as_grid(g) is g


def test_grid_general_spacing():
    g = as_grid(0.1)
    assert g.spacing == 0.1
    assert g.level is None
    with pytest.raises(ValueError):
        Grid(spacing=-1.0)
    with pytest.raises(ValueError):
        Grid(spacing=0.25, level=3)  # inconsistent pair
    with pytest.raises(TypeError):
        as_grid(True)
    with pytest.raises(TypeError):
        as_grid("0.5")


# ---------------------------------------------------------------- tent facts


def test_tent_level1_partition(tent):
    part = pw.lebesgue_partition(tent, 1)
    assert list(part.times) == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert list(part.values) == [0.0, 0.5, 1.0, 0.5, 0.0]
    assert list(part.kidx) == [0, 1, 2, 1, 0]
    assert part.on_grid.all()
    assert not part.truncated
    assert part.stop_count() == 5
    assert part.n_legs == 4
    assert part.start_on_grid


def test_tent_truncation(tent):
    part = pw.lebesgue_partition(tent, 1, horizon=0.8)
    # stops at 0, 0.5; then the marker (0.8, S(0.8))
    assert part.truncated
    assert list(part.times) == [0.0, 0.5, 0.8]
    assert part.values[-1] == pytest.approx(0.8)
    assert not part.on_grid[-1]
    assert part.stop_count() == 2


def test_monotone_path_partition():
    p = pw.linear_path(T=1.0, slope=1.0)
    part = pw.lebesgue_partition(p, 2)
    assert np.allclose(part.times, np.arange(5) / 4.0)
    assert not part.truncated  # last hit lands exactly on the horizon
    assert pw.mesh_along(p, part) == pytest.approx(0.25)


def test_off_grid_start():
    p = pw.make_path([0.0, 1.0], [0.3, 1.3])
    part = pw.lebesgue_partition(p, 1)
    assert not part.start_on_grid
    assert part.kidx[0] == 1  # nearest grid index; flagged off-grid
    assert part.values[1] == 0.5  # first stop at the next level above
    assert part.times[1] == pytest.approx(0.2)


def test_horizon_validation(tent):
    with pytest.raises(DomainError):
        pw.lebesgue_partition(tent, 1, horizon=3.0)
    with pytest.raises(DomainError):
        pw.lebesgue_partition(tent, 1, horizon=0.0)


# ------------------------------------------------------- kernel vs reference


def test_sweep_matches_python_reference(corpus):
    for p in corpus[:10]:
        for grid in (1, 2, 3, 0.2):
            spacing = as_grid(grid).spacing
            part = pw.lebesgue_partition(p, grid)
            ref = python_sweep(p, spacing, p.end_time)
            got = list(zip(part.times, part.values))
            if part.truncated:
                got = got[:-1]
            assert len(got) == len(ref)
            for (tg, vg), (tr, vr) in zip(got, ref):
                assert tg == pytest.approx(tr, abs=1e-12)
                assert vg == vr  # grid values are exact


def test_sweep_truncated_horizon(corpus):
    rng = np.random.default_rng(99)
    for p in corpus[:6]:
        T = float(rng.uniform(0.3, 1.0) * p.end_time)
        part = pw.lebesgue_partition(p, 3, horizon=T)
        ref = python_sweep(p, 0.125, T)
        assert part.stop_count() == len(ref)
        assert part.horizon == T
        if part.truncated:
            assert part.times[-1] == T
            assert part.values[-1] == pytest.approx(pw.evaluate(p, T))


def test_mesh_bounded_by_spacing(corpus):
    for p in corpus:
        part = pw.lebesgue_partition(p, 4)
        assert pw.mesh_along(p, part) <= 2.0 ** -4 + 1e-12


# ----------------------------------------------------------------- structure


def test_nested_partitions(corpus):
    # every stop of the coarse grid is a stop of any refinement of it
    for p in corpus[:8]:
        coarse = pw.lebesgue_partition(p, 2)
        fine = pw.lebesgue_partition(p, 5)
        assert pw.verify_nested(coarse, fine)
        # not the other way around unless the path is degenerate
        if fine.stop_count() > coarse.stop_count():
            assert not pw.verify_nested(fine, coarse)


def test_nested_requires_refinement(tent):
    a = pw.lebesgue_partition(tent, 1)
    b = pw.lebesgue_partition(tent, 0.2)  # 0.2 does not refine 0.5
    assert not pw.verify_nested(a, b)


def test_partition_csv(tmp_path, tent):
    part = pw.lebesgue_partition(tent, 1)
    fn = tmp_path / "part.csv"
    pw.save_partition_csv(part, fn)
    rows = fn.read_text().strip().splitlines()
    assert rows[0] == "k,tau,value"
    assert len(rows) == 6
    assert rows[1].startswith("0,0.0,")
    # repr floats round-trip exactly
    assert float(rows[2].split(",")[1]) == part.times[1]


def test_partition_arrays_frozen(tent):
    part = pw.lebesgue_partition(tent, 1)
    with pytest.raises(ValueError):
        part.times[0] = 1.0
