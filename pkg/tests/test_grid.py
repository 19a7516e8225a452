import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from slicemax.grid import (
    Cube,
    CubeFamily,
    GridFunction,
    GridParseError,
    build_prefix,
    cubes_containing,
    format_grid,
    load_grid,
    parse_grid,
    save_grid,
    window_average,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_grid_function_validation():
    with pytest.raises(ValueError):
        GridFunction(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        GridFunction([1.0, np.nan])
    with pytest.raises(ValueError):
        GridFunction([1.0], h=0.0)
    f = GridFunction([1.0, 2.0], h=0.5)
    assert f.dim == 1 and f.shape == (2,) and f.cell_volume == 0.5
    with pytest.raises(ValueError):
        f.samples[0] = 3.0


def test_centers_and_indicator():
    f = GridFunction(np.zeros(4), h=0.5)
    assert np.allclose(f.centers(), [0.25, 0.75, 1.25, 1.75])
    chi = f.indicator(Cube((1,), 2))
    assert chi.samples.tolist() == [0, 1, 1, 0]
    assert f.restrict(Cube((1,), 2)).shape == (2,)


def test_cube_geometry():
    q = Cube((1, 2), 3)
    assert q.measure(0.5) == pytest.approx(2.25)
    assert q.contains((3, 4)) and not q.contains((4, 4))
    assert q.within((4, 5)) and not q.within((4, 4))
    assert q.clipped_count((3, 3)) == 2
    assert len(list(q.cells())) == 9


def test_family_validation():
    with pytest.raises(ValueError):
        CubeFamily((2, 1))
    with pytest.raises(ValueError):
        CubeFamily((2, 3))  # interior families need single cells
    CubeFamily((2, 3), "clipped")
    with pytest.raises(ValueError):
        CubeFamily((1,), "periodic")


def test_geometric_family_sides():
    assert CubeFamily.geometric(16).scales == (1, 2, 3, 4, 6, 8, 12, 16)
    assert CubeFamily.geometric(1).scales == (1,)


def test_cubes_containing_examples():
    got = [(c.anchor, c.side) for c in cubes_containing((0,), CubeFamily((1, 2)), (5,))]
    assert got == [((0,), 1), ((0,), 2)]
    got = [(c.anchor, c.side) for c in cubes_containing((3,), CubeFamily((1,)), (5,))]
    assert got == [((3,), 1)]
    got = [(c.anchor, c.side) for c in cubes_containing((1,), CubeFamily((3,), "clipped"), (3,))]
    assert ((0,), 3) in got
    got = [(c.anchor, c.side) for c in cubes_containing((1,), CubeFamily((1, 2, 3)), (3,)) if c.side == 3]
    assert got == [((0,), 3)]


@given(st.integers(1, 7), st.integers(1, 4), st.sampled_from(["interior", "clipped"]))
def test_cubes_containing_matches_filter(n, k, boundary):
    fam = CubeFamily.up_to(k, boundary)
    shape = (n, n)
    for x in [(0, 0), (n - 1, n // 2)]:
        fast = {(c.anchor, c.side) for c in cubes_containing(x, fam, shape)}
        slow = {(c.anchor, c.side) for c in fam.cubes(shape) if c.contains(x)}
        assert fast == slow


def test_window_sum_examples():
    t = build_prefix(GridFunction([1.0, 2.0, 3.0]))
    assert t.window_sum(Cube((0,), 3)) == 6
    assert build_prefix(GridFunction([-1.0, -2.0])).window_sum(Cube((0,), 2)) == 3
    signed = build_prefix(GridFunction([-1.0, -2.0]), absolute=False)
    assert signed.window_sum(Cube((0,), 2)) == -3
    with pytest.raises(ValueError):
        build_prefix(GridFunction([1.0]), power=2, absolute=False)


def test_window_sum_2d_random(rng):
    a = rng.uniform(0, 1, (4, 4))
    t = build_prefix(GridFunction(a))
    for k in range(1, 5):
        for i in range(5 - k):
            for j in range(5 - k):
                direct = math.fsum(a[i:i + k, j:j + k].ravel())
                assert t.window_sum(Cube((i, j), k)) == pytest.approx(direct, rel=1e-12)


@given(arrays(np.float64, st.integers(1, 40), elements=finite), st.integers(1, 8), st.booleans())
def test_box_sums_match_direct(a, k, clipped):
    n = a.size
    if not clipped and k > n:
        return
    t = build_prefix(GridFunction(a), absolute=False)
    sums, counts = t.box_sums(k, clipped)
    starts = range(-k + 1, n) if clipped else range(0, n - k + 1)
    for s, got, cnt in zip(starts, sums, counts):
        lo, hi = max(s, 0), min(s + k, n)
        exact = math.fsum(a[lo:hi])
        assert cnt == hi - lo
        assert abs(got - exact) <= 1e-12 * max(1.0, math.fsum(np.abs(a[lo:hi])))


def test_prefix_accuracy_with_large_offset():
    # a small window far along a big running total keeps its digits
    a = np.full(100_000, 1e8)
    a[77_777] = 1e8 + 1e-4
    t = build_prefix(GridFunction(a), absolute=False)
    assert t.window_sum(Cube((77_777,), 1)) == a[77_777]


def test_window_average_examples():
    const = build_prefix(GridFunction(np.full(6, 2.5)))
    assert window_average(const, Cube((1,), 4)) == 2.5
    spike = build_prefix(GridFunction([0.0, 0, 4, 0, 0]))
    assert window_average(spike, Cube((2,), 2)) == 2
    chi = GridFunction([0.0, 1, 1, 0, 0, 0])
    assert window_average(build_prefix(chi), Cube((0,), 6)) == pytest.approx(2 / 6)
    with pytest.raises(ValueError):
        window_average(spike, Cube((4,), 2))
    assert window_average(spike, Cube((4,), 2), "clipped") == 0
    with pytest.raises(ValueError):
        window_average(spike, Cube((7,), 2), "clipped")


def test_parse_examples():
    f = parse_grid("3 1.0\n1 2 3")
    assert f.shape == (3,) and f.h == 1.0 and f.samples.tolist() == [1, 2, 3]
    g = parse_grid("2 2 0.5\n1,2\n3, 4\n")
    assert g.samples.tolist() == [[1, 2], [3, 4]]


@pytest.mark.parametrize("text, line", [
    ("2 3 1\n1 2 3\n4 5\n", 3),
    ("3 1\n1 x 3\n", 2),
    ("", 1),
    ("3 -1\n1 2 3\n", 1),
    ("4 1\n1 2 3\n", 2),
    ("2 2 1\n1 2\n", 2),
])
def test_parse_errors_name_line(text, line):
    with pytest.raises(GridParseError) as exc:
        parse_grid(text)
    assert exc.value.lineno == line
    assert f"line {line}" in str(exc.value)


def test_round_trip_random_8x8(rng, tmp_path):
    f = GridFunction(rng.standard_normal((8, 8)), h=0.125)
    save_grid(f, tmp_path / "g.txt")
    g = load_grid(tmp_path / "g.txt")
    assert np.array_equal(f.samples, g.samples) and g.h == f.h


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite),
       st.floats(1e-3, 10))
def test_round_trip_property(a, h):
    g = parse_grid(format_grid(GridFunction(a, h)))
    assert np.array_equal(g.samples, a) and g.h == h
