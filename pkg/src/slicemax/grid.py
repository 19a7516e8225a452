"""Grid functions, grid-aligned cubes and prefix-sum tables.

A :class:`GridFunction` is piecewise constant on the cells of a uniform 1D
or 2D grid, so every integral over a union of cells is ``h**n`` times a sum
of samples.  Cubes are addressed by an anchor cell and a side length in
cells; "Q contains x" means that cell ``x`` is one of the cells of ``Q``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

INTERIOR = "interior"
CLIPPED = "clipped"
BOUNDARY_POLICIES = (INTERIOR, CLIPPED)


class GridParseError(ValueError):
    """Malformed grid text; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples on a uniform grid with cell size ``h``."""

    samples: np.ndarray
    h: float = 1.0
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64)
        if arr.ndim not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {arr.ndim}")
        if arr.size == 0:
            raise ValueError("grid has no cells")
        if not np.all(np.isfinite(arr)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
            raise ValueError(f"non-finite sample at cell {bad}")
        h = float(self.h)
        if not (h > 0 and math.isfinite(h)):
            raise ValueError(f"cell size must be positive, got {self.h}")
        origin = (0.0,) * arr.ndim if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != arr.ndim:
            raise ValueError("origin must have one coordinate per axis")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return self.samples.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.samples.shape

    @property
    def size(self) -> int:
        return self.samples.size

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def centers(self, axis: int = 0) -> np.ndarray:
        """Cell-center coordinates along ``axis``."""
        return self.origin[axis] + (np.arange(self.shape[axis]) + 0.5) * self.h

    def with_samples(self, samples) -> GridFunction:
        return GridFunction(samples, self.h, self.origin)

    def restrict(self, cube: Cube) -> GridFunction:
        """The sub-grid function living on the cells of ``cube``."""
        if not cube.within(self.shape):
            raise ValueError(f"{cube} is not inside a grid of shape {self.shape}")
        origin = tuple(o + a * self.h for o, a in zip(self.origin, cube.anchor))
        return GridFunction(self.samples[cube.slices()], self.h, origin)

    def indicator(self, cube: Cube) -> GridFunction:
        """chi_Q on this grid (cells of ``cube`` clipped to the grid)."""
        out = np.zeros(self.shape)
        out[cube.clipped_slices(self.shape)] = 1.0
        return self.with_samples(out)

    def __repr__(self):
        return f"GridFunction(shape={self.shape}, h={self.h})"


@dataclass(frozen=True)
class Cube:
    """Grid-aligned cube: cells ``anchor[i] .. anchor[i] + side - 1`` per axis."""

    anchor: tuple[int, ...]
    side: int

    def __post_init__(self):
        object.__setattr__(self, "anchor", tuple(int(a) for a in self.anchor))
        if int(self.side) < 1:
            raise ValueError(f"cube side must be >= 1, got {self.side}")
        object.__setattr__(self, "side", int(self.side))

    @property
    def dim(self) -> int:
        return len(self.anchor)

    def measure(self, h: float) -> float:
        return (self.side * h) ** self.dim

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, a + self.side) for a in self.anchor)

    def clipped_slices(self, shape: Sequence[int]) -> tuple[slice, ...]:
        return tuple(
            slice(min(max(a, 0), n), min(max(a + self.side, 0), n))
            for a, n in zip(self.anchor, shape)
        )

    def clipped_count(self, shape: Sequence[int]) -> int:
        return math.prod(s.stop - s.start for s in self.clipped_slices(shape))

    def within(self, shape: Sequence[int]) -> bool:
        return len(shape) == self.dim and all(
            0 <= a and a + self.side <= n for a, n in zip(self.anchor, shape)
        )

    def contains(self, cell: Sequence[int]) -> bool:
        return all(a <= c < a + self.side for a, c in zip(self.anchor, cell))

    def cells(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(a, a + self.side) for a in self.anchor))


@dataclass(frozen=True)
class CubeFamily:
    """The cubes over which suprema run.

    ``scales`` are side lengths in cells.  Under the ``interior`` policy only
    cubes lying inside the grid are used; under ``clipped`` every cube meeting
    the grid is used and its measure is that of its intersection with the grid.
    """

    scales: tuple[int, ...] = (1,)
    boundary: str = INTERIOR

    def __post_init__(self):
        scales = tuple(int(k) for k in self.scales)
        if not scales:
            raise ValueError("cube family needs at least one scale")
        if any(k < 1 for k in scales):
            raise ValueError(f"scales must be >= 1, got {scales}")
        if list(scales) != sorted(set(scales)):
            raise ValueError(f"scales must be sorted and distinct, got {scales}")
        if self.boundary not in BOUNDARY_POLICIES:
            raise ValueError(f"unknown boundary policy {self.boundary!r}")
        if self.boundary == INTERIOR and scales[0] != 1:
            raise ValueError("interior-only families must contain the single-cell scale")
        object.__setattr__(self, "scales", scales)

    @classmethod
    def up_to(cls, max_scale: int, boundary: str = INTERIOR) -> CubeFamily:
        return cls(tuple(range(1, int(max_scale) + 1)), boundary)

    @classmethod
    def geometric(cls, max_scale: int, boundary: str = INTERIOR) -> CubeFamily:
        """Sides 1, 2, 3 and every 2**i, 3 * 2**i up to ``max_scale``.

        Apart from 1 and 3 all sides are even, which keeps a half-overlapping
        window available for every cube of the family.
        """
        sides = {k for k in (1, 2, 3) if k <= max_scale}
        p = 4
        while p <= max_scale:
            sides.add(p)
            if 3 * p // 2 <= max_scale:
                sides.add(3 * p // 2)
            p *= 2
        return cls(tuple(sorted(sides)), boundary)

    def usable_scales(self, shape: Sequence[int]) -> tuple[int, ...]:
        if self.boundary == CLIPPED:
            return self.scales
        return tuple(k for k in self.scales if k <= min(shape))

    def cubes(self, shape: Sequence[int]) -> Iterator[Cube]:
        """Every family cube on a grid of ``shape``."""
        for k in self.usable_scales(shape):
            if self.boundary == INTERIOR:
                ranges = [range(0, n - k + 1) for n in shape]
            else:
                ranges = [range(-k + 1, n) for n in shape]
            for anchor in itertools.product(*ranges):
                yield Cube(anchor, k)


def cubes_containing(x: Sequence[int], family: CubeFamily, shape: Sequence[int]) -> Iterator[Cube]:
    """Family cubes whose cell set includes cell ``x``."""
    x = tuple(int(c) for c in x)
    if len(x) != len(shape) or not all(0 <= c < n for c, n in zip(x, shape)):
        raise IndexError(f"cell {x} outside grid of shape {tuple(shape)}")
    for k in family.usable_scales(shape):
        if family.boundary == INTERIOR:
            ranges = [range(max(0, c - k + 1), min(c, n - k) + 1) for c, n in zip(x, shape)]
        else:
            ranges = [range(c - k + 1, c + 1) for c in x]
        for anchor in itertools.product(*ranges):
            yield Cube(anchor, k)


# -- prefix tables ---------------------------------------------------------
#
# Cumulative sums are kept as unevaluated pairs hi + lo (double-double), which
# keeps window sums accurate to a few ulps of the window sum itself even when
# the running total is many orders of magnitude larger than the window.


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _dd_add(ahi, alo, bhi, blo):
    s, e = _two_sum(ahi, bhi)
    e = e + (alo + blo)
    return _two_sum(s, e)


def _dd_cumsum_rows(hi, lo):
    """Inclusive double-double cumulative sum along axis 0."""
    out_hi = np.empty_like(hi)
    out_lo = np.empty_like(lo)
    acc_hi = np.zeros_like(hi[0])
    acc_lo = np.zeros_like(lo[0])
    for i in range(hi.shape[0]):
        acc_hi, acc_lo = _dd_add(acc_hi, acc_lo, hi[i], lo[i])
        out_hi[i] = acc_hi
        out_lo[i] = acc_lo
    return out_hi, out_lo


def _dd_cumsum(hi, lo, axis):
    """Double-double cumulative sum along ``axis``.

    Long 1D runs are split into ~sqrt(n) blocks so the Python-level loop stays
    short and every step is vectorized.
    """
    hi = np.moveaxis(hi, axis, 0)
    lo = np.moveaxis(lo, axis, 0)
    n = hi.shape[0]
    if hi.ndim > 1 or n <= 64:
        out = _dd_cumsum_rows(hi, lo)
        return tuple(np.moveaxis(o, 0, axis) for o in out)
    block = max(1, math.isqrt(n))
    nblocks = -(-n // block)
    pad = nblocks * block - n
    bh = np.concatenate([hi, np.zeros(pad)]).reshape(nblocks, block).T
    bl = np.concatenate([lo, np.zeros(pad)]).reshape(nblocks, block).T
    loc_hi, loc_lo = _dd_cumsum_rows(bh, bl)
    tot_hi, tot_lo = _dd_cumsum_rows(loc_hi[-1], loc_lo[-1])
    off_hi = np.concatenate([[0.0], tot_hi[:-1]])
    off_lo = np.concatenate([[0.0], tot_lo[:-1]])
    res_hi, res_lo = _dd_add(loc_hi, loc_lo, off_hi[None, :], off_lo[None, :])
    res_hi = res_hi.T.reshape(-1)[:n]
    res_lo = res_lo.T.reshape(-1)[:n]
    return res_hi, res_lo


def _compensated_total(terms):
    """Sum of signed double-double terms [(sign, hi, lo), ...], elementwise."""
    acc = None
    err = 0.0
    for sign, hi, lo in terms:
        if acc is None:
            acc = sign * hi
        else:
            acc, e = _two_sum(acc, sign * hi)
            err = err + e
        err = err + sign * lo
    return acc + err


@dataclass(frozen=True, eq=False)
class PrefixTable:
    """Zero-padded cumulative sums (hi + lo) of a sample array."""

    hi: np.ndarray
    lo: np.ndarray
    shape: tuple[int, ...]
    h: float
    power: float = 1.0
    absolute: bool = True
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.shape)

    def _corner_sum(self, lows, highs):
        """Sums over boxes [lows, highs) given as index arrays broadcast together."""
        terms = []
        for corner in itertools.product((0, 1), repeat=self.dim):
            idx = tuple(hg if c else lw for c, lw, hg in zip(corner, lows, highs))
            sign = (-1.0) ** (self.dim - sum(corner))
            terms.append((sign, self.hi[idx], self.lo[idx]))
        return _compensated_total(terms)

    def window_sum(self, cube: Cube) -> float:
        """Sum of the tabulated values over ``cube`` clipped to the grid."""
        sl = cube.clipped_slices(self.shape)
        return float(self._corner_sum([s.start for s in sl], [s.stop for s in sl]))

    def box_sums(self, k: int, clipped: bool = False):
        """Sums and cell counts over every side-``k`` cube, indexed by anchor.

        Interior anchors run over ``0 .. n-k``; clipped anchors over
        ``-k+1 .. n-1`` with each sum taken over the intersection with the grid.
        """
        lows, highs, counts = [], [], 1
        for axis, n in enumerate(self.shape):
            start = np.arange(-k + 1, n) if clipped else np.arange(0, n - k + 1)
            lw = np.clip(start, 0, n)
            hg = np.clip(start + k, 0, n)
            view = [None] * self.dim
            view[axis] = slice(None)
            lows.append(lw[tuple(view)])
            highs.append(hg[tuple(view)])
            counts = counts * (hg - lw)[tuple(view)]
        return self._corner_sum(lows, highs), counts


def build_prefix(f: GridFunction, power: float = 1.0, absolute: bool = True) -> PrefixTable:
    """Prefix table of ``|f|**power`` (or of ``f`` itself with ``absolute=False``)."""
    if not isinstance(f, GridFunction):
        f = GridFunction(f)
    if power < 0:
        raise ValueError("power must be >= 0")
    if absolute:
        values = np.abs(f.samples) ** power
    else:
        if power != 1:
            raise ValueError("signed prefix tables support power=1 only")
        values = np.array(f.samples)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite value after raising samples to the requested power")
    hi = np.zeros(tuple(n + 1 for n in f.shape))
    lo = np.zeros_like(hi)
    inner = tuple(slice(1, None) for _ in f.shape)
    hi[inner] = values
    for axis in range(f.dim):
        hi, lo = _dd_cumsum(hi, lo, axis)
    hi.flags.writeable = False
    lo.flags.writeable = False
    return PrefixTable(hi, lo, f.shape, f.h, float(power), bool(absolute))


def window_average(table: PrefixTable, cube: Cube, boundary: str = INTERIOR) -> float:
    """Average of the tabulated function over ``cube``.

    Under the clipped policy the average is over the part of the cube inside
    the grid.
    """
    if boundary == INTERIOR and not cube.within(table.shape):
        raise ValueError(f"{cube} leaves the grid under the interior-only policy")
    count = cube.clipped_count(table.shape)
    if count == 0:
        raise ValueError(f"{cube} does not meet the grid")
    # (1/|Q|) * h^n * sum with |Q| = count * h^n
    return table.window_sum(cube) / count


# -- text format -------------------------------------------------------------


def _tokens(line: str) -> list[str]:
    return line.replace(",", " ").split()


def _parse_float(tok: str, lineno: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise GridParseError(f"non-numeric token {tok!r}", lineno) from None
    if not math.isfinite(value):
        raise GridParseError(f"non-finite value {tok!r}", lineno)
    return value


def parse_grid(text: str) -> GridFunction:
    """Parse the delimited-text grid format.

    First line ``<shape...> <h>``; then samples in row-major order, one grid
    row per line for 2D grids.  Commas and whitespace both delimit.
    """
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise GridParseError("empty input", 1)
    head_no, head = lines[0]
    toks = _tokens(head)
    if len(toks) not in (2, 3):
        raise GridParseError(f"header needs '<shape...> <h>' with 1 or 2 shape entries, got {head!r}", head_no)
    shape = []
    for tok in toks[:-1]:
        try:
            n = int(tok)
        except ValueError:
            raise GridParseError(f"shape entry {tok!r} is not an integer", head_no) from None
        if n < 1:
            raise GridParseError(f"shape entry {n} must be positive", head_no)
        shape.append(n)
    h = _parse_float(toks[-1], head_no)
    if h <= 0:
        raise GridParseError(f"cell size must be positive, got {h}", head_no)

    body = lines[1:]
    if len(shape) == 1:
        values = [_parse_float(t, no) for no, ln in body for t in _tokens(ln)]
        if len(values) != shape[0]:
            last = body[-1][0] if body else head_no
            raise GridParseError(f"expected {shape[0]} samples, found {len(values)}", last)
        return GridFunction(np.array(values), h)

    rows, cols = shape
    if len(body) != rows:
        last = body[-1][0] if body else head_no
        raise GridParseError(f"expected {rows} rows, found {len(body)}", last)
    data = np.empty((rows, cols))
    for r, (no, ln) in enumerate(body):
        toks = _tokens(ln)
        if len(toks) != cols:
            raise GridParseError(f"ragged row: expected {cols} values, found {len(toks)}", no)
        data[r] = [_parse_float(t, no) for t in toks]
    return GridFunction(data, h)


def format_grid(f: GridFunction) -> str:
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    header = " ".join(str(n) for n in f.shape) + " " + fmt(f.h)
    if f.dim == 1:
        rows = [" ".join(fmt(v) for v in f.samples)]
    else:
        rows = [" ".join(fmt(v) for v in row) for row in f.samples]
    return "\n".join([header, *rows]) + "\n"


def load_grid(path, format: str = "text") -> GridFunction:
    if format != "text":
        raise ValueError(f"unsupported grid format {format!r}")
    return parse_grid(Path(path).read_text())


def save_grid(f: GridFunction, path) -> None:
    Path(path).write_text(format_grid(f))


def dump_json(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def save_report(report, path) -> None:
    """Write a report (anything JSON-serializable, or with ``to_dict``) to ``path``."""
    Path(path).write_text(dump_json(report))
