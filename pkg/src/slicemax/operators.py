"""Maximal-type operators and their commutators on grid functions.

Every supremum "over cubes Q containing x" runs over the cubes of a
:class:`~slicemax.grid.CubeFamily`.  For a cube with ``c`` cells inside the
grid the measure is ``|Q| = c * h**n`` and integrals are ``h**n``-weighted
sums, so the fractional average of ``|f|`` over ``Q`` is

    |Q| ** (alpha/n - 1) * h**n * sum_Q |f|.

``maximal`` is the brute-force reference: direct window sums and an
exhaustive max over the anchors of every cube holding a cell.
``maximal_fast`` gets window sums from a prefix table and reduces with a
sliding-window maximum.  The two share no code path beyond the weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._sliding import containment_max, sliding_max
from .grid import CLIPPED, Cube, CubeFamily, GridFunction, build_prefix, cubes_containing

# elements per temporary block in the commutator kernels
_CHUNK = 1 << 22


@dataclass(frozen=True)
class OperatorParams:
    alpha: float = 0.0
    family: CubeFamily = field(default_factory=CubeFamily)

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True, eq=False)
class SignedDecomposition:
    b_minus: GridFunction
    b_plus: GridFunction


def check_alpha(alpha: float, dim: int) -> None:
    if not 0 <= alpha < dim:
        raise ValueError(f"alpha must satisfy 0 <= alpha < n = {dim}, got {alpha}")


def _same_grid(b: GridFunction, f: GridFunction) -> None:
    if b.shape != f.shape:
        raise ValueError(f"shape mismatch: {b.shape} vs {f.shape}")
    if b.h != f.h:
        raise ValueError(f"cell size mismatch: {b.h} vs {f.h}")


def fractional_weight(count, h: float, dim: int, alpha: float):
    """``h**n * |Q|**(alpha/n - 1)`` for a cube of ``count`` cells."""
    vol = h**dim
    return vol * (np.asarray(count, dtype=np.float64) * vol) ** (alpha / dim - 1.0)


def _scales(f: GridFunction, family: CubeFamily) -> tuple[int, ...]:
    scales = family.usable_scales(f.shape)
    if not scales:
        raise ValueError(f"cube family {family.scales} has no cube inside a grid of shape {f.shape}")
    return scales


def _finish(out: np.ndarray, f: GridFunction) -> GridFunction:
    if np.isneginf(out).any():
        cell = tuple(int(i) for i in np.argwhere(np.isneginf(out))[0])
        raise ValueError(f"no family cube contains cell {cell}")
    return f.with_samples(out)


# -- reference (brute-force) evaluation ------------------------------------


def _direct_box_sums(values: np.ndarray, k: int, clipped: bool):
    """Window sums by explicit summation of every window (extended precision)."""
    s = values.astype(np.longdouble)
    counts = 1
    for axis in range(values.ndim):
        n = values.shape[axis]
        ones = np.ones(n)
        if clipped:
            width = [(0, 0)] * s.ndim
            width[axis] = (k - 1, k - 1)
            s = np.pad(s, width)
            ones = np.pad(ones, (k - 1, k - 1))
        s = sliding_window_view(s, k, axis=axis).sum(axis=-1)
        c = sliding_window_view(ones, k).sum(axis=-1)
        shape = [1] * values.ndim
        shape[axis] = -1
        counts = counts * c.reshape(shape)
    return s.astype(np.float64), counts


def _direct_containment_max(values: np.ndarray, k: int, clipped: bool) -> np.ndarray:
    out = values
    for axis in range(values.ndim):
        if not clipped:
            width = [(0, 0)] * out.ndim
            width[axis] = (k - 1, k - 1)
            out = np.pad(out, width, constant_values=-np.inf)
        out = sliding_window_view(out, k, axis=axis).max(axis=-1)
    return out


def maximal(f: GridFunction, params: OperatorParams = OperatorParams()) -> GridFunction:
    """Fractional maximal function M_alpha |f| (Hardy-Littlewood for alpha=0)."""
    check_alpha(params.alpha, f.dim)
    clipped = params.family.boundary == CLIPPED
    absf = np.abs(f.samples)
    out = np.full(f.shape, -np.inf)
    for k in _scales(f, params.family):
        sums, counts = _direct_box_sums(absf, k, clipped)
        vals = fractional_weight(counts, f.h, f.dim, params.alpha) * sums
        np.maximum(out, _direct_containment_max(vals, k, clipped), out=out)
    return _finish(out, f)


def maximal_at(f: GridFunction, cell, params: OperatorParams = OperatorParams()) -> float:
    """M_alpha |f| at one cell by enumerating the cubes that contain it."""
    check_alpha(params.alpha, f.dim)
    best = -math.inf
    for cube in cubes_containing(cell, params.family, f.shape):
        sl = cube.clipped_slices(f.shape)
        count = cube.clipped_count(f.shape)
        total = math.fsum(np.abs(f.samples[sl]).ravel())
        best = max(best, float(fractional_weight(count, f.h, f.dim, params.alpha)) * total)
    if best == -math.inf:
        raise ValueError(f"no family cube contains cell {tuple(cell)}")
    return best


# -- accelerated evaluation --------------------------------------------------


def maximal_fast(f: GridFunction, params: OperatorParams = OperatorParams()) -> GridFunction:
    """Same values as :func:`maximal` in O(cells x scales)."""
    check_alpha(params.alpha, f.dim)
    clipped = params.family.boundary == CLIPPED
    table = build_prefix(f, 1.0, absolute=True)
    out = np.full(f.shape, -np.inf)
    for k in _scales(f, params.family):
        sums, counts = table.box_sums(k, clipped)
        vals = fractional_weight(counts, f.h, f.dim, params.alpha) * sums
        np.maximum(out, containment_max(vals, k, clipped), out=out)
    return _finish(out, f)


def maximal_restricted(f: GridFunction, qstar: Cube, params: OperatorParams = OperatorParams(),
                       fast: bool = False) -> GridFunction:
    """M_{alpha,Q*}: supremum over family cubes Q with x in Q and Q inside Q*.

    Returned on the cells of ``qstar`` (a grid function on that sub-grid).
    """
    sub = f.restrict(qstar)
    fam = CubeFamily(tuple(k for k in params.family.scales if k <= qstar.side) or (1,))
    run = maximal_fast if fast else maximal
    return run(sub, OperatorParams(params.alpha, fam))


def maximal_restricted_all(f: GridFunction, side: int, params: OperatorParams = OperatorParams()) -> np.ndarray:
    """M_{alpha,Q}(f) on Q for every interior cube Q of the given side at once.

    Result has shape ``anchors + (side,) * n``: entry ``[s..., j...]`` is the
    value at cell ``s + j`` for the cube anchored at ``s``.
    """
    check_alpha(params.alpha, f.dim)
    n_anchor = tuple(n - side + 1 for n in f.shape)
    if min(n_anchor) < 1:
        raise ValueError(f"no cube of side {side} fits in a grid of shape {f.shape}")
    scales = [k for k in params.family.scales if k <= side]
    if not scales:
        raise ValueError(f"family has no scale <= {side}")
    table = build_prefix(f, 1.0, absolute=True)
    out = np.full(n_anchor + (side,) * f.dim, -np.inf)

    def windows(k, j):
        lo, hi = max(0, j - k + 1), min(j, side - k)
        return lo, hi - lo + 1

    for k in scales:
        sums, counts = table.box_sums(k)
        vals = fractional_weight(counts, f.h, f.dim, params.alpha) * sums
        if f.dim == 1:
            for j in range(side):
                lo, width = windows(k, j)
                red = sliding_max(vals, width)[lo: lo + n_anchor[0]]
                np.maximum(out[:, j], red, out=out[:, j])
        else:
            for j0 in range(side):
                lo0, w0 = windows(k, j0)
                rows = sliding_max(vals, w0, axis=0)[lo0: lo0 + n_anchor[0]]
                for j1 in range(side):
                    lo1, w1 = windows(k, j1)
                    red = sliding_max(rows, w1, axis=1)[:, lo1: lo1 + n_anchor[1]]
                    np.maximum(out[:, :, j0, j1], red, out=out[:, :, j0, j1])
    return out


# -- padded window views shared by the oscillation / commutator kernels -------


def _padded(arr: np.ndarray, k: int, clipped: bool, fill: float = 0.0) -> np.ndarray:
    if not clipped:
        return arr
    return np.pad(arr, k - 1, constant_values=fill)


def _window_view(arr: np.ndarray, k: int) -> np.ndarray:
    return sliding_window_view(arr, (k,) * arr.ndim)


def _oscillations(values: np.ndarray, k: int, clipped: bool) -> np.ndarray:
    """Mean oscillation (1/|Q|) int_Q |g - g_Q| of every side-``k`` window."""
    dim = values.ndim
    # oscillation ignores constants; shifting makes constant windows exactly 0
    values = values - values.flat[0]
    fv = _window_view(_padded(values, k, clipped), k)
    mv = _window_view(_padded(np.ones(values.shape), k, clipped), k)
    axes = tuple(range(-dim, 0))
    counts = mv.sum(axis=axes)
    out = np.empty(fv.shape[:dim])
    rows = max(1, _CHUNK // max(1, fv[0].size))
    for start in range(0, fv.shape[0], rows):
        blk = slice(start, start + rows)
        f_blk, m_blk, c_blk = fv[blk], mv[blk], counts[blk]
        mean = (f_blk * m_blk).sum(axis=axes) / c_blk
        dev = np.abs(f_blk - mean[(...,) + (None,) * dim]) * m_blk
        out[blk] = dev.sum(axis=axes) / c_blk
    return out


def sharp_maximal(f: GridFunction, family: CubeFamily = CubeFamily()) -> GridFunction:
    """Fefferman-Stein sharp maximal function M# f."""
    clipped = family.boundary == CLIPPED
    out = np.full(f.shape, -np.inf)
    for k in _scales(f, family):
        osc = _oscillations(f.samples, k, clipped)
        np.maximum(out, containment_max(osc, k, clipped), out=out)
    return _finish(out, f)


def sharp_l2_proxy(f: GridFunction, family: CubeFamily = CubeFamily()) -> GridFunction:
    """sup over cubes of sqrt(mean(f**2) - mean(f)**2); profiling aid only.

    O(1) per window from prefix tables, but it is an L2 oscillation and differs
    from :func:`sharp_maximal` by constants.
    """
    clipped = family.boundary == CLIPPED
    t1 = build_prefix(f, 1.0, absolute=False)
    t2 = build_prefix(f, 2.0, absolute=True)
    out = np.full(f.shape, -np.inf)
    for k in _scales(f, family):
        s1, counts = t1.box_sums(k, clipped)
        s2, _ = t2.box_sums(k, clipped)
        var = np.maximum(s2 / counts - (s1 / counts) ** 2, 0.0)
        np.maximum(out, containment_max(np.sqrt(var), k, clipped), out=out)
    return _finish(out, f)


def maximal_commutator(b: GridFunction, f: GridFunction, params: OperatorParams = OperatorParams()) -> GridFunction:
    """M_{alpha,b} f(x) = sup_{Q containing x} |Q|^(alpha/n-1) int_Q |b(x)-b(y)| |f(y)| dy.

    Brute force: the kernel depends on x, so every (cube, cell-in-cube) pair
    is summed explicitly.
    """
    _same_grid(b, f)
    check_alpha(params.alpha, f.dim)
    clipped = params.family.boundary == CLIPPED
    dim, shape = f.dim, f.shape
    out = np.full(f.size, -np.inf)
    cell_ids = np.arange(f.size).reshape(shape)
    for k in _scales(f, params.family):
        bw = _window_view(_padded(b.samples, k, clipped), k)
        fw = _window_view(_padded(np.abs(f.samples), k, clipped), k)
        mw = _window_view(_padded(np.ones(shape), k, clipped), k)
        iw = _window_view(_padded(cell_ids, k, clipped, fill=-1), k)
        vol = k**dim
        bw = bw.reshape(-1, vol)
        fw = fw.reshape(-1, vol)
        iw = iw.reshape(-1, vol)
        counts = mw.reshape(-1, vol).sum(axis=1)
        weight = fractional_weight(counts, f.h, dim, params.alpha)
        step = max(1, _CHUNK // (vol * vol))
        for start in range(0, bw.shape[0], step):
            blk = slice(start, start + step)
            kern = np.abs(bw[blk, :, None] - bw[blk, None, :]) * fw[blk, None, :]
            vals = kern.sum(axis=-1) * weight[blk, None]
            ids = iw[blk]
            ok = ids >= 0
            np.maximum.at(out, ids[ok], vals[ok])
    return _finish(out.reshape(shape), f)


def commutator_maximal(b: GridFunction, f: GridFunction, params: OperatorParams = OperatorParams(),
                       fast: bool = False) -> GridFunction:
    """Nonlinear commutator [b, M_alpha] f = b M_alpha f - M_alpha(b f)."""
    _same_grid(b, f)
    run = maximal_fast if fast else maximal
    mf = run(f, params).samples
    mbf = run(f.with_samples(b.samples * f.samples), params).samples
    return f.with_samples(b.samples * mf - mbf)


def commutator_sharp(b: GridFunction, f: GridFunction, family: CubeFamily = CubeFamily()) -> GridFunction:
    """[b, M#] f = b M# f - M#(b f)."""
    _same_grid(b, f)
    sf = sharp_maximal(f, family).samples
    sbf = sharp_maximal(f.with_samples(b.samples * f.samples), family).samples
    return f.with_samples(b.samples * sf - sbf)


def decompose_sign(b: GridFunction) -> SignedDecomposition:
    """b = b_plus - b_minus and |b| = b_plus + b_minus with both parts >= 0."""
    s = b.samples
    minus = np.where(s < 0, -s, 0.0)
    plus = np.where(s > 0, s, 0.0)
    return SignedDecomposition(b.with_samples(minus), b.with_samples(plus))
