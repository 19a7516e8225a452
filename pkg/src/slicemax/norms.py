"""Lebesgue, slice and BMO norms and the BMO characterization functionals.

Slice norms use the local window Q(x, t): the grid cube of
``w = max(1, round(t / h))`` cells whose cells are centered on x (for even
``w`` the extra cell goes toward the origin), clipped to the grid, with the
average taken over the clipped part.

The characterization functionals take a supremum over the interior cubes of
a :class:`CubeFamily`.  Wherever an operator is applied to ``b chi_Q`` the
function is treated as living on all of R^n (it vanishes off Q), so the
windows around Q are not cut off by the edge of the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._sliding import sliding_max
from .grid import Cube, CubeFamily, GridFunction, build_prefix
from .operators import OperatorParams, check_alpha, maximal_restricted_all

EXPONENT_TOL = 1e-12

CHARACTERIZATIONS = (
    "fractional_slice", "maximal_mean", "oscillation_slice", "oscillation_mean",
    "sharp_slice", "sharp_mean", "maximal_slice_power", "oscillation_slice_power",
)


def conjugate(e: float) -> float:
    """Hoelder conjugate e' = e / (e - 1)."""
    if e <= 1:
        raise ValueError(f"conjugate exponent needs e > 1, got {e}")
    return e / (e - 1.0)


@dataclass(frozen=True)
class ExponentSet:
    """Exponents with alpha/n = 1/p - 1/r = 1/q - 1/s.

    Source slice space has inner exponent p and outer q; the target has inner
    r and outer s.
    """

    p: float
    q: float
    r: float
    s: float
    alpha: float = 0.0
    n: int = 1

    def __post_init__(self):
        for name in "pqrs":
            v = getattr(self, name)
            if not (1 < v < math.inf):
                raise ValueError(f"exponent {name}={v} must lie in (1, inf)")
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        check_alpha(self.alpha, self.n)
        ratio = self.alpha / self.n
        gaps = (1 / self.p - 1 / self.r, 1 / self.q - 1 / self.s)
        if any(abs(g - ratio) > EXPONENT_TOL for g in gaps):
            raise ValueError(
                f"inconsistent exponents: alpha/n={ratio}, 1/p-1/r={gaps[0]}, 1/q-1/s={gaps[1]}"
            )
        if self.alpha > 0 and not (self.p < self.r and self.q < self.s):
            raise ValueError("need p < r and q < s when alpha > 0")

    @classmethod
    def from_alpha(cls, alpha: float, n: int = 1, p: float = 1.5, q: float = 1.5) -> ExponentSet:
        ratio = alpha / n
        if ratio >= 1 / p or ratio >= 1 / q:
            raise ValueError(f"alpha/n={ratio} leaves no room for r, s with p={p}, q={q}")
        return cls(p, q, 1 / (1 / p - ratio), 1 / (1 / q - ratio), alpha, n)

    def conjugates(self) -> dict[str, float]:
        return {name: conjugate(getattr(self, name)) for name in "pqrs"}


@dataclass(frozen=True)
class SliceParams:
    """(E^p_r)_t: window scale t, inner exponent r, outer exponent p."""

    t: float
    r: float
    p: float

    def __post_init__(self):
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ValueError(f"slice scale t must be positive, got {self.t}")
        for name in ("r", "p"):
            v = getattr(self, name)
            if not (1 < v < math.inf):
                raise ValueError(f"slice exponent {name}={v} must lie in (1, inf)")


def slice_width(t: float, h: float) -> int:
    """Side in cells of Q(x, t); scales below one cell collapse to a single cell."""
    return max(1, int(math.floor(t / h + 0.5)))


def lp_norm(f: GridFunction, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    vals = np.abs(f.samples).ravel()
    scale = vals.max()
    if scale == 0:
        return 0.0
    total = math.fsum(((vals / scale) ** p).tolist())
    return scale * (f.cell_volume * total) ** (1.0 / p)


def _local_window_counts(n: int, w: int):
    start = np.arange(n) - w // 2
    lo = np.clip(start, 0, n)
    hi = np.clip(start + w, 0, n)
    return lo, hi


def local_averages(f: GridFunction, t: float, r: float) -> np.ndarray:
    """(1/|Q(x,t)|) int_{Q(x,t)} |f|**r for every cell x."""
    w = slice_width(t, f.h)
    table = build_prefix(f, r, absolute=True)
    lows, highs, counts = [], [], 1
    for axis, n in enumerate(f.shape):
        lo, hi = _local_window_counts(n, w)
        view = [None] * f.dim
        view[axis] = slice(None)
        lows.append(lo[tuple(view)])
        highs.append(hi[tuple(view)])
        counts = counts * (hi - lo)[tuple(view)]
    return table._corner_sum(lows, highs) / counts


def slice_norm(f: GridFunction, params: SliceParams) -> float:
    """(E^p_r)_t norm: outer L^p norm of the local L^r averages."""
    if slice_width(params.t, f.h) == 1:
        return lp_norm(f, params.p)
    avg = np.maximum(local_averages(f, params.t, params.r), 0.0)
    return lp_norm(f.with_samples(avg ** (1.0 / params.r)), params.p)


def bmo_norm(b: GridFunction, family: CubeFamily = CubeFamily(), with_argmax: bool = False):
    """sup over family cubes of the mean oscillation (1/|Q|) int_Q |b - b_Q|.

    With ``with_argmax`` also returns the first cube attaining the supremum.
    """
    best, arg = -math.inf, None
    for k in _interior_scales(family, b.shape):
        osc = _interior_oscillations(b.samples, k)
        i = int(np.argmax(osc))
        if osc.flat[i] > best:
            best = float(osc.flat[i])
            arg = Cube(np.unravel_index(i, osc.shape), k)
    if arg is None:
        raise ValueError("cube family has no cube inside the grid")
    return (best, arg) if with_argmax else best


def _interior_scales(family: CubeFamily, shape) -> list[int]:
    return [k for k in family.scales if k <= min(shape)]


def _interior_oscillations(values: np.ndarray, k: int) -> np.ndarray:
    dim = values.ndim
    win = sliding_window_view(values - values.flat[0], (k,) * dim)
    axes = tuple(range(-dim, 0))
    mean = win.mean(axis=axes)
    return np.abs(win - mean[(...,) + (None,) * dim]).mean(axis=axes)


# -- per-cube machinery for the characterization functionals -----------------


def _cube_windows(values: np.ndarray, m: int) -> np.ndarray:
    """Copies of ``values`` on every interior side-``m`` cube: anchors + (m,)*n."""
    return np.array(sliding_window_view(values, (m,) * values.ndim))


def _box_sum_last(arr: np.ndarray, w: int, dim: int) -> np.ndarray:
    """Valid side-``w`` window sums over the trailing ``dim`` axes."""
    for axis in range(arr.ndim - dim, arr.ndim):
        arr = sliding_window_view(arr, w, axis=axis).sum(axis=-1)
    return arr


def _cube_slice_norms(g: np.ndarray, m: int, b: GridFunction, t: float, inner: float, outer: float) -> np.ndarray:
    """Slice norm of g_Q chi_Q for every cube Q, where g has shape anchors + (m,)*n.

    Only cells x whose local window meets Q contribute, so each norm is a sum
    over a (m + w - 1)**n neighbourhood of Q.
    """
    dim, h = b.dim, b.h
    w = slice_width(t, h)
    n_anchor = g.shape[:dim]
    powered = np.abs(g) ** inner
    pad = [(0, 0)] * dim + [(w - 1, w - 1)] * dim
    sums = _box_sum_last(np.pad(powered, pad), w, dim)  # offsets u = -(w-1) .. m-1 of window start
    # the window of cell x starts at x - w//2, so x = anchor + u + w//2
    counts = np.ones(n_anchor + (m + w - 1,) * dim)
    inside = np.ones(n_anchor + (m + w - 1,) * dim, dtype=bool)
    for axis, n in enumerate(b.shape):
        lo, hi = _local_window_counts(n, w)
        cnt_full = (hi - lo).astype(np.float64)
        x = np.arange(n_anchor[axis])[:, None] + np.arange(-(w - 1), m)[None, :] + w // 2
        valid = (x >= 0) & (x < n)
        cnt = np.where(valid, cnt_full[np.clip(x, 0, n - 1)], 1.0)
        shape = [1] * (2 * dim)
        shape[axis] = n_anchor[axis]
        shape[dim + axis] = m + w - 1
        counts = counts * cnt.reshape(shape)
        inside = inside & valid.reshape(shape)
    local = np.where(inside, sums / counts, 0.0)
    axes = tuple(range(dim, 2 * dim))
    total = (np.maximum(local, 0.0) ** (outer / inner)).sum(axis=axes)
    return (b.cell_volume * total) ** (1.0 / outer)


def sharp_of_cube_restrictions(b: GridFunction, m: int, family: CubeFamily) -> np.ndarray:
    """M#(b chi_Q) on Q for every interior cube Q of side ``m``.

    ``b chi_Q`` is taken as a function on R^n; windows of every family scale
    around Q are used in full.  Shape: anchors + (m,)*n.
    """
    dim = b.dim
    cubes = _cube_windows(b.samples, m)
    out = np.full(cubes.shape, -np.inf)
    for k in family.scales:
        pad = [(0, 0)] * dim + [(k - 1, k - 1)] * dim
        padded = np.pad(cubes, pad)
        win = sliding_window_view(padded, (k,) * dim, axis=tuple(range(dim, 2 * dim)))
        axes = tuple(range(-dim, 0))
        mean = win.mean(axis=axes)
        osc = np.abs(win - mean[(...,) + (None,) * dim]).mean(axis=axes)
        # osc is indexed by window start offset o = -(k-1) .. m-1 relative to the anchor;
        # cell j of Q is covered by offsets j-k+1 .. j
        red = osc
        for axis in range(dim, 2 * dim):
            red = sliding_max(red, k, axis=axis)
        np.maximum(out, red, out=out)
    return out


def _cube_means(cubes: np.ndarray, dim: int) -> np.ndarray:
    axes = tuple(range(dim, 2 * dim))
    return cubes.mean(axis=axes)


def _expand(arr: np.ndarray, dim: int) -> np.ndarray:
    return arr[(...,) + (None,) * dim]


def characterization(
    b: GridFunction,
    which: str,
    exps: ExponentSet | None = None,
    slice_params: SliceParams | None = None,
    family: CubeFamily = CubeFamily(),
    with_argmax: bool = False,
):
    """Supremum over family cubes Q of one of the BMO characterization quantities.

    ``fractional_slice``  |Q|^(-1/s) ||(b - |Q|^(-a/n) M_{a,Q} b) chi_Q||  in (E_r^s)_t
    ``maximal_mean``  (1/|Q|) int_Q |b - M_Q b|
    ``oscillation_slice``  |Q|^(-1/s) ||(b - b_Q) chi_Q||  in (E_r^s)_t
    ``oscillation_mean``  (1/|Q|) int_Q |b - b_Q|
    ``sharp_slice``  (1/|Q|) ||(b - 2 M#(b chi_Q)) chi_Q||^q  in (E_p^q)_t
    ``sharp_mean``  (1/|Q|) int_Q |b - 2 M#(b chi_Q)|
    ``maximal_slice_power``  (1/|Q|) ||(b - M_Q b) chi_Q||^q  in (E_p^q)_t
    ``oscillation_slice_power``  (1/|Q|) ||(b - b_Q) chi_Q||^q  in (E_p^q)_t

    Only ``slice_params.t`` is read; the exponents come from ``exps``.
    """
    if which not in CHARACTERIZATIONS:
        raise ValueError(f"unknown characterization {which!r}; choose from {CHARACTERIZATIONS}")
    needs_norm = not which.endswith("_mean")
    if needs_norm:
        if exps is None or slice_params is None:
            raise ValueError(f"{which} needs an ExponentSet and SliceParams")
        if exps.n != b.dim:
            raise ValueError(f"exponents are for n={exps.n} but the grid has n={b.dim}")
    alpha = exps.alpha if (exps is not None and which == "fractional_slice") else 0.0
    dim, h = b.dim, b.h
    best, arg = -math.inf, None
    for m in _interior_scales(family, b.shape):
        cubes = _cube_windows(b.samples, m)
        measure = (m * h) ** dim
        if which in ("fractional_slice", "maximal_mean", "maximal_slice_power"):
            mres = maximal_restricted_all(b, m, OperatorParams(alpha, family))
            g = cubes - measure ** (-alpha / dim) * mres
        elif which == "oscillation_mean":
            g = None
        elif which in ("oscillation_slice", "oscillation_slice_power"):
            g = cubes - _expand(_cube_means(cubes, dim), dim)
        else:
            g = cubes - 2.0 * sharp_of_cube_restrictions(b, m, family)

        if which == "oscillation_mean":
            vals = _interior_oscillations(b.samples, m)
        elif which.endswith("_mean"):
            vals = np.abs(g).mean(axis=tuple(range(dim, 2 * dim)))
        elif which in ("fractional_slice", "oscillation_slice"):
            vals = measure ** (-1.0 / exps.s) * _cube_slice_norms(g, m, b, slice_params.t, exps.r, exps.s)
        else:
            vals = _cube_slice_norms(g, m, b, slice_params.t, exps.p, exps.q) ** exps.q / measure
        i = int(np.argmax(vals))
        if vals.flat[i] > best:
            best = float(vals.flat[i])
            arg = Cube(np.unravel_index(i, vals.shape), m)
    if arg is None:
        raise ValueError("cube family has no cube inside the grid")
    return (best, arg) if with_argmax else best


def holder_check(f: GridFunction, g: GridFunction, p: float) -> dict:
    """Ratio int |f g| / (||f||_p ||g||_p') and whether it is <= 1 + 1e-12."""
    if f.shape != g.shape or f.h != g.h:
        raise ValueError("Hoelder check needs functions on the same grid")
    pc = conjugate(p)
    lhs = f.cell_volume * math.fsum(np.abs(f.samples * g.samples).ravel().tolist())
    denom = lp_norm(f, p) * lp_norm(g, pc)
    if denom == 0:
        return {"lhs": lhs, "denominator": 0.0, "ratio": None, "verdict": "vacuous"}
    ratio = lhs / denom
    return {"lhs": lhs, "denominator": denom, "ratio": ratio,
            "verdict": "pass" if ratio <= 1 + 1e-12 else "fail"}
