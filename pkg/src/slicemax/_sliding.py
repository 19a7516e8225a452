"""Vectorized sliding-window maxima.

Uses the van Herk / Gil-Werman block scheme: pad to whole blocks of the
window length, take running maxima forward and backward inside each block,
then every window is the max of one backward and one forward value.  Cost is
O(1) per element independent of the window length.
"""
import numpy as np


def sliding_max(a: np.ndarray, k: int, axis: int = -1) -> np.ndarray:
    """``out[j] = max(a[j : j + k])`` along ``axis`` (valid windows only)."""
    a = np.moveaxis(np.asarray(a, dtype=np.float64), axis, -1)
    n = a.shape[-1]
    if k < 1 or k > n:
        raise ValueError(f"window {k} does not fit in length {n}")
    if k == 1:
        return np.moveaxis(a.copy(), -1, axis)
    nb = -(-n // k)
    pad = nb * k - n
    if pad:
        fill = np.full(a.shape[:-1] + (pad,), -np.inf)
        a = np.concatenate([a, fill], axis=-1)
    blocks = a.reshape(a.shape[:-1] + (nb, k))
    fwd = np.maximum.accumulate(blocks, axis=-1).reshape(a.shape)
    bwd = np.maximum.accumulate(blocks[..., ::-1], axis=-1)[..., ::-1].reshape(a.shape)
    out = np.maximum(bwd[..., : n - k + 1], fwd[..., k - 1 : n])
    return np.moveaxis(out, -1, axis)


def containment_max(values: np.ndarray, k: int, clipped: bool = False) -> np.ndarray:
    """Per-cell maximum of per-anchor values over side-``k`` cubes holding the cell.

    ``values`` is indexed by anchor: interior anchors ``0 .. n-k`` per axis, or
    clipped anchors ``-k+1 .. n-1``.  Cells with no cube get ``-inf``.
    """
    out = np.asarray(values, dtype=np.float64)
    for axis in range(out.ndim):
        if not clipped:
            width = [(0, 0)] * out.ndim
            width[axis] = (k - 1, k - 1)
            out = np.pad(out, width, constant_values=-np.inf)
        out = sliding_max(out, k, axis)
    return out
