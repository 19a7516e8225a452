from collections import deque

import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from slicemax._sliding import containment_max, sliding_max


def deque_sliding_max(a, k):
    """Classic monotone-deque sliding maximum, used as the reference."""
    out, dq = [], deque()
    for i, v in enumerate(a):
        while dq and a[dq[-1]] <= v:
            dq.pop()
        dq.append(i)
        if dq[0] <= i - k:
            dq.popleft()
        if i >= k - 1:
            out.append(a[dq[0]])
    return np.array(out)


@given(arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e9, 1e9)), st.data())
def test_sliding_max_matches_deque(a, data):
    k = data.draw(st.integers(1, a.size))
    assert np.array_equal(sliding_max(a, k), deque_sliding_max(a, k))


def test_sliding_max_axis(rng):
    a = rng.standard_normal((5, 9))
    got = sliding_max(a, 3, axis=1)
    assert np.array_equal(got[2], deque_sliding_max(a[2], 3))
    got0 = sliding_max(a, 2, axis=0)
    assert np.array_equal(got0[:, 4], deque_sliding_max(a[:, 4], 2))


def test_containment_max_interior():
    # anchors 0..2 for k=2 on 4 cells; cell j lies in windows j-1 and j
    vals = np.array([1.0, 5.0, 2.0])
    assert containment_max(vals, 2).tolist() == [1, 5, 5, 2]


def test_containment_max_clipped():
    vals = np.array([7.0, 1.0, 2.0, 3.0])  # anchors -1..2 for k=2 on 3 cells
    assert containment_max(vals, 2, clipped=True).tolist() == [7, 2, 3]
