"""Independent brute-force oracles and hypothesis strategies for the suite.

Everything here deliberately avoids the library's own code paths: closing is
re-derived with explicit quantifiers, assignment by permutation enumeration,
nearest neighbors by exhaustive distance comparison. Keep it that way; these
are the reference implementations the fast paths are checked against.
"""

import itertools

import numpy as np
from hypothesis import strategies as st

from maskflow import GridDims


def close_oracle(pixels, radius, dims):
    """Dilate-then-erode by explicit quantifiers over the grid.

    Dilation treats outside-of-grid as background; erosion quantifies only
    over in-grid neighbors (outside counts as foreground), so the result is
    clipped to the grid and contains the input.
    """
    pixels = set(pixels)
    if radius == 0:
        return pixels
    grid = [(x, y) for x in range(dims.width) for y in range(dims.height)]
    dilated = {
        (x, y)
        for (x, y) in grid
        if any(abs(x - px) <= radius and abs(y - py) <= radius for (px, py) in pixels)
    }
    closed = set()
    for x, y in grid:
        ok = True
        for dx in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                nx, ny = x + dx, y + dy
                if 0 <= nx < dims.width and 0 <= ny < dims.height and (nx, ny) not in dilated:
                    ok = False
        if ok:
            closed.add((x, y))
    return closed


def brute_force_max_assignment(entries):
    """Maximum total over all injective row-to-column maps."""
    entries = np.asarray(entries)
    n, m = entries.shape
    if n == 0 or m == 0:
        return 0
    if n > m:
        return brute_force_max_assignment(entries.T)
    best = 0
    for perm in itertools.permutations(range(m), n):
        best = max(best, sum(int(entries[i, perm[i]]) for i in range(n)))
    return best


def nearest_sample_vectors(point, sample_positions, sample_vectors):
    """Vectors of all samples at minimal Euclidean distance from point."""
    pts = np.asarray(sample_positions, dtype=float)
    d2 = ((pts - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
    best = d2.min()
    return [tuple(v) for v, d in zip(sample_vectors, d2) if d <= best + 1e-12]


def hull_classify_many(points, sample_positions, eps=1e-9):
    """Label each point 'inside', 'outside' or 'boundary' w.r.t. the hull."""
    from scipy.spatial import ConvexHull, QhullError

    pts = np.asarray(sample_positions, dtype=float)
    query = np.atleast_2d(np.asarray(points, dtype=float))
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return ["outside"] * len(query)  # degenerate: everything takes the fallback
    values = query @ hull.equations[:, :2].T + hull.equations[:, 2]
    labels = []
    for row in values:
        if (row <= -eps).all():
            labels.append("inside")
        elif (row >= eps).any():
            labels.append("outside")
        else:
            labels.append("boundary")
    return labels


def hull_classify(point, sample_positions, eps=1e-9):
    return hull_classify_many([point], sample_positions, eps)[0]


# ---------------------------------------------------------------------------
# hypothesis strategies
# ---------------------------------------------------------------------------


def dims_strategy(max_side=16):
    return st.builds(
        GridDims,
        st.integers(min_value=1, max_value=max_side),
        st.integers(min_value=1, max_value=max_side),
    )


@st.composite
def pixel_sets(draw, max_side=16, min_pixels=1, max_pixels=24):
    dims = draw(dims_strategy(max_side))
    n = draw(st.integers(min_value=min_pixels, max_value=max_pixels))
    pixels = draw(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=dims.width - 1),
                st.integers(min_value=0, max_value=dims.height - 1),
            ),
            min_size=n,
            max_size=n,
        )
    )
    return dims, set(pixels)
