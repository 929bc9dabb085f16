import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskflow import (
    GridDims,
    close_mask,
    dense_predict,
    interpolate_instance_flow,
    mask_from_bitmap,
    mask_from_positions,
    predict_mask,
    valid_instance_flow,
)
from maskflow.core import FlowField, PixelPos
from maskflow.errors import DimsMismatchError, NoSamplesError
from maskflow.flowops import (
    GrayImage,
    SparseFlowSample,
    block_match_flow,
    identity_predict,
)

from helpers import close_oracle, hull_classify, nearest_sample_vectors, pixel_sets


def samples_at(points, vectors):
    return [
        SparseFlowSample(PixelPos(x, y), (float(dx), float(dy)))
        for (x, y), (dx, dy) in zip(points, vectors)
    ]


def full_mask(dims):
    return mask_from_bitmap(np.ones(dims.shape, dtype=bool))


# ---------------------------------------------------------------------------
# valid_instance_flow
# ---------------------------------------------------------------------------


def make_flow(dims, vec=(0.0, 0.0), valid_at=None):
    vecs = np.zeros(dims.shape + (2,), dtype=np.float32)
    vecs[:, :] = vec
    valid = np.zeros(dims.shape, dtype=bool)
    if valid_at is None:
        valid[:] = True
    else:
        for x, y in valid_at:
            valid[y, x] = True
    return FlowField.create(vecs, valid)


def test_valid_flow_full_validity():
    dims = GridDims(3, 3)
    m = mask_from_positions([(0, 0), (1, 0)], dims)
    out = valid_instance_flow(m, make_flow(dims, (1.0, 2.0)))
    assert len(out) == 2
    assert all(s.vec == (1.0, 2.0) for s in out)


def test_valid_flow_no_validity():
    dims = GridDims(3, 3)
    m = mask_from_positions([(0, 0), (1, 0)], dims)
    assert valid_instance_flow(m, make_flow(dims, valid_at=[])) == []


def test_valid_flow_intersection():
    dims = GridDims(3, 3)
    m = mask_from_positions([(0, 0), (1, 0)], dims)
    out = valid_instance_flow(m, make_flow(dims, (0.5, 0.5), valid_at=[(1, 0), (2, 2)]))
    assert [s.pos for s in out] == [(1, 0)]


def test_valid_flow_dims_mismatch():
    m = mask_from_positions([(0, 0)], GridDims(3, 3))
    with pytest.raises(DimsMismatchError):
        valid_instance_flow(m, make_flow(GridDims(4, 3)))


# ---------------------------------------------------------------------------
# interpolate_instance_flow
# ---------------------------------------------------------------------------


def test_interpolation_constant_field():
    dims = GridDims(5, 5)
    m = full_mask(dims)
    s = samples_at([(0, 0), (4, 0), (0, 4), (4, 4)], [(2, 0)] * 4)
    dense = interpolate_instance_flow(m, s)
    assert np.allclose(dense, (2.0, 0.0))


def test_interpolation_affine_example():
    # samples carry the affine field (x/2, 0); inside the hull the value at
    # (2, 1) must be exactly the field's value there, (1.0, 0.0)
    dims = GridDims(5, 5)
    m = full_mask(dims)
    pts = [(0, 0), (4, 0), (0, 4)]
    s = samples_at(pts, [(x / 2.0, 0.0) for x, _ in pts])
    dense = interpolate_instance_flow(m, s)
    idx = [tuple(p) for p in m.positions()].index((2, 1))
    assert hull_classify((2, 1), pts) == "inside"
    assert np.allclose(dense[idx], (1.0, 0.0), atol=1e-9)


def test_interpolation_single_sample_nearest_everywhere():
    dims = GridDims(4, 4)
    m = full_mask(dims)
    dense = interpolate_instance_flow(m, samples_at([(0, 0)], [(3, -1)]))
    assert np.allclose(dense, (3.0, -1.0))


def test_interpolation_collinear_falls_back_to_nearest():
    dims = GridDims(5, 5)
    m = full_mask(dims)
    pts = [(0, 0), (2, 0), (4, 0)]
    vectors = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]
    dense = interpolate_instance_flow(m, samples_at(pts, vectors))
    for (x, y), vec in zip(m.positions(), dense):
        assert tuple(vec) in nearest_sample_vectors((x, y), pts, vectors)


def test_interpolation_no_samples_raises():
    m = mask_from_positions([(0, 0)], GridDims(2, 2))
    with pytest.raises(NoSamplesError):
        interpolate_instance_flow(m, [])


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=30, deadline=None)
def test_interpolation_affine_exactness_random(seed):
    # affine displacement fields are reproduced exactly inside the hull and
    # by the nearest sample outside; the oracle evaluates the field directly
    rng = np.random.default_rng(seed)
    dims = GridDims(12, 12)
    m = full_mask(dims)
    a = rng.uniform(-1.5, 1.5, size=(2, 2))
    b = rng.uniform(-3, 3, size=2)
    while True:
        raw = rng.integers(0, 12, size=(int(rng.integers(3, 8)), 2))
        arr = np.array(sorted({tuple(p) for p in raw}), dtype=float)
        if len(arr) >= 3 and np.linalg.matrix_rank(arr - arr[0], tol=1e-9) == 2:
            pts = [tuple(int(v) for v in p) for p in arr]
            break
    vectors = [tuple(a @ np.array(p, float) + b) for p in pts]
    dense = interpolate_instance_flow(m, samples_at(pts, vectors))
    for (x, y), got in zip(m.positions(), dense):
        region = hull_classify((x, y), pts)
        want_affine = a @ np.array([x, y], float) + b
        if region == "inside":
            assert np.allclose(got, want_affine, atol=1e-9)
        elif region == "outside":
            assert tuple(got) in nearest_sample_vectors((x, y), pts, vectors)
        else:
            ok_affine = np.allclose(got, want_affine, atol=1e-9)
            ok_nearest = tuple(got) in nearest_sample_vectors((x, y), pts, vectors)
            assert ok_affine or ok_nearest


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=25, deadline=None)
def test_interpolation_inside_hull_is_local(seed):
    # inside the hull the value is a convex combination of sample vectors,
    # so it stays inside their componentwise envelope
    rng = np.random.default_rng(seed)
    dims = GridDims(10, 10)
    m = full_mask(dims)
    pts = [(0, 0), (9, 0), (0, 9), (9, 9)]
    vectors = [tuple(v) for v in rng.uniform(-4, 4, size=(4, 2))]
    dense = interpolate_instance_flow(m, samples_at(pts, vectors))
    lo = np.min(vectors, axis=0) - 1e-9
    hi = np.max(vectors, axis=0) + 1e-9
    assert (dense >= lo).all() and (dense <= hi).all()


# ---------------------------------------------------------------------------
# predict_mask
# ---------------------------------------------------------------------------


def constant_dense(mask, vec):
    return np.tile(np.asarray(vec, dtype=float), (mask.area, 1))


def test_predict_unit_shift():
    dims = GridDims(5, 5)
    m = mask_from_positions([(2, 2)], dims)
    p = predict_mask(m, constant_dense(m, (1, -1)), dims)
    assert p.positions() == [(3, 1)]


def test_predict_zero_flow_identity():
    dims = GridDims(6, 6)
    m = mask_from_positions([(1, 1), (2, 3), (5, 5)], dims)
    p = predict_mask(m, constant_dense(m, (0, 0)), dims)
    assert set(p.positions()) == set(m.positions())


def test_predict_drops_out_of_frame():
    dims = GridDims(4, 4)
    m = mask_from_positions([(3, 3)], dims)
    p = predict_mask(m, constant_dense(m, (2, 0)), dims)
    assert p.empty


def test_predict_rounds_half_away_from_zero():
    dims = GridDims(3, 3)
    m = mask_from_positions([(0, 0)], dims)
    p = predict_mask(m, constant_dense(m, (0.6, -0.4)), dims)
    assert p.positions() == [(1, 0)]
    # halves round away from zero on each component
    m2 = mask_from_positions([(1, 1)], dims)
    p2 = predict_mask(m2, constant_dense(m2, (0.5, -0.5)), dims)
    assert p2.positions() == [(2, 1)]  # y: 1 - 0.5 = 0.5 -> 1


@given(
    pixel_sets(max_side=12),
    st.integers(min_value=-4, max_value=4),
    st.integers(min_value=-4, max_value=4),
)
def test_predict_constant_integer_flow_is_translation(data, dx, dy):
    dims, pixels = data
    m = mask_from_positions(pixels, dims)
    p = predict_mask(m, constant_dense(m, (dx, dy)), dims)
    want = {
        (x + dx, y + dy)
        for x, y in pixels
        if 0 <= x + dx < dims.width and 0 <= y + dy < dims.height
    }
    assert set(p.positions()) == want


# ---------------------------------------------------------------------------
# close_mask
# ---------------------------------------------------------------------------


def test_close_empty():
    assert close_mask(set(), 2, GridDims(5, 5)) == set()


def test_close_solid_square_unchanged():
    dims = GridDims(9, 9)
    square = {(x, y) for x in range(2, 7) for y in range(2, 7)}
    assert close_mask(square, 1, dims) == close_oracle(square, 1, dims) == square


def test_close_fills_one_pixel_gap():
    dims = GridDims(3, 1)
    got = close_mask({PixelPos(0, 0), PixelPos(2, 0)}, 1, dims)
    assert got == {(0, 0), (1, 0), (2, 0)}
    assert got == close_oracle({(0, 0), (2, 0)}, 1, dims)


def test_close_radius_zero_is_identity():
    dims = GridDims(5, 5)
    pixels = {PixelPos(0, 0), PixelPos(4, 4), PixelPos(2, 1)}
    assert close_mask(pixels, 0, dims) == pixels


@given(pixel_sets(max_side=12, max_pixels=20), st.integers(min_value=0, max_value=3))
@settings(max_examples=60, deadline=None)
def test_close_matches_brute_force(data, radius):
    dims, pixels = data
    got = close_mask({PixelPos(x, y) for x, y in pixels}, radius, dims)
    assert got == close_oracle(pixels, radius, dims)


@given(pixel_sets(max_side=10, max_pixels=16), st.integers(min_value=0, max_value=3))
@settings(max_examples=60, deadline=None)
def test_close_extensive_and_idempotent(data, radius):
    dims, pixels = data
    pset = {PixelPos(x, y) for x, y in pixels}
    once = close_mask(pset, radius, dims)
    assert pset <= once
    assert close_mask(once, radius, dims) == once


@given(pixel_sets(max_side=10, max_pixels=14), st.integers(min_value=1, max_value=2))
@settings(max_examples=40, deadline=None)
def test_close_increasing(data, radius):
    dims, pixels = data
    pixels = list(pixels)
    smaller = set(pixels[: max(1, len(pixels) // 2)])
    bigger = set(pixels)
    a = close_mask({PixelPos(x, y) for x, y in smaller}, radius, dims)
    b = close_mask({PixelPos(x, y) for x, y in bigger}, radius, dims)
    assert a <= b


# ---------------------------------------------------------------------------
# dense_predict
# ---------------------------------------------------------------------------


def test_dense_predict_rigid_translation():
    dims = GridDims(16, 16)
    rect = {(x, y) for x in range(2, 7) for y in range(3, 8)}
    m = mask_from_positions(rect, dims)
    flow = make_flow(dims, (3.0, 0.0))
    p = dense_predict(m, flow, radius=1)
    assert set(p.positions()) == {(x + 3, y) for x, y in rect}
    assert p.area == m.area


def test_dense_predict_zero_flow_closes_original():
    dims = GridDims(8, 8)
    pixels = {(1, 1), (3, 1), (1, 3)}
    m = mask_from_positions(pixels, dims)
    p = dense_predict(m, make_flow(dims, (0.0, 0.0)), radius=1)
    assert set(p.positions()) == close_oracle(pixels, 1, dims)


def test_dense_predict_all_pixels_exit():
    dims = GridDims(5, 5)
    m = mask_from_positions([(4, 4)], dims)
    p = dense_predict(m, make_flow(dims, (3.0, 3.0)), radius=1)
    assert p.empty


def test_dense_predict_propagates_no_samples():
    dims = GridDims(5, 5)
    m = mask_from_positions([(1, 1)], dims)
    with pytest.raises(NoSamplesError):
        dense_predict(m, make_flow(dims, valid_at=[(4, 4)]), radius=1)


def test_identity_predict_keeps_pixels():
    dims = GridDims(5, 5)
    m = mask_from_positions([(1, 2), (2, 2)], dims)
    p = identity_predict(m)
    assert set(p.positions()) == set(m.positions())


def test_dense_predict_sparse_samples_translation():
    # only a fraction of the instance's pixels carry valid flow; the
    # interpolated prediction must still be the exact translation
    dims = GridDims(20, 20)
    rect = {(x, y) for x in range(4, 10) for y in range(4, 10)}
    m = mask_from_positions(rect, dims)
    vecs = np.zeros(dims.shape + (2,), dtype=np.float32)
    vecs[:, :] = (2.0, 1.0)
    valid = np.zeros(dims.shape, dtype=bool)
    for x, y in [(4, 4), (9, 4), (4, 9), (9, 9), (6, 7)]:
        valid[y, x] = True
    p = dense_predict(m, FlowField.create(vecs, valid), radius=1)
    assert set(p.positions()) == {(x + 2, y + 1) for x, y in rect}


# ---------------------------------------------------------------------------
# block_match_flow
# ---------------------------------------------------------------------------


def textured(seed, w=48, h=48):
    rng = np.random.default_rng(seed)
    return GrayImage.from_array(rng.random((h, w)))


def test_block_match_recovers_shift():
    prev = textured(7)
    nxt = GrayImage.from_array(np.roll(prev.intensity, (1, 4), axis=(0, 1)))
    field = block_match_flow(prev, nxt, block=7, search=6, min_texture=1e-4)
    ys, xs = np.nonzero(field.valid)
    assert len(xs) > 0
    assert (field.vectors[ys, xs] == (4.0, 1.0)).all()


def test_block_match_static_is_zero():
    prev = textured(3)
    field = block_match_flow(prev, prev, block=7, search=5, min_texture=1e-4)
    ys, xs = np.nonzero(field.valid)
    assert len(xs) > 0
    assert not field.vectors[ys, xs].any()


def test_block_match_uniform_image_all_invalid():
    img = GrayImage.from_array(np.full((32, 32), 0.5))
    field = block_match_flow(img, img, block=5, search=3, min_texture=1e-4)
    assert not field.valid.any()


def test_block_match_rejects_even_block():
    img = textured(1)
    with pytest.raises(ValueError):
        block_match_flow(img, img, block=4, search=2)


def test_block_match_dims_mismatch():
    with pytest.raises(DimsMismatchError):
        block_match_flow(textured(1, w=32), textured(1, w=40), block=5, search=2)
