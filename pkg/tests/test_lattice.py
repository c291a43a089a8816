import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiralcurl.lattice import (
    IndexMap,
    LatticeSpec,
    MaterialMask,
    Sphere,
    Spheroid,
    build_mask,
    classify_boundary,
    lattice_from_shifts,
    linear_index,
    neighbor_set,
    simple_cubic,
)
from conftest import SHIFT_MATRIX, cross_mask, empty_mask, full_mask, shift_spec


def test_linear_index_base_cases():
    assert linear_index(1, 1, 1, (4, 4, 4)) == 1
    assert linear_index(0, 1, 1, (4, 4, 4)) == 4  # periodic wrap to i1 = 4
    assert linear_index(2, 3, 1, (4, 4, 4)) == 10


dims_st = st.tuples(
    st.integers(1, 6), st.integers(1, 6), st.integers(1, 6)
)


@given(dims=dims_st)
@settings(max_examples=40, deadline=None)
def test_linear_index_bijective_and_wrap_invariant(dims):
    n1, n2, n3 = dims
    im = IndexMap(*dims)
    seen = set()
    for i3 in range(1, n3 + 1):
        for i2 in range(1, n2 + 1):
            for i1 in range(1, n1 + 1):
                j = im.linear(i1, i2, i3)
                assert 1 <= j <= im.n
                seen.add(j)
                assert im.linear(i1 + 2 * n1, i2 - n2, i3 + n3) == j
                assert im.triple(j) == (i1, i2, i3)
    assert len(seen) == im.n


def test_neighbor_simple_cubic_interior():
    spec = simple_cubic((5, 5, 5))
    im = spec.index_map
    got = neighbor_set(2, 2, 2, spec)
    expect = {
        im.linear(*t)
        for t in [
            (2, 2, 2),
            (1, 2, 2),
            (3, 2, 2),
            (2, 1, 2),
            (2, 3, 2),
            (2, 2, 1),
            (2, 2, 3),
        ]
    }
    assert got == expect


def _neighbors_from_curl(spec):
    """Oracle: neighbor sets read off the assembled sparse factors."""
    from chiralcurl.curl import assemble_curl

    blocks = assemble_curl(spec)
    n = spec.n
    out = [set() for _ in range(n)]
    for Cl in (blocks.C1, blocks.C2, blocks.C3):
        coo = Cl.tocoo()
        for r, c in zip(coo.row, coo.col):
            out[r].add(c + 1)
            out[c].add(r + 1)
    for j in range(n):
        out[j].add(j + 1)
    return out


@pytest.mark.parametrize("i", [0, 3, 4, 6])
def test_neighbor_matches_curl_pattern(i):
    spec = shift_spec(i, n=(5, 4, 3), k=(0.2, 0.1, 0.3))
    oracle = _neighbors_from_curl(spec)
    im = spec.index_map
    for j in range(1, spec.n + 1):
        tri = im.triple(j)
        assert set(neighbor_set(*tri, spec)) == oracle[j - 1], (tri, j)


@pytest.mark.parametrize("i", range(len(SHIFT_MATRIX)))
def test_neighbor_symmetry(i):
    spec = shift_spec(i, n=(4, 3, 5), k=(0.11, 0.07, 0.2))
    im = spec.index_map
    nbs = [neighbor_set(*im.triple(j), spec) for j in range(1, spec.n + 1)]
    for j in range(1, spec.n + 1):
        for p in nbs[j - 1]:
            assert j in nbs[p - 1]


def test_classify_boundary_empty_and_full():
    spec = simple_cubic((4, 4, 4))
    b, i = classify_boundary(empty_mask(spec), spec)
    assert b == frozenset() and i == frozenset()
    full = full_mask(spec)
    b, i = classify_boundary(full, spec)
    assert b == frozenset()
    assert i == frozenset(int(j) for j in full.inside)


def test_classify_boundary_single_node():
    spec = simple_cubic((6, 6, 6))
    j = spec.index_map.linear(3, 3, 3)
    mask = MaterialMask(spec.n, np.array([j]), 13.0, 1.0)
    b, i = classify_boundary(mask, spec)
    assert b == frozenset({j}) and i == frozenset()


def test_cross_mask_has_one_interior_node():
    spec = simple_cubic((5, 5, 5))
    mask = cross_mask(spec, center=(3, 3, 3))
    b, i = classify_boundary(mask, spec)
    assert i == frozenset({spec.index_map.linear(3, 3, 3)})
    assert b | i == frozenset(int(j) for j in mask.inside)


@given(
    dims=st.tuples(st.integers(3, 8), st.integers(3, 8), st.integers(3, 8)),
    data=st.data(),
)
@settings(max_examples=25, deadline=None)
def test_boundary_interior_partition_random_masks(dims, data):
    spec = simple_cubic(dims)
    n = spec.n
    inside = data.draw(
        st.sets(st.integers(1, n), min_size=0, max_size=min(n, 25))
    )
    mask = MaterialMask(n, np.array(sorted(inside), dtype=int), 13.0, 1.0)
    b, i = classify_boundary(mask, spec)
    assert b & i == frozenset()
    assert b | i == frozenset(inside)


def test_build_mask_radius_zero_and_cover():
    spec = simple_cubic((4, 4, 4))
    m0 = build_mask([Sphere(center=(0.25, 0.25, 0.25), radius=0.0)], spec, 13.0, 1.0)
    assert m0.size_inside == 1  # exactly the coincident node
    mfull = build_mask([Sphere(center=(0.5, 0.5, 0.5), radius=2.0)], spec, 13.0, 1.0)
    assert mfull.size_inside == spec.n


def test_build_mask_sphere_against_scan_oracle():
    spec = simple_cubic((6, 6, 6))
    r = 0.3
    got = build_mask([Sphere(center=(0.5, 0.5, 0.5), radius=r)], spec, 13.0, 1.0)
    inside = set()
    for i3 in range(6):
        for i2 in range(6):
            for i1 in range(6):
                p = np.array([i1, i2, i3]) / 6.0
                if np.linalg.norm(p - 0.5) <= r:
                    inside.add(i3 * 36 + i2 * 6 + i1 + 1)
    assert set(int(j) for j in got.inside) == inside
    assert got.size_inside == len(inside) > 0


def test_build_mask_spheroid_contains_axis_points():
    spec = simple_cubic((8, 8, 8))
    sp = Spheroid(center=(0.5, 0.5, 0.5), axis=(1, 0, 0), semi_axis=0.3, semi_radius=0.1)
    m = build_mask([sp], spec, 13.0, 1.0)
    im = spec.index_map
    assert im.linear(5, 5, 5) in set(int(j) for j in m.inside)
    assert im.linear(7, 5, 5) in set(int(j) for j in m.inside)  # along the axis
    assert im.linear(5, 7, 5) not in set(int(j) for j in m.inside)  # across it


def test_mask_validation():
    with pytest.raises(ValueError):
        MaterialMask(10, np.array([0]), 13.0, 1.0)
    with pytest.raises(ValueError):
        MaterialMask(10, np.array([1]), -1.0, 1.0)


def test_spec_validation_rejects_bad_shifts():
    with pytest.raises(ValueError):
        lattice_from_shifts((4, 4, 4), m11=1, m12=1, m13=1)  # m12-m13-m11 = -1
    with pytest.raises(ValueError):
        lattice_from_shifts((4, 4, 4), rho12=1, m12=0)  # flags disagree
    with pytest.raises(ValueError):
        lattice_from_shifts((4, 4, 4), m2=5)


def test_spec_rejects_inconsistent_vectors():
    # a2 tilted without matching shift counts -> ahat not orthogonal
    with pytest.raises(ValueError):
        LatticeSpec(
            a1=np.array([1.0, 0, 0]),
            a2=np.array([0.3, 1.0, 0]),
            a3=np.array([0, 0, 1.0]),
            n1=4, n2=4, n3=4, k=np.zeros(3),
        )


def test_spec_rejects_out_of_zone_k():
    with pytest.raises(ValueError):
        simple_cubic((4, 4, 4), k=(0.9, 0, 0))


def test_deltas_and_ahat_norms():
    spec = shift_spec(4, n=(4, 4, 4))
    for ahat, n, d in zip(
        (spec.ahat1, spec.ahat2, spec.ahat3),
        spec.dims,
        spec.deltas,
    ):
        assert np.isclose(np.linalg.norm(ahat), n * d)
    # pairwise orthogonality is enforced at construction
    assert abs(np.dot(spec.ahat1, spec.ahat2)) < 1e-12
