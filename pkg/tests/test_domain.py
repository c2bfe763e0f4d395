import json

import numpy as np
import pytest

from walklab.domain import (DomainSpec, LatticeDomain, build_lattice,
                            square_grid, validate_admissible)
from walklab.errors import EmptyDomainError, ParameterError


def test_square_grid_6x6_degrees():
    # hand count: 36 vertices, 24 boundary edges around the perimeter
    d = square_grid(6)
    assert d.n == 36
    assert d.deg_rho == 24
    assert d.deg_total == 168


def test_single_vertex_domain():
    d = build_lattice(DomainSpec("unit-square"), 4)
    assert d.n == 1
    assert d.deg_rho == 4
    assert d.deg_total == 8


def test_empty_domain_raises():
    with pytest.raises(EmptyDomainError):
        build_lattice(DomainSpec("unit-square"), 3)


def test_disk_membership_rule():
    spec = DomainSpec("disk", radius=1.0)
    d = build_lattice(spec, 16)
    for i, j in d.vertices:
        assert spec.dist_to_complement(i / 16, j / 16) > 1.0 / 16


def test_every_vertex_has_degree_four():
    d = build_lattice(DomainSpec("disk", radius=1.0), 12)
    adj = d.interior_adjacency()
    degs = np.asarray(adj.sum(axis=1)).ravel() + d.boundary_edge_count
    assert np.all(degs == 4)
    assert d.deg_rho == d.boundary_edge_count.sum()
    assert d.deg_total == 4 * d.n + d.deg_rho
    assert d.deg_total % 2 == 0


def test_walk_graph_is_connected():
    d = build_lattice(DomainSpec("unit-square"), 10)
    indptr, indices = d.walk_graph()
    seen = {d.n}
    stack = [d.n]
    while stack:
        v = stack.pop()
        for w in indices[indptr[v]:indptr[v + 1]]:
            if w not in seen:
                seen.add(int(w))
                stack.append(int(w))
    assert len(seen) == d.n + 1


def test_row_major_determinism():
    a = build_lattice(DomainSpec("unit-square"), 14)
    b = build_lattice(DomainSpec("unit-square"), 14)
    assert np.array_equal(a.vertices, b.vertices)
    # row-major: second coordinate varies slowest
    order = np.lexsort((a.vertices[:, 0], a.vertices[:, 1]))
    assert np.array_equal(order, np.arange(a.n))


def test_square_monotone_in_N():
    sizes = [build_lattice(DomainSpec("unit-square"), N).n for N in range(5, 40)]
    assert all(b >= a for a, b in zip(sizes, sizes[1:]))


def test_boundary_degree_ratio_decreasing():
    ratios = []
    for N in (16, 32, 64, 128):
        d = build_lattice(DomainSpec("unit-square"), N)
        ratios.append(d.deg_rho / d.deg_total)
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_validate_admissible_pass_and_fail():
    spec = DomainSpec("unit-square")
    d = build_lattice(spec, 20)
    rep = validate_admissible(d, spec, 0.05)
    assert rep.inner_condition_ok
    # a point at sup-distance exactly 1/N violates the strict inner condition
    bad = LatticeDomain.from_points(20, list(map(tuple, d.vertices)) + [(1, 10)])
    rep2 = validate_admissible(bad, spec, 0.05)
    assert not rep2.inner_condition_ok


def test_validate_outer_vacuous_for_large_delta():
    spec = DomainSpec("unit-square")
    d = build_lattice(spec, 20)
    rep = validate_admissible(d, spec, 5.0)
    assert rep.outer_condition_ok


def test_json_roundtrip():
    d = build_lattice(DomainSpec("disk", radius=0.8), 15)
    text = d.to_json()
    doc = json.loads(text)
    assert set(doc) >= {"N", "shape", "vertices", "boundary_edge_count"}
    d2 = LatticeDomain.from_json(text)
    assert d2.n == d.n
    assert np.array_equal(d2.vertices, d.vertices)
    assert d2.deg_total == d.deg_total


def test_polygon_simple_ok_self_intersecting_rejected():
    tri = DomainSpec("polygon", polygon=((0, 0), (1, 0), (0.5, 0.9)))
    d = build_lattice(tri, 24)
    assert d.n > 0
    with pytest.raises(ParameterError):
        DomainSpec("polygon", polygon=((0, 0), (1, 1), (1, 0), (0, 1)))


def test_rectangle_shape_validation():
    with pytest.raises(ParameterError):
        DomainSpec("rectangle", width=-1.0)
    with pytest.raises(ParameterError):
        DomainSpec("hexagon")
