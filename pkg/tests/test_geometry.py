import numpy as np
import pytest

from cslab.errors import (
    DegenerateTriangle,
    FaceMismatch,
    LevelOutOfRange,
    OutsideOctant,
    ZeroPoint,
)
from cslab.geometry import (
    Order,
    Point3,
    RadialGraph,
    SpeciesSubset,
    Vec3,
    as_array,
    interpolate_pushforward,
    make_grid,
    node_index,
    order_compare,
    radial_project,
)


@pytest.mark.parametrize("level", [1, 2, 4, 32])
def test_grid_counts(level):
    grid = make_grid(level)
    assert len(grid) == (level + 1) * (level + 2) // 2
    assert len(grid.triangles) == level**2
    np.testing.assert_allclose(grid.nodes.sum(axis=1), 1.0)


def test_grid_node_order():
    level = 4
    grid = make_grid(level)
    for i in range(level + 1):
        for j in range(level + 1 - i):
            k = level - i - j
            np.testing.assert_allclose(
                grid.nodes[node_index(i, j, level)], [i / level, j / level, k / level]
            )


@pytest.mark.parametrize("level", [0, -3, 1025, 2.5])
def test_grid_level_out_of_range(level):
    with pytest.raises(LevelOutOfRange):
        make_grid(level)


def test_species_subset():
    face = SpeciesSubset.of(2, 1)
    assert face.label == "12"
    assert face.indices == (0, 1)
    assert face.absent == (2,)
    assert len(face) == 2


def test_radial_project():
    y, rho = radial_project([1.0, 2.0, 1.0])
    assert rho == pytest.approx(4.0)
    np.testing.assert_allclose(y.array, [0.25, 0.5, 0.25])
    assert y.array.sum() == 1.0


def test_radial_project_rejects():
    with pytest.raises(OutsideOctant):
        radial_project([1.0, -0.5, 0.0])
    with pytest.raises(ZeroPoint):
        radial_project([0.0, 0.0, 0.0])


@pytest.mark.parametrize(
    "p, q, order",
    [
        ([1, 1, 0], [1, 1, 0], Order.Equal),
        ([1, 1, 0], [2, 2, 0], Order.AllStrict),
        ([1, 1, 0], [1, 2, 0], Order.LeqStrictSomewhere),
        ([2, 2, 0], [1, 1, 0], Order.AllStrictAbove),
        ([1, 2, 0], [1, 1, 0], Order.GeqStrictSomewhere),
        ([1, 2, 0], [2, 1, 0], Order.Incomparable),
    ],
)
def test_order_compare(p, q, order):
    assert order_compare(p, q, SpeciesSubset.of(1, 2)) == order


def test_order_compare_off_face():
    with pytest.raises(FaceMismatch):
        order_compare([1, 1, 1], [1, 1, 0], SpeciesSubset.of(1, 2))


def test_interpolate_pushforward_inside_triangle():
    pairs = [([1, 0, 0], 1.0), ([0, 1, 0], 2.0), ([0, 0, 1], 3.0)]
    result = interpolate_pushforward(pairs, [[0, 1, 2]], [1 / 3, 1 / 3, 1 / 3])
    assert result.radius == pytest.approx(2.0)
    assert not result.extrapolated


def test_radial_graph_requires_positive_radii():
    grid = make_grid(2)
    with pytest.raises(ValueError):
        RadialGraph(grid=grid, rho=np.zeros(len(grid)))


def test_radial_graph_distance_on_flat_surface():
    grid = make_grid(8)
    graph = RadialGraph(grid=grid, rho=np.full(len(grid), 2.0))
    np.testing.assert_allclose(graph.radius_at(np.array([[0.2, 0.3, 0.5]])), [2.0])
    np.testing.assert_allclose(graph.graph_distance(np.array([[1.0, 1.0, 1.0]])), [1.0])


def test_boundary_nodes_carry_their_face():
    grid = make_grid(4)
    faces = grid.node_faces
    for y, face in zip(grid.nodes, faces):
        if np.all(y > 0):
            assert face is None
        else:
            assert face.indices == tuple(np.flatnonzero(y > 0))
    assert faces[node_index(4, 0, 4)] == SpeciesSubset.of(1)
    assert faces[node_index(2, 2, 4)] == SpeciesSubset.of(1, 2)
    assert sum(face is None for face in faces) == 3
    assert np.array_equal(grid.boundary_mask, [face is not None for face in faces])


@pytest.mark.parametrize("level", [1, 4, 32])
@pytest.mark.parametrize("labels", [(1, 2), (1, 3), (2, 3)])
def test_face_nodes(level, labels):
    grid = make_grid(level)
    face = SpeciesSubset.of(*labels)
    nodes = grid.face_nodes(face)
    assert len(nodes) == level + 1
    first = face.indices[0]
    assert np.all(np.diff(grid.nodes[nodes, first]) > 0)
    assert all(grid.node_faces[k].members <= face.members for k in nodes)


def test_face_nodes_need_a_planar_face():
    with pytest.raises(FaceMismatch):
        make_grid(4).face_nodes(SpeciesSubset.of(1))


SMALL_TRIANGLE = [([0.6, 0.2, 0.2], 1.0), ([0.2, 0.6, 0.2], 2.0), ([0.2, 0.2, 0.6], 3.0)]


def test_interpolate_pushforward_extrapolates_nearest():
    result = interpolate_pushforward(SMALL_TRIANGLE, [[0, 1, 2]], [0.9, 0.05, 0.05])
    assert result.extrapolated
    assert result.radius == 1.0


def test_interpolate_pushforward_on_folded_surface():
    folded = [([0.8, 0.1, 0.1], 1.0), ([0.9, 0.05, 0.05], 1.0), ([0.85, 0.075, 0.075], 1.0)]
    pairs = SMALL_TRIANGLE + folded
    with pytest.raises(DegenerateTriangle):
        interpolate_pushforward(pairs, [[0, 1, 2], [3, 4, 5]], [0.85, 0.075, 0.075])


def test_points_and_vectors_as_arrays():
    np.testing.assert_array_equal(as_array(Point3.of([1, 2, 3])), [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(as_array(Vec3.of([0, -1, 0])), [0.0, -1.0, 0.0])
    with pytest.raises(ValueError):
        Vec3(v1=float("nan"), v2=0.0, v3=0.0)
