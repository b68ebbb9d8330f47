"""Points, vectors and faces of the non-negative octant, the probability
simplex grid, and radial graphs over it.

Points live in the affine space H and vectors in V; both are three
dimensional.  Radii are measured in the 1-norm, so the radial projection of a
point ``x`` is ``(x / sum(x), sum(x))`` and a surface radially homeomorphic to
the probability simplex is stored as a radius per grid node.

``` python
from cslab.geometry import make_grid, radial_project

grid = make_grid(32)
y, rho = radial_project([1.0, 1.0, 1.0])
```
"""

from __future__ import annotations

import itertools
import math
from enum import Enum
from functools import cached_property
from typing import Annotated, Any, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from pydantic import BeforeValidator, ConfigDict, PlainSerializer
from scipy.spatial import cKDTree

from cslab.errors import (
    DegenerateTriangle,
    FaceMismatch,
    LevelOutOfRange,
    OutsideOctant,
    ZeroPoint,
)

NDArray = Annotated[
    np.ndarray,
    BeforeValidator(lambda value: np.asarray(value, dtype=float)),
    PlainSerializer(lambda value: np.asarray(value).tolist(), return_type=list),
]
IndexArray = Annotated[
    np.ndarray,
    BeforeValidator(lambda value: np.asarray(value, dtype=np.intp)),
    PlainSerializer(lambda value: np.asarray(value).tolist(), return_type=list),
]

SPECIES = (1, 2, 3)
BARYCENTRIC_TOL = 1e-10
DEGENERATE_AREA = 1e-14
ArrayLike = Union[Sequence[float], np.ndarray, "Point3", "Vec3", "SimplexPoint"]


def as_array(value: Any) -> np.ndarray:
    "coordinates of a point, vector or array-like as a float array"
    if isinstance(value, (Point3, Vec3, SimplexPoint)):
        return value.array
    return np.asarray(value, dtype=float)


class Point3(pydantic.BaseModel):
    x1: float
    x2: float
    x3: float
    model_config = ConfigDict(frozen=True)

    @pydantic.field_validator("x1", "x2", "x3")
    @classmethod
    def finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("point coordinates must be finite")
        return value

    @classmethod
    def of(cls, value: ArrayLike) -> "Point3":
        x1, x2, x3 = (float(v) for v in as_array(value))
        return cls(x1=x1, x2=x2, x3=x3)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])


class Vec3(pydantic.BaseModel):
    v1: float
    v2: float
    v3: float
    model_config = ConfigDict(frozen=True)

    @pydantic.field_validator("v1", "v2", "v3")
    @classmethod
    def finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("vector coordinates must be finite")
        return value

    @classmethod
    def of(cls, value: ArrayLike) -> "Vec3":
        v1, v2, v3 = (float(v) for v in as_array(value))
        return cls(v1=v1, v2=v2, v3=v3)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3])


class SpeciesSubset(pydantic.BaseModel):
    "A nonempty set of species, indexing faces, cones and sub-Jacobians."

    members: frozenset[int]
    model_config = ConfigDict(frozen=True)

    @pydantic.field_validator("members")
    @classmethod
    def valid_members(cls, value: frozenset[int]) -> frozenset[int]:
        if not 1 <= len(value) <= 3:
            raise ValueError("a species subset has between one and three members")
        if not value <= set(SPECIES):
            raise ValueError(f"species must be drawn from {SPECIES}, got {sorted(value)}")
        return value

    @classmethod
    def of(cls, *members: int) -> "SpeciesSubset":
        if len(members) == 1 and isinstance(members[0], (str, list, tuple, set, frozenset)):
            members = tuple(int(m) for m in members[0])
        return cls(members=frozenset(members))

    def complement(self) -> Optional["SpeciesSubset"]:
        "the absent species, or None for the full set"
        rest = set(SPECIES) - self.members
        return SpeciesSubset(members=frozenset(rest)) if rest else None

    @property
    def indices(self) -> Tuple[int, ...]:
        "zero based coordinate indices, ascending"
        return tuple(sorted(m - 1 for m in self.members))

    @property
    def absent(self) -> Tuple[int, ...]:
        "zero based indices of the coordinates outside the face"
        return tuple(i for i in range(3) if i + 1 not in self.members)

    @property
    def label(self) -> str:
        return "".join(str(m) for m in sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __str__(self) -> str:
        return "{" + ",".join(str(m) for m in sorted(self.members)) + "}"


ALL_SUBSETS: Tuple[SpeciesSubset, ...] = tuple(
    SpeciesSubset(members=frozenset(combo))
    for size in (1, 2, 3)
    for combo in itertools.combinations(SPECIES, size)
)
PLANAR_FACES: Tuple[SpeciesSubset, ...] = tuple(s for s in ALL_SUBSETS if len(s) == 2)


class SimplexPoint(pydantic.BaseModel):
    y1: float
    y2: float
    y3: float
    model_config = ConfigDict(frozen=True)

    @pydantic.model_validator(mode="after")
    def on_simplex(self) -> "SimplexPoint":
        coords = self.array
        if np.any(coords < -1e-12):
            raise ValueError(f"barycentric coordinates must be non-negative, got {coords}")
        if abs(coords.sum() - 1.0) > 1e-12:
            raise ValueError(f"barycentric coordinates must sum to one, got {coords.sum()}")
        return self

    @classmethod
    def of(cls, value: ArrayLike) -> "SimplexPoint":
        y1, y2, y3 = (float(v) for v in as_array(value))
        return cls(y1=y1, y2=y2, y3=y3)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.y1, self.y2, self.y3])


class Order(str, Enum):
    Equal = "Equal"
    LeqStrictSomewhere = "LeqStrictSomewhere"
    AllStrict = "AllStrict"
    GeqStrictSomewhere = "GeqStrictSomewhere"
    AllStrictAbove = "AllStrictAbove"
    Incomparable = "Incomparable"


def radial_project(x: ArrayLike) -> Tuple[SimplexPoint, float]:
    """
    Radially project a nonzero point of the octant onto the probability
    simplex, returning the direction and the 1-norm radius.
    """
    coords = as_array(x)
    if np.any(coords < 0):
        raise OutsideOctant(f"{coords} is not in the non-negative octant")
    if np.all(coords <= 1e-300):
        raise ZeroPoint("the origin has no radial direction")
    rho = float(coords.sum())
    y = coords / rho
    # keep the simplex constraint exact after division
    y[np.argmax(y)] += 1.0 - y.sum()
    return SimplexPoint.of(np.clip(y, 0.0, None)), rho


def project_rays(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    "vectorised radial projection of an (n, 3) array of nonzero points"
    points = np.asarray(points, dtype=float)
    rho = points.sum(axis=-1)
    if np.any(rho <= 1e-300):
        raise ZeroPoint("cannot project the origin")
    return points / rho[..., None], rho


def order_compare(p: ArrayLike, q: ArrayLike, face: SpeciesSubset) -> Order:
    """
    Compare two points of the face H_I^+ in the coordinate-wise order on I.
    """
    p, q = as_array(p), as_array(q)
    for point in (p, q):
        if np.any(np.abs(point[list(face.absent)]) > 1e-12):
            raise FaceMismatch(f"{point} has a nonzero coordinate outside {face}")
    idx = list(face.indices)
    a, b = p[idx], q[idx]
    if np.array_equal(a, b):
        return Order.Equal
    if np.all(a < b):
        return Order.AllStrict
    if np.all(a <= b):
        return Order.LeqStrictSomewhere
    if np.all(a > b):
        return Order.AllStrictAbove
    if np.all(a >= b):
        return Order.GeqStrictSomewhere
    return Order.Incomparable


def node_index(i: int, j: int, level: int) -> int:
    "position of node (i, j) in the lexicographic node ordering"
    return i * (level + 1) - i * (i - 1) // 2 + j


class DeltaGrid(pydantic.BaseModel):
    """
    The level-L triangular grid of the probability simplex with nodes
    (i/L, j/L, k/L), ordered lexicographically in (i, j).
    """

    level: int
    nodes: NDArray
    ij: IndexArray
    triangles: IndexArray
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def __len__(self) -> int:
        return len(self.nodes)

    def points(self) -> List[SimplexPoint]:
        return [SimplexPoint.of(y) for y in self.nodes]

    @cached_property
    def node_faces(self) -> List[Optional[SpeciesSubset]]:
        "the face each boundary node belongs to, None for interior nodes"
        faces: List[Optional[SpeciesSubset]] = []
        for y in self.nodes:
            support = frozenset(int(i) + 1 for i in np.flatnonzero(y > 0))
            faces.append(None if len(support) == 3 else SpeciesSubset(members=support))
        return faces

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        return np.any(self.nodes <= 0.0, axis=1)

    @cached_property
    def edges(self) -> np.ndarray:
        "unique undirected edges as an (m, 2) array of node indices"
        pairs = np.concatenate(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0)

    @cached_property
    def incident(self) -> np.ndarray:
        "triangles incident to each node, padded with -1"
        lists: List[List[int]] = [[] for _ in range(len(self.nodes))]
        for t, tri in enumerate(self.triangles):
            for v in tri:
                lists[v].append(t)
        width = max(len(item) for item in lists)
        out = np.full((len(lists), width), -1, dtype=np.intp)
        for v, item in enumerate(lists):
            out[v, : len(item)] = item
        return out

    def face_nodes(self, face: SpeciesSubset) -> np.ndarray:
        """
        Node indices on the edge of the simplex belonging to a two species
        face, ordered by increasing coordinate of the face's first species.
        """
        if len(face) != 2:
            raise FaceMismatch(f"{face} is not a two species face")
        first, _ = face.indices
        absent = face.absent[0]
        on_face = np.flatnonzero(np.isclose(self.nodes[:, absent], 0.0))
        return on_face[np.argsort(self.nodes[on_face, first], kind="stable")]

    def locate(self, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Vertices and barycentric weights of the grid triangle containing
        each query point, by direct index arithmetic on the regular grid.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        L = self.level
        u = np.clip(queries[:, 0] * L, 0.0, L)
        v = np.clip(queries[:, 1] * L, 0.0, L)
        i = np.clip(np.floor(u).astype(np.intp), 0, L - 1)
        j = np.clip(np.floor(v).astype(np.intp), 0, L - 1)
        j = np.minimum(j, L - 1 - i)
        a = u - i
        b = v - j
        upper = (a + b > 1.0) & (i + j < L - 1)

        vertices = np.empty((len(queries), 3), dtype=np.intp)
        weights = np.empty((len(queries), 3))
        lower = ~upper
        vertices[lower] = np.stack(
            [
                node_index(i[lower], j[lower], L),
                node_index(i[lower] + 1, j[lower], L),
                node_index(i[lower], j[lower] + 1, L),
            ],
            axis=1,
        )
        weights[lower] = np.stack([1.0 - a[lower] - b[lower], a[lower], b[lower]], axis=1)
        vertices[upper] = np.stack(
            [
                node_index(i[upper] + 1, j[upper] + 1, L),
                node_index(i[upper], j[upper] + 1, L),
                node_index(i[upper] + 1, j[upper], L),
            ],
            axis=1,
        )
        weights[upper] = np.stack(
            [a[upper] + b[upper] - 1.0, 1.0 - a[upper], 1.0 - b[upper]], axis=1
        )
        return vertices, weights


def make_grid(level: int) -> DeltaGrid:
    """
    Build the triangular grid of the probability simplex at the given level.

    The grid has (L+1)(L+2)/2 nodes and L² triangles, each positively
    oriented in the (y1, y2) plane with area 1/(2L²).
    """
    if not isinstance(level, (int, np.integer)) or not 1 <= level <= 1024:
        raise LevelOutOfRange(f"grid level must be in [1, 1024], got {level}")
    level = int(level)
    ij = np.array([(i, j) for i in range(level + 1) for j in range(level + 1 - i)], dtype=np.intp)
    k = level - ij.sum(axis=1)
    nodes = np.column_stack([ij[:, 0], ij[:, 1], k]).astype(float) / level

    triangles = []
    for i in range(level):
        for j in range(level - i):
            triangles.append(
                (node_index(i, j, level), node_index(i + 1, j, level), node_index(i, j + 1, level))
            )
            if i + j < level - 1:
                triangles.append(
                    (
                        node_index(i + 1, j, level),
                        node_index(i + 1, j + 1, level),
                        node_index(i, j + 1, level),
                    )
                )
    return DeltaGrid(level=level, nodes=nodes, ij=ij, triangles=np.array(triangles, dtype=np.intp))


def signed_areas(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    "signed areas of triangles in the (y1, y2) plane"
    a = points[triangles[:, 0], :2]
    b = points[triangles[:, 1], :2]
    c = points[triangles[:, 2], :2]
    e1, e2 = b - a, c - a
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


class Interpolated(NamedTuple):
    radius: float
    extrapolated: bool


class PushforwardInterpolator:
    """
    Barycentric-linear interpolation of radii over a triangulation whose
    vertices are the radial projections of an iterated surface.

    Candidate triangles are the ones incident to the nearest source points;
    queries that none of them contain fall back to a scan over every
    triangle, and queries outside all triangles take the value of the nearest
    source point.
    """

    def __init__(
        self,
        points: np.ndarray,
        radii: np.ndarray,
        triangles: np.ndarray,
        incident: Optional[np.ndarray] = None,
        neighbours: int = 3,
    ) -> None:
        self.points = np.asarray(points, dtype=float)[:, :2]
        self.radii = np.asarray(radii, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.intp)
        self.areas = signed_areas(self.points, self.triangles)
        self.origin = self.points[self.triangles[:, 0]]
        e1 = self.points[self.triangles[:, 1]] - self.origin
        e2 = self.points[self.triangles[:, 2]] - self.origin
        det = 2.0 * self.areas
        with np.errstate(divide="ignore", invalid="ignore"):
            self.inverse = np.stack(
                [
                    np.stack([e2[:, 1], -e2[:, 0]], axis=-1),
                    np.stack([-e1[:, 1], e1[:, 0]], axis=-1),
                ],
                axis=1,
            ) / det[:, None, None]
        self.degenerate = np.abs(self.areas) < DEGENERATE_AREA
        if incident is None:
            incident = _incident(self.triangles, len(self.points))
        self.incident = incident
        self.neighbours = min(neighbours, len(self.points))
        self.tree = cKDTree(self.points)

    def _barycentric(self, queries: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        safe = np.where(candidates >= 0, candidates, 0)
        offset = queries[:, None, :] - self.origin[safe]
        l12 = np.einsum("qcij,qcj->qci", self.inverse[safe], offset)
        l0 = 1.0 - l12.sum(axis=-1)
        return np.concatenate([l0[..., None], l12], axis=-1)

    def _pick(self, queries: np.ndarray, candidates: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        bary = self._barycentric(queries, candidates)
        valid = (candidates >= 0) & np.all(bary >= -BARYCENTRIC_TOL, axis=-1)
        valid &= ~self.degenerate[np.where(candidates >= 0, candidates, 0)]
        key = np.where(valid, candidates, len(self.triangles))
        best = np.argmin(key, axis=1)
        rows = np.arange(len(queries))
        chosen = key[rows, best]
        return chosen, bary[rows, best]

    def __call__(self, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Interpolated radii at each query and a mask of extrapolated queries.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))[:, :2]
        _, nearest = self.tree.query(queries, k=self.neighbours)
        nearest = np.asarray(nearest).reshape(len(queries), -1)
        candidates = self.incident[nearest].reshape(len(queries), -1)
        chosen, bary = self._pick(queries, candidates)

        missing = np.flatnonzero(chosen >= len(self.triangles))
        if len(missing):
            everything = np.broadcast_to(
                np.arange(len(self.triangles)), (len(missing), len(self.triangles))
            )
            found, found_bary = self._pick(queries[missing], everything)
            chosen[missing] = found
            bary[missing] = found_bary

        extrapolated = chosen >= len(self.triangles)
        if np.any(extrapolated):
            self._check_degenerate(queries[extrapolated])
        values = np.empty(len(queries))
        inside = ~extrapolated
        vertices = self.triangles[chosen[inside]]
        values[inside] = np.sum(bary[inside] * self.radii[vertices], axis=1)
        if np.any(extrapolated):
            _, idx = self.tree.query(queries[extrapolated], k=1)
            values[extrapolated] = self.radii[idx]
        return values, extrapolated

    def _check_degenerate(self, queries: np.ndarray) -> None:
        if not np.any(self.degenerate):
            return
        corners = self.points[self.triangles[self.degenerate]]
        lo = corners.min(axis=1) - BARYCENTRIC_TOL
        hi = corners.max(axis=1) + BARYCENTRIC_TOL
        inside = np.all((queries[:, None, :] >= lo) & (queries[:, None, :] <= hi), axis=-1)
        if np.any(inside):
            raise DegenerateTriangle(
                "a query lies on a push-forward triangle with area below "
                f"{DEGENERATE_AREA}; the image surface has folded"
            )


def _incident(triangles: np.ndarray, n_points: int) -> np.ndarray:
    lists: List[List[int]] = [[] for _ in range(n_points)]
    for t, tri in enumerate(triangles):
        for v in tri:
            lists[v].append(t)
    width = max((len(item) for item in lists), default=1)
    out = np.full((n_points, max(width, 1)), -1, dtype=np.intp)
    for v, item in enumerate(lists):
        out[v, : len(item)] = item
    return out


def interpolate_pushforward(
    src_points: Iterable[Tuple[ArrayLike, float]],
    triangles: Sequence[Sequence[int]],
    query: ArrayLike,
) -> Interpolated:
    """
    Interpolate the radius at ``query`` over triangles indexing
    ``(simplex point, radius)`` source pairs.
    """
    pairs = list(src_points)
    points = np.array([as_array(point) for point, _ in pairs])
    radii = np.array([radius for _, radius in pairs], dtype=float)
    interpolator = PushforwardInterpolator(points, radii, np.asarray(triangles, dtype=np.intp))
    values, extrapolated = interpolator(as_array(query)[None, :])
    return Interpolated(float(values[0]), bool(extrapolated[0]))


class RadialGraph(pydantic.BaseModel):
    """
    A surface over the probability simplex stored as a positive 1-norm
    radius per grid node; the node point is ``rho(node) * node``.
    """

    grid: DeltaGrid
    rho: NDArray
    iterations: int = 0
    last_update: float = 0.0
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @pydantic.model_validator(mode="after")
    def positive_radii(self) -> "RadialGraph":
        if self.rho.shape != (len(self.grid.nodes),):
            raise ValueError("one radius per grid node is required")
        if not np.all(self.rho > 0):
            raise ValueError("radial graph radii must be positive")
        return self

    def points(self) -> np.ndarray:
        return self.rho[:, None] * self.grid.nodes

    def radius_at(self, directions: np.ndarray) -> np.ndarray:
        "linear interpolation of the radius at simplex directions"
        vertices, weights = self.grid.locate(directions)
        return np.sum(weights * self.rho[vertices], axis=1)

    def graph_distance(self, points: np.ndarray) -> np.ndarray:
        "1-norm distance from nonzero points to the surface along their rays"
        directions, radii = project_rays(np.atleast_2d(points))
        return np.abs(radii - self.radius_at(directions))

    def with_rho(self, rho: np.ndarray, **meta: Any) -> "RadialGraph":
        return RadialGraph(grid=self.grid, rho=np.asarray(rho, dtype=float), **meta)
