"""Approximate the carrying simplex of a competitive map as a radial graph.

The surface starts on the boundary of the absorbing box, which lies above
the global attractor, and is pushed through the map until the node radii
stop moving.  Each pass maps every node point, radially projects the images
back onto the probability simplex and re-grids by barycentric interpolation
over the pushed triangulation.  Boundary nodes are pinned to face curves
computed independently from the map restricted to each coordinate plane.

``` python
from cslab.geometry import make_grid
from cslab.models import leslie_gower
from cslab.simplex import compute_surface

model = leslie_gower([3, 3, 3], [[1, .5, .5], [.5, 1, .5], [.5, .5, 1]])
approx = compute_surface(model, make_grid(32))
approx.to_csv("surface.csv")
```
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from pydantic import ConfigDict

from cslab.errors import FaceMismatch, FoldedImage, HypothesisViolation, NonConvergence
from cslab.geometry import (
    PLANAR_FACES,
    DeltaGrid,
    NDArray,
    PushforwardInterpolator,
    RadialGraph,
    SpeciesSubset,
    make_grid,
    project_rays,
    signed_areas,
)
from cslab.models import MapModel

logger = logging.getLogger(__name__)

LEAVE_TOL = 1e-9
MONOTONE_AFTER = 10


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def box_radius(box: np.ndarray, directions: np.ndarray) -> np.ndarray:
    "1-norm radius at which each ray leaves the box [0, M]"
    directions = np.atleast_2d(directions)
    with np.errstate(divide="ignore"):
        ratios = np.where(directions > 0, box / directions, np.inf)
    return ratios.min(axis=1)


class IterationOptions(pydantic.BaseModel):
    max_iters: int = 500
    tol: float = 1e-8
    model_config = ConfigDict(frozen=True)


class FaceCurve(pydantic.BaseModel):
    """
    The carrying simplex restricted to a two species face, as radii over
    ``t_k = k / L`` where ``t`` is the share of the face's first species.
    """

    face: SpeciesSubset
    t: NDArray
    rho: NDArray
    iterations: int = 0
    residual: float = 0.0
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def directions(self) -> np.ndarray:
        first, second = self.face.indices
        y = np.zeros((len(self.t), 3))
        y[:, first] = self.t
        y[:, second] = 1.0 - self.t
        return y

    def points(self) -> np.ndarray:
        return self.rho[:, None] * self.directions

    def radius_at(self, t: np.ndarray) -> np.ndarray:
        return np.interp(t, self.t, self.rho)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["t", "rho", "x1", "x2", "x3"])
            for t, rho, x in zip(self.t, self.rho, self.points()):
                writer.writerow([_fmt(t), _fmt(rho), *(_fmt(v) for v in x)])
        return path


class SimplexApproximation(pydantic.BaseModel):
    surface: RadialGraph
    face_curves: Dict[str, FaceCurve] = {}
    fingerprint: str = ""
    tol: float = 1e-8
    max_iters: int = 500
    iterations: int = 0
    hausdorff_step: float = 0.0
    changes: List[float] = []
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @classmethod
    def from_graph(cls, surface: RadialGraph, **kwargs) -> "SimplexApproximation":
        "wrap a surface that was not produced by iteration, e.g. an exact one"
        return cls(surface=surface, **kwargs)

    @property
    def grid(self) -> DeltaGrid:
        return self.surface.grid

    @property
    def level(self) -> int:
        return self.surface.grid.level

    def points(self) -> np.ndarray:
        return self.surface.points()

    def mean_radius(self) -> float:
        return float(self.surface.rho.mean())

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["y1", "y2", "y3", "rho", "x1", "x2", "x3"])
            for y, rho, x in zip(self.grid.nodes, self.surface.rho, self.points()):
                writer.writerow([*(_fmt(v) for v in y), _fmt(rho), *(_fmt(v) for v in x)])
        return path

    def to_obj(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        lines = [f"v {_fmt(x[0])} {_fmt(x[1])} {_fmt(x[2])}" for x in self.points()]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in self.grid.triangles]
        path.write_text("\n".join(lines) + "\n")
        return path


def compute_face_curve(
    model: MapModel,
    face: SpeciesSubset,
    level: int,
    opts: Optional[IterationOptions] = None,
) -> FaceCurve:
    """
    Compute the carrying simplex of the map restricted to a coordinate plane.
    """
    opts = opts or IterationOptions()
    if len(face) != 2:
        raise FaceMismatch(f"face curves live on two species faces, got {face}")
    first, second = face.indices
    t = np.linspace(0.0, 1.0, level + 1)
    curve = FaceCurve(face=face, t=t, rho=np.ones_like(t))
    directions = curve.directions
    rho = box_radius(model.absorbing_box(), directions)

    change = np.inf
    iteration = 0
    for iteration in range(1, opts.max_iters + 1):
        images = model.eval(rho[:, None] * directions)
        totals = images[:, first] + images[:, second]
        pushed_t = images[:, first] / totals
        if np.any(np.diff(pushed_t) < 0):
            raise FoldedImage(f"pushed directions on face {face} are not monotone")
        new_rho = np.interp(t, pushed_t, totals)
        change = float(np.max(np.abs(new_rho - rho)))
        rho = new_rho
        logger.debug("face %s iteration %d change %.3e", face.label, iteration, change)
        if change < opts.tol:
            break
    else:
        if change > 100 * opts.tol:
            raise NonConvergence(
                f"face {face} still moving by {change:.3e} after {opts.max_iters} iterations"
            )
    return FaceCurve(face=face, t=t, rho=rho, iterations=iteration, residual=change)


def initial_radius(model: MapModel, grid: DeltaGrid) -> np.ndarray:
    return box_radius(model.absorbing_box(), grid.nodes)


def boundary_radii(grid: DeltaGrid, face_curves: Dict[str, FaceCurve]) -> np.ndarray:
    "radius of each boundary node read from the face curves, nan inside"
    rho = np.full(len(grid.nodes), np.nan)
    for curve in face_curves.values():
        first = curve.face.indices[0]
        on_face = grid.face_nodes(curve.face)
        rho[on_face] = curve.radius_at(grid.nodes[on_face, first])
    return rho


def compute_surface(
    model: MapModel,
    grid: DeltaGrid,
    opts: Optional[IterationOptions] = None,
    face_curves: Optional[Dict[str, FaceCurve]] = None,
    face_level: Optional[int] = None,
) -> SimplexApproximation:
    """
    Iterate the box boundary surface through the map until it settles on
    the carrying simplex.
    """
    opts = opts or IterationOptions()
    if face_curves is None:
        face_curves = {
            face.label: compute_face_curve(model, face, face_level or grid.level, opts)
            for face in PLANAR_FACES
        }
    boundary = grid.boundary_mask
    pinned = boundary_radii(grid, face_curves)[boundary]

    rho = initial_radius(model, grid)
    rho[boundary] = pinned
    changes: List[float] = []
    warned = False
    iteration = 0
    for iteration in range(1, opts.max_iters + 1):
        images = model.eval(rho[:, None] * grid.nodes)
        if np.min(images) < -LEAVE_TOL:
            raise HypothesisViolation(
                f"an iterate left the octant by {-np.min(images):.3e}; faces are not invariant"
            )
        images = np.clip(images, 0.0, None)
        directions, radii = project_rays(images)
        if np.any(signed_areas(directions, grid.triangles) < 0):
            raise FoldedImage("the pushed triangulation changed orientation")
        interpolate = PushforwardInterpolator(directions, radii, grid.triangles, grid.incident)
        new_rho, extrapolated = interpolate(grid.nodes)
        if np.any(extrapolated & ~boundary):
            logger.debug("%d interior nodes extrapolated", int(np.sum(extrapolated & ~boundary)))
        new_rho[boundary] = pinned
        change = float(np.max(np.abs(new_rho - rho)))
        rho = new_rho
        changes.append(change)
        logger.debug("surface iteration %d change %.3e", iteration, change)
        if (
            not warned
            and iteration > MONOTONE_AFTER
            and changes[-1] > changes[-2]
            and change > opts.tol
        ):
            logger.warning(
                "node movement grew at iteration %d (%.3e > %.3e), the image may be folding",
                iteration,
                changes[-1],
                changes[-2],
            )
            warned = True
        if change < opts.tol:
            break
    else:
        if changes and changes[-1] > 100 * opts.tol:
            raise NonConvergence(
                f"surface still moving by {changes[-1]:.3e} after {opts.max_iters} iterations"
            )

    surface = RadialGraph(
        grid=grid, rho=rho, iterations=iteration, last_update=changes[-1] if changes else 0.0
    )
    return SimplexApproximation(
        surface=surface,
        face_curves=face_curves,
        fingerprint=model.fingerprint(),
        tol=opts.tol,
        max_iters=opts.max_iters,
        iterations=iteration,
        hausdorff_step=changes[-1] if changes else 0.0,
        changes=changes,
    )


def invariance_residual(model: MapModel, approx: SimplexApproximation) -> float:
    """
    Largest 1-norm distance, along its own ray, from the image of a surface
    node to the surface.
    """
    images = model.eval(approx.points())
    return float(np.max(approx.surface.graph_distance(images)))


class OrderedPair(pydantic.BaseModel):
    p: List[float]
    q: List[float]
    gap: float


class UnorderednessReport(pydantic.BaseModel):
    margin: float
    pairs_checked: int
    strong_count: int = 0
    strong_pairs: List[OrderedPair] = []
    interior_count: int = 0
    interior_pairs: List[OrderedPair] = []
    passed: bool = True


def _ordered_pairs(
    points: np.ndarray, margin: float, strong: bool, chunk: int = 256, keep: int = 20
) -> Tuple[int, List[OrderedPair]]:
    count = 0
    found: List[OrderedPair] = []
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        diff = points[None, :, :] - block[:, None, :]
        if strong:
            mask = np.all(diff > margin, axis=-1)
        else:
            mask = np.all(diff >= 0.0, axis=-1) & np.any(diff > margin, axis=-1)
        rows, cols = np.nonzero(mask)
        count += len(rows)
        for r, c in zip(rows[: keep - len(found)], cols[: keep - len(found)]):
            found.append(
                OrderedPair(
                    p=block[r].tolist(),
                    q=points[c].tolist(),
                    gap=float(np.min(diff[r, c])) if strong else float(np.max(diff[r, c])),
                )
            )
    return count, found


def unorderedness_check(approx: SimplexApproximation, margin: float = 1e-6) -> UnorderednessReport:
    """
    Search the surface nodes for pairs related by the strong order, and for
    pairs of interior nodes related by the weak order.
    """
    points = approx.points()
    strong_count, strong_pairs = _ordered_pairs(points, margin, strong=True)
    interior = points[~approx.grid.boundary_mask]
    interior_count, interior_pairs = _ordered_pairs(interior, margin, strong=False)
    return UnorderednessReport(
        margin=margin,
        pairs_checked=len(points) * (len(points) - 1),
        strong_count=strong_count,
        strong_pairs=strong_pairs,
        interior_count=interior_count,
        interior_pairs=interior_pairs,
        passed=strong_count == 0 and interior_count == 0,
    )


class AttractionReport(pydantic.BaseModel):
    n_seeds: int
    burn_in: int
    max_distance: float
    mean_distance: float
    threshold: float
    passed: bool


def attraction_check(
    model: MapModel,
    approx: SimplexApproximation,
    n_seeds: int = 100,
    burn_in: int = 200,
    seed: int = 0,
    seeds: Optional[Sequence[Sequence[float]]] = None,
) -> AttractionReport:
    """
    Iterate random nonzero points of the absorbing box and measure how far
    they end up from the surface.
    """
    if seeds is None:
        rng = np.random.default_rng(seed)
        X = (1.0 - rng.random((n_seeds, 3))) * model.absorbing_box()
    else:
        X = np.asarray(seeds, dtype=float)
    for _ in range(burn_in):
        X = model.eval(X)
    distances = approx.surface.graph_distance(X)
    threshold = max(2.0 / approx.level, 1e-3) * approx.mean_radius()
    return AttractionReport(
        n_seeds=len(X),
        burn_in=burn_in,
        max_distance=float(distances.max()),
        mean_distance=float(distances.mean()),
        threshold=threshold,
        passed=bool(distances.max() < threshold),
    )


def flat_surface(level: int, radius: float = 1.0) -> SimplexApproximation:
    "the plane x1 + x2 + x3 = radius as a radial graph"
    grid = make_grid(level)
    return SimplexApproximation.from_graph(
        RadialGraph(grid=grid, rho=np.full(len(grid.nodes), float(radius)))
    )


__all__ = [
    "FaceCurve",
    "IterationOptions",
    "SimplexApproximation",
    "attraction_check",
    "compute_face_curve",
    "compute_surface",
    "invariance_residual",
    "unorderedness_check",
]
