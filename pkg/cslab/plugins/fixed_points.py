"""
Locates the boundary and interior fixed points the later stages examine.

The `fixed-points` command writes `fixed_points.json`.  A face holding ten or
more distinct planar fixed points carries a continuum of them, which is
listed under `continuum_faces`.
"""

import logging
from typing import TYPE_CHECKING, Dict, List

import numpy as np
import pydantic

from cslab.errors import NumericalFailure
from cslab.geometry import PLANAR_FACES
from cslab.hookspec import hook_impl, register_attr
from cslab.spectra import (
    CONTINUUM_COUNT,
    FixedPointRecord,
    find_axial_fixed_points,
    find_interior_fixed_points,
    find_planar_fixed_points,
)

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)


class FixedPoints(pydantic.BaseModel):
    axial: List[FixedPointRecord]
    planar: Dict[str, List[FixedPointRecord]]
    interior: List[FixedPointRecord] = []
    continuum_faces: List[str] = []
    notes: List[str] = []

    def isolated_planar(self) -> List[FixedPointRecord]:
        return [
            fp
            for label, points in self.planar.items()
            if label not in self.continuum_faces
            for fp in points
        ]

    def on_face(self, label: str) -> List[np.ndarray]:
        "every fixed point lying on the closed face named by label"
        members = {int(c) - 1 for c in label}
        points = [fp.x for fp in self.axial if set(fp.face.indices) <= members]
        return points + [fp.x for fp in self.planar.get(label, [])]


@hook_impl
@register_attr("fixed_point_set")
def fixed_points(cslab: "Cslab") -> None:
    if not cslab.wants("fixed_points"):
        return
    model = cslab.model
    planar = {face.label: find_planar_fixed_points(model, face) for face in PLANAR_FACES}
    result = FixedPoints(
        axial=find_axial_fixed_points(model),
        planar=planar,
        continuum_faces=[label for label, points in planar.items() if len(points) >= CONTINUUM_COUNT],
    )
    try:
        result.interior = find_interior_fixed_points(model)
    except NumericalFailure as e:
        result.notes.append(f"interior search failed: {e}")
    if len(result.interior) >= CONTINUUM_COUNT:
        result.notes.append("the interior carries a continuum of fixed points")
    logger.info(
        "%d axial, %d planar and %d interior fixed points",
        len(result.axial),
        sum(len(points) for points in planar.values()),
        len(result.interior),
    )
    cslab.fixed_point_set = result
    if "fixed-points" in cslab.targets:
        cslab.add_report("fixed_points", result)
