"""
Estimates the tangent cone of the surface at every isolated planar fixed
point and checks the three cone lemmas on it.

``` json
{"cone": {"scale": 0.1, "eps_cone": 1e-2, "c_low": 1e-3,
          "alpha_min": 0.05, "tangent_alpha": 1e-3, "min_samples": 20}}
```

The `cone` command writes `cone.json` and `cone_samples.csv`, and records on
the classification whether the cone leaving the face agrees with the
eigenvalue criterion.  A model without an isolated planar fixed point is a
numerical failure (exit code 2).
"""

import csv
import logging
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional

import pydantic
from pydantic import ConfigDict, Field, PositiveFloat, PositiveInt

from cslab.analysis import (
    ConeEstimate,
    LemmaReport,
    ScaleStats,
    Tangency,
    TangencyReport,
    estimate_tangent_cone,
    lemma_diagnostics,
    non_tangency_check,
)
from cslab.errors import InsufficientSamples
from cslab.hookspec import hook_impl, register_attr
from cslab.spectra import SpectrumRecord, boundary_spectrum

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)


class ConeConfig(pydantic.BaseModel):
    scale: float = Field(0.1, gt=0, le=1)
    eps_cone: PositiveFloat = 1e-2
    c_low: PositiveFloat = 1e-3
    alpha_min: PositiveFloat = 0.05
    tangent_alpha: PositiveFloat = 1e-3
    min_samples: PositiveInt = 20
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    cone: ConeConfig = ConeConfig()


class ConeResult(pydantic.BaseModel):
    face: str
    location: List[float]
    principal: float
    criterion_margin: float
    scales: List[float]
    stats: List[ScaleStats]
    lemmas: LemmaReport
    consistent_at_finest: bool
    tangency: TangencyReport


class ConeSummary(pydantic.BaseModel):
    results: List[ConeResult]
    tangency_agrees: Optional[bool] = None


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


def _spectrum(cslab: "Cslab", fp) -> SpectrumRecord:
    for record in cslab.classification.spectra:
        if record.fp.face == fp.face and record.fp.location == fp.location:
            return record
    return boundary_spectrum(cslab.model, fp)


def tangency_agrees(results: List[ConeResult], margin_tol: float) -> Optional[bool]:
    """
    Whether the cone leaves the face exactly where the principal eigenvalue
    is below the external one, over the points with a decided tangency.
    """
    decided = [r for r in results if r.tangency.verdict != Tangency.Inconclusive]
    if not decided:
        return None
    return all(
        (r.tangency.verdict == Tangency.NotTangent) == (r.criterion_margin > margin_tol)
        for r in decided
    )


def write_samples(cones: List[ConeEstimate], path: Path) -> Path:
    "every cone's samples in one table, in fixed point order"
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["scale", "z1", "z2", "z3", "alpha", "beta", "gamma"])
        for cone in cones:
            for s in cone.samples:
                writer.writerow(
                    [format(v, ".17g") for v in (s.scale, *s.z, s.alpha, s.beta, s.gamma)]
                )
    return path


@hook_impl
@register_attr("cones")
def cone(cslab: "Cslab") -> None:
    if not cslab.wants("cone"):
        return
    section = cslab.config.cone
    points = cslab.fixed_point_set.isolated_planar()
    if not points:
        raise InsufficientSamples(
            "no isolated planar fixed point to estimate a tangent cone at"
            + (
                f", faces {', '.join(cslab.fixed_point_set.continuum_faces)} carry continua"
                if cslab.fixed_point_set.continuum_faces
                else ""
            )
        )
    cones: List[ConeEstimate] = []
    results: List[ConeResult] = []
    for fp in points:
        spectrum = _spectrum(cslab, fp)
        estimate = estimate_tangent_cone(
            cslab.approximation,
            spectrum,
            section.scale,
            section.min_samples,
            section.alpha_min,
        )
        lemmas = lemma_diagnostics(estimate, section.eps_cone, section.c_low, section.alpha_min)
        tangency = non_tangency_check(estimate, section.alpha_min, section.tangent_alpha)
        logger.info(
            "cone at %s: %d samples, tangency %s",
            fp.location.array.tolist(),
            len(estimate.samples),
            tangency.verdict.value,
        )
        cones.append(estimate)
        results.append(
            ConeResult(
                face=fp.face.label,
                location=fp.location.array.tolist(),
                principal=spectrum.principal,
                criterion_margin=spectrum.margin,
                scales=estimate.scales,
                stats=estimate.stats,
                lemmas=lemmas,
                consistent_at_finest=lemmas.consistent_at_finest(2),
                tangency=tangency,
            )
        )
    agrees = tangency_agrees(results, cslab.config.classify.margin_tol)
    cslab.classification.tangency_agrees = agrees
    cslab.cones = cones
    cslab.add_report("cone", ConeSummary(results=results, tangency_agrees=agrees))
    cslab.add_artifact("cone_samples.csv", lambda path: write_samples(cones, path))
