"""
Measures exponential separation along an orbit on a face curve.

``` json
{"separation": {"n_max": 60, "face": "12", "vectors": "pullback", "anchor": false}}
```

With `anchor` the orbit starts next to the isolated planar fixed point of
the face and uses its eigenvectors, so the fitted rate can be compared with
the log of the ratio of its two internal eigenvalues, reported as
`expected_nu`.
"""

import logging
from typing import TYPE_CHECKING, Literal, Optional

import numpy as np
import pydantic
from pydantic import ConfigDict, Field, PositiveInt

from cslab.analysis import SeparationFit, exp_separation_diagnostic
from cslab.errors import ConfigError, InsufficientSamples
from cslab.geometry import PLANAR_FACES
from cslab.hookspec import hook_impl, register_attr
from cslab.spectra import boundary_spectrum

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)

ANCHOR_OFFSET = 1e-7


class SeparationConfig(pydantic.BaseModel):
    n_max: int = Field(60, ge=10)
    face: Optional[Literal["12", "13", "23"]] = None
    vectors: Literal["pullback", "proxy"] = "pullback"
    anchor: bool = False
    lead: PositiveInt = 40
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    separation: SeparationConfig = SeparationConfig()


class SeparationReport(pydantic.BaseModel):
    fit: SeparationFit
    anchored: bool
    expected_nu: Optional[float] = None
    relative_error: Optional[float] = None


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


@hook_impl
@register_attr("separation_report")
def separation(cslab: "Cslab") -> None:
    if not cslab.wants("separation"):
        return
    section = cslab.config.separation
    curves = cslab.approximation.face_curves
    label = section.face or next(face.label for face in PLANAR_FACES if face.label in curves)
    if label not in curves:
        raise ConfigError(f"separation.face {label} has no face curve")
    curve = curves[label]
    kwargs = {}
    expected = None
    if section.anchor:
        points = [
            fp for fp in cslab.fixed_point_set.planar.get(label, [])
            if label not in cslab.fixed_point_set.continuum_faces
        ]
        if not points:
            raise InsufficientSamples(f"face {label} has no isolated fixed point to anchor at")
        spectrum = boundary_spectrum(cslab.model, points[0])
        i, j = curve.face.indices
        x = points[0].x
        idx = [i, j]
        kwargs = {
            "start_t": float(x[i] / (x[i] + x[j])) + ANCHOR_OFFSET,
            "v_r": spectrum.perron_vector[idx],
            "v_w": spectrum.tangent_vector[idx],
        }
        expected = float(np.log(spectrum.internal_other / spectrum.principal))
    fit = exp_separation_diagnostic(
        cslab.model,
        curve,
        section.n_max,
        section.vectors,
        fixed_points=cslab.fixed_point_set.on_face(label),
        lead=section.lead,
        **kwargs,
    )
    logger.info("face %s separation rate %.6g (fit quality %.4f)", label, fit.nu_hat, fit.fit_quality)
    report = SeparationReport(
        fit=fit,
        anchored=section.anchor,
        expected_nu=expected,
        relative_error=abs(fit.nu_hat - expected) / expected if expected else None,
    )
    cslab.separation_report = report
    cslab.add_report("separation", report)
