"""
Applies the eigenvalue criterion at every boundary fixed point.

``` json
{"classify": {"margin_tol": 1e-6}}
```

The verdict is `NeatlyEmbeddedPredicted` when every principal eigenvalue is
clearly below the external ones, `CriterionFails` when one is clearly
above, `Marginal` in between and `Degenerate` when a principal eigenvalue
reaches 1 or a face carries a continuum of fixed points.
"""

from typing import TYPE_CHECKING

import pydantic
from pydantic import ConfigDict, PositiveFloat

from cslab.hookspec import hook_impl, register_attr
from cslab.spectra import classify as classify_spectra

if TYPE_CHECKING:
    from cslab import Cslab


class ClassifyConfig(pydantic.BaseModel):
    margin_tol: PositiveFloat = 1e-6
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    classify: ClassifyConfig = ClassifyConfig()


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


@hook_impl
@register_attr("classification")
def classify(cslab: "Cslab") -> None:
    if not cslab.wants("classify"):
        return
    report = classify_spectra(
        cslab.model,
        cslab.config.classify.margin_tol,
        axial=cslab.fixed_point_set.axial,
        planar=cslab.fixed_point_set.planar,
    )
    cslab.classification = report
    cslab.console.log(f"classification [purple]{report.verdict.value}[/]")
    if "classify" in cslab.targets or "cone" in cslab.targets:
        cslab.add_report("classify", report)
