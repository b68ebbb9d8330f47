"""
Tests whether the global attractor, the body under the surface, is convex.

``` json
{"convexity": {"tol_c": 1e-6, "pair_budget": 2000, "long_range": 0.25}}
```

Both the midpoint test and the hull test run, `convexity.json` holds the two
reports and whether their verdicts agree.
"""

import logging
from typing import TYPE_CHECKING, Optional

import pydantic
from pydantic import ConfigDict, Field, PositiveFloat, PositiveInt

from cslab.analysis import ConvexityReport, convexity_hull_test, convexity_midpoint_test
from cslab.hookspec import hook_impl, register_attr

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)


class ConvexityConfig(pydantic.BaseModel):
    tol_c: PositiveFloat = 1e-6
    pair_budget: PositiveInt = 2000
    boundary_band: Optional[float] = Field(None, gt=0, le=1)
    long_range: float = Field(0.25, ge=0, le=2)
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    convexity: ConvexityConfig = ConvexityConfig()


class ConvexityResult(pydantic.BaseModel):
    midpoint: ConvexityReport
    hull: ConvexityReport
    agree: bool
    convex_with_margin: bool


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


@hook_impl
@register_attr("convexity_result")
def convexity(cslab: "Cslab") -> None:
    if not cslab.wants("convexity"):
        return
    section = cslab.config.convexity
    midpoint = convexity_midpoint_test(
        cslab.approximation,
        section.pair_budget,
        section.tol_c,
        cslab.config.seed,
        section.long_range,
        section.boundary_band,
    )
    hull = convexity_hull_test(cslab.approximation, section.tol_c)
    result = ConvexityResult(
        midpoint=midpoint,
        hull=hull,
        agree=midpoint.verdict == hull.verdict,
        convex_with_margin=midpoint.convex_with_margin,
    )
    if not result.agree:
        logger.warning(
            "midpoint test says %s, hull test says %s",
            midpoint.verdict.value,
            hull.verdict.value,
        )
    cslab.convexity_result = result
    cslab.add_report("convexity", result)
