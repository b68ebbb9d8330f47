"""
Computes the carrying simplex surface and checks it against the properties
every carrying simplex has.

``` json
{"grid": {"level": 32},
 "iteration": {"max_iters": 500, "tol": 1e-8, "unorderedness_margin": 1e-6},
 "attraction": {"n_seeds": 100, "burn_in": 200}}
```

The `simplex` command writes

* `surface.csv` with one row per grid node, `y1,y2,y3,rho,x1,x2,x3`
* `surface.obj` a triangle mesh of the surface
* `face_12.csv`, `face_13.csv`, `face_23.csv` the face curves, `t,rho,x1,x2,x3`
* `simplex.json`, `invariance.json`, `unorderedness.json` and `attraction.json`

Surfaces are cached in `.cslab.cache` under a hash of the model and the
iteration settings, set `"cache": false` to always recompute.
"""

import logging
from typing import TYPE_CHECKING, Dict, Optional

import pydantic
from pydantic import ConfigDict, Field, PositiveFloat, PositiveInt

from cslab.errors import ConfigError
from cslab.geometry import make_grid
from cslab.hookspec import hook_impl, register_attr
from cslab.models import ModelKind
from cslab.simplex import (
    IterationOptions,
    SimplexApproximation,
    attraction_check,
    compute_surface,
    invariance_residual,
    unorderedness_check,
)

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)

MIN_SURFACE_LEVEL = 4


class GridConfig(pydantic.BaseModel):
    level: int = Field(32, ge=1, le=1024)
    model_config = ConfigDict(extra="forbid")


class IterationConfig(pydantic.BaseModel):
    max_iters: PositiveInt = 500
    tol: PositiveFloat = 1e-8
    face_level: Optional[int] = Field(None, ge=1, le=1024)
    unorderedness_margin: PositiveFloat = 1e-6
    model_config = ConfigDict(extra="forbid")


class AttractionConfig(pydantic.BaseModel):
    n_seeds: PositiveInt = 100
    burn_in: PositiveInt = 200
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    grid: GridConfig = GridConfig()
    iteration: IterationConfig = IterationConfig()
    attraction: AttractionConfig = AttractionConfig()


class SimplexSummary(pydantic.BaseModel):
    level: int
    nodes: int
    iterations: int
    hausdorff_step: float
    tol: float
    mean_radius: float
    face_iterations: Dict[str, int]
    face_residuals: Dict[str, float]


class InvarianceReport(pydantic.BaseModel):
    residual: float
    grid_spacing: float
    bound: float
    passed: bool


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


@hook_impl
def validate_config(cslab: "Cslab") -> None:
    if cslab.wants("surface") and cslab.config.grid.level < MIN_SURFACE_LEVEL:
        raise ConfigError(
            f"grid.level must be at least {MIN_SURFACE_LEVEL} for surface commands, "
            f"got {cslab.config.grid.level}"
        )


def surface_key(cslab: "Cslab", opts: IterationOptions) -> str:
    return cslab.make_hash(
        "surface",
        cslab.model.fingerprint(),
        cslab.config.grid.level,
        cslab.config.iteration.face_level,
        opts.max_iters,
        opts.tol,
    )


def cacheable(cslab: "Cslab") -> bool:
    "callable external maps have no stable fingerprint"
    model = cslab.model
    if model.kind == ModelKind.External and model.params.func is not None:
        return False
    return cslab.config.cache


@hook_impl
@register_attr("approximation")
def surface(cslab: "Cslab") -> None:
    if not cslab.wants("surface"):
        return
    opts = IterationOptions(
        max_iters=cslab.config.iteration.max_iters, tol=cslab.config.iteration.tol
    )
    approx: SimplexApproximation = cslab.cached(
        surface_key(cslab, opts),
        lambda: compute_surface(
            cslab.model,
            make_grid(cslab.config.grid.level),
            opts,
            face_level=cslab.config.iteration.face_level,
        ),
        enabled=cacheable(cslab),
    )
    logger.info(
        "surface at level %d settled after %d iterations (last step %.3e)",
        approx.level,
        approx.iterations,
        approx.hausdorff_step,
    )
    cslab.approximation = approx
    if "simplex" in cslab.targets:
        check(cslab, approx)


def check(cslab: "Cslab", approx: SimplexApproximation) -> None:
    "the simplex command's reports and exports"
    residual = invariance_residual(cslab.model, approx)
    spacing = 2.0 * approx.mean_radius() / approx.level
    cslab.add_report(
        "simplex",
        SimplexSummary(
            level=approx.level,
            nodes=len(approx.grid.nodes),
            iterations=approx.iterations,
            hausdorff_step=approx.hausdorff_step,
            tol=approx.tol,
            mean_radius=approx.mean_radius(),
            face_iterations={k: c.iterations for k, c in approx.face_curves.items()},
            face_residuals={k: c.residual for k, c in approx.face_curves.items()},
        ),
    )
    cslab.add_report(
        "invariance",
        InvarianceReport(
            residual=residual,
            grid_spacing=spacing,
            bound=2 * spacing,
            passed=residual <= 2 * spacing,
        ),
    )
    cslab.add_report(
        "unorderedness",
        unorderedness_check(approx, cslab.config.iteration.unorderedness_margin),
    )
    cslab.add_report(
        "attraction",
        attraction_check(
            cslab.model,
            approx,
            cslab.config.attraction.n_seeds,
            cslab.config.attraction.burn_in,
            cslab.config.seed,
        ),
    )
    cslab.add_artifact("surface.csv", approx.to_csv)
    cslab.add_artifact("surface.obj", approx.to_obj)
    for label, curve in sorted(approx.face_curves.items()):
        cslab.add_artifact(f"face_{label}.csv", curve.to_csv)
