"""
Runs a parameter sweep over Leslie-Gower models.

``` json
{"sweep": {"samples": 200,
           "lambda_range": [1.5, 4.0],
           "a_diag_range": [1.0, 1.0],
           "a_offdiag_range": [0.2, 2.5],
           "seed": 0}}
```

Samples run on `workers` processes (`CSLAB_WORKERS` in the environment).
The rows land in `sweep.csv` in sample order and the implication tally in
`sweep_summary.json`.
"""

import logging
from typing import TYPE_CHECKING, Optional

import pydantic

from cslab.errors import ConfigError
from cslab.hookspec import hook_impl, register_attr
from cslab.sweep import SweepOptions, SweepSpec, run_sweep, summarize, write_rows

if TYPE_CHECKING:
    from cslab import Cslab

logger = logging.getLogger(__name__)


class Config(pydantic.BaseModel):
    sweep: Optional[SweepSpec] = None


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


@hook_impl
def validate_config(cslab: "Cslab") -> None:
    if cslab.wants("sweep") and cslab.config.sweep is None:
        raise ConfigError("the sweep command needs a sweep section in the config")


def sweep_options(cslab: "Cslab") -> SweepOptions:
    "per sample settings read from the run config's sections"
    config = cslab.config
    return SweepOptions(
        level=config.grid.level,
        max_iters=config.iteration.max_iters,
        tol=config.iteration.tol,
        sample_budget=config.hypotheses.sample_budget,
        pair_budget=config.hypotheses.pair_budget,
        near_tol=config.hypotheses.near_tol,
        margin_tol=config.classify.margin_tol,
        tol_c=config.convexity.tol_c,
        convexity_pairs=config.convexity.pair_budget,
        long_range=config.convexity.long_range,
        cone_scale=config.cone.scale,
        cone_min_samples=config.cone.min_samples,
        alpha_min=config.cone.alpha_min,
        eps_cone=config.cone.eps_cone,
        c_low=config.cone.c_low,
    )


@hook_impl
@register_attr("sweep_rows")
def sweep(cslab: "Cslab") -> None:
    if not cslab.wants("sweep"):
        return
    spec = cslab.config.sweep
    rows = run_sweep(
        spec,
        sweep_options(cslab),
        workers=cslab.config.workers,
        progress=not cslab.console.quiet,
    )
    summary = summarize(rows)
    if summary.counterexamples:
        logger.warning(
            "%d counterexamples to the implication: samples %s",
            summary.counterexamples,
            summary.counterexample_indices,
        )
    cslab.sweep_rows = rows
    cslab.add_report("sweep_summary", summary)
    cslab.add_artifact("sweep.csv", lambda path: write_rows(rows, path))
