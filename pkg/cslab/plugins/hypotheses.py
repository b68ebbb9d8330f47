"""
Sampled checks of the standing hypotheses, (H2), (H3'), (H4') and (H6).

``` json
{"hypotheses": {"sample_budget": 500, "pair_budget": 500, "near_tol": 1e-9}}
```

The `hypotheses` command writes `hypotheses.json` and exits with code 3 when
any check fails.
"""

from typing import TYPE_CHECKING, List

import pydantic
from pydantic import ConfigDict, PositiveFloat, PositiveInt

from cslab.errors import HypothesisViolation
from cslab.hookspec import hook_impl, register_attr
from cslab.models import HypothesisReport, Verdict, check_hypotheses

if TYPE_CHECKING:
    from cslab import Cslab


class HypothesesConfig(pydantic.BaseModel):
    sample_budget: PositiveInt = 500
    pair_budget: PositiveInt = 500
    near_tol: PositiveFloat = 1e-9
    model_config = ConfigDict(extra="forbid")


class Config(pydantic.BaseModel):
    hypotheses: HypothesesConfig = HypothesesConfig()


class HypothesesSummary(pydantic.BaseModel):
    reports: List[HypothesisReport]
    verdict: Verdict


@hook_impl()
@register_attr("config_models")
def config_model(cslab: "Cslab") -> None:
    cslab.config_models.append(Config)


@hook_impl
@register_attr("hypothesis_reports")
def hypotheses(cslab: "Cslab") -> None:
    if not cslab.wants("hypotheses"):
        return
    section = cslab.config.hypotheses
    reports = check_hypotheses(
        cslab.model,
        section.sample_budget,
        section.pair_budget,
        cslab.config.seed,
        section.near_tol,
    )
    cslab.hypothesis_reports = reports
    verdicts = {report.verdict for report in reports}
    verdict = next(
        (v for v in (Verdict.Fail, Verdict.Inconclusive) if v in verdicts), Verdict.Pass
    )
    cslab.add_report("hypotheses", HypothesesSummary(reports=reports, verdict=verdict))
    failed = [report.hypothesis for report in reports if report.verdict == Verdict.Fail]
    if failed:
        cslab.deferred.append(HypothesisViolation(f"hypotheses {', '.join(failed)} failed"))
