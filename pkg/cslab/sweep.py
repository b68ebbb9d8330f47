"""Parameter sweeps testing "convex carrying simplex implies neatly embedded".

Each sampled Leslie-Gower parameter set runs the hypothesis checks, the
surface computation, both convexity tests and the classification.  A row is
a counterexample when the attractor is convex with margin while the
classification is anything other than NeatlyEmbeddedPredicted with a clear
eigenvalue margin.  Rows with a Marginal convexity or classification verdict
are tallied separately and never count either way.

``` json
{"sweep": {"samples": 200,
           "lambda_range": [1.5, 4.0],
           "a_offdiag_range": [0.2, 2.5],
           "seed": 0}}
```
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from pydantic import ConfigDict, Field

from cslab import background
from cslab.analysis import (
    ConvexityVerdict,
    convexity_hull_test,
    convexity_midpoint_test,
    estimate_tangent_cone,
    lemma_diagnostics,
)
from cslab.errors import CslabError
from cslab.geometry import PLANAR_FACES, make_grid
from cslab.models import LeslieGowerParams, MapModel, Verdict, check_hypotheses
from cslab.simplex import IterationOptions, compute_surface
from cslab.spectra import Verdict as ClassifyVerdict
from cslab.spectra import (
    boundary_spectrum,
    classify,
    find_axial_fixed_points,
    find_planar_fixed_points,
)

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


class SweepSpec(pydantic.BaseModel):
    samples: int = Field(1, ge=1)
    lambda_range: Interval = (1.5, 4.0)
    a_diag_range: Interval = (1.0, 1.0)
    a_offdiag_range: Interval = (0.2, 2.5)
    seed: int = 0
    include: List[LeslieGowerParams] = []
    model_config = ConfigDict(extra="forbid")

    @pydantic.field_validator("lambda_range", "a_diag_range", "a_offdiag_range")
    @classmethod
    def ordered(cls, value: Interval) -> Interval:
        if value[0] > value[1]:
            raise ValueError(f"interval {value} is reversed")
        return value

    @pydantic.field_validator("lambda_range")
    @classmethod
    def growth_above_one(cls, value: Interval) -> Interval:
        if value[0] <= 1:
            raise ValueError("lambda_range must lie above 1")
        return value

    @pydantic.field_validator("a_diag_range", "a_offdiag_range")
    @classmethod
    def positive(cls, value: Interval) -> Interval:
        if value[0] <= 0:
            raise ValueError("competition ranges must be positive")
        return value


class SweepOptions(pydantic.BaseModel):
    "the run settings every sample shares"

    level: int = 32
    max_iters: int = 500
    tol: float = 1e-8
    sample_budget: int = 500
    pair_budget: int = 500
    near_tol: float = 1e-9
    margin_tol: float = 1e-6
    tol_c: float = 1e-6
    convexity_pairs: int = 2000
    long_range: float = 0.25
    cone_scale: float = 0.1
    cone_min_samples: int = 20
    alpha_min: float = 0.05
    eps_cone: float = 1e-2
    c_low: float = 1e-3


def sample_params(spec: SweepSpec) -> List[LeslieGowerParams]:
    "parameter sets drawn deterministically from the sweep seed, then the included ones"
    rng = np.random.default_rng(spec.seed)
    params = []
    for _ in range(spec.samples):
        lam = rng.uniform(*spec.lambda_range, size=3)
        a = rng.uniform(*spec.a_offdiag_range, size=(3, 3))
        np.fill_diagonal(a, rng.uniform(*spec.a_diag_range, size=3))
        params.append(LeslieGowerParams(**{"lambda": lam.tolist(), "a": a.tolist()}))
    return params + list(spec.include)


class SweepRow(pydantic.BaseModel):
    index: int
    params: LeslieGowerParams
    hypotheses: str = ""
    convex_verdict: str = ""
    convex_margin: Optional[float] = None
    hull_verdict: str = ""
    convex_with_margin: bool = False
    classify_verdict: str = ""
    min_eig_margin: Optional[float] = None
    lemmas_consistent: Optional[bool] = None
    implication: str = "n/a"
    flags: List[str] = []

    def csv_row(self) -> Dict[str, str]:
        lam = self.params.lambda_
        a = np.asarray(self.params.a)
        row = {f"lambda{i + 1}": _fmt(v) for i, v in enumerate(lam)}
        row.update({f"a{i + 1}{j + 1}": _fmt(a[i, j]) for i in range(3) for j in range(3)})
        row.update(
            {
                "hypotheses": self.hypotheses,
                "convex_verdict": self.convex_verdict,
                "convex_margin": _fmt(self.convex_margin),
                "hull_verdict": self.hull_verdict,
                "convex_with_margin": str(self.convex_with_margin).lower(),
                "classify_verdict": self.classify_verdict,
                "min_eig_margin": _fmt(self.min_eig_margin),
                "lemmas_consistent": (
                    "" if self.lemmas_consistent is None else str(self.lemmas_consistent).lower()
                ),
                "implication": self.implication,
                "flags": ";".join(self.flags),
            }
        )
        return {"index": str(self.index), **row}


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else format(float(value), ".17g")


def implication(row: SweepRow, margin_tol: float) -> str:
    """
    holds, counterexample, excluded (a Marginal verdict) or n/a (not convex
    with margin).
    """
    if row.convex_verdict == ConvexityVerdict.Marginal.value:
        return "excluded"
    if not row.convex_with_margin:
        return "n/a"
    if row.classify_verdict == ClassifyVerdict.Marginal.value:
        return "excluded"
    if (
        row.classify_verdict == ClassifyVerdict.NeatlyEmbeddedPredicted.value
        and row.min_eig_margin is not None
        and row.min_eig_margin > margin_tol
    ):
        return "holds"
    return "counterexample"


def run_sample(job: Tuple[int, LeslieGowerParams, SweepOptions, int]) -> SweepRow:
    """
    Every analysis for one parameter set.  Failures become flags on the row.
    """
    index, params, options, seed = job
    row = SweepRow(index=index, params=params)
    model = MapModel(params=params)
    try:
        reports = check_hypotheses(
            model, options.sample_budget, options.pair_budget, seed, options.near_tol
        )
    except CslabError as e:
        row.flags.append(f"hypotheses:{type(e).__name__}")
        return row
    verdicts = {report.verdict for report in reports}
    row.hypotheses = (
        Verdict.Fail.value
        if Verdict.Fail in verdicts
        else Verdict.Inconclusive.value
        if Verdict.Inconclusive in verdicts
        else Verdict.Pass.value
    )
    if row.hypotheses == Verdict.Fail.value:
        row.flags.append("skipped:hypotheses")
        return row

    approx = None
    try:
        approx = compute_surface(
            model,
            make_grid(options.level),
            IterationOptions(max_iters=options.max_iters, tol=options.tol),
        )
        midpoint = convexity_midpoint_test(
            approx, options.convexity_pairs, options.tol_c, seed, options.long_range
        )
        hull = convexity_hull_test(approx, options.tol_c)
        row.convex_verdict = midpoint.verdict.value
        row.convex_margin = midpoint.margin
        row.hull_verdict = hull.verdict.value
        row.convex_with_margin = midpoint.convex_with_margin
    except CslabError as e:
        row.flags.append(f"surface:{type(e).__name__}")

    try:
        axial = find_axial_fixed_points(model)
        planar = {face.label: find_planar_fixed_points(model, face) for face in PLANAR_FACES}
        report = classify(model, options.margin_tol, axial=axial, planar=planar)
        row.classify_verdict = report.verdict.value
        row.min_eig_margin = report.min_margin
    except CslabError as e:
        row.flags.append(f"classify:{type(e).__name__}")
        planar = {}

    if approx is not None and row.convex_with_margin:
        row.lemmas_consistent = _lemmas(model, approx, planar, options, row)

    row.implication = implication(row, options.margin_tol)
    if row.implication == "counterexample":
        logger.warning("sample %d is a counterexample: %s", index, params.model_dump(by_alias=True))
    return row


def _lemmas(model, approx, planar, options: SweepOptions, row: SweepRow) -> Optional[bool]:
    results = []
    for points in planar.values():
        if len(points) >= 10:
            continue
        for fp in points:
            try:
                cone = estimate_tangent_cone(
                    approx,
                    boundary_spectrum(model, fp),
                    options.cone_scale,
                    options.cone_min_samples,
                    options.alpha_min,
                )
            except CslabError as e:
                row.flags.append(f"cone:{type(e).__name__}")
                continue
            lemmas = lemma_diagnostics(cone, options.eps_cone, options.c_low, options.alpha_min)
            results.append(lemmas.consistent_at_finest(2))
    return all(results) if results else None


class SweepSummary(pydantic.BaseModel):
    samples: int
    completed: int
    skipped: int
    failed: int
    convex_with_margin: int
    implication_holds: int
    counterexamples: int
    excluded_marginal: int
    counterexample_indices: List[int] = []
    convex_verdicts: Dict[str, int] = {}
    classify_verdicts: Dict[str, int] = {}
    lemma_inconsistent: List[int] = []


def summarize(rows: Sequence[SweepRow]) -> SweepSummary:
    implications = Counter(row.implication for row in rows)
    return SweepSummary(
        samples=len(rows),
        completed=sum(1 for row in rows if row.convex_verdict and row.classify_verdict),
        skipped=sum(1 for row in rows if "skipped:hypotheses" in row.flags),
        failed=sum(
            1 for row in rows if any(not f.startswith("skipped") for f in row.flags)
        ),
        convex_with_margin=sum(1 for row in rows if row.convex_with_margin),
        implication_holds=implications["holds"],
        counterexamples=implications["counterexample"],
        excluded_marginal=implications["excluded"],
        counterexample_indices=[row.index for row in rows if row.implication == "counterexample"],
        convex_verdicts=dict(sorted(Counter(r.convex_verdict or "none" for r in rows).items())),
        classify_verdicts=dict(sorted(Counter(r.classify_verdict or "none" for r in rows).items())),
        lemma_inconsistent=[row.index for row in rows if row.lemmas_consistent is False],
    )


def run_sweep(
    spec: SweepSpec,
    options: Optional[SweepOptions] = None,
    workers: int = 1,
    progress: bool = False,
) -> List[SweepRow]:
    """
    Run every sample, concurrently when ``workers > 1``, returning rows in
    sample order.
    """
    options = options or SweepOptions()
    jobs = [
        (index, params, options, spec.seed + index)
        for index, params in enumerate(sample_params(spec))
    ]
    results = background.run(run_sample, jobs, workers)
    if progress:
        from rich.progress import track

        results = track(results, total=len(jobs), description="sweeping")
    return list(results)


def write_rows(rows: Sequence[SweepRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    rows = sorted(rows, key=lambda row: row.index)
    with path.open("w", newline="") as f:
        writer = None
        for row in rows:
            data = row.csv_row()
            if writer is None:
                writer = csv.DictWriter(f, fieldnames=list(data), lineterminator="\n")
                writer.writeheader()
            writer.writerow(data)
    return path
