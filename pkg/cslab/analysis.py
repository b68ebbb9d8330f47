"""Convexity of the global attractor and the local geometry of the carrying
simplex at planar fixed points.

The global attractor is the radial body under the surface, so it is convex
exactly when every chord midpoint sits radially at or below the surface.
Two independent tests are offered: radial midpoints over node pairs and the
inward depth of surface points under their convex hull.

At a planar fixed point on face I with absent species k, a direction ``z``
into the surface is decomposed as ``z = alpha e_k - beta r + gamma w``, with
``r`` the positive principal eigenvector and ``w`` the other internal
eigenvector of the Jacobian block.
"""

from __future__ import annotations

import logging
from enum import Enum
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import pydantic
from pydantic import ConfigDict
from scipy.spatial import ConvexHull, QhullError

from cslab.errors import (
    BasisSingular,
    HullDegenerate,
    InsufficientSamples,
    OrbitHitsFixedPoint,
    SingularJacobian,
    UnconvergedSurface,
)
from cslab.geometry import NDArray, RadialGraph, make_grid, project_rays
from cslab.models import MapModel
from cslab.simplex import FaceCurve, SimplexApproximation
from cslab.spectra import FixedPointRecord, SpectrumRecord

logger = logging.getLogger(__name__)


class ConvexityMethod(str, Enum):
    MidpointGraph = "MidpointGraph"
    HullDeviation = "HullDeviation"


class ConvexityVerdict(str, Enum):
    Convex = "Convex"
    Nonconvex = "Nonconvex"
    Marginal = "Marginal"


class ConvexityReport(pydantic.BaseModel):
    method: ConvexityMethod
    worst_violation: float
    margin: float
    verdict: ConvexityVerdict
    tol: float
    level: int
    pairs: int = 0
    worst_points: List[List[float]] = []
    notes: List[str] = []

    @property
    def grid_spacing(self) -> float:
        return 1.0 / self.level

    @property
    def convex_with_margin(self) -> bool:
        """
        Convex with the margin clear of the squared grid spacing, twice over.

        Margins are measured in radii normalised by the mean radius, where the
        linear interpolation error scales with the squared spacing 1/L², so
        the bound is 2/L² rather than the linear 2/L.
        """
        return self.verdict == ConvexityVerdict.Convex and self.margin > 2 * self.grid_spacing**2


def convexity_tolerance(tol_c: float, level: int) -> float:
    "the tolerance widened by the linear interpolation error of the grid"
    return tol_c + 1.0 / level**2


def _verdict(worst: float, tol: float) -> ConvexityVerdict:
    if worst <= tol:
        return ConvexityVerdict.Convex
    if worst > 2 * tol:
        return ConvexityVerdict.Nonconvex
    return ConvexityVerdict.Marginal


def _require_converged(approx: SimplexApproximation) -> None:
    if approx.tol and approx.hausdorff_step > 10 * approx.tol:
        raise UnconvergedSurface(
            f"last node movement {approx.hausdorff_step:.3e} exceeds ten times tol {approx.tol:.1e}"
        )


def _random_pairs(
    nodes: np.ndarray, count: int, min_separation: float, rng: np.random.Generator
) -> np.ndarray:
    pairs = []
    have = 0
    for _ in range(20):
        if have >= count:
            break
        i = rng.integers(0, len(nodes), size=4 * count)
        j = rng.integers(0, len(nodes), size=4 * count)
        keep = np.linalg.norm(nodes[i] - nodes[j], axis=1) >= min_separation
        chosen = np.column_stack([i[keep], j[keep]])[: count - have]
        pairs.append(chosen)
        have += len(chosen)
    if not pairs:
        return np.empty((0, 2), dtype=np.intp)
    return np.concatenate(pairs)


def convexity_midpoint_test(
    approx: SimplexApproximation,
    pair_budget: int = 2000,
    tol_c: float = 1e-6,
    seed: int = 0,
    long_range: float = 0.25,
    boundary_band: Optional[float] = None,
) -> ConvexityReport:
    """
    Compare the radius of chord midpoints with the surface radius along the
    midpoint's ray, over every grid edge and ``pair_budget`` long range pairs.

    Violations are normalised by the mean surface radius, positive values
    place a midpoint above the surface.
    """
    _require_converged(approx)
    grid = approx.grid
    points = approx.points()
    scale = approx.mean_radius()
    rng = np.random.default_rng(seed)

    near = grid.edges
    far = _random_pairs(grid.nodes, pair_budget, long_range, rng)
    if boundary_band is not None:
        in_band = grid.nodes.min(axis=1) <= boundary_band
        near = near[in_band[near[:, 0]] & in_band[near[:, 1]]]
        far = far[in_band[far[:, 0]] & in_band[far[:, 1]]]

    def violations(pairs: np.ndarray) -> np.ndarray:
        if len(pairs) == 0:
            return np.empty(0)
        mid = 0.5 * (points[pairs[:, 0]] + points[pairs[:, 1]])
        directions, radii = project_rays(mid)
        return (radii - approx.surface.radius_at(directions)) / scale

    near_v, far_v = violations(near), violations(far)
    everything = np.concatenate([near_v, far_v])
    pairs = np.concatenate([near, far])
    worst_index = int(np.argmax(everything))
    worst = float(everything[worst_index])
    margin = float(np.min(-far_v)) if len(far_v) else -worst
    tol = convexity_tolerance(tol_c, approx.level)
    a, b = pairs[worst_index]
    return ConvexityReport(
        method=ConvexityMethod.MidpointGraph,
        worst_violation=worst,
        margin=margin,
        verdict=_verdict(worst, tol),
        tol=tol,
        level=approx.level,
        pairs=len(pairs),
        worst_points=[points[a].tolist(), points[b].tolist()],
    )


def _hull(points: np.ndarray) -> ConvexHull:
    try:
        return ConvexHull(points)
    except QhullError as e:
        raise HullDegenerate(f"surface points are coplanar: {str(e).splitlines()[0]}") from e


def convexity_hull_test(approx: SimplexApproximation, tol_c: float = 1e-6) -> ConvexityReport:
    """
    Inward depth of each surface point below the convex hull of the
    surface, the origin and the axial points.
    """
    _require_converged(approx)
    points = approx.points()
    corners = points[np.all(approx.grid.nodes[:, None, :] == np.eye(3)[None], axis=-1).any(axis=1)]
    cloud = np.concatenate([points, np.zeros((1, 3)), corners])
    tol = convexity_tolerance(tol_c, approx.level)
    try:
        hull = _hull(cloud)
    except HullDegenerate as e:
        return ConvexityReport(
            method=ConvexityMethod.HullDeviation,
            worst_violation=0.0,
            margin=0.0,
            verdict=ConvexityVerdict.Convex,
            tol=tol,
            level=approx.level,
            notes=[str(e)],
        )
    normals, offsets = hull.equations[:, :3], hull.equations[:, 3]
    depth = np.min(-(points @ normals.T + offsets), axis=1)
    depth = np.clip(depth, 0.0, None) / approx.mean_radius()
    worst_index = int(np.argmax(depth))
    worst = float(depth[worst_index])
    return ConvexityReport(
        method=ConvexityMethod.HullDeviation,
        worst_violation=worst,
        margin=-worst,
        verdict=_verdict(worst, tol),
        tol=tol,
        level=approx.level,
        pairs=len(points),
        worst_points=[points[worst_index].tolist()],
    )


class ConeSample(pydantic.BaseModel):
    scale: float
    z: List[float]
    alpha: float
    beta: float
    gamma: float
    residual: float


class ScaleStats(pydantic.BaseModel):
    scale: float
    count: int
    min_beta: Optional[float] = None
    min_beta_over_alpha: Optional[float] = None
    min_alpha_over_beta: Optional[float] = None
    max_alpha: Optional[float] = None


class ConeEstimate(pydantic.BaseModel):
    fp: FixedPointRecord
    principal: float
    basis: NDArray
    scales: List[float]
    samples: List[ConeSample]
    stats: List[ScaleStats] = []
    alpha_min: float = 0.05
    model_config = ConfigDict(arbitrary_types_allowed=True)

    def at_scale(self, scale: float) -> List[ConeSample]:
        return [s for s in self.samples if s.scale == scale]


def _scale_stats(scale: float, samples: Sequence[ConeSample], alpha_min: float) -> ScaleStats:
    here = [s for s in samples if s.scale == scale]
    if not here:
        return ScaleStats(scale=scale, count=0)
    alpha = np.array([s.alpha for s in here])
    beta = np.array([s.beta for s in here])
    leaving = alpha > alpha_min
    lifted = beta > alpha_min
    return ScaleStats(
        scale=scale,
        count=len(here),
        min_beta=float(beta.min()),
        min_beta_over_alpha=float(np.min(beta[leaving] / alpha[leaving])) if leaving.any() else None,
        min_alpha_over_beta=float(np.min(alpha[lifted] / beta[lifted])) if lifted.any() else None,
        max_alpha=float(alpha.max()),
    )


def cone_basis(spectrum: SpectrumRecord) -> np.ndarray:
    """
    Columns e_k, r, w for a planar fixed point with absent species k.
    """
    if spectrum.tangent_vector is None:
        raise BasisSingular("cone bases need a planar fixed point spectrum")
    k = spectrum.fp.face.absent[0]
    e = np.zeros(3)
    e[k] = 1.0
    basis = np.column_stack([e, spectrum.perron_vector, spectrum.tangent_vector])
    if abs(np.linalg.det(basis)) < 1e-12:
        raise BasisSingular(f"e_{k + 1}, r and w are linearly dependent")
    return basis


def decompose(basis: np.ndarray, z: np.ndarray) -> np.ndarray:
    "(alpha, beta, gamma) with z = alpha e_k - beta r + gamma w"
    signed = basis * np.array([1.0, -1.0, 1.0])
    return np.linalg.solve(signed, np.atleast_2d(z).T).T


def estimate_tangent_cone(
    approx: SimplexApproximation,
    spectrum: SpectrumRecord,
    scale: float = 0.1,
    min_samples: int = 20,
    alpha_min: float = 0.05,
    refine: int = 2,
) -> ConeEstimate:
    """
    Sample secant directions from a planar fixed point into the surface on
    the annuli (h/4, h] for h = h0, h0/2, h0/4, where h0 is ``scale`` times
    the fixed point's radius.

    The surface is sampled at the nodes of a grid ``refine`` times finer
    than the approximation's, using its interpolated radii.
    """
    fp = spectrum.fp
    if len(fp.face) != 2:
        raise BasisSingular(f"tangent cones are estimated at planar fixed points, not {fp.face}")
    basis = cone_basis(spectrum)
    fine = make_grid(approx.level * refine)
    sampled = RadialGraph(grid=fine, rho=approx.surface.radius_at(fine.nodes))
    offsets = sampled.points() - fp.x
    distance = np.linalg.norm(offsets, axis=1)

    h0 = scale * fp.radius
    if np.sum((distance > 0) & (distance <= h0)) < min_samples:
        raise InsufficientSamples(
            f"fewer than {min_samples} surface samples within {h0:.3g} of {fp.x.tolist()}"
        )
    scales = [h0, h0 / 2, h0 / 4]
    samples: List[ConeSample] = []
    signed = basis * np.array([1.0, -1.0, 1.0])
    for h in scales:
        shell = (distance > h / 4) & (distance <= h)
        z = offsets[shell] / distance[shell, None]
        coefficients = decompose(basis, z)
        residuals = np.linalg.norm(coefficients @ signed.T - z, axis=1)
        for direction, (alpha, beta, gamma), residual in zip(z, coefficients, residuals):
            samples.append(
                ConeSample(
                    scale=h,
                    z=direction.tolist(),
                    alpha=float(alpha),
                    beta=float(beta),
                    gamma=float(gamma),
                    residual=float(residual),
                )
            )
    return ConeEstimate(
        fp=fp,
        principal=spectrum.principal,
        basis=basis,
        scales=scales,
        samples=samples,
        stats=[_scale_stats(h, samples, alpha_min) for h in scales],
        alpha_min=alpha_min,
    )


class LemmaVerdict(str, Enum):
    Consistent = "Consistent"
    Violated = "Violated"
    InsufficientData = "InsufficientData"


class LemmaCheck(pydantic.BaseModel):
    lemma: Literal["L1", "L2", "L3"]
    per_scale: List[LemmaVerdict]
    values: List[Optional[float]]
    stable: bool
    finest: LemmaVerdict


class LemmaReport(pydantic.BaseModel):
    checks: List[LemmaCheck]
    eps_cone: float
    c_low: float
    implied_ratio_bound: Optional[float] = None

    def verdict(self, lemma: str) -> LemmaVerdict:
        return next(c.finest for c in self.checks if c.lemma == lemma)

    def consistent_at_finest(self, n: int = 2) -> bool:
        "every lemma Consistent on the n finest scales"
        return all(
            all(v == LemmaVerdict.Consistent for v in c.per_scale[-n:]) for c in self.checks
        )


def _lemma(lemma: str, values: List[Optional[float]], floor: float, strict: bool) -> LemmaCheck:
    verdicts = []
    for value in values:
        if value is None:
            verdicts.append(LemmaVerdict.InsufficientData)
        elif value > floor or (not strict and value >= floor):
            verdicts.append(LemmaVerdict.Consistent)
        else:
            verdicts.append(LemmaVerdict.Violated)
    return LemmaCheck(
        lemma=lemma,
        per_scale=verdicts,
        values=values,
        stable=len(set(verdicts)) == 1,
        finest=verdicts[-1],
    )


def implied_ratio_bound(cone: ConeEstimate) -> Optional[float]:
    """
    The lower bound c / a for beta / alpha implied by the fixed point
    Jacobian, where DP^-2 e_k = b e_k + c r + d w and a = 1 / principal².
    """
    try:
        inverse = np.linalg.inv(cone.fp.jacobian)
    except np.linalg.LinAlgError:
        return None
    e = cone.basis[:, 0]
    _, c, _ = np.linalg.solve(cone.basis, inverse @ inverse @ e)
    return float(c * cone.principal**2)


def lemma_diagnostics(
    cone: ConeEstimate,
    eps_cone: float = 1e-2,
    c_low: float = 1e-3,
    alpha_min: float = 0.05,
) -> LemmaReport:
    """
    Per scale checks that beta is non-negative (L1), that beta / alpha is
    bounded below on directions leaving the face (L2) and that alpha / beta
    is bounded below on the same directions (L3).
    """
    min_beta: List[Optional[float]] = []
    beta_over_alpha: List[Optional[float]] = []
    alpha_over_beta: List[Optional[float]] = []
    for h in cone.scales:
        here = cone.at_scale(h)
        if not here:
            min_beta.append(None)
            beta_over_alpha.append(None)
            alpha_over_beta.append(None)
            continue
        alpha = np.array([s.alpha for s in here])
        beta = np.array([s.beta for s in here])
        min_beta.append(float(beta.min()))
        leaving = alpha > alpha_min
        if not leaving.any():
            beta_over_alpha.append(None)
            alpha_over_beta.append(None)
            continue
        a, b = alpha[leaving], beta[leaving]
        beta_over_alpha.append(float(np.min(b / a)))
        with np.errstate(divide="ignore"):
            ratio = np.where(b > 0, a / np.where(b > 0, b, 1.0), np.where(b < 0, -np.inf, np.inf))
        alpha_over_beta.append(float(np.min(ratio)))
    return LemmaReport(
        checks=[
            _lemma("L1", min_beta, -eps_cone, strict=False),
            _lemma("L2", beta_over_alpha, c_low, strict=True),
            _lemma("L3", alpha_over_beta, c_low, strict=True),
        ],
        eps_cone=eps_cone,
        c_low=c_low,
        implied_ratio_bound=implied_ratio_bound(cone),
    )


class Tangency(str, Enum):
    NotTangent = "NotTangent"
    Tangent = "Tangent"
    Inconclusive = "Inconclusive"


class TangencyReport(pydantic.BaseModel):
    verdict: Tangency
    max_alpha: float
    finest_max_alpha: float


def non_tangency_check(
    cone: ConeEstimate, alpha_min: float = 0.05, tangent_alpha: float = 1e-3
) -> TangencyReport:
    """
    The cone leaves the face when some sampled direction has a clear
    component along the absent species.
    """
    alpha = np.array([s.alpha for s in cone.samples]) if cone.samples else np.zeros(1)
    finest = cone.at_scale(cone.scales[-1])
    finest_alpha = np.array([s.alpha for s in finest]) if finest else np.zeros(1)
    if alpha.max() > alpha_min:
        verdict = Tangency.NotTangent
    elif finest and finest_alpha.max() < tangent_alpha:
        verdict = Tangency.Tangent
    else:
        verdict = Tangency.Inconclusive
    return TangencyReport(
        verdict=verdict, max_alpha=float(alpha.max()), finest_max_alpha=float(finest_alpha.max())
    )


class SeparationFit(pydantic.BaseModel):
    face: str
    n_max: int
    start: List[float]
    vectors: Literal["pullback", "proxy"]
    series: List[float]
    nu_hat: float
    log_c: float
    fit_quality: float

    @pydantic.field_validator("series")
    @classmethod
    def long_enough(cls, value: List[float]) -> List[float]:
        if len(value) < 10:
            raise ValueError("a separation series needs at least ten terms")
        return value


def fit_separation(series: Sequence[float]) -> Tuple[float, float, float]:
    """
    Least squares fit of ``L_n ~ log C - nu n`` over n = 1..len(series),
    returning (nu, log C, coefficient of determination).
    """
    L = np.asarray(series, dtype=float)
    n = np.arange(1, len(L) + 1, dtype=float)
    slope, intercept = np.polyfit(n, L, 1)
    fitted = intercept + slope * n
    total = float(np.sum((L - L.mean()) ** 2))
    if total <= 1e-24 * max(1.0, float(np.sum(L**2))):
        quality = 1.0
    else:
        quality = 1.0 - float(np.sum((L - fitted) ** 2)) / total
    return float(-slope), float(intercept), quality


def _pick_start(curve: FaceCurve, fixed_points: Sequence[np.ndarray]) -> int:
    order = np.argsort(np.abs(curve.t - 0.5), kind="stable")
    points = curve.points()
    for k in order:
        if 0 < k < len(curve.t) - 1 and all(
            np.linalg.norm(points[k] - fp) > 1e-6 for fp in fixed_points
        ):
            return int(k)
    raise OrbitHitsFixedPoint(f"every node of face curve {curve.face} sits on a fixed point")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def exp_separation_diagnostic(
    model: MapModel,
    curve: FaceCurve,
    n_max: int = 60,
    vectors: Literal["pullback", "proxy"] = "pullback",
    fixed_points: Sequence[np.ndarray] = (),
    start_t: Optional[float] = None,
    v_r: Optional[Sequence[float]] = None,
    v_w: Optional[Sequence[float]] = None,
    lead: int = 40,
) -> SeparationFit:
    """
    Measure how fast the principal direction is dominated by the tangent
    direction along an orbit on a face curve.

    The log ratio ``L_n = log |DP^n v_r| - log |DP^n v_w|`` is accumulated
    with renormalisation every step.  With ``vectors="pullback"`` the
    principal direction at the start is the positive face vector pulled back
    through the inverse Jacobians of the next ``n_max + lead`` steps, and its
    growth is read off that backward pass.
    """
    idx = list(curve.face.indices)
    if start_t is None:
        k = _pick_start(curve, fixed_points)
        t0 = float(curve.t[k])
    else:
        t0 = float(start_t)
        k = int(np.clip(np.searchsorted(curve.t, t0), 1, len(curve.t) - 2))
    direction = np.zeros(3)
    direction[idx[0]], direction[idx[1]] = t0, 1.0 - t0
    x0 = curve.radius_at(t0) * direction
    points = curve.points()

    positive = _unit(np.ones(2)) if v_r is None else _unit(np.asarray(v_r, dtype=float))
    tangent = (
        _unit((points[k + 1] - points[k - 1])[idx])
        if v_w is None
        else _unit(np.asarray(v_w, dtype=float))
    )

    steps = n_max + (lead if vectors == "pullback" else 0)
    orbit = [x0]
    for _ in range(steps):
        orbit.append(model.eval(orbit[-1]))
    blocks = [model.jacobian(x)[np.ix_(idx, idx)] for x in orbit[:steps]]

    def forward(v: np.ndarray) -> np.ndarray:
        logs = np.zeros(n_max + 1)
        for n in range(n_max):
            v = blocks[n] @ v
            norm = np.linalg.norm(v)
            logs[n + 1] = logs[n] + np.log(norm)
            v = v / norm
        return logs

    log_w = forward(tangent)
    if vectors == "proxy":
        log_r = forward(positive)
    else:
        # c[n] = log |J_n^-1 ... J_{steps-1}^-1 u|, and log |DP^n v_r| = c[n] - c[0]
        c = np.zeros(steps + 1)
        a = positive
        for n in range(steps - 1, -1, -1):
            try:
                a = np.linalg.solve(blocks[n], a)
            except np.linalg.LinAlgError as e:
                raise SingularJacobian(f"singular face Jacobian along the orbit at step {n}") from e
            norm = np.linalg.norm(a)
            c[n] = c[n + 1] + np.log(norm)
            a = a / norm
        log_r = c[: n_max + 1] - c[0]

    series = (log_r - log_w)[1:]
    nu, log_c, quality = fit_separation(series)
    return SeparationFit(
        face=curve.face.label,
        n_max=n_max,
        start=x0.tolist(),
        vectors=vectors,
        series=series.tolist(),
        nu_hat=nu,
        log_c=log_c,
        fit_quality=quality,
    )
