"""Boundary fixed points, their eigenvalues, and the neat embedding criterion.

At an axial fixed point the Jacobian is upper triangular up to the axis
row, so its eigenvalues are the diagonal entries.  At a planar fixed point on
face I the I x I block carries the two internal eigenvalues and the diagonal
entry of the absent species is the external eigenvalue.  The carrying simplex
is predicted to be a C1 neatly embedded surface when, at every boundary fixed
point, the smallest internal (principal) eigenvalue is below every external
one.

Only fixed points are examined; boundary periodic orbits of higher period are
not searched for.
"""

from __future__ import annotations

import itertools
import logging
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
import pydantic
from pydantic import ConfigDict

from cslab.errors import (
    ComplexInternalEigenvalues,
    FaceMismatch,
    NewtonSingular,
    NonpositiveEigenvalue,
)
from cslab.geometry import NDArray, PLANAR_FACES, Point3, SpeciesSubset
from cslab.models import MapModel, axial_root

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
DEDUP_TOL = 1e-7
BOUNDARY_TOL = 1e-7
STRUCTURAL_ZERO = 1e-8
CONTINUUM_COUNT = 10
PLANAR_SEEDS = 8
INTERIOR_SEEDS = 5
NEWTON_ITERS = 100


class FixedPointRecord(pydantic.BaseModel):
    location: Point3
    face: SpeciesSubset
    residual: float
    jacobian: NDArray
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def x(self) -> np.ndarray:
        return self.location.array

    @property
    def radius(self) -> float:
        return float(self.x.sum())


def _record(model: MapModel, x: np.ndarray, face: SpeciesSubset) -> FixedPointRecord:
    x = x.copy()
    x[list(face.absent)] = 0.0
    residual = float(np.linalg.norm(model.eval(x) - x))
    return FixedPointRecord(
        location=Point3.of(x), face=face, residual=residual, jacobian=model.jacobian(x)
    )


def find_axial_fixed_points(model: MapModel) -> List[FixedPointRecord]:
    """
    The unique positive fixed point on each coordinate axis, by a sign
    change scan, bracketed root finding and a Newton polish.
    """
    records = []
    for species in (1, 2, 3):
        x = np.zeros(3)
        x[species - 1] = axial_root(model, species)
        records.append(_record(model, x, SpeciesSubset.of(species)))
    return records


def _newton(model: MapModel, x0: np.ndarray, idx: Sequence[int]) -> np.ndarray:
    """
    Newton iteration for P(x) = x on the coordinates ``idx`` with the others
    held at zero.  Least squares steps keep it well defined on continua of
    fixed points; steps are halved to stay in the open face.
    """
    idx = list(idx)
    x = x0.copy()
    eye = np.eye(len(idx))
    for _ in range(NEWTON_ITERS):
        F = model.eval(x)[idx] - x[idx]
        if np.linalg.norm(F) < 1e-14:
            return x
        J = model.jacobian(x, check_singular=False)[np.ix_(idx, idx)] - eye
        if not np.all(np.isfinite(J)) or np.linalg.norm(J) < 1e-14:
            raise NewtonSingular(f"vanishing Jacobian at {x.tolist()}")
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        scale = 1.0
        while np.any(x[idx] + scale * step <= 0):
            scale /= 2
            if scale < 1e-12:
                raise NewtonSingular(f"Newton step leaves the face at {x.tolist()}")
        x[idx] += scale * step
        if np.linalg.norm(scale * step) < 1e-15 * (1 + np.linalg.norm(x)):
            return x
    return x


def _dedup(points: List[np.ndarray]) -> List[np.ndarray]:
    kept: List[np.ndarray] = []
    for point in sorted(points, key=lambda p: tuple(p)):
        if all(np.linalg.norm(point - other) > DEDUP_TOL for other in kept):
            kept.append(point)
    return kept


def _solve_from_seeds(
    model: MapModel, seeds: np.ndarray, face: SpeciesSubset
) -> List[FixedPointRecord]:
    idx = list(face.indices)
    found: List[np.ndarray] = []
    failures = 0
    for seed in seeds:
        try:
            x = _newton(model, seed, idx)
        except NewtonSingular as e:
            failures += 1
            logger.debug("seed %s: %s", seed.tolist(), e)
            continue
        if np.min(x[idx]) <= BOUNDARY_TOL:
            continue
        if np.linalg.norm(model.eval(x) - x) >= RESIDUAL_TOL:
            failures += 1
            continue
        found.append(x)
    if failures:
        logger.debug("%d of %d Newton seeds on face %s failed", failures, len(seeds), face)
    return [_record(model, x, face) for x in _dedup(found)]


def find_planar_fixed_points(model: MapModel, face: SpeciesSubset) -> List[FixedPointRecord]:
    """
    Fixed points in the relative interior of a two species face, from an
    8 x 8 grid of Newton seeds.  An empty list is a valid answer.
    """
    if len(face) != 2:
        raise FaceMismatch(f"planar fixed points live on two species faces, got {face}")
    box = model.absorbing_box()
    ticks = (np.arange(PLANAR_SEEDS) + 0.5) / PLANAR_SEEDS
    i, j = face.indices
    seeds = []
    for a, b in itertools.product(ticks, ticks):
        seed = np.zeros(3)
        seed[i], seed[j] = a * box[i], b * box[j]
        seeds.append(seed)
    return _solve_from_seeds(model, np.array(seeds), face)


def find_interior_fixed_points(model: MapModel) -> List[FixedPointRecord]:
    "fixed points with every species present, from a 5 x 5 x 5 seed grid"
    box = model.absorbing_box()
    ticks = (np.arange(INTERIOR_SEEDS) + 0.5) / INTERIOR_SEEDS
    seeds = np.array(list(itertools.product(ticks, ticks, ticks))) * box
    return _solve_from_seeds(model, seeds, SpeciesSubset.of(1, 2, 3))


class ExternalEigenvalue(pydantic.BaseModel):
    species: int
    value: float


class SpectrumFlag(str, Enum):
    Degenerate = "Degenerate"
    MarginalCriterion = "MarginalCriterion"
    InverseNotPositive = "InverseNotPositive"
    PerronMismatch = "PerronMismatch"


class SpectrumRecord(pydantic.BaseModel):
    fp: FixedPointRecord
    principal: float
    internal_other: Optional[float] = None
    internal_gap: Optional[float] = None
    externals: List[ExternalEigenvalue]
    perron_root: Optional[float] = None
    eigen_residual: float = 0.0
    perron_vector: NDArray
    tangent_vector: Optional[NDArray] = None
    flags: List[SpectrumFlag] = []
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def margins(self) -> List[float]:
        return [e.value - self.principal for e in self.externals]

    @property
    def margin(self) -> float:
        return min(self.margins)


def _axial_spectrum(fp: FixedPointRecord) -> SpectrumRecord:
    i = fp.face.indices[0]
    J = fp.jacobian
    for j in fp.face.absent:
        off = [abs(J[j, k]) for k in range(3) if k != j]
        if max(off) >= STRUCTURAL_ZERO:
            raise FaceMismatch(
                f"row {j + 1} of DP at {fp.location.array.tolist()} is not diagonal: {off}"
            )
    values = np.diag(J)
    if np.any(values <= 0):
        raise NonpositiveEigenvalue(f"axial eigenvalues {values.tolist()} must be positive")
    perron = np.zeros(3)
    perron[i] = 1.0
    return SpectrumRecord(
        fp=fp,
        principal=float(J[i, i]),
        externals=[ExternalEigenvalue(species=j + 1, value=float(J[j, j])) for j in fp.face.absent],
        perron_root=float(1.0 / J[i, i]),
        perron_vector=perron,
    )


def eigen2(block: np.ndarray) -> np.ndarray:
    "real eigenvalues of a 2 x 2 matrix, ascending, by the closed form"
    half_trace = 0.5 * (block[0, 0] + block[1, 1])
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    disc = half_trace**2 - det
    if disc < -1e-14 * max(1.0, half_trace**2):
        raise ComplexInternalEigenvalues(f"internal block {block.tolist()} has complex eigenvalues")
    root = np.sqrt(max(disc, 0.0))
    return np.array([half_trace - root, half_trace + root])


def eigvec2(block: np.ndarray, mu: float) -> np.ndarray:
    "unit eigenvector of a 2 x 2 matrix for a known real eigenvalue"
    candidates = [
        np.array([block[0, 1], mu - block[0, 0]]),
        np.array([mu - block[1, 1], block[1, 0]]),
    ]
    v = max(candidates, key=np.linalg.norm)
    norm = np.linalg.norm(v)
    if norm < 1e-300:
        return np.array([1.0, 0.0])
    v = v / norm
    # positive representative, or first nonzero entry positive
    if np.all(v <= 0) or (v[0] < 0 and not np.all(v >= 0)):
        v = -v
    return v


def _planar_spectrum(fp: FixedPointRecord) -> SpectrumRecord:
    idx = list(fp.face.indices)
    absent = fp.face.absent[0]
    J = fp.jacobian
    block = J[np.ix_(idx, idx)]
    low, high = eigen2(block)
    if low <= 0:
        raise NonpositiveEigenvalue(f"internal eigenvalues ({low}, {high}) must be positive")
    external = float(J[absent, absent])
    if external <= 0:
        raise NonpositiveEigenvalue(f"external eigenvalue {external} must be positive")

    r2 = eigvec2(block, low)
    w2 = eigvec2(block, high)
    residual = max(
        np.linalg.norm(block @ r2 - low * r2), np.linalg.norm(block @ w2 - high * w2)
    )
    inverse = np.linalg.inv(block)
    perron_root = float(eigen2(inverse)[1])
    flags: List[SpectrumFlag] = []
    if np.any(inverse <= 0):
        flags.append(SpectrumFlag.InverseNotPositive)
        logger.warning(
            "inverse of the face block at %s is not positive", fp.location.array.tolist()
        )
    if abs(low * perron_root - 1.0) > 1e-9:
        flags.append(SpectrumFlag.PerronMismatch)
        logger.warning(
            "principal %.12g and inverse Perron root %.12g disagree at %s",
            low,
            perron_root,
            fp.location.array.tolist(),
        )
    r = np.zeros(3)
    r[idx] = r2
    w = np.zeros(3)
    w[idx] = w2
    return SpectrumRecord(
        fp=fp,
        principal=float(low),
        internal_other=float(high),
        internal_gap=float(high - low),
        externals=[ExternalEigenvalue(species=absent + 1, value=external)],
        perron_root=perron_root,
        eigen_residual=float(residual),
        perron_vector=r,
        tangent_vector=w,
        flags=flags,
    )


def boundary_spectrum(model: MapModel, fp: FixedPointRecord) -> SpectrumRecord:
    """
    Principal, internal and external eigenvalues at a boundary fixed point.
    """
    if len(fp.face) == 3:
        raise FaceMismatch("interior fixed points have no boundary spectrum")
    if fp.jacobian is None or fp.jacobian.shape != (3, 3):
        fp = _record(model, fp.x, fp.face)
    if len(fp.face) == 1:
        return _axial_spectrum(fp)
    return _planar_spectrum(fp)


class Verdict(str, Enum):
    NeatlyEmbeddedPredicted = "NeatlyEmbeddedPredicted"
    CriterionFails = "CriterionFails"
    Marginal = "Marginal"
    Degenerate = "Degenerate"


class ClassificationReport(pydantic.BaseModel):
    spectra: List[SpectrumRecord]
    margins: List[float]
    min_margin: Optional[float]
    margin_tol: float
    degenerate_faces: List[str] = []
    verdict: Verdict
    tangency_agrees: Optional[bool] = None
    notes: List[str] = [
        "only fixed points are examined, boundary periodic orbits are not searched",
        "principal is compared with the other internal eigenvalue and the external eigenvalue",
    ]
    model_config = ConfigDict(arbitrary_types_allowed=True)


def classify(
    model: MapModel,
    margin_tol: float = 1e-6,
    axial: Optional[List[FixedPointRecord]] = None,
    planar: Optional[Dict[str, List[FixedPointRecord]]] = None,
) -> ClassificationReport:
    """
    Apply the eigenvalue criterion at every boundary fixed point.

    A face carrying ten or more distinct planar fixed points is treated as a
    continuum and makes the verdict Degenerate.
    """
    if axial is None:
        axial = find_axial_fixed_points(model)
    if planar is None:
        planar = {face.label: find_planar_fixed_points(model, face) for face in PLANAR_FACES}

    degenerate_faces = [label for label, points in planar.items() if len(points) >= CONTINUUM_COUNT]
    spectra = [boundary_spectrum(model, fp) for fp in axial]
    for label, points in planar.items():
        if label in degenerate_faces:
            continue
        spectra.extend(boundary_spectrum(model, fp) for fp in points)

    degenerate = bool(degenerate_faces)
    for record in spectra:
        if record.principal >= 1:
            record.flags.append(SpectrumFlag.Degenerate)
            degenerate = True
        near_external = abs(record.margin) <= margin_tol
        no_gap = record.internal_gap is not None and record.internal_gap <= margin_tol
        if near_external or no_gap:
            record.flags.append(SpectrumFlag.MarginalCriterion)

    margins = [record.margin for record in spectra]
    min_margin = min(margins) if margins else None
    if degenerate:
        verdict = Verdict.Degenerate
    elif min_margin is not None and min_margin < -margin_tol:
        verdict = Verdict.CriterionFails
    elif any(SpectrumFlag.MarginalCriterion in record.flags for record in spectra):
        verdict = Verdict.Marginal
    else:
        verdict = Verdict.NeatlyEmbeddedPredicted
    logger.info("classification %s, min margin %s", verdict.value, min_margin)
    return ClassificationReport(
        spectra=spectra,
        margins=margins,
        min_margin=min_margin,
        margin_tol=margin_tol,
        degenerate_faces=degenerate_faces,
        verdict=verdict,
    )


def full_spectrum(J: np.ndarray) -> np.ndarray:
    """
    All three eigenvalues of a 3 x 3 matrix from its characteristic cubic,
    each polished by one Newton step, ordered by modulus.
    """
    J = np.asarray(J, dtype=float)
    trace = np.trace(J)
    minors = (
        J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
        + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
    )
    det = np.linalg.det(J)
    coefficients = np.array([1.0, -trace, minors, -det])
    roots = np.roots(coefficients).astype(complex)
    derivative = np.polyder(coefficients)
    polished = []
    for root in roots:
        slope = np.polyval(derivative, root)
        if slope != 0:
            root = root - np.polyval(coefficients, root) / slope
        polished.append(root)
    polished = np.array(polished)
    polished = polished[np.argsort(np.abs(polished), kind="stable")]
    if np.all(np.abs(polished.imag) < 1e-12):
        return polished.real
    return polished
