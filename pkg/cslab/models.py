"""Competitive maps and sampled checks of the standing hypotheses.

Two built-in families are provided, both of the form ``P_i(x) = x_i f_i(x)``:

* Leslie-Gower, ``P_i(x) = lambda_i x_i / (1 + (A x)_i)``
* Ricker, ``P_i(x) = x_i exp(r_i (1 - (A x)_i))``

Any other map can be supplied as an ``external`` model, either as Python
callables or as an executable speaking line delimited JSON over its stdin and
stdout.

## Configuration

``` json
{"model": {"type": "leslie_gower",
           "lambda": [3, 3, 3],
           "a": [[1, 0.5, 0.5], [0.5, 1, 0.5], [0.5, 0.5, 1]]}}
```

``` json
{"model": {"type": "external",
           "command": ["python", "my_map.py"],
           "box": [2, 2, 2]}}
```

The executable receives ``{"points": [[x1, x2, x3], ...], "jacobian": false}``
per line and answers ``{"images": [[...], ...]}``, adding
``"jacobians": [[[...]]]`` when asked for them.
"""

from __future__ import annotations

import json
import logging
import subprocess
from enum import Enum
from functools import cached_property
from typing import Any, Callable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from pydantic import ConfigDict, Field
from scipy.optimize import brentq

from cslab.errors import (
    MultipleRoots,
    NoAxialFixedPoint,
    NumericOverflow,
    SingularJacobian,
    UnsupportedModel,
)
from cslab.geometry import ALL_SUBSETS, SpeciesSubset, as_array

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
SINGULAR_DET = 1e-12
FACE_TOL = 1e-12
MAX_STORED_VIOLATIONS = 50


def _matrix(value: Any) -> List[List[float]]:
    matrix = np.asarray(value, dtype=float)
    if matrix.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix entries must be finite")
    return matrix.tolist()


def _triple(value: Any) -> List[float]:
    vector = np.asarray(value, dtype=float)
    if vector.shape != (3,):
        raise ValueError(f"expected three values, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise ValueError("entries must be finite")
    return vector.tolist()


class LeslieGowerParams(pydantic.BaseModel):
    type: Literal["leslie_gower"] = "leslie_gower"
    lambda_: List[float] = Field(alias="lambda")
    a: List[List[float]]
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @pydantic.field_validator("lambda_")
    @classmethod
    def growth_above_one(cls, value: Any) -> List[float]:
        value = _triple(value)
        if min(value) <= 1:
            raise ValueError(f"every lambda_i must exceed 1, got {value}")
        return value

    @pydantic.field_validator("a")
    @classmethod
    def positive_competition(cls, value: Any) -> List[List[float]]:
        value = _matrix(value)
        if np.min(value) <= 0:
            raise ValueError("every competition coefficient a_ij must be positive")
        return value


class RickerParams(pydantic.BaseModel):
    type: Literal["ricker"] = "ricker"
    r: List[float]
    a: List[List[float]]
    model_config = ConfigDict(extra="forbid", frozen=True)

    @pydantic.field_validator("r")
    @classmethod
    def rates_in_unit_interval(cls, value: Any) -> List[float]:
        value = _triple(value)
        if min(value) <= 0 or max(value) >= 1:
            raise ValueError(f"every r_i must lie in (0, 1), got {value}")
        return value

    @pydantic.field_validator("a")
    @classmethod
    def positive_competition(cls, value: Any) -> List[List[float]]:
        value = _matrix(value)
        if np.min(value) <= 0:
            raise ValueError("every competition coefficient a_ij must be positive")
        return value


class ExternalParams(pydantic.BaseModel):
    """
    A user supplied map, either through an executable named by ``command`` or
    through Python callables taking and returning (n, 3) arrays.
    """

    type: Literal["external"] = "external"
    command: Optional[List[str]] = None
    box: Optional[List[float]] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = Field(default=None, exclude=True)
    jacobian_func: Optional[Callable[[np.ndarray], np.ndarray]] = Field(
        default=None, exclude=True
    )
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    @pydantic.field_validator("box")
    @classmethod
    def positive_box(cls, value: Any) -> Optional[List[float]]:
        if value is None:
            return None
        value = _triple(value)
        if min(value) <= 0:
            raise ValueError("an absorbing box needs positive sides")
        return value

    @pydantic.model_validator(mode="after")
    def has_source(self) -> "ExternalParams":
        if self.command is None and self.func is None:
            raise ValueError("an external model needs a command or a func")
        return self


ModelSpec = Union[LeslieGowerParams, RickerParams, ExternalParams]


class ModelKind(str, Enum):
    LeslieGower = "LeslieGower"
    Ricker = "Ricker"
    External = "External"


class JacobianMode(str, Enum):
    Analytic = "Analytic"
    FiniteDifference = "FiniteDifference"


class _PipeMap:
    "line delimited JSON client for an external map executable"

    def __init__(self, command: Sequence[str]) -> None:
        self.command = list(command)
        self._process: Optional[subprocess.Popen] = None

    @property
    def process(self) -> subprocess.Popen:
        if self._process is None or self._process.poll() is not None:
            logger.debug("starting external map %s", self.command)
            self._process = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._process

    def request(self, points: np.ndarray, jacobian: bool = False) -> dict:
        process = self.process
        payload = {"points": np.asarray(points).tolist(), "jacobian": jacobian}
        process.stdin.write(json.dumps(payload) + "\n")
        process.stdin.flush()
        line = process.stdout.readline()
        if not line:
            raise UnsupportedModel(f"external map {self.command} closed its output")
        return json.loads(line)

    def close(self) -> None:
        if self._process is not None and self._process.poll() is None:
            self._process.stdin.close()
            self._process.wait(timeout=5)


class MapModel(pydantic.BaseModel):
    """
    An immutable competitive map with its Jacobian.

    ``eval`` and ``jacobian`` accept a single point or a stack of points with
    the coordinates on the last axis.
    """

    params: ModelSpec = Field(discriminator="type")
    jacobian_mode: JacobianMode = JacobianMode.Analytic
    fd_step: float = FD_STEP
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @classmethod
    def from_spec(cls, spec: Union[ModelSpec, dict], **kwargs: Any) -> "MapModel":
        return cls(params=spec, **kwargs)

    @property
    def kind(self) -> ModelKind:
        return {
            "leslie_gower": ModelKind.LeslieGower,
            "ricker": ModelKind.Ricker,
            "external": ModelKind.External,
        }[self.params.type]

    @cached_property
    def A(self) -> np.ndarray:
        if self.kind == ModelKind.External:
            raise UnsupportedModel("external models have no competition matrix")
        return np.asarray(self.params.a, dtype=float)

    @cached_property
    def _pipe(self) -> _PipeMap:
        return _PipeMap(self.params.command)

    def fingerprint(self) -> str:
        "stable text identifying the map, used in cache keys"
        data = self.params.model_dump(mode="json", by_alias=True)
        if self.kind == ModelKind.External and self.params.func is not None:
            data["func"] = getattr(self.params.func, "__qualname__", repr(self.params.func))
        return json.dumps(
            {"params": data, "jacobian": self.jacobian_mode.value, "h": self.fd_step},
            sort_keys=True,
        )

    def eval(self, x: Any) -> np.ndarray:
        X = as_array(x)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.kind == ModelKind.LeslieGower:
                lam = np.asarray(self.params.lambda_)
                image = lam * X / (1.0 + X @ self.A.T)
            elif self.kind == ModelKind.Ricker:
                r = np.asarray(self.params.r)
                image = X * np.exp(r * (1.0 - X @ self.A.T))
            elif self.params.func is not None:
                image = np.asarray(self.params.func(np.atleast_2d(X)), dtype=float).reshape(X.shape)
            else:
                reply = self._pipe.request(np.atleast_2d(X))
                image = np.asarray(reply["images"], dtype=float).reshape(X.shape)
        if not np.all(np.isfinite(image)):
            raise NumericOverflow(f"non-finite image of {self.kind.value} map")
        return image

    def jacobian(self, x: Any, check_singular: bool = True) -> np.ndarray:
        X = as_array(x)
        if self.jacobian_mode == JacobianMode.FiniteDifference or (
            self.kind == ModelKind.External
            and self.params.command is None
            and self.params.jacobian_func is None
        ):
            J = self._fd_jacobian(X)
        elif self.kind == ModelKind.LeslieGower:
            lam = np.asarray(self.params.lambda_)
            D = 1.0 + X @ self.A.T
            J = _diag(lam / D) - ((lam * X / D**2)[..., :, None] * self.A)
        elif self.kind == ModelKind.Ricker:
            r = np.asarray(self.params.r)
            with np.errstate(over="ignore"):
                E = np.exp(r * (1.0 - X @ self.A.T))
            J = _diag(E) - ((X * r * E)[..., :, None] * self.A)
        elif self.params.jacobian_func is not None:
            J = np.asarray(self.params.jacobian_func(np.atleast_2d(X)), dtype=float)
            J = J.reshape(X.shape + (3,))
        else:
            reply = self._pipe.request(np.atleast_2d(X), jacobian=True)
            J = np.asarray(reply["jacobians"], dtype=float).reshape(X.shape + (3,))
        if not np.all(np.isfinite(J)):
            raise NumericOverflow(f"non-finite Jacobian of {self.kind.value} map")
        if check_singular:
            det = np.linalg.det(J)
            if np.any(np.abs(det) < SINGULAR_DET):
                raise SingularJacobian(f"|det DP| below {SINGULAR_DET} at {X.tolist()}")
        return J

    def _fd_jacobian(self, X: np.ndarray) -> np.ndarray:
        Xs = np.atleast_2d(X)
        steps = self.fd_step * (1.0 + np.abs(Xs))
        columns = []
        for k in range(3):
            shift = np.zeros_like(Xs)
            shift[:, k] = steps[:, k]
            diff = self.eval(Xs + shift) - self.eval(Xs - shift)
            columns.append(diff / (2.0 * steps[:, k : k + 1]))
        J = np.stack(columns, axis=-1)
        return J.reshape(X.shape + (3,))

    def absorbing_box(self) -> np.ndarray:
        """
        Upper corner M of a box [0, M] mapped into itself that contains the
        global attractor.
        """
        if self.kind == ModelKind.LeslieGower:
            return np.asarray(self.params.lambda_) / np.diag(self.A)
        if self.kind == ModelKind.Ricker:
            r = np.asarray(self.params.r)
            return 1.1 * np.exp(r - 1.0) / (r * np.diag(self.A))
        if self.params.box is None:
            raise UnsupportedModel("external models must declare their absorbing box")
        return np.asarray(self.params.box, dtype=float)

    def close(self) -> None:
        "stop the external map process if one was started"
        if "_pipe" in self.__dict__:
            self._pipe.close()


def _diag(values: np.ndarray) -> np.ndarray:
    out = np.zeros(values.shape + (3,))
    idx = np.arange(3)
    out[..., idx, idx] = values
    return out


class Verdict(str, Enum):
    Pass = "Pass"
    Fail = "Fail"
    Inconclusive = "Inconclusive"


class Violation(pydantic.BaseModel):
    points: List[List[float]]
    face: str
    quantity: float
    threshold: float
    note: str = ""


class HypothesisReport(pydantic.BaseModel):
    hypothesis: str
    sample_count: int = 0
    violation_count: int = 0
    violations: List[Violation] = []
    near_threshold: int = 0
    skipped: int = 0
    verdict: Verdict = Verdict.Pass
    notes: List[str] = []

    def record(self, violation: Violation) -> None:
        self.violation_count += 1
        if len(self.violations) < MAX_STORED_VIOLATIONS:
            self.violations.append(violation)

    def finish(self, undecided: bool = False) -> "HypothesisReport":
        "settle the verdict from the collected findings"
        if self.violation_count:
            self.verdict = Verdict.Fail
        elif self.skipped or (undecided and self.near_threshold):
            self.verdict = Verdict.Inconclusive
        else:
            self.verdict = Verdict.Pass
        return self


def _rng(seed: int, face_index: int) -> np.random.Generator:
    return np.random.default_rng((seed, face_index))


def face_samples(
    box: np.ndarray, face: SpeciesSubset, n: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Points of the relatively open face inside the box: half on a regular
    lattice, the rest uniform random.
    """
    idx = list(face.indices)
    d = len(idx)
    n_lattice = n // 2
    per_axis = max(1, int(round(n_lattice ** (1.0 / d)))) if n_lattice else 0
    lattice = np.empty((0, d))
    if per_axis:
        ticks = (np.arange(per_axis) + 0.5) / per_axis
        lattice = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
        lattice = lattice[:n_lattice]
    X = np.zeros((len(lattice), 3))
    X[:, idx] = lattice * box[idx]
    return np.concatenate([X, random_face_points(box, face, n - len(lattice), rng)])


def random_face_points(
    box: np.ndarray, face: SpeciesSubset, n: int, rng: np.random.Generator
) -> np.ndarray:
    X = np.zeros((n, 3))
    idx = list(face.indices)
    X[:, idx] = (1.0 - rng.random((n, len(idx)))) * box[idx]
    return X


def check_h2(model: MapModel, sample_budget: int = 500, seed: int = 0) -> HypothesisReport:
    """
    Check that faces are invariant: images of face points vanish off the
    face and images of relatively open face points stay in the open face.
    """
    report = HypothesisReport(hypothesis="H2")
    box = model.absorbing_box()
    for face_index, face in enumerate(ALL_SUBSETS):
        X = face_samples(box, face, sample_budget, _rng(seed, face_index))
        PX = model.eval(X)
        report.sample_count += len(X)
        outside = np.abs(PX[:, list(face.absent)]).max(axis=1) if face.absent else np.zeros(len(X))
        inside = PX[:, list(face.indices)].min(axis=1)
        for k in np.flatnonzero(outside > FACE_TOL):
            report.record(
                Violation(
                    points=[X[k].tolist(), PX[k].tolist()],
                    face=face.label,
                    quantity=float(outside[k]),
                    threshold=FACE_TOL,
                    note="image leaves the face",
                )
            )
        for k in np.flatnonzero(inside <= 0):
            report.record(
                Violation(
                    points=[X[k].tolist(), PX[k].tolist()],
                    face=face.label,
                    quantity=float(inside[k]),
                    threshold=0.0,
                    note="image leaves the open face",
                )
            )
    return report.finish()


def check_h3prime(
    model: MapModel, sample_budget: int = 500, seed: int = 0, near_tol: float = 1e-9
) -> HypothesisReport:
    """
    Check positivity of the inverse Jacobian on faces: the I x I block of
    DP(x)^-1 is positive and every column of an absent species has a
    positive entry in the rows of I.
    """
    report = HypothesisReport(hypothesis="H3'")
    box = model.absorbing_box()
    for face_index, face in enumerate(ALL_SUBSETS):
        X = face_samples(box, face, sample_budget, _rng(seed, face_index))
        J = model.jacobian(X, check_singular=False)
        report.sample_count += len(X)
        det = np.linalg.det(J)
        singular = np.abs(det) < SINGULAR_DET
        report.skipped += int(singular.sum())
        if np.all(singular):
            continue
        inverse = np.linalg.inv(J[~singular])
        points = X[~singular]
        rows = list(face.indices)
        block = inverse[:, rows][:, :, rows].reshape(len(points), -1)
        lowest = block.min(axis=1)
        report.near_threshold += int(np.sum((lowest > 0) & (lowest <= near_tol)))
        for k in np.flatnonzero(lowest <= 0):
            report.record(
                Violation(
                    points=[points[k].tolist()],
                    face=face.label,
                    quantity=float(lowest[k]),
                    threshold=0.0,
                    note="inverse Jacobian face block not positive",
                )
            )
        for col in face.absent:
            best = inverse[:, rows, col].max(axis=1)
            for k in np.flatnonzero(best <= 0):
                report.record(
                    Violation(
                        points=[points[k].tolist()],
                        face=face.label,
                        quantity=float(best[k]),
                        threshold=0.0,
                        note=f"no positive face entry in column {col + 1}",
                    )
                )
    if report.skipped:
        report.notes.append(f"{report.skipped} samples had a singular Jacobian")
    if report.near_threshold:
        report.notes.append(
            f"{report.near_threshold} samples had a face block entry within {near_tol:g} of zero"
        )
    return report.finish(undecided=True)


def axial_scan(model: MapModel, species: int, n_scan: int = 1000) -> Tuple[np.ndarray, np.ndarray]:
    """
    Values of P_i(s e_i) - s on a regular scan of (0, M_i], species numbering.
    """
    i = species - 1
    box = model.absorbing_box()
    s = np.linspace(1e-8, box[i], n_scan)
    X = np.zeros((n_scan, 3))
    X[:, i] = s
    return s, model.eval(X)[:, i] - s


def sign_changes(values: np.ndarray) -> np.ndarray:
    "indices k with a root in [k, k + 1] of the scanned function"
    signs = np.sign(values)
    return np.flatnonzero((signs[:-1] * signs[1:] < 0) | (signs[1:] == 0))


def axial_root(model: MapModel, species: int, n_scan: int = 1000) -> float:
    """
    The unique positive fixed point of the map restricted to an axis.
    """
    i = species - 1
    s, g = axial_scan(model, species, n_scan)
    changes = sign_changes(g)
    if len(changes) == 0:
        raise NoAxialFixedPoint(f"no axial fixed point on axis {species}")
    if len(changes) > 1:
        raise MultipleRoots(f"{len(changes)} axial fixed points on axis {species}")
    k = int(changes[0])
    if g[k + 1] == 0:
        return float(s[k + 1])

    def restricted(t: float) -> float:
        x = np.zeros(3)
        x[i] = t
        return float(model.eval(x)[i] - t)

    root = brentq(restricted, s[k], s[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    for _ in range(3):
        x = np.zeros(3)
        x[i] = root
        slope = model.jacobian(x)[i, i] - 1.0
        if slope == 0:
            break
        root -= restricted(root) / slope
    return float(root)


def check_h4prime(model: MapModel, n_scan: int = 1000) -> HypothesisReport:
    """
    Check each axis carries exactly one positive fixed point u_i, attracting
    along the axis with 0 < dP_i/dx_i(u_i) < 1 and with negative cross partials.
    """
    report = HypothesisReport(hypothesis="H4'")
    for species in (1, 2, 3):
        i = species - 1
        _, g = axial_scan(model, species, n_scan)
        report.sample_count += n_scan
        changes = sign_changes(g)
        if len(changes) == 0:
            raise NoAxialFixedPoint(f"no axial fixed point on axis {species}")
        if len(changes) > 1:
            report.record(
                Violation(
                    points=[],
                    face=str(species),
                    quantity=float(len(changes)),
                    threshold=1.0,
                    note="more than one axial fixed point",
                )
            )
            continue
        u = np.zeros(3)
        u[i] = axial_root(model, species, n_scan)
        J = model.jacobian(u)
        slope = J[i, i]
        if not 0 < slope < 1:
            report.record(
                Violation(
                    points=[u.tolist()],
                    face=str(species),
                    quantity=float(slope),
                    threshold=1.0,
                    note="axial derivative outside (0, 1)",
                )
            )
        for j in range(3):
            if j != i and J[i, j] >= 0:
                report.record(
                    Violation(
                        points=[u.tolist()],
                        face=str(species),
                        quantity=float(J[i, j]),
                        threshold=0.0,
                        note=f"cross partial dP_{species}/dx_{j + 1} not negative",
                    )
                )
    return report.finish()


def check_h6(
    model: MapModel,
    pair_budget: int = 500,
    seed: int = 0,
    near_tol: float = 1e-9,
    max_rounds: int = 50,
) -> HypothesisReport:
    """
    Check that per capita growth ratios dominate: whenever 0 << Px << Py on a
    face, P_i x / P_i y >= x_i / y_i for every species of the face.

    Pairs are drawn by rejection sampling; a pair ordered the other way round
    is used swapped.
    """
    report = HypothesisReport(hypothesis="H6")
    box = model.absorbing_box()
    exhausted = False
    for face_index, face in enumerate(ALL_SUBSETS):
        rng = _rng(seed, face_index)
        idx = list(face.indices)
        accepted = 0
        for _ in range(max_rounds):
            if accepted >= pair_budget:
                break
            X = random_face_points(box, face, pair_budget, rng)
            Y = random_face_points(box, face, pair_budget, rng)
            PX, PY = model.eval(X), model.eval(Y)
            below = np.all(PX[:, idx] < PY[:, idx], axis=1) & np.all(PX[:, idx] > 0, axis=1)
            above = np.all(PY[:, idx] < PX[:, idx], axis=1) & np.all(PY[:, idx] > 0, axis=1)
            lo = np.where(above[:, None], Y, X)[below | above]
            hi = np.where(above[:, None], X, Y)[below | above]
            Plo, Phi = model.eval(lo), model.eval(hi)
            take = min(len(lo), pair_budget - accepted)
            lo, hi, Plo, Phi = lo[:take], hi[:take], Plo[:take], Phi[:take]
            accepted += take
            gap = Plo[:, idx] / Phi[:, idx] - lo[:, idx] / hi[:, idx]
            worst = gap.min(axis=1)
            report.near_threshold += int(np.sum((worst >= -1e-10) & (worst <= near_tol)))
            for k in np.flatnonzero(worst < -1e-10):
                report.record(
                    Violation(
                        points=[lo[k].tolist(), hi[k].tolist()],
                        face=face.label,
                        quantity=float(worst[k]),
                        threshold=-1e-10,
                        note="growth ratio below coordinate ratio",
                    )
                )
        report.sample_count += accepted
        if accepted < pair_budget:
            exhausted = True
            report.notes.append(f"face {face.label}: {accepted}/{pair_budget} ordered pairs found")
    return report.finish(undecided=exhausted)


def check_hypotheses(
    model: MapModel,
    sample_budget: int = 500,
    pair_budget: int = 500,
    seed: int = 0,
    near_tol: float = 1e-9,
) -> List[HypothesisReport]:
    return [
        check_h2(model, sample_budget, seed),
        check_h3prime(model, sample_budget, seed, near_tol),
        check_h4prime(model),
        check_h6(model, pair_budget, seed, near_tol),
    ]


def leslie_gower(lam: Sequence[float], a: Any) -> MapModel:
    return MapModel(params=LeslieGowerParams(**{"lambda": list(lam), "a": a}))


def ricker(r: Sequence[float], a: Any) -> MapModel:
    return MapModel(params=RickerParams(r=list(r), a=a))


def external(
    func: Callable[[np.ndarray], np.ndarray],
    box: Sequence[float],
    jacobian_func: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> MapModel:
    mode = JacobianMode.Analytic if jacobian_func is not None else JacobianMode.FiniteDifference
    return MapModel(
        params=ExternalParams(func=func, box=list(box), jacobian_func=jacobian_func),
        jacobian_mode=mode,
    )


