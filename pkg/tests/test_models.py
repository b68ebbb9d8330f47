import numpy as np
import pytest
from pydantic import ValidationError

from cslab.errors import NoAxialFixedPoint, SingularJacobian, UnsupportedModel
from cslab.models import (
    JacobianMode,
    LeslieGowerParams,
    MapModel,
    RickerParams,
    Verdict,
    axial_root,
    check_h2,
    check_h3prime,
    check_h4prime,
    check_h6,
    check_hypotheses,
    external,
    ricker,
)


def test_leslie_gower_eval(lg_weak):
    np.testing.assert_allclose(lg_weak.eval([1.0, 1.0, 1.0]), [1.0, 1.0, 1.0])
    np.testing.assert_allclose(lg_weak.eval([2.0, 0.0, 0.0]), [2.0, 0.0, 0.0])


def test_eval_stacks(lg_weak):
    X = np.array([[1.0, 1.0, 1.0], [2.0, 0.0, 0.0]])
    assert lg_weak.eval(X).shape == (2, 3)
    assert lg_weak.jacobian(X).shape == (2, 3, 3)


@pytest.mark.parametrize("fixture", ["lg_weak", "lg_strong"])
@pytest.mark.parametrize("n_points", [20, 100])
def test_analytic_jacobian_matches_finite_difference(request, fixture, n_points):
    model = request.getfixturevalue(fixture)
    fd = MapModel(params=model.params, jacobian_mode=JacobianMode.FiniteDifference)
    X = np.random.default_rng(n_points).random((n_points, 3)) * model.absorbing_box()
    assert np.max(np.abs(model.jacobian(X) - fd.jacobian(X))) < 1e-6


def test_ricker_jacobian_matches_finite_difference():
    model = ricker([0.6, 0.6, 0.6], [[1, 0.4, 0.4], [0.4, 1, 0.4], [0.4, 0.4, 1]])
    fd = MapModel(params=model.params, jacobian_mode=JacobianMode.FiniteDifference)
    x = np.array([0.5, 0.2, 0.8])
    np.testing.assert_allclose(model.jacobian(x), fd.jacobian(x), atol=1e-6)


def test_absorbing_box():
    model = ricker([0.5, 0.5, 0.5], np.eye(3) * 2 + 0.1)
    expected = 1.1 * np.exp(0.5 - 1.0) / (0.5 * 2.1)
    np.testing.assert_allclose(model.absorbing_box(), [expected] * 3)


def test_leslie_gower_box(lg_weak):
    np.testing.assert_allclose(lg_weak.absorbing_box(), [3.0, 3.0, 3.0])


@pytest.mark.parametrize(
    "params",
    [
        {"lambda": [1.0, 2.0, 2.0], "a": np.ones((3, 3)).tolist()},
        {"lambda": [2.0, 2.0, 2.0], "a": [[1, 1, 1], [1, 0, 1], [1, 1, 1]]},
        {"lambda": [2.0, 2.0], "a": np.ones((3, 3)).tolist()},
        {"lambda": [2.0, 2.0, 2.0], "a": np.ones((3, 3)).tolist(), "mu": 1},
    ],
)
def test_leslie_gower_params_rejected(params):
    with pytest.raises(ValidationError):
        LeslieGowerParams(**params)


def test_ricker_rates_in_unit_interval():
    with pytest.raises(ValidationError):
        RickerParams(r=[0.5, 1.0, 0.5], a=np.eye(3).tolist())


def test_external_needs_box():
    model = MapModel(params={"type": "external", "func": lambda X: X / 2})
    with pytest.raises(UnsupportedModel):
        model.absorbing_box()


def test_fingerprint_stable(lg_weak):
    twin = MapModel(params=lg_weak.params.model_dump(by_alias=True))
    assert twin.fingerprint() == lg_weak.fingerprint()


@pytest.mark.parametrize("species", [1, 2, 3])
def test_axial_root(lg_weak, species):
    assert axial_root(lg_weak, species) == pytest.approx(2.0, abs=1e-12)


def test_axial_root_missing():
    model = external(lambda X: 0.5 * X, box=[1.0, 1.0, 1.0])
    with pytest.raises(NoAxialFixedPoint):
        axial_root(model, 1)


@pytest.mark.parametrize("fixture", ["lg_flat", "lg_weak", "lg_strong"])
def test_leslie_gower_hypotheses_hold(request, fixture):
    model = request.getfixturevalue(fixture)
    reports = check_hypotheses(model, sample_budget=100, pair_budget=100)
    assert [r.hypothesis for r in reports] == ["H2", "H3'", "H4'", "H6"]
    assert all(r.verdict != Verdict.Fail for r in reports)


def test_h2_catches_leaking_faces():
    model = external(lambda X: 0.5 * X + 0.1, box=[1.0, 1.0, 1.0])
    report = check_h2(model, sample_budget=20)
    assert report.verdict == Verdict.Fail
    assert report.violation_count > 0
    assert report.violations


def test_h4prime_reports_axial_slope(lg_weak):
    report = check_h4prime(lg_weak)
    assert report.verdict == Verdict.Pass
    assert report.sample_count == 3000


def test_hypothesis_checks_are_seeded(lg_strong):
    first = check_hypotheses(lg_strong, 50, 50, seed=3)
    second = check_hypotheses(lg_strong, 50, 50, seed=3)
    assert [r.model_dump() for r in first] == [r.model_dump() for r in second]


def _leslie_gower_external(lam, a):
    "a Leslie-Gower map handed over as callables, so zero coefficients are allowed"
    lam, A = np.asarray(lam, dtype=float), np.asarray(a, dtype=float)

    def func(X):
        return lam * X / (1.0 + X @ A.T)

    def jacobian_func(X):
        D = 1.0 + X @ A.T
        J = -(lam * X / D**2)[:, :, None] * A
        idx = np.arange(3)
        J[:, idx, idx] += lam / D
        return J

    return external(func, box=lam / np.diag(A), jacobian_func=jacobian_func)


def test_external_jacobian_func_matches_built_in(lg_weak):
    model = _leslie_gower_external([3, 3, 3], lg_weak.params.a)
    x = np.array([0.4, 1.1, 0.7])
    np.testing.assert_allclose(model.jacobian(x), lg_weak.jacobian(x))


def test_h3prime_catches_missing_competition():
    a = np.full((3, 3), 0.5)
    np.fill_diagonal(a, 1.0)
    a[0, 1] = 0.0
    report = check_h3prime(_leslie_gower_external([3, 3, 3], a), sample_budget=50)
    assert report.verdict == Verdict.Fail
    assert report.violation_count > 0
    assert {v.face for v in report.violations} >= {"12"}


def test_h3prime_near_zero_entries_are_inconclusive(lg_weak):
    report = check_h3prime(lg_weak, sample_budget=20, near_tol=1e3)
    assert report.violation_count == 0
    assert report.near_threshold > 0
    assert report.verdict == Verdict.Inconclusive


def test_h6_catches_superlinear_growth():
    def func(X):
        return np.column_stack([X[:, 0] ** 2, 0.5 * X[:, 1], 0.5 * X[:, 2]])

    report = check_h6(external(func, box=[1.0, 1.0, 1.0]), pair_budget=50)
    assert report.verdict == Verdict.Fail
    assert report.violation_count > 0
    assert all("1" in v.face for v in report.violations)


def test_h6_equal_ratios_pass():
    report = check_h6(external(lambda X: 0.5 * X, box=[1.0, 1.0, 1.0]), pair_budget=50)
    assert report.violation_count == 0


SINGULAR = 0.5 * np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


@pytest.fixture
def singular_map():
    return external(
        lambda X: X @ SINGULAR.T,
        box=[1.0, 1.0, 1.0],
        jacobian_func=lambda X: np.broadcast_to(SINGULAR, (len(X), 3, 3)).copy(),
    )


def test_singular_jacobian_raises(singular_map):
    with pytest.raises(SingularJacobian):
        singular_map.jacobian([0.2, 0.3, 0.4])
    assert singular_map.jacobian([0.2, 0.3, 0.4], check_singular=False).shape == (3, 3)


def test_h3prime_skips_singular_samples(singular_map):
    report = check_h3prime(singular_map, sample_budget=10)
    assert report.skipped == report.sample_count
    assert report.verdict == Verdict.Inconclusive
