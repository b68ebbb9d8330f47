import numpy as np
import pytest

from cslab.geometry import SpeciesSubset, make_grid
from cslab.simplex import (
    IterationOptions,
    attraction_check,
    compute_face_curve,
    compute_surface,
    flat_surface,
    invariance_residual,
    unorderedness_check,
)


@pytest.fixture
def flat_approx(lg_flat):
    return compute_surface(lg_flat, make_grid(32))


def test_face_curve_flat(lg_flat):
    curve = compute_face_curve(lg_flat, SpeciesSubset.of(1, 2), 32)
    assert len(curve.t) == 33
    np.testing.assert_allclose(curve.rho, 1.0, atol=1e-6)
    assert curve.residual < 1e-8


def test_face_curve_passes_planar_fixed_point(lg_weak):
    curve = compute_face_curve(lg_weak, SpeciesSubset.of(1, 2), 32)
    assert curve.radius_at(np.array([0.5]))[0] == pytest.approx(8 / 3, rel=1e-6)
    assert curve.rho[0] == pytest.approx(2.0, rel=1e-6)
    assert curve.rho[-1] == pytest.approx(2.0, rel=1e-6)


def test_flat_surface_recovered(flat_approx):
    assert len(flat_approx.surface.rho) == 561
    assert np.max(np.abs(flat_approx.surface.rho - 1.0)) <= 5e-3
    assert set(flat_approx.face_curves) == {"12", "13", "23"}
    assert flat_approx.iterations <= 300


def test_surface_is_invariant(lg_weak):
    approx = compute_surface(lg_weak, make_grid(16))
    spacing = 2 * approx.mean_radius() / approx.level
    assert invariance_residual(lg_weak, approx) < 2 * spacing


def test_surface_passes_interior_fixed_point(lg_weak):
    approx = compute_surface(lg_weak, make_grid(12))
    rho = approx.surface.radius_at(np.array([[1 / 3, 1 / 3, 1 / 3]]))[0]
    assert rho == pytest.approx(3.0, rel=1e-2)


def test_surface_is_unordered(lg_weak):
    approx = compute_surface(lg_weak, make_grid(8))
    report = unorderedness_check(approx)
    assert report.passed
    assert report.strong_count == 0
    assert report.pairs_checked == len(approx.points()) * (len(approx.points()) - 1)


def test_ordered_surface_is_caught():
    approx = flat_surface(4)
    rho = approx.surface.rho.copy()
    rho[len(rho) // 2] = 3.0
    raised = approx.model_copy(update={"surface": approx.surface.with_rho(rho)})
    report = unorderedness_check(raised)
    assert not report.passed
    assert report.strong_count + report.interior_count > 0


def test_attraction(lg_weak):
    approx = compute_surface(lg_weak, make_grid(16))
    report = attraction_check(lg_weak, approx, n_seeds=20, burn_in=100, seed=1)
    assert report.passed
    assert report.n_seeds == 20


def test_surface_deterministic(lg_strong):
    grid = make_grid(8)
    opts = IterationOptions(max_iters=400)
    first = compute_surface(lg_strong, grid, opts)
    second = compute_surface(lg_strong, grid, opts)
    np.testing.assert_array_equal(first.surface.rho, second.surface.rho)


def test_exports(flat_approx, tmp_path):
    csv_path = flat_approx.to_csv(tmp_path / "surface.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "y1,y2,y3,rho,x1,x2,x3"
    assert len(lines) == 562

    obj = flat_approx.to_obj(tmp_path / "surface.obj").read_text().splitlines()
    assert sum(line.startswith("v ") for line in obj) == 561
    assert sum(line.startswith("f ") for line in obj) == 32**2

    face = flat_approx.face_curves["12"].to_csv(tmp_path / "face_12.csv")
    assert face.read_text().splitlines()[0] == "t,rho,x1,x2,x3"


@pytest.mark.slow
def test_weak_competition_surface_at_level_32(lg_weak):
    approx = compute_surface(lg_weak, make_grid(32))
    unordered = unorderedness_check(approx, margin=1e-6)
    assert unordered.passed
    assert unordered.strong_count == 0

    spacing = 2 * approx.mean_radius() / approx.level
    assert invariance_residual(lg_weak, approx) <= 2 * spacing

    attraction = attraction_check(lg_weak, approx, n_seeds=100, burn_in=200, seed=0)
    assert attraction.n_seeds == 100
    assert attraction.threshold == pytest.approx(max(2 / 32, 1e-3) * approx.mean_radius())
    assert attraction.passed


def test_boundary_pinned_to_face_curves(lg_weak):
    approx = compute_surface(lg_weak, make_grid(8))
    grid = approx.grid
    for label, curve in approx.face_curves.items():
        nodes = grid.face_nodes(curve.face)
        first = curve.face.indices[0]
        np.testing.assert_allclose(
            approx.surface.rho[nodes], curve.radius_at(grid.nodes[nodes, first]), rtol=1e-6
        )
