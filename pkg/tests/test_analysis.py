import numpy as np
import pytest

from cslab.analysis import (
    ConvexityVerdict,
    LemmaVerdict,
    Tangency,
    convexity_hull_test,
    convexity_midpoint_test,
    convexity_tolerance,
    decompose,
    estimate_tangent_cone,
    exp_separation_diagnostic,
    fit_separation,
    lemma_diagnostics,
    non_tangency_check,
)
from cslab.errors import UnconvergedSurface
from cslab.geometry import SpeciesSubset, make_grid
from cslab.simplex import compute_face_curve, compute_surface, flat_surface
from cslab.spectra import boundary_spectrum, find_planar_fixed_points


def test_convexity_tolerance():
    assert convexity_tolerance(1e-6, 10) == pytest.approx(1e-6 + 1e-2)


def test_flat_plane_is_convex():
    approx = flat_surface(16)
    midpoint = convexity_midpoint_test(approx, pair_budget=200)
    hull = convexity_hull_test(approx)
    assert midpoint.verdict == ConvexityVerdict.Convex
    assert hull.verdict == ConvexityVerdict.Convex
    assert abs(midpoint.worst_violation) < 1e-12
    assert not midpoint.convex_with_margin


def test_midpoint_test_is_seeded():
    approx = flat_surface(8)
    first = convexity_midpoint_test(approx, pair_budget=50, seed=7)
    second = convexity_midpoint_test(approx, pair_budget=50, seed=7)
    assert first == second


def test_dented_surface_is_nonconvex():
    approx = flat_surface(8)
    rho = approx.surface.rho.copy()
    rho[~approx.grid.boundary_mask] = 0.5
    dented = approx.model_copy(update={"surface": approx.surface.with_rho(rho)})
    assert convexity_midpoint_test(dented, pair_budget=100).verdict == ConvexityVerdict.Nonconvex
    assert convexity_hull_test(dented).verdict == ConvexityVerdict.Nonconvex


def test_unconverged_surface_is_refused():
    approx = flat_surface(8).model_copy(update={"tol": 1e-8, "hausdorff_step": 1e-3})
    with pytest.raises(UnconvergedSurface):
        convexity_midpoint_test(approx)


@pytest.mark.slow
def test_strong_competition_is_nonconvex(lg_strong):
    approx = compute_surface(lg_strong, make_grid(32))
    report = convexity_midpoint_test(approx, pair_budget=500)
    assert report.verdict == ConvexityVerdict.Nonconvex
    assert report.worst_violation > 0


@pytest.mark.slow
@pytest.mark.parametrize("level", [64, 128])
def test_strong_competition_stays_nonconvex_when_refined(lg_strong, level):
    approx = compute_surface(lg_strong, make_grid(level))
    midpoint = convexity_midpoint_test(approx)
    hull = convexity_hull_test(approx)
    assert midpoint.verdict == ConvexityVerdict.Nonconvex
    assert hull.verdict == ConvexityVerdict.Nonconvex
    assert midpoint.worst_violation > 2 * midpoint.tol
    assert hull.worst_violation > 2 * hull.tol


def test_decompose_recovers_coefficients():
    basis = np.column_stack([[0.0, 0.0, 1.0], [1.0, 1.0, 0.0], [1.0, -1.0, 0.0]])
    z = 0.3 * basis[:, 0] - 0.2 * basis[:, 1] + 0.5 * basis[:, 2]
    np.testing.assert_allclose(decompose(basis, z)[0], [0.3, 0.2, 0.5])


@pytest.fixture
def weak_cone(lg_weak):
    approx = compute_surface(lg_weak, make_grid(32))
    fp = find_planar_fixed_points(lg_weak, SpeciesSubset.of(1, 2))[0]
    return estimate_tangent_cone(approx, boundary_spectrum(lg_weak, fp))


@pytest.mark.slow
def test_tangent_cone_leaves_the_face(weak_cone):
    assert len(weak_cone.scales) == 3
    assert all(stats.count > 0 for stats in weak_cone.stats)
    assert non_tangency_check(weak_cone).verdict == Tangency.NotTangent


@pytest.mark.slow
def test_lemmas_hold_for_weak_competition(weak_cone):
    report = lemma_diagnostics(weak_cone)
    assert [c.lemma for c in report.checks] == ["L1", "L2", "L3"]
    for check in report.checks:
        assert len(check.per_scale) == 3
        assert all(v == LemmaVerdict.Consistent for v in check.per_scale), check.lemma
        assert check.stable
    assert report.consistent_at_finest(2)
    assert non_tangency_check(weak_cone).verdict == Tangency.NotTangent


def test_fit_separation_exact_line():
    series = [np.log(5.0) - 0.7 * n for n in range(1, 31)]
    nu, log_c, quality = fit_separation(series)
    assert nu == pytest.approx(0.7)
    assert log_c == pytest.approx(np.log(5.0))
    assert quality == pytest.approx(1.0)


def test_separation_rate_near_planar_fixed_point(lg_weak):
    face = SpeciesSubset.of(1, 2)
    curve = compute_face_curve(lg_weak, face, 32)
    fp = find_planar_fixed_points(lg_weak, face)[0]
    spectrum = boundary_spectrum(lg_weak, fp)
    fit = exp_separation_diagnostic(
        lg_weak,
        curve,
        n_max=30,
        vectors="pullback",
        start_t=0.5 + 1e-7,
        v_r=spectrum.perron_vector[:2],
        v_w=spectrum.tangent_vector[:2],
    )
    assert len(fit.series) == 30
    assert fit.nu_hat == pytest.approx(np.log(7 / 3), rel=0.05)
    assert fit.fit_quality > 0.99


def test_separation_default_start(lg_weak):
    curve = compute_face_curve(lg_weak, SpeciesSubset.of(1, 2), 16)
    fixed = [fp.x for fp in find_planar_fixed_points(lg_weak, SpeciesSubset.of(1, 2))]
    fit = exp_separation_diagnostic(lg_weak, curve, n_max=20, vectors="proxy", fixed_points=fixed)
    assert fit.face == "12"
    assert fit.start[2] == 0.0


def test_computed_flat_simplex_is_convex(lg_flat):
    approx = compute_surface(lg_flat, make_grid(16))
    midpoint = convexity_midpoint_test(approx, pair_budget=200)
    hull = convexity_hull_test(approx)
    assert midpoint.verdict == ConvexityVerdict.Convex
    assert hull.verdict == ConvexityVerdict.Convex
    assert midpoint.worst_violation <= 1e-6


@pytest.fixture
def weak_face_orbit(lg_weak):
    face = SpeciesSubset.of(1, 2)
    curve = compute_face_curve(lg_weak, face, 32)
    fixed = [fp.x for fp in find_planar_fixed_points(lg_weak, face)]
    return curve, fixed


def test_pullback_separation_from_default_start(lg_weak, weak_face_orbit):
    curve, fixed = weak_face_orbit
    fit = exp_separation_diagnostic(lg_weak, curve, n_max=60, fixed_points=fixed)
    assert fit.vectors == "pullback"
    assert len(fit.series) == 60
    assert fit.nu_hat > 0
    assert fit.fit_quality >= 0.9
    assert fit.nu_hat == pytest.approx(np.log(7 / 3), rel=0.05)


def test_proxy_vectors_miss_the_separation(lg_weak, weak_face_orbit):
    curve, fixed = weak_face_orbit
    pullback = exp_separation_diagnostic(lg_weak, curve, n_max=60, fixed_points=fixed)
    proxy = exp_separation_diagnostic(
        lg_weak, curve, n_max=60, vectors="proxy", fixed_points=fixed
    )
    assert proxy.start == pullback.start
    assert proxy.nu_hat < 0.1 * pullback.nu_hat
    assert proxy.fit_quality < pullback.fit_quality


def test_convex_with_margin_uses_squared_spacing():
    approx = flat_surface(8)
    midpoint = convexity_midpoint_test(approx, pair_budget=50)
    assert midpoint.grid_spacing == pytest.approx(1 / 8)
    assert not midpoint.convex_with_margin
    lifted = midpoint.model_copy(update={"margin": 2.5 / 64})
    assert lifted.convex_with_margin
    assert not lifted.model_copy(update={"margin": 1.5 / 64}).convex_with_margin
