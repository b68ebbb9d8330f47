import numpy as np
import pytest

from cslab.errors import ComplexInternalEigenvalues
from cslab.geometry import PLANAR_FACES, Point3, SpeciesSubset
from cslab.spectra import (
    CONTINUUM_COUNT,
    FixedPointRecord,
    SpectrumFlag,
    Verdict,
    boundary_spectrum,
    classify,
    eigen2,
    find_axial_fixed_points,
    find_interior_fixed_points,
    find_planar_fixed_points,
    full_spectrum,
)


def test_axial_fixed_points(lg_weak):
    points = find_axial_fixed_points(lg_weak)
    np.testing.assert_allclose(points[0].x, [2.0, 0.0, 0.0], atol=1e-12)
    assert [p.face.label for p in points] == ["1", "2", "3"]
    assert all(p.residual < 1e-12 for p in points)


def test_axial_spectrum(lg_weak):
    spectrum = boundary_spectrum(lg_weak, find_axial_fixed_points(lg_weak)[0])
    assert spectrum.principal == pytest.approx(1 / 3)
    assert [e.value for e in spectrum.externals] == pytest.approx([1.5, 1.5])
    assert spectrum.perron_root == pytest.approx(3.0)


def test_planar_fixed_point_weak(lg_weak):
    points = find_planar_fixed_points(lg_weak, SpeciesSubset.of(1, 2))
    assert len(points) == 1
    np.testing.assert_allclose(points[0].x, [4 / 3, 4 / 3, 0.0], atol=1e-10)


def test_planar_spectrum_weak(lg_weak):
    fp = find_planar_fixed_points(lg_weak, SpeciesSubset.of(1, 2))[0]
    spectrum = boundary_spectrum(lg_weak, fp)
    assert spectrum.principal == pytest.approx(1 / 3)
    assert spectrum.internal_other == pytest.approx(7 / 9)
    assert spectrum.externals[0].species == 3
    assert spectrum.externals[0].value == pytest.approx(9 / 7)
    assert spectrum.eigen_residual < 1e-12
    assert np.all(spectrum.perron_vector[:2] > 0)


def test_planar_spectrum_strong(lg_strong):
    fp = find_planar_fixed_points(lg_strong, SpeciesSubset.of(1, 2))[0]
    np.testing.assert_allclose(fp.x, [1 / 3, 1 / 3, 0.0], atol=1e-10)
    spectrum = boundary_spectrum(lg_strong, fp)
    assert spectrum.principal == pytest.approx(1 / 2)
    assert spectrum.internal_other == pytest.approx(7 / 6)
    assert spectrum.externals[0].value == pytest.approx(6 / 7)


def test_axial_spectrum_strong(lg_strong):
    spectrum = boundary_spectrum(lg_strong, find_axial_fixed_points(lg_strong)[0])
    np.testing.assert_allclose(spectrum.fp.x, [1.0, 0.0, 0.0])
    assert spectrum.principal == pytest.approx(1 / 2)
    assert [e.value for e in spectrum.externals] == pytest.approx([2 / 3, 2 / 3])


@pytest.mark.parametrize(
    "fixture, expected",
    [("lg_weak", [1.0, 1.0, 1.0]), ("lg_strong", [0.2, 0.2, 0.2])],
)
def test_interior_fixed_point(request, fixture, expected):
    points = find_interior_fixed_points(request.getfixturevalue(fixture))
    assert len(points) == 1
    np.testing.assert_allclose(points[0].x, expected, atol=1e-10)


def test_flat_faces_are_continua(lg_flat):
    points = find_planar_fixed_points(lg_flat, SpeciesSubset.of(1, 2))
    assert len(points) >= CONTINUUM_COUNT
    np.testing.assert_allclose([p.radius for p in points], 1.0, atol=1e-10)


def test_classify_weak(lg_weak):
    report = classify(lg_weak)
    assert report.verdict == Verdict.NeatlyEmbeddedPredicted
    assert report.min_margin > 0
    assert len(report.spectra) == 3 + len(PLANAR_FACES)


def test_classify_flat_is_degenerate(lg_flat):
    report = classify(lg_flat)
    assert report.verdict == Verdict.Degenerate
    assert set(report.degenerate_faces) == {"12", "13", "23"}


def test_classify_report_serialises(lg_weak):
    data = classify(lg_weak).model_dump(mode="json")
    assert data["verdict"] == "NeatlyEmbeddedPredicted"


def test_eigen2():
    np.testing.assert_allclose(eigen2(np.array([[5 / 9, -2 / 9], [-2 / 9, 5 / 9]])), [1 / 3, 7 / 9])
    with pytest.raises(ComplexInternalEigenvalues):
        eigen2(np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_full_spectrum():
    J = np.diag([0.5, 2.0, -3.0])
    np.testing.assert_allclose(np.sort(np.abs(full_spectrum(J))), [0.5, 2.0, 3.0])


@pytest.mark.parametrize("fixture", ["lg_weak", "lg_strong"])
def test_planar_inverse_is_positive(request, fixture):
    model = request.getfixturevalue(fixture)
    fp = find_planar_fixed_points(model, SpeciesSubset.of(1, 2))[0]
    flags = boundary_spectrum(model, fp).flags
    assert SpectrumFlag.InverseNotPositive not in flags
    assert SpectrumFlag.PerronMismatch not in flags


def test_planar_inverse_not_positive_is_flagged(lg_weak):
    fp = FixedPointRecord(
        location=Point3.of([0.5, 0.5, 0.0]),
        face=SpeciesSubset.of(1, 2),
        residual=0.0,
        jacobian=np.diag([0.5, 0.8, 1.5]),
    )
    spectrum = boundary_spectrum(lg_weak, fp)
    assert spectrum.principal == pytest.approx(0.5)
    assert SpectrumFlag.InverseNotPositive in spectrum.flags
    assert SpectrumFlag.PerronMismatch not in spectrum.flags
    assert spectrum.model_dump(mode="json")["flags"] == ["InverseNotPositive"]
