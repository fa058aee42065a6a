"""Immersion evaluation, differential checks, curvature, completeness,
the conjugate curve, and mesh export.

Closed-form baselines: the catenoid annulus 1/R <= |z| <= R carries
total curvature -4 pi tanh(log R), and the degree-m fan over |z| <= R
carries -4 pi R^2 / (1 + R^2) when m = 1.
"""

import math

import numpy as np
import pytest

from equimin.gallery import GALLERY, catenoid, enneper, flat_plane, helicoid
from equimin.surface import (ImmersionField, PolarGrid, RectGrid, SurfaceError,
                             SurfaceMesh, build_mesh, completeness_probe,
                             conformality_and_harmonicity, curvature,
                             equivariance_residual_F, fixed_point_alignment,
                             mesh_export, mesh_to_obj, mesh_to_ply,
                             nondegeneracy_check, null_curve)
from equimin.wdata import sample_domain_points

CLOSED_FORM_TOL = 1e-12
EQUIV_TOL = 1e-9
FD_TOL = 1e-6


def probe_points(entry):
    """Sample cloud clear of punctures and domain edges."""
    grid = entry.default_grid
    if isinstance(grid, PolarGrid):
        radii = np.geomspace(max(grid.r_in * 2, 0.3), grid.r_out * 0.8, 4)
        return [r * np.exp(1j * t) for r in radii
                for t in np.linspace(0.2, 5.9, 5)]
    us = np.linspace(grid.u0 * 0.8, grid.u1 * 0.8, 4)
    vs = np.linspace(grid.v0 + 0.1 * (grid.v1 - grid.v0),
                     grid.v1 - 0.1 * (grid.v1 - grid.v0), 4)
    return [complex(u, v) for u in us for v in vs]


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_field_matches_closed_form(name):
    entry = GALLERY[name]()
    field = ImmersionField(entry.data)
    for z in probe_points(entry):
        got = field.evaluate(z)
        want = entry.closed_form_F(z)
        assert np.max(np.abs(got - want)) < CLOSED_FORM_TOL, z


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_base_value_is_exact(name):
    entry = GALLERY[name]()
    field = ImmersionField(entry.data)
    assert np.array_equal(field.evaluate(entry.data.basepoint), entry.data.v)


def test_evaluate_many_agrees_with_pointwise():
    entry = catenoid(3)
    field = ImmersionField(entry.data)
    zs = np.array(probe_points(entry))
    batch = field.evaluate_many(zs)
    single = np.array([field.evaluate(z) for z in zs])
    assert np.max(np.abs(batch - single)) < 1e-12


def test_two_path_independence():
    entry = catenoid(3)
    field = ImmersionField(entry.data)
    for z in (2.0 + 0.1j, -1.3 + 0.8j, 0.4 - 0.9j):
        assert field.two_path_residual(z) < 10 * field.tol


@pytest.mark.parametrize("entry", [catenoid(6), enneper(2),
                                   helicoid(2 * math.pi)],
                         ids=lambda e: e.name)
def test_immersion_equivariance(entry):
    field = ImmersionField(entry.data)
    rep = equivariance_residual_F(field, n_samples=300)
    assert rep["residual"] < EQUIV_TOL


@pytest.mark.parametrize("entry", [catenoid(3), enneper(2),
                                   helicoid(2 * math.pi)],
                         ids=lambda e: e.name)
def test_fd_conformality_and_harmonicity(entry):
    field = ImmersionField(entry.data)
    rep = conformality_and_harmonicity(field, probe_points(entry))
    assert rep["conformal_residual"] < FD_TOL
    assert rep["harmonic_residual"] < FD_TOL
    assert rep["weierstrass_residual"] < FD_TOL


def test_fd_flags_non_conformal_map():
    # harmonic but anisotropic: F = (2u, v, 0), so Fu.Fu - Fv.Fv = 3
    from equimin.domain import build_translation_domain, invariant_one_form
    from equimin.symgroup import (InfiniteCyclicGroup, RigidMotion,
                                  SpaceAction)
    from equimin.wdata import LaurentMap, WeierstrassData

    dom, dact = build_translation_domain((100.0 + 0j,))
    theta = invariant_one_form(dom, dact)
    f = LaurentMap(({0: 2.0}, {0: -1j}, {0: 0.0}))
    act = SpaceAction(InfiniteCyclicGroup(1),
                      (RigidMotion(1.0, np.eye(3), np.array([200.0, 0, 0])),),
                      3, False)
    data = WeierstrassData(f, theta, dom, dact, act, 0j, np.zeros(3))
    field = ImmersionField(data)
    rep = conformality_and_harmonicity(field, [0.3 + 0.4j, -1.0 + 0.2j])
    assert abs(rep["conformal_residual"] - 3.0) < 1e-6
    assert rep["harmonic_residual"] < FD_TOL


def test_metric_factor_matches_derivative_data():
    data = catenoid(3).data
    field = ImmersionField(data)
    for z in (0.7 + 0.2j, 2.5 - 1.0j):
        lam = field.metric_factor(z)
        want = np.linalg.norm(data.f_theta(z)) / math.sqrt(2)
        assert abs(lam - want) < 1e-14


def test_catenoid_total_curvature():
    field = ImmersionField(catenoid(3).data)
    rep = curvature(field, PolarGrid(1 / 3, 3.0, 129, 64))
    want = -4 * math.pi * math.tanh(math.log(3.0))
    assert abs(rep["total_curvature"] - want) < 0.02 * abs(want)
    assert rep["max_K"] <= rep["curvature_band"]
    assert rep["richardson_error"] < 0.1 * abs(want)


def test_enneper_total_curvature():
    field = ImmersionField(enneper(1).data)
    R = 5.0
    rep = curvature(field, PolarGrid(1e-3, R, 129, 48))
    want = -4 * math.pi * R ** 2 / (1 + R ** 2)
    assert abs(rep["total_curvature"] - want) < 0.05 * abs(want)
    assert rep["max_K"] <= rep["curvature_band"]


def test_helicoid_curvature_on_rect_grid():
    field = ImmersionField(helicoid(2 * math.pi).data)
    rep = curvature(field, RectGrid(-1.5, 1.5, 0.0, 4 * math.pi, 48, 48))
    assert rep["max_K"] <= rep["curvature_band"]
    assert rep["total_curvature"] < 0


def test_completeness_probe_flags_divergence():
    field = ImmersionField(catenoid(3).data)
    inward = completeness_probe(field, end=0j, rays=(0.0, 2.0), d_start=0.3)
    assert inward["verdict"] == "diverging"
    outward = completeness_probe(field, end=0j, d_start=2.0, outward=True,
                                 stages=10)
    assert outward["verdict"] == "diverging"


def test_completeness_probe_flags_finite_length():
    # metric |z|^(-1/2) is singular at 0 yet integrable, so the geodesic
    # arrives in finite length; stage ratios settle near 1/sqrt(2)
    probe = completeness_probe(lambda z: abs(z) ** -0.5, end=0j)
    assert probe["verdict"] == "finite length"
    tail = probe["rays"][0]["tail_ratios"][-3:]
    assert np.max(np.abs(np.array(tail) - 2 ** -0.5)) < 1e-3


def test_nondegeneracy_rank_three_on_gallery():
    for entry in (catenoid(3), enneper(2), helicoid(2 * math.pi)):
        rep = nondegeneracy_check(ImmersionField(entry.data))
        assert rep["nondegenerate"], entry.name
        assert rep["rank"] == 3


def test_nondegeneracy_flags_planar_image():
    rep = nondegeneracy_check(ImmersionField(flat_plane().data))
    assert not rep["nondegenerate"]
    assert rep["rank"] == 2


def _certificate_pairs(data):
    from equimin.solver import feasibility_check
    from equimin.symgroup import PlaneRotationCertificate
    feas = feasibility_check(data.domain_action, data.space_action)
    return tuple((r, c) for r, c in feas.entries
                 if isinstance(c, PlaneRotationCertificate))


def test_fixed_point_value_sits_on_rotation_axis():
    data = enneper(2).data
    pairs = _certificate_pairs(data)
    assert len(pairs) == 1
    rep = fixed_point_alignment(ImmersionField(data), pairs)
    assert rep["samples"] == 1
    assert rep["points"] == [[0.0, 0.0]]
    assert rep["residual"] <= 1e-12


def test_fixed_point_alignment_detects_off_axis_value():
    data = enneper(2).data
    pairs = _certificate_pairs(data)
    field = ImmersionField(data)

    class Shifted:
        def evaluate(self, z):
            return field.evaluate(z) + np.array([0.3, 0.0, 0.0])

    rep = fixed_point_alignment(Shifted(), pairs)
    assert rep["residual"] > 0.01


def test_fixed_point_alignment_vacuous_without_fixed_points():
    rep = fixed_point_alignment(ImmersionField(catenoid(3).data), ())
    assert rep["residual"] == 0.0
    assert rep["samples"] == 0


def test_null_curve_real_part_is_the_immersion():
    for entry in (catenoid(3), enneper(2), helicoid(2 * math.pi)):
        field = ImmersionField(entry.data)
        rep = null_curve(field, n_samples=16)
        assert rep["re_residual"] <= 1e-12, entry.name
        assert rep["path_residual"] < 1e-10
        assert np.max(np.abs(rep["H0"] - entry.data.v)) < 1e-14
        assert np.max(np.abs(rep["H0"].imag)) == 0.0


def test_null_curve_matches_closed_form():
    for entry in (catenoid(3), enneper(2), helicoid(2 * math.pi),
                  flat_plane()):
        rep = null_curve(ImmersionField(entry.data), n_samples=4)
        H = rep["evaluate"]
        for z in probe_points(entry)[:6]:
            want = entry.closed_form_H(z)
            assert np.max(np.abs(H(z) - want)) < 1e-10, (entry.name, z)


def test_null_curve_reports_flux_obstruction():
    rep = null_curve(ImmersionField(catenoid(3).data), n_samples=8)
    assert rep["flux_obstruction"]
    flux = rep["flux"]["loop:0"]
    assert np.max(np.abs(flux - [0, 0, 2 * math.pi])) < 1e-9
    rep2 = null_curve(ImmersionField(enneper(2).data), n_samples=8)
    assert not rep2["flux_obstruction"]
    assert rep2["flux"] == {}


def test_mesh_counts_and_seam():
    field = ImmersionField(catenoid(3).data)
    mesh = build_mesh(field, PolarGrid(1 / 3, 3.0, 64, 64))
    assert mesh.vertices.shape == (4096, 3)
    assert mesh.faces.shape == (3969, 4)
    assert np.all(mesh.lam > 0)
    # the angular seam is duplicated; both copies carry the same point
    for row in range(64):
        a = mesh.vertices[row * 64]
        b = mesh.vertices[row * 64 + 63]
        assert np.max(np.abs(a - b)) < 1e-12


def test_helicoid_mesh_on_rect_grid():
    field = ImmersionField(helicoid(2 * math.pi).data)
    mesh = build_mesh(field, RectGrid(-2.0, 2.0, 0.0, 4 * math.pi, 48, 48))
    assert mesh.vertices.shape == (2304, 3)
    assert mesh.faces.shape == (2209, 4)


def test_mesh_serialization_is_deterministic():
    grid = PolarGrid(1 / 3, 3.0, 24, 24)
    first = build_mesh(ImmersionField(catenoid(3).data), grid)
    second = build_mesh(ImmersionField(catenoid(3).data), grid)
    assert mesh_to_obj(first) == mesh_to_obj(second)
    assert mesh_to_ply(first) == mesh_to_ply(second)


def test_obj_and_ply_formats():
    field = ImmersionField(catenoid(3).data)
    mesh = build_mesh(field, PolarGrid(1 / 3, 3.0, 8, 8))
    obj = mesh_to_obj(mesh)
    lines = obj.strip().splitlines()
    vlines = [l for l in lines if l.startswith("v ")]
    flines = [l for l in lines if l.startswith("f ")]
    assert len(vlines) == 64 and len(flines) == 49
    # OBJ indices are 1-based
    assert min(int(tok) for l in flines for tok in l.split()[1:]) == 1
    ply = mesh_to_ply(mesh)
    assert ply.startswith("ply\nformat ascii 1.0\n")
    assert "element vertex 64" in ply
    assert "element face 49" in ply
    assert "property double lambda" in ply


def test_mesh_export_writes_checksummed_files(tmp_path):
    field = ImmersionField(catenoid(3).data)
    grid = PolarGrid(1 / 3, 3.0, 12, 12)
    out = mesh_export(field, grid, tmp_path, stem="cat")
    import hashlib
    import json
    for fname, digest in out["files"].items():
        blob = (tmp_path / fname).read_bytes()
        assert hashlib.sha256(blob).hexdigest() == digest
    sidecar = json.loads((tmp_path / "cat.diag.json").read_text())
    assert sidecar["vertices"] == 144
    assert sidecar["faces"] == 121
    assert sidecar["files"]["cat.obj"] == out["files"]["cat.obj"]


def test_mesh_validation_rejects_degenerate_metric():
    V = np.zeros((4, 3))
    F = np.array([[0, 1, 2, 3]])
    lam = np.array([1.0, 1.0, 0.0, 1.0])
    K = np.zeros(4)
    with pytest.raises(SurfaceError):
        SurfaceMesh(V, F, lam, K)
    with pytest.raises(SurfaceError):
        SurfaceMesh(np.array([[0.0, np.inf, 0.0]] * 4), F, np.ones(4), K)
