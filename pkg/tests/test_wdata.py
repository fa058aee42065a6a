"""Checks for the meromorphic-data layer: Laurent maps, pointwise nullity,
equivariance of the derivative data, and pole cancellation bookkeeping at
fixed points."""

import math

import numpy as np
import pytest

from equimin.domain import (FixedPointRecord, build_rotation_domain,
                            fixed_point_set, invariant_one_form)
from equimin.gallery import GALLERY, catenoid, enneper, flat_plane, helicoid
from equimin.symgroup import (build_cyclic, find_invariant_rotation_plane,
                              orthogonal_action, rotation_about_axis)
from equimin.wdata import (LaurentMap, LocalModel, WeierstrassData,
                           cancellation_check, equivariance_residual_f,
                           local_model_at_fixed_point, nullity_residual,
                           sample_domain_points)

NULLITY_TOL = 1e-12
EQUIV_TOL = 1e-10
MODEL_TOL = 1e-12

AX3 = np.array([0.0, 0.0, 1.0])


def rotation_certificate(k):
    group = build_cyclic(k)
    mats = [rotation_about_axis(AX3, 2 * math.pi * j / k) for j in range(k)]
    act = orthogonal_action(group, mats)
    cert = find_invariant_rotation_plane(act, 1, k)
    return cert


def test_laurent_eval_matches_direct_sum():
    f = LaurentMap(({1: 1.0, -1: 2.0}, {0: 1j}, {2: -0.5}))
    z = 2.0 + 0j
    vals = f.eval(z)
    assert np.allclose(vals, [z + 2.0 / z, 1j, -0.5 * z * z])
    zs = np.array([0.5 + 0.5j, -1.3 + 0.2j])
    batch = f.eval(zs)
    assert batch.shape == (3, 2)
    assert np.allclose(batch[:, 0], f.eval(zs[0]))


def test_laurent_pole_records():
    f = LaurentMap(({-3: 1.0}, {-1: 1.0, 2: 1.0}, {0: 1.0}))
    assert f.pole_order_at_zero() == 3
    assert f.pole_records() == [(0j, 3)]
    g = LaurentMap(({0: 1.0}, {1: 1.0}, {0: 1.0}))
    assert g.pole_order_at_zero() == 0
    assert g.pole_records() == []


def test_laurent_json_round_trip():
    f = LaurentMap(({1: 1 + 2j, -2: 0.5}, {0: -1j}, {3: 2.0}), var="z")
    g = LaurentMap.from_json(f.to_json())
    z = 0.7 - 0.3j
    assert np.array_equal(f.eval(z), g.eval(z))
    assert g.var == f.var


def test_laurent_algebra_helpers():
    f = LaurentMap(({1: 2.0}, {0: 1j}, {-1: 1.0}))
    assert np.allclose(f.scaled(3.0).eval(1.5), 3.0 * f.eval(1.5))
    shifted = f.times_monomial(2.0, 1)
    z = 1.3 + 0.1j
    assert np.allclose(shifted.eval(z), 2.0 * z * f.eval(z))


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_gallery_nullity(name):
    data = GALLERY[name]().data
    pts = sample_domain_points(data.domain, 400, seed=3)
    assert nullity_residual(data, pts) < NULLITY_TOL


def test_nullity_flags_non_null_map():
    g = LaurentMap(({0: 1.0}, {0: 1.0}, {0: 1.0}))
    pts = np.array([1.0 + 0j, 2.0 + 1j])
    assert nullity_residual(g, pts) > 0.1


@pytest.mark.parametrize("entry", [catenoid(3), catenoid(6), enneper(1),
                                   enneper(2), helicoid(2 * math.pi),
                                   flat_plane()],
                         ids=lambda e: e.name)
def test_gallery_derivative_equivariance(entry):
    assert equivariance_residual_f(entry.data, n_samples=256) < EQUIV_TOL


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_local_model_equivariance(k):
    cert = rotation_certificate(k)
    record = FixedPointRecord(point=0j, order=k, generator=1)
    model = local_model_at_fixed_point(record, cert)
    assert isinstance(model, LocalModel)
    assert model.k == k
    assert model.equivariance_residual(n_samples=100) < MODEL_TOL


def test_local_model_values_are_null():
    cert = rotation_certificate(4)
    model = local_model_at_fixed_point(FixedPointRecord(0j, 4, 1), cert)
    zeta = 0.3 + 0.2j
    y = model.eval(zeta)
    assert abs(np.sum(y * y)) < 1e-12


def test_cancellation_passes_on_gallery():
    for name in sorted(GALLERY):
        rep = cancellation_check(GALLERY[name]().data)
        assert rep.ok, (name, rep.detail)
        assert rep.offending_points == ()


def test_cancellation_reports_enneper_orders():
    rep = cancellation_check(enneper(2).data)
    (entry,) = rep.fixed_points
    assert entry["f_pole_order"] == 2
    assert entry["theta_zero_order"] == 2
    assert entry["product_order"] == 0


def _cyclic_space_action(k):
    group = build_cyclic(k)
    mats = [rotation_about_axis(AX3, 2 * math.pi * j / k) for j in range(k)]
    return orthogonal_action(group, mats)


def test_cancellation_flags_uncancelled_pole():
    # pole of order 3 against a zero of order 2: the product still blows up
    dom, act = build_rotation_domain(3, seeds=())
    theta = invariant_one_form(dom, act)
    f = LaurentMap(({-3: 0.5, 3: -0.5}, {-3: 0.5j, 3: 0.5j}, {0: 1.0}))
    data = WeierstrassData(f, theta, dom, act, _cyclic_space_action(3),
                           1.0 + 0j, np.zeros(3))
    rep = cancellation_check(data)
    assert not rep.ok
    assert rep.fixed_points[0]["product_order"] == -1


def test_pole_points_tracks_product_not_f():
    # Enneper's f has a pole at 0 but f theta is regular there
    assert enneper(2).data.pole_points() == []
    assert catenoid(3).data.pole_points() == [0j]


def test_sample_domain_points_respects_margin():
    dom, _ = build_rotation_domain(3, seeds=(0j,))
    pts = sample_domain_points(dom, 500, seed=9, margin=0.05)
    assert len(pts) == 500
    assert np.min(np.abs(pts)) >= 0.05
    assert all(dom.contains(z) for z in pts)


def test_f_theta_product_values():
    data = catenoid(2).data
    z = 1.7 - 0.4j
    ft = data.f_theta(z)
    assert np.allclose(ft, data.f_values(z) * data.theta.coef(z))
