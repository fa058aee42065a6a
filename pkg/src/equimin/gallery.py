"""Reference data bundles: classical surfaces wired to symmetry actions.

Pairing conventions, in one place:

* ``catenoid(k)`` lives on the plane punctured at 0.  The domain
  rotation z -> e^{2 pi i/k} z pairs with the spatial rotation by
  +2 pi/k about the vertical axis.  Map f = ((1/z - z)/2,
  i (1/z + z)/2, 1), form theta = dz/z, basepoint 1, base value
  v = (-1, 0, 0).  The puncture loop carries flux (0, 0, 2 pi).

* ``enneper(m)`` lives on the whole plane with symmetry order
  k = m + 1.  The domain rotation z -> e^{2 pi i/k} z pairs with the
  spatial rotation by -2 pi/k about the vertical axis (the eigenplane
  frame turns against the domain).  Map f = ((z^{-m} - z^m)/2,
  i (z^{-m} + z^m)/2, 1), form theta = z^m dz; the pole of f at 0 is
  cancelled by theta's zero, so the data is regular there and F(0) = 0.

* ``helicoid(pitch)`` lives on the whole plane under translation
  z -> z + i * pitch, paired with the screw motion: rotation by
  `pitch` about the vertical axis composed with translation
  (0, 0, -pitch).  Map f = (-i sinh z, -cosh z, i) (an exponential
  series), theta = dz, basepoint 0, v = 0.  The screw motion is a
  rigid motion but not orthogonal, so plane-certificate checks do not
  apply.

* ``flat_plane()`` is the rank-2 negative control: f = (1, i, 0) on the
  plane punctured at 0 under the trivial group.  F(z) = (x, -y, 0)
  spans only a 2-plane and the core map never leaves one null ray, so
  spray construction must reject it.

Closed forms are normalised so that H(basepoint) = v + 0i, matching
the field convention; their real parts are the immersions themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domain import (InvariantOneForm, build_rotation_domain,
                     build_translation_domain)
from .symgroup import (InfiniteCyclicGroup, RigidMotion, SpaceAction,
                       build_cyclic, orthogonal_action, rotation_about_axis)
from .surface import PolarGrid, RectGrid
from .wdata import LaurentMap, WeierstrassData

_AXIS3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    name: str
    data: WeierstrassData
    closed_form_F: Optional[Callable]
    closed_form_H: Optional[Callable]
    default_grid: object
    flux_loops: dict            # loop key -> expected Im period


def catenoid(k: int = 3) -> GalleryEntry:
    if k < 2:
        raise ValueError("catenoid symmetry order must be at least 2")
    group = build_cyclic(k)
    mats = [rotation_about_axis(_AXIS3, 2 * math.pi * j / k) for j in range(k)]
    space = orthogonal_action(group, mats)
    domain, act = build_rotation_domain(k, seeds=(0j,))
    f = LaurentMap(({-1: 0.5, 1: -0.5}, {-1: 0.5j, 1: 0.5j}, {0: 1.0}))
    data = WeierstrassData(f=f, theta=InvariantOneForm(1.0, -1), domain=domain,
                           domain_action=act, space_action=space,
                           basepoint=1.0 + 0j, v=np.array([-1.0, 0.0, 0.0]))

    def H(z):
        z = complex(z)
        return np.array([-(1 / z + z) / 2, 1j * (z - 1 / z) / 2, np.log(z)])

    def F(z):
        return H(z).real

    return GalleryEntry(name=f"catenoid_{k}", data=data, closed_form_F=F,
                        closed_form_H=H,
                        default_grid=PolarGrid(1 / 3, 3.0, 64, 64),
                        flux_loops={"loop:0": np.array([0.0, 0.0, 2 * math.pi])})


def enneper(m: int = 2) -> GalleryEntry:
    if m < 1:
        raise ValueError("enneper order must be at least 1")
    k = m + 1
    group = build_cyclic(k)
    mats = [rotation_about_axis(_AXIS3, -2 * math.pi * j / k) for j in range(k)]
    space = orthogonal_action(group, mats)
    domain, act = build_rotation_domain(k, seeds=())
    f = LaurentMap(({-m: 0.5, m: -0.5}, {-m: 0.5j, m: 0.5j}, {0: 1.0}))
    v = np.array([m / (2 * m + 1), 0.0, 1 / (m + 1)])
    data = WeierstrassData(f=f, theta=InvariantOneForm(1.0, m), domain=domain,
                           domain_action=act, space_action=space,
                           basepoint=1.0 + 0j, v=v)

    def H_raw(z):
        z = complex(z)
        return np.array([(z - z ** (2 * m + 1) / (2 * m + 1)) / 2,
                         1j * (z + z ** (2 * m + 1) / (2 * m + 1)) / 2,
                         z ** (m + 1) / (m + 1)])

    shift = v.astype(complex) - H_raw(1.0)

    def H(z):
        return H_raw(z) + shift

    def F(z):
        return H(z).real

    return GalleryEntry(name=f"enneper_{m}", data=data, closed_form_F=F,
                        closed_form_H=H,
                        default_grid=PolarGrid(0.02, 2.0, 64, 64),
                        flux_loops={})


def helicoid(pitch: float = 2 * math.pi) -> GalleryEntry:
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    group = InfiniteCyclicGroup(1)
    R = rotation_about_axis(_AXIS3, pitch)
    motion = RigidMotion(1.0, R, np.array([0.0, 0.0, -pitch]))
    space = SpaceAction(group=group, motions=(motion,), dim=3, orthogonal=False)
    domain, act = build_translation_domain([1j * pitch])
    f = LaurentMap(({1: -0.5j, -1: 0.5j}, {1: -0.5, -1: -0.5}, {0: 1j}),
                   var="exp")
    data = WeierstrassData(f=f, theta=InvariantOneForm(1.0, 0), domain=domain,
                           domain_action=act, space_action=space,
                           basepoint=0j, v=np.zeros(3))

    def H(z):
        z = complex(z)
        return np.array([-1j * np.cosh(z) + 1j, -np.sinh(z), 1j * z])

    def F(z):
        return H(z).real

    return GalleryEntry(name="helicoid", data=data, closed_form_F=F,
                        closed_form_H=H,
                        default_grid=RectGrid(-2.0, 2.0, 0.0, 2 * pitch, 64, 64),
                        flux_loops={})


def flat_plane() -> GalleryEntry:
    group = build_cyclic(1)
    space = orthogonal_action(group, [np.eye(3)])
    domain, act = build_rotation_domain(1, seeds=(0j,))
    f = LaurentMap(({0: 1.0}, {0: 1j}, {}))
    data = WeierstrassData(f=f, theta=InvariantOneForm(1.0, 0), domain=domain,
                           domain_action=act, space_action=space,
                           basepoint=1.0 + 0j, v=np.array([1.0, 0.0, 0.0]))

    def H(z):
        z = complex(z)
        return np.array([z, 1j * (z - 1), 0j])

    def F(z):
        return H(z).real

    return GalleryEntry(name="flat_plane", data=data, closed_form_F=F,
                        closed_form_H=H,
                        default_grid=PolarGrid(0.2, 2.0, 32, 32),
                        flux_loops={"loop:0": np.zeros(3)})


GALLERY = {"catenoid": catenoid, "enneper": enneper,
           "helicoid": helicoid, "flat_plane": flat_plane}
