"""Shared fixtures: small surfaces and solved benchmark states."""

import numpy as np
import pytest

from dielshape.geometry import Material, DeformationField, build_surface, sphere
from dielshape import solver


@pytest.fixture(scope="session")
def small_sphere():
    """Unit sphere at a resolution where everything runs in seconds."""
    return sphere(1.0, 8, 18)


@pytest.fixture(scope="session")
def wobbly_surface():
    """Non-symmetric star-shaped surface for genericity checks."""
    return build_surface({"0,0": np.sqrt(4.0 * np.pi), "2,0": 0.25, "3,1": 0.15}, 8, 18)


@pytest.fixture(scope="session")
def resolved_surface():
    """Mildly perturbed surface with enough quadrature margin that the
    exact differential identities hold to near machine precision."""
    return build_surface({"0,0": np.sqrt(4.0 * np.pi), "2,0": 0.12, "3,1": 0.08}, 8, 40)


@pytest.fixture(scope="session")
def material():
    return Material(eps_i=2.25)


@pytest.fixture(scope="session")
def wave():
    return solver.PlaneWave()


@pytest.fixture(scope="session")
def small_solution(small_sphere, material, wave):
    return solver.solve(small_sphere, material, wave)


@pytest.fixture(scope="session")
def unit_directions():
    rng = np.random.default_rng(11)
    d = rng.normal(size=(20, 3))
    return d / np.linalg.norm(d, axis=1)[:, None]


@pytest.fixture()
def generic_xi(small_sphere):
    """Smooth non-symmetric deformation field with normal and tangential parts."""
    g = small_sphere.grid
    coef = np.zeros((3, g.ncoef(g.Lmax)))
    coef[0, 6] = 0.3
    coef[1, 10] = 0.2
    coef[2, 2] = 0.25
    coef[2, 0] = 0.1
    return DeformationField(g, coef)
