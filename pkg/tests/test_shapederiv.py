"""The three far-field shape-derivative routes: degeneracies, linearity,
mutual agreement, and the sphere's radius derivative against the series
solution."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dielshape import oracle, shapederiv as sd, solver
from dielshape.geometry import DeformationField, Material, sphere


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.fixture(scope="module")
def dirs():
    rng = np.random.default_rng(21)
    d = rng.normal(size=(10, 3))
    return d / np.linalg.norm(d, axis=1)[:, None]


@pytest.fixture(scope="module")
def xi_profile(small_sphere):
    g = small_sphere.grid
    coef = np.zeros((3, g.ncoef(g.Lmax)))
    coef[0, 6] = 0.3
    coef[1, 10] = 0.2
    coef[2, 2] = 0.25
    coef[2, 0] = 0.1
    return DeformationField(g, coef)


class TestDegeneracies:
    def test_zero_field_gives_zero(self, small_sphere, material, wave, dirs,
                                   small_solution):
        g = small_sphere.grid
        xi = DeformationField(g, np.zeros((3, g.ncoef(g.Lmax))))
        out = sd.d_solution_routeA(
            small_sphere, material, wave, xi, dirs, sol=small_solution
        )
        assert np.abs(out.dE_far).max() < 1e-12

    def test_translation_is_pure_phase(self, small_sphere, material, wave, dirs,
                                       small_solution):
        # Translating the scatterer only shifts the far-field phase:
        # dE = i k_e (d.dhat - d.xhat is absent for the derivative at t=0;
        # the derivative equals i k_e ((w.d) - (w.xhat)) E_inf for shift w
        # with the incident wave fixed in space.
        w = np.array([0.23, -0.11, 0.31])
        xi = DeformationField.translation(small_sphere.grid, w)
        out = sd.d_solution_routeA(
            small_sphere, material, wave, xi, dirs, sol=small_solution
        )
        ke = material.kappa_e
        F = solver.far_field(small_solution, dirs)
        pred = 1j * ke * ((wave.d @ w) - (dirs @ w))[:, None] * F
        assert rel(out.dE_far, pred) < 1e-6

    def test_tangential_field_gives_zero_transmission_data(
        self, small_solution
    ):
        # A tangential deformation does not move the surface set at first
        # order: the derived transmission data vanishes identically.
        S = small_solution.surface
        g = S.grid
        coef = np.zeros((3, g.ncoef(g.Lmax)))
        coef[2, 3] = 0.2  # generates xi = c * e_z-ish; project off the normal
        xi0 = DeformationField(g, coef)
        tang = xi0.values - (
            np.einsum("ij,ij->i", xi0.values, S.normal)[:, None] * S.normal
        )
        xi = DeformationField.from_node_values(g, tang)
        data = sd.transmission_rhs(small_solution, xi)
        # xi . n is zero to roundoff, and the data is linear in it
        assert np.abs(data.g_D).max() < 1e-12
        assert np.abs(data.g_N).max() < 1e-12

    def test_no_contrast_transmission_data_vanishes(self, small_sphere, wave,
                                                    xi_profile):
        mat = Material(eps_i=1.0)
        sol = solver.solve(small_sphere, mat, wave)
        data = sd.transmission_rhs(sol, xi_profile)
        scale = max(np.abs(data.g_D).max(), np.abs(data.g_N).max(), 1.0)
        assert np.abs(data.g_D).max() < 1e-6
        assert np.abs(data.g_N).max() < 1e-6


class TestRouteAgreement:
    def test_linearity_in_xi(self, small_sphere, material, wave, dirs,
                             small_solution, xi_profile):
        g = small_sphere.grid
        xi2 = DeformationField(g, 2.0 * xi_profile.coef)
        a1 = sd.d_solution_routeA(
            small_sphere, material, wave, xi_profile, dirs, sol=small_solution
        )
        a2 = sd.d_solution_routeA(
            small_sphere, material, wave, xi2, dirs, sol=small_solution
        )
        assert rel(a2.dE_far, 2.0 * a1.dE_far) < 1e-10

    def test_routeA_matches_central_differences(
        self, small_sphere, material, wave, dirs, small_solution, xi_profile
    ):
        a = sd.d_solution_routeA(
            small_sphere, material, wave, xi_profile, dirs, sol=small_solution
        )
        c = sd.d_solution_routeC(
            small_sphere, material, wave, xi_profile, dirs, h=1e-3
        )
        assert rel(a.dE_far, c.dE_far) < 1e-6

    def test_routeB_matches_routeA_radial(
        self, small_sphere, material, wave, dirs, small_solution
    ):
        xi = DeformationField.radial(small_sphere)
        a = sd.d_solution_routeA(
            small_sphere, material, wave, xi, dirs, sol=small_solution
        )
        b = sd.d_solution_routeB(
            small_sphere, material, wave, xi, dirs, sol=small_solution
        )
        assert rel(b.dE_far, a.dE_far) < 1e-6

    def test_routeA_matches_series_radius_derivative(
        self, small_sphere, material, wave, dirs, small_solution
    ):
        xi = DeformationField.radial(small_sphere)
        a = sd.d_solution_routeA(
            small_sphere, material, wave, xi, dirs, sol=small_solution
        )
        ref = oracle.mie_radius_derivative(material, 1.0, wave, dirs)
        assert rel(a.dE_far, ref) < 1e-5


class TestNearFieldDerivative:
    def test_routeA_near_fields_match_central_differences(
        self, small_sphere, material, wave, dirs, small_solution, xi_profile
    ):
        ext = np.array([[2.0, 0.3, -0.4], [-0.3, 2.1, 0.5]])
        itr = np.array([[0.2, 0.1, -0.15]])
        a = sd.d_solution_routeA(
            small_sphere,
            material,
            wave,
            xi_profile,
            dirs,
            sol=small_solution,
            exterior_probes=ext,
            interior_probes=itr,
        )
        h = 1e-3
        from dielshape.geometry import deform

        def fields(t):
            St = deform(small_sphere, xi_profile, t)
            solt = solver.solve(St, material, wave)
            return (
                solver.scattered_field(solt, ext),
                solver.interior_field(solt, itr),
            )

        ep, ip = fields(h)
        em, im = fields(-h)
        fd_ext = (ep - em) / (2 * h)
        fd_int = (ip - im) / (2 * h)
        assert rel(a.dE_near["exterior"], fd_ext) < 1e-5
        assert rel(a.dE_near["interior"], fd_int) < 1e-5


class TestDispatchAndData:
    def test_d_operator_requires_directions_for_far_blocks(self, small_sphere,
                                                           xi_profile):
        with pytest.raises(ValueError):
            sd.d_operator("FarE", small_sphere, 1.3, xi_profile)

    def test_d_operator_unknown_kind(self, small_sphere, xi_profile):
        with pytest.raises(ValueError):
            sd.d_operator("Q", small_sphere, 1.3, xi_profile)

    def test_transmission_data_must_be_tangential(self, small_sphere):
        n = small_sphere.normal
        with pytest.raises(ValueError):
            sd.TransmissionData(small_sphere, n.copy(), 0.0 * n)
