import numpy as np
import pytest
from numpy.testing import assert_allclose

from dielshape import geometry
from dielshape.errors import (
    GridMismatch,
    InadmissibleDeformation,
    NonPositiveRadial,
)
from dielshape.geometry import (
    DeformationField,
    Material,
    build_surface,
    deform,
    helmholtz_pullback,
    helmholtz_pullback_inv,
    projector_pi,
    projector_pi_inv,
    pullback_tau,
    sphere,
)


class TestMaterial:
    def test_wavenumbers_and_contrast(self):
        m = Material(eps_i=2.25, eps_e=1.0, mu_i=1.0, mu_e=1.0, omega=1.0)
        assert_allclose(m.kappa_i, 1.5)
        assert_allclose(m.kappa_e, 1.0)
        assert_allclose(m.rho, m.kappa_i * m.mu_e / (m.kappa_e * m.mu_i), rtol=1e-14)

    def test_positivity_enforced(self):
        with pytest.raises(ValueError):
            Material(eps_i=-1.0)
        with pytest.raises(ValueError):
            Material(omega=0.0)


class TestSurface:
    def test_unit_sphere_node_data(self):
        S = sphere(1.0, 8, 18)
        assert_allclose(S.normal, S.grid.nodes, atol=1e-12)
        assert_allclose(S.jacobian, 1.0, atol=1e-12)
        assert_allclose(S.area, 4.0 * np.pi, rtol=1e-10)

    def test_scaled_sphere(self):
        S = sphere(1.3, 8, 18)
        assert_allclose(S.jacobian, 1.3**2, rtol=1e-10)
        assert_allclose(S.area, 4.0 * np.pi * 1.3**2, rtol=1e-10)

    def test_normals_unit_on_generic_surface(self, wobbly_surface):
        assert_allclose(
            np.linalg.norm(wobbly_surface.normal, axis=1), 1.0, atol=1e-12
        )
        assert (wobbly_surface.jacobian > 0).all()

    def test_wobbly_area_against_fine_quadrature(self):
        coeffs = {"0,0": np.sqrt(4.0 * np.pi), "2,0": 0.3}
        coarse = build_surface(coeffs, 8, 18)
        fine = build_surface(coeffs, 8, 40)
        assert_allclose(coarse.area, fine.area, rtol=1e-10)

    def test_nonpositive_radial_rejected(self):
        with pytest.raises(NonPositiveRadial):
            build_surface({"0,0": 0.1, "1,0": 5.0}, 6, 14)

    def test_probe_evaluation_matches_nodes(self, wobbly_surface):
        S = wobbly_surface
        g = S.grid
        i = 37
        th = np.array([g.theta[i]])
        ph = np.array([g.phi[i]])
        probe = S.at(th, ph)
        assert_allclose(probe["points"][0], S.points[i], atol=1e-10)
        assert_allclose(probe["normal"][0], S.normal[i], atol=1e-10)
        assert_allclose(probe["jacobian"][0], S.jacobian[i], rtol=1e-10)


class TestDeform:
    def test_zero_deformation_is_identity(self, small_sphere):
        xi = DeformationField.radial(small_sphere)
        assert deform(small_sphere, xi, 0.0) is small_sphere

    def test_translation_preserves_geometry(self, small_sphere):
        d = np.array([0.2, -0.1, 0.3])
        xi = DeformationField.translation(small_sphere.grid, d)
        assert_allclose(xi.values, d[None, :] * np.ones((xi.values.shape[0], 1)),
                        atol=1e-12)
        St = deform(small_sphere, xi, 1.0)
        assert_allclose(St.points, small_sphere.points + d[None, :], atol=1e-10)
        assert_allclose(St.normal, small_sphere.normal, atol=1e-12)
        assert_allclose(St.jacobian, small_sphere.jacobian, atol=1e-12)

    def test_radial_deformation_scales_sphere(self, small_sphere):
        xi = DeformationField.radial(small_sphere)
        St = deform(small_sphere, xi, 0.2)
        assert_allclose(St.jacobian, 1.44, rtol=1e-10)

    def test_inadmissible_deformation_rejected(self, small_sphere):
        xi = DeformationField.radial(small_sphere)
        with pytest.raises(InadmissibleDeformation):
            deform(small_sphere, xi, -1.2)  # radius passes through zero

    def test_grid_mismatch_rejected(self, small_sphere):
        other = sphere(1.0, 6, 14)
        xi = DeformationField.radial(other)
        with pytest.raises(GridMismatch):
            deform(small_sphere, xi, 0.1)


class TestPullbacks:
    def test_tau_is_node_relabeling(self, small_sphere):
        d = np.array([0.1, 0.0, 0.05])
        St = deform(
            small_sphere, DeformationField.translation(small_sphere.grid, d), 1.0
        )
        u_r = St.points @ np.array([0.0, 0.0, 1.0])
        assert_allclose(
            pullback_tau(St, u_r),
            (small_sphere.points + d) @ np.array([0.0, 0.0, 1.0]),
            atol=1e-12,
        )

    def test_projector_kills_normal_part(self, small_sphere):
        out = projector_pi(small_sphere, small_sphere, small_sphere.normal)
        assert_allclose(out, 0.0, atol=1e-12)

    def test_projector_roundtrip(self, small_sphere, generic_xi):
        St = deform(small_sphere, generic_xi, 0.1)
        rng = np.random.default_rng(4)
        v = rng.normal(size=St.points.shape)
        v -= np.einsum("ij,ij->i", v, St.normal)[:, None] * St.normal
        back = projector_pi_inv(
            small_sphere, St, projector_pi(small_sphere, St, v)
        )
        assert_allclose(back, v, atol=1e-12)

    def test_helmholtz_pullback_roundtrip(self, small_sphere, generic_xi):
        from dielshape.surfcalc import HelmholtzDensity

        St = deform(small_sphere, generic_xi, 0.1)
        rng = np.random.default_rng(5)
        nc = small_sphere.grid.ncoef(small_sphere.grid.L)
        j = HelmholtzDensity(St, rng.normal(size=nc), rng.normal(size=nc))
        back = helmholtz_pullback_inv(
            small_sphere, St, helmholtz_pullback(small_sphere, St, j)
        )
        assert_allclose(back.p_coeffs, j.p_coeffs, atol=1e-12)
        assert_allclose(back.q_coeffs, j.q_coeffs, atol=1e-12)
        assert back.surface is St
