"""Single-source integral equation for plane-wave scattering by a dielectric.

The scattered field is sought as the combined layer potential

    E_s = -Psi_E^(k_e) j - i eta Psi_M^(k_e) (C0 j),

where j is a tangential density in Helmholtz coordinates and C0 the static
coupling of :func:`dielshape.bio.static_block`.  With the traces

    gamma_D u = u ^ n,        gamma_N^(k) u = (1/k) (curl u) ^ n,

the exterior traces of the ansatz are -L j and -N j with

    L = C_e + i eta (-1/2 + M_e) C0,      N = (-1/2 + M_e) + i eta C_e C0,

and enforcing the dielectric transmission conditions through the interior
Calderon identity yields the square system

    [ C_i N + rho (-1/2 + M_i) L ] j = C_i g_N + rho (-1/2 + M_i) g_D,

with g_D, g_N the incident traces and rho = k_i mu_e / (k_e mu_i).  The
interior field is recovered from the representation
E_i = Psi_E^(k_i) t_N + Psi_M^(k_i) t_D with the interior Cauchy data
t_D = g_D - L j and t_N = (g_N - N j)/rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularSystem, NoConvergence
from .geometry import Surface, Material
from . import bio
from . import surfcalc as sc

__all__ = [
    "PlaneWave",
    "incident_traces",
    "SystemOperators",
    "build_system",
    "ScatteringSolution",
    "solve",
    "far_field",
    "scattered_field",
    "interior_field",
]


@dataclass(frozen=True)
class PlaneWave:
    """Linearly polarized incident plane wave p exp(i k d.x)."""

    direction: tuple = (0.0, 0.0, 1.0)
    polarization: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        p = np.asarray(self.polarization, dtype=float)
        d = d / np.linalg.norm(d)
        if abs(p @ d) > 1e-12 * np.linalg.norm(p):
            raise ValueError("polarization must be orthogonal to the direction")
        object.__setattr__(self, "direction", tuple(d))
        object.__setattr__(self, "polarization", tuple(p))

    @property
    def d(self) -> np.ndarray:
        return np.asarray(self.direction)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.polarization)

    def field(self, kappa: float, points: np.ndarray) -> np.ndarray:
        phase = np.exp(1j * kappa * (points @ self.d))
        return self.p[None, :] * phase[:, None]

    def curl(self, kappa: float, points: np.ndarray) -> np.ndarray:
        return 1j * kappa * np.cross(self.d, self.field(kappa, points))


def incident_traces(S: Surface, mat: Material, wave: PlaneWave):
    """Helmholtz-decomposed traces (g_D, g_N) of the incident field."""
    ke = mat.kappa_e
    E = wave.field(ke, S.points)
    n = S.normal
    gD = np.cross(E, n)
    gN = (1.0 / ke) * np.cross(wave.curl(ke, S.points), n)
    return sc.helmholtz_decompose(S, gD), sc.helmholtz_decompose(S, gN)


@dataclass
class SystemOperators:
    """Assembled coefficient-space matrices of the scattering system."""

    surface: Surface
    material: Material
    Ce: np.ndarray
    Me: np.ndarray
    Ci: np.ndarray
    Mi: np.ndarray
    C0: np.ndarray
    L: np.ndarray = field(init=False)
    N: np.ndarray = field(init=False)
    S: np.ndarray = field(init=False)

    def __post_init__(self):
        eta = self.material.eta
        rho = self.material.rho
        K2 = self.Ce.shape[0]
        I = np.eye(K2)
        half_Me = -0.5 * I + self.Me
        half_Mi = -0.5 * I + self.Mi
        self.L = self.Ce + 1j * eta * half_Me @ self.C0
        self.N = half_Me + 1j * eta * self.Ce @ self.C0
        self.S = self.Ci @ self.N + rho * half_Mi @ self.L

    def rhs(self, gD: np.ndarray, gN: np.ndarray) -> np.ndarray:
        """Right-hand side for stacked incident trace coefficients."""
        rho = self.material.rho
        K2 = self.Ci.shape[0]
        half_Mi = -0.5 * np.eye(K2) + self.Mi
        return self.Ci @ gN + rho * (half_Mi @ gD)


def build_system(S: Surface, mat: Material) -> SystemOperators:
    """Assemble all boundary operator blocks for a surface and material."""
    ke, ki = mat.kappa_e, mat.kappa_i
    return SystemOperators(
        surface=S,
        material=mat,
        Ce=bio.electric_block(S, ke),
        Me=bio.magnetic_block(S, ke),
        Ci=bio.electric_block(S, ki),
        Mi=bio.magnetic_block(S, ki),
        C0=bio.static_block(S),
    )


@dataclass
class ScatteringSolution:
    """Solved density and derived traces for one incident wave."""

    surface: Surface
    material: Material
    wave: PlaneWave
    ops: SystemOperators
    j: np.ndarray          # stacked density coefficients
    gD: np.ndarray         # stacked incident Dirichlet trace
    gN: np.ndarray         # stacked incident Neumann trace
    residual: float

    @property
    def tD(self) -> np.ndarray:
        """Interior Dirichlet data gamma_D E_i (stacked coefficients)."""
        return self.gD - self.ops.L @ self.j

    @property
    def tN(self) -> np.ndarray:
        """Interior Neumann data gamma_N^(k_i) E_i (stacked coefficients)."""
        return (self.gN - self.ops.N @ self.j) / self.material.rho

    def density(self) -> sc.HelmholtzDensity:
        return sc.HelmholtzDensity.from_stacked(self.surface, self.j)


def solve(
    S: Surface,
    mat: Material,
    wave: PlaneWave,
    ops: SystemOperators | None = None,
    residual_tol: float = 1e-8,
) -> ScatteringSolution:
    """Solve the single-source system for one incident plane wave."""
    if ops is None:
        ops = build_system(S, mat)
    dD, dN = incident_traces(S, mat, wave)
    gD = dD.stacked()
    gN = dN.stacked()
    b = ops.rhs(gD, gN)
    try:
        j = np.linalg.solve(ops.S, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"direct solve failed: {exc}") from exc
    res = np.linalg.norm(ops.S @ j - b) / max(np.linalg.norm(b), 1e-300)
    if res > residual_tol:
        raise NoConvergence(f"relative residual {res:.3e} exceeds {residual_tol:.1e}")
    return ScatteringSolution(
        surface=S, material=mat, wave=wave, ops=ops, j=j, gD=gD, gN=gN, residual=res
    )


# -- evaluation -----------------------------------------------------------
def far_field(sol: ScatteringSolution, directions: np.ndarray) -> np.ndarray:
    """Scattered far field E_inf at unit directions, shape (ndir, 3).

    Normalized by E_s ~ exp(i k r) / (4 pi r) E_inf(xhat).
    """
    S = sol.surface
    ke = sol.material.kappa_e
    eta = sol.material.eta
    FE = bio.far_field_block(S, ke, directions, "electric")
    FM = bio.far_field_block(S, ke, directions, "magnetic")
    return -(FE @ sol.j) - 1j * eta * (FM @ (sol.ops.C0 @ sol.j))


def scattered_field(sol: ScatteringSolution, targets: np.ndarray) -> np.ndarray:
    """E_s at exterior points (smooth-rule evaluation)."""
    S = sol.surface
    ke = sol.material.kappa_e
    eta = sol.material.eta
    jden = sc.HelmholtzDensity.from_stacked(S, sol.j)
    aden = sc.HelmholtzDensity.from_stacked(S, sol.ops.C0 @ sol.j)
    out = -bio.electric_potential(S, ke, jden, targets)
    out -= 1j * eta * bio.magnetic_potential(S, ke, aden, targets)
    return out


def interior_field(sol: ScatteringSolution, targets: np.ndarray) -> np.ndarray:
    """E_i at interior points from the interior representation."""
    S = sol.surface
    ki = sol.material.kappa_i
    dN = sc.HelmholtzDensity.from_stacked(S, sol.tN)
    dD = sc.HelmholtzDensity.from_stacked(S, sol.tD)
    return bio.electric_potential(S, ki, dN, targets) + bio.magnetic_potential(
        S, ki, dD, targets
    )
