"""Reference-sphere quadrature grid and discrete spherical-harmonic transforms.

The grid is a tensor product of Gauss-Legendre nodes in cos(theta) (``nquad``
points) with a uniform azimuthal rule (``2*nquad`` points).  With
``Lmax = nquad - 1`` the rule integrates products of two harmonics of degree
<= Lmax exactly, which is what both the discrete transform and the singular
product quadrature need.
"""

from __future__ import annotations

import numpy as np

from . import sh
from .errors import ResolutionTooLow

__all__ = ["ReferenceGrid"]


class ReferenceGrid:
    """Quadrature nodes, weights and spectral transform data on S^2.

    Parameters
    ----------
    L : int
        Spectral truncation degree for densities / Helmholtz potentials.
    nquad : int
        Number of Gauss-Legendre polar nodes; must satisfy nquad >= 2L+2.
    """

    _cache: dict = {}

    def __init__(self, L: int, nquad: int):
        if L < 2:
            raise ValueError("spectral truncation degree L must be >= 2")
        if nquad < 2 * L + 2:
            raise ResolutionTooLow(
                f"nquad={nquad} cannot resolve degree-2L products; need >= {2 * L + 2}"
            )
        self.L = int(L)
        self.nquad = int(nquad)
        self.ntheta = int(nquad)
        self.nphi = 2 * int(nquad)
        self.Lmax = self.ntheta - 1

        xg, wg = np.polynomial.legendre.leggauss(self.ntheta)
        # descending in cos(theta) = ascending in theta
        order = np.argsort(-xg)
        xg, wg = xg[order], wg[order]
        self.theta_1d = np.arccos(xg)
        self.phi_1d = 2.0 * np.pi * np.arange(self.nphi) / self.nphi

        th, ph = np.meshgrid(self.theta_1d, self.phi_1d, indexing="ij")
        self.theta = th.ravel()
        self.phi = ph.ravel()
        self.nnodes = self.theta.size
        w2d = np.outer(wg, np.full(self.nphi, 2.0 * np.pi / self.nphi))
        self.weights = w2d.ravel()

        st, ct = np.sin(self.theta), np.cos(self.theta)
        sp, cp = np.sin(self.phi), np.cos(self.phi)
        self.nodes = np.stack([st * cp, st * sp, ct], axis=1)
        # local orthonormal frame on S^2 (nodes exclude the poles)
        self.e_theta = np.stack([ct * cp, ct * sp, -st], axis=1)
        self.e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)

        Y, Yth, Yph = sh.sh_basis(self.Lmax, self.theta, self.phi, derivatives=True)
        self.Y = Y
        self.Yth = Yth
        self.Yph = Yph
        # analysis: c_k = sum_i w_i Y_k(x_i) f(x_i)
        self.analysis_full = (self.weights[:, None] * Y).T
        self.degrees, self.orders = sh.degree_order_arrays(self.Lmax)
        self._dtheta = None
        self._dphi = None
        self._singular = None

    # -- construction ----------------------------------------------------
    @classmethod
    def get(cls, L: int, nquad: int) -> "ReferenceGrid":
        """Memoized constructor (grids are immutable and expensive)."""
        key = (int(L), int(nquad))
        if key not in cls._cache:
            cls._cache[key] = cls(L, nquad)
        return cls._cache[key]

    # -- transforms ------------------------------------------------------
    def ncoef(self, L: int | None = None) -> int:
        return sh.num_coeffs(self.L if L is None else L)

    def analyze(self, f: np.ndarray, L: int | None = None) -> np.ndarray:
        """Spherical-harmonic coefficients of node values, degrees <= L."""
        nc = self.ncoef(L)
        return np.tensordot(self.analysis_full[:nc], f, axes=(1, 0))

    def synthesize(self, c: np.ndarray, deriv: str | None = None) -> np.ndarray:
        """Node values (or an angular derivative) from coefficients."""
        nc = c.shape[0]
        basis = {None: self.Y, "theta": self.Yth, "phi": self.Yph}[deriv]
        return np.tensordot(basis[:, :nc], c, axes=(1, 0))

    @property
    def dtheta_matrix(self) -> np.ndarray:
        """Dense spectral d/dtheta matrix on node values."""
        if self._dtheta is None:
            self._dtheta = self.Yth @ self.analysis_full
        return self._dtheta

    @property
    def dphi_matrix(self) -> np.ndarray:
        if self._dphi is None:
            self._dphi = self.Yph @ self.analysis_full
        return self._dphi

    def dtheta(self, f: np.ndarray) -> np.ndarray:
        return np.tensordot(self.dtheta_matrix, f, axes=(1, 0))

    def dphi(self, f: np.ndarray) -> np.ndarray:
        return np.tensordot(self.dphi_matrix, f, axes=(1, 0))

    # -- singular product quadrature -------------------------------------
    @property
    def singular_weights(self) -> np.ndarray:
        """Matrix B with  sum_j B[i,j] f(y_j)  ~  int f(y)/(4 pi |x_i - y|) ds(y).

        Exact whenever f is a spherical harmonic of degree <= Lmax, via the
        Legendre expansion 1/|x-y| = sum_n P_n(x.y) on the unit sphere and the
        addition theorem; equivalently B = Y diag(1/(2n+1)) Y^T W.
        """
        if self._singular is None:
            scale = 1.0 / (2.0 * self.degrees + 1.0)
            self._singular = (self.Y * scale) @ self.analysis_full
        return self._singular

    def basis_at(self, theta, phi, derivatives: bool = False):
        """Evaluate the full basis (degree <= Lmax) at arbitrary points."""
        return sh.sh_basis(self.Lmax, theta, phi, derivatives=derivatives)

    def mean_zero_mask(self, L: int | None = None) -> np.ndarray:
        """Boolean mask selecting degrees 1..L among coefficients of degree <= L."""
        nc = self.ncoef(L)
        return self.degrees[:nc] >= 1

    def __repr__(self):
        return f"ReferenceGrid(L={self.L}, nquad={self.nquad})"
