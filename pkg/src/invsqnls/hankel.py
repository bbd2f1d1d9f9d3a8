"""Discrete Hankel transform of real order on a finite radial domain.

The grid collocates at scaled Bessel zeros r_m = j_m R / j_{N+1} and the
spectral nodes rho_m = j_m / R, with the Fourier-Bessel quadrature
weights. The resulting dense transform pair is quasi-orthogonal: for
fields that are smooth and small near r = R the round trip and the
weighted Parseval identity hold to ~1e-11, and at order 1/2 the kernel
reduces to the discrete sine transform, where the pair is exactly
orthogonal.

The physical weights integrate against the sector measure r dr on
[0, R]; callers that need the full n-dimensional volume element attach
their own r^{n-2} and surface factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .specfun import bessel_j, bessel_zeros

__all__ = ["RadialGrid", "RadialField", "SpectralField", "make_grid",
           "dht_forward", "dht_inverse", "hankel_quadrature",
           "reduce_radial", "lift_radial"]


class GridError(ValueError):
    """Invalid grid construction or mismatched grid usage."""


@dataclass(frozen=True)
class RadialGrid:
    """Bessel-zero collocation grid of order nu on [0, R]."""

    nu: float
    size: int
    radius: float
    zeros: np.ndarray          # j_1 .. j_{N+1}
    nodes: np.ndarray          # r_m, length N
    rho: np.ndarray            # spectral nodes j_m / R
    weights: np.ndarray        # quadrature weights for f -> int f r dr
    spectral_weights: np.ndarray
    kernel: np.ndarray         # J_nu(rho_k r_m), symmetric N x N
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def cutoff(self) -> float:
        """j_{nu, N+1}, the truncation zero defining the node scaling."""
        return float(self.zeros[-1])

    def cross_kernel(self, nu_out: float) -> np.ndarray:
        """J_{nu_out}(rho_k r_m) on this grid's nodes, cached per order."""
        key = float(nu_out)
        mat = self._cache.get(key)
        if mat is None:
            if key == self.nu:
                mat = self.kernel
            else:
                mat = bessel_j(key, np.outer(self.zeros[:-1], self.zeros[:-1])
                               / self.cutoff)
            self._cache[key] = mat
        return mat


@dataclass(frozen=True)
class RadialField:
    """Complex samples of a sector field at the grid nodes."""

    grid: RadialGrid
    values: np.ndarray
    sector: int = 0
    dim: int = 3

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.size,):
            raise GridError(f"field length {v.shape} does not match grid "
                            f"size {self.grid.size}")
        if not np.all(np.isfinite(v.view(float))):
            raise GridError("field contains non-finite samples")
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "RadialField":
        return RadialField(self.grid, values, self.sector, self.dim)


@dataclass(frozen=True)
class SpectralField:
    """Complex coefficients at the grid's spectral nodes."""

    grid: RadialGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.size,):
            raise GridError(f"coefficient length {c.shape} does not match "
                            f"grid size {self.grid.size}")
        if not np.all(np.isfinite(c.view(float))):
            raise GridError("spectrum contains non-finite coefficients")
        object.__setattr__(self, "coeffs", c)


def make_grid(nu: float, N: int, R: float) -> RadialGrid:
    """Build the order-nu DHT grid with N modes on [0, R].

    Nodes, spectral nodes, and both weight families come from the first
    N+1 zeros of J_nu; the dense symmetric kernel J_nu(rho_k r_m) is
    precomputed once.
    """
    nu = float(nu)
    N = int(N)
    R = float(R)
    if N < 8:
        raise GridError("make_grid requires N >= 8")
    if not (R > 0.0 and np.isfinite(R)):
        raise GridError("make_grid requires R > 0")
    if not (nu >= 0.0 and np.isfinite(nu)):
        raise GridError("make_grid requires nu >= 0")
    jz = bessel_zeros(nu, N + 1)
    jcut = jz[-1]
    jn = jz[:-1]
    nodes = jn * (R / jcut)
    rho = jn / R
    jnext = bessel_j(nu + 1.0, jn)
    weights = 2.0 * R * R / (jcut * jcut * jnext * jnext)
    spectral_weights = 2.0 / (R * R * jnext * jnext)
    kernel = bessel_j(nu, np.outer(jn, jn) / jcut)
    return RadialGrid(nu=nu, size=N, radius=R, zeros=jz, nodes=nodes,
                      rho=rho, weights=weights,
                      spectral_weights=spectral_weights, kernel=kernel)


def dht_forward(f: RadialField) -> SpectralField:
    """Forward transform: F_k = sum_m w_m f(r_m) J_nu(rho_k r_m)."""
    g = f.grid
    return SpectralField(g, g.kernel @ (g.weights * f.values))


def reduce_radial(u: RadialField) -> RadialField:
    """Map physical samples u(r) to the sector field r^{(dim-2)/2} u(r).

    The reduced field is the one the order-nu transform diagonalizes;
    its r dr norm carries the L^2(r^{n-1} dr) norm of u.
    """
    return u.with_values(u.grid.nodes ** ((u.dim - 2) / 2.0) * u.values)


def lift_radial(f: RadialField) -> RadialField:
    """Inverse of reduce_radial: recover u(r) = r^{-(dim-2)/2} f(r)."""
    return f.with_values(f.values / f.grid.nodes ** ((f.dim - 2) / 2.0))


def dht_inverse(F: SpectralField) -> RadialField:
    """Inverse transform: f(r_m) = sum_k what_k F_k J_nu(rho_k r_m)."""
    g = F.grid
    return RadialField(g, g.kernel @ (g.spectral_weights * F.coeffs))


def hankel_quadrature(f: RadialField, nu_out: float, rho_targets) -> np.ndarray:
    """Order-nu_out Hankel transform of f at arbitrary spectral targets.

    Direct quadrature sum_m w_m f(r_m) J_{nu_out}(rho r_m) using the
    grid's weights.  Superalgebraically accurate when nu_out equals the
    grid order and f lies in the grid's spectral class (r^nu times a
    smooth even profile, decayed before r = R); a mismatched order
    changes the origin behavior of the integrand and degrades the rule
    to algebraic convergence, roughly order 2 nu + 1 in the node count.
    """
    rho_targets = np.asarray(rho_targets, dtype=float)
    if rho_targets.size and np.any(rho_targets < 0.0):
        raise GridError("hankel_quadrature requires rho >= 0")
    g = f.grid
    kern = bessel_j(float(nu_out), np.outer(rho_targets, g.nodes))
    return kern @ (g.weights * f.values)
