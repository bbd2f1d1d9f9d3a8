"""Model of the inverse-square Schrodinger operator and its derived constants.

The operator -Laplacian + a/|x|^2 on R^n acts sector by sector: after the
reduction f(r) = r^{(n-2)/2} u(r), the k-th spherical sector becomes a
half-line Bessel operator whose diagonalizing transform is the order-nu_k
Hankel transform with

    nu_k = sqrt((k + (n-2)/2)^2 + a).

The positive square root fixes the Friedrichs realization; no other
self-adjoint extension is modeled.  Spectral multipliers, fractional powers,
and resolvents act diagonally on the transform side, where the operator's
eigenvalue at spectral node rho is rho^2.

Alongside the calculus this module carries the model's derived constants:
the coupling threshold lambda_n, the near-origin exponent shift sigma(a),
the Lebesgue window (r0, r1) on which the fractional calculus is equivalent
to the flat one, the sharp Hardy and kinetic-lower-bound constants, and the
exponent plans used by the local well-posedness iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hankel import RadialField, SpectralField, dht_forward, dht_inverse


class ModelError(ValueError):
    """Raised for parameters outside the operator's validity region."""


class Unbounded:
    """Marker for an infinite upper Lebesgue endpoint."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unbounded"


UNBOUNDED = Unbounded()


def _check_dim(n):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 3:
        raise ModelError(f"dimension must be an integer >= 3, got {n!r}")


def lambda_n(n: int) -> float:
    """Coupling threshold (n-2)^2/4; the form is unbounded below past -lambda_n."""
    _check_dim(n)
    return (n - 2) ** 2 / 4.0


@dataclass(frozen=True)
class ModelParams:
    """Dimension, inverse-square coupling, and nonlinearity exponent.

    Validity requires a > -lambda_n and p > 1.  The two derived flags
    record whether p sits in the intercritical window and whether the
    coupling is strong enough for the scattering mechanism.
    """

    n: int
    a: float
    p: float

    def __post_init__(self):
        _check_dim(self.n)
        lam = lambda_n(self.n)
        if not self.a > -lam:
            raise ModelError(
                f"coupling a={self.a} violates a > -(n-2)^2/4 = {-lam}; the "
                "quadratic form is unbounded below at or past that threshold")
        if not self.p > 1.0:
            raise ModelError(f"nonlinearity exponent p={self.p} must exceed 1")

    @property
    def lam(self) -> float:
        return lambda_n(self.n)

    @property
    def intercritical(self) -> bool:
        # mass-supercritical, energy-subcritical window
        return 1.0 + 4.0 / self.n < self.p < 1.0 + 4.0 / (self.n - 2)

    @property
    def scattering_condition(self) -> bool:
        if self.n == 3:
            return self.a >= 0.0
        return self.a >= 4.0 / (self.p + 1.0) ** 2 - self.lam


@dataclass(frozen=True)
class SectorSpec:
    """One spherical sector: index k and its transform order nu_k."""

    k: int
    nu: float

    @classmethod
    def from_params(cls, params: ModelParams, k: int) -> "SectorSpec":
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ModelError(f"sector index must be a nonnegative integer, got {k!r}")
        base = k + (params.n - 2) / 2.0
        radicand = base * base + params.a
        # a > -lambda_n keeps this positive for every k >= 0
        if radicand <= 0.0:
            raise ModelError(f"sector k={k} has nonpositive order radicand "
                             f"{radicand}")
        # positive root: Friedrichs branch
        return cls(int(k), math.sqrt(radicand))


def sigma_a(params: ModelParams) -> float:
    """Near-origin exponent shift (n-2)/2 - sqrt((n-2)^2 + 4a)/2.

    Nonpositive for a >= 0 and in (0, (n-2)/2) for negative coupling; the
    ground-sector eigenfunctions behave like r^{-sigma} near the origin
    relative to the flat case.
    """
    n, a = params.n, params.a
    return (n - 2) / 2.0 - math.sqrt((n - 2) ** 2 + 4.0 * a) / 2.0


def sobolev_window(params: ModelParams):
    """Lebesgue window (r0, r1) of flat/model norm equivalence.

    r0 = 2n/min{n+2+sqrt((n-2)^2+4a), 2n} and r1 = 2n/max{n-sqrt(...), 0},
    with the upper endpoint returned as UNBOUNDED when the max hits zero
    (a >= n-1).
    """
    n, a = params.n, params.a
    root = math.sqrt((n - 2) ** 2 + 4.0 * a)
    r0 = 2.0 * n / min(n + 2.0 + root, 2.0 * n)
    denom = max(n - root, 0.0)
    r1 = UNBOUNDED if denom == 0.0 else 2.0 * n / denom
    return r0, r1


def admissible(q: float, r: float, n: int) -> bool:
    """Schrodinger-admissible pair test: 2/q = n(1/2 - 1/r), q, r >= 2.

    The single excluded endpoint (q, r, n) = (2, inf, 2) returns False.
    Accepts r = math.inf.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ModelError(f"dimension must be a positive integer, got {n!r}")
    if q < 2.0 or r < 2.0:
        return False
    if q == 2.0 and math.isinf(r) and n == 2:
        return False
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    return abs(2.0 / q - n * (0.5 - inv_r)) <= 1e-12


REGIME_NONNEGATIVE = "nonnegative"
REGIME_MILD = "mildly-negative"
REGIME_DEEP = "deeply-negative"


@dataclass(frozen=True)
class ExponentPlan:
    """Spacetime Lebesgue pair for the contraction scheme plus context.

    q, r are the exponents of the iteration space L^q_t L^r_x; regime tags
    which coupling branch produced them; (r0, r1) is the equivalence window
    the pair must respect.
    """

    q: float
    r: float
    regime: str
    r0: float
    r1: object


def lwp_exponents(params: ModelParams, margin: float = 0.01) -> ExponentPlan:
    """Exponent pair for the local contraction argument.

    For a >= 0 the pair is (4(p+1)/((n-2)(p-1)), n(p+1)/(n+p-1)).  For
    negative coupling the spatial exponent comes from a dual endpoint
    rt' pushed into the open equivalence window by `margin`:

        rt' = 2n/(n+2) + margin          if min{1-lambda_n, 0} <= a < 0,
        rt' = r1' + margin               if -4p lambda_n/(p+1)^2 < a
                                            < min{1-lambda_n, 0},

    where 1/r1' = (n + sqrt((n-2)^2+4a))/(2n), then
    1/r = (1/p)(1/rt' + (p-1)/n) and q is fixed by admissibility.
    Couplings at or below the floor -4p lambda_n/(p+1)^2 have no plan.
    """
    n, a, p = params.n, params.a, params.p
    if not params.intercritical:
        raise ModelError(
            f"p={p} outside the intercritical window "
            f"({1.0 + 4.0 / n:.6g}, {1.0 + 4.0 / (n - 2):.6g}); no "
            "contraction plan is defined there")
    if not margin > 0.0:
        raise ModelError(f"exponent margin must be positive, got {margin}")
    r0, r1 = sobolev_window(params)
    lam = params.lam
    if a >= 0.0:
        q = 4.0 * (p + 1.0) / ((n - 2) * (p - 1.0))
        r = n * (p + 1.0) / (n + p - 1.0)
        regime = REGIME_NONNEGATIVE
    else:
        floor = -4.0 * lam * p / (p + 1.0) ** 2
        mild_edge = min(1.0 - lam, 0.0)
        if a >= mild_edge:
            rt_prime = 2.0 * n / (n + 2.0) + margin
            regime = REGIME_MILD
        elif a > floor:
            inv_r1p = (n + math.sqrt((n - 2) ** 2 + 4.0 * a)) / (2.0 * n)
            rt_prime = 1.0 / inv_r1p + margin
            regime = REGIME_DEEP
        else:
            raise ModelError(
                f"coupling a={a} at or below the contraction floor "
                f"-4p*lambda_n/(p+1)^2 = {floor:.6g}; the local iteration "
                "space is not available there")
        inv_r = (1.0 / p) * (1.0 / rt_prime + (p - 1.0) / n)
        r = 1.0 / inv_r
        q = 2.0 / (n * (0.5 - inv_r))
    if not admissible(q, r, n):
        raise ModelError(f"derived pair (q={q}, r={r}) is not admissible in "
                         f"dimension {n}; margin {margin} too large")
    return ExponentPlan(q=q, r=r, regime=regime, r0=r0, r1=r1)


def hardy_constant(n: int) -> float:
    """Best constant 4/(n-2)^2 in the Hardy bound of the potential term."""
    _check_dim(n)
    return 4.0 / (n - 2) ** 2


def kinetic_bound_constant(params: ModelParams) -> float:
    """Constant c with kinetic energy <= c * conserved energy.

    c = 2/min{1, 1 + 4a/(n-2)^2}; equals 2 for a >= 0 and grows as the
    coupling approaches -lambda_n.
    """
    n, a = params.n, params.a
    return 2.0 / min(1.0, 1.0 + 4.0 * a / (n - 2) ** 2)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n: 2 pi^{n/2} / Gamma(n/2)."""
    _check_dim(n)
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def apply_multiplier(f: RadialField, phi) -> RadialField:
    """Diagonal spectral calculus: transform, scale by phi(rho^2), invert.

    phi receives the operator eigenvalues rho_k^2 on the grid's spectral
    nodes and may return real or complex values; the result keeps the
    field's sector metadata.  Exactly linear in f.
    """
    g = f.grid
    lam = g.rho ** 2
    vals = np.broadcast_to(np.asarray(phi(lam), dtype=complex), lam.shape)
    if not np.all(np.isfinite(vals.view(float))):
        raise ModelError("multiplier produced non-finite values on the "
                         "spectral nodes")
    spectrum = dht_forward(f)
    out = dht_inverse(SpectralField(g, vals * spectrum.coeffs))
    return f.with_values(out.values)


def fractional_power(f: RadialField, s: float) -> RadialField:
    """Fractional power of the operator: multiplier rho^s, s in [-2, 2].

    s = 2 applies the operator itself, s = -2 its inverse on the discrete
    spectrum, s = 1 the square root entering the energy norm.
    """
    if not -2.0 <= s <= 2.0:
        raise ModelError(f"fractional exponent s={s} outside [-2, 2]")
    return apply_multiplier(f, lambda lam: lam ** (s / 2.0))


def resolvent(f: RadialField, alpha: complex) -> RadialField:
    """Resolvent (operator - alpha)^{-1} via the multiplier 1/(rho^2 - alpha).

    alpha must stand off the nonnegative real axis (the spectrum) by more
    than 1e-6 times the grid's largest eigenvalue.
    """
    alpha = complex(alpha)
    dist = abs(alpha.imag) if alpha.real >= 0.0 else abs(alpha)
    standoff = 1e-6 * float(f.grid.rho[-1]) ** 2
    if dist <= standoff:
        raise ModelError(
            f"alpha={alpha} is within {standoff:.3g} of the spectrum "
            "[0, inf); add an imaginary offset to alpha to regularize")
    return apply_multiplier(f, lambda lam: 1.0 / (lam - alpha))
