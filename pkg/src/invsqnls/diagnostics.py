"""Functionals of radial fields and trajectories.

Everything the experiments measure lives here: mass and energy with their
conservation bookkeeping, the kinetic-energy bound margin, Hardy quotients
(grid functionals plus the closed-form near-optimizer sweep), space-time
Lebesgue norms over snapshot windows, the bilinear virial action J and its
time rate, the weighted decay integral with inverse-cube weight, and the
two Sobolev comparison ratios (fractional-power equivalence and resolvent
mapping).

Conventions.  Fields hold physical samples u(r_m); every integral runs
through the sector reduction f = r^{(dim-2)/2} u so the grid's r dr
quadrature applies, and full-space integrals carry the sphere surface
factor.  Fractional flat derivatives |grad|^s use the order-(dim-2)/2
kernel on the same grid (no regridding); model powers use the grid's own
order.  Quadratic spectral sums use the grid's Parseval pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hankel import RadialField, dht_forward, reduce_radial, lift_radial
from .operators import (ModelParams, fractional_power, resolvent,
                        kinetic_bound_constant, lambda_n, sphere_area)
from .specfun import gamma_fn, gauss_legendre


class DiagnosticsError(ValueError):
    """Raised for functional requests outside their validity region."""


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar functionals of one snapshot.

    kinetic + potential equals the spectral quadratic form of the grid's
    operator; nonlinear is normalized so that
    energy = (kinetic + potential + nonlinear) / 2.
    """

    t: float
    mass: float
    energy: float
    kinetic: float
    potential: float
    nonlinear: float
    sobolev_half: float
    sup_norm: float
    boundary_mass: float


@dataclass(frozen=True)
class NormRequest:
    """Space-time norm specification L^q_t L^r_x over [t0, t1].

    s > 0 inserts a fractional derivative per snapshot: the flat one
    |grad|^s when flat is true, else the model power of the grid's
    operator.
    """

    q: float
    r: float
    t0: float
    t1: float
    s: float = 0.0
    flat: bool = True

    def __post_init__(self):
        if self.q < 1.0 or self.r < 1.0:
            raise DiagnosticsError("space-time exponents must be >= 1, got "
                                   f"(q={self.q}, r={self.r})")
        if self.t1 < self.t0:
            raise DiagnosticsError(f"empty window [{self.t0}, {self.t1}]")


class WeightedDecay(NamedTuple):
    integral: float
    ratio: float


# ---------------------------------------------------------------------------
# single-snapshot functionals

def mass(f: RadialField) -> float:
    """Full-space squared L^2 norm, by radial quadrature."""
    g = reduce_radial(f)
    return sphere_area(f.dim) * float(
        np.sum(f.grid.weights * np.abs(g.values) ** 2))


def lebesgue_norm(f: RadialField, r) -> float:
    """Full-space L^r norm of the field; r = inf gives the sup norm."""
    if math.isinf(r):
        return float(np.max(np.abs(f.values))) if f.grid.size else 0.0
    if r < 1.0:
        raise DiagnosticsError(f"Lebesgue exponent must be >= 1, got {r}")
    dens = f.grid.weights * np.abs(f.values) ** r \
        * f.grid.nodes ** (f.dim - 2)
    return float((sphere_area(f.dim) * np.sum(dens)) ** (1.0 / r))


def _spectral_quadratic(f: RadialField) -> float:
    # <g, (operator) g> via the grid's Parseval pair; kinetic + potential
    g = reduce_radial(f)
    F = dht_forward(g)
    return float(np.sum(f.grid.spectral_weights * f.grid.rho ** 2
                        * np.abs(F.coeffs) ** 2))


def _potential_integral(f: RadialField) -> float:
    # int |u|^2 |x|^{-2} dx without the coupling factor
    dens = f.grid.weights * np.abs(f.values) ** 2 \
        * f.grid.nodes ** (f.dim - 4)
    return float(np.sum(dens))


def energy(f: RadialField, params: ModelParams) -> float:
    """Conserved energy: quadratic part spectrally, nonlinear by quadrature.

    E = (1/2) <u, (operator) u> + 1/(p+1) int |u|^{p+1}.
    """
    omega = sphere_area(f.dim)
    quad = _spectral_quadratic(f)
    nl = float(np.sum(f.grid.weights * np.abs(f.values) ** (params.p + 1.0)
                      * f.grid.nodes ** (f.dim - 2)))
    return omega * (0.5 * quad + nl / (params.p + 1.0))


def boundary_mass_fraction(f: RadialField) -> float:
    """Share of the mass in the outer tenth of the radial domain."""
    g = reduce_radial(f)
    dens = f.grid.weights * np.abs(g.values) ** 2
    total = float(np.sum(dens))
    if total == 0.0:
        return 0.0
    outer = f.grid.nodes >= 0.9 * f.grid.radius
    return float(np.sum(dens[outer])) / total


def _flat_power_values(f: RadialField, s: float) -> np.ndarray:
    # |grad|^s through the order-(dim-2)/2 kernel at the grid's own nodes
    g = reduce_radial(f)
    grid = f.grid
    kern = grid.cross_kernel((f.dim - 2) / 2.0)
    ghat = kern @ (grid.weights * g.values)
    gs = kern @ (grid.spectral_weights * grid.rho ** s * ghat)
    return gs / grid.nodes ** ((f.dim - 2) / 2.0)


def flat_fractional(f: RadialField, s: float) -> RadialField:
    """Flat fractional derivative |grad|^s of a physical field."""
    return f.with_values(_flat_power_values(f, s))


def sobolev_half_norm(f: RadialField) -> float:
    """Flat homogeneous H^{1/2} norm via the order-(dim-2)/2 spectrum."""
    g = reduce_radial(f)
    grid = f.grid
    kern = grid.cross_kernel((f.dim - 2) / 2.0)
    ghat = kern @ (grid.weights * g.values)
    val = sphere_area(f.dim) * float(
        np.sum(grid.spectral_weights * grid.rho * np.abs(ghat) ** 2))
    return math.sqrt(max(val, 0.0))


def make_record(f: RadialField, params: ModelParams, t=0.0) -> DiagnosticsRecord:
    """Assemble the per-snapshot record; see DiagnosticsRecord for fields."""
    omega = sphere_area(f.dim)
    quad = omega * _spectral_quadratic(f)
    potential = params.a * omega * _potential_integral(f)
    kinetic = quad - potential
    nl_int = omega * float(
        np.sum(f.grid.weights * np.abs(f.values) ** (params.p + 1.0)
               * f.grid.nodes ** (f.dim - 2)))
    nonlinear = 2.0 * nl_int / (params.p + 1.0)
    return DiagnosticsRecord(
        t=float(t),
        mass=mass(f),
        energy=0.5 * (quad + nonlinear),
        kinetic=kinetic,
        potential=potential,
        nonlinear=nonlinear,
        sobolev_half=sobolev_half_norm(f),
        sup_norm=float(np.max(np.abs(f.values))),
        boundary_mass=boundary_mass_fraction(f),
    )


def kinetic_check(record: DiagnosticsRecord, params: ModelParams) -> float:
    """Margin c E - kinetic with c the kinetic bound constant.

    Nonnegative up to quadrature noise (tolerance -1e-9 E) for every
    valid coupling; the caller reports the snapshot index on violation.
    """
    c = kinetic_bound_constant(params)
    return c * record.energy - record.kinetic


# ---------------------------------------------------------------------------
# Hardy quotients

def hardy_quotient(f: RadialField, s: float, p_exp: float = 2.0) -> float:
    """Weighted-integral quotient int |u|^p |x|^{-sp} / || |grad|^s u ||_p^p.

    Requires 0 <= s < dim/p_exp.  The s = 1, p_exp = 2 case is bounded by
    the sharp constant 4/(dim-2)^2.
    """
    n = f.dim
    if not 0.0 <= s < n / p_exp:
        raise DiagnosticsError(
            f"weight order s={s} outside [0, n/p) = [0, {n / p_exp})")
    if s == 0.0:
        # both sides coincide term by term
        return 1.0 if np.any(f.values != 0.0) else float("nan")
    numer = sphere_area(n) * float(
        np.sum(f.grid.weights * np.abs(f.values) ** p_exp
               * f.grid.nodes ** (n - 2 - s * p_exp)))
    denom = lebesgue_norm(flat_fractional(f, s), p_exp) ** p_exp
    if denom == 0.0:
        raise DiagnosticsError("degenerate seminorm in Hardy quotient")
    return numer / denom


def hardy_optimizer_quotient(n: int, eps: float) -> float:
    """Closed-form Hardy quotient of the near-optimizer r^{eps-(n-2)/2} e^{-r^2/2}.

    All integrals are Gamma functions, so the value is exact up to the
    gamma evaluation; it increases to the sharp constant 4/(n-2)^2 as
    eps decreases to 0.  This is the instrument for probing sharpness;
    grid quadrature cannot resolve the near-singular optimizers.
    """
    if eps <= 0.0:
        raise DiagnosticsError(f"optimizer exponent must be positive, got {eps}")
    alpha = eps - (n - 2) / 2.0
    numer = gamma_fn(eps)
    denom = alpha * alpha * gamma_fn(eps) - 2.0 * alpha * gamma_fn(1.0 + eps) \
        + gamma_fn(2.0 + eps)
    return float(numer / denom)


# ---------------------------------------------------------------------------
# trajectory functionals

def _unpack(traj):
    if hasattr(traj, "times") and hasattr(traj, "fields"):
        return list(traj.times), list(traj.fields)
    pairs = list(traj)
    return [t for t, _ in pairs], [f for _, f in pairs]


def _window_slice(times, t0, t1):
    idx = [j for j, t in enumerate(times)
           if t0 - 1e-12 <= t <= t1 + 1e-12]
    if not idx:
        raise DiagnosticsError(
            f"window [{t0}, {t1}] contains no snapshots of the trajectory")
    if t0 < times[0] - 1e-12 or t1 > times[-1] + 1e-12:
        raise DiagnosticsError(
            f"window [{t0}, {t1}] extends beyond the trajectory span "
            f"[{times[0]}, {times[-1]}]")
    return idx


def spacetime_norm(traj, req: NormRequest) -> float:
    """Discrete L^q_t L^r_x norm over the request window.

    Spatial norms by radial quadrature per snapshot (with the requested
    fractional derivative), composed in time by the trapezoid rule;
    q = inf takes the supremum instead.
    """
    times, fields = _unpack(traj)
    idx = _window_slice(times, req.t0, req.t1)
    vals = []
    for j in idx:
        u = fields[j]
        if req.s != 0.0:
            if req.flat:
                u = flat_fractional(u, req.s)
            else:
                u = lift_radial(fractional_power(reduce_radial(u), req.s))
        vals.append(lebesgue_norm(u, req.r))
    if math.isinf(req.q):
        return max(vals)
    tt = np.array([times[j] for j in idx])
    vv = np.array(vals, dtype=float)
    if len(idx) == 1:
        return 0.0
    integral = float(np.trapezoid(vv ** req.q, tt))
    return integral ** (1.0 / req.q)


def morawetz_weighted_decay(traj, window, params: ModelParams) -> WeightedDecay:
    """Space-time integral of |u|^2 |x|^{-3} and its decay ratio.

    Valid only for couplings a > 1/4 - lambda_n.  Returns the integral
    over the window together with its ratio to sup_t of the squared flat
    H^{1/2} norm.  A single-snapshot window is weighted by the local
    snapshot spacing.
    """
    gate = 0.25 - lambda_n(params.n)
    if not params.a > gate:
        raise DiagnosticsError(
            f"weighted decay requires a > 1/4 - lambda_n = {gate:.6g}; "
            f"got a = {params.a}. The bilinear estimate does not control "
            "the inverse-cube weight at or below that coupling.")
    t0, t1 = window
    times, fields = _unpack(traj)
    idx = _window_slice(times, t0, t1)
    vals = []
    sup_half = 0.0
    for j in idx:
        f = fields[j]
        dens = f.grid.weights * np.abs(f.values) ** 2 \
            * f.grid.nodes ** (f.dim - 5)
        vals.append(sphere_area(f.dim) * float(np.sum(dens)))
        sup_half = max(sup_half, sobolev_half_norm(f))
    if len(idx) == 1:
        j = idx[0]
        if len(times) > 1:
            k = j + 1 if j + 1 < len(times) else j - 1
            spacing = abs(times[k] - times[j])
        else:
            spacing = 0.0
        integral = spacing * vals[0]
    else:
        tt = np.array([times[j] for j in idx])
        integral = float(np.trapezoid(np.array(vals), tt))
    ratio = integral / sup_half ** 2 if sup_half > 0.0 else 0.0
    return WeightedDecay(integral=integral, ratio=ratio)


# ---------------------------------------------------------------------------
# bilinear virial action

def morawetz_kernel_average(n: int, r, rp):
    """Spherical average of |x - y| over |x| = r, |y| = rp.

    Angular quadrature in the polar angle with the (n-2)-sphere weight;
    the substitution cos(theta) = 1 - 2 v^2 removes the square-root kink
    so the rule converges fast.  Vectorized over r, rp.
    """
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    v, wv = gauss_legendre(160)
    # weight (1 - mu^2)^{(n-3)/2} dmu -> (4 v^2 (1 - v^2))^{(n-3)/2} 4 v dv
    ang = (4.0 * v * v * (1.0 - v * v)) ** ((n - 3) / 2.0) * 4.0 * v
    norm = math.sqrt(math.pi) * math.gamma((n - 1) / 2.0) \
        / math.gamma(n / 2.0)
    diff = (r - rp)[..., None] ** 2
    dist = np.sqrt(diff + 4.0 * (r * rp)[..., None] * v * v)
    return np.sum(dist * (ang * wv), axis=-1) / norm


def _morawetz_table(grid, n: int) -> np.ndarray:
    key = ("virial-kernel", int(n))
    tab = grid._cache.get(key)
    if tab is None:
        rr, pp = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
        tab = morawetz_kernel_average(n, rr, pp)
        grid._cache[key] = tab
    return tab


def morawetz_action(f: RadialField) -> float:
    """Bilinear virial action J = (1/2) <|u|^2, |x| convolved |u|^2>.

    Reduced to a double radial integral against the spherically averaged
    distance kernel; the kernel table is cached on the grid.
    """
    grid = f.grid
    n = f.dim
    tab = _morawetz_table(grid, n)
    dens = grid.weights * np.abs(f.values) ** 2 * grid.nodes ** (n - 2)
    return 0.5 * sphere_area(n) ** 2 * float(dens @ tab @ dens)


def morawetz_action_rate(traj):
    """Centered-difference series M_j = (1/4) dJ/dt at interior snapshots.

    Returns a list of (t_j, M_j); nondecreasing J rate is the monotone
    signature of the defocusing flow.
    """
    times, fields = _unpack(traj)
    jvals = [morawetz_action(f) for f in fields]
    out = []
    for j in range(1, len(times) - 1):
        dt2 = times[j + 1] - times[j - 1]
        out.append((times[j], 0.25 * (jvals[j + 1] - jvals[j - 1]) / dt2))
    return out


# ---------------------------------------------------------------------------
# Sobolev comparison ratios

def sobolev_equivalence_ratio(f: RadialField, s: float, r: float,
                              params: ModelParams) -> float:
    """|| (operator)^{s/2} f ||_r divided by || |grad|^s f ||_r.

    The caller compares r against the equivalence window to label the
    result; at a = 0 the two multipliers coincide and the ratio is 1 to
    quadrature tolerance.
    """
    if not 0.0 <= s <= 1.0:
        raise DiagnosticsError(f"fractional order s={s} outside [0, 1]")
    if s > 0.0 and not 1.0 < r < f.dim / s:
        raise DiagnosticsError(
            f"Lebesgue exponent r={r} outside (1, n/s) = (1, {f.dim / s})")
    if s == 0.0 and not r > 1.0:
        raise DiagnosticsError(f"Lebesgue exponent r={r} must exceed 1")
    model = lift_radial(fractional_power(reduce_radial(f), s))
    flat = flat_fractional(f, s)
    denom = lebesgue_norm(flat, r)
    if denom == 0.0:
        raise DiagnosticsError("degenerate flat seminorm in equivalence ratio")
    return lebesgue_norm(model, r) / denom


def uniform_sobolev_ratio(f: RadialField, alpha: complex,
                          params: ModelParams) -> float:
    """Resolvent mapping ratio || (operator - alpha)^{-1} f ||_{r'} / || f ||_r.

    r = 2n/(n+2) with dual r' = 2n/(n-2); finite uniformly over admissible
    alpha at fixed standoff from the spectrum.
    """
    n = f.dim
    r = 2.0 * n / (n + 2.0)
    r_dual = 2.0 * n / (n - 2.0)
    denom = lebesgue_norm(f, r)
    if denom == 0.0:
        return 0.0
    sol = lift_radial(resolvent(reduce_radial(f), alpha))
    return lebesgue_norm(sol, r_dual) / denom
