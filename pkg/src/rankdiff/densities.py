"""Closed-form time-t laws of the planar diffusion.

Covers the equal-variance case, the degenerate case with its singular line
component, the rank law, the quadrivariate law of (gap side, gap size, local
time, independent noise), and the general unequal-variance density.  A
dispatcher reduces arbitrary parameter/start combinations to the covered
branch by the two exact model symmetries (relabel the particles, flip space).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bangbang import atom_density, atom_mass, transition_density
from .core import InitialState, ModelParams, ParameterError
from .tails import norm_sf

ISO_TOL = 1e-12


def _require_time(t):
    if not t > 0:
        raise ParameterError("require t > 0")


# ---------------------------------------------------------------------------
# isotropic case
# ---------------------------------------------------------------------------

def joint_density_isotropic(p: ModelParams, s0: InitialState, t: float, xi1, xi2):
    """Joint density of (X1(t), X2(t)) for equal variances rho = sigma.

    The pair is the affine image of the independent gap value and sum noise;
    the change of variables contributes the constant 2/sqrt(2 pi t), pinned
    here by the normalization and Monte Carlo checks in the test suite.
    """
    _require_time(t)
    if not p.is_isotropic:
        raise ParameterError("joint_density_isotropic requires rho^2 = sigma^2 = 1/2")
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    gap = transition_density(p, t, s0.y, xi1 - xi2)
    out = 2.0 * gap / np.sqrt(2.0 * np.pi * t) * np.exp(-((xi1 + xi2 - s0.z - p.nu * t) ** 2) / (2.0 * t))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# degenerate case (sigma = 0, rho = 1, y >= 0)
# ---------------------------------------------------------------------------

def _check_degenerate(p: ModelParams, s0: InitialState):
    if p.sigma != 0.0:
        raise ParameterError("degenerate-case laws require sigma = 0 (and rho = 1)")
    if s0.y < 0:
        raise ParameterError("degenerate-case laws require x1 >= x2 (relabel upstream)")


def front_location(p: ModelParams, s0: InitialState, t: float) -> float:
    """The laggard's deterministic position x2 + g t carrying the atom."""
    return s0.x2 + p.g * t


def joint_density_degenerate(p: ModelParams, s0: InitialState, t: float, xi1, xi2):
    """Continuous part of the degenerate-case law, supported on two wedges.

    The law lives on {xi1 > xi2, xi2 <= front} union {xi1 < xi2, xi1 < front}
    plus an atom on the line {xi2 = front, xi1 > front} (see atom_line_density).
    On the wedge edges the interior one-sided limit is returned.
    """
    _require_time(t)
    _check_degenerate(p, s0)
    scalar = np.ndim(xi1) == 0 and np.ndim(xi2) == 0
    xi1, xi2 = np.broadcast_arrays(np.atleast_1d(np.asarray(xi1, dtype=float)),
                                   np.atleast_1d(np.asarray(xi2, dtype=float)))
    front = front_location(p, s0, t)
    lam, nu, z = p.lam, p.nu, s0.z

    def wedge(lo, hi):
        # density for the ordered pair (hi, lo): hi - lo > 0 on this wedge
        u = hi - 3.0 * lo + z
        return (
            2.0
            * np.exp(-2.0 * lam * (hi - lo))
            * (u + 2.0 * p.g * t)
            / np.sqrt(2.0 * np.pi * t**3)
            * np.exp(-((u + nu * t) ** 2) / (2.0 * t))
        )

    in1 = (xi1 > xi2) & (xi2 <= front)
    in2 = (xi1 < xi2) & (xi1 <= front)
    out = np.zeros(xi1.shape)
    out[in1] = wedge(xi2[in1], xi1[in1])
    out[in2] = wedge(xi1[in2], xi2[in2])
    return float(out[0]) if scalar else out


def atom_line_density(p: ModelParams, s0: InitialState, t: float, xi1):
    """Density in xi1 on the singular line {X2(t) = x2 + g t}, degenerate case.

    Identically zero when y = 0; zero for xi1 at or below the front.
    """
    _require_time(t)
    _check_degenerate(p, s0)
    scalar = np.ndim(xi1) == 0
    arr = np.atleast_1d(np.asarray(xi1, dtype=float))
    front = front_location(p, s0, t)
    out = np.zeros_like(arr)
    ok = arr > front
    if s0.y > 0 and np.any(ok):
        out[ok] = atom_density(p, s0.y, t, arr[ok] - front)
    return float(out[0]) if scalar else out


def atom_line_mass(p: ModelParams, s0: InitialState, t: float) -> float:
    _check_degenerate(p, s0)
    return atom_mass(p, s0.y, t)


def front_jump(p: ModelParams, s0: InitialState, t: float, gap):
    """Size of the density discontinuity along the front for a start y = 0,
    as a function of the gap xi1 - xi2 at the front."""
    if s0.y != 0:
        raise ParameterError("front_jump is stated for y = 0")
    d = np.abs(np.asarray(gap, dtype=float))
    out = 2.0 * d / np.sqrt(2.0 * np.pi * t**3) * np.exp(-2.0 * p.lam * d - ((d - p.lam * t) ** 2) / (2.0 * t))
    return float(out) if out.ndim == 0 else out


def rank_density_degenerate(p: ModelParams, s0: InitialState, t: float, rho1, rho2):
    """Continuous joint density of the ranks (max, min), degenerate case."""
    _require_time(t)
    _check_degenerate(p, s0)
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    if np.any(rho1 <= rho2):
        raise ParameterError("rank density requires rho1 > rho2")
    rho1, rho2 = np.broadcast_arrays(rho1, rho2)
    front = front_location(p, s0, t)
    u = rho1 - 3.0 * rho2 + s0.z
    vals = (
        4.0
        * (u + 2.0 * p.g * t)
        / np.sqrt(2.0 * np.pi * t**3)
        * np.exp(-2.0 * p.lam * (rho1 - rho2) - ((u + p.nu * t) ** 2) / (2.0 * t))
    )
    out = np.where(rho2 <= front, vals, 0.0)
    return float(out) if out.ndim == 0 else out


def rank_atom_density(p: ModelParams, s0: InitialState, t: float, rho1):
    """Density in rho1 on the rank atom {R2(t) = x2 + g t}; same law as the
    name-coordinate atom line."""
    return atom_line_density(p, s0, t, rho1)


# ---------------------------------------------------------------------------
# quadrivariate law
# ---------------------------------------------------------------------------

def quadrivariate_density(p: ModelParams, y: float, t: float, side: str, a, b, theta):
    """f1(a, b, theta): joint density of (gap size, twice local time, noise).

    The value does not depend on which side carries the gap; it factors as
    the triple density times the centered Gaussian density of the noise.
    """
    if side not in ("plus", "minus"):
        raise ParameterError("side must be 'plus' or 'minus'")
    if y < 0 or not t > 0:
        raise ParameterError("require y >= 0 and t > 0")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ParameterError("f1 requires a > 0 and b > 0")
    s = a + b + y
    out = (
        np.exp(-2.0 * p.lam * a)
        * s
        / (2.0 * np.pi * t**2)
        * np.exp(-(theta**2 + (s - p.lam * t) ** 2) / (2.0 * t))
    )
    return float(out) if out.ndim == 0 else out


def quadrivariate_atom_density(p: ModelParams, y: float, t: float, a, theta):
    """f2(a, theta): the no-local-time companion of f1; vanishes at y = 0."""
    if y < 0 or not t > 0:
        raise ParameterError("require y >= 0 and t > 0")
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(a <= 0):
        raise ParameterError("f2 requires a > 0")
    lam = p.lam
    out = (
        np.exp(-(theta**2) / (2.0 * t))
        / (2.0 * np.pi * t)
        * (
            np.exp(-((a - y + lam * t) ** 2) / (2.0 * t))
            - np.exp(-2.0 * lam * a - ((a + y - lam * t) ** 2) / (2.0 * t))
        )
    )
    if y == 0:
        out = np.zeros_like(out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# general unequal-variance density (gamma > 0, y >= 0)
# ---------------------------------------------------------------------------

def _psi_side_term(lam, t, y, delta, kappa, a, theta_star):
    """Closed form of the one-sided noise integral of f1 along the fiber
    b(theta) = (2/gamma) (rho sigma theta - ...), for fixed gap size a > 0.

    Exact Gaussian algebra; C - delta^2 B^2 >= 0 by Cauchy-Schwarz, so the
    exponentials cannot overflow.
    """
    alpha = a + y
    B = kappa * theta_star + alpha - lam * t
    C = theta_star**2 + (alpha - lam * t) ** 2
    term1 = delta * t * np.exp(-C / (2.0 * t))
    term2 = (
        (alpha - delta**2 * B)
        * np.sqrt(2.0 * np.pi * t)
        * np.exp(-(C - delta**2 * B**2) / (2.0 * t))
        * norm_sf(delta * B / np.sqrt(t))
    )
    return np.exp(-2.0 * lam * a) / (np.pi * t**2) * (term1 + term2)


def psi_density(p: ModelParams, y: float, t: float, psi1, psi2):
    """Joint density of the centered coordinates (Psi1, Psi2), gamma > 0, y >= 0.

    Psi_i = X_i - x_i - mu t.  The law is absolutely continuous here: the
    no-local-time component is smoothed by the independent noise and enters
    as an explicit extra term on the upper wedge.
    """
    _require_time(t)
    if p.gamma <= 0 or p.rho <= 0 or p.sigma <= 0:
        raise ParameterError("psi_density requires rho > sigma > 0 (gamma > 0); reduce by symmetry first")
    if y < 0:
        raise ParameterError("psi_density requires y >= 0; relabel the particles first")
    scalar = np.ndim(psi1) == 0 and np.ndim(psi2) == 0
    psi1, psi2 = np.broadcast_arrays(np.atleast_1d(np.asarray(psi1, dtype=float)),
                                     np.atleast_1d(np.asarray(psi2, dtype=float)))
    lam, gam = p.lam, p.gamma
    rs = p.rho * p.sigma
    r2, s2 = p.rho**2, p.sigma**2
    delta = p.mixing_delta
    kappa = gam / delta
    out = np.zeros(psi1.shape, dtype=float)

    a_plus = y + psi1 - psi2
    m = a_plus > 0
    if np.any(m):
        th = (s2 * psi1[m] + r2 * psi2[m]) / rs
        out[m] += _psi_side_term(lam, t, y, delta, kappa, a_plus[m], th)
        if y > 0:
            out[m] += quadrivariate_atom_density(p, y, t, a_plus[m], th) / rs

    a_minus = psi2 - psi1 - y
    m = a_minus > 0
    if np.any(m):
        th = (r2 * psi1[m] + s2 * psi2[m] + gam * y) / rs
        out[m] += _psi_side_term(lam, t, y, delta, kappa, a_minus[m], th)
    return float(out[0]) if scalar else out


def joint_density_unequal(p: ModelParams, s0: InitialState, t: float, xi1, xi2):
    """psi_density translated to the name coordinates (X1, X2)."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    shift = p.mu * t
    return psi_density(p, s0.y, t, xi1 - s0.x1 - shift, xi2 - s0.x2 - shift)


# ---------------------------------------------------------------------------
# dispatcher and grids
# ---------------------------------------------------------------------------

def planar_density(p: ModelParams, s0: InitialState, t: float, xi1, xi2):
    """Continuous part of the time-t density for any valid parameters/start.

    Reduces to the stated branches by the two exact symmetries: relabeling
    the particles maps a start with x1 < x2 to x1 > x2, and flipping space
    swaps (g, rho) with (h, sigma), turning gamma < 0 into gamma > 0.
    """
    if s0.y < 0:
        return planar_density(p, s0.swapped(), t, xi2, xi1)
    if p.gamma < 0 and not p.is_isotropic:
        xi1 = np.asarray(xi1, dtype=float)
        xi2 = np.asarray(xi2, dtype=float)
        return planar_density(p.swapped(), InitialState(-s0.x1, -s0.x2), t, -xi1, -xi2)
    if p.is_isotropic:
        return joint_density_isotropic(p, s0, t, xi1, xi2)
    if p.is_degenerate:
        return joint_density_degenerate(p, s0, t, xi1, xi2)
    return joint_density_unequal(p, s0, t, xi1, xi2)


@dataclass(frozen=True)
class AtomLine:
    """Singular line component of a degenerate-case law.

    `axis` names the pinned coordinate; the free coordinate runs over values
    `side`-ward of `location` (+1: above, -1: below).  `density` evaluates the
    line density as a function of the free coordinate.
    """

    axis: str            # "x1" or "x2"
    location: float
    side: int            # +1 or -1
    mass: float
    density: Callable[[np.ndarray], np.ndarray]


def planar_atom(p: ModelParams, s0: InitialState, t: float) -> Optional[AtomLine]:
    """The singular component of the law, or None when absolutely continuous.

    Present exactly when one volatility vanishes and the particles start
    apart: the zero-volatility particle then travels deterministically on the
    no-overtake event.
    """
    _require_time(t)
    if not p.is_degenerate or s0.y == 0:
        return None
    ay = abs(s0.y)
    mass = atom_mass(p, ay, t)
    if p.sigma == 0.0:
        if s0.y > 0:
            loc = s0.x2 + p.g * t
            return AtomLine("x2", loc, +1, mass, lambda u: _atom_vals(p, ay, t, np.asarray(u) - loc))
        loc = s0.x1 + p.g * t
        return AtomLine("x1", loc, +1, mass, lambda u: _atom_vals(p, ay, t, np.asarray(u) - loc))
    if s0.y > 0:
        loc = s0.x1 - p.h * t
        return AtomLine("x1", loc, -1, mass, lambda u: _atom_vals(p, ay, t, loc - np.asarray(u)))
    loc = s0.x2 - p.h * t
    return AtomLine("x2", loc, -1, mass, lambda u: _atom_vals(p, ay, t, loc - np.asarray(u)))


def _atom_vals(p, ay, t, a):
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    ok = a > 0
    if np.any(ok):
        out[ok] = atom_density(p, ay, t, a[ok])
    return out


@dataclass(frozen=True)
class DensityGrid:
    """Rectangular evaluation of a planar law plus its singular component."""

    xi1: np.ndarray
    xi2: np.ndarray
    values: np.ndarray           # shape (len(xi1), len(xi2))
    atom: Optional[AtomLine]
    atom_line_values: Optional[np.ndarray]   # atom density on the free axis grid

    def __post_init__(self):
        if self.values.shape != (len(self.xi1), len(self.xi2)):
            raise ValueError("values shape does not match the grids")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("density values must be finite and nonnegative")

    def continuous_mass(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.xi2, axis=1), self.xi1))

    def total_mass(self) -> float:
        return self.continuous_mass() + (self.atom.mass if self.atom else 0.0)


def density_grid(p: ModelParams, s0: InitialState, t: float, xi1, xi2) -> DensityGrid:
    """Evaluate the continuous density on a product grid, with the atom."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    if np.any(np.diff(xi1) <= 0) or np.any(np.diff(xi2) <= 0):
        raise ParameterError("grids must be strictly increasing")
    values = planar_density(p, s0, t, xi1[:, None], xi2[None, :])
    atom = planar_atom(p, s0, t)
    line_vals = None
    if atom is not None:
        free = xi1 if atom.axis == "x2" else xi2
        line_vals = atom.density(free)
    return DensityGrid(xi1, xi2, values, atom, line_vals)
