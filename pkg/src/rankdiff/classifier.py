"""Square roots of the rank-based covariance matrix and the strength test.

The local covariance is diag(rho^2, sigma^2) on {x1 > x2} and
diag(sigma^2, rho^2) on {x1 <= x2}.  Its real square roots form a continuum
parametrized by two signs and two rotation angles.  A configuration yields a
strongly solvable system unless its two half-plane diffusion vectors for the
difference point in exactly opposite directions; that one condition is
evaluated in three equivalent forms and the verdicts are required to agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .core import ModelParams, ParameterError

IP_TOL = 1e-9          # |s+ + s-| below this -> not strong (the verdict maker)
SCALAR_TOL = 1e-12     # |weak_scalar + 1| below this -> not strong
ANGLE_TOL = 1e-9       # |pi + vartheta - phi - psi| (mod 2 pi) below this
SQRT_RESIDUAL_TOL = 1e-10

TWO_PI = 2.0 * math.pi


def _wrap_angle(x: float) -> float:
    """Reduce to (-pi, pi]."""
    out = math.fmod(x, TWO_PI)
    if out > math.pi:
        out -= TWO_PI
    elif out <= -math.pi:
        out += TWO_PI
    return out


@dataclass(frozen=True)
class SqrtConfig:
    """One square-root configuration (eps, root_sign_minus, phi, vartheta).

    root_sign_plus (eps) and root_sign_minus are the +-1 reflection signs of
    the two half-plane blocks; phi and vartheta their rotation angles.  The
    derived 2x2 blocks satisfy sigma_plus sigma_plus' = diag(rho^2, sigma^2)
    and sigma_minus sigma_minus' = diag(sigma^2, rho^2).
    """

    rho: float
    sigma: float
    root_sign_plus: int
    root_sign_minus: int
    phi: float
    vartheta: float
    sigma_plus: np.ndarray = field(init=False, compare=False, repr=False)
    sigma_minus: np.ndarray = field(init=False, compare=False, repr=False)
    psi: float = field(init=False)

    def __post_init__(self):
        eps, dlt = self.root_sign_plus, self.root_sign_minus
        if eps not in (-1, 1) or dlt not in (-1, 1):
            raise ParameterError("root signs must be +1 or -1")
        rho, sg = self.rho, self.sigma
        cp, sp = math.cos(self.phi), math.sin(self.phi)
        ct, st = math.cos(self.vartheta), math.sin(self.vartheta)
        s_plus = np.array([[rho * cp, -rho * sp], [eps * sg * sp, eps * sg * cp]])
        s_minus = np.array([[sg * ct, -sg * st], [dlt * rho * st, dlt * rho * ct]])
        object.__setattr__(self, "sigma_plus", s_plus)
        object.__setattr__(self, "sigma_minus", s_minus)
        # psi in (-pi, pi] with cos psi = rho sigma (1 + eps delta),
        # sin psi = sigma^2 eps - rho^2 delta
        psi = math.atan2(sg**2 * eps - rho**2 * dlt, rho * sg * (1 + eps * dlt))
        object.__setattr__(self, "psi", psi)


def build_config(p: ModelParams, eps: int, root_sign_minus: int, phi: float, vartheta: float) -> SqrtConfig:
    """Materialize a configuration and verify the square-root property."""
    cfg = SqrtConfig(p.rho, p.sigma, int(eps), int(root_sign_minus),
                     _wrap_angle(float(phi)), _wrap_angle(float(vartheta)))
    a_plus = np.diag([p.rho**2, p.sigma**2])
    a_minus = np.diag([p.sigma**2, p.rho**2])
    res = max(
        np.abs(cfg.sigma_plus @ cfg.sigma_plus.T - a_plus).max(),
        np.abs(cfg.sigma_minus @ cfg.sigma_minus.T - a_minus).max(),
    )
    if res > SQRT_RESIDUAL_TOL:
        raise RuntimeError(f"square-root residual {res:.3e} exceeds {SQRT_RESIDUAL_TOL}")
    return cfg


@dataclass(frozen=True)
class StrengthVerdict:
    """Outcome of the three equivalent strength criteria for one config."""

    strong: bool
    ip_sum_norm: float      # |(e1-e2)' (Sigma_+ + Sigma_-)|
    weak_scalar: float      # the trigonometric criterion value; -1 <=> weak
    geom_holds: bool        # angle identity pi + vartheta = phi + psi (mod 2pi)
    geom_defect: float      # wrapped angle defect, radians


def strength(cfg: SqrtConfig) -> StrengthVerdict:
    """Classify a configuration; raises if the three criteria disagree."""
    d = np.array([1.0, -1.0])
    s_plus = d @ cfg.sigma_plus
    s_minus = d @ cfg.sigma_minus
    ip_sum_norm = float(np.linalg.norm(s_plus + s_minus))
    eps, dlt = cfg.root_sign_plus, cfg.root_sign_minus
    rho, sg = cfg.rho, cfg.sigma
    dang = cfg.vartheta - cfg.phi
    weak_scalar = (sg**2 * eps - rho**2 * dlt) * math.sin(dang) + rho * sg * (1 + eps * dlt) * math.cos(dang)
    geom_defect = abs(_wrap_angle(math.pi + cfg.vartheta - cfg.phi - cfg.psi))
    weak_by_ip = ip_sum_norm <= IP_TOL
    weak_by_scalar = abs(weak_scalar + 1.0) <= SCALAR_TOL
    weak_by_geom = geom_defect <= ANGLE_TOL
    if not (weak_by_ip == weak_by_scalar == weak_by_geom):
        raise RuntimeError(
            "strength criteria disagree: "
            f"ip={ip_sum_norm:.3e} scalar={weak_scalar + 1.0:.3e} geom={geom_defect:.3e}"
        )
    return StrengthVerdict(
        strong=not weak_by_ip,
        ip_sum_norm=ip_sum_norm,
        weak_scalar=weak_scalar,
        geom_holds=weak_by_geom,
        geom_defect=geom_defect,
    )


# named example configurations: the three systems discussed in the text
def config_system_b(p: ModelParams) -> SqrtConfig:
    return build_config(p, 1, 1, 0.0, 0.0)


def config_system_w(p: ModelParams) -> SqrtConfig:
    return build_config(p, -1, 1, 0.0, -math.pi / 2)


def config_system_v(p: ModelParams) -> SqrtConfig:
    return build_config(p, 1, -1, 0.0, -math.pi / 2)


def _axis_configs_plus() -> List[Tuple[int, float]]:
    """(eps, phi) pairs generating diag(+-rho, +-sigma) and the antidiagonal
    [[0, +-rho], [+-sigma, 0]] sign patterns, 8 in total."""
    out = []
    for a in (1, -1):           # diag: [[a rho, 0], [0, b sigma]]
        for b in (1, -1):
            phi = 0.0 if a == 1 else math.pi
            out.append((a * b, phi))
    for c in (1, -1):           # antidiag: [[0, c rho], [d sigma, 0]]
        for dsg in (1, -1):
            if c == -1:
                out.append((dsg, math.pi / 2))
            else:
                out.append((-dsg, 3 * math.pi / 2))
    return out


def _axis_configs_minus() -> List[Tuple[int, float]]:
    """Same sign patterns for the minus block diag(+-sigma, +-rho)."""
    out = []
    for a in (1, -1):
        for b in (1, -1):
            theta = 0.0 if a == 1 else math.pi
            out.append((a * b, theta))
    for c in (1, -1):
        for dsg in (1, -1):
            if c == -1:
                out.append((dsg, math.pi / 2))
            else:
                out.append((-dsg, 3 * math.pi / 2))
    return out


def enumerate_diagonal_roots(p: ModelParams):
    """All 64 diagonal/antidiagonal sign-pattern square roots, classified.

    Returns (configs, verdicts, strong_count).  The count is 48 in the
    isotropic and degenerate cases and 56 otherwise.
    """
    configs, verdicts = [], []
    for eps, phi in _axis_configs_plus():
        for dlt, theta in _axis_configs_minus():
            cfg = build_config(p, eps, dlt, phi, theta)
            configs.append(cfg)
            verdicts.append(strength(cfg))
    strong_count = sum(v.strong for v in verdicts)
    return configs, verdicts, strong_count


def random_configs(p: ModelParams, n: int, rng) -> List[SqrtConfig]:
    """Uniformly random configurations (signs and angles) for sweep tests."""
    out = []
    for _ in range(n):
        eps = 1 if rng.random() < 0.5 else -1
        dlt = 1 if rng.random() < 0.5 else -1
        phi = rng.uniform(0.0, TWO_PI)
        theta = rng.uniform(0.0, TWO_PI)
        out.append(build_config(p, eps, dlt, phi, theta))
    return out
