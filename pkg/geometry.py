"""Prolate spheroidal geometry, the order-nu singular coordinate transform
and the two-center Coulomb potential.

Coordinates: xi >= 1 (ellipses), -1 <= eta <= 1 (hyperbolas). Nucleus 1
(charge Z1) sits at eta = -1, nucleus 2 (charge Z2) at eta = +1, so that

    r1 = (xi + eta) R/2,   r2 = (xi - eta) R/2.

The computational variables (s, t) live on [0, s_max] x [0, pi] with
xi = xi(s) from the sinh branch and eta = eta(t) from the sin branch.
"""

import logging
import math
from dataclasses import dataclass, asdict, replace
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from config import ANALYSIS_CONFIG, MESH_CONFIG, PHYSICS_CONFIG
from errors import DomainError, InvalidParameterError, SingularPointError

logger = logging.getLogger(__name__)

BRANCHES = ("sinh", "sin")
MODES = ("relativistic", "nonrelativistic")


@dataclass(frozen=True)
class PhysicalSystem:
    """Charges, geometry, coupling constant and quantum numbers of one run"""
    Z1: float
    Z2: float
    R: float
    alpha: float = PHYSICS_CONFIG["alpha"]
    jz: float = PHYSICS_CONFIG["jz"]
    kappa_abs: Optional[int] = None
    mode: str = PHYSICS_CONFIG["mode"]

    def __post_init__(self):
        if self.Z1 < 0 or self.Z2 < 0:
            raise InvalidParameterError("nuclear charges must be non-negative")
        if max(self.Z1, self.Z2) <= 0:
            raise InvalidParameterError("at least one nuclear charge must be positive")
        if not (math.isfinite(self.R) and self.R > 0):
            raise InvalidParameterError("R must be a positive finite distance")
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}")
        if self.alpha < 0 or (self.mode == "relativistic" and self.alpha == 0):
            raise InvalidParameterError("alpha must be positive in relativistic mode")
        if self.mode == "relativistic" and self.alpha * max(self.Z1, self.Z2) >= 1:
            raise InvalidParameterError("alpha*max(Z1, Z2) must be below 1")

        twice = 2 * self.jz
        if twice <= 0 or abs(twice - round(twice)) > 1e-12 or int(round(twice)) % 2 != 1:
            raise InvalidParameterError("jz must be a positive half-integer")
        kappa = int(round(self.jz + 0.5))
        if self.kappa_abs is None:
            object.__setattr__(self, "kappa_abs", kappa)
        elif self.kappa_abs != kappa:
            raise InvalidParameterError("kappa_abs must equal |jz| + 1/2")

    @property
    def is_relativistic(self) -> bool:
        return self.mode == "relativistic"

    @property
    def effective_alpha(self) -> float:
        """alpha in relativistic mode, 0 in the Schroedinger limit"""
        return self.alpha if self.is_relativistic else 0.0

    @property
    def c(self) -> float:
        return 1.0 / self.alpha if self.alpha > 0 else math.inf

    @property
    def electronic_window(self) -> Tuple[float, float]:
        """Open interval of admissible electronic energies (hartree)"""
        return (-2.0 * self.c ** 2, 0.0)

    def gamma(self, center: int) -> float:
        """Singular exponent sqrt(kappa^2 - (alpha Z_l)^2) of nucleus 1 or 2"""
        Z = self.Z1 if center == 1 else self.Z2
        a = self.effective_alpha
        return math.sqrt(self.kappa_abs ** 2 - (a * Z) ** 2)

    def nonrelativistic(self) -> "PhysicalSystem":
        return replace(self, mode="nonrelativistic")

    def relativistic(self) -> "PhysicalSystem":
        return replace(self, mode="relativistic")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _check_nu(nu: Any) -> int:
    allowed = MESH_CONFIG["allowed_nu"]
    try:
        value = int(nu)
    except (TypeError, ValueError):
        raise InvalidParameterError("nu must be even in 2..10")
    if isinstance(nu, bool) or value != nu or value not in allowed:
        raise InvalidParameterError("nu must be even in 2..10")
    return value


def _check_branch(branch: str) -> str:
    if branch not in BRANCHES:
        raise InvalidParameterError(f"branch must be one of {BRANCHES}")
    return branch


def derivative_constant(nu: int, branch: str) -> Fraction:
    """Prefactor D of dY/dx = +-D S^(2n+1)(x), n = nu/2 - 1.

    sinh branch: D_n = (2n+1)!/(n! 2^n) = (2n+1)!!.
    sin branch: D_n/(n! 2^n) = (2n+1)!!/(2n)!!, the value that sends eta(pi) to -1.
    """
    nu = _check_nu(nu)
    _check_branch(branch)
    n = nu // 2 - 1
    D = Fraction(math.factorial(2 * n + 1), math.factorial(n) * 2 ** n)
    if branch == "sin":
        D /= math.factorial(n) * 2 ** n
    return D


def transform_coefficients(nu: int, branch: str) -> Tuple[int, ...]:
    """Integer coefficients d_1..d_{nu/2} of Y(x) = 1 + sum_i d_i S^(nu+2(i-1))(x/2).

    With v = S^2(x/2) one has S(x) = 2 S(x/2) C(x/2) and C^2(x/2) = 1 +- v, so
    dY/dv = +-D 2^(2n+1) v^n (1 +- v)^n integrates term by term.
    """
    nu = _check_nu(nu)
    n = nu // 2 - 1
    D = derivative_constant(nu, branch)
    scale = D * 2 ** (2 * n + 1)

    coefficients = []
    for j in range(n + 1):
        value = scale * math.comb(n, j) / (n + j + 1)
        if branch == "sin":
            value = -value if j % 2 == 0 else value
        if value.denominator != 1:
            raise InvalidParameterError(f"non-integral transform coefficient for nu={nu}")
        coefficients.append(int(value))
    return tuple(coefficients)


def xi_max_from_dmax(D_max: float, R: float) -> float:
    """Outer ellipse coordinate whose perpendicular distance from a nucleus is D_max"""
    if not (D_max > 0 and R > 0):
        raise InvalidParameterError("D_max and R must be positive")
    return (D_max + math.sqrt(D_max * D_max + R * R)) / R


def _series(x: np.ndarray, coefficients: Tuple[int, ...], branch: str) -> np.ndarray:
    """sum_i d_i v^(n+1+i) with v = S^2(x/2)"""
    half = 0.5 * x
    S = np.sinh(half) if branch == "sinh" else np.sin(half)
    v = S * S
    poly = np.zeros_like(v)
    for d in reversed(coefficients):
        poly = poly * v + d
    return v ** len(coefficients) * poly


@dataclass(frozen=True)
class TransformSpec:
    """Order-nu singular transform and the domain it is sized to"""
    nu: int
    d_sinh: Tuple[int, ...]
    d_sin: Tuple[int, ...]
    D_max: float
    xi_max: float
    s_max: float
    R: float

    @property
    def n(self) -> int:
        return self.nu // 2 - 1

    def coefficients(self, branch: str) -> Tuple[int, ...]:
        return self.d_sinh if _check_branch(branch) == "sinh" else self.d_sin

    def derivative_constant(self, branch: str) -> float:
        return float(derivative_constant(self.nu, branch))

    def xi_parts(self, s: Any) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(xi, dxi/ds, xi - 1) on the sinh branch"""
        s = np.asarray(s, dtype=float)
        xi_m1 = _series(s, self.d_sinh, "sinh")
        dxi = self.derivative_constant("sinh") * np.sinh(s) ** (2 * self.n + 1)
        return 1.0 + xi_m1, dxi, xi_m1

    def eta_parts(self, t: Any) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(eta, deta/dt, 1 - eta, 1 + eta) on the sin branch.

        1 + eta(t) is taken as 1 - eta(pi - t) on the upper half so both
        complements stay accurate near their zero.
        """
        t = np.asarray(t, dtype=float)
        upper_half = t > 0.5 * np.pi
        lower = -_series(np.where(upper_half, np.pi - t, t), self.d_sin, "sin")
        one_m_eta = np.where(upper_half, 2.0 - lower, lower)
        one_p_eta = np.where(upper_half, lower, 2.0 - lower)
        eta = np.where(upper_half, one_p_eta - 1.0, 1.0 - one_m_eta)
        deta = -self.derivative_constant("sin") * np.sin(t) ** (2 * self.n + 1)
        return eta, deta, one_m_eta, one_p_eta

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["d_sinh"] = list(self.d_sinh)
        data["d_sin"] = list(self.d_sin)
        return data


def map_coordinate(x: Any, spec: TransformSpec, branch: str) -> Tuple[Any, Any]:
    """Y and dY/dx of one branch (xi for sinh, eta for sin)"""
    _check_branch(branch)
    arr = np.asarray(x, dtype=float)
    if branch == "sinh":
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise DomainError("sinh branch requires x >= 0")
        Y, dY, _ = spec.xi_parts(arr)
    else:
        if np.any(arr < 0) or np.any(arr > np.pi):
            raise DomainError("sin branch requires 0 <= x <= pi")
        Y, dY, _, _ = spec.eta_parts(arr)
    if arr.ndim == 0:
        return float(Y), float(dY)
    return Y, dY


def domain_from_dmax(D_max: float, R: float,
                     spec: Union[TransformSpec, int]) -> Tuple[float, float]:
    """(xi_max, s_max) for a domain of perpendicular radius D_max.

    xi_max solves D_max = (R/2)(xi^2 - 1)/xi; s_max solves xi(s_max) = xi_max
    by bisection on the monotone sinh branch.
    """
    xi_max = xi_max_from_dmax(D_max, R)
    nu = spec.nu if isinstance(spec, TransformSpec) else _check_nu(spec)
    coefficients = transform_coefficients(nu, "sinh")
    target = xi_max - 1.0

    def excess(s: float) -> float:
        return float(_series(np.asarray(s), coefficients, "sinh")) - target

    lo, hi = 0.0, 1.0
    doublings = 0
    while excess(hi) < 0:
        lo, hi = hi, 2.0 * hi
        doublings += 1
        if doublings > 200:
            raise InvalidParameterError("could not bracket s_max")

    max_iter = ANALYSIS_CONFIG["bisection_iterations"]
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    s_max = 0.5 * (lo + hi)
    logger.debug(f"domain D_max={D_max} R={R} nu={nu}: xi_max={xi_max!r} s_max={s_max!r}")
    return xi_max, s_max


def make_transform(nu: int, D_max: float, R: float) -> TransformSpec:
    """Build the TransformSpec of order nu sized to D_max"""
    nu = _check_nu(nu)
    xi_max, s_max = domain_from_dmax(D_max, R, nu)
    return TransformSpec(
        nu=nu,
        d_sinh=transform_coefficients(nu, "sinh"),
        d_sin=transform_coefficients(nu, "sin"),
        D_max=float(D_max),
        xi_max=xi_max,
        s_max=s_max,
        R=float(R),
    )


def prolate_distances(xi: Any, eta: Any, R: float) -> Tuple[Any, Any]:
    """Distances (r1, r2) to nucleus 1 (eta=-1) and nucleus 2 (eta=+1)"""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return (xi + eta) * R / 2, (xi - eta) * R / 2


def cancelled_potential(xi: Any, eta: Any, system: PhysicalSystem,
                        xi_minus_eta: Any = None, xi_plus_eta: Any = None) -> Any:
    """V (xi^2 - eta^2) = -(2/R)[Z1 (xi - eta) + Z2 (xi + eta)], finite at the foci.

    Callers holding xi - eta and xi + eta from the complements pass them in.
    """
    if xi_minus_eta is None or xi_plus_eta is None:
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        xi_minus_eta, xi_plus_eta = xi - eta, xi + eta
    return -(2.0 / system.R) * (system.Z1 * xi_minus_eta + system.Z2 * xi_plus_eta)


def coulomb_potential(xi: Any, eta: Any, system: PhysicalSystem) -> Any:
    """Direct V = -Z1/r1 - Z2/r2"""
    r1, r2 = prolate_distances(xi, eta, system.R)
    if np.any(r1 <= 0) or np.any(r2 <= 0):
        raise SingularPointError("Coulomb potential requested at a nucleus")
    return -system.Z1 / r1 - system.Z2 / r2


@dataclass
class PointKinematics:
    """Pointwise geometric data at (s, t) sample points (all arrays share one shape)"""
    s: np.ndarray
    t: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    xi_m1: np.ndarray
    one_m_eta: np.ndarray
    one_p_eta: np.ndarray
    dxi_ds: np.ndarray
    deta_dt: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    u: np.ndarray
    P: np.ndarray
    VP: np.ndarray
    V: np.ndarray
    rho: np.ndarray
    z: np.ndarray
    volume: np.ndarray

    @property
    def xi2_m1(self) -> np.ndarray:
        return self.xi_m1 * (self.xi + 1.0)

    @property
    def one_m_eta2(self) -> np.ndarray:
        return self.one_m_eta * self.one_p_eta


def point_kinematics(s: Any, t: Any, system: PhysicalSystem,
                     spec: TransformSpec) -> PointKinematics:
    """Everything the integrands need at interior points (s, t).

    volume is (R/2)^3 (xi^2 - eta^2) xi'(s) |eta'(t)|, the 2 pi azimuthal
    factor dropped.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0) or np.any(t > np.pi):
        raise DomainError("(s, t) must lie in [0, s_max] x [0, pi]")

    xi, dxi, xi_m1 = spec.xi_parts(s)
    eta, deta, one_m_eta, one_p_eta = spec.eta_parts(t)

    half_R = 0.5 * system.R
    xi_minus_eta = xi_m1 + one_m_eta
    xi_plus_eta = xi_m1 + one_p_eta
    r1 = xi_plus_eta * half_R
    r2 = xi_minus_eta * half_R
    if np.any(r1 <= 0) or np.any(r2 <= 0):
        raise SingularPointError("kinematics requested at a nucleus")

    P = xi_minus_eta * xi_plus_eta
    u = np.sqrt(xi_m1 * (xi + 1.0) * one_m_eta * one_p_eta)
    VP = cancelled_potential(xi, eta, system, xi_minus_eta, xi_plus_eta)

    return PointKinematics(
        s=s, t=t, xi=xi, eta=eta,
        xi_m1=xi_m1, one_m_eta=one_m_eta, one_p_eta=one_p_eta,
        dxi_ds=dxi, deta_dt=deta,
        r1=r1, r2=r2, u=u, P=P, VP=VP, V=VP / P,
        rho=half_R * u, z=half_R * xi * eta,
        volume=half_R ** 3 * P * dxi * np.abs(deta),
    )
