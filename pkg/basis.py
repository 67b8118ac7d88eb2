"""Nodal shape functions of order p and the singular global factors G^k"""

import logging
from dataclasses import dataclass, asdict
from typing import Any, Dict, Tuple

import numpy as np

from config import MESH_CONFIG
from errors import ConstructionError, InvalidParameterError, SingularPointError
from geometry import PhysicalSystem, PointKinematics
from mesh import reference_lattice

logger = logging.getLogger(__name__)


def _silvester_table(L: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """R_n(L) = prod_{l<n} (pL - l)/(l + 1) and dR_n/dL for n = 0..p"""
    values = np.ones((p + 1,) + L.shape)
    derivs = np.zeros((p + 1,) + L.shape)
    for n in range(1, p + 1):
        factor = (p * L - (n - 1)) / n
        derivs[n] = derivs[n - 1] * factor + values[n - 1] * (p / n)
        values[n] = values[n - 1] * factor
    return values, derivs


@dataclass(frozen=True)
class ShapeSet:
    """Lagrange basis of the complete polynomials of order p on the reference triangle"""
    p: int
    nodes: np.ndarray
    lattice: Tuple[Tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.lattice)

    def evaluate(self, points: Any) -> Tuple[np.ndarray, np.ndarray]:
        """Values (npts, nsh) and reference gradients (npts, nsh, 2) at points (npts, 2)"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a, b = pts[:, 0], pts[:, 1]
        R1, D1 = _silvester_table(1.0 - a - b, self.p)
        R2, D2 = _silvester_table(a, self.p)
        R3, D3 = _silvester_table(b, self.p)

        ii = np.array([i for i, _ in self.lattice])
        jj = np.array([j for _, j in self.lattice])
        kk = self.p - ii - jj

        f1, f2, f3 = R1[kk].T, R2[ii].T, R3[jj].T
        g1, g2, g3 = D1[kk].T, D2[ii].T, D3[jj].T

        values = f1 * f2 * f3
        grads = np.empty(values.shape + (2,))
        grads[..., 0] = -g1 * f2 * f3 + f1 * g2 * f3
        grads[..., 1] = -g1 * f2 * f3 + f1 * f2 * g3
        return values, grads


def reference_shapes(p: int) -> ShapeSet:
    """Order-p nodal basis on the equispaced lattice; checked for the Kronecker property"""
    if int(p) != p or not 1 <= p <= MESH_CONFIG["max_p"]:
        raise InvalidParameterError(f"p must be an integer in 1..{MESH_CONFIG['max_p']}")
    p = int(p)
    lattice = tuple(reference_lattice(p))
    nodes = np.array(lattice, dtype=float) / p
    shapes = ShapeSet(p=p, nodes=nodes, lattice=lattice)

    values, _ = shapes.evaluate(nodes)
    residual = np.abs(values - np.eye(len(lattice))).max()
    if residual > 1e-10:
        raise ConstructionError(f"order-{p} nodal basis residual {residual:.3e} exceeds 1e-10")
    logger.debug(f"order-{p} shapes: {len(lattice)} nodes, nodal residual {residual:.2e}")
    return shapes


@dataclass(frozen=True)
class GlobalFactorParams:
    """Exponents of G^k = u^{m_k} r1^{gamma1-1} r2^{gamma2-1}"""
    jz: float
    gamma1: float
    gamma2: float
    m1: int
    m2: int

    @classmethod
    def from_system(cls, system: PhysicalSystem) -> "GlobalFactorParams":
        m1 = int(round(system.jz - 0.5))
        return cls(jz=system.jz, gamma1=system.gamma(1), gamma2=system.gamma(2),
                   m1=m1, m2=m1 + 1)

    def m(self, k: int) -> int:
        if k not in (1, 2):
            raise InvalidParameterError("component must be 1 or 2")
        return self.m1 if k == 1 else self.m2

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def radial_factor(kin: PointKinematics,
                  params: GlobalFactorParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H = r1^{gamma1-1} r2^{gamma2-1} with d log H/d xi and d log H/d eta"""
    if np.any(kin.r1 <= 0) or np.any(kin.r2 <= 0):
        raise SingularPointError("global factor requested at a nucleus")
    e1, e2 = params.gamma1 - 1.0, params.gamma2 - 1.0
    xi_plus_eta = kin.xi_m1 + kin.one_p_eta
    xi_minus_eta = kin.xi_m1 + kin.one_m_eta
    H = np.exp(e1 * np.log(kin.r1) + e2 * np.log(kin.r2))
    dlog_dxi = e1 / xi_plus_eta + e2 / xi_minus_eta
    dlog_deta = e1 / xi_plus_eta - e2 / xi_minus_eta
    return H, dlog_dxi, dlog_deta


def global_factor(k: int, kin: PointKinematics,
                  params: GlobalFactorParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(G, dG/ds, dG/dt) of component k, evaluated in log space"""
    m = params.m(k)
    H, dlog_dxi, dlog_deta = radial_factor(kin, params)
    dlog_ds = kin.dxi_ds * dlog_dxi
    dlog_dt = kin.deta_dt * dlog_deta

    if m == 0:
        return H, H * dlog_ds, H * dlog_dt

    on_axis = kin.u <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(on_axis, 0.0, np.exp(m * np.log(kin.u)) * H)
        dlogu_ds = kin.xi * kin.dxi_ds / kin.xi2_m1
        dlogu_dt = -kin.eta * kin.deta_dt / kin.one_m_eta2
        dG_ds = np.where(on_axis, 0.0, G * (m * dlogu_ds + dlog_ds))
        dG_dt = np.where(on_axis, 0.0, G * (m * dlogu_dt + dlog_dt))
    return G, dG_ds, dG_dt
