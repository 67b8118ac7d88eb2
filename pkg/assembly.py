"""Quadrature and element-by-element assembly of the minmax matrix family.

For the ansatz phi^k = G^k * (shape expansion) the two cylindrical components
of c^-1 L phi_+ are

    T_a = d_z phi^1 + (d_rho + m2/rho) phi^2
    T_b = (d_rho - m1/rho) phi^1 - d_z phi^2

and the minmax form is sum_k (-delta)^k A_k + W = eps S with

    A_k = int (T_a T_a' + T_b T_b') / h0^{k+1} dmu,  h0 = 2 + alpha^2 (eps0 - V),
    delta = alpha^2 (eps - eps0),  S = int phi phi' dmu,  W = int V phi phi' dmu.

With rho = (R/2) u the factor u^{m} commutes through the angular terms:
(d_rho - m/rho)(u^m g) = u^m d_rho g and (d_rho + m/rho)(u^m g) = u^m (d_rho g + 2 m g/rho).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from basis import GlobalFactorParams, ShapeSet, radial_factor
from config import MESH_CONFIG, SOLVER_CONFIG
from errors import AssemblyIntegrityError, FactorizationError, InvalidParameterError, WindowError
from factor_utils import dependent_columns, factor_positive_definite
from geometry import PhysicalSystem, TransformSpec, point_kinematics
from mesh import Mesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureRule:
    """Collapsed Gauss rule on the reference triangle (0,0), (1,0), (0,1)"""
    n_I: int
    points: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def triangle_quadrature(n_I: int) -> QuadratureRule:
    """n_I x n_I Gauss-Legendre points pulled onto the triangle by the Duffy map.

    (a, b) = (x, y (1 - x)) with Jacobian (1 - x); exact for s^a t^b, a + b <= 2 n_I - 2.
    """
    if int(n_I) != n_I or not MESH_CONFIG["min_n_I"] <= n_I <= MESH_CONFIG["max_n_I"]:
        raise InvalidParameterError(
            f"n_I must be an integer in {MESH_CONFIG['min_n_I']}..{MESH_CONFIG['max_n_I']}")
    n_I = int(n_I)
    x, w = np.polynomial.legendre.leggauss(n_I)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w

    X, Y = np.meshgrid(x, x, indexing="ij")
    WX, WY = np.meshgrid(w, w, indexing="ij")
    points = np.column_stack([X.ravel(), (Y * (1.0 - X)).ravel()])
    weights = (WX * WY * (1.0 - X)).ravel()
    return QuadratureRule(n_I=n_I, points=points, weights=weights)


def singular_quadrature_error(system: PhysicalSystem, nu: int, n_I: int) -> float:
    """Error model |gamma - round(gamma)| n_I^(-2 kappa) of the Gauss rule at a nucleus.

    Near a nucleus the integrands are homogeneous of the non-integer degree
    kappa - 2 in (s, t), kappa = nu (2 gamma - 1), so the rule converges only
    algebraically. Zero for the Schroedinger limit.
    """
    error = 0.0
    for center, Z in ((1, system.Z1), (2, system.Z2)):
        if Z == 0:
            continue
        gamma = system.gamma(center)
        kappa = nu * (2.0 * gamma - 1.0)
        if kappa <= 0:
            return math.inf
        error = max(error, abs(gamma - round(gamma)) * float(n_I) ** (-2.0 * kappa))
    return error


def singular_quadrature_order(system: PhysicalSystem, nu: int, n_I: int) -> int:
    """Smallest rule order >= n_I that resolves the nuclear singularity.

    Raises InvalidParameterError when even the largest rule does not, which
    means nu is too small for the nuclear charge.
    """
    tol = MESH_CONFIG["singular_quadrature_tol"]
    if singular_quadrature_error(system, nu, n_I) <= tol:
        return n_I
    for n in range(int(n_I) + 1, MESH_CONFIG["max_n_I"] + 1):
        if singular_quadrature_error(system, nu, n) <= tol:
            return n
    worst = singular_quadrature_error(system, nu, MESH_CONFIG["max_n_I"])
    raise InvalidParameterError(
        f"nu={nu} leaves the nuclear singularity under-resolved (estimated quadrature error "
        f"{worst:.1e} at n_I={MESH_CONFIG['max_n_I']}); use a larger nu")


@dataclass(eq=False)
class AssembledSystem:
    """Matrix family {A_k}, S and W on one shared CSR pattern"""
    dim: int
    indptr: np.ndarray
    indices: np.ndarray
    A_data: np.ndarray
    S_data: np.ndarray
    W_data: np.ndarray
    eps0: float
    mode: str
    alpha: float
    k_max: int
    n_I: int
    inv_h_max: float
    metadata: Dict[str, Any] = field(default_factory=dict)
    kept: Optional[np.ndarray] = None
    full_dim: int = 0

    def __post_init__(self):
        if self.kept is None:
            self.kept = np.arange(self.dim)
        if not self.full_dim:
            self.full_dim = self.dim

    def _csr(self, data: np.ndarray) -> sp.csr_matrix:
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.dim, self.dim))

    @property
    def A(self) -> List[sp.csr_matrix]:
        return [self._csr(d) for d in self.A_data]

    @property
    def S(self) -> sp.csr_matrix:
        return self._csr(self.S_data)

    @property
    def W(self) -> sp.csr_matrix:
        return self._csr(self.W_data)

    @property
    def is_relativistic(self) -> bool:
        return self.mode == "relativistic"

    def delta(self, eps: float) -> float:
        return self.alpha ** 2 * (eps - self.eps0) if self.is_relativistic else 0.0

    def expansion_ratio(self, eps: float) -> float:
        """|delta| max(1/h0); the 1/g series converges for values below 1"""
        return abs(self.delta(eps)) * self.inv_h_max

    def pencil_matrix(self, eps: float) -> sp.csr_matrix:
        """A(eps) = sum_k (-delta)^k A_k + W"""
        data = self.W_data + self.A_data[0]
        d = -self.delta(eps)
        for k in range(1, self.A_data.shape[0]):
            data = data + d ** k * self.A_data[k]
        return self._csr(data)

    def pencil_derivative(self, eps: float, x: np.ndarray) -> float:
        """x^T (dA/deps) x"""
        d = -self.delta(eps)
        total = 0.0
        for k in range(1, self.A_data.shape[0]):
            Ax = self._csr(self.A_data[k]) @ x
            total += k * d ** (k - 1) * float(x @ Ax)
        return -self.alpha ** 2 * total

    def tail_estimate(self, eps: float, x: np.ndarray) -> float:
        """Bound on the terms beyond k_max at eps"""
        q = self.expansion_ratio(eps)
        if q == 0.0:
            return 0.0
        if q >= 1.0:
            return float("inf")
        kinetic = abs(float(x @ (self._csr(self.A_data[0]) @ x)))
        return kinetic * q ** (self.k_max + 1) / (1.0 - q)

    def without(self, dropped: np.ndarray) -> "AssembledSystem":
        """The same family with the given dofs removed from the basis"""
        keep = np.ones(self.dim, dtype=bool)
        keep[dropped] = False
        rows = np.repeat(np.arange(self.dim), np.diff(self.indptr))
        entry = keep[rows] & keep[self.indices]
        renumber = np.cumsum(keep) - 1
        dim = int(keep.sum())
        counts = np.bincount(renumber[rows[entry]], minlength=dim)
        return replace(
            self, dim=dim,
            indptr=np.concatenate([[0], np.cumsum(counts)]).astype(np.int64),
            indices=renumber[self.indices[entry]].astype(np.int64),
            A_data=self.A_data[:, entry], S_data=self.S_data[entry], W_data=self.W_data[entry],
            kept=self.kept[keep], metadata=dict(self.metadata))

    def restrict(self, x: np.ndarray) -> np.ndarray:
        """Coefficients on the kept dofs of a full-length or reduced vector"""
        x = np.asarray(x, dtype=float)
        if x.shape == (self.full_dim,):
            return x[self.kept]
        if x.shape == (self.dim,):
            return x
        raise InvalidParameterError(
            f"vector of length {x.size} fits neither {self.full_dim} nor {self.dim} dofs")

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Full-length coefficients, zero on the dropped dofs"""
        full = np.zeros(self.full_dim)
        full[self.kept] = x
        return full

    def summary(self) -> Dict[str, Any]:
        return {"dim": self.dim, "dropped": self.full_dim - self.dim,
                "nnz": int(self.indices.size), "mode": self.mode,
                "eps0": self.eps0, "k_max": self.k_max, "n_I": self.n_I,
                "inv_h_max": self.inv_h_max}


def _element_dofs(mesh: Mesh, free_index: np.ndarray) -> np.ndarray:
    """(Ne, 2 nsh) global dofs, component 1 block then component 2; -1 on the Dirichlet edge"""
    node_free = free_index[mesh.elements]
    dof1 = np.where(node_free >= 0, 2 * node_free, -1)
    dof2 = np.where(node_free >= 0, 2 * node_free + 1, -1)
    return np.hstack([dof1, dof2])


def _sparsity_pattern(element_dofs: np.ndarray, dim: int):
    """Shared CSR pattern and per-element positions into its data array"""
    local = []
    keys = []
    for dofs in element_dofs:
        valid = np.flatnonzero(dofs >= 0)
        d = dofs[valid]
        local.append((valid, (d[:, None] * dim + d[None, :]).ravel()))
        keys.append(local[-1][1])
    unique = np.unique(np.concatenate(keys))
    rows = unique // dim
    indices = (unique % dim).astype(np.int64)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=dim))]).astype(np.int64)
    positions = [(valid, np.searchsorted(unique, k)) for valid, k in local]
    return indptr, indices, positions


def _check_window(system: PhysicalSystem, eps: float, what: str) -> None:
    lo, hi = system.electronic_window
    if not lo < eps < hi:
        raise WindowError(f"{what}={eps!r} outside the electronic window ({lo:.6g}, 0)")


def assemble_system(mesh: Mesh, shapes: ShapeSet, system: PhysicalSystem,
                    spec: TransformSpec, eps0: Optional[float] = None,
                    k_max: int = SOLVER_CONFIG["k_max"],
                    n_I: int = MESH_CONFIG["n_I"]) -> AssembledSystem:
    """Integrate {A_k}, S, W over every element and eliminate the s = s_max dofs"""
    if shapes.p != mesh.p:
        raise InvalidParameterError("shape order differs from the mesh order")
    if int(k_max) != k_max or not 0 <= k_max <= SOLVER_CONFIG["max_k_max"]:
        raise InvalidParameterError(f"k_max must be an integer in 0..{SOLVER_CONFIG['max_k_max']}")
    if abs(spec.s_max - mesh.s_max) > 1e-12 * spec.s_max:
        raise InvalidParameterError("mesh s_max does not match the transform domain")

    relativistic = system.is_relativistic
    if relativistic:
        if eps0 is None:
            raise InvalidParameterError("relativistic assembly needs eps0")
        _check_window(system, eps0, "eps0")
    else:
        k_max = 0
        eps0 = float("nan") if eps0 is None else eps0

    requested = n_I
    n_I = singular_quadrature_order(system, spec.nu, n_I)
    if n_I != requested:
        logger.warning(f"raising n_I from {requested} to {n_I} to resolve the nuclear "
                       f"singularity at nu={spec.nu}")
    quad = triangle_quadrature(n_I)
    N_ref, dN_ref = shapes.evaluate(quad.points)
    params = GlobalFactorParams.from_system(system)
    m1, m2 = params.m1, params.m2
    alpha2 = system.alpha ** 2
    half_R = 0.5 * system.R
    q = 2.0 / system.R
    det = mesh.jacobian_determinant()
    nsh = shapes.size
    nq = quad.weights.size

    free_index = mesh.free_index()
    dim = 2 * int(mesh.free_nodes.size)
    element_dofs = _element_dofs(mesh, free_index)
    indptr, indices, positions = _sparsity_pattern(element_dofs, dim)
    nnz = indices.size

    A_data = np.zeros((k_max + 1, nnz))
    S_data = np.zeros(nnz)
    W_data = np.zeros(nnz)
    inv_h_max = 0.0
    zero_block = np.zeros((nsh, nsh))

    logger.info(f"assembling {system.mode} system: Ne={mesh.Ne} N={mesh.N} dim={dim} "
                f"nnz={nnz} k_max={k_max} n_I={n_I}")

    for e in range(mesh.Ne):
        s, t = mesh.map_points(e, quad.points)
        kin = point_kinematics(s, t, system, spec)
        dN = dN_ref @ mesh.gradient_map(e).T
        N_s, N_t = dN[..., 0], dN[..., 1]

        H, dlog_dxi, dlog_deta = radial_factor(kin, params)
        g = H[:, None] * N_ref
        g_xi = H[:, None] * (N_s / kin.dxi_ds[:, None] + N_ref * dlog_dxi[:, None])
        g_eta = H[:, None] * (N_t / kin.deta_dt[:, None] + N_ref * dlog_deta[:, None])
        g_rho = (q * kin.u / kin.P)[:, None] * (kin.xi[:, None] * g_xi - kin.eta[:, None] * g_eta)
        g_z = (q / kin.P)[:, None] * ((kin.eta * kin.xi2_m1)[:, None] * g_xi
                                      + (kin.xi * kin.one_m_eta2)[:, None] * g_eta)

        u1 = (kin.u ** m1)[:, None]
        u2 = (kin.u ** m2)[:, None]
        u2_inner = (2.0 * m2 * q * kin.u ** (m2 - 1))[:, None]

        phi1 = u1 * g
        phi2 = u2 * g
        T_a = np.hstack([u1 * g_z, u2 * g_rho + u2_inner * g])
        T_b = np.hstack([u1 * g_rho, -u2 * g_z])
        B = np.vstack([T_a, T_b])

        base = quad.weights * det * half_R ** 3 * kin.dxi_ds * np.abs(kin.deta_dt)
        w_S = base * kin.P
        w_W = base * kin.VP
        if relativistic:
            inv_h = 1.0 / (2.0 + alpha2 * (eps0 - kin.V))
        else:
            inv_h = np.full(nq, 0.5)
        inv_h_max = max(inv_h_max, float(inv_h.max()))

        valid, pos = positions[e]
        sel = np.ix_(valid, valid)

        weight = w_S * inv_h
        for k in range(k_max + 1):
            local = (B.T * np.tile(weight, 2)) @ B
            local = 0.5 * (local + local.T)
            A_data[k, pos] += local[sel].ravel()
            weight = weight * inv_h

        for data, w in ((S_data, w_S), (W_data, w_W)):
            local = np.block([[(phi1.T * w) @ phi1, zero_block],
                              [zero_block, (phi2.T * w) @ phi2]])
            local = 0.5 * (local + local.T)
            data[pos] += local[sel].ravel()

    assembled = AssembledSystem(
        dim=dim, indptr=indptr, indices=indices, A_data=A_data, S_data=S_data,
        W_data=W_data, eps0=float(eps0), mode=system.mode, alpha=system.effective_alpha,
        k_max=int(k_max), n_I=int(n_I), inv_h_max=inv_h_max,
        metadata={"m": mesh.m, "p": mesh.p, "Ne": mesh.Ne, "N": mesh.N, "nu": spec.nu,
                  "D_max": spec.D_max, "R": system.R, "Z1": system.Z1, "Z2": system.Z2})

    try:
        dropped = dependent_columns(assembled.S)
    except FactorizationError as e:
        raise AssemblyIntegrityError(f"overlap matrix S is degenerate: {e}")
    if dropped.size:
        logger.info(f"dropping {dropped.size} of {dim} dofs whose overlap columns are "
                    f"numerically dependent")
        assembled = assembled.without(dropped)
    assembled.metadata["dropped"] = int(dropped.size)

    try:
        factor_positive_definite(assembled.S)
    except FactorizationError as e:
        raise AssemblyIntegrityError(f"overlap matrix S is not positive definite: {e}")
    return assembled


def dump_matrices(assembled: AssembledSystem) -> str:
    """Coordinate listing (row col value) of every matrix, one block per matrix"""
    blocks = [("A%d" % k, a) for k, a in enumerate(assembled.A)]
    blocks += [("S", assembled.S), ("W", assembled.W)]
    lines = []
    for name, matrix in blocks:
        coo = matrix.tocoo()
        lines.append(f"# {name} {assembled.dim} {coo.nnz}")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            lines.append(f"{i} {j} {v:.17g}")
    return "\n".join(lines) + "\n"
