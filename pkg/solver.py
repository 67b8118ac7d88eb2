"""Minmax outer iteration and the shifted inverse-iteration pencil eigensolver"""

import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from assembly import AssembledSystem, assemble_system
from basis import ShapeSet, reference_shapes
from config import MESH_CONFIG, SOLVER_CONFIG
from errors import (ConvergenceError, ExpansionValidityError, FactorizationError,
                    InvalidParameterError, WindowError)
from factor_utils import as_dense, count_negative_pivots, factor_indefinite, norm_inf, use_dense
from geometry import PhysicalSystem, TransformSpec
from mesh import Mesh

logger = logging.getLogger(__name__)

ACCELERATIONS = ("newton", "none")


@dataclass
class SolverConfig:
    """Outer/inner iteration controls; tol_outer None means scale * max(1, |eps0|)"""
    eps0: Optional[float] = None
    k_max: int = SOLVER_CONFIG["k_max"]
    tol_outer: Optional[float] = None
    max_outer: int = SOLVER_CONFIG["max_outer"]
    tol_inner: float = SOLVER_CONFIG["tol_inner"]
    shift_offset: float = SOLVER_CONFIG["shift_offset"]
    max_inner: int = SOLVER_CONFIG["max_inner"]
    max_shift_retries: int = SOLVER_CONFIG["max_shift_retries"]
    max_refactors: int = SOLVER_CONFIG["max_refactors"]
    acceleration: str = SOLVER_CONFIG["acceleration"]
    dense_limit: int = SOLVER_CONFIG["dense_limit"]
    n_I: int = MESH_CONFIG["n_I"]

    def __post_init__(self):
        if self.tol_outer is not None and not self.tol_outer > 0:
            raise InvalidParameterError("tol_outer must be positive")
        if int(self.k_max) != self.k_max or not 0 <= self.k_max <= SOLVER_CONFIG["max_k_max"]:
            raise InvalidParameterError(f"k_max must be in 0..{SOLVER_CONFIG['max_k_max']}")
        if self.max_outer < 1 or self.max_inner < 1:
            raise InvalidParameterError("max_outer and max_inner must be at least 1")
        if not self.tol_inner > 0:
            raise InvalidParameterError("tol_inner must be positive")
        if not self.shift_offset > 0:
            raise InvalidParameterError("shift_offset must be positive")
        if self.max_shift_retries < 0 or self.max_refactors < 0:
            raise InvalidParameterError("retry counts must be non-negative")
        if self.acceleration not in ACCELERATIONS:
            raise InvalidParameterError(f"acceleration must be one of {ACCELERATIONS}")
        if not 0 <= self.dense_limit <= SOLVER_CONFIG["max_dense_limit"]:
            raise InvalidParameterError(
                f"dense_limit must be in 0..{SOLVER_CONFIG['max_dense_limit']}")

    def outer_tolerance(self, eps0: float) -> float:
        if self.tol_outer is not None:
            return self.tol_outer
        return SOLVER_CONFIG["outer_tol_scale"] * max(1.0, abs(eps0))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EigenResult:
    """Converged eigenpair; vector is S-normalized.

    eigenvalues_below counts pencil eigenvalues found under the energy by the
    inertia check (None when the check was not run).
    """
    energy: float
    vector: np.ndarray
    outer_iters: int
    residual_norm: float
    inner_iters: int = 0
    shift: float = math.nan
    history: List[float] = field(default_factory=list)
    eps0: Optional[float] = None
    converged: bool = True
    eigenvalues_below: Optional[int] = None

    def to_dict(self, include_vector: bool = False) -> Dict[str, Any]:
        data = {
            "energy": self.energy,
            "outer_iters": self.outer_iters,
            "residual_norm": self.residual_norm,
            "inner_iters": self.inner_iters,
            "shift": self.shift,
            "history": list(self.history),
            "eps0": self.eps0,
            "converged": self.converged,
            "eigenvalues_below": self.eigenvalues_below,
        }
        if include_vector:
            data["vector"] = self.vector.tolist()
        return data


def _shifted(A: Any, S: Any, sigma: float) -> Any:
    return A - sigma * S


def _normalize(x: np.ndarray, S: Any) -> np.ndarray:
    norm = math.sqrt(float(x @ (S @ x)))
    if not norm > 0:
        raise InvalidParameterError("start vector has zero S-norm")
    x = x / norm
    return x if x[np.argmax(np.abs(x))] > 0 else -x


def pencil_eigen_near(A: Any, S: Any, target: float, cfg: Optional[SolverConfig] = None,
                      x0: Optional[np.ndarray] = None) -> EigenResult:
    """Eigenpair of A x = eps S x with eps nearest target.

    Shifted inverse iteration on a pivoted LU of the indefinite A - sigma S
    with sigma = target, nudged down by shift_offset when the shifted matrix
    is singular. Once the Rayleigh quotient settles the shift is moved next to
    it. Whether the result is the lowest eigenvalue is a separate question,
    answered by count_eigenvalues_below.
    """
    cfg = cfg or SolverConfig()
    dim = A.shape[0]
    if A.shape != (dim, dim) or S.shape != (dim, dim):
        raise InvalidParameterError("A and S must be square matrices of equal size")

    if use_dense(dim, cfg.dense_limit):
        A, S = as_dense(A), as_dense(S)
    else:
        A, S = sp.csr_matrix(A), sp.csr_matrix(S)
    norm_A, norm_S = norm_inf(A), norm_inf(S)

    offset = cfg.shift_offset * max(1.0, abs(target))
    sigma = target
    factor = None
    for attempt in range(cfg.max_shift_retries + 1):
        try:
            factor = factor_indefinite(_shifted(A, S, sigma), cfg.dense_limit)
            break
        except FactorizationError as e:
            logger.warning(f"shift {sigma!r} rejected ({e}); moving it (retry {attempt + 1})")
            sigma = target - offset
            offset *= 10.0
    if factor is None:
        raise FactorizationError(
            f"no factorizable shift near target {target!r} after {cfg.max_shift_retries} retries")

    if x0 is not None:
        x = np.asarray(x0, dtype=float).copy()
        if x.shape != (dim,):
            raise InvalidParameterError("start vector has the wrong length")
    else:
        x = np.ones(dim)
    x = _normalize(x, S)

    best: Optional[EigenResult] = None
    rho_prev = math.inf
    refactors = 0
    for it in range(1, cfg.max_inner + 1):
        x = _normalize(factor.solve(S @ x), S)
        Ax = A @ x
        rho = float(x @ Ax)
        residual = Ax - rho * (S @ x)
        scale = (norm_A + abs(rho) * norm_S) * float(np.abs(x).max())
        rel = float(np.abs(residual).max()) / scale if scale > 0 else 0.0

        if best is None or rel < best.residual_norm:
            best = EigenResult(energy=rho, vector=x, outer_iters=0, residual_norm=rel,
                               inner_iters=it, shift=sigma, converged=False)
        logger.debug(f"inverse iteration {it}: rho={rho!r} residual={rel:.3e} shift={sigma!r}")
        if rel <= cfg.tol_inner:
            return EigenResult(energy=rho, vector=x, outer_iters=0, residual_norm=rel,
                               inner_iters=it, shift=sigma)

        step = cfg.shift_offset * max(1.0, abs(rho))
        settled = abs(rho - rho_prev) <= 0.1 * step
        if (settled and refactors < cfg.max_refactors and abs(rho - sigma) > 10.0 * step
                and rel <= SOLVER_CONFIG["coarse_residual"]):
            refactors += 1
            try:
                factor = factor_indefinite(_shifted(A, S, rho - step), cfg.dense_limit)
                sigma = rho - step
                logger.debug(f"Rayleigh refactorization at {sigma!r}")
            except FactorizationError:
                logger.debug(f"Rayleigh shift {rho - step!r} is singular; keeping {sigma!r}")
        rho_prev = rho

    raise ConvergenceError(
        f"inverse iteration did not reach {cfg.tol_inner:.1e} in {cfg.max_inner} steps "
        f"(best residual {best.residual_norm:.3e})", best=best)


def count_eigenvalues_below(A: Any, S: Any, sigma: float, dense_limit: Optional[int] = None) -> int:
    """Number of pencil eigenvalues below sigma, from the inertia of A - sigma S"""
    return count_negative_pivots(_shifted(A, S, sigma), dense_limit)


def certify_lowest(A: Any, S: Any, energy: float, cfg: SolverConfig) -> int:
    """Pencil eigenvalues below energy - shift_offset max(1, |energy|); zero for a ground state"""
    sigma = energy - cfg.shift_offset * max(1.0, abs(energy))
    below = count_eigenvalues_below(A, S, sigma, cfg.dense_limit)
    if below:
        logger.warning(f"{below} pencil eigenvalues lie below E={energy!r}; "
                       f"the returned state is not the lowest")
    return below


def _check_window(assembled: AssembledSystem, eps: float) -> None:
    lower = -2.0 / assembled.alpha ** 2
    if not lower < eps < 0.0:
        raise WindowError(f"energy {eps!r} left the electronic window ({lower:.6g}, 0)")


def minmax_iterate(assembled: AssembledSystem, cfg: Optional[SolverConfig] = None,
                   x0: Optional[np.ndarray] = None) -> EigenResult:
    """Outer fixed-point iteration eps -> lambda(eps) on a prepared matrix family.

    x0 may cover the full dof set or only the dofs the assembly kept; the
    returned vector always covers the full set. A converged energy is
    certified by the inertia of A(E) - sigma S just below it.
    """
    cfg = cfg or SolverConfig()
    if not assembled.is_relativistic:
        raise InvalidParameterError("the minmax iteration needs a relativistic assembly")

    S = assembled.S
    eps = assembled.eps0
    tol = cfg.outer_tolerance(eps)
    bound = SOLVER_CONFIG["validity_bound"]
    history: List[float] = []
    steps: List[float] = []
    result: Optional[EigenResult] = None
    x = None if x0 is None else assembled.restrict(x0)

    for j in range(1, cfg.max_outer + 1):
        _check_window(assembled, eps)
        ratio = assembled.expansion_ratio(eps)
        if ratio >= bound:
            raise ExpansionValidityError(
                f"|delta| max(1/h0) = {ratio:.3g} >= {bound} at eps={eps!r}; "
                f"choose eps0 closer to the solution")

        inner = pencil_eigen_near(assembled.pencil_matrix(eps), S, eps, cfg, x0=x)
        lam, x = inner.energy, inner.vector
        if cfg.acceleration == "newton":
            slope = assembled.pencil_derivative(eps, x)
            step = (lam - eps) / (1.0 - slope)
        else:
            step = lam - eps
        history.append(lam)
        steps.append(abs(step))
        logger.debug(f"outer {j}: eps={eps!r} lambda={lam!r} step={step:.3e}")

        result = EigenResult(energy=lam, vector=x, outer_iters=j,
                             residual_norm=inner.residual_norm, inner_iters=inner.inner_iters,
                             shift=inner.shift, history=list(history), eps0=assembled.eps0)

        converged = abs(step) <= tol
        if (not converged and j > 1 and abs(step) <= SOLVER_CONFIG["stagnation_factor"] * tol
                and steps[-1] >= 0.5 * steps[-2]):
            logger.warning(f"outer iteration stagnated at |step|={abs(step):.3e} "
                           f"(tolerance {tol:.3e}); accepting rounding-level convergence")
            converged = True

        if converged:
            tail = assembled.tail_estimate(lam, x)
            if tail > tol:
                raise ExpansionValidityError(
                    f"k_max={assembled.k_max} truncation estimate {tail:.3e} exceeds "
                    f"tol_outer {tol:.3e}; increase k_max")
            logger.info(f"minmax converged in {j} outer iterations: E={lam!r}")
            result.eigenvalues_below = certify_lowest(assembled.pencil_matrix(lam), S, lam, cfg)
            result.vector = assembled.expand(x)
            return result

        eps = eps + step

    result.vector = assembled.expand(result.vector)
    raise ConvergenceError(
        f"outer iteration did not converge in {cfg.max_outer} steps "
        f"(last step {steps[-1]:.3e})", best=result)


def schroedinger_solve(mesh: Mesh, system: PhysicalSystem, spec: TransformSpec,
                       cfg: Optional[SolverConfig] = None, shapes: Optional[ShapeSet] = None,
                       x0: Optional[np.ndarray] = None) -> EigenResult:
    """Single linear pencil solve of the alpha -> 0 limit"""
    if system.is_relativistic:
        raise InvalidParameterError("schroedinger_solve needs nonrelativistic mode")
    cfg = cfg or SolverConfig()
    shapes = shapes or reference_shapes(mesh.p)
    assembled = assemble_system(mesh, shapes, system, spec, None, 0, cfg.n_I)
    target = -0.5 * (system.Z1 + system.Z2) ** 2
    A, S = assembled.pencil_matrix(0.0), assembled.S
    start = None if x0 is None else assembled.restrict(x0)
    result = pencil_eigen_near(A, S, target, cfg, x0=start)
    result.history = [result.energy]
    result.eigenvalues_below = certify_lowest(A, S, result.energy, cfg)
    result.vector = assembled.expand(result.vector)
    logger.info(f"nonrelativistic solve m={mesh.m}: E={result.energy!r}")
    return result


def minmax_solve(mesh: Mesh, system: PhysicalSystem, spec: TransformSpec,
                 cfg: Optional[SolverConfig] = None, shapes: Optional[ShapeSet] = None,
                 x0: Optional[np.ndarray] = None) -> EigenResult:
    """Relativistic ground state by the minmax expansion around eps0.

    eps0 defaults to the nonrelativistic energy on the same mesh, whose vector
    then also starts the inverse iteration.
    """
    if not system.is_relativistic:
        raise InvalidParameterError("minmax_solve needs relativistic mode; use schroedinger_solve")
    cfg = cfg or SolverConfig()
    shapes = shapes or reference_shapes(mesh.p)

    eps0 = cfg.eps0
    if eps0 is None:
        start = schroedinger_solve(mesh, system.nonrelativistic(), spec, cfg, shapes=shapes)
        eps0 = start.energy
        if x0 is None:
            x0 = start.vector

    assembled = assemble_system(mesh, shapes, system, spec, eps0, cfg.k_max, cfg.n_I)
    return minmax_iterate(assembled, cfg, x0=x0)
