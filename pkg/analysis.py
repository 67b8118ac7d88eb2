"""Grid-ladder orchestration, relativistic shifts, convergence orders and extrapolation"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd

from basis import reference_shapes
from config import ANALYSIS_CONFIG, MESH_CONFIG
from errors import InsufficientDataError, InvalidPairingError, InvalidParameterError, MinmaxError
from geometry import PhysicalSystem, make_transform
from mesh import Mesh, grid_ladder
from solver import SolverConfig, minmax_solve, schroedinger_solve

logger = logging.getLogger(__name__)

OBSERVABLES = ("E_rel", "E_nrel", "shift")


def _mp(value: Any) -> mpmath.mpf:
    """Strings keep all their digits; floats are taken at their exact binary value"""
    if isinstance(value, str):
        return mpmath.mpf(value.strip())
    return mpmath.mpf(value)


@dataclass
class Rung:
    """One mesh of a ladder with its paired energies"""
    m: int
    Ne: int
    N: int
    dim: int = 0
    E_rel: float = math.nan
    E_nrel: float = math.nan
    shift: float = math.nan
    outer_iters: int = 0
    status: str = "ok"
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def value(self, observable: str) -> float:
        if observable not in OBSERVABLES:
            raise InvalidParameterError(f"unknown observable {observable!r}")
        return getattr(self, observable)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Extrapolation:
    """Limit of E(N) = E_inf + C N^(-q/2) from the last three rungs"""
    value: Any
    uncertainty: Any
    q: Optional[float]
    degenerate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": float(self.value),
            "value_digits": mpmath.nstr(self.value, 25),
            "uncertainty": float(self.uncertainty),
            "q": self.q,
            "degenerate": self.degenerate,
        }


@dataclass
class ConvergenceFit:
    """Least-squares order of |E - E_ref| against N"""
    q: float
    q_N: float
    used: List[int]
    excluded: List[int]
    noise_floor: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SequenceResult:
    """Rungs ordered by N plus per-observable fits and extrapolations"""
    rungs: List[Rung]
    parameters: Dict[str, Any] = field(default_factory=dict)
    q_fit: Dict[str, Optional[float]] = field(default_factory=dict)
    q_fit_N: Dict[str, Optional[float]] = field(default_factory=dict)
    E_extrap: Dict[str, Optional[float]] = field(default_factory=dict)
    E_extrap_digits: Dict[str, Optional[str]] = field(default_factory=dict)
    uncertainty: Dict[str, Optional[float]] = field(default_factory=dict)
    degenerate: Dict[str, bool] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def failures(self) -> List[Rung]:
        return [r for r in self.rungs if not r.ok]

    @property
    def succeeded(self) -> bool:
        return not self.failures and not self.extras.get("failed_ladders")

    def series(self, observable: str) -> List[Tuple[int, float]]:
        """(N, value) of the successful rungs carrying a finite value"""
        out = []
        for rung in self.rungs:
            if rung.ok and math.isfinite(rung.value(observable)):
                out.append((rung.N, rung.value(observable)))
        return out

    def last_value(self, observable: str) -> Optional[float]:
        series = self.series(observable)
        return series[-1][1] if series else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "parameters": self.parameters,
            "rungs": [r.to_dict() for r in self.rungs],
            "q_fit": self.q_fit,
            "q_fit_N": self.q_fit_N,
            "E_extrap": self.E_extrap,
            "E_extrap_digits": self.E_extrap_digits,
            "uncertainty": self.uncertainty,
            "degenerate": self.degenerate,
            "extras": self.extras,
            "failures": [{"m": r.m, "error": r.error} for r in self.failures],
        }


def relativistic_shift(E_rel: Any, E_nrel: Any, rel_key: Optional[Tuple] = None,
                       nrel_key: Optional[Tuple] = None) -> Any:
    """E_rel - E_nrel of a paired run.

    Float inputs give the float difference, which is exact for energies within
    a factor of two of each other. Strings give an mpmath value.
    """
    if rel_key is not None or nrel_key is not None:
        if rel_key != nrel_key:
            raise InvalidPairingError(f"shift pairs runs {rel_key} and {nrel_key}")
    if isinstance(E_rel, str) or isinstance(E_nrel, str):
        with mpmath.workdps(ANALYSIS_CONFIG["mp_dps"]):
            return _mp(E_rel) - _mp(E_nrel)
    return E_rel - E_nrel


def improved_relativistic_energy(E_nrel_nu2: Any, shift: Any) -> Any:
    """Nonrelativistic energy from a nu=2 run plus a shift from the working nu"""
    if isinstance(E_nrel_nu2, str) or isinstance(shift, str):
        with mpmath.workdps(ANALYSIS_CONFIG["mp_dps"]):
            return _mp(E_nrel_nu2) + _mp(shift)
    return E_nrel_nu2 + shift


def fit_convergence_order(rungs: Sequence[Tuple[int, Any]], E_ref: Any,
                          noise_floor: Optional[float] = None,
                          scale: Optional[float] = None) -> ConvergenceFit:
    """Fit log|E - E_ref| = b - q_N log N; q = 2 q_N is the mesh-width order.

    Rungs at or below the noise floor (default 1e-13 * max(1, |scale|), scale
    defaulting to |E_ref|) are excluded and reported.
    """
    with mpmath.workdps(ANALYSIS_CONFIG["mp_dps"]):
        ref = _mp(E_ref)
        if noise_floor is None:
            base = abs(float(ref)) if scale is None else abs(scale)
            noise_floor = ANALYSIS_CONFIG["noise_floor"] * max(1.0, base)
        used, excluded, x, y = [], [], [], []
        for N, E in rungs:
            err = abs(_mp(E) - ref)
            if err <= noise_floor:
                excluded.append(int(N))
                continue
            used.append(int(N))
            x.append(math.log(N))
            y.append(float(mpmath.log(err)))

    if excluded:
        logger.warning(f"rungs N={excluded} excluded below noise floor {noise_floor:.2e}")
    if len(used) < 3:
        raise InsufficientDataError(f"{len(used)} usable rungs, need at least 3")

    slope, _ = np.polyfit(np.array(x), np.array(y), 1)
    q_N = -float(slope)
    logger.info(f"convergence order q={2 * q_N:.3f} (q_N={q_N:.3f}) over N={used}")
    return ConvergenceFit(q=2.0 * q_N, q_N=q_N, used=used, excluded=excluded,
                          noise_floor=float(noise_floor))


def _ratio(a: Any, N1: Any, N2: Any, N3: Any) -> Any:
    return (N3 ** -a - N2 ** -a) / (N2 ** -a - N1 ** -a)


def _solve_exponent(ratio: Any, N1: Any, N2: Any, N3: Any) -> Optional[Any]:
    """a > 0 with (N3^-a - N2^-a)/(N2^-a - N1^-a) = ratio, or None"""
    limit = mpmath.log(N3 / N2) / mpmath.log(N2 / N1)
    if ratio <= 0 or ratio >= limit:
        return None
    lo, hi = mpmath.mpf(0), mpmath.mpf(1)
    while _ratio(hi, N1, N2, N3) > ratio:
        lo, hi = hi, 2 * hi
        if hi > 1e4:
            return None
    for _ in range(ANALYSIS_CONFIG["bisection_iterations"]):
        mid = (lo + hi) / 2
        if _ratio(mid, N1, N2, N3) > ratio:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def extrapolate(rungs: Sequence[Tuple[int, Any]], q: Any = "auto") -> Extrapolation:
    """Three-rung elimination of E(N) = E_inf + C N^(-q/2).

    With q="auto" the exponent comes from the last three increments; a
    supplied q only needs the last two. Equal energies, or increments that
    admit no positive exponent, return the last energy flagged degenerate.
    """
    if len(rungs) < 3:
        raise InsufficientDataError(f"{len(rungs)} rungs, need at least 3")
    ordered = sorted(rungs, key=lambda r: r[0])[-3:]

    with mpmath.workdps(ANALYSIS_CONFIG["mp_dps"]):
        (N1, E1), (N2, E2), (N3, E3) = [(_mp(N), _mp(E)) for N, E in ordered]
        if not N1 < N2 < N3:
            raise InvalidParameterError("rungs must have distinct N")
        d1, d2 = E2 - E1, E3 - E2

        if d2 == 0:
            logger.warning("extrapolation: last two rungs are equal")
            return Extrapolation(value=E3, uncertainty=mpmath.mpf(0), q=None, degenerate=True)

        if q == "auto":
            a = _solve_exponent(d2 / d1, N1, N2, N3) if d1 != 0 else None
            if a is None:
                logger.warning("extrapolation: increments admit no positive order")
                return Extrapolation(value=E3, uncertainty=abs(d2), q=None, degenerate=True)
        else:
            if not float(q) > 0:
                raise InvalidParameterError("q must be positive")
            a = _mp(q) / 2

        C = d2 / (N3 ** -a - N2 ** -a)
        value = E3 - C * N3 ** -a
        uncertainty = abs(value - E3) / ((N3 / N2) ** a - 1)
        order = float(2 * a)

    logger.debug(f"extrapolated {mpmath.nstr(value, 25)} +- {float(uncertainty):.2e} (q={order:.3f})")
    return Extrapolation(value=value, uncertainty=uncertainty, q=order)


def summarize_sequence(result: SequenceResult, q: Any = "auto",
                       reference: Optional[Dict[str, Any]] = None) -> SequenceResult:
    """Fill E_extrap, uncertainty and q_fit for every observable with data"""
    reference = reference or {}
    scale = abs(result.last_value("E_nrel") or result.last_value("E_rel") or 1.0)
    for obs in OBSERVABLES:
        series = result.series(obs)
        for target in (result.q_fit, result.q_fit_N, result.E_extrap,
                       result.E_extrap_digits, result.uncertainty):
            target[obs] = None
        result.degenerate[obs] = False
        if len(series) < 3:
            continue

        ext = extrapolate(series, q=q)
        result.E_extrap[obs] = float(ext.value)
        result.E_extrap_digits[obs] = mpmath.nstr(ext.value, 25)
        result.uncertainty[obs] = float(ext.uncertainty)
        result.degenerate[obs] = ext.degenerate

        E_ref = reference.get(obs, ext.value)
        try:
            fit = fit_convergence_order(series, E_ref, scale=scale)
        except InsufficientDataError as e:
            logger.warning(f"{obs}: no convergence order ({e})")
            continue
        result.q_fit[obs] = fit.q
        result.q_fit_N[obs] = fit.q_N
    return result


def _run_rung(mesh: Mesh, system: PhysicalSystem, spec: Any, shapes: Any,
              cfg: SolverConfig, eps0: Optional[float]) -> Tuple[Rung, Optional[float]]:
    rung = Rung(m=mesh.m, Ne=mesh.Ne, N=mesh.N, dim=2 * len(mesh.free_nodes))
    key = (mesh.m, mesh.p, spec.nu, spec.D_max, cfg.n_I)
    logger.info(f"rung m={mesh.m}: Ne={mesh.Ne} N={mesh.N} dim={rung.dim}")
    try:
        nrel = schroedinger_solve(mesh, system.nonrelativistic(), spec, cfg, shapes=shapes)
        rung.E_nrel = nrel.energy
        if system.is_relativistic:
            start = nrel.energy if eps0 is None else eps0
            rel = minmax_solve(mesh, system, spec, replace(cfg, eps0=start), shapes=shapes,
                               x0=nrel.vector)
            rung.E_rel = rel.energy
            rung.outer_iters = rel.outer_iters
            rung.shift = relativistic_shift(rel.energy, nrel.energy, key, key)
    except MinmaxError as e:
        rung.status = "failed"
        rung.error = f"{type(e).__name__}: {e}"
        logger.error(f"rung m={mesh.m} (p={mesh.p}, nu={spec.nu}, D_max={spec.D_max}) failed: {e}")
        return rung, None
    logger.info(f"rung m={mesh.m} done: E_rel={rung.E_rel!r} E_nrel={rung.E_nrel!r}")
    return rung, (rung.E_rel if system.is_relativistic else None)


def run_ladder(system: PhysicalSystem, nu: int, D_max: float, m_list: Sequence[int],
               p: int = MESH_CONFIG["p"], cfg: Optional[SolverConfig] = None,
               workers: int = 1, q: Any = "auto",
               reference: Optional[Dict[str, Any]] = None) -> SequenceResult:
    """Solve every rung of a grid ladder and summarize the sequence.

    Sequential runs chain eps0 from the previous rung's relativistic energy;
    concurrent runs start each rung from its own nonrelativistic energy.
    Failed rungs are kept with status "failed".
    """
    cfg = cfg or SolverConfig()
    spec = make_transform(nu, D_max, system.R)
    meshes = grid_ladder(m_list, p, spec.s_max)
    shapes = reference_shapes(p)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_rung, mesh, system, spec, shapes, cfg, cfg.eps0)
                       for mesh in meshes]
            rungs = [f.result()[0] for f in futures]
    else:
        rungs, eps0 = [], cfg.eps0
        for mesh in meshes:
            rung, energy = _run_rung(mesh, system, spec, shapes, cfg, eps0)
            rungs.append(rung)
            if energy is not None:
                eps0 = energy

    rungs.sort(key=lambda r: r.N)
    parameters = {"system": system.to_dict(), "transform": spec.to_dict(), "p": p,
                  "m_list": list(m_list), "solver": cfg.to_dict()}
    result = SequenceResult(rungs=rungs, parameters=parameters)
    summarize_sequence(result, q=q, reference=reference)
    if result.failures:
        logger.error(f"ladder finished with {len(result.failures)} failed rung(s)")
    return result


@dataclass
class DmaxScanResult:
    """Ladders repeated over a list of domain sizes"""
    entries: List[Tuple[float, SequenceResult]]

    def scatter(self, observable: str) -> Dict[str, Optional[float]]:
        """max - min across D_max of the last-rung and extrapolated values"""
        last = [r.last_value(observable) for _, r in self.entries]
        extrap = [r.E_extrap.get(observable) for _, r in self.entries]
        out = {}
        for name, values in (("last", last), ("extrap", extrap)):
            values = [v for v in values if v is not None]
            out[name] = (max(values) - min(values)) if len(values) >= 2 else None
        return out

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for D_max, result in self.entries:
            row = {"D_max": D_max, "xi_max": result.parameters["transform"]["xi_max"]}
            for obs in OBSERVABLES:
                row[f"{obs}_last"] = result.last_value(obs)
                row[f"{obs}_extrap"] = result.E_extrap.get(obs)
            rows.append(row)
        return pd.DataFrame(rows)

    @property
    def succeeded(self) -> bool:
        return all(r.succeeded for _, r in self.entries)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entries": [{"D_max": D, **r.to_dict()} for D, r in self.entries],
            "scatter": {obs: self.scatter(obs) for obs in OBSERVABLES},
        }


def dmax_scan(system: PhysicalSystem, nu: int, D_list: Sequence[float], m_list: Sequence[int],
              p: int = MESH_CONFIG["p"], cfg: Optional[SolverConfig] = None,
              workers: int = 1) -> DmaxScanResult:
    """Re-run one ladder for every D_max"""
    if not D_list:
        raise InvalidParameterError("D_max list is empty")
    entries = []
    for D_max in D_list:
        logger.info(f"D_max scan: D_max={D_max}")
        entries.append((D_max, run_ladder(system, nu, D_max, m_list, p, cfg, workers)))
    scan = DmaxScanResult(entries=entries)
    for obs in OBSERVABLES:
        logger.info(f"D_max scatter {obs}: {scan.scatter(obs)}")
    return scan


def convergence_table(result: SequenceResult,
                      reference: Optional[Dict[str, Any]] = None) -> pd.DataFrame:
    """|E(N) - E_ref| per observable, E_ref defaulting to the extrapolated value"""
    reference = reference or {}
    rows = []
    with mpmath.workdps(ANALYSIS_CONFIG["mp_dps"]):
        for rung in result.rungs:
            if not rung.ok:
                continue
            row = {"m": rung.m, "Ne": rung.Ne, "N": rung.N}
            for obs in OBSERVABLES:
                ref = reference.get(obs, result.E_extrap_digits.get(obs))
                value = rung.value(obs)
                if ref is None or not math.isfinite(value):
                    row[f"dE_{obs}"] = math.nan
                else:
                    row[f"dE_{obs}"] = float(abs(_mp(value) - _mp(ref)))
            rows.append(row)
    return pd.DataFrame(rows, columns=["m", "Ne", "N"] + [f"dE_{o}" for o in OBSERVABLES])
