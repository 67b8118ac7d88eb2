"""Flat `key = value` run configuration: parsing, validation and serialization"""

import logging
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

from config import APP_CONFIG, EXPORT_CONFIG, MESH_CONFIG, PHYSICS_CONFIG, SOLVER_CONFIG
from errors import ConfigError, InvalidParameterError
from geometry import PhysicalSystem
from solver import SolverConfig

logger = logging.getLogger(__name__)

COMMANDS = ("solve", "ladder", "shift", "dmax-scan")
REQUIRED_KEYS = ("Z1", "Z2", "R", "nu", "D_max")


@dataclass
class RunConfig:
    """Every parameter of one run; defaults are recorded explicitly"""
    Z1: float
    Z2: float
    R: float
    nu: int
    D_max: float
    command: str = "ladder"
    alpha: float = PHYSICS_CONFIG["alpha"]
    jz: float = PHYSICS_CONFIG["jz"]
    mode: str = PHYSICS_CONFIG["mode"]
    p: int = MESH_CONFIG["p"]
    m: Optional[int] = None
    m_list: List[int] = field(default_factory=list)
    n_I: int = MESH_CONFIG["n_I"]
    k_max: int = SOLVER_CONFIG["k_max"]
    eps0: Optional[float] = None
    tol_outer: Optional[float] = None
    max_outer: int = SOLVER_CONFIG["max_outer"]
    tol_inner: float = SOLVER_CONFIG["tol_inner"]
    max_inner: int = SOLVER_CONFIG["max_inner"]
    shift_offset: float = SOLVER_CONFIG["shift_offset"]
    acceleration: str = SOLVER_CONFIG["acceleration"]
    dense_limit: int = SOLVER_CONFIG["dense_limit"]
    D_max_list: List[float] = field(default_factory=list)
    nrel_nu: Optional[int] = None
    nrel_D_max: Optional[float] = None
    benchmark: Optional[str] = None
    format: str = "csv"
    out: Optional[str] = None
    workers: int = APP_CONFIG["workers"]

    def system(self) -> PhysicalSystem:
        return PhysicalSystem(Z1=self.Z1, Z2=self.Z2, R=self.R, alpha=self.alpha,
                              jz=self.jz, mode=self.mode)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(eps0=self.eps0, k_max=self.k_max, tol_outer=self.tol_outer,
                            max_outer=self.max_outer, tol_inner=self.tol_inner,
                            max_inner=self.max_inner, shift_offset=self.shift_offset,
                            acceleration=self.acceleration, dense_limit=self.dense_limit,
                            n_I=self.n_I)

    def levels(self) -> List[int]:
        """m_list, or the single m of a solve"""
        if self.command == "solve":
            return [self.m if self.m is not None else self.m_list[0]]
        return list(self.m_list) if self.m_list else [self.m]

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _number(text: str) -> float:
    """Decimal or a quotient such as 2/90"""
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _integer(text: str) -> int:
    value = _number(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _optional(convert):
    def inner(text: str):
        return None if text.lower() in ("", "none", "auto") else convert(text)
    return inner


def _list_of(convert):
    def inner(text: str):
        return [convert(item.strip()) for item in text.split(",") if item.strip()]
    return inner


CONVERTERS = {
    "Z1": _number, "Z2": _number, "R": _number, "nu": _integer, "D_max": _number,
    "command": str, "alpha": _number, "jz": _number, "mode": str, "p": _integer,
    "m": _optional(_integer), "m_list": _list_of(_integer), "n_I": _integer,
    "k_max": _integer, "eps0": _optional(_number), "tol_outer": _optional(_number),
    "max_outer": _integer, "tol_inner": _number, "max_inner": _integer,
    "shift_offset": _number, "acceleration": str, "dense_limit": _integer,
    "D_max_list": _list_of(_number), "nrel_nu": _optional(_integer),
    "nrel_D_max": _optional(_number), "benchmark": _optional(str), "format": str,
    "out": _optional(str), "workers": _integer,
}


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(key, message)


def validate_config(cfg: RunConfig) -> RunConfig:
    """Check every key against the preconditions of the modules it feeds"""
    _check(cfg.command in COMMANDS, "command", f"must be one of {', '.join(COMMANDS)}")
    _check(cfg.nu in MESH_CONFIG["allowed_nu"], "nu", "nu must be even in 2..10")
    _check(cfg.D_max > 0, "D_max", "must be positive")
    _check(1 <= cfg.p <= MESH_CONFIG["max_p"], "p", f"must be in 1..{MESH_CONFIG['max_p']}")
    _check(MESH_CONFIG["min_n_I"] <= cfg.n_I <= MESH_CONFIG["max_n_I"], "n_I",
           f"must be in {MESH_CONFIG['min_n_I']}..{MESH_CONFIG['max_n_I']}")
    _check(cfg.m is not None or bool(cfg.m_list), "m_list", "set m or m_list")
    if cfg.m is not None:
        _check(cfg.m >= 1, "m", "must be at least 1")
    if cfg.m_list:
        _check(all(m >= 1 for m in cfg.m_list), "m_list", "every m must be at least 1")
        _check(all(a < b for a, b in zip(cfg.m_list, cfg.m_list[1:])), "m_list",
               "must be strictly increasing")
    if cfg.command == "dmax-scan":
        _check(bool(cfg.D_max_list), "D_max_list", "dmax-scan needs D_max_list")
    _check(all(D > 0 for D in cfg.D_max_list), "D_max_list", "every D_max must be positive")
    if cfg.nrel_nu is not None:
        _check(cfg.nrel_nu in MESH_CONFIG["allowed_nu"], "nrel_nu", "nu must be even in 2..10")
    if cfg.nrel_D_max is not None:
        _check(cfg.nrel_D_max > 0, "nrel_D_max", "must be positive")
    _check(cfg.format in EXPORT_CONFIG["formats"], "format",
           f"must be one of {', '.join(EXPORT_CONFIG['formats'])}")
    _check(cfg.workers >= 1, "workers", "must be at least 1")
    if cfg.benchmark is not None:
        from benchmarks import BENCHMARKS
        _check(cfg.benchmark in BENCHMARKS, "benchmark", f"must be one of {sorted(BENCHMARKS)}")

    try:
        cfg.system()
    except InvalidParameterError as e:
        raise ConfigError("system", str(e))
    try:
        cfg.solver_config()
    except InvalidParameterError as e:
        raise ConfigError("solver", str(e))
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines (# comments) into a validated RunConfig"""
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONVERTERS:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "given twice")
        try:
            values[key] = CONVERTERS[key](value)
        except ValueError as e:
            raise ConfigError(key, f"malformed value {value!r} ({e})")

    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(missing[0], "required key missing")

    cfg = validate_config(RunConfig(**values))
    logger.debug(f"parsed config: {cfg.to_dict()}")
    return cfg


def _format_value(value: Any) -> str:
    if isinstance(value, list):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Serialize every set key; parse_config(format_config(c)) == c"""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None or value == []:
            continue
        lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
