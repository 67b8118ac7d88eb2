# config.py
"""Configuration file for the minmax FEM two-center Dirac solver"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Base directories
BASE_DIR = Path(__file__).parent
RUNS_DIR = Path(os.getenv("MINMAX_RUNS_DIR", str(BASE_DIR / "runs")))
EXPORTS_DIR = BASE_DIR / "exports"

# Physical constants (atomic units, CODATA 2018 c = 137.035999084)
PHYSICS_CONFIG = {
    "alpha": 1.0 / 137.035999084,
    "jz": 0.5,
    "mode": "relativistic",
}

# Discretization defaults
MESH_CONFIG = {
    "p": 10,
    "n_I": 25,
    "max_p": 12,
    "min_n_I": 2,
    "max_n_I": 40,
    "singular_quadrature_tol": 1e-6,
    "allowed_nu": [2, 4, 6, 8, 10],
}

# Eigensolver and outer iteration defaults
SOLVER_CONFIG = {
    "k_max": 9,
    "max_k_max": 12,
    "max_outer": 30,
    "tol_inner": 1e-11,
    "max_inner": 200,
    "shift_offset": 1e-3,
    "max_shift_retries": 5,
    "max_refactors": 3,
    "coarse_residual": 1e-4,
    "overlap_pivot_tol": 1e-11,
    "max_deflation_rounds": 10,
    "max_dependent_fraction": 0.25,
    "dense_limit": 2000,
    "max_dense_limit": 5000,
    "acceleration": "newton",
    "validity_bound": 0.5,
    "stagnation_factor": 100.0,
    "outer_tol_scale": 1e-14,
}

# Sequence analysis defaults
ANALYSIS_CONFIG = {
    "noise_floor": 1e-13,
    "mp_dps": 40,
    "bisection_iterations": 200,
}

# Export formats
EXPORT_CONFIG = {
    "formats": ["csv", "json", "xlsx", "pdf", "zip"],
    "json_indent": 2,
    "float_format": "%.18g",
    "csv_columns": ["m", "Ne", "N", "E_rel", "E_nrel", "shift", "outer_iters"],
}

# Application Configuration
APP_CONFIG = {
    "app_name": "Minmax FEM Two-Center Dirac Solver",
    "version": "1.0.0",
    "log_level": os.getenv("LOG_LEVEL", "INFO").upper(),
    "log_format": "%(asctime)s - %(levelname)s - %(message)s",
    "workers": int(os.getenv("MINMAX_WORKERS", "1")),
}


def get_config():
    """Get all configuration as a single dict"""
    return {
        "physics": PHYSICS_CONFIG,
        "mesh": MESH_CONFIG,
        "solver": SOLVER_CONFIG,
        "analysis": ANALYSIS_CONFIG,
        "export": EXPORT_CONFIG,
        "app": APP_CONFIG,
        "directories": {
            "base": BASE_DIR,
            "runs": RUNS_DIR,
            "exports": EXPORTS_DIR,
        },
    }


def load_env_config():
    """Load environment-specific configuration"""
    env = os.getenv("ENVIRONMENT", "development").lower()

    if env == "production":
        APP_CONFIG["log_level"] = "WARNING"
    elif env == "testing":
        APP_CONFIG["log_level"] = "DEBUG"

    return get_config()
