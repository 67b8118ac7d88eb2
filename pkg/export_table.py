"""CSV and JSON reports of ladders and D_max scans"""

import json
import math
from typing import Any, List, Union

import pandas as pd

from analysis import OBSERVABLES, DmaxScanResult, SequenceResult
from config import EXPORT_CONFIG

Report = Union[SequenceResult, DmaxScanResult]


def _fmt(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return EXPORT_CONFIG["float_format"] % value
    return str(value)


def _clean(obj: Any) -> Any:
    """NaN/inf become null so the JSON stays standard"""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def rungs_frame(result: SequenceResult) -> pd.DataFrame:
    rows = [{col: getattr(r, col) for col in EXPORT_CONFIG["csv_columns"]} for r in result.rungs]
    return pd.DataFrame(rows, columns=EXPORT_CONFIG["csv_columns"])


def footer_lines(result: SequenceResult) -> List[str]:
    lines = []
    for name in ("q_fit", "q_fit_N", "E_extrap", "uncertainty"):
        values = getattr(result, name)
        lines.append(f"# {name} " + " ".join(f"{obs}={_fmt(values.get(obs))}" for obs in OBSERVABLES))
    for key, value in result.extras.items():
        lines.append(f"# {key}={_fmt(value)}")
    for rung in result.failures:
        lines.append(f"# FAILED m={rung.m}: {rung.error}")
    return lines


def scan_frame(scan: DmaxScanResult) -> pd.DataFrame:
    return scan.to_frame()


def generate_csv(report: Report) -> str:
    """Fixed header, %.18g floats, '#' footer; identical input gives identical text"""
    if isinstance(report, DmaxScanResult):
        frame = scan_frame(report)
        footer = []
        for obs in OBSERVABLES:
            scatter = report.scatter(obs)
            footer.append(f"# scatter {obs} last={_fmt(scatter['last'])} extrap={_fmt(scatter['extrap'])}")
        for D_max, result in report.entries:
            footer.extend(f"# FAILED D_max={_fmt(D_max)} m={r.m}: {r.error}" for r in result.failures)
    else:
        frame = rungs_frame(report)
        footer = footer_lines(report)
    body = frame.to_csv(index=False, float_format=EXPORT_CONFIG["float_format"],
                        na_rep="nan", lineterminator="\n")
    return body + "\n".join(footer) + "\n"


def generate_json(report: Report) -> str:
    return json.dumps(_clean(report.to_dict()), indent=EXPORT_CONFIG["json_indent"])
