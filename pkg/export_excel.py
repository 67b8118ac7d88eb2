from io import BytesIO

import pandas as pd

from analysis import OBSERVABLES, DmaxScanResult
from export_table import Report, rungs_frame, scan_frame


def _summary_frame(report: Report) -> pd.DataFrame:
    rows = []
    if isinstance(report, DmaxScanResult):
        for obs in OBSERVABLES:
            scatter = report.scatter(obs)
            rows.append({"observable": obs, "scatter_last": scatter["last"],
                         "scatter_extrap": scatter["extrap"]})
        return pd.DataFrame(rows)
    for obs in OBSERVABLES:
        rows.append({"observable": obs, "q_fit": report.q_fit.get(obs),
                     "q_fit_N": report.q_fit_N.get(obs), "E_extrap": report.E_extrap.get(obs),
                     "E_extrap_digits": report.E_extrap_digits.get(obs),
                     "uncertainty": report.uncertainty.get(obs)})
    return pd.DataFrame(rows)


def generate_excel(report: Report) -> bytes:
    if isinstance(report, DmaxScanResult):
        table = scan_frame(report)
    else:
        table = rungs_frame(report)

    output = BytesIO()
    with pd.ExcelWriter(output, engine='openpyxl') as writer:
        table.to_excel(writer, index=False, sheet_name='Rungs')
        _summary_frame(report).to_excel(writer, index=False, sheet_name='Summary')
    return output.getvalue()
