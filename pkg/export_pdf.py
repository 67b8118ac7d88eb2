from fpdf import FPDF
from fpdf.enums import XPos, YPos

from analysis import OBSERVABLES, DmaxScanResult
from config import APP_CONFIG, EXPORT_CONFIG
from export_table import Report, rungs_frame, scan_frame

FLOAT_FORMAT = EXPORT_CONFIG["float_format"]


def _line(pdf, text, size=9):
    pdf.set_font("Helvetica", size=size)
    pdf.cell(0, 6, text, new_x=XPos.LMARGIN, new_y=YPos.NEXT)


def _table(pdf, frame):
    columns = list(frame.columns)
    width = (pdf.w - pdf.l_margin - pdf.r_margin) / len(columns)
    pdf.set_font("Helvetica", style="B", size=7)
    for col in columns:
        pdf.cell(width, 6, str(col), border=1)
    pdf.ln(6)
    pdf.set_font("Courier", size=6)
    for _, row in frame.iterrows():
        for col in columns:
            value = row[col]
            text = FLOAT_FORMAT % value if isinstance(value, float) else str(value)
            pdf.cell(width, 5, text, border=1)
        pdf.ln(5)


def generate_pdf(report: Report) -> bytes:
    pdf = FPDF()
    pdf.add_page()
    pdf.set_font("Helvetica", style="B", size=13)
    pdf.cell(0, 10, f"{APP_CONFIG['app_name']} {APP_CONFIG['version']}", align='C', new_x=XPos.LMARGIN, new_y=YPos.NEXT)
    pdf.ln(4)

    if isinstance(report, DmaxScanResult):
        _line(pdf, "D_max scan", size=11)
        _table(pdf, scan_frame(report))
        pdf.ln(4)
        for obs in OBSERVABLES:
            scatter = report.scatter(obs)
            _line(pdf, f"scatter {obs}: last={scatter['last']} extrap={scatter['extrap']}")
        return bytes(pdf.output())

    system = report.parameters.get("system", {})
    transform = report.parameters.get("transform", {})
    _line(pdf, f"Z1={system.get('Z1')}  Z2={system.get('Z2')}  R={system.get('R')}  "
               f"mode={system.get('mode')}")
    _line(pdf, f"nu={transform.get('nu')}  D_max={transform.get('D_max')}  p={report.parameters.get('p')}")
    pdf.ln(3)
    _table(pdf, rungs_frame(report))
    pdf.ln(4)

    for obs in OBSERVABLES:
        _line(pdf, f"{obs}: E_extrap={report.E_extrap_digits.get(obs)}  "
                   f"uncertainty={report.uncertainty.get(obs)}  q={report.q_fit.get(obs)}")
    for key, value in report.extras.items():
        _line(pdf, f"{key}: {value}")
    for rung in report.failures:
        _line(pdf, f"FAILED m={rung.m}: {rung.error}")

    return bytes(pdf.output())
