import io
import zipfile
from typing import Dict


def generate_zip(files: Dict[str, bytes], stem: str = "minmax_report") -> bytes:
    """Bundle report formats keyed by extension, e.g. {"csv": ..., "pdf": ...}"""
    zip_buffer = io.BytesIO()

    with zipfile.ZipFile(zip_buffer, "w", zipfile.ZIP_DEFLATED) as zip_file:
        for ext in sorted(files):
            zip_file.writestr(f"{stem}.{ext}", files[ext])

    zip_buffer.seek(0)
    return zip_buffer.getvalue()
