"""CSV files with a provenance preamble.

Layout::

    # aloof_version = 0.1.0
    # material = gold
    z_m,gamma,visibility,error_estimate
    1e-06,0.0138,...

Preamble lines start with ``# `` and hold ``key = value`` pairs.  Floats are
written with ``repr`` so files are byte-identical for identical inputs.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from . import __version__
from .errors import FormatError


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if value is None:
        return ""
    if hasattr(value, "item"):  # numpy scalar
        return format_value(value.item())
    return str(value)


def render_csv(provenance, header, rows):
    buf = io.StringIO()
    buf.write(f"# aloof_version = {__version__}\n")
    for key, value in provenance.items():
        text = format_value(value).replace("\n", " ")
        buf.write(f"# {key} = {text}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, provenance, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(provenance, header, rows))
    return path


def read_csv(path):
    """Return (provenance dict, header list, rows as lists of strings)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None
    provenance = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                provenance[key.strip()] = value.strip()
        else:
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise FormatError(f"{path}: no CSV header")
    return provenance, rows[0], rows[1:]
