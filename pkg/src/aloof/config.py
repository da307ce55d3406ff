"""Plain-text section/key-value configuration files.

The format is deliberately small so that materials, beamlines and run
configurations share one reader that can report line numbers::

    # comment
    [material gold]
    resistivity = 2.2e-6 ohm_cm
    temperature = 293

Section headers are ``[kind]`` or ``[kind name]``.  Sections keep file
order, which the beamline reader relies on.  Values are strings; the
``parse_*`` helpers convert them with strict unit handling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

_HEADER = re.compile(r"^\[\s*([A-Za-z_][\w-]*)(?:\s+([^\]]+?))?\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_][\w.-]*)\s*[=:]\s*(.*)$")


@dataclass
class Entry:
    value: str
    lineno: int


@dataclass
class Section:
    kind: str
    name: str | None
    lineno: int
    entries: dict[str, Entry] = field(default_factory=dict)
    path: str | None = None

    def has(self, key):
        return key in self.entries

    def raw(self, key, default=None):
        entry = self.entries.get(key)
        return default if entry is None else entry.value

    def error(self, message, key=None):
        lineno = self.entries[key].lineno if key in self.entries else self.lineno
        return ConfigError(message, path=self.path, lineno=lineno)

    def get_float(self, key, default=None, unit="", required=False):
        """Parse ``key`` as a float in SI units.

        ``unit`` selects the accepted suffix table ("length", "resistivity",
        "voltage" or "" for a bare number).
        """
        if key not in self.entries:
            if required:
                raise self.error(f"missing required key {key!r} in [{self.title}]")
            return default
        try:
            return parse_quantity(self.entries[key].value, unit)
        except ValueError as exc:
            raise self.error(f"{key}: {exc}", key) from None

    def get_str(self, key, default=None, required=False):
        if key not in self.entries:
            if required:
                raise self.error(f"missing required key {key!r} in [{self.title}]")
            return default
        return self.entries[key].value

    def get_int(self, key, default=None, required=False):
        text = self.get_str(key, None, required)
        if text is None:
            return default
        try:
            return int(text)
        except ValueError:
            raise self.error(f"{key}: expected an integer, got {text!r}", key) from None

    def get_bool(self, key, default=False):
        text = self.get_str(key)
        if text is None:
            return default
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise self.error(f"{key}: expected a boolean, got {text!r}", key)

    def unknown_keys(self, allowed):
        for key in self.entries:
            if key not in allowed:
                raise self.error(f"unknown key {key!r} in [{self.title}]", key)

    @property
    def title(self):
        return self.kind if self.name is None else f"{self.kind} {self.name}"


def parse_sections(text, path=None):
    """Split configuration text into ordered sections."""
    sections = []
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped or stripped.startswith(";"):
            continue
        if stripped.startswith("["):
            match = _HEADER.match(stripped)
            if not match:
                raise ConfigError(f"malformed section header {stripped!r}", path, lineno)
            current = Section(match.group(1).lower(), match.group(2), lineno, path=path)
            sections.append(current)
            continue
        match = _ENTRY.match(stripped)
        if not match:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", path, lineno)
        if current is None:
            raise ConfigError("key/value pair before any section header", path, lineno)
        key = match.group(1).lower()
        if key in current.entries:
            raise ConfigError(f"duplicate key {key!r}", path, lineno)
        current.entries[key] = Entry(match.group(2).strip(), lineno)
    return sections


def read_sections(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", str(path)) from None
    return parse_sections(text, str(path))


# Unit tables.  The empty suffix is always SI.
_UNITS = {
    "length": {"": 1.0, "m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "resistivity": {"": 1.0, "ohm_m": 1.0, "ohm*m": 1.0, "ohm_cm": 1e-2, "ohm*cm": 1e-2},
    "voltage": {"": 1.0, "v": 1.0, "kv": 1e3, "mv": 1e-3},
    "energy_ev": {"": 1.0, "ev": 1.0, "mev": 1e-3},
    "": {"": 1.0},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z_*]*)\s*$")


def parse_quantity(text, unit=""):
    """Parse ``"9.4 um"`` style strings into SI floats.

    >>> parse_quantity("9.4um", "length")
    9.4e-06
    """
    match = _QUANTITY.match(text)
    if not match:
        raise ValueError(f"cannot parse number {text!r}")
    number, suffix = match.groups()
    table = _UNITS[unit]
    scale = table.get(suffix.lower())
    if scale is None:
        allowed = ", ".join(repr(s) for s in table if s) or "none"
        raise ValueError(f"unit {suffix!r} not accepted here (allowed: {allowed})")
    return float(number) * scale


def parse_list(text, unit=""):
    return [parse_quantity(part, unit) for part in text.split(",") if part.strip()]
