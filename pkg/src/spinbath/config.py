"""Sectioned INI run configuration with defaults, overrides and unit conversion.

Values in the file are in user units; ``[units] time_scale`` and
``length_scale`` convert them to the internal hbar = k_B = 1 units
(frequencies and temperatures divide by ``time_scale``, speeds pick up
``length_scale / time_scale``).
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from importlib import resources

from .bath_kernel import BathSpec
from .correlation import CHANNELS, QubitLayout
from .errors import ConfigError

DEFAULTS = {
    "units": {"time_scale": "1.0", "length_scale": "1.0"},
    "bath": {
        "coupling_strength": "0.05",
        "spectral_exponent": "1.0",
        "cutoff_frequency": "5.0",
        "sound_speed": "1.0",
        "temperature": "0.0",
    },
    "layout": {"positions": "0 0 0", "splitting": "0.0"},
    "job": {
        "times": "10.0",
        "channel": "dephasing-Z",
        "patterns": "",
        "deviation_tolerance": "0.1",
        "theta_indep": "0.1",
        "theta_corr": "0.9",
        "n_values": "1, 2, 4, 8",
        "p1_values": "1e-4, 1e-3",
        "p_th": "1e-2",
        "states": "",
        "oracle_jobs": "decomposition, canonical, dfs",
        "seed": "0",
    },
    "output": {"dir": "out", "format": "csv"},
    "tolerance": {"rtol": "1e-7", "atol": "1e-9"},
}


def default_config_text():
    return resources.files("spinbath").joinpath("default.ini").read_text()


@dataclass
class RunConfig:
    raw: dict
    path: str | None = None

    def section(self, name):
        return self.raw[name]

    @property
    def time_scale(self):
        return self.float("units", "time_scale", positive=True)

    @property
    def length_scale(self):
        return self.float("units", "length_scale", positive=True)

    def _where(self, section, key):
        where = f"[{section}] {key}"
        line = _locate(self.path, section, key)
        if line is not None:
            where = f"{self.path}:{line}: {where}"
        return where

    def get(self, section, key):
        try:
            return self.raw[section][key]
        except KeyError:
            raise ConfigError(f"missing config field [{section}] {key}") from None

    def float(self, section, key, *, positive=False, nonneg=False):
        text = self.get(section, key)
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(f"{self._where(section, key)}: expected a number, got {text!r}") from None
        if not math.isfinite(v):
            raise ConfigError(f"{self._where(section, key)}: value must be finite")
        if positive and v <= 0:
            raise ConfigError(f"{self._where(section, key)}: must be > 0, got {v}")
        if nonneg and v < 0:
            raise ConfigError(f"{self._where(section, key)}: must be >= 0, got {v}")
        return v

    def float_list(self, section, key, **kw):
        text = self.get(section, key)
        parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
        if not parts:
            raise ConfigError(f"{self._where(section, key)}: grid must be non-empty")
        out = []
        for p in parts:
            try:
                v = float(p)
            except ValueError:
                raise ConfigError(f"{self._where(section, key)}: bad number {p!r}") from None
            if not math.isfinite(v):
                raise ConfigError(f"{self._where(section, key)}: grid values must be finite")
            if kw.get("nonneg") and v < 0:
                raise ConfigError(f"{self._where(section, key)}: values must be >= 0")
            out.append(v)
        return out

    def int_list(self, section, key):
        vals = self.float_list(section, key)
        if any(v != int(v) or v < 1 for v in vals):
            raise ConfigError(f"{self._where(section, key)}: expected positive integers")
        return [int(v) for v in vals]

    def bath(self) -> BathSpec:
        ts, ls = self.time_scale, self.length_scale
        try:
            return BathSpec(
                coupling_strength=self.float("bath", "coupling_strength", nonneg=True),
                spectral_exponent=self.float("bath", "spectral_exponent", nonneg=True),
                cutoff_frequency=self.float("bath", "cutoff_frequency", positive=True) / ts,
                sound_speed=self.float("bath", "sound_speed", positive=True) * ls / ts,
                temperature=self.float("bath", "temperature", nonneg=True) / ts,
            )
        except ValueError as exc:
            raise ConfigError(f"[bath]: {exc}") from None

    def layout(self) -> QubitLayout:
        text = self.get("layout", "positions")
        rows = [r for r in text.replace("\n", ";").split(";") if r.strip()]
        pos = []
        for r in rows:
            try:
                vec = [float(x) for x in re.split(r"[,\s]+", r.strip()) if x]
            except ValueError:
                raise ConfigError(f"{self._where('layout', 'positions')}: bad position {r.strip()!r}") from None
            if len(vec) != 3:
                raise ConfigError(f"{self._where('layout', 'positions')}: position {r.strip()!r} "
                                  "needs three coordinates")
            pos.append([x * self.length_scale for x in vec])
        if not pos:
            raise ConfigError(f"{self._where('layout', 'positions')}: at least one qubit required")
        try:
            return QubitLayout(pos, self.float("layout", "splitting", nonneg=True) / self.time_scale)
        except ValueError as exc:
            raise ConfigError(f"{self._where('layout', 'positions')}: {exc}") from None

    def times(self):
        return [t * self.time_scale for t in self.float_list("job", "times", nonneg=True)]

    def channel(self):
        ch = self.get("job", "channel").strip()
        if ch not in CHANNELS:
            raise ConfigError(f"{self._where('job', 'channel')}: unknown channel {ch!r}; "
                              f"choose from {', '.join(CHANNELS)}")
        return ch

    def patterns(self, n_qubits):
        text = self.get("job", "patterns").strip()
        if not text:
            return [(j,) for j in range(n_qubits)]
        out = []
        for chunk in text.split(";"):
            if not chunk.strip():
                continue
            try:
                idx = tuple(int(x) for x in re.split(r"[,\s]+", chunk.strip()) if x)
            except ValueError:
                raise ConfigError(f"{self._where('job', 'patterns')}: bad pattern {chunk.strip()!r}") from None
            bad = [i for i in idx if not 0 <= i < n_qubits]
            if bad:
                raise ConfigError(f"{self._where('job', 'patterns')}: qubit index {bad[0]} out of "
                                  f"range for {n_qubits} qubits")
            if len(set(idx)) != len(idx):
                raise ConfigError(f"{self._where('job', 'patterns')}: repeated index in {idx}")
            out.append(idx)
        return out

    def tolerances(self, scale=1.0):
        return {"rtol": self.float("tolerance", "rtol", positive=True) * scale,
                "atol": self.float("tolerance", "atol", positive=True) * scale}

    def resolved(self):
        return {s: dict(v) for s, v in self.raw.items()}


def _locate(path, section, key):
    if not path:
        return None
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError:
        return None
    current = None
    for n, line in enumerate(lines, 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def load_config(path=None, overrides=()) -> RunConfig:
    """Merge defaults, the file at ``path`` and ``section.key=value`` overrides.

    Without ``path`` the shipped ``default.ini`` is used.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    if path is None:
        parser.read_string(default_config_text(), source="default.ini")
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh, source=str(path))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
    for item in overrides:
        m = re.fullmatch(r"\s*([\w-]+)\.([\w-]+)\s*=(.*)", item)
        if not m:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        section, key, value = m.group(1), m.group(2), m.group(3).strip()
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    unknown = [s for s in raw if s not in DEFAULTS]
    if unknown:
        raise ConfigError(f"unknown config section [{unknown[0]}]")
    for s, items in raw.items():
        extra = [k for k in items if k not in DEFAULTS[s]]
        if extra:
            where = f"[{s}] {extra[0]}"
            line = _locate(str(path) if path else None, s, extra[0])
            raise ConfigError(f"{path}:{line}: unknown field {where}" if line else f"unknown field {where}")
    cfg = RunConfig(raw, str(path) if path else None)
    cfg.time_scale, cfg.length_scale  # validate eagerly
    return cfg
