"""Shared domain types, unit conventions and configuration ingestion.

Every rate stored anywhere in the toolkit is an ordinary frequency in Hz
(what is usually quoted as ``value/2pi``).  Dynamical kernels convert to
angular units exactly once, through :func:`to_angular`.
"""

from __future__ import annotations

import configparser
import difflib
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Raised for malformed or invalid configuration input."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ConfigParseError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    pass


def to_angular(rate_hz: float) -> float:
    return TWO_PI * rate_hz


def from_angular(rate_rad_s: float) -> float:
    return rate_rad_s / TWO_PI


@dataclass(frozen=True)
class RateSet:
    """Frequencies and decay rates of the qubit / phonon / photon chain (Hz)."""

    omega_m: float = 5.1e9
    omega_q: float = 5.1e9
    omega_o: float = 194e12
    g_pe: float = 2.8e6
    g_om: float = 826e3
    kappa_q: float = 50e3
    kappa_m: float = 20e3
    kappa_o_i: float = 400e6
    kappa_o_e: float = 400e6

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ConfigValidationError(f"{f.name} must be finite, got {v!r}", f.name)
            if v < 0:
                raise ConfigValidationError(f"{f.name} must be >= 0, got {v!r}", f.name)
        for name in ("omega_m", "omega_q", "omega_o"):
            if getattr(self, name) <= 0:
                raise ConfigValidationError(f"{name} must be > 0", name)

    @property
    def kappa_o(self) -> float:
        return self.kappa_o_i + self.kappa_o_e

    def require_optical(self) -> None:
        if self.kappa_o <= 0:
            raise ConfigValidationError(
                "kappa_o_i + kappa_o_e must be > 0 for optical readout", "kappa_o_e")


@dataclass(frozen=True)
class PulseParams:
    n_o: float = 45.0
    tau: float = 500e-9
    rep_rate: float = 10e3

    def __post_init__(self):
        if not (math.isfinite(self.n_o) and self.n_o >= 0):
            raise ConfigValidationError(f"n_o must be >= 0, got {self.n_o!r}", "n_o")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ConfigValidationError(f"tau must be > 0, got {self.tau!r}", "tau")
        if not (math.isfinite(self.rep_rate) and self.rep_rate > 0):
            raise ConfigValidationError(f"rep_rate must be > 0, got {self.rep_rate!r}", "rep_rate")
        if self.rep_rate * self.tau >= 1:
            raise ConfigValidationError("rep_rate * tau must be < 1", "tau")


# ---------------------------------------------------------------------------
# configuration file

_LN2 = math.log(2.0)

# section -> key -> default.  The type of the default fixes the value type;
# None marks an optional float, a str default an enumerated/free string.
SCHEMA: dict[str, dict[str, Any]] = {
    "rates": {f.name: f.default for f in fields(RateSet)},
    "pulse": {
        "n_o": 45.0,
        "tau": 500e-9,
        "rep_rate": 10e3,
        "mode": "fixed",
        "n_max": 0.5,
        "n_o_min": 1.0,
        "n_o_max": 1000.0,
        "tau_min": 10e-9,
        "tau_max": 10e-6,
        "sweep_n_o_min": 0.0,
        "sweep_n_o_max": 90.0,
        "sweep_n_o_points": 19,
        "sweep_tau_min": 50e-9,
        "sweep_tau_max": 1e-6,
        "sweep_tau_points": 20,
    },
    "heating": {
        "n_hot_ref": 1.0,
        "gamma_h_ref": _LN2 / (TWO_PI * 500e-9),
        "n_o_ref": 45.0,
        "alpha_n": 0.33,
        "alpha_g": 1.0,
    },
    "swap": {
        "model": "decay-only",
        "dephasing_fraction_q": 0.0,
        "dephasing_fraction_m": 0.0,
        "n_th": 0.0,
        "fock_dim": 3,
        "detuning": 0.0,
        "samples": 201,
    },
    "budget": {
        "eta_fiber": 0.60,
        "eta_filter": 0.20,
        "eta_detector": 0.90,
        "eta_pe": None,
    },
    "hybridization": {
        "piezo_index": 0,
        "sweep_start": 5.0e9,
        "sweep_stop": 5.25e9,
        "sweep_points": 51,
        "g_pe_threshold": 1e6,
        "g_om_target": 650e3,
        "zeta_max": 0.05,
        "kappa_ln": 300e3,
        "kappa_si": 4e3,
    },
    "fields": {
        "volume": "",
        "surface": "",
        "refined_volume": "",
        "n": 3.48,
        "eps_si": 11.7 * 8.8541878128e-12,
        "eps_air": 8.8541878128e-12,
        "p11": -0.094,
        "p12": 0.017,
        "p44": -0.051,
        "u_m": None,
        "u_q": None,
        "denom": None,
    },
}

OPTIONAL_SECTIONS = ("hybridization", "fields")

CHOICES = {
    ("pulse", "mode"): ("fixed", "optimize"),
    ("swap", "model"): ("decay-only", "decay-plus-dephasing"),
}

# per-mode and per-pair keys of the hybridization section
MODE_FIELDS = ("freq", "g_pe0", "g_om0", "piezo_weight", "kappa_rad0")
_MODE_KEY = re.compile(r"^mode\.(\d+)\.(\w+)$")
_COUPLING_KEY = re.compile(r"^coupling\.(\d+)\.(\d+)$")


@dataclass(frozen=True)
class DeviceConfig:
    """Validated full-device configuration.

    ``values`` maps ``(section, key)`` to the parsed value for every schema
    key (defaults filled in); ``explicit`` records which keys the file set.
    """

    rates: RateSet
    pulse: PulseParams
    values: Mapping[tuple[str, str], Any]
    explicit: frozenset = frozenset()
    sections: tuple[str, ...] = ()
    modes: tuple[dict, ...] = ()
    couplings: tuple[tuple[int, int, float], ...] = ()
    source_dir: Path | None = field(default=None, compare=False)

    def get(self, section: str, key: str) -> Any:
        return self.values[(section, key)]

    def section(self, name: str) -> dict[str, Any]:
        return {k: self.values[(name, k)] for k in SCHEMA[name]}

    def has_section(self, name: str) -> bool:
        return name in self.sections

    def provenance(self, section: str, key: str) -> str:
        """``paper-default`` unless the file set a value differing from it."""
        if (section, key) in self.explicit and self.values[(section, key)] != SCHEMA[section][key]:
            return "user"
        return "paper-default"

    def resolve_path(self, p: str) -> Path:
        path = Path(p)
        if not path.is_absolute() and self.source_dir is not None:
            path = self.source_dir / path
        return path

    def with_values(self, **updates) -> "DeviceConfig":
        """Copy with ``section__key=value`` overrides, revalidated."""
        vals = dict(self.values)
        explicit = set(self.explicit)
        for k, v in updates.items():
            sec, key = k.split("__", 1)
            vals[(sec, key)] = v
            explicit.add((sec, key))
        return _build(vals, frozenset(explicit), self.sections, self.modes,
                      self.couplings, self.source_dir)


def _unknown(key: str, known) -> str:
    near = difflib.get_close_matches(key, list(known), n=1)
    hint = f" (did you mean {near[0]!r}?)" if near else ""
    return f"unknown key {key!r}{hint}"


def _convert(section: str, key: str, raw: str, default: Any) -> Any:
    raw = raw.strip()
    if isinstance(default, str):
        choices = CHOICES.get((section, key))
        if choices and raw not in choices:
            raise ConfigValidationError(
                f"[{section}] {key} must be one of {choices}, got {raw!r}", key)
        return raw
    if isinstance(default, bool):
        raise TypeError("no boolean keys")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigParseError(f"[{section}] {key}: expected integer, got {raw!r}", key)
    try:
        return float(raw)
    except ValueError:
        raise ConfigParseError(f"[{section}] {key}: expected number, got {raw!r}", key)


def parse_config(text: str, source_dir: Path | None = None) -> DeviceConfig:
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",),
        default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(f"malformed config: {exc}") from exc

    values: dict[tuple[str, str], Any] = {
        (s, k): d for s, keys in SCHEMA.items() for k, d in keys.items()}
    explicit = set()
    modes: dict[int, dict] = {}
    couplings: list[tuple[int, int, float]] = []
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigParseError(_unknown(sec, SCHEMA).replace("key", "section"), sec)
        for key, raw in cp.items(sec):
            if sec == "hybridization" and (m := _MODE_KEY.match(key)):
                idx, attr = int(m.group(1)), m.group(2)
                if attr not in MODE_FIELDS:
                    raise ConfigParseError(_unknown(attr, MODE_FIELDS) + f" in {key!r}", key)
                modes.setdefault(idx, {})[attr] = _convert(sec, key, raw, 0.0)
                continue
            if sec == "hybridization" and (m := _COUPLING_KEY.match(key)):
                couplings.append((int(m.group(1)), int(m.group(2)),
                                  _convert(sec, key, raw, 0.0)))
                continue
            if key not in SCHEMA[sec]:
                raise ConfigParseError(f"[{sec}] " + _unknown(key, SCHEMA[sec]), key)
            values[(sec, key)] = _convert(sec, key, raw, SCHEMA[sec][key])
            explicit.add((sec, key))

    mode_list = []
    if modes:
        if sorted(modes) != list(range(len(modes))):
            raise ConfigValidationError("mode indices must be contiguous from 0", "mode")
        for i in range(len(modes)):
            m = {"freq": None, "g_pe0": 0.0, "g_om0": 0.0, "piezo_weight": 0.0, "kappa_rad0": 0.0}
            m.update(modes[i])
            if m["freq"] is None:
                raise ConfigValidationError(f"mode.{i}.freq is required", f"mode.{i}.freq")
            mode_list.append(m)
    return _build(values, frozenset(explicit), tuple(cp.sections()), tuple(mode_list),
                  tuple(sorted(couplings)), source_dir)


def _build(values, explicit, sections, modes, couplings, source_dir) -> DeviceConfig:
    rates = RateSet(**{k: values[("rates", k)] for k in SCHEMA["rates"]})
    pulse = PulseParams(values[("pulse", "n_o")], values[("pulse", "tau")],
                        values[("pulse", "rep_rate")])
    _validate(values, modes, couplings)
    return DeviceConfig(rates, pulse, dict(values), explicit, sections, modes,
                        couplings, source_dir)


def _validate(values, modes, couplings) -> None:
    def check(cond, sec, key, what):
        if not cond:
            raise ConfigValidationError(f"[{sec}] {key} {what}, got {values[(sec, key)]!r}", key)

    v = values
    check(v[("pulse", "n_max")] > 0, "pulse", "n_max", "must be > 0")
    check(0 < v[("pulse", "n_o_min")] < v[("pulse", "n_o_max")], "pulse", "n_o_min",
          "must satisfy 0 < n_o_min < n_o_max")
    check(0 < v[("pulse", "tau_min")] < v[("pulse", "tau_max")], "pulse", "tau_min",
          "must satisfy 0 < tau_min < tau_max")
    check(v[("pulse", "tau_max")] * v[("pulse", "rep_rate")] < 1, "pulse", "tau_max",
          "must satisfy rep_rate * tau_max < 1")
    for ax in ("n_o", "tau"):
        lo, hi = f"sweep_{ax}_min", f"sweep_{ax}_max"
        check(0 <= v[("pulse", lo)] <= v[("pulse", hi)], "pulse", lo, "must be >= 0 and <= max")
        check(v[("pulse", f"sweep_{ax}_points")] >= 1, "pulse", f"sweep_{ax}_points",
              "must be >= 1")
    for k in SCHEMA["heating"]:
        check(v[("heating", k)] >= 0, "heating", k, "must be >= 0")
    check(v[("heating", "n_o_ref")] > 0, "heating", "n_o_ref", "must be > 0")
    for k in ("dephasing_fraction_q", "dephasing_fraction_m"):
        check(0 <= v[("swap", k)] <= 1, "swap", k, "must lie in [0, 1]")
    check(v[("swap", "n_th")] >= 0, "swap", "n_th", "must be >= 0")
    check(v[("swap", "fock_dim")] >= 2, "swap", "fock_dim", "must be >= 2")
    check(v[("swap", "samples")] >= 2, "swap", "samples", "must be >= 2")
    for k in ("eta_fiber", "eta_filter", "eta_detector"):
        check(0 <= v[("budget", k)] <= 1, "budget", k, "must lie in [0, 1]")
    if v[("budget", "eta_pe")] is not None:
        check(0 <= v[("budget", "eta_pe")] <= 1, "budget", "eta_pe", "must lie in [0, 1]")
    check(v[("hybridization", "sweep_points")] >= 1, "hybridization", "sweep_points",
          "must be >= 1")
    for i, m in enumerate(modes):
        if not m["freq"] > 0:
            raise ConfigValidationError(f"mode.{i}.freq must be > 0", f"mode.{i}.freq")
        if not 0 <= m["piezo_weight"] <= 1:
            raise ConfigValidationError(f"mode.{i}.piezo_weight must lie in [0, 1]",
                                        f"mode.{i}.piezo_weight")
    for i, j, _ in couplings:
        if i == j or max(i, j) >= len(modes):
            raise ConfigValidationError(f"coupling.{i}.{j} refers to an invalid mode pair",
                                        f"coupling.{i}.{j}")
    f = "fields"
    check(v[(f, "n")] > 1, f, "n", "must be > 1")
    check(v[(f, "eps_si")] > v[(f, "eps_air")] > 0, f, "eps_si", "must satisfy eps_si > eps_air > 0")
    for k in ("u_m", "u_q", "denom"):
        if v[(f, k)] is not None:
            check(v[(f, k)] > 0, f, k, "must be > 0")


def load_config(path: str | Path) -> DeviceConfig:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigParseError(f"{path}: not UTF-8 ({exc})") from exc
    return parse_config(text, source_dir=path.parent)


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: DeviceConfig) -> str:
    """Canonical text form; ``parse_config(dump_config(c))`` reproduces ``c``."""
    out = []
    for sec, keys in SCHEMA.items():
        if sec in OPTIONAL_SECTIONS and sec not in cfg.sections:
            continue
        lines = [f"{k} = {_fmt(cfg.values[(sec, k)])}" for k in keys
                 if cfg.values[(sec, k)] is not None]
        if sec == "hybridization":
            for i, m in enumerate(cfg.modes):
                lines += [f"mode.{i}.{a} = {_fmt(float(m[a]))}" for a in MODE_FIELDS]
            lines += [f"coupling.{i}.{j} = {_fmt(float(J))}" for i, j, J in cfg.couplings]
        out.append(f"[{sec}]\n" + "\n".join(lines) + "\n")
    return "\n".join(out)


def paper_config_path() -> Path:
    return Path(__file__).with_name("data") / "paper.cfg"


__all__ = [
    "TWO_PI", "ConfigError", "ConfigParseError", "ConfigValidationError", "RateSet",
    "PulseParams", "DeviceConfig", "SCHEMA", "to_angular", "from_angular", "parse_config",
    "load_config", "dump_config", "paper_config_path",
]
