"""Flat INI-style configuration: [source], [fiber], [filter], [sweep].

Every key is optional except that a custom sweep needs both axes. Values
missing from the file take the defaults below; a preset in [sweep] supplies
one of the reference lattices and locks the parameters it fixes.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass

from .chain import BASE_T1_X, BASE_T1_XX, BSM_X_X, BSM_XX_X, FiberLink, QdSource, RateParams
from .formulas import ALIGNED_EQUAL, JITTER_PHYSICAL, JITTER_PRINTED, WORST_CASE
from .numerics import DomainError
from .states import NOISE_PRODUCT, NOISE_WHITE
from .sweep import AXIS_PARAMETERS, CUSTOM, DEFAULT_POINTS, PRESETS, Axis, ChainConfig, SweepSpec, preset_spec
from .wavepacket.grid import FilterSpec


class ConfigError(ValueError):
    """Invalid configuration; ``key`` and ``line`` locate the offending entry."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f" (line {line})" if line else ""
        super().__init__(f"{message}{where}")
        self.key = key
        self.line = line


class UnknownKeyError(ConfigError):
    pass


class MissingKeyError(ConfigError):
    pass


class ValueRangeError(ConfigError):
    pass


@dataclass(frozen=True)
class Field:
    kind: str  # "float", "int", "choice", "optional_float", "int_list"
    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = False
    hi_open: bool = False
    choices: tuple[str, ...] = ()


_NONNEG = Field("float", 0.0)
_POS = Field("float", 0.0, lo_open=True)
_PROB = Field("float", 0.0, 1.0)
_ANY = Field("float")

SCHEMA: dict[str, dict[str, Field]] = {
    "source": {
        "fss": _NONNEG,
        "g2": Field("float", 0.0, 1.0, hi_open=True),
        "delta_e": _NONNEG,
        "purcell_x": Field("float", 1.0),
        "purcell_xx": Field("float", 1.0),
        "t1_x": _POS,
        "t1_xx": _POS,
        "emission_energy": _ANY,
        "rate": _POS,
        "epsilon": _PROB,
        "eta": _PROB,
    },
    "fiber": {
        "length": _NONNEG,
        "attenuation": _NONNEG,
        "pmd_d": _NONNEG,
        "alignment": Field("choice", choices=(WORST_CASE, ALIGNED_EQUAL)),
    },
    "filter": {
        "fwhm": Field("optional_float", 0.0, lo_open=True),
        "center_detuning": _ANY,
    },
    "sweep": {
        "preset": Field("choice", choices=PRESETS + (CUSTOM,)),
        "axis1": Field("choice", choices=AXIS_PARAMETERS),
        "axis1_min": _ANY,
        "axis1_max": _ANY,
        "axis1_points": Field("int", 1.0),
        "axis1_step": _POS,
        "axis2": Field("choice", choices=AXIS_PARAMETERS),
        "axis2_min": _ANY,
        "axis2_max": _ANY,
        "axis2_points": Field("int", 1.0),
        "axis2_step": _POS,
        "depths": Field("int_list", 0.0),
        "purcell_xx_ratio": _POS,
        "bsm_mode": Field("choice", choices=(BSM_X_X, BSM_XX_X)),
        "jitter_convention": Field("choice", choices=(JITTER_PRINTED, JITTER_PHYSICAL)),
        "noise": Field("choice", choices=(NOISE_PRODUCT, NOISE_WHITE)),
    },
}

# Values each preset fixes; a file may repeat them but not change them.
PRESET_LOCKS: dict[str, dict[tuple[str, str], object]] = {
    "fig2a": {("source", "fss"): 0.05, ("sweep", "purcell_xx_ratio"): 1.0, ("sweep", "axis1"): "purcell", ("sweep", "axis2"): "delta_e"},
    "fig2b": {("source", "fss"): 0.05, ("sweep", "purcell_xx_ratio"): 7.0, ("sweep", "axis1"): "purcell", ("sweep", "axis2"): "delta_e"},
    "fig2c": {
        ("source", "fss"): 0.05,
        ("source", "purcell_x"): 2.0,
        ("source", "purcell_xx"): 10.0,
        ("sweep", "axis1"): "filter_fwhm",
        ("sweep", "axis2"): "delta_e",
    },
}


@dataclass(frozen=True)
class Config:
    fixed: ChainConfig
    sweep: SweepSpec | None = None

    def require_sweep(self) -> SweepSpec:
        if self.sweep is None:
            raise MissingKeyError("missing key 'axis1': a sweep needs [sweep] preset or axis1/axis2", key="axis1")
        return self.sweep


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), n)
    return lines


def _convert(section: str, key: str, raw: str, line: int | None):
    f = SCHEMA[section][key]
    raw = raw.strip()
    try:
        if f.kind == "choice":
            value = raw.lower()
            if value not in f.choices:
                raise ValueRangeError(
                    f"[{section}] {key} must be one of {', '.join(f.choices)}, got {raw!r}", key, line
                )
            return value
        if f.kind == "optional_float" and raw.lower() in ("", "none", "off"):
            return None
        if f.kind == "int_list":
            values = [int(v) for v in re.split(r"[,\s]+", raw) if v]
            if not values:
                raise ValueRangeError(f"[{section}] {key} must list at least one integer", key, line)
            for v in values:
                _check_range(section, key, f, v, line)
            return tuple(values)
        value = int(raw) if f.kind == "int" else float(raw)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ValueRangeError(f"[{section}] {key}: cannot parse {raw!r}", key, line) from None
    if f.kind != "int" and not math.isfinite(value):
        raise ValueRangeError(f"[{section}] {key} must be finite", key, line)
    _check_range(section, key, f, value, line)
    return value


def _check_range(section, key, f: Field, value, line):
    low_bad = value <= f.lo if f.lo_open else value < f.lo
    high_bad = value >= f.hi if f.hi_open else value > f.hi
    if low_bad or high_bad:
        lo = "(" if f.lo_open else "["
        hi = ")" if f.hi_open else "]"
        raise ValueRangeError(f"[{section}] {key} = {value} outside {lo}{f.lo:g}, {f.hi:g}{hi}", key, line)


def parse_config(text: str, preset: str | None = None) -> Config:
    """Parse and validate a configuration document.

    ``preset`` selects a reference lattice as if [sweep] preset were set; a
    different preset in the document is an error.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.option, exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", None, exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", None, exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    lines = _key_lines(text)

    values: dict[tuple[str, str], object] = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            line = next((n for n, raw in enumerate(text.splitlines(), 1) if raw.strip().lower() == f"[{sec}]"), None)
            raise UnknownKeyError(f"unknown section [{section}]", section, line)
        for key, raw in parser.items(section):
            line = lines.get((sec, key))
            if key not in SCHEMA[sec]:
                raise UnknownKeyError(f"unknown key {key!r} in [{sec}]", key, line)
            values[(sec, key)] = _convert(sec, key, raw, line)
    if preset is not None:
        given = values.get(("sweep", "preset"), preset)
        if given != preset:
            raise ValueRangeError(
                f"preset {preset} conflicts with [sweep] preset = {given}", "preset", lines.get(("sweep", "preset"))
            )
        values[("sweep", "preset")] = _convert("sweep", "preset", preset, None)
    return _build(values, lines)


def _build(values: dict, lines: dict) -> Config:
    def get(section, key, default=None):
        return values.get((section, key), default)

    def fail(key_section, exc):
        section, key = key_section
        raise ValueRangeError(f"[{section}] {key}: {exc}", key, lines.get(key_section)) from None

    preset = get("sweep", "preset", CUSTOM)
    base = preset_spec(preset) if preset != CUSTOM else None
    for k, locked in PRESET_LOCKS.get(preset, {}).items():
        if k in values and values[k] != locked:
            raise ValueRangeError(
                f"preset {preset} fixes [{k[0]}] {k[1]} = {locked}, got {values[k]}", k[1], lines.get(k)
            )

    fixed = base.fixed if base else ChainConfig()
    src0 = fixed.source
    # per-key ranges were checked in _convert, so these constructors cannot fail
    source = QdSource(
        S=get("source", "fss", src0.S),
        g2=get("source", "g2", src0.g2),
        delta_E=get("source", "delta_e", src0.delta_E),
        P_X=get("source", "purcell_x", src0.P_X),
        P_XX=get("source", "purcell_xx", src0.P_XX),
        base_T1_X=get("source", "t1_x", BASE_T1_X),
        base_T1_XX=get("source", "t1_xx", BASE_T1_XX),
        emission_energy=get("source", "emission_energy", src0.emission_energy),
    )
    rate = RateParams(
        get("source", "rate", fixed.rate.R),
        get("source", "epsilon", fixed.rate.epsilon),
        get("source", "eta", fixed.rate.eta),
    )
    fiber = FiberLink(
        get("fiber", "length", fixed.fiber.length),
        get("fiber", "attenuation", fixed.fiber.attenuation),
        get("fiber", "pmd_d", fixed.fiber.pmd_D),
        get("fiber", "alignment", fixed.fiber.alignment),
    )
    filt = fixed.filter
    if ("filter", "fwhm") in values:
        fw = values[("filter", "fwhm")]
        filt = None if fw is None else FilterSpec(fw, get("filter", "center_detuning", 0.0))
    elif ("filter", "center_detuning") in values and filt is not None:
        filt = FilterSpec(filt.fwhm, values[("filter", "center_detuning")])
    fixed = ChainConfig(
        source=source,
        rate=rate,
        fiber=fiber,
        filter=filt,
        bsm_mode=get("sweep", "bsm_mode", fixed.bsm_mode),
        jitter_convention=get("sweep", "jitter_convention", fixed.jitter_convention),
        noise=get("sweep", "noise", fixed.noise),
    )

    axes = []
    for n in (1, 2):
        name_key = ("sweep", f"axis{n}")
        base_axis = getattr(base, f"axis{n}") if base else None
        if name_key not in values and base_axis is None:
            axes.append(None)
            continue
        name = values.get(name_key, base_axis.name if base_axis else None)
        keys = {s: ("sweep", f"axis{n}_{s}") for s in ("min", "max", "points", "step")}
        start = values.get(keys["min"], base_axis.start if base_axis else None)
        stop = values.get(keys["max"], base_axis.stop if base_axis else None)
        for s, v in (("min", start), ("max", stop)):
            if v is None:
                raise MissingKeyError(f"missing key 'axis{n}_{s}' in [sweep]", f"axis{n}_{s}", lines.get(name_key))
        if keys["points"] in values and keys["step"] in values:
            raise ConfigError(f"give axis{n}_points or axis{n}_step, not both", f"axis{n}_step", lines.get(keys["step"]))
        try:
            if keys["step"] in values:
                axis = Axis.from_step(name, start, stop, values[keys["step"]])
            else:
                axis = Axis(name, start, stop, values.get(keys["points"], base_axis.points if base_axis else DEFAULT_POINTS))
        except DomainError as exc:
            fail(keys["max"], exc)
        axes.append(axis)

    if (axes[0] is None) != (axes[1] is None):
        n = 2 if axes[1] is None else 1
        raise MissingKeyError(f"missing key 'axis{n}' in [sweep]", f"axis{n}")
    sweep = None
    if axes[0] is not None:
        sweep = SweepSpec(
            axes[0],
            axes[1],
            fixed,
            get("sweep", "depths", base.depths if base else (1, 2, 3)),
            preset,
            get("sweep", "purcell_xx_ratio", base.purcell_xx_ratio if base else 1.0),
        )
    return Config(fixed, sweep)


def load_config(path=None, preset: str | None = None) -> Config:
    """Read a configuration file; with no path, start from the defaults."""
    if path is None:
        return parse_config("", preset)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not UTF-8 text ({exc.reason})") from None
    return parse_config(text, preset)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return str(v)


def serialize_config(c: Config) -> str:
    """Fully resolved document; parsing it gives back an equal Config."""
    f = c.fixed
    s = f.source
    sections = {
        "source": {
            "fss": s.S,
            "g2": s.g2,
            "delta_e": s.delta_E,
            "purcell_x": s.P_X,
            "purcell_xx": s.P_XX,
            "t1_x": s.base_T1_X,
            "t1_xx": s.base_T1_XX,
            "emission_energy": s.emission_energy,
            "rate": f.rate.R,
            "epsilon": f.rate.epsilon,
            "eta": f.rate.eta,
        },
        "fiber": {
            "length": f.fiber.length,
            "attenuation": f.fiber.attenuation,
            "pmd_d": f.fiber.pmd_D,
            "alignment": f.fiber.alignment,
        },
        "filter": {
            "fwhm": "none" if f.filter is None else f.filter.fwhm,
            "center_detuning": 0.0 if f.filter is None else f.filter.center_detuning,
        },
        "sweep": {"bsm_mode": f.bsm_mode, "jitter_convention": f.jitter_convention, "noise": f.noise},
    }
    sw = c.sweep
    if sw is not None:
        sections["sweep"] = {
            "preset": sw.preset,
            **{
                k: v
                for n, ax in ((1, sw.axis1), (2, sw.axis2))
                for k, v in (
                    (f"axis{n}", ax.name),
                    (f"axis{n}_min", float(ax.start)),
                    (f"axis{n}_max", float(ax.stop)),
                    (f"axis{n}_points", ax.points),
                )
            },
            "depths": sw.depths,
            "purcell_xx_ratio": float(sw.purcell_xx_ratio),
            **sections["sweep"],
        }
    out = []
    for name, items in sections.items():
        out.append(f"[{name}]")
        out.extend(f"{k} = {_fmt(v)}" for k, v in items.items())
        out.append("")
    return "\n".join(out)


__all__ = [
    "Config",
    "ConfigError",
    "MissingKeyError",
    "UnknownKeyError",
    "ValueRangeError",
    "SCHEMA",
    "load_config",
    "parse_config",
    "serialize_config",
]
