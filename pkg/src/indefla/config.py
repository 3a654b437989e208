"""Plain-text run configuration.

Grammar, one entry per line::

    # comment
    key = value        # trailing comments allowed

Keys are case-sensitive, values are numbers, words, comma-separated number
lists, or ``lo..hi`` integer ranges.  Every key is optional except the
geometry ``r_i``, ``r_e``, ``R``.  Unknown keys are rejected.
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields

from .core import DEFAULT_M_MAX, AnnularGeometry, Contrast, GeometryError, IndeflaError
from .critical import DEFAULT_MARGIN, TAIL_TOLERANCE, AngularSpectrum, SourceSpec
from .regularized import DEFAULT_DELTAS


class ParseError(IndeflaError, ValueError):
    code = "parse_error"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(IndeflaError, ValueError):
    code = "validation_error"

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


# key -> (field path, kind)
_KEYS = {
    "r_i": ("geometry.r_i", "float"),
    "r_e": ("geometry.r_e", "float"),
    "R": ("geometry.R", "float"),
    "mu": ("contrast.mu", "float"),
    "delta": ("contrast.delta", "float"),
    "a": ("source.a", "float"),
    "b": ("source.b", "float"),
    "spectrum": ("source.spectrum", "word"),
    "h_amplitude": ("source.h_amplitude", "float"),
    "h_power": ("source.h_power", "float"),
    "h_ratio": ("source.h_ratio", "float"),
    "h_mode": ("source.h_mode", "int"),
    "h_modes": ("source.h_modes", "intlist"),
    "h_values": ("source.h_values", "floatlist"),
    "M_max": ("M_max", "int"),
    "margin": ("tolerances.margin", "float"),
    "tail_tolerance": ("tolerances.tail_tolerance", "float"),
    "deltas": ("sweep.deltas", "floatlist"),
    "fit_discard": ("sweep.fit_discard", "int"),
    "modes": ("modes", "range"),
    "window": ("spectral.window", "range"),
    "m": ("m", "int"),
    "n_points": ("oracle.n_points", "int"),
    "doublings": ("oracle.doublings", "int"),
    "samples": ("field.samples", "int"),
    "out": ("out", "word"),
}

_SPECTRA = ("parametric", "single", "explicit")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass
class RunConfig:
    r_i: float
    r_e: float
    R: float
    mu: float = 1.0
    delta: float = 0.0
    a: float | None = None
    b: float | None = None
    spectrum: str = "parametric"
    h_amplitude: float = 1.0
    h_power: float = 2.0
    h_ratio: float = 1.0
    h_mode: int = 3
    h_modes: tuple = ()
    h_values: tuple = ()
    M_max: int = DEFAULT_M_MAX
    margin: float = DEFAULT_MARGIN
    tail_tolerance: float = TAIL_TOLERANCE
    deltas: tuple = DEFAULT_DELTAS
    fit_discard: int = 2
    modes: tuple = (0, 8)
    window: tuple | None = None
    m: int = 3
    n_points: int = 128
    doublings: int = 3
    samples: int = 201
    out: str = "indefla_out"
    explicit_keys: tuple = field(default=(), repr=False)

    @property
    def geometry(self) -> AnnularGeometry:
        return AnnularGeometry(self.r_i, self.r_e, self.R)

    @property
    def contrast(self) -> Contrast:
        return Contrast(self.mu, self.delta)

    @property
    def has_source(self) -> bool:
        return self.a is not None and self.b is not None

    def angular_spectrum(self) -> AngularSpectrum:
        if self.spectrum == "single":
            return AngularSpectrum.single(self.h_mode, self.h_amplitude)
        if self.spectrum == "explicit":
            return AngularSpectrum(explicit=dict(zip(self.h_modes, (complex(v) for v in self.h_values))))
        return AngularSpectrum.parametric(self.h_amplitude, self.h_power, self.h_ratio)

    def source(self) -> SourceSpec:
        if not self.has_source:
            raise ValidationError("source", "this subcommand needs a source: set a and b")
        return SourceSpec(self.a, self.b, self.angular_spectrum())

    def echo(self) -> dict:
        """All settings, defaults included, for the output report."""
        d = asdict(self)
        d.pop("explicit_keys")
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


def _convert(kind: str, raw: str, line: int, col: int):
    def num(tok: str, c: int) -> float:
        tok = tok.strip()
        if not _NUMBER.match(tok):
            raise ParseError(f"expected a number, got {tok!r}", line, c)
        return float(tok)

    if kind == "float":
        return num(raw, col)
    if kind == "int":
        v = num(raw, col)
        if v != int(v):
            raise ParseError(f"expected an integer, got {raw!r}", line, col)
        return int(v)
    if kind == "word":
        if not raw or any(ch.isspace() for ch in raw):
            raise ParseError(f"expected a single word, got {raw!r}", line, col)
        return raw
    if kind in ("floatlist", "intlist"):
        out, offset = [], 0
        for tok in raw.split(","):
            v = num(tok, col + offset)
            if kind == "intlist":
                if v != int(v):
                    raise ParseError(f"expected an integer, got {tok.strip()!r}", line, col + offset)
                v = int(v)
            out.append(v)
            offset += len(tok) + 1
        return tuple(out)
    if kind == "range":
        mt = re.match(r"^\s*([+-]?\d+)\s*\.\.\s*([+-]?\d+)\s*$", raw)
        if not mt:
            raise ParseError(f"expected a range lo..hi, got {raw!r}", line, col)
        return (int(mt.group(1)), int(mt.group(2)))
    raise AssertionError(kind)


def parse_document(text: str) -> dict:
    """Raw ``key -> value`` mapping with types applied; raises :class:`ParseError`."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ParseError("expected 'key = value'", lineno, col)
        key_part, value_part = body.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", key):
            raise ParseError(f"invalid key {key!r}", lineno, key_col)
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, key_col)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, key_col)
        raw = value_part.strip()
        val_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if not raw:
            raise ParseError(f"missing value for {key!r}", lineno, val_col)
        values[key] = _convert(_KEYS[key][1], raw, lineno, val_col)
    return values


def apply_overrides(values: dict, overrides: dict) -> dict:
    """Merge ``--key value`` overrides (strings) into parsed values."""
    out = dict(values)
    for key, raw in overrides.items():
        if key not in _KEYS:
            raise ValidationError(key, "unknown key")
        try:
            out[key] = _convert(_KEYS[key][1], str(raw).strip(), 0, 0)
        except ParseError as exc:
            raise ValidationError(_KEYS[key][0], f"bad override value {raw!r}") from exc
    return out


def build_config(values: dict) -> RunConfig:
    """Validate and apply defaults; raises :class:`ValidationError` with a field path."""
    for key in ("r_i", "r_e", "R"):
        if key not in values:
            raise ValidationError(_KEYS[key][0], "required")
    for key, val in values.items():
        if _KEYS[key][1] == "float" and not math.isfinite(val):
            raise ValidationError(_KEYS[key][0], "must be finite")
    try:
        geom = AnnularGeometry(values["r_i"], values["r_e"], values["R"])
    except GeometryError as exc:
        raise ValidationError("geometry", f"need 0 < r_i < r_e < R ({exc})") from None
    cfg = RunConfig(**values, explicit_keys=tuple(sorted(values)))
    if cfg.mu <= 0:
        raise ValidationError("contrast.mu", "must be positive")
    if cfg.delta < 0:
        raise ValidationError("contrast.delta", "must be nonnegative")
    if cfg.spectrum not in _SPECTRA:
        raise ValidationError("source.spectrum", f"must be one of {', '.join(_SPECTRA)}")
    if (cfg.a is None) != (cfg.b is None):
        raise ValidationError("source", "a and b must be given together")
    if cfg.has_source:
        if cfg.a < geom.r_e:
            raise ValidationError("source.a", f"support must satisfy r_e <= a (a={cfg.a}, r_e={geom.r_e})")
        if cfg.b > geom.R:
            raise ValidationError("source.b", f"support must satisfy b <= R (b={cfg.b}, R={geom.R})")
        if cfg.b <= cfg.a:
            raise ValidationError("source.b", f"support must satisfy a < b (a={cfg.a}, b={cfg.b})")
    if cfg.h_ratio < 0:
        raise ValidationError("source.h_ratio", "must be nonnegative")
    if cfg.spectrum == "explicit":
        if not cfg.h_modes or len(cfg.h_modes) != len(cfg.h_values):
            raise ValidationError("source.h_values", "explicit spectrum needs h_modes and h_values of equal length")
        if len(set(cfg.h_modes)) != len(cfg.h_modes):
            raise ValidationError("source.h_modes", "modes must be distinct")
    if cfg.M_max < 1:
        raise ValidationError("M_max", "must be at least 1")
    if abs(cfg.m) > cfg.M_max:
        raise ValidationError("m", f"|m| must not exceed M_max={cfg.M_max}")
    if not (0 < cfg.margin < 1):
        raise ValidationError("tolerances.margin", "must lie in (0, 1)")
    if not (cfg.tail_tolerance > 0):
        raise ValidationError("tolerances.tail_tolerance", "must be positive")
    if len(cfg.deltas) < 4 or min(cfg.deltas) <= 0:
        raise ValidationError("sweep.deltas", "need at least 4 strictly positive values")
    if math.log10(max(cfg.deltas) / min(cfg.deltas)) < 3 - 1e-9:
        raise ValidationError("sweep.deltas", "values must span at least 3 decades")
    if not (0 <= cfg.fit_discard <= len(cfg.deltas) - 4):
        raise ValidationError("sweep.fit_discard", "must leave at least 4 points for the fit")
    lo, hi = cfg.modes
    if lo < 0 or hi < lo:
        raise ValidationError("modes", "need 0 <= lo <= hi")
    if cfg.window is not None:
        wlo, whi = cfg.window
        if wlo < 5 or whi > cfg.M_max or whi - wlo + 1 < 10:
            raise ValidationError("spectral.window", f"window must lie in [5, M_max={cfg.M_max}] with length >= 10")
    if cfg.n_points < 64:
        raise ValidationError("oracle.n_points", "must be at least 64")
    if not (1 <= cfg.doublings <= 6):
        raise ValidationError("oracle.doublings", "must lie in [1, 6]")
    if cfg.samples < 2:
        raise ValidationError("field.samples", "must be at least 2")
    return cfg


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    values = parse_document(text)
    if overrides:
        values = apply_overrides(values, overrides)
    return build_config(values)


def config_keys() -> list[str]:
    return list(_KEYS)


def defaults() -> dict:
    return {f.name: f.default for f in fields(RunConfig) if f.name in _KEYS and f.default is not None
            and not callable(f.default)}
