"""Run configuration: parsing, defaults and validation."""

from __future__ import annotations

import copy
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .hankel import CompanionVariant
from .spectral import DispersionCoefficients, GridConfig, ScatteringField, check_dispersion_property

MODES = ("gp-solve", "direct-solve", "compare", "verify-identities", "determinant-monitor")
PROFILES = ("sech", "gaussian", "file")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def parse_complex(value, name: str = "value") -> complex:
    """Accept ``[re, im]``, ``"re,im"``, a number, or a Python complex literal."""
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, str):
            s = value.strip()
            if "," in s:
                re, im = s.split(",")
                return complex(float(re), float(im))
            return complex(s.replace(" ", ""))
        return complex(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot parse {value!r} as a complex number") from None


@dataclass
class RunConfig:
    """Everything a run needs; defaults reproduce the reference experiment."""

    mode: str = "gp-solve"
    L: float = 40.0
    nx: int = 256
    nquad: int | None = None
    mu2: complex = -1j
    mu3: complex = 1.0
    mu4: complex = 1j
    variant: str = "adjoint"
    profile: str = "sech"
    amplitude: float = 0.15
    width: float = 40.0
    center: float = 0.0
    profile_path: str | None = None
    block: list = field(default_factory=lambda: [[1.0]])
    T: float = 100.0
    checkpoints: list | None = None
    dt: float = 1e-3
    out: str = "gp_run"
    formats: list = field(default_factory=lambda: ["csv", "json"])
    quadrature: str = "left"
    nonlinear: bool = True
    dealias: bool = False
    workers: int = 1

    # derived objects -------------------------------------------------
    @property
    def grid(self) -> GridConfig:
        b = self.block_matrix
        return GridConfig(self.L, self.nx, self.nquad, b.shape[0], b.shape[1])

    @property
    def coefficients(self) -> DispersionCoefficients:
        return DispersionCoefficients(self.mu2, self.mu3, self.mu4)

    @property
    def companion(self) -> CompanionVariant:
        return CompanionVariant.parse(self.variant)

    @property
    def block_matrix(self) -> np.ndarray:
        return np.array([[parse_complex(v, "block") for v in row] for row in self.block], dtype=complex)

    def initial_field(self) -> ScatteringField:
        grid = self.grid
        x = grid.x
        if self.profile == "sech":
            shape = self.amplitude / np.cosh((x - self.center) / self.width)
        elif self.profile == "gaussian":
            shape = self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))
        else:
            shape = load_profile_file(self.profile_path, grid.n_x)
        return ScatteringField(shape[:, None, None] * self.block_matrix[None], 0.0, grid)

    # serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, complex):
                v = [v.real, v.imag]
            out[f.name] = copy.deepcopy(v)
        return out


def _complex_echo(z: complex):
    return z.real if z.imag == 0 else [z.real, z.imag]


def load_profile_file(path: str | None, n_x: int) -> np.ndarray:
    """Profile samples on the grid: one column (real) or two (real, imag)."""
    if not path:
        raise ConfigError("profile_path", "required when profile = file")
    p = Path(path)
    if not p.exists():
        raise ConfigError("profile_path", f"no such file {path}")
    data = np.load(p) if p.suffix == ".npy" else np.loadtxt(p, delimiter="," if p.suffix == ".csv" else None)
    data = np.asarray(data)
    if data.ndim == 2 and data.shape[1] == 2 and not np.iscomplexobj(data):
        data = data[:, 0] + 1j * data[:, 1]
    data = np.ravel(data).astype(complex)
    if data.shape[0] != n_x:
        raise ConfigError("profile_path", f"expected {n_x} samples, found {data.shape[0]}")
    return data


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def config_from_dict(raw: dict | None) -> RunConfig:
    """Validated config from a flat mapping; missing keys take defaults."""
    raw = dict(raw or {})
    unknown = sorted(set(raw) - set(_FIELDS))
    if unknown:
        raise ConfigError(unknown[0], f"unknown key (allowed: {', '.join(_FIELDS)})")
    cfg = RunConfig()
    for key, value in raw.items():
        setattr(cfg, key, value)
    return validate(cfg)


def _number(cfg, name, kind):
    value = getattr(cfg, name)
    try:
        if kind is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError
            value = int(value)
        else:
            value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {kind.__name__}, got {value!r}") from None
    setattr(cfg, name, value)
    return value


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}, got {cfg.mode!r}")
    for name in ("L", "amplitude", "width", "center", "T", "dt"):
        _number(cfg, name, float)
    for name in ("nx", "workers"):
        _number(cfg, name, int)
    if cfg.nquad is None:
        cfg.nquad = cfg.nx // 2
    _number(cfg, "nquad", int)
    for name in ("mu2", "mu3", "mu4"):
        setattr(cfg, name, parse_complex(getattr(cfg, name), name))
    try:
        cfg.variant = CompanionVariant.parse(cfg.variant).value
    except ValueError as err:
        raise ConfigError("variant", str(err)) from None
    if cfg.profile not in PROFILES:
        raise ConfigError("profile", f"must be one of {PROFILES}, got {cfg.profile!r}")
    if cfg.quadrature not in ("left", "trapezoid"):
        raise ConfigError("quadrature", f"must be left or trapezoid, got {cfg.quadrature!r}")
    if not isinstance(cfg.block, list) or not cfg.block or not all(
            isinstance(r, list) and len(r) == len(cfg.block[0]) and r for r in cfg.block):
        raise ConfigError("block", "must be a non-empty rectangular list of rows")
    cfg.block = [[_complex_echo(parse_complex(e, "block")) for e in row] for row in cfg.block]
    if not cfg.T > 0 or not math.isfinite(cfg.T):
        raise ConfigError("T", f"must be positive, got {cfg.T}")
    if not cfg.dt > 0:
        raise ConfigError("dt", f"must be positive, got {cfg.dt}")
    if not cfg.width > 0:
        raise ConfigError("width", f"must be positive, got {cfg.width}")
    if cfg.checkpoints is None:
        cfg.checkpoints = [float(t) for t in np.linspace(0.0, cfg.T, 11)]
    try:
        cfg.checkpoints = [float(t) for t in cfg.checkpoints]
    except (TypeError, ValueError):
        raise ConfigError("checkpoints", "must be a list of times") from None
    if any(not 0.0 <= t <= cfg.T for t in cfg.checkpoints):
        raise ConfigError("checkpoints", f"all times must lie in [0, T={cfg.T}]")
    if isinstance(cfg.formats, str):
        cfg.formats = [cfg.formats]
    bad = [f for f in cfg.formats if f not in FORMATS]
    if bad:
        raise ConfigError("formats", f"unsupported {bad}; choose from {FORMATS}")
    for name in ("nonlinear", "dealias"):
        if not isinstance(getattr(cfg, name), bool):
            raise ConfigError(name, "must be true or false")
    cfg.out = str(cfg.out)
    try:
        cfg.grid
    except ValueError as err:
        raise ConfigError("nx" if "n_x" in str(err) else "nquad", str(err)) from None
    c = cfg.coefficients
    if cfg.companion.is_transpose and c.mu3 != 0:
        raise ConfigError("variant", f"{cfg.variant} requires mu3 = 0 (got mu3 = {c.mu3})")
    if not check_dispersion_property(c):
        raise ConfigError("mu2", "coefficients must satisfy the dispersion property "
                                 "(mu2, mu4 imaginary; mu3 real)")
    if cfg.profile == "file":
        load_profile_file(cfg.profile_path, cfg.nx)
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    """Read a flat YAML mapping (empty file gives the defaults)."""
    if path is None:
        return config_from_dict({})
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError("config", f"cannot read {path}: {err}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError("config", f"parse error: {err}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a key-value mapping")
    return config_from_dict(raw)
