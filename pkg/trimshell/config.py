"""
Experiment configuration files.

A config file is flat UTF-8 text with one ``key = value`` pair per line and ``#``
comments. Keys are dotted names; every key has a documented default and unknown
keys are rejected:

    key               default            meaning
    example.id        plate_trimmed      plate_trimmed | rotated_plate | plate_cutout | fuselage_window
    disc.p            3                  spline degree
    disc.n            16                 elements per direction
    disc.quad_extra   0                  extra Gauss points per direction
    trim.eps          1e-8               relative trimming parameter delta / h
    trim.enabled      true               false: boundary-fitted variant
    mat.E             1.0                Young modulus
    mat.nu            0.25               Poisson ratio
    mat.rho           1.0                density
    mat.tau           0.05               thickness
    mass.kind         stabilized_lumped  consistent | lumped | stabilized_consistent | stabilized_lumped
    stab.gamma        0.1                large-element threshold
    time.scheme       auto               auto | central_difference | newmark
    time.t1           0.0                end time (0: a quarter period of the load)
    time.safety       0.9                dt = safety * dt_c
    time.dt           0.0                fixed step (0: derived from dt_c)
    time.dt_from      lumped             mass kind whose dt_c sets the step
    time.record_every 10                 history stride
    out.dir           output             output directory
    out.vtk_n         41                 VTK lattice points per direction (0: no VTK)
    out.snapshots     0.25,0.5,1.0       snapshot times as fractions of t1
    out.stress        false              add the bending stress M11 to VTK snapshots
    spectrum.k        3                  smallest eigenvalues reported
    sweep.kinds       consistent,lumped,stabilized_lumped
    reference.n       0                  reference grid for prescribed-data errors (0: none)
    seed              0                  power-iteration seed
"""

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from .errors import ConfigurationError

EXAMPLE_IDS = ("plate_trimmed", "rotated_plate", "plate_cutout", "fuselage_window")
SCHEMES = ("auto", "central_difference", "newmark")
_MASS_KINDS = ("consistent", "lumped", "stabilized_consistent", "stabilized_lumped")
_SECTION = "config"


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment.

    Attributes mirror the config keys (see module docstring); tuples hold
    comma-separated values.
    """

    example: str = "plate_trimmed"
    p: int = 3
    n: int = 16
    quad_extra: int = 0
    eps: float = 1e-8
    trim_enabled: bool = True
    E: float = 1.0
    nu: float = 0.25
    rho: float = 1.0
    tau: float = 0.05
    mass_kind: str = "stabilized_lumped"
    gamma: float = 0.1
    scheme: str = "auto"
    t1: float = 0.0
    safety: float = 0.9
    dt: float = 0.0
    dt_from: str = "lumped"
    record_every: int = 10
    out_dir: str = "output"
    vtk_n: int = 41
    snapshots: Tuple[float, ...] = (0.25, 0.5, 1.0)
    stress: bool = False
    spectrum_k: int = 3
    sweep_kinds: Tuple[str, ...] = ("consistent", "lumped", "stabilized_lumped")
    reference_n: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.example not in EXAMPLE_IDS:
            raise ConfigurationError(
                f"Unknown example '{self.example}', expected one of {EXAMPLE_IDS}"
            )
        if self.p < 1:
            raise ConfigurationError(f"disc.p must be >= 1, got {self.p}")
        if self.n < 2:
            raise ConfigurationError(f"disc.n must be >= 2, got {self.n}")
        if not 0.0 < self.eps < 0.5:
            raise ConfigurationError(f"trim.eps must lie in (0, 0.5), got {self.eps}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"stab.gamma must lie in [0, 1], got {self.gamma}")
        if self.tau <= 0:
            raise ConfigurationError(f"mat.tau must be positive, got {self.tau}")
        for kind in (self.mass_kind, self.dt_from, *self.sweep_kinds):
            if kind not in _MASS_KINDS:
                raise ConfigurationError(f"Unknown mass kind '{kind}'")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"Unknown time scheme '{self.scheme}'")
        if not 0.0 < self.safety <= 1.0:
            raise ConfigurationError(f"time.safety must lie in (0, 1], got {self.safety}")

    @property
    def stabilized(self) -> bool:
        return self.mass_kind.startswith("stabilized")

    @property
    def lumped(self) -> bool:
        return self.mass_kind.endswith("lumped")

    @property
    def resolved_scheme(self) -> str:
        if self.scheme != "auto":
            return self.scheme
        return "central_difference" if self.lumped else "newmark"

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _words(text: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


# key -> (attribute, parser)
KEYS = {
    "example.id": ("example", str.strip),
    "disc.p": ("p", int),
    "disc.n": ("n", int),
    "disc.quad_extra": ("quad_extra", int),
    "trim.eps": ("eps", float),
    "trim.enabled": ("trim_enabled", _bool),
    "mat.E": ("E", float),
    "mat.nu": ("nu", float),
    "mat.rho": ("rho", float),
    "mat.tau": ("tau", float),
    "mass.kind": ("mass_kind", str.strip),
    "stab.gamma": ("gamma", float),
    "time.scheme": ("scheme", str.strip),
    "time.t1": ("t1", float),
    "time.safety": ("safety", float),
    "time.dt": ("dt", float),
    "time.dt_from": ("dt_from", str.strip),
    "time.record_every": ("record_every", int),
    "out.dir": ("out_dir", str.strip),
    "out.vtk_n": ("vtk_n", int),
    "out.snapshots": ("snapshots", _floats),
    "out.stress": ("stress", _bool),
    "spectrum.k": ("spectrum_k", int),
    "sweep.kinds": ("sweep_kinds", _words),
    "reference.n": ("reference_n", int),
    "seed": ("seed", int),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text.

    Raises:
        ConfigurationError: On unknown keys, duplicate keys or malformed values.
    """
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigurationError(f"Malformed config: {exc}") from exc

    values: Dict[str, Any] = {}
    for key, raw in parser.items(_SECTION):
        if key not in KEYS:
            raise ConfigurationError(f"Unknown config key '{key}'")
        attr, convert = KEYS[key]
        try:
            values[attr] = convert(raw)
        except ValueError as exc:
            raise ConfigurationError(f"Invalid value for '{key}': {raw!r} ({exc})") from exc
    return ExperimentConfig(**values)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"))


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_text(config: ExperimentConfig) -> str:
    """Full config text, one line per key in documented order."""
    return "".join(
        f"{key} = {_format(getattr(config, attr))}\n" for key, (attr, _) in KEYS.items()
    )
