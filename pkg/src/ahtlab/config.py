"""Experiment configuration: INI files mapped onto dataclasses, unknown keys rejected."""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .geometry import Domain, Grid2D, make_grid
from .presets import PRESETS


@dataclass
class DomainBlock:
    kind: str = "torus"
    period: float = 2 * math.pi
    radius: float = 1.0
    r_in: float = 0.5
    r_out: float = 1.5
    resolution: tuple = (64, 64)

    def domain(self) -> Domain:
        return Domain.from_config(dataclasses.asdict(self))

    def grid(self) -> Grid2D:
        return make_grid(self.domain(), self.resolution)


@dataclass
class InitialBlock:
    preset: str = "random_smooth"
    seed: int = 0
    decay: float = 0.5
    kmax: int = 4
    angle: float = 0.3
    perturb: float = 0.0
    amplitude: float = 0.2

    def params(self) -> dict:
        """Keyword arguments accepted by the chosen preset."""
        if self.preset == "random_smooth":
            return {"seed": self.seed, "decay": self.decay, "kmax": self.kmax}
        if self.preset == "rotation":
            return {"angle": self.angle, "perturb": self.perturb, "seed": self.seed}
        if self.preset == "gradient_steady":
            return {"seed": self.seed, "amplitude": self.amplitude}
        return {"seed": self.seed, "decay": self.decay}


@dataclass
class RunBlock:
    T: float = 1.0
    cfl: float = 0.5
    sample_every: float = 0.1
    filtered: bool = True
    dt_max: float = 0.1


@dataclass
class KatoBlock:
    K: int = 3
    oracle_points: int = 8
    oracle_orders: int = 3


@dataclass
class TaylorBlock:
    K: int = 5
    points: int = 100
    time_factor: float = 0.1
    substeps: int = 40


@dataclass
class ConstantsBlock:
    """Overrides; ``None`` means measure on the grid."""

    C_omega: float | None = None
    c_r: float | None = None
    c_rho: float | None = None
    C_gamma: float | None = None
    trials: int = 10


@dataclass
class VerifyBlock:
    s_max: int = 6
    m_max: int = 12
    k_max: int = 8
    kernel_max: int = 20
    K_max: int = 50


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    domain: DomainBlock = field(default_factory=DomainBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    run: RunBlock = field(default_factory=RunBlock)
    kato: KatoBlock = field(default_factory=KatoBlock)
    taylor: TaylorBlock = field(default_factory=TaylorBlock)
    constants: ConstantsBlock = field(default_factory=ConstantsBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, initial=dataclasses.replace(self.initial, seed=int(seed)))

    def initial_field(self, grid: Grid2D | None = None):
        from .presets import build

        grid = grid or self.domain.grid()
        return build(self.initial.preset, grid, **self.initial.params())

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_BLOCK_TYPES = {
    "domain": DomainBlock,
    "initial": InitialBlock,
    "run": RunBlock,
    "kato": KatoBlock,
    "taylor": TaylorBlock,
    "constants": ConstantsBlock,
    "verify": VerifyBlock,
}


def _convert(raw: str, default, key: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, tuple):
            return tuple(int(x) for x in raw.replace(",", " ").split())
        if isinstance(default, int):
            return int(raw)
        if default is None or isinstance(default, float):
            if raw.lower() in ("", "auto", "none"):
                return None
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot read {key} = {raw!r}") from None


def _block(cls, section, name):
    base = cls()
    known = {f.name for f in fields(cls)}
    values = {}
    for key, raw in section.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        values[key] = _convert(raw, getattr(base, key), f"{name}.{key}")
    return cls(**values)


def parse_config(text: str, name: str = "experiment") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__", inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    blocks = {}
    for sec in cp.sections():
        if sec == "experiment":
            for key, raw in cp[sec].items():
                if key != "name":
                    raise ConfigError(f"unknown key {key!r} in [experiment]")
                name = raw.strip()
            continue
        if sec not in _BLOCK_TYPES:
            raise ConfigError(f"unknown section [{sec}]")
        blocks[sec] = _block(_BLOCK_TYPES[sec], cp[sec], sec)
    cfg = ExperimentConfig(name=name, **blocks)
    if cfg.initial.preset not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.initial.preset!r}")
    if cfg.domain.kind not in ("torus", "disk", "annulus"):
        raise ConfigError(f"unknown domain kind {cfg.domain.kind!r}")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), name=path.stem)


def dump_config(cfg: ExperimentConfig) -> str:
    """INI text that parses back to ``cfg``."""
    lines = ["[experiment]", f"name = {cfg.name}", ""]
    for sec in _BLOCK_TYPES:
        lines.append(f"[{sec}]")
        for key, val in dataclasses.asdict(getattr(cfg, sec)).items():
            if val is None:
                val = "auto"
            elif isinstance(val, (tuple, list)):
                val = ", ".join(str(v) for v in val)
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)
