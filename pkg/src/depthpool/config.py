"""One text configuration file for the whole pipeline.

The format is INI-style ``key = value`` with one section per stage; every
key has a default, so an empty file is a valid configuration.  Use
``depthpool config --dump`` to print the full annotated default file.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields

from .baseline import DEFAULT_DOWNSAMPLE
from .errors import ConfigError, MissingPathError
from .rank_pooling import HierarchyConfig, RankPoolParams
from .representations import BackgroundParams, GmmParams
from .segmentation import QomParams

KNOWN_CHANNELS = ("ddi", "ddni", "ddmni")


@dataclass
class BaselineParams:
    downsample: int = DEFAULT_DOWNSAMPLE

    def __post_init__(self) -> None:
        if self.downsample < 2:
            raise ValueError("downsample must be at least 2")


@dataclass
class PipelineConfig:
    """Aggregated settings of every pipeline stage."""

    channels: tuple[str, ...] = KNOWN_CHANNELS
    seed: int = 0
    jobs: int = 1
    qom: QomParams = field(default_factory=QomParams)
    background: BackgroundParams = field(default_factory=BackgroundParams)
    gmm: GmmParams = field(default_factory=GmmParams)
    pool: RankPoolParams = field(default_factory=RankPoolParams)
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)
    baseline: BaselineParams = field(default_factory=BaselineParams)

    def __post_init__(self) -> None:
        if not self.channels:
            raise ConfigError("channels must not be empty")
        for ch in self.channels:
            if ch not in KNOWN_CHANNELS:
                raise ConfigError(f"unknown channel {ch!r}; choose from {KNOWN_CHANNELS}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")


# section -> (config attribute, parameter class or None for scalars)
_SECTIONS = {
    "pipeline": None,
    "qom": "qom",
    "background": "background",
    "gmm": "gmm",
    "rank_pooling": "pool",
    "hierarchy": "hierarchy",
    "baseline": "baseline",
}

_PIPELINE_KEYS = ("channels", "seed", "jobs")

# hierarchy.direction is chosen per call, never from the file
_HIDDEN_KEYS = {"hierarchy": ("direction",)}

_COMMENTS = {
    ("pipeline", "channels"): "image families to encode: any of ddi, ddni, ddmni",
    ("pipeline", "seed"): "run seed recorded in manifests",
    ("pipeline", "jobs"): "parallel workers for encoding",
    ("qom", "threshold_qom"): "per-pixel depth change that counts as movement",
    ("qom", "tail_fraction"): "share of the average action length treated as tail",
    ("qom", "window_divisor"): "boundary window = average length // divisor",
    ("background", "hist_bins"): "depth histogram resolution",
    ("background", "tolerance"): "depth margin kept in front of the far peak",
    ("background", "min_peak_mass"): "pixel fraction a histogram bin needs to be a peak",
    ("gmm", "components"): "Gaussians per pixel",
    ("gmm", "learning_rate"): "model adaptation rate",
    ("gmm", "mahalanobis_threshold"): "squared normalized match distance",
    ("gmm", "background_ratio"): "cumulative weight treated as background",
    ("gmm", "seed"): "reserved for stochastic initializers",
    ("rank_pooling", "lam"): "hinge weight of the ranking objective",
    ("rank_pooling", "max_iters"): "solver iteration cap",
    ("rank_pooling", "tol"): "solver duality-gap tolerance",
    ("rank_pooling", "use_smoothing"): "pool running means instead of raw features",
    ("hierarchy", "layers"): "pooling layers including the final pool",
    ("hierarchy", "window"): "frames per first-layer window",
    ("hierarchy", "stride"): "window step in frames",
    ("baseline", "downsample"): "descriptor image side length",
}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(value)
    return str(value)


def dump_config(config: PipelineConfig | None = None) -> str:
    """Render a configuration as a fully annotated INI document."""
    config = config or PipelineConfig()
    lines = []
    for section, attr in _SECTIONS.items():
        lines.append(f"[{section}]")
        if attr is None:
            items = [(k, getattr(config, k)) for k in _PIPELINE_KEYS]
        else:
            params = getattr(config, attr)
            hidden = _HIDDEN_KEYS.get(section, ())
            items = [
                (f.name, getattr(params, f.name))
                for f in fields(params)
                if f.name not in hidden
            ]
        for key, value in items:
            comment = _COMMENTS.get((section, key))
            if comment:
                lines.append(f"# {comment}")
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _coerce(raw: str, kind: type, where: str):
    raw = raw.strip()
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is str:
            return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from exc
    raise ConfigError(f"{where}: unsupported option type {kind}")


def load_config(path: str | None = None) -> PipelineConfig:
    """Read a configuration file; ``None`` returns the defaults."""
    if path is None:
        return PipelineConfig()
    if not os.path.isfile(path):
        raise MissingPathError(f"no such config file: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    config = PipelineConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        attr = _SECTIONS[section]
        if attr is None:
            for key, raw in parser.items(section):
                if key == "channels":
                    config.channels = tuple(c.strip() for c in raw.split(",") if c.strip())
                elif key in ("seed", "jobs"):
                    setattr(config, key, _coerce(raw, int, f"[{section}] {key}"))
                else:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            continue
        params = getattr(config, attr)
        known = {f.name: f.type for f in fields(params)}
        hidden = _HIDDEN_KEYS.get(section, ())
        values = {}
        for key, raw in parser.items(section):
            if key not in known or key in hidden:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            kind = type(getattr(params, key))
            values[key] = _coerce(raw, kind, f"[{section}] {key}")
        if values:
            try:
                setattr(config, attr, type(params)(**{**_current(params), **values}))
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}]: {exc}") from exc
    try:
        config.__post_init__()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config


def _current(params) -> dict:
    return {f.name: getattr(params, f.name) for f in fields(params)}
