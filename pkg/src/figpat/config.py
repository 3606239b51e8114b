"""Layered run configuration for the command line.

Precedence, highest first: explicit flags, then the FIGPAT_SEED and
FIGPAT_OUT environment variables, then an INI file given via --config,
then built-in defaults. Every run writes the fully resolved
configuration next to its output as run-config.ini, so results can be
reproduced without remembering the invocation.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Mapping

from .errors import ConfigError, IoFailure
from .model import DEFAULT_UNIVERSE, UniverseConfig

ENV_SEED = "FIGPAT_SEED"
ENV_OUT = "FIGPAT_OUT"

RUN_CONFIG_NAME = "run-config.ini"


@dataclass(frozen=True)
class Settings:
    """Everything the CLI needs beyond the universe itself."""

    seed: int = 0
    out: str = "figpat-out"
    count: int = 24  # positives
    n_false: int | None = None  # None: same as count
    near_misses: int | None = None  # None: same as count
    workers: int = 1
    yield_floor: float = 1e-4
    placement_tries: int = 200
    canvas_px: int = 600
    max_edits: int = 1
    eval_budget: int = 300
    test_fraction: float = 0.5
    alpha_atoms: float = 0.5
    alpha_compounds: float = 0.1
    depth: int = 2
    atom_cap: float = 0.02
    restarts: int = 4
    target_compound: float | None = None


def _as_int(text: str) -> int:
    return int(text)


def _as_float(text: str) -> float:
    return float(text)


def _as_opt_int(text: str) -> int | None:
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else int(t)


def _as_opt_float(text: str) -> float | None:
    t = text.strip().lower()
    return None if t in ("", "none") else float(t)


# field name -> (ini section, parser)
_FIELD_SPEC: dict[str, tuple[str, Callable[[str], Any]]] = {
    "seed": ("run", _as_int),
    "out": ("run", str),
    "count": ("run", _as_int),
    "n_false": ("run", _as_opt_int),
    "near_misses": ("run", _as_opt_int),
    "workers": ("run", _as_int),
    "yield_floor": ("run", _as_float),
    "placement_tries": ("run", _as_int),
    "canvas_px": ("run", _as_int),
    "max_edits": ("run", _as_int),
    "eval_budget": ("run", _as_int),
    "test_fraction": ("split", _as_float),
    "alpha_atoms": ("split", _as_float),
    "alpha_compounds": ("split", _as_float),
    "depth": ("split", _as_int),
    "atom_cap": ("split", _as_float),
    "restarts": ("split", _as_int),
    "target_compound": ("split", _as_opt_float),
}

_UNIVERSE_FIELDS = (
    "n_min",
    "n_max",
    "allowed_shapes",
    "allowed_colors",
    "size_min",
    "size_max",
    "small_big_threshold",
    "min_gap",
)


def _read_ini(path: str | Path) -> configparser.ConfigParser:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    cp = configparser.ConfigParser()
    try:
        cp.read_string(p.read_text(encoding="utf-8"), source=str(p))
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config file {p}: {e}") from e
    return cp


def resolve_settings(
    cli: Mapping[str, Any] | None = None,
    config_path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
) -> Settings:
    """Merge the four layers into one Settings value. cli entries that
    are None count as not given."""
    environ = os.environ if env is None else env
    values: dict[str, Any] = {f.name: getattr(Settings(), f.name) for f in fields(Settings)}

    if config_path is not None:
        cp = _read_ini(config_path)
        for name, (section, parse) in _FIELD_SPEC.items():
            if cp.has_option(section, name):
                raw = cp.get(section, name)
                try:
                    values[name] = parse(raw)
                except ValueError as e:
                    raise ConfigError(f"bad value for [{section}] {name} = {raw!r}: {e}") from e

    if ENV_SEED in environ:
        try:
            values["seed"] = int(environ[ENV_SEED])
        except ValueError as e:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {environ[ENV_SEED]!r}") from e
    if ENV_OUT in environ:
        values["out"] = environ[ENV_OUT]

    if cli:
        for name, value in cli.items():
            if name in values and value is not None:
                values[name] = value

    s = Settings(**values)
    if s.count < 1:
        raise ConfigError(f"count must be positive, got {s.count}")
    if s.workers < 1:
        raise ConfigError(f"workers must be positive, got {s.workers}")
    return s


def resolve_universe(
    base: UniverseConfig | None = None,
    config_path: str | Path | None = None,
    cli: Mapping[str, Any] | None = None,
) -> UniverseConfig:
    """Universe for a run: base (or the default), overridden first by
    the config file's [universe] section, then by flags."""
    u = base or DEFAULT_UNIVERSE
    updates: dict[str, Any] = {}
    if config_path is not None:
        cp = _read_ini(config_path)
        if cp.has_section("universe"):
            section = cp["universe"]
            for name in _UNIVERSE_FIELDS:
                if name not in section:
                    continue
                raw = section[name]
                try:
                    if name in ("n_min", "n_max"):
                        updates[name] = int(raw)
                    elif name in ("allowed_shapes", "allowed_colors"):
                        updates[name] = tuple(s.strip() for s in raw.split(",") if s.strip())
                    else:
                        updates[name] = float(raw)
                except ValueError as e:
                    raise ConfigError(f"bad value for [universe] {name} = {raw!r}: {e}") from e
    if cli:
        for name, value in cli.items():
            if name in _UNIVERSE_FIELDS and value is not None:
                updates[name] = value
    return replace(u, **updates) if updates else u


def write_run_config(settings: Settings, universe: UniverseConfig, out_dir: str | Path) -> Path:
    """Dump the resolved configuration as INI next to the output."""
    cp = configparser.ConfigParser()
    cp["run"] = {}
    cp["split"] = {}
    for name, (section, _) in _FIELD_SPEC.items():
        value = getattr(settings, name)
        cp[section][name] = "" if value is None else str(value)
    cp["universe"] = {
        "n_min": str(universe.n_min),
        "n_max": str(universe.n_max),
        "allowed_shapes": ",".join(universe.allowed_shapes),
        "allowed_colors": ",".join(universe.allowed_colors),
        "size_min": repr(universe.size_min),
        "size_max": repr(universe.size_max),
        "small_big_threshold": repr(universe.small_big_threshold),
        "min_gap": repr(universe.min_gap),
    }
    path = Path(out_dir) / RUN_CONFIG_NAME
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            cp.write(fh)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    return path


def format_settings(settings: Settings, universe: UniverseConfig) -> str:
    """INI text of the resolved configuration, for print-config."""
    import io

    cp = configparser.ConfigParser()
    cp["run"] = {}
    cp["split"] = {}
    for name, (section, _) in _FIELD_SPEC.items():
        value = getattr(settings, name)
        cp[section][name] = "" if value is None else str(value)
    cp["universe"] = {
        "n_min": str(universe.n_min),
        "n_max": str(universe.n_max),
        "allowed_shapes": ",".join(universe.allowed_shapes),
        "allowed_colors": ",".join(universe.allowed_colors),
        "size_min": repr(universe.size_min),
        "size_max": repr(universe.size_max),
        "small_big_threshold": repr(universe.small_big_threshold),
        "min_gap": repr(universe.min_gap),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
