from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ValidationError
from .ingest import DEFAULT_K
from .stats import DEFAULT_TRIM_MINUTES
from .traveltime import API_KEY_ENV, DEFAULT_SPEEDS_KMH, Mode, Scenario

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_DEATH_FILTER = 150.0
PATH_FIELDS = ("facilities", "counties", "cache", "output_dir")


@dataclass(frozen=True)
class RunConfig:
    facilities: Path = Path("facilities.csv")
    counties: Path = Path("counties.csv")
    cache: Path = Path("travel_cache.jsonl")
    output_dir: Path = Path("out")
    provider: str = "synthetic"
    k: int = DEFAULT_K
    trim: float = DEFAULT_TRIM_MINUTES
    death_filter: float = DEFAULT_DEATH_FILTER
    scenario: Scenario = Scenario.ALL
    speeds: dict = field(default_factory=lambda: dict(DEFAULT_SPEEDS_KMH))
    max_workers: int = 8
    induced: bool = False
    death_source: str = "h0"

    def validate(self, check_env: bool = True) -> "RunConfig":
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.trim < 0 or self.death_filter < 0:
            raise ValidationError("thresholds must be >= 0")
        if self.provider not in ("live", "synthetic"):
            raise ValidationError(f"unknown provider {self.provider!r}")
        if self.death_source not in ("h0", "pooled"):
            raise ValidationError("death_source must be 'h0' or 'pooled'")
        if self.max_workers < 1:
            raise ValidationError("max_workers must be >= 1")
        if any(v <= 0 for v in self.speeds.values()):
            raise ValidationError("speeds must be positive")
        if check_env and self.provider == "live" and not os.environ.get(API_KEY_ENV):
            raise ValidationError(f"provider=live requires {API_KEY_ENV} in the environment")
        return self

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def parse_config(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = dict(raw)
    for name in PATH_FIELDS:
        if name in kw:
            p = Path(kw[name])
            kw[name] = p if p.is_absolute() else base_dir / p
        else:
            kw[name] = base_dir / getattr(RunConfig, name)
    if "scenario" in kw:
        kw["scenario"] = Scenario(kw["scenario"])
    speeds = dict(DEFAULT_SPEEDS_KMH)
    try:
        for mode, v in kw.get("speeds", {}).items():
            speeds[Mode(mode)] = float(v)
    except ValueError as exc:
        raise ValidationError(f"bad speeds table: {exc}") from None
    kw["speeds"] = speeds
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return parse_config(raw, path.parent)
