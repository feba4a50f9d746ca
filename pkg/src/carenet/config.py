"""Run configuration: a flat TOML file of keys, validated with defaults.

Relative paths resolve against the config file's directory. Quantile-valued
parameters are written as strings, e.g. ``poverty_line = "quantile:0.25"``.
Environment variables are never consulted.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .model import ModelParams, Quantile
from .scenarios import MODES

PATH_KEYS = ("network_file", "facilities_file", "blockgroups_file", "visits_file")


@dataclass(frozen=True)
class RunConfig:
    network_file: Path
    facilities_file: Path
    blockgroups_file: Path
    visits_file: Path
    params: ModelParams = field(default_factory=ModelParams)
    deltas: tuple[float, ...] = (0.05, 0.1, 0.15)
    cases_per_delta: int = 10
    modes: tuple[str, ...] = MODES
    equity: bool = True
    # equity runs apply to random-failure scenarios unless this is set
    equity_rank_ordering: bool = False
    master_seed: int = 0
    output_dir: Path = Path("out")
    rank_fraction_count: Optional[int] = None
    allow_self_site: bool = False
    workers: int = 1

    def __post_init__(self):
        for d in self.deltas:
            if not 0.0 <= d <= 1.0:
                raise ValidationError(f"deltas: value {d} outside [0, 1]")
        if not self.deltas:
            raise ValidationError("deltas: list is empty")
        if self.cases_per_delta < 1:
            raise ValidationError(f"cases_per_delta: must be >= 1, got {self.cases_per_delta}")
        for m in self.modes:
            if m not in MODES:
                raise ValidationError(f"modes: unknown mode {m!r}")
        if self.workers < 1:
            raise ValidationError(f"workers: must be >= 1, got {self.workers}")
        if self.rank_fraction_count is not None and self.rank_fraction_count < 0:
            raise ValidationError("rank_fraction_count: must be non-negative")

    def equity_applies(self, mode: str) -> bool:
        return self.equity and (mode == "random" or self.equity_rank_ordering)

    @property
    def input_files(self) -> dict[str, Path]:
        return {k: getattr(self, k) for k in PATH_KEYS}


def parse_param(key: str, value) -> Union[float, Quantile]:
    if isinstance(value, str):
        head, _, tail = value.partition(":")
        if head.strip() == "quantile":
            try:
                return Quantile(float(tail))
            except ValueError:
                pass
        raise ValidationError(f"{key}: expected a number or 'quantile:<q>', got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{key}: expected a number, got {value!r}")
    return float(value)


def format_param(value) -> Union[float, str]:
    return f"quantile:{value.q!r}" if isinstance(value, Quantile) else value


_SCALARS = {
    "cases_per_delta": int,
    "equity": bool,
    "equity_rank_ordering": bool,
    "master_seed": int,
    "rank_fraction_count": int,
    "allow_self_site": bool,
    "workers": int,
}


def config_from_mapping(doc: dict, base_dir: Path = Path(".")) -> RunConfig:
    known = set(PATH_KEYS) | set(_SCALARS) | {
        "deltas", "modes", "output_dir", "capacity_utilization", "poverty_line",
        "travel_threshold", "dummy_cost"}
    for key in doc:
        if key not in known:
            raise ValidationError(f"unknown config key {key!r}")
    kwargs = {}
    for key in PATH_KEYS:
        if key not in doc:
            raise ValidationError(f"missing required path {key!r}")
        kwargs[key] = (base_dir / doc[key]).resolve()
    for key, kind in _SCALARS.items():
        if key in doc:
            v = doc[key]
            if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
                raise ValidationError(f"{key}: expected an integer, got {v!r}")
            if kind is bool and not isinstance(v, bool):
                raise ValidationError(f"{key}: expected true/false, got {v!r}")
            kwargs[key] = v
    if "deltas" in doc:
        d = doc["deltas"]
        if not isinstance(d, list) or any(isinstance(x, bool) or not isinstance(x, (int, float))
                                          for x in d):
            raise ValidationError(f"deltas: expected a list of numbers, got {d!r}")
        for x in d:
            if not 0.0 <= x <= 1.0:
                raise ValidationError(f"deltas: value {x} outside [0, 1]")
        kwargs["deltas"] = tuple(float(x) for x in d)
    if "modes" in doc:
        kwargs["modes"] = tuple(doc["modes"])
    if "output_dir" in doc:
        kwargs["output_dir"] = (base_dir / doc["output_dir"]).resolve()
    pkw = {}
    if "capacity_utilization" in doc:
        v = doc["capacity_utilization"]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 < v <= 1:
            raise ValidationError(f"capacity_utilization: must lie in (0, 1], got {v!r}")
        pkw["capacity_utilization"] = float(v)
    for key in ("poverty_line", "travel_threshold"):
        if key in doc:
            pkw[key] = parse_param(key, doc[key])
    if "dummy_cost" in doc:
        v = parse_param("dummy_cost", doc["dummy_cost"])
        if isinstance(v, Quantile) or v <= 0:
            raise ValidationError(f"dummy_cost: must be a positive number, got {doc['dummy_cost']!r}")
        pkw["dummy_cost"] = v
    try:
        kwargs["params"] = ModelParams(**pkw)
    except ValidationError as exc:
        raise ValidationError(f"params: {exc}") from None
    return RunConfig(**kwargs)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path.name}: {exc}") from None
    return config_from_mapping(doc, path.parent)


def write_config(cfg: RunConfig, path) -> None:
    """Write ``cfg`` as flat TOML with paths relative to ``path``'s directory."""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p: Path) -> str:
        p = Path(p).resolve()
        try:
            return p.relative_to(base).as_posix()
        except ValueError:
            return p.as_posix()

    def val(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(val(x) for x in v) + "]"
        return repr(v)

    p = cfg.params
    lines = [f"{k} = {val(rel(getattr(cfg, k)))}" for k in PATH_KEYS]
    lines += [
        f"capacity_utilization = {val(p.capacity_utilization)}",
        f"poverty_line = {val(format_param(p.poverty_line))}",
        f"travel_threshold = {val(format_param(p.travel_threshold))}",
        f"dummy_cost = {val(p.dummy_cost)}",
        f"deltas = {val(list(cfg.deltas))}",
        f"cases_per_delta = {cfg.cases_per_delta}",
        f"modes = {val(list(cfg.modes))}",
        f"equity = {val(cfg.equity)}",
        f"equity_rank_ordering = {val(cfg.equity_rank_ordering)}",
        f"master_seed = {cfg.master_seed}",
        f"output_dir = {val(rel(cfg.output_dir))}",
        f"allow_self_site = {val(cfg.allow_self_site)}",
        f"workers = {cfg.workers}",
    ]
    if cfg.rank_fraction_count is not None:
        lines.append(f"rank_fraction_count = {cfg.rank_fraction_count}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
