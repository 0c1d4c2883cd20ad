"""Pipeline configuration: INI-style config file, overrides, fingerprint.

The config file has one section per pipeline stage mirroring the module
names; every key can be overridden from the command line. The analysis
fingerprint hashes all thresholds that influence mined scenarios, so
artifacts produced under different settings never silently combine.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .activity import ActivityConfig
from .coverage import ActorBoxSpec
from .egoview import EgoViewParams
from .mining import MiningConfig
from .model import ScenarioCategory, Tag
from .tagging import TAG_GROUPS, TaggingConfig


class ConfigError(ValueError):
    """Invalid configuration file or override."""


def parse_tag_set(text: str) -> frozenset[Tag]:
    """Parse a tag selection: group names and/or tag symbols, comma-separated."""
    selected: set[Tag] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if part in TAG_GROUPS:
            selected.update(TAG_GROUPS[part])
        else:
            try:
                selected.add(Tag(part))
            except ValueError:
                raise ConfigError(f"unknown tag or tag group '{part}'") from None
    if not selected:
        raise ConfigError("empty tag selection")
    return frozenset(selected)


def parse_category_set(text: str) -> frozenset[ScenarioCategory]:
    if text.strip().lower() == "all":
        return frozenset(ScenarioCategory)
    selected: set[ScenarioCategory] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            selected.add(ScenarioCategory(part))
        except ValueError:
            raise ConfigError(f"unknown scenario category '{part}'") from None
    if not selected:
        raise ConfigError("empty category selection")
    return frozenset(selected)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class MetricRequests:
    """Which metrics and parameter grids the coverage command evaluates."""

    tag_n_grid: tuple[int, ...] = (1, 10, 100, 1000, 10000)
    time_n_grid: tuple[int, ...] = (1, 2, 5)
    box_front_grid: tuple[float, ...] = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
    box_lat_grid: tuple[float, ...] = (1.5, 5.0, 8.5)
    box_rear_modes: tuple[str, ...] = ("front-only", "with-rear")
    actor_membership: str = "main"

    def __post_init__(self):
        if not self.tag_n_grid or not self.time_n_grid:
            raise ConfigError("metric grids must be non-empty")
        if not self.box_front_grid or not self.box_lat_grid or not self.box_rear_modes:
            raise ConfigError("box grids must be non-empty")
        for mode in self.box_rear_modes:
            if mode not in ("front-only", "with-rear"):
                raise ConfigError(f"unknown box rear mode '{mode}'")
        if self.actor_membership not in ("main", "all"):
            raise ConfigError("actor_membership must be 'main' or 'all'")

    def boxes(self) -> list[tuple[str, tuple[ActorBoxSpec, ...]]]:
        """One labelled front-sweep of boxes per (lat, rear-mode) pair."""
        curves = []
        for lat in self.box_lat_grid:
            for mode in self.box_rear_modes:
                specs = tuple(
                    ActorBoxSpec(long_front=front,
                                 long_rear=front if mode == "with-rear" else 0.0,
                                 lat_halfwidth=lat)
                    for front in self.box_front_grid)
                curves.append((f"lat={lat:g} {mode}", specs))
        return curves


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything that influences which scenarios are mined and tagged."""

    ego: EgoViewParams = EgoViewParams()
    activity: ActivityConfig = ActivityConfig()
    mining: MiningConfig = MiningConfig()
    tagging: TaggingConfig = TaggingConfig()

    def describe(self) -> dict:
        return {
            "ego-view": {
                "perception_radius": self.ego.perception_radius,
                "end_truncation_distance": self.ego.end_truncation_distance,
                "min_ego_travel": self.ego.min_ego_travel,
            },
            "activity": {
                "dv_min": self.activity.dv_min,
                "smooth_window_s": self.activity.smooth_window_s,
                "prune_dv": self.activity.prune_dv,
                "vy_settle": self.activity.vy_settle,
                "lane_change_cap_s": self.activity.lane_change_cap_s,
            },
            "mining": {
                "approach_dv_min": self.mining.approach_dv_min,
                "min_duration_s": self.mining.min_duration_s,
                "categories": sorted(c.symbol for c in self.mining.enabled),
                "catch_all": self.mining.catch_all,
            },
            "tagging": {
                "dv_threshold": self.tagging.dv_threshold,
                "tags": sorted(t.symbol for t in self.tagging.tags),
            },
        }

    def fingerprint(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PipelineConfig:
    """Full run configuration for the command-line pipeline."""

    inputs: tuple[str, ...] = ()
    output_dir: Path = Path("scenariocov-out")
    workers: int = 1
    analysis: AnalysisConfig = AnalysisConfig()
    metrics: MetricRequests = MetricRequests()

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


_SECTIONS = ("run", "ego-view", "activity", "mining", "tagging", "coverage")


def load_config(path: Path | str | None = None,
                overrides: list[str] = ()) -> PipelineConfig:
    """Load the INI config file and apply ``section.key=value`` overrides."""
    parser = configparser.ConfigParser()
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        parser.read(path)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: '{item}'")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), key.strip(), value.strip())

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section '{section}'")

    def get(section, key, cast, default):
        if parser.has_option(section, key):
            try:
                return cast(parser.get(section, key))
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
        return default

    ego = EgoViewParams(
        perception_radius=get("ego-view", "perception_radius", float, 100.0),
        end_truncation_distance=get("ego-view", "end_truncation_distance", float, 100.0),
        min_ego_travel=get("ego-view", "min_ego_travel", float, 100.0))
    activity = ActivityConfig(
        dv_min=get("activity", "dv_min", float, 1.0),
        smooth_window_s=get("activity", "smooth_window_s", float, 0.5),
        prune_dv=get("activity", "prune_dv", float, 0.5),
        vy_settle=get("activity", "vy_settle", float, 0.1),
        lane_change_cap_s=get("activity", "lane_change_cap_s", float, 5.0))
    mining = MiningConfig(
        approach_dv_min=get("mining", "approach_dv_min", float, 1.0),
        min_duration_s=get("mining", "min_duration_s", float, 1.0),
        enabled=get("mining", "categories", parse_category_set,
                    frozenset(ScenarioCategory)),
        catch_all=get("mining", "catch_all", _parse_bool, False))
    tagging = TaggingConfig(
        dv_threshold=get("tagging", "dv_threshold", float, 5.0),
        tags=get("tagging", "tags", parse_tag_set, frozenset(Tag)))
    metrics = MetricRequests(
        tag_n_grid=get("coverage", "tag_n_grid", _ints, MetricRequests.tag_n_grid),
        time_n_grid=get("coverage", "time_n_grid", _ints, MetricRequests.time_n_grid),
        box_front_grid=get("coverage", "box_front_grid", _floats,
                           MetricRequests.box_front_grid),
        box_lat_grid=get("coverage", "box_lat_grid", _floats,
                         MetricRequests.box_lat_grid),
        box_rear_modes=get("coverage", "box_rear_modes", _modes,
                           MetricRequests.box_rear_modes),
        actor_membership=get("coverage", "actor_membership", str.strip, "main"))

    inputs = get("run", "inputs", _strings, ())
    return PipelineConfig(
        inputs=inputs,
        output_dir=Path(get("run", "output_dir", str.strip, "scenariocov-out")),
        workers=get("run", "workers", int, 1),
        analysis=AnalysisConfig(ego=ego, activity=activity, mining=mining,
                                tagging=tagging),
        metrics=metrics)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: '{text}'")


def _strings(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _modes(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())
