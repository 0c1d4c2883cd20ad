"""Tag assignment per scenario and aggregation of the tag/category counts.

Tags describe the vehicles surrounding the ego vehicle: the ego's own
activities never produce tags. Positional and relative-speed tags are
evaluated at the scenario's start frame; activity tags apply when any
participating actor has a matching activity segment overlapping the
scenario interval. Tags are set-valued: five surrounding cars still yield
a single "car" tag.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

from .activity import LateralKind, LongitudinalKind, RelativeZone, TrackActivities, zone_of
from .egoview import EgoDataset
from .model import CAR, CategoryLike, Scenario, Tag, TagCountMatrix

ZONE_TAGS = MappingProxyType({
    RelativeZone.SAME_LANE_FRONT: Tag.SAME_LANE_FRONT,
    RelativeZone.SAME_LANE_REAR: Tag.SAME_LANE_REAR,
    RelativeZone.FRONT_LEFT: Tag.FRONT_LEFT,
    RelativeZone.FRONT_RIGHT: Tag.FRONT_RIGHT,
    RelativeZone.SIDE_LEFT: Tag.SIDE_LEFT,
    RelativeZone.SIDE_RIGHT: Tag.SIDE_RIGHT,
    RelativeZone.REAR_LEFT: Tag.REAR_LEFT,
    RelativeZone.REAR_RIGHT: Tag.REAR_RIGHT,
})

LON_TAGS = MappingProxyType({
    LongitudinalKind.CRUISING: Tag.CRUISING,
    LongitudinalKind.ACCELERATING: Tag.ACCELERATING,
    LongitudinalKind.DECELERATING: Tag.DECELERATING,
})

LAT_TAGS = MappingProxyType({
    LateralKind.KEEPING_LANE: Tag.KEEPING_LANE,
    LateralKind.CHANGE_LEFT: Tag.CHANGING_LANE_LEFT,
    LateralKind.CHANGE_RIGHT: Tag.CHANGING_LANE_RIGHT,
})

#: Named tag subsets for reports and CLI selection.
TAG_GROUPS = MappingProxyType({
    "vehicle-type": (Tag.CAR, Tag.TRUCK),
    "position": (Tag.SAME_LANE_FRONT, Tag.SAME_LANE_REAR, Tag.FRONT_LEFT,
                 Tag.FRONT_RIGHT, Tag.SIDE_LEFT, Tag.SIDE_RIGHT,
                 Tag.REAR_LEFT, Tag.REAR_RIGHT),
    "speed": (Tag.SLOWER, Tag.FASTER),
    "longitudinal": (Tag.CRUISING, Tag.ACCELERATING, Tag.DECELERATING),
    "lateral": (Tag.KEEPING_LANE, Tag.CHANGING_LANE_LEFT, Tag.CHANGING_LANE_RIGHT),
    "all": tuple(Tag),
})


@dataclass(frozen=True)
class TaggingConfig:
    """Relative-speed threshold (strict, m/s) and the tag subset to assign."""

    dv_threshold: float = 5.0
    tags: frozenset[Tag] = frozenset(Tag)

    def __post_init__(self):
        object.__setattr__(self, "tags", frozenset(self.tags))
        if self.dv_threshold <= 0:
            raise ValueError("dv_threshold must be positive")


def assign_tags(scenario: Scenario, ego: EgoDataset,
                activities: dict[int, TrackActivities],
                cfg: TaggingConfig = TaggingConfig()) -> frozenset[Tag]:
    """Tags of one scenario mined from ``ego``.

    All participating actors count, not just the main actors. Actors that
    are not visible at the start frame contribute no positional or
    relative-speed tag.
    """
    start, end = scenario.start_frame, scenario.end_frame
    ego_lane = int(ego.ego_lane[start - ego.start_frame])
    tags: set[Tag] = set()
    for av in ego.actors:
        if av.actor_id not in scenario.actor_ids:
            continue
        tags.add(Tag.CAR if av.vehicle_class == CAR else Tag.TRUCK)

        j = av.index_of(start)
        if j is not None:
            x_side = (ego.ego_length + av.length) / 2.0
            zone = zone_of(float(av.dx[j]), ego_lane, int(av.lane[j]), x_side)
            if zone is not RelativeZone.NONE:
                tags.add(ZONE_TAGS[zone])
            if av.dvx[j] < -cfg.dv_threshold:
                tags.add(Tag.SLOWER)
            elif av.dvx[j] > cfg.dv_threshold:
                tags.add(Tag.FASTER)

        act = activities[av.actor_id]
        for seg in act.longitudinal:
            if seg.overlaps(start, end):
                tags.add(LON_TAGS[seg.kind])
        for seg in act.lateral:
            if seg.overlaps(start, end):
                tags.add(LAT_TAGS[seg.kind])
    return frozenset(tags & cfg.tags)


def tag_scenarios(scenarios: list[Scenario], ego: EgoDataset,
                  activities: dict[int, TrackActivities],
                  cfg: TaggingConfig = TaggingConfig()) -> list[Scenario]:
    return [s.with_tags(assign_tags(s, ego, activities, cfg)) for s in scenarios]


def build_tag_count_matrix(scenarios, tags=tuple(Tag),
                           categories=None) -> TagCountMatrix:
    """Count, per (tag, category) pair, the scenarios carrying that tag."""
    from .model import ScenarioCategory  # default category set

    categories = tuple(categories) if categories is not None else tuple(ScenarioCategory)
    tags = tuple(tags)
    counts: dict[tuple[Tag, CategoryLike], int] = {}
    cat_set = set(categories)
    tag_set = set(tags)
    for scenario in scenarios:
        if scenario.category not in cat_set:
            continue
        for tag in scenario.tags:
            if tag in tag_set:
                key = (tag, scenario.category)
                counts[key] = counts.get(key, 0) + 1
    return TagCountMatrix(tags, categories, counts)
