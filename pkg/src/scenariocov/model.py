"""Core domain model for highway trajectory recordings and mined scenarios.

All positions, velocities and accelerations live in a canonical road-aligned
frame: +x points along the travel direction of the vehicle's carriageway and
+y points to the left of travel (towards the road centre). Both driving
directions of a recording are rewritten into this frame at ingest time, so
"left"/"right" means side-of-ego everywhere downstream.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum, unique
from types import MappingProxyType
from typing import Mapping, NamedTuple, Sequence, Union

import numpy as np

CAR = "car"
TRUCK = "truck"
VEHICLE_CLASSES = (CAR, TRUCK)

#: Driving directions of a recording. "lower" travels towards positive image
#: x, "upper" towards negative image x; both are normalized at ingest.
UPPER = "upper"
LOWER = "lower"
DRIVING_DIRECTIONS = (UPPER, LOWER)

#: Sentinel lane index for lateral positions outside every lane (shoulders,
#: medians). Not an error: such positions occur in real data.
OFF_ROAD = -1


@unique
class Tag(Enum):
    """The 18 scenario tags.

    Members carry the tag symbol (``t1`` .. ``t18``) as their value and a
    human-readable defining rule. ``SLOWER``/``FASTER`` use a strict
    +-5 m/s threshold on the relative longitudinal speed at scenario start.
    """

    def __new__(cls, symbol: str, definition: str):
        obj = object.__new__(cls)
        obj._value_ = symbol
        obj.definition = definition
        return obj

    CAR = ("t1", "Car")
    TRUCK = ("t2", "Truck")
    SAME_LANE_FRONT = ("t3", "Same lane in front")
    SAME_LANE_REAR = ("t4", "Same lane rear")
    FRONT_LEFT = ("t5", "In front left lane")
    FRONT_RIGHT = ("t6", "In front right lane")
    SIDE_LEFT = ("t7", "At side left lane")
    SIDE_RIGHT = ("t8", "At side right lane")
    REAR_LEFT = ("t9", "Rear left lane")
    REAR_RIGHT = ("t10", "Rear right lane")
    SLOWER = ("t11", "Slower (dv < -5 m/s)")
    FASTER = ("t12", "Faster (dv > 5 m/s)")
    CRUISING = ("t13", "Cruising")
    ACCELERATING = ("t14", "Accelerating")
    DECELERATING = ("t15", "Decelerating")
    KEEPING_LANE = ("t16", "Keeping lane")
    CHANGING_LANE_LEFT = ("t17", "Changing lane left")
    CHANGING_LANE_RIGHT = ("t18", "Changing lane right")

    @property
    def symbol(self) -> str:
        return self.value


@unique
class ScenarioCategory(Enum):
    """The 10 scenario categories, with ego / main-actor activity rules."""

    def __new__(cls, symbol: str, label: str, ego_activity: str,
                main_actor_activity: str):
        obj = object.__new__(cls)
        obj._value_ = symbol
        obj.label = label
        obj.ego_activity = ego_activity
        obj.main_actor_activity = main_actor_activity
        return obj

    LEAD_CRUISING = (
        "C1", "Leading vehicle cruising",
        "keeping lane", "keeping lane, cruising")
    LEAD_ACCELERATING = (
        "C2", "Leading vehicle accelerating",
        "keeping lane", "keeping lane, accelerating")
    LEAD_DECELERATING = (
        "C3", "Leading vehicle decelerating",
        "keeping lane", "keeping lane, decelerating")
    APPROACHING_SLOWER = (
        "C4", "Approaching slower vehicle",
        "keeping lane", "keeping lane, driving slower than ego")
    CUT_IN = (
        "C5", "Cut-in in front of ego vehicle",
        "keeping lane", "changing lane to become leading vehicle")
    CUT_OUT = (
        "C6", "Cut-out in front of ego vehicle",
        "keeping lane", "leading ego vehicle, then changing lane")
    LANE_CHANGE_VEHICLE_BEHIND = (
        "C7", "Changing lane with vehicle behind",
        "changing lane", "behind ego vehicle on adjacent lane")
    MERGE_OCCUPIED_LANE = (
        "C8", "Merging into an occupied lane",
        "changing lane",
        "two actors keeping target lane, becoming leading and following "
        "vehicles after the ego lane change")
    EGO_OVERTAKING = (
        "C9", "Ego vehicle overtaking vehicle",
        "keeping lane", "keeping lane, overtaken by ego on adjacent lane")
    VEHICLE_OVERTAKING_EGO = (
        "C10", "Vehicle overtaking ego vehicle",
        "keeping lane", "keeping lane, overtaking ego on adjacent lane")

    @property
    def symbol(self) -> str:
        return self.value


@dataclass(frozen=True)
class PseudoCategory:
    """A scenario category outside the 10 core ones (e.g. the catch-all)."""

    symbol: str
    label: str


#: Catch-all pseudo-category; see mining.MiningConfig.catch_all.
NO_LEADING_VEHICLE = PseudoCategory("C0", "No leading vehicle")

CategoryLike = Union[ScenarioCategory, PseudoCategory]

#: Deterministic ordering of categories for sorting scenarios and reports.
CATEGORY_ORDER: Mapping[str, int] = MappingProxyType(
    {c.symbol: i for i, c in enumerate(ScenarioCategory)}
    | {NO_LEADING_VEHICLE.symbol: len(ScenarioCategory)}
)


def category_from_symbol(symbol: str) -> CategoryLike:
    if symbol == NO_LEADING_VEHICLE.symbol:
        return NO_LEADING_VEHICLE
    return ScenarioCategory(symbol)


class TrackState(NamedTuple):
    """Kinematic state of one vehicle at one frame (canonical frame)."""

    frame: int
    x: float
    y: float
    vx: float
    vy: float
    ax: float
    ay: float
    lane_id: int


@dataclass(frozen=True)
class LaneLayout:
    """Lane boundary offsets per driving direction, in the canonical frame.

    Boundaries are lateral offsets in metres, strictly increasing. Larger
    offsets lie further to the left of travel, i.e. closer to the road
    centre. A direction without lanes is represented by ``None``.
    """

    upper: tuple[float, ...] | None = None
    lower: tuple[float, ...] | None = None

    def __post_init__(self):
        for direction, bounds in (("upper", self.upper), ("lower", self.lower)):
            if bounds is None:
                continue
            object.__setattr__(self, direction, tuple(float(b) for b in bounds))
            bounds = getattr(self, direction)
            if len(bounds) < 2:
                raise ValueError(f"{direction} boundaries need >= 2 offsets")
            if any(b1 <= b0 for b0, b1 in zip(bounds, bounds[1:])):
                raise ValueError(f"{direction} boundaries must strictly increase")
        if self.upper is None and self.lower is None:
            raise ValueError("lane layout needs at least one direction")

    def boundaries(self, direction: str) -> tuple[float, ...]:
        bounds = {UPPER: self.upper, LOWER: self.lower}.get(direction)
        if bounds is None:
            raise ValueError(f"no lanes for direction {direction!r}")
        return bounds

    def has_direction(self, direction: str) -> bool:
        return {UPPER: self.upper, LOWER: self.lower}.get(direction) is not None

    def n_lanes(self, direction: str) -> int:
        return len(self.boundaries(direction)) - 1


def lane_of(y: float, direction: str, layout: LaneLayout) -> int:
    """Lane index containing lateral position ``y``, or ``OFF_ROAD``.

    A position exactly on a lane marking belongs to the lane on its left
    (the lane nearer the road centre); the outermost boundaries are
    inclusive on both sides.
    """
    bounds = layout.boundaries(direction)
    if y < bounds[0] or y > bounds[-1]:
        return OFF_ROAD
    return min(bisect_right(bounds, y) - 1, len(bounds) - 2)


def lanes_of(y: np.ndarray, direction: str, layout: LaneLayout) -> np.ndarray:
    """Vectorized :func:`lane_of` over an array of lateral positions."""
    bounds = np.asarray(layout.boundaries(direction))
    idx = np.searchsorted(bounds, y, side="right") - 1
    idx = np.minimum(idx, len(bounds) - 2)
    off = (y < bounds[0]) | (y > bounds[-1])
    return np.where(off, OFF_ROAD, idx).astype(np.int64)


def lateral_offset_between(ego_state: TrackState, actor_state: TrackState) -> float:
    """Signed lateral centre-to-centre offset, positive to ego's left."""
    return actor_state.y - ego_state.y


@dataclass(frozen=True, eq=False)
class Track:
    """One vehicle's life in a recording, stored as per-frame arrays.

    Frames are expected to be strictly increasing without gaps; the arrays
    are made read-only on construction so tracks are safe to share.
    """

    id: int
    vehicle_class: str
    driving_direction: str
    length: float
    width: float
    frames: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    lane_id: np.ndarray

    _ARRAYS = ("frames", "x", "y", "vx", "vy", "ax", "ay", "lane_id")

    def __post_init__(self):
        for name in self._ARRAYS:
            dtype = np.int64 if name in ("frames", "lane_id") else np.float64
            arr = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.frames)
        if n < 1:
            raise ValueError(f"track {self.id}: needs at least one state")
        for name in self._ARRAYS:
            if len(getattr(self, name)) != n:
                raise ValueError(f"track {self.id}: array {name} length mismatch")

    @property
    def start_frame(self) -> int:
        return int(self.frames[0])

    @property
    def end_frame(self) -> int:
        return int(self.frames[-1])

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def has_frame(self, frame: int) -> bool:
        return self.start_frame <= frame <= self.end_frame

    def index_of(self, frame: int) -> int:
        """Array index of ``frame`` (O(1); assumes contiguous frames)."""
        idx = frame - self.start_frame
        if idx < 0 or idx >= self.n_frames or self.frames[idx] != frame:
            raise KeyError(f"track {self.id}: no state at frame {frame}")
        return idx

    def state_at(self, frame: int) -> TrackState:
        i = self.index_of(frame)
        return TrackState(
            frame=int(self.frames[i]), x=float(self.x[i]), y=float(self.y[i]),
            vx=float(self.vx[i]), vy=float(self.vy[i]),
            ax=float(self.ax[i]), ay=float(self.ay[i]),
            lane_id=int(self.lane_id[i]))

    def arc_length(self) -> float:
        """Total travelled distance along the track's path (m)."""
        return float(np.hypot(np.diff(self.x), np.diff(self.y)).sum())


@dataclass(frozen=True, eq=False)
class Recording:
    """One drone recording: lane geometry plus all vehicle tracks."""

    id: str
    frame_rate: float
    location_id: str
    lane_layout: LaneLayout
    tracks: tuple[Track, ...]
    _by_id: Mapping[int, Track] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(
            self, "_by_id", MappingProxyType({t.id: t for t in self.tracks}))

    def track(self, track_id: int) -> Track:
        return self._by_id[track_id]

    def has_track(self, track_id: int) -> bool:
        return track_id in self._by_id

    @property
    def frame_range(self) -> tuple[int, int]:
        """(first, last) frame over all tracks; (0, -1) when empty."""
        if not self.tracks:
            return (0, -1)
        return (min(t.start_frame for t in self.tracks),
                max(t.end_frame for t in self.tracks))

    @property
    def n_frames(self) -> int:
        first, last = self.frame_range
        return max(0, last - first + 1)


@dataclass(frozen=True)
class Scenario:
    """A mined scenario instance over a frame interval of one ego dataset.

    ``main_actor_ids`` are the actors necessary for the scenario to occur;
    ``actor_ids`` are all actors visible at any frame of the interval.
    """

    category: CategoryLike
    ego_id: int
    main_actor_ids: frozenset[int]
    actor_ids: frozenset[int]
    start_frame: int
    end_frame: int
    tags: frozenset[Tag] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "main_actor_ids", frozenset(self.main_actor_ids))
        object.__setattr__(self, "actor_ids", frozenset(self.actor_ids))
        object.__setattr__(self, "tags", frozenset(self.tags))
        if self.start_frame > self.end_frame:
            raise ValueError("scenario interval is empty")
        if not self.main_actor_ids <= self.actor_ids:
            raise ValueError("main actors must be a subset of all actors")
        if self.ego_id in self.actor_ids:
            raise ValueError("ego must not appear among the actors")
        if not self.main_actor_ids and not isinstance(self.category, PseudoCategory):
            raise ValueError(f"{self.category.symbol} scenario needs a main actor")

    def contains_frame(self, frame: int) -> bool:
        return self.start_frame <= frame <= self.end_frame

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1

    def with_tags(self, tags: frozenset[Tag]) -> "Scenario":
        return Scenario(self.category, self.ego_id, self.main_actor_ids,
                        self.actor_ids, self.start_frame, self.end_frame,
                        frozenset(tags))

    def sort_key(self):
        return (CATEGORY_ORDER[self.category.symbol], self.start_frame,
                self.end_frame, tuple(sorted(self.main_actor_ids)),
                tuple(sorted(self.actor_ids)))


@dataclass(frozen=True)
class TagCountMatrix:
    """Scenario counts per (tag, category) pair.

    The domain is exactly ``tags x categories``; missing pairs are stored
    as zero and extraneous keys are rejected.
    """

    tags: tuple[Tag, ...]
    categories: tuple[CategoryLike, ...]
    counts: Mapping[tuple[Tag, CategoryLike], int]

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "categories", tuple(self.categories))
        domain = {(t, c) for t in self.tags for c in self.categories}
        extra = set(self.counts) - domain
        if extra:
            raise ValueError(f"counts outside the tag/category domain: {extra}")
        filled = {}
        for key in sorted(domain, key=lambda tc: (tc[0].symbol, tc[1].symbol)):
            value = int(self.counts.get(key, 0))
            if value < 0:
                raise ValueError(f"negative count for {key}")
            filled[key] = value
        object.__setattr__(self, "counts", MappingProxyType(filled))

    def get(self, tag: Tag, category: CategoryLike) -> int:
        return self.counts[(tag, category)]

    @classmethod
    def zero(cls, tags: Sequence[Tag], categories: Sequence[CategoryLike]):
        return cls(tuple(tags), tuple(categories), {})


def tracks_equal(a: Track, b: Track, atol: float = 0.0) -> bool:
    if (a.id, a.vehicle_class, a.driving_direction) != (b.id, b.vehicle_class, b.driving_direction):
        return False
    if not (np.isclose(a.length, b.length, atol=atol, rtol=0)
            and np.isclose(a.width, b.width, atol=atol, rtol=0)):
        return False
    if not (np.array_equal(a.frames, b.frames) and np.array_equal(a.lane_id, b.lane_id)):
        return False
    return all(
        np.allclose(getattr(a, name), getattr(b, name), atol=atol, rtol=0)
        for name in ("x", "y", "vx", "vy", "ax", "ay"))


def recordings_equal(a: Recording, b: Recording, atol: float = 0.0) -> bool:
    """Structural equality of two recordings (float tolerance ``atol``)."""
    if (a.id, a.location_id) != (b.id, b.location_id):
        return False
    if not np.isclose(a.frame_rate, b.frame_rate, atol=atol, rtol=0):
        return False
    for direction in DRIVING_DIRECTIONS:
        if a.lane_layout.has_direction(direction) != b.lane_layout.has_direction(direction):
            return False
        if a.lane_layout.has_direction(direction) and not np.allclose(
                a.lane_layout.boundaries(direction),
                b.lane_layout.boundaries(direction), atol=atol, rtol=0):
            return False
    if len(a.tracks) != len(b.tracks):
        return False
    return all(tracks_equal(ta, tb, atol) for ta, tb in zip(a.tracks, b.tracks))
