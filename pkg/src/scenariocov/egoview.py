"""Per-ego datasets: every eligible vehicle promoted to ego exactly once.

An ego dataset is the perception-filtered, truncated view of a recording
from one vehicle: other actors are visible while their centre lies within
the perception radius, and the dataset ends at the last frame where the
ego still has at least the truncation distance of travel left, so vehicles
ahead never vanish because the recording ran out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Recording, Track


@dataclass(frozen=True)
class EgoViewParams:
    """Perception and truncation rules (all distances in metres)."""

    perception_radius: float = 100.0
    end_truncation_distance: float = 100.0
    min_ego_travel: float = 100.0

    def __post_init__(self):
        if min(self.perception_radius, self.end_truncation_distance,
               self.min_ego_travel) <= 0:
            raise ValueError("ego view parameters must be positive")


@dataclass(frozen=True, eq=False)
class ActorView:
    """One actor as perceived from an ego, at the frames it is visible.

    ``frames`` is strictly increasing but may have gaps (actors can leave
    the perception radius and re-enter). Relative quantities are
    precomputed: dx/dy are actor minus ego positions, dvx the relative
    longitudinal speed.
    """

    actor_id: int
    vehicle_class: str
    length: float
    frames: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dvx: np.ndarray
    lane: np.ndarray

    def __post_init__(self):
        for name in ("frames", "dx", "dy", "dvx", "lane"):
            getattr(self, name).setflags(write=False)

    def index_of(self, frame: int) -> int | None:
        """Index of ``frame`` among the visible frames, or None."""
        i = int(np.searchsorted(self.frames, frame))
        if i < len(self.frames) and self.frames[i] == frame:
            return i
        return None

    def visible_in(self, start_frame: int, end_frame: int) -> bool:
        i = int(np.searchsorted(self.frames, start_frame))
        return i < len(self.frames) and self.frames[i] <= end_frame


@dataclass(frozen=True, eq=False)
class EgoDataset:
    """Truncated per-ego slice of a recording with relative actor views."""

    recording_id: str
    frame_rate: float
    ego_id: int
    ego_length: float
    start_frame: int
    end_frame: int
    ego_x: np.ndarray
    ego_y: np.ndarray
    ego_vx: np.ndarray
    ego_lane: np.ndarray
    actors: tuple[ActorView, ...]

    def __post_init__(self):
        for name in ("ego_x", "ego_y", "ego_vx", "ego_lane"):
            getattr(self, name).setflags(write=False)

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1

    def visible_actors(self, frame: int) -> set[int]:
        return {a.actor_id for a in self.actors if a.index_of(frame) is not None}

    def actors_in_interval(self, start_frame: int, end_frame: int) -> frozenset[int]:
        return frozenset(a.actor_id for a in self.actors
                         if a.visible_in(start_frame, end_frame))


def _truncated_length(track: Track, params: EgoViewParams) -> int | None:
    """Number of leading frames kept for this ego, or None if ineligible."""
    steps = np.hypot(np.diff(track.x), np.diff(track.y))
    total = float(steps.sum())
    if total < params.min_ego_travel:
        return None
    remaining = total - np.concatenate(([0.0], np.cumsum(steps)))
    keep = remaining >= params.end_truncation_distance
    if not keep.any():
        return None
    return int(np.flatnonzero(keep)[-1]) + 1


def generate_ego_views(recording: Recording,
                       params: EgoViewParams = EgoViewParams()) -> list[EgoDataset]:
    """One EgoDataset per track travelling at least ``min_ego_travel``.

    Visibility is a closed Euclidean centre-distance ball, restricted to
    actors on the same carriageway; truncation uses along-track arc length.
    Output is sorted by ego id and independent of execution order.
    """
    views: list[EgoDataset] = []
    tracks = sorted(recording.tracks, key=lambda t: t.id)
    for ego in tracks:
        n_keep = _truncated_length(ego, params)
        if n_keep is None:
            continue
        start = ego.start_frame
        end = start + n_keep - 1

        actors: list[ActorView] = []
        for other in tracks:
            if other.id == ego.id or other.driving_direction != ego.driving_direction:
                continue
            lo = max(start, other.start_frame)
            hi = min(end, other.end_frame)
            if lo > hi:
                continue
            ego_sl = slice(lo - start, hi - start + 1)
            oth_sl = slice(lo - other.start_frame, hi - other.start_frame + 1)
            dx = other.x[oth_sl] - ego.x[ego_sl]
            dy = other.y[oth_sl] - ego.y[ego_sl]
            near = np.hypot(dx, dy) <= params.perception_radius
            if not near.any():
                continue
            frames = np.arange(lo, hi + 1, dtype=np.int64)[near]
            actors.append(ActorView(
                actor_id=other.id, vehicle_class=other.vehicle_class,
                length=other.length, frames=frames,
                dx=dx[near], dy=dy[near],
                dvx=(other.vx[oth_sl] - ego.vx[ego_sl])[near],
                lane=other.lane_id[oth_sl][near]))

        views.append(EgoDataset(
            recording_id=recording.id, frame_rate=recording.frame_rate,
            ego_id=ego.id, ego_length=ego.length,
            start_frame=start, end_frame=end,
            ego_x=ego.x[:n_keep], ego_y=ego.y[:n_keep],
            ego_vx=ego.vx[:n_keep], ego_lane=ego.lane_id[:n_keep],
            actors=tuple(actors)))
    return views
