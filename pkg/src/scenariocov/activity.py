"""Activity segmentation of tracks and ego-relative zone classification.

Each track is split along two independent axes into segments that tile its
frame range: longitudinally into cruising / accelerating / decelerating, and
laterally into lane keeping / lane change left / lane change right.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, unique

import numpy as np

from .model import OFF_ROAD, Track, TrackState


@unique
class LongitudinalKind(Enum):
    CRUISING = "cruising"
    ACCELERATING = "accelerating"
    DECELERATING = "decelerating"


@unique
class LateralKind(Enum):
    KEEPING_LANE = "keeping-lane"
    CHANGE_LEFT = "change-left"
    CHANGE_RIGHT = "change-right"


@unique
class RelativeZone(Enum):
    """Position of an actor relative to the ego vehicle at one frame."""

    SAME_LANE_FRONT = "same-lane-front"
    SAME_LANE_REAR = "same-lane-rear"
    FRONT_LEFT = "front-left"
    FRONT_RIGHT = "front-right"
    SIDE_LEFT = "side-left"
    SIDE_RIGHT = "side-right"
    REAR_LEFT = "rear-left"
    REAR_RIGHT = "rear-right"
    NONE = "none"


@dataclass(frozen=True)
class ActivityConfig:
    """Thresholds for the activity segmentation.

    dv_min: minimum speed change over a segment to call it accelerating
        or decelerating (m/s).
    smooth_window_s: width of the centred moving average applied to the
        longitudinal speed before extremum detection (s).
    prune_dv: speed swings smaller than this are treated as noise when
        they interrupt an otherwise monotone speed trend (m/s).
    vy_settle: |vy| below which the lateral motion counts as settled (m/s).
    lane_change_cap_s: maximum extent of a lane-change segment on each
        side of the lane-crossing frame (s).
    """

    dv_min: float = 1.0
    smooth_window_s: float = 0.5
    prune_dv: float = 0.5
    vy_settle: float = 0.1
    lane_change_cap_s: float = 5.0

    def __post_init__(self):
        if self.dv_min <= 0 or self.vy_settle <= 0 or self.lane_change_cap_s <= 0:
            raise ValueError("activity thresholds must be positive")


@dataclass(frozen=True)
class ActivitySegment:
    """A maximal run of one activity kind for one actor."""

    actor_id: int
    kind: LongitudinalKind | LateralKind
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValueError("segment interval is empty")

    def overlaps(self, start_frame: int, end_frame: int) -> bool:
        return self.start_frame <= end_frame and start_frame <= self.end_frame


def _smooth(values: np.ndarray, half_window: int) -> np.ndarray:
    """Centred moving average with a window shrinking at the edges."""
    if half_window <= 0:
        return values.astype(np.float64)
    n = len(values)
    csum = np.concatenate(([0.0], np.cumsum(values, dtype=np.float64)))
    lo = np.maximum(np.arange(n) - half_window, 0)
    hi = np.minimum(np.arange(n) + half_window + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


#: Per-frame speed differences below this are treated as flat. Guards the
#: trend detection against float noise from the windowed-average cumsum;
#: real per-frame speed changes are orders of magnitude larger.
TREND_EPS = 1e-6


def _trend_sign(value: float) -> int:
    if value > TREND_EPS:
        return 1
    if value < -TREND_EPS:
        return -1
    return 0


def _turning_points(v: np.ndarray) -> list[int]:
    """Indices where the monotone trend of ``v`` changes, plus endpoints.

    Plateau edges count as trend changes, so a ramp followed by a constant
    stretch yields a turning point at the knee.
    """
    n = len(v)
    if n <= 2:
        return list(range(n))
    diffs = np.diff(v)
    signs = np.where(diffs > TREND_EPS, 1, np.where(diffs < -TREND_EPS, -1, 0))
    points = [0]
    points.extend(i + 1 for i in range(len(signs) - 1) if signs[i + 1] != signs[i])
    points.append(n - 1)
    return points


def _prune_counter_moves(points: list[int], v: np.ndarray, min_swing: float) -> list[int]:
    """Drop small counter-moves that interrupt a monotone speed trend.

    A pair of interior turning points is removed when the swing between
    them is strictly opposite to, and smaller than ``min_swing`` within,
    the shared direction of the two surrounding spans. Plateaus are never
    merged away: a genuine pause between two ramps survives.
    """
    pts = list(points)
    changed = True
    while changed and len(pts) >= 4:
        changed = False
        for i in range(1, len(pts) - 2):
            a, b = pts[i], pts[i + 1]
            outer_pre = _trend_sign(v[a] - v[pts[i - 1]])
            outer_post = _trend_sign(v[pts[i + 2]] - v[b])
            inner = _trend_sign(v[b] - v[a])
            if (abs(v[b] - v[a]) < min_swing and outer_pre == outer_post
                    and outer_pre != 0 and inner == -outer_pre):
                del pts[i:i + 2]
                changed = True
                break
    return pts


def segment_longitudinal(track: Track, frame_rate: float,
                         cfg: ActivityConfig = ActivityConfig()) -> list[ActivitySegment]:
    """Tile the track into cruising/accelerating/decelerating segments.

    The longitudinal speed is smoothed, boundaries are placed at the
    remaining local speed extrema, and a span counts as accelerating
    (decelerating) iff its speed change is >= +dv_min (<= -dv_min).
    """
    half = int(round(cfg.smooth_window_s * frame_rate / 2))
    v = _smooth(track.vx, half)
    points = _prune_counter_moves(_turning_points(v), v, cfg.prune_dv)

    spans: list[tuple[int, int, LongitudinalKind]] = []
    for a, b in zip(points, points[1:]):
        dv = v[b] - v[a]
        if dv >= cfg.dv_min:
            kind = LongitudinalKind.ACCELERATING
        elif dv <= -cfg.dv_min:
            kind = LongitudinalKind.DECELERATING
        else:
            kind = LongitudinalKind.CRUISING
        spans.append((a, b, kind))
    if not spans:
        spans = [(0, track.n_frames - 1, LongitudinalKind.CRUISING)]

    # Each span owns its right extremum; the first also owns the left end.
    merged: list[list] = []
    for j, (a, b, kind) in enumerate(spans):
        start = a if j == 0 else a + 1
        if merged and merged[-1][2] == kind:
            merged[-1][1] = b
        else:
            merged.append([start, b, kind])
    frames = track.frames
    return [ActivitySegment(track.id, kind, int(frames[s]), int(frames[e]))
            for s, e, kind in merged]


def _lane_crossings(lanes: np.ndarray) -> list[tuple[int, int]]:
    """(index, direction) per lane change; +1 left, -1 right.

    Off-road stretches are bridged: a crossing is registered against the
    last on-road lane.
    """
    crossings = []
    prev_lane = None
    for i, lane in enumerate(lanes):
        if lane == OFF_ROAD:
            continue
        if prev_lane is not None and lane != prev_lane:
            crossings.append((i, 1 if lane > prev_lane else -1))
        prev_lane = lane
    return crossings


def segment_lateral(track: Track, frame_rate: float,
                    cfg: ActivityConfig = ActivityConfig()) -> list[ActivitySegment]:
    """Tile the track into lane-keeping and lane-change segments.

    Every lane-index change yields one lane-change segment around the
    crossing frame, extending outward to the nearest frames where |vy|
    drops below ``vy_settle`` and capped at ``lane_change_cap_s`` per side.
    Back-to-back changes whose windows would overlap are split at the |vy|
    minimum between the two crossings.
    """
    n = track.n_frames
    cap = max(1, int(round(cfg.lane_change_cap_s * frame_rate)))
    abs_vy = np.abs(track.vy)
    settled = abs_vy < cfg.vy_settle

    windows: list[list[int]] = []  # [start_idx, end_idx, crossing_idx, dir]
    for c, direction in _lane_crossings(track.lane_id):
        lo = max(0, c - cap)
        start = lo
        for i in range(c - 1, lo - 1, -1):
            if settled[i]:
                start = i
                break
        hi = min(n - 1, c + cap)
        end = hi
        for i in range(c, hi + 1):
            if settled[i]:
                end = i
                break
        windows.append([start, end, c, direction])

    for prev, cur in zip(windows, windows[1:]):
        if cur[0] <= prev[1]:
            between = slice(prev[2], cur[2])
            split = prev[2] + int(np.argmin(abs_vy[between]))
            prev[1] = split
            cur[0] = split + 1
        # Clamp in case the |vy| minimum fell outside the raw windows.
        prev[1] = max(prev[1], prev[0])
        cur[0] = min(cur[0], cur[2])

    frames = track.frames
    segments: list[ActivitySegment] = []
    pos = 0
    for start, end, _c, direction in windows:
        if start > pos:
            segments.append(ActivitySegment(
                track.id, LateralKind.KEEPING_LANE,
                int(frames[pos]), int(frames[start - 1])))
        kind = LateralKind.CHANGE_LEFT if direction > 0 else LateralKind.CHANGE_RIGHT
        segments.append(ActivitySegment(track.id, kind, int(frames[start]), int(frames[end])))
        pos = end + 1
    if pos <= n - 1 or not segments:
        segments.append(ActivitySegment(
            track.id, LateralKind.KEEPING_LANE,
            int(frames[min(pos, n - 1)]), int(frames[n - 1])))
    return segments


def zone_of(dx: float, ego_lane: int, actor_lane: int, x_side: float) -> RelativeZone:
    """Zone of an actor relative to the ego at one (shared) frame.

    ``dx`` is the actor-minus-ego longitudinal offset, lanes are canonical
    lane indices. Lanes beyond the adjacent one collapse into the same
    left/right groups; same-lane actors are front/rear only. ``x_side`` is
    the longitudinal extent of the "at side" band, normally half the sum
    of ego and actor vehicle lengths.
    """
    if ego_lane == OFF_ROAD or actor_lane == OFF_ROAD:
        return RelativeZone.NONE
    dlane = actor_lane - ego_lane
    if dlane == 0:
        return RelativeZone.SAME_LANE_FRONT if dx >= 0 else RelativeZone.SAME_LANE_REAR
    if dlane > 0:
        if dx > x_side:
            return RelativeZone.FRONT_LEFT
        return RelativeZone.REAR_LEFT if dx < -x_side else RelativeZone.SIDE_LEFT
    if dx > x_side:
        return RelativeZone.FRONT_RIGHT
    return RelativeZone.REAR_RIGHT if dx < -x_side else RelativeZone.SIDE_RIGHT


def classify_zone(ego_state: TrackState, actor_state: TrackState,
                  x_side: float) -> RelativeZone:
    """:func:`zone_of` applied to two track states of the same frame."""
    return zone_of(actor_state.x - ego_state.x, ego_state.lane_id,
                   actor_state.lane_id, x_side)


#: Per-frame activity codes; index 0 is reserved for "not covered".
LON_CODES = {LongitudinalKind.CRUISING: 1, LongitudinalKind.ACCELERATING: 2,
             LongitudinalKind.DECELERATING: 3}
LAT_CODES = {LateralKind.KEEPING_LANE: 1, LateralKind.CHANGE_LEFT: 2,
             LateralKind.CHANGE_RIGHT: 3}
LAT_KEEP = LAT_CODES[LateralKind.KEEPING_LANE]


@dataclass(frozen=True, eq=False)
class TrackActivities:
    """Both segmentations of one track plus per-frame code arrays."""

    track_id: int
    start_frame: int
    longitudinal: tuple[ActivitySegment, ...]
    lateral: tuple[ActivitySegment, ...]
    lon_codes: np.ndarray
    lat_codes: np.ndarray

    def lon_code_at(self, frames: np.ndarray) -> np.ndarray:
        return self.lon_codes[frames - self.start_frame]

    def lat_code_at(self, frames: np.ndarray) -> np.ndarray:
        return self.lat_codes[frames - self.start_frame]

    def lane_changes(self) -> list[ActivitySegment]:
        return [s for s in self.lateral if s.kind is not LateralKind.KEEPING_LANE]


def _codes(segments: list[ActivitySegment], start_frame: int, n: int,
           table) -> np.ndarray:
    codes = np.zeros(n, dtype=np.int8)
    for seg in segments:
        codes[seg.start_frame - start_frame:seg.end_frame - start_frame + 1] = table[seg.kind]
    return codes


def segment_track(track: Track, frame_rate: float,
                  cfg: ActivityConfig = ActivityConfig()) -> TrackActivities:
    """Run both segmentations for one track."""
    lon = segment_longitudinal(track, frame_rate, cfg)
    lat = segment_lateral(track, frame_rate, cfg)
    n = track.n_frames
    return TrackActivities(
        track_id=track.id, start_frame=track.start_frame,
        longitudinal=tuple(lon), lateral=tuple(lat),
        lon_codes=_codes(lon, track.start_frame, n, LON_CODES),
        lat_codes=_codes(lat, track.start_frame, n, LAT_CODES))


def segment_recording(recording, cfg: ActivityConfig = ActivityConfig()):
    """Activities for every track of a recording, keyed by track id."""
    return {t.id: segment_track(t, recording.frame_rate, cfg)
            for t in recording.tracks}
