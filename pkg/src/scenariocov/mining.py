"""Scenario detectors for the ten categories, driven by activity segments.

All detectors run per ego dataset on boolean arrays aligned to the ego's
frame interval. Scenarios may overlap in time; each detector emits maximal
intervals and never merges across distinct main actors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activity import (LAT_KEEP, LON_CODES, LongitudinalKind, LateralKind,
                       TrackActivities)
from .egoview import ActorView, EgoDataset
from .model import NO_LEADING_VEHICLE, Scenario, ScenarioCategory

SC = ScenarioCategory


@dataclass(frozen=True)
class MiningConfig:
    """Detector thresholds and category switches.

    approach_dv_min: how much slower than the ego a leading vehicle must
        drive, throughout, to count as C4 (m/s).
    min_duration_s: minimum time span of the state-like categories C1-C4;
        the event-like categories C5-C10 are not duration-filtered.
    enabled: categories to mine.
    catch_all: additionally emit "no leading vehicle" pseudo-scenarios so
        that every frame of every ego dataset is covered by a scenario.
    """

    approach_dv_min: float = 1.0
    min_duration_s: float = 1.0
    enabled: frozenset[ScenarioCategory] = frozenset(ScenarioCategory)
    catch_all: bool = False

    def __post_init__(self):
        object.__setattr__(self, "enabled", frozenset(self.enabled))
        if self.approach_dv_min <= 0:
            raise ValueError("approach_dv_min must be positive")
        if self.min_duration_s < 0:
            raise ValueError("min_duration_s must be >= 0")


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (start, end) index pairs, end inclusive."""
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(idx) - 1]))
    return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, ends)]


@dataclass
class _EgoFrame:
    """Arrays aligned to the ego dataset's frame interval."""

    ego: EgoDataset
    activities: dict[int, TrackActivities]
    m: int = field(init=False)
    ego_keep: np.ndarray = field(init=False)
    leading: np.ndarray = field(init=False)
    following: np.ndarray = field(init=False)

    def __post_init__(self):
        ego = self.ego
        self.m = ego.n_frames
        ego_act = self.activities[ego.ego_id]
        off = ego.start_frame - ego_act.start_frame
        self.ego_keep = ego_act.lat_codes[off:off + self.m] == LAT_KEEP

        self.leading = np.full(self.m, -1, dtype=np.int64)
        self.following = np.full(self.m, -1, dtype=np.int64)
        lead_dx = np.full(self.m, np.inf)
        follow_dx = np.full(self.m, -np.inf)
        for av in ego.actors:
            idx = av.frames - ego.start_frame
            same = av.lane == ego.ego_lane[idx]
            front = same & (av.dx >= 0)
            rear = same & (av.dx < 0)
            fi = idx[front]
            better = av.dx[front] < lead_dx[fi]
            self.leading[fi[better]] = av.actor_id
            lead_dx[fi[better]] = av.dx[front][better]
            ri = idx[rear]
            better = av.dx[rear] > follow_dx[ri]
            self.following[ri[better]] = av.actor_id
            follow_dx[ri[better]] = av.dx[rear][better]

    def actor_arrays(self, av: ActorView):
        """Keep/lon-kind/relative-speed arrays for one actor, scattered onto
        the ego index space (zero where the actor is not visible)."""
        idx = av.frames - self.ego.start_frame
        act = self.activities[av.actor_id]
        keep = np.zeros(self.m, dtype=bool)
        keep[idx] = act.lat_code_at(av.frames) == LAT_KEEP
        lon = np.zeros(self.m, dtype=np.int8)
        lon[idx] = act.lon_code_at(av.frames)
        dvx = np.zeros(self.m)
        dvx[idx] = av.dvx
        return keep, lon, dvx


def leading_vehicle_at(ego: EgoDataset, frame: int) -> int | None:
    """Nearest visible same-lane actor ahead of the ego, if any."""
    if not ego.start_frame <= frame <= ego.end_frame:
        raise ValueError(f"frame {frame} outside ego dataset")
    ego_lane = int(ego.ego_lane[frame - ego.start_frame])
    best_id, best_dx = None, np.inf
    for av in ego.actors:
        i = av.index_of(frame)
        if i is None:
            continue
        if int(av.lane[i]) == ego_lane and av.dx[i] >= 0 and av.dx[i] < best_dx:
            best_id, best_dx = av.actor_id, float(av.dx[i])
    return best_id


def mine_scenarios(ego: EgoDataset, activities: dict[int, TrackActivities],
                   cfg: MiningConfig = MiningConfig()) -> list[Scenario]:
    """All scenarios of the enabled categories within one ego dataset.

    ``activities`` must cover the ego track and every actor visible in the
    dataset. The result is sorted deterministically by (category, interval,
    main actors).
    """
    frame = _EgoFrame(ego, activities)
    f0, f1 = ego.start_frame, ego.end_frame
    min_gap = int(round(cfg.min_duration_s * ego.frame_rate))
    found: set[Scenario] = set()

    def emit(category, mains, start, end):
        found.add(Scenario(
            category=category, ego_id=ego.ego_id,
            main_actor_ids=frozenset(mains),
            actor_ids=ego.actors_in_interval(start, end),
            start_frame=start, end_frame=end))

    state_kinds = {
        SC.LEAD_CRUISING: LON_CODES[LongitudinalKind.CRUISING],
        SC.LEAD_ACCELERATING: LON_CODES[LongitudinalKind.ACCELERATING],
        SC.LEAD_DECELERATING: LON_CODES[LongitudinalKind.DECELERATING],
    }

    for av in ego.actors:
        keep, lon, dvx = frame.actor_arrays(av)
        base = (frame.leading == av.actor_id) & frame.ego_keep & keep

        # C1/C2/C3: leading vehicle keeping lane with one longitudinal kind.
        for category, code in state_kinds.items():
            if category not in cfg.enabled:
                continue
            for s, e in _runs(base & (lon == code)):
                if e - s >= min_gap:
                    emit(category, [av.actor_id], f0 + s, f0 + e)

        # C4: leading vehicle keeping lane, driving slower throughout.
        if SC.APPROACHING_SLOWER in cfg.enabled:
            for s, e in _runs(base & (dvx < -cfg.approach_dv_min)):
                if e - s >= min_gap:
                    emit(SC.APPROACHING_SLOWER, [av.actor_id], f0 + s, f0 + e)

        act = activities[av.actor_id]
        for cs in act.lane_changes():
            # C5: lane change that ends with the actor as leading vehicle.
            if SC.CUT_IN in cfg.enabled and f0 <= cs.end_frame <= f1:
                if frame.leading[cs.end_frame - f0] == av.actor_id:
                    emit(SC.CUT_IN, [av.actor_id],
                         max(cs.start_frame, f0), cs.end_frame)
            # C6: leading vehicle leaves the ego's lane. Leadership is
            # required at the segment start too so the scenario opens with
            # the actor still ahead in the ego's lane.
            if SC.CUT_OUT in cfg.enabled and f0 < cs.start_frame <= f1:
                i = cs.start_frame - f0
                if (frame.leading[i - 1] == av.actor_id
                        and frame.leading[i] == av.actor_id):
                    emit(SC.CUT_OUT, [av.actor_id],
                         cs.start_frame, min(cs.end_frame, f1))

        # C9/C10: overtaking on an adjacent lane, both keeping lane while
        # the relative longitudinal position changes sign.
        if SC.EGO_OVERTAKING in cfg.enabled or SC.VEHICLE_OVERTAKING_EGO in cfg.enabled:
            _mine_overtaking(frame, av, cfg, emit)

    _mine_ego_lane_changes(frame, cfg, emit)

    if cfg.catch_all:
        covered = np.zeros(frame.m, dtype=bool)
        for sc in found:
            covered[sc.start_frame - f0:sc.end_frame - f0 + 1] = True
        for s, e in _runs((frame.leading == -1) | ~covered):
            emit(NO_LEADING_VEHICLE, [], f0 + s, f0 + e)

    return sorted(found, key=Scenario.sort_key)


def _mine_overtaking(frame: _EgoFrame, av: ActorView, cfg: MiningConfig, emit):
    ego = frame.ego
    f = av.frames
    if len(f) < 2:
        return
    pos = f - ego.start_frame
    dlane = av.lane - ego.ego_lane[pos]
    act = frame.activities[av.actor_id]
    ok = (frame.ego_keep[pos]
          & (act.lat_code_at(f) == LAT_KEEP)
          & (np.abs(dlane) == 1))
    sign = np.sign(av.dx)

    crossings: list[tuple[int, int]] = []  # (position, previous sign)
    last_sign = 0
    for j in range(len(f)):
        if j > 0 and f[j] != f[j - 1] + 1:
            last_sign = 0
        s = int(sign[j])
        if s != 0:
            if last_sign != 0 and s != last_sign:
                crossings.append((j, last_sign))
            last_sign = s

    for c, was in crossings:
        category = SC.EGO_OVERTAKING if was > 0 else SC.VEHICLE_OVERTAKING_EGO
        if category not in cfg.enabled:
            continue
        if not (ok[c] and ok[c - 1] and dlane[c - 1] == dlane[c]):
            continue
        good = ok & (dlane == dlane[c])
        lo = c
        while lo > 0 and good[lo - 1] and f[lo - 1] + 1 == f[lo]:
            lo -= 1
        hi = c
        while hi < len(f) - 1 and good[hi + 1] and f[hi] + 1 == f[hi + 1]:
            hi += 1
        emit(category, [av.actor_id], int(f[lo]), int(f[hi]))


def _mine_ego_lane_changes(frame: _EgoFrame, cfg: MiningConfig, emit):
    """C7 and C8: scenarios anchored on an ego lane-change segment."""
    ego = frame.ego
    f0, f1 = ego.start_frame, ego.end_frame
    ego_act = frame.activities[ego.ego_id]
    for es in ego_act.lane_changes():
        start = max(es.start_frame, f0)
        end = min(es.end_frame, f1)
        if start > end:
            continue
        target_sign = 1 if es.kind is LateralKind.CHANGE_LEFT else -1

        if SC.LANE_CHANGE_VEHICLE_BEHIND in cfg.enabled:
            i = start - f0
            ego_lane_start = int(ego.ego_lane[i])
            for av in ego.actors:
                j = av.index_of(start)
                if j is None:
                    continue
                x_side = (ego.ego_length + av.length) / 2.0
                if (int(av.lane[j]) - ego_lane_start == target_sign
                        and av.dx[j] < -x_side):
                    emit(SC.LANE_CHANGE_VEHICLE_BEHIND, [av.actor_id], start, end)

        # C8 needs the full segment in view to establish the post-change
        # leading and following vehicles.
        if (SC.MERGE_OCCUPIED_LANE in cfg.enabled
                and es.start_frame >= f0 and es.end_frame <= f1):
            i_end = es.end_frame - f0
            leader = int(frame.leading[i_end])
            follower = int(frame.following[i_end])
            if leader < 0 or follower < 0 or leader == follower:
                continue
            target_lane = int(ego.ego_lane[i_end])
            if all(_keeps_target_lane(frame, aid, es.start_frame, es.end_frame,
                                      target_lane)
                   for aid in (leader, follower)):
                emit(SC.MERGE_OCCUPIED_LANE, [leader, follower],
                     es.start_frame, es.end_frame)


def _keeps_target_lane(frame: _EgoFrame, actor_id: int, start: int, end: int,
                       target_lane: int) -> bool:
    """Actor visible, on the target lane, and lane-keeping over [start, end]."""
    av = next(a for a in frame.ego.actors if a.actor_id == actor_id)
    lo = av.index_of(start)
    if lo is None:
        return False
    n = end - start + 1
    frames = av.frames[lo:lo + n]
    if len(frames) < n or frames[-1] != end:
        return False
    if not np.all(av.lane[lo:lo + n] == target_lane):
        return False
    act = frame.activities[actor_id]
    return bool(np.all(act.lat_code_at(frames) == LAT_KEEP))
