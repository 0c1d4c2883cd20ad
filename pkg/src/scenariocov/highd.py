"""Ingestion of HighD-format recordings (CSV triple) into the core model.

A recording consists of three files: ``XX_recordingMeta.csv`` (frame rate,
lane markings), ``XX_tracksMeta.csv`` (per-vehicle class and driving
direction) and ``XX_tracks.csv`` (per-frame bounding boxes and kinematics).
Positions, velocities and accelerations are rewritten into the canonical
road-aligned frame during parsing, and lane indices are recomputed from the
lateral position against the lane markings.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .model import (CAR, LOWER, TRUCK, UPPER, LaneLayout, Recording, Track,
                    lanes_of)


class IngestError(RuntimeError):
    """Raised when a recording cannot be parsed into a valid model."""


@dataclass(frozen=True)
class RecordingPaths:
    meta_path: Path
    tracks_meta_path: Path
    tracks_path: Path

    @classmethod
    def from_prefix(cls, directory: Path | str, prefix: str) -> "RecordingPaths":
        d = Path(directory)
        return cls(d / f"{prefix}_recordingMeta.csv",
                   d / f"{prefix}_tracksMeta.csv",
                   d / f"{prefix}_tracks.csv")


def find_recordings(directory: Path | str) -> list[RecordingPaths]:
    """All complete CSV triples below ``directory``, sorted by path."""
    found = []
    for meta in sorted(Path(directory).rglob("*_recordingMeta.csv")):
        prefix = meta.name[: -len("_recordingMeta.csv")]
        paths = RecordingPaths.from_prefix(meta.parent, prefix)
        if paths.tracks_meta_path.is_file() and paths.tracks_path.is_file():
            found.append(paths)
    return found


@dataclass
class IngestReport:
    recording_id: str
    n_tracks: int
    n_frames: int
    warnings: list[str] = field(default_factory=list)


#: Required columns of the tracks file. Neighbour-id columns shipped by
#: HighD (precedingId etc.) are accepted but unused: neighbour relations
#: are recomputed internally.
TRACKS_REQUIRED = ("frame", "id", "x", "y", "width", "height", "xVelocity",
                   "yVelocity", "xAcceleration", "yAcceleration", "laneId")
TRACKS_KNOWN_EXTRA = frozenset({
    "precedingId", "followingId", "leftPrecedingId", "leftAlongsideId",
    "leftFollowingId", "rightPrecedingId", "rightAlongsideId",
    "rightFollowingId", "dhw", "thw", "ttc", "precedingXVelocity",
    "frontSightDistance", "backSightDistance",
})
TRACKS_META_REQUIRED = ("id", "class", "drivingDirection")
META_REQUIRED = ("id", "frameRate", "upperLaneMarkings", "lowerLaneMarkings")

_CLASS_MAP = {"car": CAR, "truck": TRUCK}
_DIRECTION_MAP = {1: UPPER, 2: LOWER}


def _read_csv(path: Path, required: tuple[str, ...], **kwargs) -> pd.DataFrame:
    if not os.path.isfile(path):
        raise IngestError(f"missing file: {path}")
    try:
        frame = pd.read_csv(path, **kwargs)
    except Exception as exc:  # malformed CSV
        raise IngestError(f"cannot read {path}: {exc}") from exc
    for column in required:
        if column not in frame.columns:
            raise IngestError(f"{path.name}: missing required column '{column}'")
    return frame


def _parse_markings(raw) -> tuple[float, ...]:
    if raw is None or (isinstance(raw, float) and np.isnan(raw)):
        return ()
    text = str(raw).strip()
    if not text:
        return ()
    return tuple(float(part) for part in text.split(";") if part.strip())


def parse_recording(paths: RecordingPaths) -> tuple[Recording, IngestReport]:
    """Parse one HighD-format CSV triple into a direction-normalized model.

    Hard errors (missing columns, frame gaps, unknown vehicle classes)
    raise :class:`IngestError`; recoverable oddities end up as warnings in
    the returned report.
    """
    warnings: list[str] = []

    meta = _read_csv(Path(paths.meta_path), META_REQUIRED,
                     dtype={"id": str, "locationId": str})
    if len(meta) != 1:
        raise IngestError(f"{paths.meta_path}: expected exactly one meta row")
    meta_row = meta.iloc[0]
    recording_id = str(meta_row["id"]).strip()
    frame_rate = float(meta_row["frameRate"])
    if frame_rate <= 0:
        raise IngestError(f"{paths.meta_path}: frameRate must be positive")
    location_id = str(meta_row["locationId"]).strip() if "locationId" in meta.columns else ""

    upper_markings = _parse_markings(meta_row["upperLaneMarkings"])
    lower_markings = _parse_markings(meta_row["lowerLaneMarkings"])
    layout = LaneLayout(
        upper=tuple(sorted(upper_markings)) if upper_markings else None,
        lower=tuple(sorted(-m for m in lower_markings)) if lower_markings else None,
    )

    tmeta = _read_csv(Path(paths.tracks_meta_path), TRACKS_META_REQUIRED)
    directions: dict[int, str] = {}
    classes: dict[int, str] = {}
    for tid_raw, cls_raw, dir_raw in zip(tmeta["id"], tmeta["class"],
                                         tmeta["drivingDirection"]):
        tid = int(tid_raw)
        cls = _CLASS_MAP.get(str(cls_raw).strip().lower())
        if cls is None:
            raise IngestError(f"track {tid}: unknown vehicle class '{cls_raw}'")
        direction = _DIRECTION_MAP.get(int(dir_raw))
        if direction is None:
            raise IngestError(f"track {tid}: unknown drivingDirection '{dir_raw}'")
        classes[tid] = cls
        directions[tid] = direction

    tracks_df = _read_csv(Path(paths.tracks_path), TRACKS_REQUIRED)
    unknown = set(tracks_df.columns) - set(TRACKS_REQUIRED) - TRACKS_KNOWN_EXTRA
    for column in sorted(unknown):
        warnings.append(f"ignoring unknown tracks column '{column}'")

    tracks: list[Track] = []
    if len(tracks_df) == 0:
        warnings.append("tracks file contains no rows")
    else:
        cols = {name: tracks_df[name].to_numpy() for name in TRACKS_REQUIRED}
        order = np.lexsort((cols["frame"], cols["id"]))
        ids = cols["id"][order].astype(np.int64)
        boundaries = np.flatnonzero(np.diff(ids)) + 1
        starts = np.concatenate(([0], boundaries))
        ends = np.concatenate((boundaries, [len(ids)]))
        for lo, hi in zip(starts, ends):
            sel = order[lo:hi]
            tracks.append(_build_track(int(ids[lo]), sel, cols, directions,
                                       classes, layout))

    recording = Recording(id=recording_id, frame_rate=frame_rate,
                          location_id=location_id, lane_layout=layout,
                          tracks=tuple(tracks))
    report = IngestReport(recording_id=recording_id, n_tracks=len(tracks),
                          n_frames=recording.n_frames, warnings=warnings)
    return recording, report


def _build_track(tid: int, sel: np.ndarray, cols, directions, classes,
                 layout: LaneLayout) -> Track:
    if tid not in directions:
        raise IngestError(f"track {tid}: no tracksMeta row")
    direction = directions[tid]
    frames = cols["frame"][sel].astype(np.int64)
    if len(frames) > 1 and not np.all(np.diff(frames) == 1):
        raise IngestError(f"track {tid}: non-contiguous frames")

    width_img = float(np.asarray(cols["width"][sel], dtype=np.float64)[0])
    height_img = float(np.asarray(cols["height"][sel], dtype=np.float64)[0])
    # Bounding-box corner -> centre, then into the canonical frame.
    cx = cols["x"][sel].astype(np.float64) + width_img / 2.0
    cy = cols["y"][sel].astype(np.float64) + height_img / 2.0
    vx = cols["xVelocity"][sel].astype(np.float64)
    vy = cols["yVelocity"][sel].astype(np.float64)
    ax = cols["xAcceleration"][sel].astype(np.float64)
    ay = cols["yAcceleration"][sel].astype(np.float64)
    if direction == UPPER:
        cx, vx, ax = -cx, -vx, -ax
    else:
        cy, vy, ay = -cy, -vy, -ay

    if not layout.has_direction(direction):
        raise IngestError(f"track {tid}: no lane markings for direction '{direction}'")
    lane = lanes_of(cy, direction, layout)

    return Track(id=tid, vehicle_class=classes[tid], driving_direction=direction,
                 length=width_img, width=height_img, frames=frames,
                 x=cx, y=cy, vx=vx, vy=vy, ax=ax, ay=ay, lane_id=lane)


def validate_recording(recording: Recording) -> list[str]:
    """All model invariant violations (empty list means valid)."""
    violations: list[str] = []
    if recording.frame_rate <= 0:
        violations.append("frame_rate must be positive")

    seen: set[int] = set()
    for track in recording.tracks:
        if track.id in seen:
            violations.append(f"duplicate track id {track.id}")
        seen.add(track.id)

        if track.vehicle_class not in (CAR, TRUCK):
            violations.append(f"track {track.id}: unknown vehicle class "
                              f"'{track.vehicle_class}'")
        if track.driving_direction not in (UPPER, LOWER):
            violations.append(f"track {track.id}: unknown driving direction "
                              f"'{track.driving_direction}'")
            continue
        diffs = np.diff(track.frames)
        if len(diffs) and not np.all(diffs == 1):
            violations.append(f"track {track.id}: frames not contiguous")
        if not recording.lane_layout.has_direction(track.driving_direction):
            violations.append(f"track {track.id}: no lane layout for its direction")
            continue
        n_lanes = recording.lane_layout.n_lanes(track.driving_direction)
        bad = (track.lane_id != -1) & ((track.lane_id < 0) | (track.lane_id >= n_lanes))
        if np.any(bad):
            bad_values = sorted(set(track.lane_id[bad].tolist()))
            violations.append(f"track {track.id}: lane ids {bad_values} not in layout")
    return violations
