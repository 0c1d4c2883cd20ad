"""Scenario mining and coverage metrics for highway trajectory recordings."""

__version__ = "0.1.0"

from .activity import (ActivityConfig, ActivitySegment, LateralKind,
                       LongitudinalKind, RelativeZone, classify_zone,
                       segment_lateral, segment_longitudinal, segment_recording,
                       segment_track, zone_of)
from .coverage import (ActorBoxSpec, ActorSelection, CoverageCurve,
                       actor_coverage, actor_over_time_coverage, select_actors,
                       sweep, tag_coverage, time_coverage)
from .egoview import ActorView, EgoDataset, EgoViewParams, generate_ego_views
from .highd import (IngestError, IngestReport, RecordingPaths, find_recordings,
                    parse_recording, validate_recording)
from .mining import MiningConfig, leading_vehicle_at, mine_scenarios
from .model import (CAR, LOWER, NO_LEADING_VEHICLE, OFF_ROAD, TRUCK, UPPER,
                    LaneLayout, PseudoCategory, Recording, Scenario,
                    ScenarioCategory, Tag, TagCountMatrix, Track, TrackState,
                    lane_of, lanes_of, lateral_offset_between)
from .tagging import (TAG_GROUPS, TaggingConfig, assign_tags,
                      build_tag_count_matrix, tag_scenarios)
