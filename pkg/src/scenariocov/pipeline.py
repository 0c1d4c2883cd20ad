"""End-to-end wiring: recording -> ego views -> activities -> tagged scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field

from .activity import segment_recording
from .config import AnalysisConfig
from .egoview import EgoDataset, generate_ego_views
from .mining import mine_scenarios
from .model import Recording, Scenario
from .tagging import tag_scenarios


@dataclass
class RecordingResult:
    """Mined, tagged scenarios of one recording plus dataset bookkeeping."""

    recording_id: str
    n_tracks: int
    ego_views: list[EgoDataset]
    scenarios_by_ego: dict[int, list[Scenario]] = field(default_factory=dict)

    @property
    def n_ego_views(self) -> int:
        return len(self.ego_views)

    @property
    def total_frames(self) -> int:
        return sum(v.n_frames for v in self.ego_views)

    @property
    def n_skipped_tracks(self) -> int:
        return self.n_tracks - len(self.ego_views)

    def all_scenarios(self) -> list[Scenario]:
        out: list[Scenario] = []
        for ego_id in sorted(self.scenarios_by_ego):
            out.extend(self.scenarios_by_ego[ego_id])
        return out

    def per_ego_intervals(self):
        """((start, end), scenarios) pairs as consumed by time coverage."""
        by_id = {v.ego_id: v for v in self.ego_views}
        return [((by_id[e].start_frame, by_id[e].end_frame), self.scenarios_by_ego[e])
                for e in sorted(self.scenarios_by_ego)]


def process_recording(recording: Recording,
                      analysis: AnalysisConfig = AnalysisConfig()) -> RecordingResult:
    """Run segmentation, ego-view generation, mining and tagging."""
    activities = segment_recording(recording, analysis.activity)
    views = generate_ego_views(recording, analysis.ego)
    result = RecordingResult(recording_id=recording.id,
                             n_tracks=len(recording.tracks), ego_views=views)
    for view in views:
        scenarios = mine_scenarios(view, activities, analysis.mining)
        result.scenarios_by_ego[view.ego_id] = tag_scenarios(
            scenarios, view, activities, analysis.tagging)
    return result
