import numpy as np
import pytest

from fixture_scripts import (CATEGORY_SCRIPTS, VARIANTS, actor_free_scripts,
                             all_category_scripts)
from scenariocov.activity import segment_recording
from scenariocov.config import AnalysisConfig
from scenariocov.egoview import generate_ego_views
from scenariocov.mining import MiningConfig, leading_vehicle_at, mine_scenarios
from scenariocov.model import NO_LEADING_VEHICLE, ScenarioCategory
from scenariocov.pipeline import process_recording
from scenariocov.synth import ManeuverScript, VehiclePlan, generate

SC = ScenarioCategory


def mine_all(recording, cfg=MiningConfig()):
    activities = segment_recording(recording)
    views = generate_ego_views(recording)
    return {v.ego_id: mine_scenarios(v, activities, cfg) for v in views}, views


class TestLeadingVehicle:
    def _view(self):
        script = ManeuverScript(
            lane_count=3, duration_s=20.0,
            vehicles=(VehiclePlan(1, 1, 30.0, 30.0),
                      VehiclePlan(2, 1, 60.0, 30.0),
                      VehiclePlan(3, 1, -20.0, 30.0),
                      VehiclePlan(4, 1, 0.0, 30.0)))
        recording, _ = generate(script)
        views = {v.ego_id: v for v in generate_ego_views(recording)}
        return views

    def test_nearest_of_two_front_actors(self):
        assert leading_vehicle_at(self._view()[4], 100) == 1

    def test_only_rear_actors_is_none(self):
        # Vehicle 2 leads everyone; nothing is in front of it.
        assert leading_vehicle_at(self._view()[2], 100) is None

    def test_frame_outside_dataset_rejected(self):
        with pytest.raises(ValueError):
            leading_vehicle_at(self._view()[4], 10 ** 6)

    def test_actor_at_radius_boundary_included(self):
        script = ManeuverScript(
            lane_count=3, duration_s=20.0,
            vehicles=(VehiclePlan(1, 1, 100.0, 30.0),
                      VehiclePlan(2, 1, 0.0, 30.0)))
        recording, _ = generate(script)
        views = {v.ego_id: v for v in generate_ego_views(recording)}
        assert leading_vehicle_at(views[2], 0) == 1


def _matches(detections, category, ego_id, mains, start, end, fps, tol_s=0.5):
    for sc in detections.get(ego_id, []):
        if (sc.category is category and sc.main_actor_ids == frozenset(mains)
                and abs(sc.start_frame - start) / fps <= tol_s + 1e-9
                and abs(sc.end_frame - end) / fps <= tol_s + 1e-9):
            return True
    return False


class TestCategoryDetectors:
    @pytest.mark.parametrize("category", list(SC))
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_planted_scenarios_recalled(self, category, variant):
        script = CATEGORY_SCRIPTS[category](variant)
        recording, truth = generate(script)
        detections, _ = mine_all(recording)
        for cat, ego_id, mains, start, end in truth.frame_intervals():
            assert _matches(detections, cat, ego_id, mains, start, end,
                            recording.frame_rate), (
                f"{cat.symbol} v{variant}: planted [{start}, {end}] not found in "
                f"{[(s.category.symbol, s.start_frame, s.end_frame, sorted(s.main_actor_ids)) for s in detections.get(ego_id, [])]}")

    @pytest.mark.parametrize("idx", range(3))
    def test_actor_free_recordings_yield_nothing(self, idx):
        recording, _ = generate(actor_free_scripts()[idx])
        detections, _ = mine_all(recording)
        assert all(not scs for scs in detections.values())

    def test_disabled_categories_not_mined(self):
        script = CATEGORY_SCRIPTS[SC.CUT_IN](0)
        recording, _ = generate(script)
        cfg = MiningConfig(enabled=frozenset({SC.LEAD_CRUISING}))
        detections, _ = mine_all(recording, cfg)
        assert all(sc.category is SC.LEAD_CRUISING
                   for scs in detections.values() for sc in scs)


class TestCategorySoundness:
    def test_c5_main_actor_becomes_leader_at_end(self):
        recording, _ = generate(CATEGORY_SCRIPTS[SC.CUT_IN](0))
        detections, views = mine_all(recording)
        views = {v.ego_id: v for v in views}
        hits = [(e, sc) for e, scs in detections.items() for sc in scs
                if sc.category is SC.CUT_IN]
        assert hits
        for ego_id, sc in hits:
            (main,) = sc.main_actor_ids
            assert leading_vehicle_at(views[ego_id], sc.end_frame) == main

    def test_c9_relative_position_flips_sign(self):
        recording, _ = generate(CATEGORY_SCRIPTS[SC.EGO_OVERTAKING](0))
        detections, views = mine_all(recording)
        views = {v.ego_id: v for v in views}
        for ego_id, scs in detections.items():
            for sc in scs:
                if sc.category not in (SC.EGO_OVERTAKING, SC.VEHICLE_OVERTAKING_EGO):
                    continue
                (main,) = sc.main_actor_ids
                actor = next(a for a in views[ego_id].actors if a.actor_id == main)
                dx0 = actor.dx[actor.index_of(sc.start_frame)]
                dx1 = actor.dx[actor.index_of(sc.end_frame)]
                if sc.category is SC.EGO_OVERTAKING:
                    assert dx0 > 0 > dx1
                else:
                    assert dx0 < 0 < dx1

    def test_actor_sets_cover_main_actors_and_visibility(self):
        recording, _ = generate(CATEGORY_SCRIPTS[SC.MERGE_OCCUPIED_LANE](0))
        detections, views = mine_all(recording)
        views = {v.ego_id: v for v in views}
        for ego_id, scs in detections.items():
            for sc in scs:
                assert sc.main_actor_ids <= sc.actor_ids
                assert sc.actor_ids == views[ego_id].actors_in_interval(
                    sc.start_frame, sc.end_frame)


class TestCatchAll:
    def test_lone_ego_no_catch_all_by_default(self):
        recording, _ = generate(actor_free_scripts()[0])
        detections, _ = mine_all(recording)
        assert detections == {1: []}

    def test_lone_ego_catch_all_spans_dataset(self):
        recording, _ = generate(actor_free_scripts()[0])
        detections, views = mine_all(recording, MiningConfig(catch_all=True))
        (view,) = views
        (scenario,) = detections[1]
        assert scenario.category is NO_LEADING_VEHICLE
        assert (scenario.start_frame, scenario.end_frame) == \
            (view.start_frame, view.end_frame)

    @pytest.mark.parametrize("script", all_category_scripts()[::4])
    def test_every_frame_covered_with_catch_all(self, script):
        recording, _ = generate(script)
        detections, views = mine_all(recording, MiningConfig(catch_all=True))
        for view in views:
            covered = np.zeros(view.n_frames, dtype=bool)
            for sc in detections[view.ego_id]:
                covered[sc.start_frame - view.start_frame:
                        sc.end_frame - view.start_frame + 1] = True
            assert covered.all()


class TestDeterminism:
    def test_repeat_runs_identical(self):
        recording, _ = generate(CATEGORY_SCRIPTS[SC.MERGE_OCCUPIED_LANE](1))
        first, _ = mine_all(recording)
        second, _ = mine_all(recording)
        assert first == second

    def test_sorted_by_category_then_interval(self):
        recording, _ = generate(CATEGORY_SCRIPTS[SC.CUT_IN](0))
        detections, _ = mine_all(recording)
        for scs in detections.values():
            assert [s.sort_key() for s in scs] == sorted(s.sort_key() for s in scs)


class TestMinDuration:
    def test_short_state_scenarios_filtered(self):
        # Leader present for the whole run; with a huge min duration the
        # state categories vanish while event categories are unaffected.
        recording, _ = generate(CATEGORY_SCRIPTS[SC.LEAD_CRUISING](0))
        long_cfg = MiningConfig(min_duration_s=10 ** 6)
        detections, _ = mine_all(recording, long_cfg)
        assert all(not scs for scs in detections.values())

    def test_process_recording_wires_tagging(self):
        recording, _ = generate(CATEGORY_SCRIPTS[SC.LEAD_CRUISING](0))
        result = process_recording(recording, AnalysisConfig())
        scenarios = result.all_scenarios()
        assert scenarios and all(s.tags for s in scenarios)
