import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenariocov.coverage import (ActorBoxSpec, ActorSelection, CoverageCurve,
                                  actor_coverage, actor_over_time_coverage,
                                  select_actors, sweep, tag_coverage,
                                  time_coverage)
from scenariocov.egoview import generate_ego_views
from scenariocov.model import Scenario, ScenarioCategory, Tag, TagCountMatrix
from scenariocov.oracle import (oracle_actor_coverage,
                                oracle_actor_over_time_coverage,
                                oracle_tag_coverage, oracle_time_coverage)
from scenariocov.report import reference_kappa_matrix
from scenariocov.synth import ManeuverScript, VehiclePlan, generate

SC = ScenarioCategory


def scenario(start, end, mains=(2,), actors=None, ego=1, category=SC.LEAD_CRUISING):
    actors = set(actors) if actors is not None else set(mains)
    return Scenario(category, ego, frozenset(mains), frozenset(actors), start, end)


def one_by_one_matrix(count):
    return TagCountMatrix((Tag.CAR,), (SC.CUT_IN,), {(Tag.CAR, SC.CUT_IN): count})


class TestTagCoverage:
    def test_reference_matrix_full_at_n10(self):
        matrix = reference_kappa_matrix()
        assert tag_coverage(matrix, n=10) == 1.0

    def test_reference_matrix_subset_at_n100(self):
        matrix = reference_kappa_matrix()
        subset = [Tag.CAR, Tag.TRUCK, Tag.REAR_RIGHT, Tag.SLOWER, Tag.FASTER,
                  Tag.CRUISING, Tag.ACCELERATING]
        assert tag_coverage(matrix, tags=subset, n=100) == 1.0

    def test_zero_matrix_is_zero(self):
        matrix = TagCountMatrix(tuple(Tag), tuple(SC), {})
        for n in (1, 10, 100):
            assert tag_coverage(matrix, n=n) == 0.0

    def test_single_cell_graded(self):
        assert tag_coverage(one_by_one_matrix(3), n=5) == pytest.approx(0.6)

    def test_empty_subsets_rejected(self):
        with pytest.raises(ValueError):
            tag_coverage(one_by_one_matrix(3), tags=(), n=1)
        with pytest.raises(ValueError):
            tag_coverage(one_by_one_matrix(3), categories=(), n=1)

    def test_n_zero_rejected(self):
        with pytest.raises(ValueError):
            tag_coverage(one_by_one_matrix(3), n=0)

    @given(st.integers(0, 500), st.integers(1, 50), st.integers(1, 50))
    @settings(max_examples=100)
    def test_monotone_in_n(self, count, n1, n2):
        lo, hi = min(n1, n2), max(n1, n2)
        matrix = one_by_one_matrix(count)
        assert tag_coverage(matrix, n=hi) <= tag_coverage(matrix, n=lo)

    def test_saturation_iff_all_cells_at_least_n(self):
        matrix = reference_kappa_matrix()
        smallest = min(matrix.counts.values())
        assert tag_coverage(matrix, n=smallest) == 1.0
        assert tag_coverage(matrix, n=smallest + 1) < 1.0


class TestTimeCoverage:
    def test_full_cover_is_one(self):
        per_ego = [((0, 99), [scenario(0, 99)])]
        assert time_coverage(per_ego, 1) == 1.0

    def test_half_cover_at_n2(self):
        per_ego = [((0, 99), [scenario(0, 49)])]
        assert time_coverage(per_ego, 2) == pytest.approx(0.25)

    def test_pooled_over_egos(self):
        per_ego = [((0, 49), [scenario(0, 49)]), ((0, 49), [])]
        assert time_coverage(per_ego, 1) == pytest.approx(0.5)

    def test_zero_frames_rejected(self):
        with pytest.raises(ValueError):
            time_coverage([], 1)

    def test_scenario_outside_interval_rejected(self):
        with pytest.raises(ValueError):
            time_coverage([((10, 20), [scenario(0, 15)])], 1)

    def test_n_zero_rejected(self):
        with pytest.raises(ValueError):
            time_coverage([((0, 9), [])], 0)


def follow_views():
    script = ManeuverScript(
        lane_count=3, duration_s=20.0,
        vehicles=(VehiclePlan(1, 1, 50.0, 30.0),
                  VehiclePlan(2, 1, 0.0, 30.0),
                  VehiclePlan(3, 2, -30.0, 30.0)))
    recording, _ = generate(script)
    return generate_ego_views(recording)


class TestSelectActors:
    def test_front_actor_always_inside(self):
        views = follow_views()
        sel = select_actors(views, ActorBoxSpec(long_front=100.0, lat_halfwidth=1.5))
        key = ("01", 2, 1)
        assert key in sel.time_sets
        ego2 = next(v for v in views if v.ego_id == 2)
        assert len(sel.time_sets[key]) == ego2.n_frames

    def test_front_only_box_excludes_rear_actor(self):
        views = follow_views()
        sel = select_actors(views, ActorBoxSpec(long_front=100.0, lat_halfwidth=8.5))
        assert ("01", 1, 2) not in sel.time_sets  # vehicle 2 is behind ego 1
        assert ("01", 2, 3) not in sel.time_sets  # vehicle 3 is rear-left of ego 2

    def test_rear_extent_includes_rear_actor(self):
        views = follow_views()
        sel = select_actors(views, ActorBoxSpec(long_front=100.0, long_rear=100.0,
                                                lat_halfwidth=8.5))
        assert ("01", 1, 2) in sel.time_sets

    def test_narrow_box_excludes_adjacent_lane(self):
        views = follow_views()
        sel = select_actors(views, ActorBoxSpec(long_front=100.0, long_rear=100.0,
                                                lat_halfwidth=1.5))
        assert ("01", 2, 3) not in sel.time_sets

    def test_invalid_box_rejected(self):
        with pytest.raises(ValueError):
            ActorBoxSpec(long_front=0.0)
        with pytest.raises(ValueError):
            ActorBoxSpec(long_front=10.0, long_rear=-1.0)

    def test_empty_time_set_rejected(self):
        with pytest.raises(ValueError):
            ActorSelection(ActorBoxSpec(10.0), {("01", 1, 2): np.array([], int)})


class TestActorCoverage:
    def _selection(self, keys):
        return ActorSelection(ActorBoxSpec(long_front=10.0),
                              {k: np.arange(10) for k in keys})

    def test_all_covered(self):
        sel = self._selection([("01", 1, 2)])
        by_ego = {("01", 1): [scenario(0, 9)]}
        assert actor_coverage(sel, by_ego) == 1.0

    def test_three_of_four(self):
        sel = self._selection([("01", 1, i) for i in (2, 3, 4, 5)])
        by_ego = {("01", 1): [scenario(0, 9, mains=(2, 3)), scenario(0, 9, mains=(4,))]}
        assert actor_coverage(sel, by_ego) == pytest.approx(0.75)

    def test_membership_all_counts_non_main_actors(self):
        sel = self._selection([("01", 1, 3)])
        by_ego = {("01", 1): [scenario(0, 9, mains=(2,), actors=(2, 3))]}
        assert actor_coverage(sel, by_ego, membership="main") == 0.0
        assert actor_coverage(sel, by_ego, membership="all") == 1.0

    def test_empty_selection_rejected(self):
        sel = ActorSelection(ActorBoxSpec(10.0), {})
        with pytest.raises(ValueError):
            actor_coverage(sel, {})
        with pytest.raises(ValueError):
            actor_over_time_coverage(sel, {})


class TestActorOverTimeCoverage:
    def test_full_time_cover(self):
        sel = ActorSelection(ActorBoxSpec(10.0), {("01", 1, 2): np.arange(60)})
        by_ego = {("01", 1): [scenario(0, 59)]}
        assert actor_over_time_coverage(sel, by_ego) == 1.0

    def test_half_time_cover(self):
        sel = ActorSelection(ActorBoxSpec(10.0), {("01", 1, 2): np.arange(60)})
        by_ego = {("01", 1): [scenario(0, 29)]}
        assert actor_over_time_coverage(sel, by_ego) == pytest.approx(0.5)

    def test_never_exceeds_actor_coverage(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            keys = [("01", 1, int(a)) for a in rng.choice(20, size=5, replace=False)]
            sel = ActorSelection(ActorBoxSpec(10.0), {
                k: np.sort(rng.choice(200, size=int(rng.integers(1, 50)),
                                      replace=False)) for k in keys})
            scenarios = [scenario(int(s), int(s) + int(rng.integers(1, 80)),
                                  mains=(int(rng.integers(2, 22)),))
                         for s in rng.integers(0, 150, size=6)]
            by_ego = {("01", 1): scenarios}
            assert actor_over_time_coverage(sel, by_ego) <= \
                actor_coverage(sel, by_ego) + 1e-15


class TestOracleEquivalence:
    def _random_inputs(self, seed):
        rng = np.random.default_rng(seed)
        tags = list(Tag)[: int(rng.integers(1, 6))]
        cats = list(SC)[: int(rng.integers(1, 5))]
        matrix = TagCountMatrix(
            tuple(tags), tuple(cats),
            {(t, c): int(rng.poisson(3)) for t in tags for c in cats})
        per_ego = []
        for _ in range(int(rng.integers(1, 4))):
            hi = int(rng.integers(20, 120))
            scenarios = [scenario(int(a), int(min(hi, a + rng.integers(0, 40))),
                                  mains=(int(rng.integers(2, 6)),),
                                  actors=range(2, 8))
                         for a in rng.integers(0, hi, size=int(rng.integers(0, 6)))]
            per_ego.append(((0, hi), scenarios))
        keys = [("01", 1, i) for i in range(2, 2 + int(rng.integers(1, 5)))]
        time_sets = {k: np.sort(rng.choice(120, size=int(rng.integers(1, 40)),
                                           replace=False)) for k in keys}
        by_ego = {("01", 1): per_ego[0][1]}
        return matrix, per_ego, time_sets, by_ego

    @pytest.mark.parametrize("seed", range(25))
    def test_all_four_metrics(self, seed):
        matrix, per_ego, time_sets, by_ego = self._random_inputs(seed)
        n = (seed % 4) + 1
        assert tag_coverage(matrix, n=n) == \
            pytest.approx(oracle_tag_coverage(matrix, n=n), rel=1e-12)
        assert time_coverage(per_ego, n) == \
            pytest.approx(oracle_time_coverage(per_ego, n), rel=1e-12)
        sel = ActorSelection(ActorBoxSpec(10.0), time_sets)
        for membership in ("main", "all"):
            assert actor_coverage(sel, by_ego, membership) == pytest.approx(
                oracle_actor_coverage(time_sets, by_ego, membership), rel=1e-12)
            assert actor_over_time_coverage(sel, by_ego, membership) == pytest.approx(
                oracle_actor_over_time_coverage(time_sets, by_ego, membership),
                rel=1e-12)


class TestOracleDispatcher:
    def test_reference_matrix_at_n10(self):
        from scenariocov.oracle import oracle_metric
        assert oracle_metric("tag", reference_kappa_matrix(), n=10) == 1.0

    def test_empty_actor_set_is_domain_error(self):
        from scenariocov.oracle import oracle_metric
        with pytest.raises(ValueError):
            oracle_metric("actor", {}, {})
        with pytest.raises(ValueError):
            oracle_metric("actor-over-time", {}, {})

    def test_unknown_metric(self):
        from scenariocov.oracle import oracle_metric
        with pytest.raises(ValueError, match="unknown metric"):
            oracle_metric("volume", {})


class TestSweep:
    def test_single_point_grid(self):
        curve = sweep(lambda n: 1.0 / n, [4])
        assert curve.params == (4,) and curve.values == (0.25,)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            sweep(lambda n: 0.0, [])

    def test_metric_errors_propagate(self):
        matrix = one_by_one_matrix(3)
        with pytest.raises(ValueError):
            sweep(lambda n: tag_coverage(matrix, n=n), [1, 0])

    def test_curve_values_validated(self):
        with pytest.raises(ValueError):
            CoverageCurve(params=(1,), values=(1.5,))

    def test_tag_sweep_on_reference_matrix_starts_at_one(self):
        matrix = reference_kappa_matrix()
        curve = sweep(lambda n: tag_coverage(matrix, n=n), [1, 10, 100, 1000])
        assert curve.values[0] == 1.0
        assert all(a >= b for a, b in zip(curve.values, curve.values[1:]))
