"""The four coverage metrics and the box-based relevant-actor selection.

Tag-based coverage quantifies how well mined scenarios cover a tag space
(coverage of the operational domain); the time-, actor- and
actor-over-time-based metrics quantify how well they cover the underlying
driving data. All metrics return ratios in [0, 1] and are computed with
exact integer/rational arithmetic, dividing once at the end, so results
are independent of summation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .egoview import EgoDataset
from .model import CategoryLike, Scenario, Tag, TagCountMatrix

#: Scenario lists keyed by (recording_id, ego_id).
ScenariosByEgo = Mapping[tuple[str, int], Sequence[Scenario]]
#: (start_frame, end_frame) interval plus the scenarios of one ego dataset.
PerEgo = Iterable[tuple[tuple[int, int], Sequence[Scenario]]]


@dataclass(frozen=True)
class ActorBoxSpec:
    """Imaginary box around the ego that defines the relevant-actor set.

    The box spans ``[-long_rear, long_front]`` longitudinally (a zero rear
    extent makes it front-only) and ``[-lat_halfwidth, lat_halfwidth]``
    laterally, all centre-to-centre with closed inequalities.
    """

    long_front: float
    long_rear: float = 0.0
    lat_halfwidth: float = 1.5

    def __post_init__(self):
        if self.long_front <= 0 or self.lat_halfwidth <= 0 or self.long_rear < 0:
            raise ValueError("invalid actor box")

    def label(self) -> str:
        rear = f"-{self.long_rear:g}" if self.long_rear else "front-only"
        return f"front={self.long_front:g} rear={rear} lat={self.lat_halfwidth:g}"


@dataclass(frozen=True)
class ActorSelection:
    """Actors that ever satisfy a box condition, with their in-box frames.

    Keys are (recording_id, ego_id, actor_id) triples; every entry has a
    non-empty, strictly increasing frame array.
    """

    box: ActorBoxSpec
    time_sets: Mapping[tuple[str, int, int], np.ndarray]

    def __post_init__(self):
        frozen = {}
        for key, frames in self.time_sets.items():
            frames = np.asarray(frames, dtype=np.int64)
            if len(frames) == 0:
                raise ValueError(f"empty time set for {key}")
            frames.setflags(write=False)
            frozen[key] = frames
        object.__setattr__(self, "time_sets", MappingProxyType(frozen))

    @property
    def actors(self) -> frozenset[tuple[str, int, int]]:
        return frozenset(self.time_sets)

    def __len__(self) -> int:
        return len(self.time_sets)


def select_actors(ego_views: Iterable[EgoDataset], box: ActorBoxSpec) -> ActorSelection:
    """All (ego, actor) pairs ever inside ``box``, with their in-box frames."""
    time_sets: dict[tuple[str, int, int], np.ndarray] = {}
    for ego in ego_views:
        for av in ego.actors:
            inside = ((av.dx <= box.long_front) & (av.dx >= -box.long_rear)
                      & (np.abs(av.dy) <= box.lat_halfwidth))
            if inside.any():
                key = (ego.recording_id, ego.ego_id, av.actor_id)
                time_sets[key] = av.frames[inside]
    return ActorSelection(box=box, time_sets=time_sets)


def tag_coverage(matrix: TagCountMatrix, tags: Sequence[Tag] | None = None,
                 categories: Sequence[CategoryLike] | None = None,
                 n: int = 1) -> float:
    """Fraction of (tag, category) pairs backed by >= n scenarios, graded.

    Pairs with fewer than ``n`` scenarios contribute their count over
    ``n``; the metric is 1 exactly when every pair has at least ``n``
    scenarios.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    tags = tuple(tags) if tags is not None else matrix.tags
    categories = tuple(categories) if categories is not None else matrix.categories
    if not tags or not categories:
        raise ValueError("tag and category subsets must be non-empty")
    total = 0
    for tag in tags:
        for category in categories:
            total += min(n, matrix.get(tag, category))
    return total / (n * len(tags) * len(categories))


def time_coverage(per_ego: PerEgo, n: int = 1) -> float:
    """Fraction of ego-dataset frames covered by >= n scenarios, graded.

    Frames of each ego dataset count independently and are pooled over the
    whole input.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    numerator = 0
    total_frames = 0
    for (start, end), scenarios in per_ego:
        if start > end:
            raise ValueError("empty ego frame interval")
        m = end - start + 1
        counts = np.zeros(m, dtype=np.int64)
        for sc in scenarios:
            if sc.start_frame < start or sc.end_frame > end:
                raise ValueError(
                    f"scenario interval [{sc.start_frame}, {sc.end_frame}] "
                    f"outside ego interval [{start}, {end}]")
            counts[sc.start_frame - start:sc.end_frame - start + 1] += 1
        numerator += int(np.minimum(counts, n).sum())
        total_frames += m
    if total_frames == 0:
        raise ValueError("no ego frames")
    return numerator / (n * total_frames)


def _covering_scenarios(scenarios: Sequence[Scenario], actor_id: int,
                        membership: str) -> list[Scenario]:
    if membership == "main":
        return [sc for sc in scenarios if actor_id in sc.main_actor_ids]
    if membership == "all":
        return [sc for sc in scenarios if actor_id in sc.actor_ids]
    raise ValueError(f"membership must be 'main' or 'all', got {membership!r}")


def actor_coverage(sel: ActorSelection, scenarios_by_ego: ScenariosByEgo,
                   membership: str = "main") -> float:
    """Fraction of selected actors that are part of at least one scenario.

    With the default ``membership='main'`` an actor counts as covered only
    where it is a main actor, matching the experiment the metrics were
    designed around; ``'all'`` uses plain scenario participation.
    """
    if not sel.time_sets:
        raise ValueError("empty actor selection")
    covered = 0
    for (rec_id, ego_id, actor_id) in sel.time_sets:
        scenarios = scenarios_by_ego.get((rec_id, ego_id), ())
        if _covering_scenarios(scenarios, actor_id, membership):
            covered += 1
    return covered / len(sel)


def actor_over_time_coverage(sel: ActorSelection, scenarios_by_ego: ScenariosByEgo,
                             membership: str = "main") -> float:
    """Mean, over selected actors, of the covered fraction of their in-box time."""
    if not sel.time_sets:
        raise ValueError("empty actor selection")
    acc = Fraction(0)
    for (rec_id, ego_id, actor_id), frames in sel.time_sets.items():
        scenarios = _covering_scenarios(
            scenarios_by_ego.get((rec_id, ego_id), ()), actor_id, membership)
        covered = np.zeros(len(frames), dtype=bool)
        for sc in scenarios:
            covered |= (frames >= sc.start_frame) & (frames <= sc.end_frame)
        acc += Fraction(int(covered.sum()), len(frames))
    return float(acc / len(sel))


@dataclass(frozen=True)
class CoverageCurve:
    """A metric evaluated pointwise over a parameter grid."""

    params: tuple
    values: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.params) != len(self.values):
            raise ValueError("params and values differ in length")
        if not self.params:
            raise ValueError("empty curve")
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError("coverage values must lie in [0, 1]")


def sweep(metric: Callable[[object], float], grid: Sequence, label: str = "") -> CoverageCurve:
    """Evaluate ``metric`` pointwise over ``grid`` in deterministic order."""
    if not grid:
        raise ValueError("empty parameter grid")
    return CoverageCurve(params=tuple(grid),
                         values=tuple(metric(p) for p in grid), label=label)
