"""Brute-force reference evaluation of the four coverage metrics.

Every function here evaluates its metric's defining sum literally, term by
term, in plain Python. These are the oracles the optimized implementations
in :mod:`scenariocov.coverage` are tested against; they deliberately share
no helpers with that module beyond the core model types, and they are only
meant for small inputs.
"""

from __future__ import annotations


def oracle_tag_coverage(matrix, tags=None, categories=None, n=1):
    if n < 1:
        raise ValueError("n must be a positive integer")
    tags = list(tags) if tags is not None else list(matrix.tags)
    categories = list(categories) if categories is not None else list(matrix.categories)
    if not tags or not categories:
        raise ValueError("tag and category subsets must be non-empty")
    total = 0.0
    for t in tags:
        for c in categories:
            kappa = matrix.get(t, c)
            total += kappa if kappa < n else n
    return total / (n * len(tags) * len(categories))


def oracle_time_coverage(per_ego, n=1):
    if n < 1:
        raise ValueError("n must be a positive integer")
    numerator = 0.0
    total_frames = 0
    for (start, end), scenarios in per_ego:
        if start > end:
            raise ValueError("empty ego frame interval")
        for frame in range(start, end + 1):
            active = 0
            for sc in scenarios:
                if sc.start_frame <= frame <= sc.end_frame:
                    active += 1
            numerator += active if active < n else n
            total_frames += 1
    if total_frames == 0:
        raise ValueError("no ego frames")
    return numerator / (n * total_frames)


def _is_member(scenario, actor_id, membership):
    if membership == "main":
        return actor_id in scenario.main_actor_ids
    if membership == "all":
        return actor_id in scenario.actor_ids
    raise ValueError(f"membership must be 'main' or 'all', got {membership!r}")


def oracle_actor_coverage(time_sets, scenarios_by_ego, membership="main"):
    """``time_sets``: (recording_id, ego_id, actor_id) -> in-box frames."""
    if not time_sets:
        raise ValueError("empty actor selection")
    covered = 0
    for (rec_id, ego_id, actor_id) in time_sets:
        for sc in scenarios_by_ego.get((rec_id, ego_id), ()):
            if _is_member(sc, actor_id, membership):
                covered += 1
                break
    return covered / len(time_sets)


def oracle_actor_over_time_coverage(time_sets, scenarios_by_ego, membership="main"):
    if not time_sets:
        raise ValueError("empty actor selection")
    total = 0.0
    for (rec_id, ego_id, actor_id), frames in time_sets.items():
        frames = list(frames)
        if not frames:
            raise ValueError(f"empty time set for actor {actor_id}")
        scenarios = scenarios_by_ego.get((rec_id, ego_id), ())
        part = 0.0
        for frame in frames:
            count = 0
            for sc in scenarios:
                if (sc.start_frame <= frame <= sc.end_frame
                        and _is_member(sc, actor_id, membership)):
                    count += 1
            part += min(1, count)
        total += part / len(frames)
    return total / len(time_sets)


_ORACLES = {
    "tag": oracle_tag_coverage,
    "time": oracle_time_coverage,
    "actor": oracle_actor_coverage,
    "actor-over-time": oracle_actor_over_time_coverage,
}


def oracle_metric(metric: str, *args, **kwargs):
    """Dispatch to one of the four reference metrics by name."""
    try:
        fn = _ORACLES[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; expected one of "
                         f"{sorted(_ORACLES)}") from None
    return fn(*args, **kwargs)
