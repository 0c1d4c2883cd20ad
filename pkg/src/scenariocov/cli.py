"""Command-line pipeline: ingest-check, mine, coverage, sweep, report.

Exit codes: 0 success, 1 usage/config error, 2 data error. Every config
key can be overridden with ``--set section.key=value``; the dedicated
flags are shorthands for the most common keys.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, PipelineConfig, load_config
from .coverage import (actor_coverage, actor_over_time_coverage, select_actors,
                       sweep, tag_coverage, time_coverage)
from .highd import IngestError, RecordingPaths, find_recordings, parse_recording, validate_recording
from .model import CATEGORY_ORDER, ScenarioCategory, Tag
from .pipeline import RecordingResult, process_recording
from .report import (CoverageReport, CurveRecord, StoreError, STORE_SUFFIX,
                     kappa_to_nested, read_kappa_csv, read_report, read_store,
                     render_store, text_summary, write_curve_csvs)
from .tagging import TAG_GROUPS, build_tag_count_matrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def _collect_recordings(inputs) -> list[RecordingPaths]:
    found: list[RecordingPaths] = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            found.extend(find_recordings(path))
        elif path.name.endswith("_recordingMeta.csv") and path.is_file():
            prefix = path.name[: -len("_recordingMeta.csv")]
            found.append(RecordingPaths.from_prefix(path.parent, prefix))
        else:
            raise ConfigError(f"input is neither a directory nor a recording: {item}")
    unique = sorted(set(found), key=lambda p: str(p.meta_path))
    return unique


def _mine_worker(args):
    paths, analysis, version = args
    try:
        recording, ingest_report = parse_recording(paths)
        result = process_recording(recording, analysis)
        store_text = render_store(recording.id, result.scenarios_by_ego,
                                  analysis.fingerprint(), version)
        n_scenarios = sum(len(v) for v in result.scenarios_by_ego.values())
        summary = (f"recording {recording.id}: {result.n_tracks} tracks, "
                   f"{result.n_ego_views} ego views "
                   f"({result.n_skipped_tracks} skipped), "
                   f"{n_scenarios} scenarios")
        for warning in ingest_report.warnings:
            summary += f"\n  warning: {warning}"
        return recording.id, store_text, summary, None
    except (IngestError, ValueError) as exc:
        return str(paths.meta_path), None, None, f"{paths.meta_path}: {exc}"


def cmd_ingest_check(cfg: PipelineConfig) -> int:
    recordings = _collect_recordings(cfg.inputs)
    if not recordings:
        raise ConfigError("no recordings found in the configured inputs")
    failures = 0
    for paths in recordings:
        try:
            recording, report = parse_recording(paths)
        except IngestError as exc:
            print(f"FAIL {paths.meta_path}: {exc}")
            failures += 1
            continue
        violations = validate_recording(recording)
        status = "FAIL" if violations else "ok"
        if violations:
            failures += 1
        print(f"{status} recording {report.recording_id}: {report.n_tracks} tracks, "
              f"{report.n_frames} frames, {len(report.warnings)} warnings")
        for warning in report.warnings:
            print(f"  warning: {warning}")
        for violation in violations:
            print(f"  violation: {violation}")
    return EXIT_DATA if failures else EXIT_OK


def cmd_mine(cfg: PipelineConfig) -> int:
    recordings = _collect_recordings(cfg.inputs)
    if not recordings:
        raise ConfigError("no recordings found in the configured inputs")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(paths, cfg.analysis, __version__) for paths in recordings]
    if cfg.workers > 1:
        import multiprocessing

        with multiprocessing.Pool(cfg.workers) as pool:
            results = pool.map(_mine_worker, jobs)
    else:
        results = [_mine_worker(job) for job in jobs]

    errors = []
    for rec_id, store_text, summary, error in results:
        if error is not None:
            errors.append(error)
            print(f"error: {error}", file=sys.stderr)
            continue
        out_path = cfg.output_dir / f"{rec_id}{STORE_SUFFIX}"
        out_path.write_text(store_text)
        print(summary)
    print(f"mined {len(results) - len(errors)}/{len(results)} recordings "
          f"into {cfg.output_dir} (fingerprint {cfg.analysis.fingerprint()})")
    return EXIT_DATA if errors else EXIT_OK


def _load_store_results(cfg: PipelineConfig, store_dir: Path) -> list[RecordingResult]:
    store_paths = sorted(store_dir.glob(f"*{STORE_SUFFIX}"))
    if not store_paths:
        raise StoreError(f"no scenario stores under {store_dir}")
    stores = {}
    fingerprint = cfg.analysis.fingerprint()
    for path in store_paths:
        data = read_store(path)
        if data.fingerprint != fingerprint:
            raise StoreError(
                f"{path}: store fingerprint {data.fingerprint} does not match "
                f"configured analysis fingerprint {fingerprint}")
        stores[data.recording_id] = data

    recordings = _collect_recordings(cfg.inputs)
    results = []
    for paths in recordings:
        recording, _ = parse_recording(paths)
        if recording.id not in stores:
            raise StoreError(f"recording {recording.id} has no scenario store")
        data = stores.pop(recording.id)
        result = process_views_only(recording, cfg)
        view_ids = {v.ego_id for v in result.ego_views}
        store_ids = set(data.scenarios_by_ego)
        if not store_ids <= view_ids:
            raise StoreError(
                f"recording {recording.id}: store egos {sorted(store_ids - view_ids)} "
                f"not among regenerated ego views")
        result.scenarios_by_ego = {
            ego_id: data.scenarios_by_ego.get(ego_id, [])
            for ego_id in sorted(view_ids)}
        results.append(result)
    if stores:
        raise StoreError(f"stores without matching recordings: {sorted(stores)}")
    return results


def process_views_only(recording, cfg: PipelineConfig) -> RecordingResult:
    from .egoview import generate_ego_views

    views = generate_ego_views(recording, cfg.analysis.ego)
    return RecordingResult(recording_id=recording.id,
                           n_tracks=len(recording.tracks), ego_views=views)


def build_coverage_report(results: list[RecordingResult], cfg: PipelineConfig,
                          metrics: tuple[str, ...] = ("tag", "time", "actor",
                                                      "actor-over-time")) -> CoverageReport:
    """Evaluate the requested metrics over mined, tagged scenarios."""
    timings: dict[str, float] = {}
    all_scenarios = [sc for r in results for sc in r.all_scenarios()]
    category_counts: dict[str, int] = {}
    for sc in all_scenarios:
        category_counts[sc.category.symbol] = category_counts.get(sc.category.symbol, 0) + 1
    category_counts = dict(sorted(category_counts.items(),
                                  key=lambda kv: CATEGORY_ORDER.get(kv[0], 99)))

    configured_tags = tuple(t for t in Tag if t in cfg.analysis.tagging.tags)
    matrix = build_tag_count_matrix(all_scenarios, tags=configured_tags,
                                    categories=tuple(ScenarioCategory))
    report = CoverageReport(
        tool_version=__version__, fingerprint=cfg.analysis.fingerprint(),
        config=cfg.analysis.describe(),
        dataset={
            "n_recordings": len(results),
            "n_tracks": sum(r.n_tracks for r in results),
            "n_ego_views": sum(r.n_ego_views for r in results),
            "total_frames": sum(r.total_frames for r in results),
        },
        category_counts=category_counts,
        kappa=kappa_to_nested(matrix))

    if "tag" in metrics:
        t0 = time.perf_counter()
        groups = [("all", configured_tags)]
        for name, members in TAG_GROUPS.items():
            subset = tuple(t for t in members if t in cfg.analysis.tagging.tags)
            if subset and name != "all":
                groups.append((name, subset))
        for label, subset in groups:
            curve = sweep(lambda n, s=subset: tag_coverage(matrix, s, None, n),
                          cfg.metrics.tag_n_grid, label=label)
            report.curves.append(CurveRecord(
                metric="tag", label=label, param_name="n",
                params=list(curve.params), values=list(curve.values)))
        timings["tag"] = time.perf_counter() - t0

    if "time" in metrics:
        t0 = time.perf_counter()
        per_ego = [pair for r in results for pair in r.per_ego_intervals()]
        curve = sweep(lambda n: time_coverage(per_ego, n), cfg.metrics.time_n_grid)
        report.curves.append(CurveRecord(
            metric="time", label="", param_name="n",
            params=list(curve.params), values=list(curve.values)))
        timings["time"] = time.perf_counter() - t0

    if "actor" in metrics or "actor-over-time" in metrics:
        t0 = time.perf_counter()
        views = [v for r in results for v in r.ego_views]
        scenarios_by_ego = {
            (r.recording_id, ego_id): scs
            for r in results for ego_id, scs in r.scenarios_by_ego.items()}
        membership = cfg.metrics.actor_membership
        for label, boxes in cfg.metrics.boxes():
            # Grid points whose box selects no actor have no defined value
            # and are omitted from the curve.
            populated = [(box, sel) for box in boxes
                         if (sel := select_actors(views, box)).time_sets]
            if not populated:
                continue
            fronts = [box.long_front for box, _ in populated]
            if "actor" in metrics:
                values = [actor_coverage(sel, scenarios_by_ego, membership)
                          for _, sel in populated]
                report.curves.append(CurveRecord(
                    metric="actor", label=label, param_name="long_front",
                    params=fronts, values=values))
            if "actor-over-time" in metrics:
                values = [actor_over_time_coverage(sel, scenarios_by_ego, membership)
                          for _, sel in populated]
                report.curves.append(CurveRecord(
                    metric="actor-over-time", label=label, param_name="long_front",
                    params=fronts, values=values))
        timings["actor"] = time.perf_counter() - t0

    report.timings = timings
    return report


def _kappa_only_report(cfg: PipelineConfig, kappa_file: Path,
                       metrics: tuple[str, ...]) -> CoverageReport:
    matrix = read_kappa_csv(kappa_file)
    report = CoverageReport(
        tool_version=__version__, fingerprint=cfg.analysis.fingerprint(),
        config=cfg.analysis.describe(),
        dataset={"kappa_file": str(kappa_file)},
        category_counts={}, kappa=kappa_to_nested(matrix))
    if "tag" not in metrics:
        raise ConfigError("only the tag metric can run from a kappa file")
    selected = tuple(t for t in matrix.tags if t in cfg.analysis.tagging.tags)
    if not selected:
        raise ConfigError("configured tag subset does not intersect the kappa matrix")
    groups = [("all", selected)]
    for name, members in TAG_GROUPS.items():
        subset = tuple(t for t in members if t in selected)
        if subset and name != "all":
            groups.append((name, subset))
    for label, subset in groups:
        curve = sweep(lambda n, s=subset: tag_coverage(matrix, s, None, n),
                      cfg.metrics.tag_n_grid, label=label)
        report.curves.append(CurveRecord(
            metric="tag", label=label, param_name="n",
            params=list(curve.params), values=list(curve.values)))
    return report


def cmd_coverage(cfg: PipelineConfig, store_dir: Path | None, out_path: Path | None,
                 kappa_file: Path | None, record_timings: bool,
                 metrics: tuple[str, ...]) -> int:
    t0 = time.perf_counter()
    if kappa_file is not None:
        report = _kappa_only_report(cfg, kappa_file, metrics)
    else:
        results = _load_store_results(cfg, store_dir or cfg.output_dir)
        report = build_coverage_report(results, cfg, metrics)
    report.timings["total"] = time.perf_counter() - t0

    out_path = out_path or (cfg.output_dir / "report.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report.to_json(record_timings=record_timings))
    print(f"wrote {out_path}")
    print(f"timings: " + ", ".join(f"{k}={v:.3f}s" for k, v in report.timings.items()),
          file=sys.stderr)
    return EXIT_OK


def cmd_report(report_path: Path, out_dir: Path | None) -> int:
    report = read_report(report_path)
    print(text_summary(report), end="")
    if out_dir is not None:
        written = write_curve_csvs(report, out_dir)
        print(f"wrote {len(written)} curve files to {out_dir}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenariocov",
        description="Mine driving scenarios from highway recordings and "
                    "quantify tag/time/actor coverage.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="INI config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--inputs", nargs="+", default=None,
                       help="recording directories or *_recordingMeta.csv files")

    p = sub.add_parser("ingest-check", help="parse and validate recordings")
    common(p)

    p = sub.add_parser("mine", help="mine scenarios into a store directory")
    common(p)
    p.add_argument("--out", type=Path, default=None, help="store output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--catch-all", action="store_true",
                   help="also emit the no-leading-vehicle pseudo-category")

    p = sub.add_parser("coverage", help="compute coverage metrics from a store")
    common(p)
    p.add_argument("--store", type=Path, default=None, help="scenario store directory")
    p.add_argument("--out", type=Path, default=None, help="report JSON path")
    p.add_argument("--kappa-file", type=Path, default=None,
                   help="compute tag coverage directly from a kappa matrix CSV")
    p.add_argument("--record-timings", action="store_true",
                   help="embed wall-clock timings in the report JSON")

    p = sub.add_parser("sweep", help="sweep one metric over its parameter grid")
    common(p)
    p.add_argument("--metric", required=True,
                   choices=["tag", "time", "actor", "actor-over-time"])
    p.add_argument("--store", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--kappa-file", type=Path, default=None)
    p.add_argument("--n-grid", default=None, help="comma-separated n values")
    p.add_argument("--front-grid", default=None,
                   help="comma-separated box front extents (m)")
    p.add_argument("--lat-grid", default=None,
                   help="comma-separated box lateral half-widths (m)")
    p.add_argument("--tags", default=None, help="tag subset (symbols or groups)")

    p = sub.add_parser("report", help="render a report to text and curve CSVs")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, default=None)
    return parser


def _config_from_args(args) -> PipelineConfig:
    overrides = list(args.overrides)
    if args.inputs:
        overrides.append("run.inputs=" + ",".join(args.inputs))
    if getattr(args, "out", None) is not None and args.command == "mine":
        overrides.append(f"run.output_dir={args.out}")
    if getattr(args, "workers", None) is not None:
        overrides.append(f"run.workers={args.workers}")
    if getattr(args, "catch_all", False):
        overrides.append("mining.catch_all=true")
    if getattr(args, "n_grid", None):
        key = "tag_n_grid" if args.metric == "tag" else "time_n_grid"
        overrides.append(f"coverage.{key}={args.n_grid}")
    if getattr(args, "front_grid", None):
        overrides.append(f"coverage.box_front_grid={args.front_grid}")
    if getattr(args, "lat_grid", None):
        overrides.append(f"coverage.box_lat_grid={args.lat_grid}")
    if getattr(args, "tags", None):
        overrides.append(f"tagging.tags={args.tags}")
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.report, args.out_dir)
        cfg = _config_from_args(args)
        if args.command == "ingest-check":
            return cmd_ingest_check(cfg)
        if args.command == "mine":
            return cmd_mine(cfg)
        if args.command == "coverage":
            return cmd_coverage(cfg, args.store, args.out, args.kappa_file,
                                args.record_timings, ("tag", "time", "actor",
                                                      "actor-over-time"))
        if args.command == "sweep":
            return cmd_coverage(cfg, args.store, args.out, args.kappa_file,
                                False, (args.metric,))
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, StoreError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
