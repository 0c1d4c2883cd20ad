"""Scenario store and coverage report serialization.

The scenario store is newline-delimited JSON, one file per recording: a
header record carrying the analysis fingerprint followed by one record per
scenario. Reports are a single JSON document; per-curve CSV files and a
text summary are rendered from it on demand. All serialization is
byte-deterministic for fixed inputs and configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import (CATEGORY_ORDER, CategoryLike, Scenario, Tag,
                    TagCountMatrix, category_from_symbol)

STORE_FORMAT = "scenariocov-store-v1"
STORE_SUFFIX = ".scenarios.jsonl"


class StoreError(RuntimeError):
    """Malformed or incompatible scenario store / report file."""


def _scenario_record(scenario: Scenario) -> dict:
    return {
        "kind": "scenario",
        "category": scenario.category.symbol,
        "ego": scenario.ego_id,
        "start": scenario.start_frame,
        "end": scenario.end_frame,
        "main": sorted(scenario.main_actor_ids),
        "actors": sorted(scenario.actor_ids),
        "tags": sorted(t.symbol for t in scenario.tags),
    }


def _scenario_from_record(record: dict) -> Scenario:
    return Scenario(
        category=category_from_symbol(record["category"]),
        ego_id=int(record["ego"]),
        main_actor_ids=frozenset(record["main"]),
        actor_ids=frozenset(record["actors"]),
        start_frame=int(record["start"]),
        end_frame=int(record["end"]),
        tags=frozenset(Tag(t) for t in record["tags"]))


def render_store(recording_id: str, scenarios_by_ego: dict[int, list[Scenario]],
                 fingerprint: str, tool_version: str) -> str:
    """The store file content for one recording (deterministic)."""
    header = {
        "kind": "header", "format": STORE_FORMAT, "recording_id": recording_id,
        "fingerprint": fingerprint, "tool_version": tool_version,
        "n_ego_views": len(scenarios_by_ego),
    }
    lines = [json.dumps(header, sort_keys=True)]
    for ego_id in sorted(scenarios_by_ego):
        for scenario in sorted(scenarios_by_ego[ego_id], key=Scenario.sort_key):
            lines.append(json.dumps(_scenario_record(scenario), sort_keys=True))
    return "\n".join(lines) + "\n"


@dataclass
class StoreData:
    recording_id: str
    fingerprint: str
    tool_version: str
    scenarios_by_ego: dict[int, list[Scenario]]


def read_store(path: Path | str) -> StoreData:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise StoreError(f"cannot read store {path}: {exc}") from exc
    if not lines:
        raise StoreError(f"{path}: empty store file")
    try:
        header = json.loads(lines[0])
        if header.get("kind") != "header" or header.get("format") != STORE_FORMAT:
            raise StoreError(f"{path}: not a {STORE_FORMAT} file")
        scenarios_by_ego: dict[int, list[Scenario]] = {}
        for line in lines[1:]:
            record = json.loads(line)
            if record.get("kind") != "scenario":
                raise StoreError(f"{path}: unexpected record kind {record.get('kind')}")
            scenario = _scenario_from_record(record)
            scenarios_by_ego.setdefault(scenario.ego_id, []).append(scenario)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, StoreError):
            raise
        raise StoreError(f"{path}: malformed store: {exc}") from exc
    return StoreData(recording_id=str(header["recording_id"]),
                     fingerprint=str(header["fingerprint"]),
                     tool_version=str(header.get("tool_version", "")),
                     scenarios_by_ego=scenarios_by_ego)


# --- kappa matrix CSV ---------------------------------------------------------

def write_kappa_csv(matrix: TagCountMatrix, path: Path | str) -> None:
    lines = ["tag," + ",".join(c.symbol for c in matrix.categories)]
    for tag in matrix.tags:
        row = [tag.symbol] + [str(matrix.get(tag, c)) for c in matrix.categories]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_kappa_csv(path: Path | str) -> TagCountMatrix:
    """Read a tag-by-category count matrix CSV.

    Header row: category symbols (the leading cell is ignored); first
    column: tag symbols; integer cells.
    """
    return parse_kappa_csv(Path(path).read_text(), source=str(path))


def reference_kappa_matrix() -> TagCountMatrix:
    """The bundled tag/category counts of the HighD reference experiment."""
    from importlib.resources import files

    text = files("scenariocov").joinpath("data/table2_kappa.csv").read_text()
    return parse_kappa_csv(text, source="data/table2_kappa.csv")


def parse_kappa_csv(text: str, source: str = "<string>") -> TagCountMatrix:
    path = source
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise StoreError(f"{path}: kappa matrix needs a header and rows")
    header = [cell.strip() for cell in lines[0].split(",")]
    try:
        categories = tuple(category_from_symbol(sym) for sym in header[1:])
        tags = []
        counts: dict[tuple[Tag, CategoryLike], int] = {}
        for line in lines[1:]:
            cells = [cell.strip() for cell in line.split(",")]
            tag = Tag(cells[0])
            tags.append(tag)
            if len(cells) != len(header):
                raise StoreError(f"{path}: ragged row for {cells[0]}")
            for category, cell in zip(categories, cells[1:]):
                counts[(tag, category)] = int(cell)
    except (ValueError, KeyError) as exc:
        raise StoreError(f"{path}: malformed kappa matrix: {exc}") from exc
    return TagCountMatrix(tuple(tags), categories, counts)


# --- coverage report ----------------------------------------------------------

@dataclass
class CurveRecord:
    metric: str
    label: str
    param_name: str
    params: list
    values: list[float]


@dataclass
class CoverageReport:
    """Everything a coverage run produces, ready for serialization.

    ``timings`` is kept for operator feedback but excluded from the JSON
    document by default so reruns stay byte-identical.
    """

    tool_version: str
    fingerprint: str
    config: dict
    dataset: dict
    category_counts: dict[str, int]
    kappa: dict[str, dict[str, int]] | None
    curves: list[CurveRecord] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def to_json(self, record_timings: bool = False) -> str:
        doc = {
            "tool_version": self.tool_version,
            "fingerprint": self.fingerprint,
            "config": self.config,
            "dataset": self.dataset,
            "category_counts": self.category_counts,
            "kappa": self.kappa,
            "curves": [vars(c) for c in self.curves],
        }
        if record_timings:
            doc["timings"] = self.timings
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def read_report(path: Path | str) -> CoverageReport:
    try:
        doc = json.loads(Path(path).read_text())
        curves = [CurveRecord(**c) for c in doc["curves"]]
        return CoverageReport(
            tool_version=doc["tool_version"], fingerprint=doc["fingerprint"],
            config=doc["config"], dataset=doc["dataset"],
            category_counts=doc["category_counts"], kappa=doc["kappa"],
            curves=curves, timings=doc.get("timings", {}))
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise StoreError(f"cannot read report {path}: {exc}") from exc


def kappa_to_nested(matrix: TagCountMatrix) -> dict[str, dict[str, int]]:
    return {tag.symbol: {c.symbol: matrix.get(tag, c) for c in matrix.categories}
            for tag in matrix.tags}


def curve_filename(curve: CurveRecord) -> str:
    slug = curve.label.replace(" ", "_").replace("=", "-").replace("/", "-")
    return f"{curve.metric}_{slug}.csv" if slug else f"{curve.metric}.csv"


def write_curve_csvs(report: CoverageReport, out_dir: Path | str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for curve in report.curves:
        path = out / curve_filename(curve)
        lines = ["param,value"]
        lines += [f"{p},{v!r}" for p, v in zip(curve.params, curve.values)]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def text_summary(report: CoverageReport) -> str:
    lines = [f"scenariocov report (tool {report.tool_version}, "
             f"fingerprint {report.fingerprint})"]
    ds = report.dataset
    lines.append(f"  recordings: {ds.get('n_recordings', '?')}, "
                 f"ego datasets: {ds.get('n_ego_views', '?')}, "
                 f"frames: {ds.get('total_frames', '?')}")
    if report.category_counts:
        ordered = sorted(report.category_counts.items(),
                         key=lambda kv: CATEGORY_ORDER.get(kv[0], 99))
        lines.append("  scenario counts: "
                     + ", ".join(f"{sym}={count}" for sym, count in ordered))
    if not report.curves:
        lines.append("  no metrics requested")
    for curve in report.curves:
        head = f"  {curve.metric}"
        if curve.label:
            head += f" [{curve.label}]"
        pairs = ", ".join(f"{curve.param_name}={p}: {v:.6g}"
                          for p, v in zip(curve.params, curve.values))
        lines.append(f"{head}: {pairs}")
    return "\n".join(lines) + "\n"
