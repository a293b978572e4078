"""Graph JSON loading, result persistence and run manifests."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable

import jsonschema

from .graph import BOUNDED, HALFLINE, Edge, GraphError, MetricGraph

GRAPH_SCHEMA = {
    "type": "object",
    "required": ["vertices", "edges"],
    "properties": {
        "name": {"type": "string"},
        "vertices": {"type": "integer", "minimum": 1},
        "edges": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "from", "to", "length", "kind"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "from": {"type": "integer", "minimum": 0},
                    "to": {"type": ["integer", "null"], "minimum": 0},
                    "length": {"type": "number", "exclusiveMinimum": 0},
                    "kind": {"enum": [BOUNDED, HALFLINE]},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def _pointer(path: Iterable[Any]) -> str:
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else ""


def graph_from_dict(doc: dict) -> MetricGraph:
    """Validate ``doc`` against the graph schema and build the graph.

    All schema violations are reported together, one JSON pointer each.
    """
    validator = jsonschema.Draft202012Validator(GRAPH_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_pointer(e.absolute_path) or '/'}: {e.message}" for e in errors]
        raise GraphError("invalid graph JSON:\n  " + "\n  ".join(lines))
    nv = doc["vertices"]
    problems = []
    for k, e in enumerate(doc["edges"]):
        where = f"/edges/{k}"
        if e["id"] != k:
            problems.append(f"{where}/id: expected {k}, edge ids must be 0..E-1 in order")
        if e["from"] >= nv:
            problems.append(f"{where}/from: vertex {e['from']} out of range 0..{nv - 1}")
        if e["to"] is not None and e["to"] >= nv:
            problems.append(f"{where}/to: vertex {e['to']} out of range 0..{nv - 1}")
        if e["kind"] == HALFLINE and e["to"] is not None:
            problems.append(f"{where}/to: a half-line has no far vertex, use null")
        if not math.isfinite(e["length"]):
            problems.append(f"{where}/length: must be finite")
    if problems:
        raise GraphError("invalid graph JSON:\n  " + "\n  ".join(problems))
    edges = tuple(Edge(e["id"], e["from"], e["to"], float(e["length"]), e["kind"]) for e in doc["edges"])
    # MetricGraph checks connectivity and the remaining invariants
    return MetricGraph(nv, edges, doc.get("name", "json"))


def load_graph_json(path) -> MetricGraph:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: not valid JSON ({exc})") from None
    return graph_from_dict(doc)


def graph_to_dict(g: MetricGraph) -> dict:
    return {
        "name": g.name,
        "vertices": g.n_vertices,
        "edges": [
            {"id": e.id, "from": e.tail, "to": e.head, "length": e.length, "kind": e.kind}
            for e in g.edges
        ],
    }


def save_graph_json(g: MetricGraph, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(graph_to_dict(g), indent=2))
    return path


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    """Everything needed to rerun a command and reproduce its summary."""

    command: str
    graph: dict  # {"name": ..., "params": [...], "trunc": ...} or {"path": ...}
    p: float | None
    grid: str | None
    config: dict
    seed: int
    argv: list[str] = field(default_factory=list)
    version: str = field(default_factory=tool_version)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_json(Path(path).read_text())


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return v


def write_csv(rows: list[dict], path) -> Path:
    """Rows of flat dicts to CSV; floats written with full precision."""
    path = Path(path)
    if not rows:
        path.write_text("")
        return path
    fields = list(rows[0])
    for r in rows[1:]:
        fields += [k for k in r if k not in fields]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k, "")) for k in fields})
    return path


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _jsonable(obj.item())
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True))
    return path


def save_results(
    records: list[dict],
    manifest: RunManifest,
    out_dir,
    extra: dict[str, Any] | None = None,
) -> list[Path]:
    """Write ``summary.csv``, ``manifest.json`` and one JSON file per ``extra`` entry."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_csv(records, out / "summary.csv"), out / "manifest.json"]
    paths[1].write_text(manifest.to_json())
    for name, obj in (extra or {}).items():
        paths.append(write_json(obj, out / f"{name}.json"))
    return paths
