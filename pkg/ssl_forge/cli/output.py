"""
Rendering of result documents as JSON, CSV or an aligned text table.
"""
import csv
import io
import json
import sys
from typing import Any, Dict, List, Optional

from ssl_forge.core.estimator import json_safe


def to_json(document: Any) -> str:
    """Stable JSON: sorted keys, two-space indent, non-finite floats as null."""
    return json.dumps(json_safe(document), indent=2, sort_keys=True) + "\n"


def _flatten(prefix: str, value: Any, out: Dict[str, Any]) -> None:
    if isinstance(value, dict):
        for key, inner in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), inner, out)
    elif isinstance(value, (list, tuple)):
        out[prefix] = json.dumps(json_safe(value))
    else:
        out[prefix] = json_safe(value)


def document_rows(document: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Bench documents carry `rows`; any other document becomes one flattened row."""
    if "rows" in document:
        rows = []
        for row in document["rows"]:
            flat: Dict[str, Any] = {}
            _flatten("", row, flat)
            rows.append(flat)
        return rows
    flat = {}
    _flatten("", {k: v for k, v in document.items() if k != "config"}, flat)
    return [flat]


def _columns(rows: List[Dict[str, Any]]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    return columns


def to_csv(rows: List[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=_columns(rows), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: "" if v is None else v for k, v in row.items()})
    return buffer.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def to_table(rows: List[Dict[str, Any]]) -> str:
    columns = _columns(rows)
    cells = [[_cell(row.get(c)) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)),
             "  ".join("-" * w for w in widths)]
    lines.extend("  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells)
    return "\n".join(lines) + "\n"


def render(document: Dict[str, Any], fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(document)
    rows = document_rows(document)
    return to_csv(rows) if fmt == "csv" else to_table(rows)


def emit(text: str, path: Optional[str] = None) -> None:
    """Write to `path`, or stdout when no path is given."""
    if path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
