"""
Grid functions in and out of files.

CSV: mandatory header `n,value`, one integer offset from a per row.
JSON: {"a": ..., "lo": ..., "hi": ..., "values": [...]}.
"""
import csv
import io
import json
import math
import os
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ValidationError, model_validator

from src.core.errors import GapError, IngestError
from src.core.grid import Grid, GridFunction
from src.core.logging import get_logger

log = get_logger(__name__)

Source = Union[str, Path]


class GridFunctionDocument(BaseModel):
    a: float = 0.0
    lo: int
    hi: int
    values: List[float]

    @model_validator(mode="after")
    def _check_size(self) -> "GridFunctionDocument":
        if self.hi < self.lo:
            raise ValueError(f"hi={self.hi} is below lo={self.lo}")
        if len(self.values) != self.hi - self.lo + 1:
            raise ValueError(f"{len(self.values)} values for offsets {self.lo}..{self.hi}")
        return self


def _read_source(source: Source) -> tuple:
    """(text, suffix) for a path or inline text."""
    if isinstance(source, Path) or ("\n" not in source and os.path.isfile(source)):
        path = Path(source)
        return path.read_text(encoding="utf-8"), path.suffix.lower().lstrip(".")
    return source, None


def _parse_csv(text: str, a: float) -> GridFunction:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise IngestError("empty input")
    header = [c.strip() for c in rows[0]]
    if header != ["n", "value"]:
        raise IngestError(f"header must be 'n,value', got {','.join(rows[0])!r}", row=1)

    values = {}
    for row_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise IngestError(f"expected 2 fields, got {len(row)}", row=row_no)
        try:
            n = int(row[0].strip())
        except ValueError:
            raise IngestError(f"offset {row[0]!r} is not an integer", row=row_no)
        try:
            v = float(row[1].strip())
        except ValueError:
            raise IngestError(f"value {row[1]!r} is not a number", row=row_no)
        if not math.isfinite(v):
            raise IngestError(f"value {row[1]!r} is not finite", row=row_no)
        if n in values:
            raise IngestError(f"duplicate offset {n}", row=row_no)
        values[n] = v

    if not values:
        raise IngestError("no data rows")
    lo, hi = min(values), max(values)
    missing = [n for n in range(lo, hi + 1) if n not in values]
    if missing:
        raise GapError(missing)
    return GridFunction(Grid(a, lo, hi), [values[n] for n in range(lo, hi + 1)])


def _parse_json(text: str) -> GridFunction:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise IngestError(f"invalid JSON: {e.msg}", row=e.lineno) from e
    try:
        doc = GridFunctionDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "document"
        raise IngestError(f"{where}: {first['msg']}") from e
    return GridFunction(Grid(doc.a, doc.lo, doc.hi), doc.values)


def ingest_grid_function(source: Source, a: float = 0.0, fmt: Optional[str] = None) -> GridFunction:
    """
    Parse a grid function from a file path or inline text. CSV offsets are
    relative to `a`; JSON carries its own base.
    """
    text, suffix = _read_source(source)
    fmt = (fmt or suffix or ("json" if text.lstrip().startswith("{") else "csv")).lower()
    if fmt == "json":
        f = _parse_json(text)
    elif fmt == "csv":
        f = _parse_csv(text, a)
    else:
        raise IngestError(f"unknown format {fmt!r}")
    log.debug("ingested %d-point grid function on [%d, %d]", len(f), f.lo, f.hi)
    return f


def serialize_grid_function(f: GridFunction, fmt: str = "json") -> str:
    if fmt == "json":
        doc = {"a": f.grid.base, "lo": f.lo, "hi": f.hi, "values": f.values.tolist()}
        return json.dumps(doc)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "value"])
        for n, v in zip(f.grid.offsets, f.values):
            writer.writerow([n, format(v, ".17g")])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")
