"""
Catalog documents.

A catalog is a CSV file with `#` header lines followed by a column header and
one row per component:

    # kind: battery
    # synthetic: true
    name,capacity,specific_energy,specific_cost,cycle_life
    LiPo,50,150,2.5,500

Every row is validated against the entry model of its kind; problems are
reported with the file, line and column they come from.
"""

import io
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from pydantic import ValidationError

from schemas.catalog import ENTRY_MODELS, Catalog, CatalogEntry
from utils.errors import CatalogError
from utils.logger import get_logger

logger = get_logger(__name__)

_TRUE = {"1", "true", "yes"}


def _header(line: str) -> Optional[tuple]:
    body = line.lstrip("#").strip()
    if ":" not in body:
        return None
    key, value = body.split(":", 1)
    return key.strip().lower(), value.strip()


def _read_frame(text: str, path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(io.StringIO(text), comment="#", dtype=str, skipinitialspace=True,
                            keep_default_na=False)
    except pd.errors.ParserError as e:
        raise CatalogError(f"malformed rows: {e}", path)
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def parse_catalog(text: str, path: str = "<catalog>") -> Catalog:
    """Parse and validate catalog text."""
    meta: Dict[str, str] = {}
    # physical line of the column header, then of each row
    lines: List[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            if not lines:
                parsed = _header(line)
                if parsed is not None:
                    meta[parsed[0]] = parsed[1]
            continue
        lines.append(lineno)

    kind = meta.get("kind")
    if kind is None:
        raise CatalogError("missing '# kind:' header", path, field="kind")
    if kind not in ENTRY_MODELS:
        raise CatalogError(f"unknown kind {kind!r}; expected one of {sorted(ENTRY_MODELS)}", path, field="kind")
    if not lines:
        raise CatalogError("no column header", path)

    frame = _read_frame(text, path)
    header_line = lines[0]
    columns = list(frame.columns)
    model = ENTRY_MODELS[kind]
    for column, info in model.model_fields.items():
        if info.is_required() and column not in columns:
            raise CatalogError(f"missing column {column!r}", path, header_line, column)
    for column in columns:
        if column not in model.model_fields:
            raise CatalogError(f"unknown column {column!r} for kind {kind}", path, header_line, column)

    entries: List[CatalogEntry] = []
    seen: Dict[str, int] = {}
    for position, (_, row) in enumerate(frame.iterrows()):
        lineno = lines[position + 1]
        if row.isna().any():
            present = int(row.notna().sum())
            raise CatalogError(f"expected {len(columns)} cells, got {present}", path, lineno)
        try:
            entry = model.model_validate(row.str.strip().to_dict())
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(p) for p in first["loc"]) or None
            raise CatalogError(first["msg"], path, lineno, field)
        if entry.name in seen:
            raise CatalogError(f"duplicate name {entry.name!r} (first on line {seen[entry.name]})",
                               path, lineno, "name")
        seen[entry.name] = lineno
        entries.append(entry)

    if not entries:
        raise CatalogError("catalog has no entries", path)
    catalog = Catalog(
        kind=kind,
        entries=entries,
        synthetic=meta.get("synthetic", "").lower() in _TRUE,
        source=meta.get("source"),
    )
    logger.debug("Loaded %d %s entries from %s", len(entries), kind, path)
    return catalog


def load_catalog(source: Union[str, Path]) -> Catalog:
    """Read and validate one catalog file."""
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CatalogError(f"cannot read catalog: {e.strerror}", str(path))
    return parse_catalog(text, str(path))
