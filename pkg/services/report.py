"""
Deterministic result files.

Rows are emitted in sweep order and, within a sweep point, in the canonical
antichain order; floats are written with `repr` so the output is a pure
function of the inputs.
"""

import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Union

import pandas as pd

from schemas.results import FrontRow, SweepRow
from services.posets import Antichain
from utils.logger import get_logger

logger = get_logger(__name__)


def front_rows(fun_names: Sequence[str], res_names: Sequence[str], fun: Sequence,
               answer: Antichain) -> List[FrontRow]:
    """Rows for one minimal-resource answer; an empty answer yields one row with blank resources."""
    fun_map = dict(zip(fun_names, (float(v) for v in fun)))
    if answer.is_empty:
        return [FrontRow(fun=fun_map, res={n: None for n in res_names})]
    rows = []
    for point, witness in answer.items():
        rows.append(FrontRow(
            fun=fun_map,
            res=dict(zip(res_names, (float(v) for v in point))),
            witness={node: str(impl) for node, impl in (witness or ())},
        ))
    return rows


def dual_rows(fun_names: Sequence[str], res_names: Sequence[str], budget: Sequence,
              answer: Antichain) -> List[FrontRow]:
    """Rows for one maximal-functionality answer under a resource budget."""
    res_map = dict(zip(res_names, (float(v) for v in budget)))
    if answer.is_empty:
        return [FrontRow(fun={}, res=res_map)]
    return [
        FrontRow(
            fun=dict(zip(fun_names, (float(v) for v in point))),
            res=res_map,
            witness={node: str(impl) for node, impl in (witness or ())},
        )
        for point, witness in answer.items()
    ]


def front_frame(rows: Sequence[FrontRow], fun_names: Sequence[str], res_names: Sequence[str],
                witness_names: Sequence[str]) -> pd.DataFrame:
    columns = ([f"fun_{n}" for n in fun_names] + [f"res_{n}" for n in res_names]
               + [f"witness_{n}" for n in witness_names])
    records = [r.flat(list(fun_names), list(res_names), list(witness_names)) for r in rows]
    return pd.DataFrame.from_records(records, columns=columns)


def sweep_frame(rows: Sequence[SweepRow], closed_form: bool) -> pd.DataFrame:
    columns = list(SweepRow.model_fields)
    if not closed_form:
        columns = [c for c in columns if not c.startswith("closed_form")]
    return pd.DataFrame.from_records([r.model_dump(include=set(columns)) for r in rows], columns=columns)


def _format(value) -> str:
    if value is None or (isinstance(value, float) and value != value):
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def render(frame: pd.DataFrame, fmt: str) -> str:
    """CSV with `.` decimals and shortest round-trip floats, or JSON records mirroring it."""
    if fmt == "json":
        records = frame.astype(object).where(frame.notna(), None)
        return records.to_json(orient="records", indent=2, double_precision=15) + "\n"
    return frame.map(_format).to_csv(index=False, lineterminator="\n")


def write_output(text: str, out: Optional[Union[str, Path]], stream: TextIO = None) -> None:
    """Write to `out`, or to standard output when `out` is None or '-'."""
    if out is None or str(out) == "-":
        (stream or sys.stdout).write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", path)
