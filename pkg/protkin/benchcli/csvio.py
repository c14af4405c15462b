"""CSV files written by bench and precision: a versioned comment line, then a header row."""

import io
from typing import Sequence

import pandas as pd
import structlog
from pydantic import BaseModel

from protkin.errors import InputError
from protkin.structio.text import read_text

log = structlog.get_logger(__name__)

BENCH_HEADER = "# protkin bench v1"
PRECISION_HEADER = "# protkin precision v1"
BENCH_COLUMNS = [
    "op_name",
    "sequence_length",
    "batch_size",
    "pass",
    "replicate",
    "wall_time",
    "threads",
]


def to_frame(rows: Sequence[BaseModel]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(mode="json", by_alias=True) for r in rows])


def format_csv(rows: Sequence[BaseModel], header: str, columns: list[str]) -> str:
    frame = to_frame(rows) if rows else pd.DataFrame(columns=columns)
    return header + "\n" + frame[columns].to_csv(index=False, lineterminator="\n")


def write_csv(path: str, rows: Sequence[BaseModel], header: str, columns: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_csv(rows, header, columns))
    log.info("wrote csv", path=path, rows=len(rows))


def read_bench_csv(path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(io.StringIO(read_text(path)), comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"{path}: {e}") from None
    missing = [c for c in BENCH_COLUMNS if c not in frame.columns and c != "threads"]
    if missing:
        raise InputError(f"{path}: missing bench columns {missing}")
    return frame
