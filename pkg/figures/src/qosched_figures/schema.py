"""CSV loading against the simulator's documented output schema."""

from __future__ import annotations

from pathlib import Path

import pandas as pd


class SchemaError(ValueError):
    """Input CSV does not match the documented schema."""


def load_csv(path) -> pd.DataFrame:
    path = Path(path)
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty CSV") from None
    if df.empty:
        raise SchemaError(f"{path}: no data rows")
    return df


def require(df: pd.DataFrame, columns, path="input") -> None:
    for col in columns:
        if col not in df.columns:
            raise SchemaError(f"{path}: missing column {col!r}")


def flow_ids(df: pd.DataFrame, prefix: str) -> list[int]:
    """Flow ids present in the frame, from columns like '<prefix>_<id>'."""
    ids = []
    for col in df.columns:
        if col.startswith(prefix + "_"):
            tail = col[len(prefix) + 1 :]
            if tail.isdigit():
                ids.append(int(tail))
    return sorted(set(ids))
