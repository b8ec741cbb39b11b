import json
import math
import os
from typing import Dict, Iterable, Sequence

import numpy as np
import pandas as pd

from model import COMPONENT_LABELS


def format_number(value: float) -> str:
    """17 significant digits so every float round-trips."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


CSV_FLOAT_FORMAT = "%.17g"


def _frame(columns: Sequence[str], rows: Iterable[Sequence[float]]) -> pd.DataFrame:
    return pd.DataFrame([list(r) for r in rows], columns=list(columns), dtype=float)


def _comment_header(metadata: Sequence[str]) -> str:
    return "".join(f"# {line}\n" for line in metadata)


def _to_csv(frame: pd.DataFrame, buf=None):
    return frame.to_csv(buf, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="nan", lineterminator="\n")


def write_frame(path: str, metadata: Sequence[str], frame: pd.DataFrame) -> str:
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        f.write(_comment_header(metadata))
        _to_csv(frame, f)
    return path


def render_csv(metadata: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    return _comment_header(metadata) + _to_csv(_frame(columns, rows))


def write_csv(path: str, metadata: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    return write_frame(path, metadata, _frame(columns, rows))


def read_csv(path: str):
    """Inverse of write_csv: (metadata lines, column names, float rows)."""
    with open(path, "r") as f:
        metadata = [line[1:].strip() for line in f if line.startswith("#")]
    frame = pd.read_csv(path, comment="#", dtype=float)
    return metadata, list(frame.columns), frame.to_numpy().tolist()


def format_key_values(values: Dict[str, object]) -> str:
    lines = []
    for key, value in values.items():
        if isinstance(value, complex):
            lines.append(f"{key} = {format_number(value.real)} {'+' if value.imag >= 0 else '-'} {format_number(abs(value.imag))}i")
        elif isinstance(value, (float, np.floating)):
            lines.append(f"{key} = {format_number(value)}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def to_json(payload: Dict) -> str:
    return json.dumps(_jsonable(payload), ensure_ascii=True, indent=2)


def write_trajectory_csv(path: str, times: np.ndarray, states: np.ndarray) -> str:
    states = np.asarray(states, dtype=complex)
    frame = pd.DataFrame({"t": np.asarray(times, dtype=float)})
    for i, label in enumerate(COMPONENT_LABELS):
        frame[f"re_{label}"] = states[:, i].real
        frame[f"im_{label}"] = states[:, i].imag
    return write_frame(path, ["trajectory of the transformed density vector"], frame)
