"""Field persistence and deterministic report emission.

Field files carry one JSON header line followed by raw little-endian
float64 payload in x-fastest, component-slowest order, so any language
can parse them for oracle cross-checks.  JSON reports are written with
sorted keys and no timestamps: identical configuration and seed produce
byte-identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .domain import RANK_COMPONENTS
from .errors import FieldIoError, HeaderMismatch

MAGIC = "bihfield"


@dataclass
class Field:
    """Grid-sampled field of one rank.

    ``values`` is the flat component-major DOF vector; because components
    live on their own staggered sub-lattices, ``count`` records the total
    number of stored values.
    """

    rank: str
    values: np.ndarray  # 1D float64, component-major DOF order
    dims: tuple[int, int, int]
    h: float

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype="<f8")
        if self.values.ndim != 1:
            raise ValueError("field values must be a flat vector")

    @property
    def count(self) -> int:
        return self.values.size


def save_field(path: str | Path, f: Field) -> None:
    header = {
        "magic": MAGIC,
        "rank": f.rank,
        "dims": list(f.dims),
        "h": f.h,
        "count": f.count,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        fh.write(f.values.astype("<f8").tobytes())


def load_field(
    path: str | Path,
    expected_rank: str | None = None,
    expected_dims: tuple[int, int, int] | None = None,
) -> Field:
    try:
        with open(path, "rb") as fh:
            header_line = fh.readline()
            payload = fh.read()
    except OSError as exc:
        raise FieldIoError(str(exc)) from exc
    try:
        header = json.loads(header_line.decode("ascii"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise FieldIoError(f"{path}: bad header") from exc
    if header.get("magic") != MAGIC:
        raise FieldIoError(f"{path}: missing magic {MAGIC!r}")
    rank = header["rank"]
    if rank not in RANK_COMPONENTS:
        raise HeaderMismatch(f"{path}: unknown rank {rank!r}")
    if expected_rank is not None and rank != expected_rank:
        raise HeaderMismatch(f"{path}: rank {rank!r}, expected {expected_rank!r}")
    dims = tuple(header["dims"])
    if expected_dims is not None and dims != tuple(expected_dims):
        raise HeaderMismatch(f"{path}: dims {dims}, expected {tuple(expected_dims)}")
    n_expected = int(header["count"])
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != n_expected:
        raise FieldIoError(
            f"{path}: payload holds {values.size} values, header promises {n_expected}"
        )
    return Field(rank, values.copy(), dims, float(header["h"]))


def _sanitize(obj):
    """Make report content JSON-serializable and deterministic."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def render_report(report: dict) -> str:
    """Deterministic JSON text for a report (sorted keys, no timestamps)."""
    return json.dumps(_sanitize(report), sort_keys=True, indent=2) + "\n"


def write_report(path_or_none: str | Path | None, report: dict, stream: IO[str]) -> None:
    text = render_report(report)
    if path_or_none is not None:
        Path(path_or_none).write_text(text)
    stream.write(text)


def write_spectrum_csv(path: str | Path, eigenvalues: Iterable[float]) -> None:
    lines = ["index,eigenvalue"]
    lines += [f"{i},{v!r}" for i, v in enumerate(eigenvalues)]
    Path(path).write_text("\n".join(lines) + "\n")
