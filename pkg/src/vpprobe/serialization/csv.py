"""Column tables written with full double precision."""

import csv
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray


def _format(value: object) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")  # type: ignore[arg-type]


def write_table(path: str | Path, columns: Mapping[str, ArrayLike], /) -> Path:
    """
    Write equal-length columns with a header row.

    Raises:
        ValueError: If the columns differ in length.
    """
    arrays = {name: np.atleast_1d(np.asarray(values)) for name, values in columns.items()}
    lengths = {a.shape[0] for a in arrays.values()}
    if len(lengths) > 1:
        raise ValueError(f"columns must have equal length, got {sorted(lengths)}")
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(arrays)
        for row in zip(*arrays.values(), strict=True):
            writer.writerow(_format(v) for v in row)
    return target


def read_table(path: str | Path, /) -> dict[str, NDArray[np.float64]]:
    """Read a numeric table back as float columns keyed by header name."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float, encoding="utf-8")
    data = np.atleast_1d(data)
    if data.dtype.names is None:
        raise ValueError(f"{path}: missing header row")
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}
