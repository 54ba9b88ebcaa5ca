"""CSV/JSON formats and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .sigcore import PathError, SampledPath
from .trees import parse, parse_tree


class CsvError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def fmt(x: float) -> str:
    """Round-trip exact decimal (17 significant digits)."""
    return format(float(x), ".17g")


def _read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [(reader.line_num, r) for r in reader if r]
    if not rows:
        raise CsvError(path, 1, "empty file")
    return rows[0][1], rows[1:]


def _numeric(path, rows, width: int) -> np.ndarray:
    out = np.empty((len(rows), width))
    for i, (line, row) in enumerate(rows):
        if len(row) != width:
            raise CsvError(path, line, f"expected {width} cells, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise CsvError(path, line, f"non-numeric cell {cell!r}") from None
            if not np.isfinite(out[i, j]):
                raise CsvError(path, line, f"non-finite cell {cell!r}")
    return out


def _build_path(path, data: np.ndarray, rows, labels) -> SampledPath:
    if data.shape[0] < 1:
        raise CsvError(path, 2, "no data rows")
    dt = np.diff(data[:, 0])
    if np.any(dt <= 0):
        k = int(np.argmax(dt <= 0)) + 1
        raise CsvError(path, rows[k][0], "time column must be strictly increasing")
    try:
        return SampledPath(data[:, 0], data[:, 1:], labels=labels)
    except PathError as exc:
        raise CsvError(path, 1, str(exc)) from None


def read_path_csv(path) -> SampledPath:
    """Read ``t,x1,...,xd``; channel ``xi`` gets label ``i``."""
    header, rows = _read_rows(path)
    d = len(header) - 1
    expected = ["t"] + [f"x{i}" for i in range(1, d + 1)]
    if d < 1 or [h.strip() for h in header] != expected:
        raise CsvError(path, 1, f"header must be {','.join(expected) if d >= 1 else 't,x1,...'}, "
                                f"got {','.join(header)}")
    data = _numeric(path, rows, d + 1)
    return _build_path(path, data, rows, tuple(range(1, d + 1)))


def read_extended_csv(path) -> SampledPath:
    """Read an extended path whose header names channels by serialized trees."""
    header, rows = _read_rows(path)
    if not header or header[0] != "t" or len(header) < 2:
        raise CsvError(path, 1, "header must start with t followed by tree names")
    try:
        labels = tuple(parse_tree(h) for h in header[1:])
    except ValueError as exc:
        raise CsvError(path, 1, str(exc)) from None
    data = _numeric(path, rows, len(header))
    return _build_path(path, data, rows, labels)


def write_csv(path, header: Sequence[str], columns: Iterable[np.ndarray]) -> None:
    cols = [np.asarray(c, dtype=float).reshape(-1) for c in columns]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(x) for x in row) + "\n")


def write_path_csv(path, p: SampledPath, names: Sequence[str] | None = None) -> None:
    if names is None:
        names = [f"x{i}" for i in range(1, p.dim + 1)]
    write_csv(path, ["t", *names], [p.times, *p.values.T])


def write_matrix_csv(path, mat: np.ndarray, names: Sequence[str] | None = None) -> None:
    mat = np.atleast_2d(mat)
    with open(path, "w", newline="") as fh:
        if names is not None:
            fh.write(",".join(["", *names]) + "\n")
        for i, row in enumerate(mat):
            cells = [fmt(x) for x in row]
            if names is not None:
                cells = [names[i], *cells]
            fh.write(",".join(cells) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r]
    if not rows:
        raise CsvError(path, 1, "empty matrix file")
    width = len(rows[0][1])
    return _numeric(path, rows, width)


def graded_key(s: str) -> tuple:
    """Sort key by (degree, serialization) for word or forest strings."""
    if s == "":
        return (0, "")
    obj = parse(s)
    deg = getattr(obj, "degree", None)
    return (obj.size if deg is None else deg, s)


def graded_dict(entries: Mapping[str, float]) -> dict:
    return {k: entries[k] for k in sorted(entries, key=graded_key)}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_json(path, obj, sort_keys: bool = False) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=sort_keys) + "\n")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "flags", "seed", "version", "inputs", "outputs"],
    "properties": {
        "command": {"type": "string"},
        "flags": {"type": "object"},
        "seed": {"type": ["integer", "null"]},
        "version": {"type": "string"},
        "inputs": {"type": "object", "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"}},
        "outputs": {"type": "object", "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"}},
    },
    "additionalProperties": False,
}


def build_manifest(command: str, flags: Mapping, seed, inputs: Sequence, outputs: Sequence) -> dict:
    return {
        "command": command,
        "flags": {k: flags[k] for k in sorted(flags)},
        "seed": seed,
        "version": __version__,
        "inputs": {str(p): sha256(p) for p in inputs},
        "outputs": {str(p): sha256(p) for p in outputs},
    }


def write_manifest(target, manifest: dict) -> Path:
    target = Path(target)
    write_json(target, manifest, sort_keys=True)
    return target


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")
