"""Reading point files and adversary traces."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError
from .metric import Dataset, MatrixMetric, Point, euclidean_dataset
from .order import AdversaryTrace

SYMMETRY_TOLERANCE = 1e-9


def _number(cell: str, line: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell.strip()!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite cell {cell.strip()!r}", line)
    return v


def parse_csv(text: str) -> Dataset:
    """One point per row, one coordinate per column. Blank lines and ``#`` comments are skipped."""
    rows = []
    width = None
    for line, cells in enumerate(csv.reader(text.splitlines()), start=1):
        if not cells or all(not c.strip() for c in cells) or cells[0].lstrip().startswith("#"):
            continue
        values = [_number(c, line) for c in cells]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"row has {len(values)} columns, expected {width}", line)
        rows.append(values)
    if not rows:
        raise ParseError("no points in input", 1)
    return euclidean_dataset(np.asarray(rows))


def parse_matrix(text: str) -> Dataset:
    """First line ``n``, then ``n`` rows of ``n`` whitespace- or comma-separated reals."""
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty matrix file", 1)
    head_line, head = lines[0]
    try:
        n = int(head.strip())
    except ValueError:
        raise ParseError(f"expected the matrix size, got {head.strip()!r}", head_line) from None
    if n < 1:
        raise ParseError("matrix size must be >= 1", head_line)
    body = lines[1:]
    if len(body) != n:
        raise ParseError(f"expected {n} matrix rows, found {len(body)}", body[-1][0] if body else head_line)
    M = np.empty((n, n))
    for r, (line, text_row) in enumerate(body):
        cells = text_row.replace(",", " ").split()
        if len(cells) != n:
            raise ParseError(f"row has {len(cells)} entries, expected {n}", line)
        M[r] = [_number(c, line) for c in cells]
        if M[r, r] != 0:
            raise ParseError(f"diagonal entry ({r},{r}) is {M[r, r]}, expected 0", line)
        if (M[r] < 0).any():
            raise ParseError("negative dissimilarity", line)
    diff = np.abs(M - M.T) > SYMMETRY_TOLERANCE * np.maximum(1.0, np.abs(M))
    if diff.any():
        i, j = map(int, np.argwhere(diff)[0])
        raise ParseError(f"matrix not symmetric at entry ({i},{j}): {M[i, j]} vs {M[j, i]}", body[i][0])
    metric = MatrixMetric((M + M.T) / 2)
    return Dataset(tuple(Point(i, i) for i in range(n)), metric)


def ingest_points(path, fmt: str = "csv") -> Dataset:
    """Load a dataset; ids follow row order."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc.strerror}") from None
    if fmt == "csv":
        return parse_csv(text)
    if fmt == "matrix":
        return parse_matrix(text)
    raise InputError(f"unknown point format {fmt!r}")


def read_trace(path) -> AdversaryTrace:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return AdversaryTrace.from_json(text)


def write_trace(trace: AdversaryTrace, path) -> None:
    Path(path).write_text(trace.to_json() + "\n")
