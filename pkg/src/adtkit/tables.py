"""Plain-text serialization: CSV tables, state tables and operator triples."""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .algebra import OperatorSum
from .cobs import StateSpec
from .errors import ValidationError


def fmt(x: float) -> str:
    """Full-precision scientific text; -0.0 is written as 0."""
    x = float(x) + 0.0
    return f"{x:.16e}"


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_state_csv(path, n_sites: int, label: str = "") -> StateSpec:
    """Rows ``word,value`` (a header line is optional)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for k, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if k == 1 and row[0].strip().lower() == "word":
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{k}: expected two columns (word, value)")
            try:
                rows.append((row[0].strip(), float(row[1])))
            except ValueError:
                raise ValidationError(f"{path}:{k}: value {row[1]!r} is not a number") from None
    for w, _ in rows:
        if len(w) != n_sites:
            raise ValidationError(f"{path}: word {w!r} does not have {n_sites} letters")
    return StateSpec.from_rows(n_sites, rows, label=label or str(path))


def write_state_csv(path, state: StateSpec) -> None:
    write_csv(path, ["word", "value"], [(w, float(v)) for w, v in state.to_rows()])


def operator_rows(op: OperatorSum) -> list[tuple[str, float, float]]:
    return [(w, float(re), float(im)) for w, re, im in op.to_triples()]
