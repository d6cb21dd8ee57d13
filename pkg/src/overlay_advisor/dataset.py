"""Compile records, CSV I/O, train/test splitting and error metrics."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Sequence
from dataclasses import astuple, dataclass

from .errors import ParseError, ValidationError
from .rng import SplitMix64

COLUMNS = ("num_ste", "fanout_limit", "luts", "ffs", "mem_bits", "max_fanout", "source_tag")
TARGETS = ("luts", "ffs", "mem_bits", "max_fanout")
FEATURES = ("num_ste", "fanout_limit")


@dataclass(frozen=True)
class Record:
    num_ste: int
    fanout_limit: int
    luts: int
    ffs: int
    mem_bits: int
    max_fanout: int
    source_tag: str = ""

    def __post_init__(self) -> None:
        if self.num_ste < 1:
            raise ValidationError("num_ste must be >= 1")
        for name in COLUMNS[1:6]:
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")

    def features(self) -> list[float]:
        return [float(self.num_ste), float(self.fanout_limit)]

    def target(self, name: str) -> int:
        if name not in TARGETS:
            raise ValidationError(f"unknown target {name!r}; valid targets: {', '.join(TARGETS)}")
        return getattr(self, name)


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float
    mape: float | None
    n: int
    mape_excluded: int = 0


def load_records(document: str) -> list[Record]:
    """Parse a records CSV.  Leading ``#`` lines (run manifests) are skipped."""
    lines = document.splitlines(keepends=True)
    skip = 0
    while skip < len(lines) and lines[skip].startswith("#"):
        skip += 1
    reader = csv.reader(io.StringIO("".join(lines[skip:])))
    header = next(reader, None)
    if header is None:
        raise ParseError("missing header row", skip + 1)
    header = [h.strip() for h in header]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise ParseError(f"missing column(s): {', '.join(missing)}", skip + 1)
    if header != list(COLUMNS):
        raise ParseError(f"header must be exactly {','.join(COLUMNS)}", skip + 1)

    records = []
    for rowno, row in enumerate(reader, start=skip + 2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise ParseError(f"expected {len(COLUMNS)} cells, got {len(row)}", rowno)
        values = []
        for col, cell in zip(COLUMNS[:6], row):
            try:
                v = int(cell.strip())
            except ValueError:
                raise ParseError(f"column {col}: non-numeric value {cell!r}", rowno) from None
            if v < 0:
                raise ParseError(f"column {col}: negative quantity {v}", rowno)
            if col == "num_ste" and v < 1:
                raise ParseError("column num_ste: must be >= 1", rowno)
            values.append(v)
        records.append(Record(*values, source_tag=row[6]))
    return records


def dump_records(records: Sequence[Record], preamble: str = "") -> str:
    buf = io.StringIO()
    buf.write(preamble)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        writer.writerow(astuple(r))
    return buf.getvalue()


def split_train_test(
    records: Sequence[Record], test_fraction: float, seed: int
) -> tuple[list[Record], list[Record]]:
    if not records:
        raise ValidationError("cannot split an empty record list")
    if not 0 <= test_fraction < 1:
        raise ValidationError("test_fraction must lie in [0, 1)")
    order = list(range(len(records)))
    SplitMix64(seed).shuffle(order)
    n_test = math.floor(test_fraction * len(records))
    test = [records[i] for i in order[:n_test]]
    train = [records[i] for i in order[n_test:]]
    return train, test


def compute_metrics(predicted: Sequence[float], actual: Sequence[float]) -> Metrics:
    if len(predicted) != len(actual):
        raise ValidationError(f"length mismatch: {len(predicted)} predictions, {len(actual)} actuals")
    if not predicted:
        raise ValidationError("metrics need at least one pair")
    n = len(predicted)
    diffs = [float(p) - float(a) for p, a in zip(predicted, actual)]
    mae = math.fsum(abs(d) for d in diffs) / n
    rmse = math.sqrt(math.fsum(d * d for d in diffs) / n)
    # the power-mean inequality guarantees this; rounding can break it by an ulp
    rmse = max(rmse, mae)
    ratios = [abs(d) / abs(float(a)) * 100.0 for d, a in zip(diffs, actual) if a != 0]
    mape = math.fsum(ratios) / len(ratios) if ratios else None
    return Metrics(mae=mae, rmse=rmse, mape=mape, n=n, mape_excluded=n - len(ratios))

