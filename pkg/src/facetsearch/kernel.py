"""Soft chart-type similarity via a symmetric type-to-type kernel.

Exact type matches always score 1. Visually confusable pairs (an area
chart described as a filled line chart, a histogram as a bar chart) get
an expert-tuned value in (0, 1]; every other pair scores 0. The shipped
default table is a replaceable stand-in, editable as plain CSV.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from facetsearch.core import ChartType, CoreError


class KernelError(CoreError):
    pass


class UnknownTypeNameError(KernelError):
    pass


class ValueOutOfRangeError(KernelError):
    pass


class DiagonalEntryError(KernelError):
    pass


class ConflictingDuplicateError(KernelError):
    pass


class EmptyQueryTypesError(KernelError):
    pass


class EmptyRecordTypesError(KernelError):
    pass


@dataclass(frozen=True)
class KernelTable:
    """Symmetric kernel over chart types; diagonal fixed at 1.

    Off-diagonal entries are stored under unordered pairs, so lookup is
    symmetric by construction. Unlisted pairs score 0.
    """

    entries: Mapping[frozenset[ChartType], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        checked: dict[frozenset[ChartType], float] = {}
        for pair, value in dict(self.entries).items():
            pair = frozenset(pair)
            if len(pair) != 2:
                raise DiagonalEntryError(
                    "diagonal kernel entries are implicit and fixed at 1"
                )
            if not all(isinstance(t, ChartType) for t in pair):
                raise UnknownTypeNameError(f"kernel pair has unknown types: {pair}")
            value = float(value)
            if not (0.0 < value <= 1.0):
                raise ValueOutOfRangeError(
                    f"kernel value must lie in (0, 1], got {value}"
                )
            checked[pair] = value
        object.__setattr__(self, "entries", checked)

    def value(self, a: ChartType, b: ChartType) -> float:
        if a == b:
            return 1.0
        return self.entries.get(frozenset((a, b)), 0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        rows = sorted(
            (tuple(sorted(t.value for t in pair)), v) for pair, v in self.entries.items()
        )
        for (a, b), v in rows:
            writer.writerow([a, b, v])
        return buf.getvalue()


def chart_type_similarity(
    q_types: Iterable[ChartType],
    x_types: Iterable[ChartType],
    kernel: KernelTable,
) -> float:
    """Average over queried types of the best kernel match in the record.

    Score = (1/|Q|) * sum over t in Q of max over t' in X of kernel(t, t').
    """
    q = list(q_types)
    x = list(x_types)
    if not q:
        raise EmptyQueryTypesError("query chart-type set is empty")
    if not x:
        raise EmptyRecordTypesError("record chart-type set is empty")
    total = 0.0
    for t in q:
        total += max(kernel.value(t, tx) for tx in x)
    return total / len(q)


def parse_kernel_csv(text: str, *, source: str = "<string>") -> KernelTable:
    entries: dict[frozenset[ChartType], float] = {}
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if not row or (row[0].lstrip().startswith("#")):
            continue
        if len(row) != 3:
            raise KernelError(f"{source}:{lineno}: expected 'TypeA,TypeB,value'")
        name_a, name_b, raw_value = (cell.strip() for cell in row)
        try:
            a = ChartType.parse(name_a)
            b = ChartType.parse(name_b)
        except CoreError as exc:
            raise UnknownTypeNameError(f"{source}:{lineno}: {exc}") from exc
        if a == b:
            raise DiagonalEntryError(
                f"{source}:{lineno}: diagonal entry for {a.value!r} (fixed at 1)"
            )
        try:
            value = float(raw_value)
        except ValueError as exc:
            raise ValueOutOfRangeError(f"{source}:{lineno}: bad value {raw_value!r}") from exc
        if not (0.0 < value <= 1.0):
            raise ValueOutOfRangeError(
                f"{source}:{lineno}: value {value} outside (0, 1]"
            )
        pair = frozenset((a, b))
        if pair in entries and entries[pair] != value:
            raise ConflictingDuplicateError(
                f"{source}:{lineno}: conflicting duplicate for {a.value!r}/{b.value!r}"
            )
        entries[pair] = value
    return KernelTable(entries=entries)


def load_kernel_table(path: str | Path) -> KernelTable:
    """Load a kernel CSV ('TypeA,TypeB,value' lines, '#' comments)."""
    path = Path(path)
    return parse_kernel_csv(path.read_text(encoding="utf-8"), source=str(path))


def default_kernel_table() -> KernelTable:
    """The packaged default table (a documented, replaceable stand-in)."""
    text = (
        resources.files("facetsearch")
        .joinpath("data/default_kernel.csv")
        .read_text(encoding="utf-8")
    )
    return parse_kernel_csv(text, source="facetsearch/data/default_kernel.csv")
