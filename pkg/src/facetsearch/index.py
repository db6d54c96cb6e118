"""Immutable corpus snapshots: ingestion, index building, persistence.

A snapshot freezes the corpus records together with the facet embeddings
produced by one specific heads version and the kernel table in force.
Searches always run against a snapshot reference, so a reindex can swap
the live snapshot atomically without disturbing in-flight queries.

On-disk layout of an index directory:

    records.jsonl   one corpus record per line (base embeddings only)
    heads.bin       serialized facet heads
    kernel.csv      chart-type kernel table
    manifest.json   dimension, record count, heads_version, timestamps

Facet embeddings are recomputed from heads.bin at load time (they are a
pure function of the base embeddings) and the manifest hash is checked
so a swapped or stale heads file is caught immediately.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from facetsearch.core import (
    EMBEDDING_FACETS,
    UNIT_NORM_TOLERANCE,
    CoreError,
    CorpusRecord,
    DimensionMismatchError,
    FacetId,
    normalize,
)
from facetsearch.heads import FacetHeads
from facetsearch.kernel import KernelTable, load_kernel_table

MANIFEST_NAME = "manifest.json"
RECORDS_NAME = "records.jsonl"
HEADS_NAME = "heads.bin"
KERNEL_NAME = "kernel.csv"


class DuplicateIdError(CoreError):
    pass


class IndexIntegrityError(CoreError):
    pass


@dataclass(frozen=True, eq=False)
class IndexSnapshot:
    """Searchable, immutable view of the corpus.

    Records are held in id-sorted order; per-facet embedding matrices are
    stacked once at build time so scoring is a single matrix-vector
    product per facet.
    """

    records: tuple[CorpusRecord, ...]
    heads_version: str
    kernel: KernelTable
    dimension: int
    created_at: str
    _facet_matrices: dict[FacetId, np.ndarray] = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)

    @property
    def chart_type_sets(self) -> tuple[frozenset, ...]:
        return tuple(r.chart_types for r in self.records)

    def facet_matrix(self, facet: FacetId) -> np.ndarray:
        return self._facet_matrices[facet]

    def get(self, record_id: str) -> CorpusRecord | None:
        pos = self._positions.get(record_id)
        return None if pos is None else self.records[pos]

    def position(self, record_id: str) -> int | None:
        return self._positions.get(record_id)

    @property
    def _positions(self) -> dict[str, int]:
        cached = self.__dict__.get("_positions_cache")
        if cached is None:
            cached = {r.id: i for i, r in enumerate(self.records)}
            self.__dict__["_positions_cache"] = cached
        return cached


def build_index(
    records: Sequence[CorpusRecord],
    heads: FacetHeads,
    kernel: KernelTable,
) -> IndexSnapshot:
    """Project every record through the heads and freeze a snapshot.

    Base embeddings must be unit-norm and share the heads' dimension;
    ids must be unique. An empty record list yields a valid (empty)
    snapshot: searching it is the error, not building it.
    """
    seen: set[str] = set()
    for record in records:
        if record.id in seen:
            raise DuplicateIdError(f"duplicate record id: {record.id!r}")
        seen.add(record.id)
        if record.dimension != heads.dimension:
            raise DimensionMismatchError(
                f"record {record.id!r} has dimension {record.dimension}, "
                f"heads expect {heads.dimension}"
            )
        norm = float(np.linalg.norm(record.base_embedding))
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            raise CoreError(
                f"record {record.id!r} base embedding is not unit-norm (norm={norm})"
            )

    ordered = tuple(sorted(records, key=lambda r: r.id))
    if ordered:
        base = np.stack([r.base_embedding for r in ordered])
        projected = heads.project(base)
    else:
        projected = {
            f: np.zeros((0, heads.dimension)) for f in EMBEDDING_FACETS
        }

    enriched = tuple(
        CorpusRecord(
            id=r.id,
            chart_types=r.chart_types,
            base_embedding=r.base_embedding,
            facet_embeddings={f: projected[f][i] for f in EMBEDDING_FACETS},
            metadata=r.metadata,
        )
        for i, r in enumerate(ordered)
    )
    return IndexSnapshot(
        records=enriched,
        heads_version=heads.version_hash(),
        kernel=kernel,
        dimension=heads.dimension,
        created_at=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        _facet_matrices={f: projected[f] for f in EMBEDDING_FACETS},
    )


def read_records_jsonl(
    path: str | Path,
    dimension: int | None = None,
    renormalize: bool = False,
) -> list[CorpusRecord]:
    """Read ingestion JSONL; optionally re-normalize base embeddings."""
    path = Path(path)
    records: list[CorpusRecord] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CoreError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            record = CorpusRecord.from_dict(obj)
            if dimension is not None and record.dimension != dimension:
                raise DimensionMismatchError(
                    f"{path}:{lineno}: record {record.id!r} has dimension "
                    f"{record.dimension}, expected {dimension}"
                )
            if not np.all(np.isfinite(record.base_embedding)):
                raise CoreError(f"{path}:{lineno}: non-finite base embedding")
            if renormalize:
                record = CorpusRecord(
                    id=record.id,
                    chart_types=record.chart_types,
                    base_embedding=normalize(record.base_embedding),
                    metadata=record.metadata,
                )
            records.append(record)
    return records


def write_records_jsonl(records: Iterable[CorpusRecord], path: str | Path) -> int:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
            count += 1
    return count


def save_index(
    snapshot: IndexSnapshot,
    heads: FacetHeads,
    directory: str | Path,
) -> Path:
    """Persist a snapshot built with ``heads`` to an index directory."""
    if heads.version_hash() != snapshot.heads_version:
        raise IndexIntegrityError(
            "heads do not match the snapshot's heads_version; "
            "pass the heads the snapshot was built with"
        )
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_records_jsonl(snapshot.records, directory / RECORDS_NAME)
    heads.save(directory / HEADS_NAME)
    (directory / KERNEL_NAME).write_text(snapshot.kernel.to_csv(), encoding="utf-8")
    manifest = {
        "dimension": snapshot.dimension,
        "count": len(snapshot),
        "heads_version": snapshot.heads_version,
        "created_at": snapshot.created_at,
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return directory


def load_index(directory: str | Path) -> tuple[IndexSnapshot, FacetHeads]:
    """Load an index directory, recomputing facet embeddings.

    The manifest's heads_version must match the hash of the loaded heads
    file; a mismatch means the directory was assembled from inconsistent
    parts and is rejected.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise IndexIntegrityError(f"no manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    heads = FacetHeads.load(directory / HEADS_NAME)
    if heads.version_hash() != manifest.get("heads_version"):
        raise IndexIntegrityError(
            "heads.bin does not match manifest heads_version; refusing to load"
        )
    kernel = load_kernel_table(directory / KERNEL_NAME)
    records = read_records_jsonl(
        directory / RECORDS_NAME, dimension=int(manifest["dimension"])
    )
    if len(records) != int(manifest["count"]):
        raise IndexIntegrityError(
            f"manifest says {manifest['count']} records, found {len(records)}"
        )
    snapshot = build_index(records, heads, kernel)
    return snapshot, heads
