"""Exemplar auto-selection over the top-10 retrieved candidates.

With an external vision-language model configured, the model re-ranks
the candidates against the query and returns 1-3 ids, which are
validated (subset of the candidates, sane size) before use. Without one,
a deterministic diversity-promoting fallback picks up to 3 exemplars by
greedy max-min distance in facet-embedding space, seeded by the rank-1
item, so suggestions remain useful offline.
"""

from __future__ import annotations

from typing import Callable, Sequence

import httpx
import numpy as np

from facetsearch.core import (
    EMBEDDING_FACETS,
    CoreError,
    IntentSpec,
    RankedResult,
)
from facetsearch.index import IndexSnapshot


class EmptyCandidatesError(CoreError):
    pass


class BackendInvalidSelectionError(CoreError):
    pass


SelectionClient = Callable[[IntentSpec, Sequence[RankedResult]], Sequence[str]]


def _stacked_embedding(snapshot: IndexSnapshot, record_id: str) -> np.ndarray:
    record = snapshot.get(record_id)
    if record is None:
        raise CoreError(f"record {record_id!r} not in snapshot")
    return np.concatenate([record.facet_embeddings[f] for f in EMBEDDING_FACETS])


def greedy_diverse_selection(
    candidate_ids: Sequence[str],
    snapshot: IndexSnapshot,
    limit: int = 3,
) -> list[str]:
    """Greedy max-min selection over concatenated facet embeddings.

    Starts from the first candidate (the rank-1 item) and repeatedly adds
    the candidate whose minimum distance to the selected set is largest;
    ties break by ascending record id. Deterministic.
    """
    if not candidate_ids:
        raise EmptyCandidatesError("no candidates to select from")
    vectors = {rid: _stacked_embedding(snapshot, rid) for rid in candidate_ids}
    selected = [candidate_ids[0]]
    remaining = [rid for rid in candidate_ids[1:] if rid not in selected]
    while remaining and len(selected) < limit:
        best_id = None
        best_score = -1.0
        for rid in remaining:
            min_dist = min(
                float(np.linalg.norm(vectors[rid] - vectors[s])) for s in selected
            )
            if min_dist > best_score or (
                min_dist == best_score and (best_id is None or rid < best_id)
            ):
                best_score = min_dist
                best_id = rid
        selected.append(best_id)  # type: ignore[arg-type]
        remaining.remove(best_id)
    return selected


def auto_select(
    spec: IntentSpec,
    top10: Sequence[RankedResult],
    snapshot: IndexSnapshot,
    client: SelectionClient | None = None,
) -> tuple[list[str], str]:
    """Pick 1-3 exemplar ids from the candidates; returns (ids, note).

    The note records which path produced the selection ("model",
    "fallback", or "fallback after invalid model selection"). Model
    output is a suggestion for the user to confirm, never auto-committed.
    """
    if not top10:
        raise EmptyCandidatesError("no candidates to select from")
    candidate_ids = [r.record_id for r in top10]
    if client is not None:
        try:
            raw = list(client(spec, top10))
            if not (1 <= len(raw) <= 3):
                raise BackendInvalidSelectionError(
                    f"model selected {len(raw)} ids, expected 1-3"
                )
            if len(set(raw)) != len(raw) or any(r not in candidate_ids for r in raw):
                raise BackendInvalidSelectionError(
                    "model selection is not a subset of the candidates"
                )
            return [str(r) for r in raw], "model"
        except Exception as exc:
            note = f"fallback after invalid model selection ({type(exc).__name__}: {exc})"
            return greedy_diverse_selection(candidate_ids, snapshot), note
    return greedy_diverse_selection(candidate_ids, snapshot), "fallback"


class HttpSelectionClient:
    """POST the query spec and candidate list to an external model."""

    def __init__(self, endpoint: str, timeout: float = 30.0) -> None:
        self.endpoint = endpoint
        self._client = httpx.Client(timeout=timeout)

    def __call__(
        self, spec: IntentSpec, top10: Sequence[RankedResult]
    ) -> Sequence[str]:
        response = self._client.post(
            self.endpoint,
            json={
                "spec": spec.to_dict(),
                "candidates": [r.to_dict() for r in top10],
            },
        )
        response.raise_for_status()
        return [str(r) for r in response.json()["selected_ids"]]
