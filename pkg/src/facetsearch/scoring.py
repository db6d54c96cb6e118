"""Facet similarity computation, weighted fusion, and corpus ranking.

The relevance of an exemplar to a parsed query is a weighted sum of
per-facet similarities: cosine between facet-conditioned query and image
embeddings for the four embedding facets, and the soft kernel match for
the chart-type facet. Ranking is exhaustive (no ANN index) so results
are exactly reproducible and tie-breaks are deterministic.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Mapping

import numpy as np

from facetsearch.core import (
    ALL_FACETS,
    EMBEDDING_FACETS,
    CoreError,
    DimensionMismatchError,
    FacetId,
    IntentSpec,
    RankedResult,
    ZeroVectorError,
    is_zero_embedding,
    normalize,
    zero_vector,
)
from facetsearch.embedder import Embedder, EmbedderFailureError
from facetsearch.heads import FacetHeads
from facetsearch.kernel import chart_type_similarity

if TYPE_CHECKING:  # pragma: no cover
    from facetsearch.index import IndexSnapshot


class MissingFacetScoreError(CoreError):
    pass


class EmptySnapshotError(CoreError):
    pass


def _row_dot(matrix: np.ndarray, vec: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Per-row dot products via an explicit multiply-sum reduction.

    BLAS GEMV may sum in an alignment-dependent order, so bitwise-equal
    rows can score a ulp apart; that would make tie-breaking unstable.
    The elementwise product + per-row sum is bitwise row-deterministic.
    Chunked to bound the temporary at desk scale.
    """
    out = np.empty(matrix.shape[0])
    for start in range(0, matrix.shape[0], chunk):
        block = matrix[start : start + chunk]
        out[start : start + chunk] = (block * vec).sum(axis=1)
    return out


#: Text prefix realizing facet conditioning at the embedder boundary.
def facet_prefix(facet: FacetId) -> str:
    return f"{facet.value}: "


def embed_query_facets(
    spec: IntentSpec, embedder: Embedder
) -> dict[FacetId, np.ndarray]:
    """Embed each present facet rewrite; absent facets get the zero vector.

    Present rewrites are embedded in one batched call as
    ``"<facet>: " + rewrite`` and L2-normalized. An all-zero embedder
    output is an EmbedderFailureError (it cannot be normalized and must
    not masquerade as an absent facet).
    """
    d = embedder.dimension
    present = [f for f in EMBEDDING_FACETS if spec.rewrite(f) is not None]
    texts = [facet_prefix(f) + spec.rewrites[f] for f in present]
    raw = embedder.embed_texts(texts)
    if raw.shape != (len(texts), d):
        raise EmbedderFailureError(
            f"embedder returned shape {raw.shape}, expected ({len(texts)}, {d})"
        )
    vectors: dict[FacetId, np.ndarray] = {}
    for facet, row in zip(present, raw):
        try:
            vectors[facet] = normalize(row)
        except ZeroVectorError as exc:
            raise EmbedderFailureError(
                f"embedder produced a zero vector for facet {facet.value!r}"
            ) from exc
    for facet in EMBEDDING_FACETS:
        if facet not in vectors:
            vectors[facet] = zero_vector(d)
    return vectors


def project_image(base: np.ndarray, heads: FacetHeads) -> dict[FacetId, np.ndarray]:
    """Project one unit-norm base embedding through all four heads."""
    base = np.asarray(base, dtype=np.float64)
    if base.shape != (heads.dimension,):
        raise DimensionMismatchError(
            f"expected base of shape ({heads.dimension},), got {base.shape}"
        )
    projected = heads.project(base[None, :])
    return {facet: mat[0] for facet, mat in projected.items()}


def facet_similarity(e_q: np.ndarray, e_x: np.ndarray) -> float:
    """Cosine similarity; both inputs unit-norm (or e_q the zero vector)."""
    e_q = np.asarray(e_q, dtype=np.float64)
    e_x = np.asarray(e_x, dtype=np.float64)
    if e_q.shape != e_x.shape:
        raise DimensionMismatchError(f"shape mismatch: {e_q.shape} vs {e_x.shape}")
    return float(np.dot(e_q, e_x))


def fuse_scores(spec: IntentSpec, facet_scores: Mapping[FacetId, float]) -> float:
    """Weighted sum of per-facet scores over the spec's active facets."""
    total = 0.0
    for facet in ALL_FACETS:
        w = spec.weight(facet)
        if w == 0.0:
            continue
        if facet not in facet_scores:
            raise MissingFacetScoreError(
                f"no score for weighted facet {facet.value!r}"
            )
        total += w * facet_scores[facet]
    return total


def rank_corpus(
    spec: IntentSpec,
    query_vectors: Mapping[FacetId, np.ndarray],
    snapshot: "IndexSnapshot",
    k: int,
    hard_filter: bool = False,
) -> list[RankedResult]:
    """Score every record and return the top-k, ties broken by record id.

    Scoring is soft: records without chart-type overlap are still ranked
    (their chart facet simply scores low) unless ``hard_filter`` is set,
    which drops records with no exact overlap against the queried types
    before scoring.
    """
    if len(snapshot) == 0:
        raise EmptySnapshotError("cannot search an empty snapshot")
    if k < 1:
        raise CoreError(f"k must be >= 1, got {k}")

    n = len(snapshot)
    indices = np.arange(n)
    if hard_filter and spec.chart_types:
        keep = [
            i
            for i in range(n)
            if snapshot.chart_type_sets[i] & spec.chart_types
        ]
        indices = np.asarray(keep, dtype=int)
        if indices.size == 0:
            return []

    per_facet: dict[FacetId, np.ndarray] = {}
    for facet in EMBEDDING_FACETS:
        vec = query_vectors.get(facet)
        if vec is None or is_zero_embedding(vec):
            per_facet[facet] = np.zeros(indices.size)
            continue
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (snapshot.dimension,):
            raise DimensionMismatchError(
                f"query vector for {facet.value!r} has shape {vec.shape}, "
                f"index dimension is {snapshot.dimension}"
            )
        per_facet[facet] = _row_dot(snapshot.facet_matrix(facet)[indices], vec)

    if spec.chart_types:
        kernel = snapshot.kernel
        per_facet[FacetId.CHART_TYPE] = np.asarray(
            [
                chart_type_similarity(spec.chart_types, snapshot.chart_type_sets[i], kernel)
                for i in indices
            ],
            dtype=np.float64,
        )
    else:
        per_facet[FacetId.CHART_TYPE] = np.zeros(indices.size)

    totals = np.zeros(indices.size)
    for facet in ALL_FACETS:
        w = spec.weight(facet)
        if w > 0.0:
            totals += w * per_facet[facet]

    order = sorted(
        range(indices.size),
        key=lambda pos: (-totals[pos], snapshot.ids[indices[pos]]),
    )
    results: list[RankedResult] = []
    for pos in order[: min(k, indices.size)]:
        record_index = int(indices[pos])
        results.append(
            RankedResult(
                record_id=snapshot.ids[record_index],
                total_score=float(totals[pos]),
                facet_scores={f: float(per_facet[f][pos]) for f in ALL_FACETS},
            )
        )
    return results
