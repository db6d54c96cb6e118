"""Shared test utilities: independent oracles and fixture generators.

The oracles here deliberately re-derive scores with straight-line
per-record arithmetic (no vectorized engine paths, no log-sum-exp
shortcuts) so tests compare two genuinely independent implementations.
"""

from __future__ import annotations

import base64

import numpy as np

from facetsearch.core import (
    ALL_FACETS,
    EMBEDDING_FACETS,
    ChartType,
    CorpusRecord,
    FacetId,
    IntentSpec,
    normalize,
    zero_vector,
)
from facetsearch.kernel import KernelTable

CHART_TYPES = list(ChartType)


# ---------------------------------------------------------------------------
# brute-force ranking oracle
# ---------------------------------------------------------------------------

def oracle_chart_similarity(q_types, x_types, kernel: KernelTable) -> float:
    total = 0.0
    for t in q_types:
        best = 0.0
        for tx in x_types:
            value = 1.0 if t == tx else kernel.value(t, tx)
            if value > best:
                best = value
        total += best
    return total / len(q_types)


def oracle_score_record(
    spec: IntentSpec,
    query_vectors: dict[FacetId, np.ndarray],
    record: CorpusRecord,
    kernel: KernelTable,
) -> tuple[float, dict[FacetId, float]]:
    scores: dict[FacetId, float] = {}
    for facet in EMBEDDING_FACETS:
        scores[facet] = float(np.dot(query_vectors[facet], record.facet_embeddings[facet]))
    if spec.chart_types:
        scores[FacetId.CHART_TYPE] = oracle_chart_similarity(
            spec.chart_types, record.chart_types, kernel
        )
    else:
        scores[FacetId.CHART_TYPE] = 0.0
    total = 0.0
    for facet in ALL_FACETS:
        w = spec.weight(facet)
        if w > 0.0:
            total += w * scores[facet]
    return total, scores


def oracle_rank(
    spec: IntentSpec,
    query_vectors: dict[FacetId, np.ndarray],
    records,
    kernel: KernelTable,
) -> list[tuple[str, float]]:
    scored = [
        (record.id, oracle_score_record(spec, query_vectors, record, kernel)[0])
        for record in records
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


# ---------------------------------------------------------------------------
# random corpora and specs
# ---------------------------------------------------------------------------

def random_corpus(
    rng: np.random.Generator,
    size: int,
    dimension: int,
    duplicate_fraction: float = 0.0,
) -> list[CorpusRecord]:
    """Random records; optionally clone some embeddings under new ids so
    exact score ties exercise the id tie-break."""
    records: list[CorpusRecord] = []
    for i in range(size):
        n_types = int(rng.integers(1, 4))
        types = frozenset(rng.choice(len(CHART_TYPES), size=n_types, replace=False))
        records.append(
            CorpusRecord(
                id=f"r{i:05d}",
                chart_types=frozenset(CHART_TYPES[j] for j in types),
                base_embedding=normalize(rng.standard_normal(dimension)),
                metadata={"title": f"record {i}"},
            )
        )
    n_dup = int(size * duplicate_fraction)
    for j in range(n_dup):
        source = records[int(rng.integers(0, size))]
        records.append(
            CorpusRecord(
                id=f"dup{j:05d}",
                chart_types=source.chart_types,
                base_embedding=source.base_embedding.copy(),
                metadata={"title": f"duplicate of {source.id}"},
            )
        )
    return records


def random_spec_and_vectors(
    rng: np.random.Generator, dimension: int
) -> tuple[IntentSpec, dict[FacetId, np.ndarray]]:
    """A validated random spec plus consistent query vectors."""
    while True:
        present = [f for f in EMBEDDING_FACETS if rng.random() < 0.6]
        with_types = rng.random() < 0.5
        if present or with_types:
            break
    rewrites = {f: f"facet text {f.value} {rng.integers(1e9)}" for f in present}
    chart_types = frozenset()
    if with_types:
        count = int(rng.integers(1, 4))
        picks = rng.choice(len(CHART_TYPES), size=count, replace=False)
        chart_types = frozenset(CHART_TYPES[i] for i in picks)
    weights = {f: float(rng.uniform(0.05, 2.0)) for f in present}
    if chart_types:
        weights[FacetId.CHART_TYPE] = float(rng.uniform(0.05, 2.0))
    spec = IntentSpec(rewrites=rewrites, chart_types=chart_types, weights=weights)
    vectors = {
        f: normalize(rng.standard_normal(dimension)) if f in present else zero_vector(dimension)
        for f in EMBEDDING_FACETS
    }
    return spec, vectors


# ---------------------------------------------------------------------------
# SVG fixture corpus
# ---------------------------------------------------------------------------

def _nested_groups(depth: int, leaf: str) -> str:
    open_tags = "".join(f'<g id="level{i}" transform="translate({i},{i})">' for i in range(depth))
    return open_tags + leaf + "</g>" * depth


def big_base64_payload(size: int = 10_500) -> str:
    raw = bytes((i * 37 + 11) % 256 for i in range(size))
    return "data:image/png;base64," + base64.b64encode(raw).decode()


def svg_fixture_corpus() -> list[str]:
    """Deterministic corpus of 22 varied SVG documents."""
    ns = 'xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink"'
    payload = big_base64_payload()
    small_payload = "data:image/png;base64," + base64.b64encode(b"tiny").decode()
    marker = '<circle r="3"/>'
    bar = '<rect width="7" height="2"/>'
    docs = [
        f"<svg {ns}/>",
        f"<svg {ns}><g><rect/><rect/><rect/></g></svg>",
        f'<?xml version="1.0" encoding="UTF-8"?>\n<svg {ns} viewBox="0 0 100 100"><rect width="10" height="10"/></svg>',
        f"<svg {ns}>{_nested_groups(7, marker)}</svg>",
        f'<svg {ns}><image xlink:href="{payload}" width="64" height="64"/><text>payload holder</text></svg>',
        f'<svg {ns}><g style="fill: url({small_payload}); stroke: red"><path d="M0 0 L10 10"/></g></svg>',
        f'<svg {ns}><defs><pattern id="p"><rect width="2" height="2"/></pattern></defs><rect fill="url(#p)" width="20" height="20"/></svg>',
        f"<svg {ns}><text>  Multi   spaced   text  </text><text>second</text></svg>",
        f'<svg {ns}><!-- a comment --><g id="after-comment"><ellipse rx="4" ry="2"/></g></svg>',
        f'<svg {ns}><g><text>unicode: touché ✓ 中文</text></g></svg>',
        f'<svg {ns}><a href="https://example.com"><rect width="5" height="5"/></a></svg>',
        f'<svg {ns}><switch><g systemLanguage="en"><text>en</text></g><g systemLanguage="fr"><text>fr</text></g></switch></svg>',
        f'<svg {ns}><g transform="rotate(45)"><g><g><line x1="0" y1="0" x2="9" y2="9"/></g></g></g></svg>',
        f'<svg {ns}><style>.cls {{ fill: #aabbcc; }}</style><rect class="cls" width="8" height="8"/></svg>',
        f'<svg {ns}><symbol id="icon"><polygon points="0,0 4,0 2,4"/></symbol><use href="#icon"/></svg>',
        f'<svg {ns}><g id="bars"><rect x="0" width="4" height="9"/><rect x="5" width="4" height="14"/><rect x="10" width="4" height="3"/></g><g id="labels"><text x="0">a</text><text x="5">b</text><text x="10">c</text></g></svg>',
        f'<svg {ns}><clipPath id="clip"><circle r="5"/></clipPath><g clip-path="url(#clip)"><rect width="10" height="10"/></g></svg>',
        f'<svg {ns}><marker id="m" markerWidth="4" markerHeight="4"><circle r="1"/></marker><path d="M0 0 L20 0" marker-end="url(#m)"/></svg>',
        f'<svg {ns}><foreignObject width="50" height="20"><div>html-ish content</div></foreignObject></svg>',
        f'<svg {ns}><mask id="mask"><rect width="10" height="10" fill="white"/></mask><circle r="8" mask="url(#mask)"/></svg>',
        f'<svg {ns}><g><title>titled group</title><desc>with description</desc><rect width="1" height="1"/></g></svg>',
        f'<svg {ns} width="200" height="100"><g id="chart">{_nested_groups(6, bar)}</g><image xlink:href="{payload}" x="100"/></svg>',
    ]
    return docs
