"""Intent-aware infographic exemplar retrieval.

The package splits into a small set of layers:

- ``core``: the five-facet intent vocabulary, the 13-type chart pool,
  intent specifications and corpus records.
- ``kernel`` / ``scoring`` / ``index``: chart-type kernel similarity,
  facet-conditioned embedding similarity and weighted score fusion over
  an immutable index snapshot.
- ``heads`` / ``alignment``: per-facet MLP projection heads and their
  contrastive training loop (with analytic gradients).
- ``intent``: free-form query parsing via an external LLM with schema
  retry, plus a deterministic keyword fallback.
- ``evalharness``: Recall@K / MRR@10 / dCRR@10 and a benchmark runner.
- ``svgedit``: structural SVG summarize / sanitize / stitch pipeline.
- ``service`` / ``cli``: FastAPI service binding everything together and
  a thin command-line client.
"""

__version__ = "0.1.0"

from facetsearch.core import (
    ChartType,
    CorpusRecord,
    FacetId,
    IntentSpec,
    RankedResult,
    normalize,
    validate_intent_spec,
)

__all__ = [
    "ChartType",
    "CorpusRecord",
    "FacetId",
    "IntentSpec",
    "RankedResult",
    "normalize",
    "validate_intent_spec",
    "__version__",
]
