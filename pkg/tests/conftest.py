from __future__ import annotations

import numpy as np
import pytest

from facetsearch.core import ChartType, CorpusRecord, normalize
from facetsearch.embedder import FixtureEmbedder
from facetsearch.heads import init_heads
from facetsearch.index import build_index
from facetsearch.kernel import default_kernel_table


@pytest.fixture(scope="session")
def kernel():
    return default_kernel_table()


@pytest.fixture()
def small_snapshot(kernel):
    """20-record snapshot with d=32 and deterministic content."""
    rng = np.random.default_rng(42)
    types = list(ChartType)
    records = [
        CorpusRecord(
            id=f"rec-{i:03d}",
            chart_types=frozenset({types[i % len(types)], types[(i * 3) % len(types)]}),
            base_embedding=normalize(rng.standard_normal(32)),
            metadata={"title": f"demo {i}", "image": f"img/{i}.png"},
        )
        for i in range(20)
    ]
    heads = init_heads(32, hidden=16, seed=7)
    return build_index(records, heads, kernel)


@pytest.fixture()
def embedder32():
    return FixtureEmbedder(32)
