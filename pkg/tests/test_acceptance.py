"""Acceptance suite: one test per release criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS line
and runtime printed per criterion. Each criterion checks the engine
against an independent oracle (brute-force scoring, finite differences,
longdouble loss recomputation) or a hard property, at fixed tolerances.
"""

import itertools
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from fastapi.testclient import TestClient

from helpers import (
    big_base64_payload,
    oracle_rank,
    random_corpus,
    random_spec_and_vectors,
    svg_fixture_corpus,
)

from facetsearch.alignment import (
    TrainConfig,
    batch_loss,
    caption_to_image_recall_at_1,
    gradient_check,
    make_synthetic_alignment_set,
    train_heads,
)
from facetsearch.core import (
    EMBEDDING_FACETS,
    ChartType,
    CorpusRecord,
    FacetId,
    IntentSpec,
    normalize,
    validate_intent_spec,
)
from facetsearch.embedder import FixtureEmbedder
from facetsearch.evalharness import RoundRecord, dcrr_at_10, mrr_at_10, recall_at_k
from facetsearch.heads import FacetHeads, HeadParams, init_heads
from facetsearch.index import build_index
from facetsearch.intent import (
    BackendUnavailableError,
    ParserConfig,
    parse_query,
    parse_query_fallback,
)
from facetsearch.kernel import KernelTable, chart_type_similarity, default_kernel_table
from facetsearch.scoring import rank_corpus
from facetsearch.service import ServiceConfig, create_app
from facetsearch.svgedit import canonicalize, show_full_svg, stitch_back, summarize
from facetsearch.svgedit.adapter import parse_document
from facetsearch.svgedit.canonical import canonicalize_element


@contextmanager
def criterion(name: str, budget_seconds: float | None = None):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    elapsed = time.monotonic() - start
    if budget_seconds is not None:
        assert elapsed < budget_seconds, (
            f"{name} took {elapsed:.1f}s, budget {budget_seconds}s"
        )
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.1f}s)")


def test_ranking_oracle_equivalence():
    """>= 20 seeded corpora x >= 50 seeded specs: scores within 1e-9 of the
    brute-force scorer, ordering exactly equal. Budget 60 s."""
    with criterion("ranking-oracle-equivalence", budget_seconds=60.0):
        kernel = default_kernel_table()
        rng = np.random.default_rng(2024)
        corpora = 20
        specs_per_corpus = 50
        for corpus_index in range(corpora):
            dimension = int(rng.choice([8, 16, 32, 64]))
            size = int(rng.integers(50, 501))
            records = random_corpus(
                rng, size, dimension, duplicate_fraction=0.04
            )
            heads = init_heads(dimension, hidden=16, seed=corpus_index)
            snapshot = build_index(records, heads, kernel)
            for _ in range(specs_per_corpus):
                spec, vectors = random_spec_and_vectors(rng, dimension)
                expected = oracle_rank(spec, vectors, snapshot.records, kernel)
                got = rank_corpus(spec, vectors, snapshot, k=len(snapshot))
                assert [r.record_id for r in got] == [rid for rid, _ in expected]
                for result, (_, score) in zip(got, expected):
                    assert abs(result.total_score - score) < 1e-9


def test_chart_kernel_golden_and_exhaustive():
    """Golden kernel values reproduce exactly; monotonicity and
    exact-match dominance hold over all type-set pairs with |set| <= 3.
    Budget 10 s."""
    with criterion("chart-kernel-golden-exhaustive", budget_seconds=10.0):
        kernel = default_kernel_table()
        bar, pie = ChartType.BAR_CHART, ChartType.PIE_CHART
        area, line = ChartType.AREA_CHART, ChartType.LINE_CHART
        assert chart_type_similarity({bar}, {bar, pie}, kernel) == 1.0
        assert chart_type_similarity({bar, pie}, {pie}, KernelTable()) == 0.5
        assert chart_type_similarity({area}, {line}, kernel) == 0.6

        types = list(ChartType)
        all_sets = [
            frozenset(combo)
            for n in (1, 2, 3)
            for combo in itertools.combinations(types, n)
        ]
        set_index = {s: i for i, s in enumerate(all_sets)}

        # score matrix from the production function itself
        scores = np.empty((len(all_sets), len(all_sets)))
        for qi, q in enumerate(all_sets):
            for xi, x in enumerate(all_sets):
                scores[qi, xi] = chart_type_similarity(q, x, kernel)

        assert float(scores.min()) >= 0.0 and float(scores.max()) <= 1.0

        # exact-match dominance: q subset of x implies score 1
        for x in all_sets:
            for n in range(1, len(x) + 1):
                for q_tuple in itertools.combinations(sorted(x, key=lambda t: t.value), n):
                    q = frozenset(q_tuple)
                    assert scores[set_index[q], set_index[x]] == 1.0

        # monotonicity: growing x never lowers any query's score
        for x in all_sets:
            xi = set_index[x]
            if len(x) == 3:
                continue
            for t in types:
                if t in x:
                    continue
                bigger = x | {t}
                bi = set_index[bigger]
                assert np.all(scores[:, bi] >= scores[:, xi] - 0.0)


def test_metric_golden_values_and_properties():
    """Hand-derived metric values reproduce exactly; ordering properties
    hold under 10,000 random rank lists."""
    with criterion("metric-golden-and-properties"):
        assert recall_at_k([1, 3, 7], 5) == 2 / 3
        assert recall_at_k([1, 1, 1], 1) == 1.0
        assert recall_at_k([None, None, None], 5) == 0.0
        assert mrr_at_10([4]) == 0.25
        assert mrr_at_10([12]) == 0.0
        assert mrr_at_10([1, 2]) == 0.75
        assert dcrr_at_10([RoundRecord(1, 1)]) == 1.0
        assert abs(dcrr_at_10([RoundRecord(1, None), RoundRecord(2, 2)], 0.9) - 0.45) < 1e-12
        assert abs(dcrr_at_10([RoundRecord(1, 5), RoundRecord(2, 1)], 0.9) - 1.1) < 1e-12

        rng = np.random.default_rng(31337)
        for _ in range(10_000):
            length = int(rng.integers(1, 40))
            ranks = [
                None if rng.random() < 0.25 else int(rng.integers(1, 400))
                for _ in range(length)
            ]
            r1 = recall_at_k(ranks, 1)
            r5 = recall_at_k(ranks, 5)
            mrr = mrr_at_10(ranks)
            assert 0.0 <= r1 <= r5 <= 1.0
            assert mrr >= r1
            assert 0.0 <= mrr <= 1.0


def test_gradient_check():
    """Analytic gradients vs central finite differences (step 1e-5):
    max relative error < 1e-4 over >= 10 random small configs. Budget 30 s."""
    with criterion("gradient-check", budget_seconds=30.0):
        reports = gradient_check(configs=10, seed=99, step=1e-5)
        assert len(reports) >= 10
        for report in reports:
            assert report["max_rel_error"] < 1e-4, report


def test_loss_golden_values():
    """batch-of-1 loss exactly 0; equal-logit batch-of-2 = 16 ln 2 within
    1e-9; seeded batch matches the longdouble oracle within 1e-9."""
    with criterion("loss-golden-values"):
        heads = init_heads(8, hidden=4, seed=0)
        single = make_synthetic_alignment_set(1, 2, 8, seed=11)
        assert batch_loss(single, heads, 0.07) == 0.0

        e1 = np.zeros(8)
        e1[0] = 1.0
        constant = FacetHeads(
            dimension=8,
            hidden=4,
            params={
                f: HeadParams(np.zeros((8, 4)), np.zeros(4), np.zeros((4, 8)), e1.copy())
                for f in EMBEDDING_FACETS
            },
        )
        pair = make_synthetic_alignment_set(2, 2, 8, seed=12)
        assert abs(batch_loss(pair, constant, 0.07) - 16.0 * math.log(2.0)) < 1e-9

        batch = make_synthetic_alignment_set(8, 3, 16, seed=13)
        trained = init_heads(16, hidden=8, seed=14)
        fast = batch_loss(batch, trained, 0.07)

        # independent high-precision oracle, no log-sum-exp shift
        base = np.stack([ex.base_image_embedding for ex in batch])
        projections = trained.project(base)
        slow = np.longdouble(0.0)
        for facet in EMBEDDING_FACETS:
            e = projections[facet].astype(np.longdouble)
            for i, ex in enumerate(batch):
                for cap in ex.caption_text_embeddings[facet]:
                    c = cap.astype(np.longdouble)
                    num = np.exp(np.dot(c, e[i]) / np.longdouble(0.07))
                    den = sum(
                        np.exp(np.dot(c, e[j]) / np.longdouble(0.07))
                        for j in range(len(batch))
                    )
                    slow += -np.log(num / den)
        assert abs(fast - float(slow)) < 1e-9


def test_training_effectiveness():
    """Trained heads beat the untrained initialization on per-facet
    caption-to-image R@1 for all four facets; epoch-mean loss strictly
    decreases over the first 5 epochs. Budget 120 s."""
    with criterion("training-effectiveness", budget_seconds=120.0):
        dataset = make_synthetic_alignment_set(64, 4, 32, seed=2025)
        cfg = TrainConfig(epochs=25, seed=2025)
        initial = init_heads(32, hidden=cfg.hidden, seed=cfg.seed)
        before = caption_to_image_recall_at_1(dataset, initial)
        trained, log = train_heads(dataset, cfg, initial=initial)
        after = caption_to_image_recall_at_1(dataset, trained)
        for facet in EMBEDDING_FACETS:
            assert after[facet] > before[facet], (
                f"{facet.value}: {after[facet]} <= {before[facet]}"
            )
        first_five = log.epoch_mean_loss[:5]
        assert len(first_five) == 5
        for earlier, later in zip(first_five, first_five[1:]):
            assert later < earlier


def test_ranking_scale_invariance():
    """1,000 random (spec, corpus) cases: scaling all weights by random
    c > 0 leaves the returned ordering (ties included) bit-identical."""
    with criterion("ranking-scale-invariance"):
        kernel = default_kernel_table()
        rng = np.random.default_rng(404)
        snapshots = []
        for i in range(10):
            records = random_corpus(
                rng, int(rng.integers(40, 140)), 16, duplicate_fraction=0.1
            )
            heads = init_heads(16, hidden=8, seed=1000 + i)
            snapshots.append(build_index(records, heads, kernel))
        for case in range(1000):
            snapshot = snapshots[case % len(snapshots)]
            spec, vectors = random_spec_and_vectors(rng, 16)
            scale = float(rng.uniform(1e-3, 1e3))
            scaled = IntentSpec(
                rewrites=dict(spec.rewrites),
                chart_types=spec.chart_types,
                weights={f: scale * w for f, w in spec.weights.items()},
            )
            base = rank_corpus(spec, vectors, snapshot, k=len(snapshot))
            rescored = rank_corpus(scaled, vectors, snapshot, k=len(snapshot))
            assert [r.record_id for r in base] == [r.record_id for r in rescored]


def _data_uris(text: str) -> list[str]:
    import re

    return sorted(re.findall(r"data:[^\"')]+", text))


def test_svg_round_trip_corpus():
    """Summarize -> show -> stitch with unmodified snippets is canonical
    identity with byte-identical payloads over >= 20 fixtures; targeted
    single-attribute edits change only the targeted subtree."""
    with criterion("svg-round-trip"):
        corpus = svg_fixture_corpus()
        assert len(corpus) >= 20

        payload = big_base64_payload()
        assert len(payload) >= 10_000
        assert any(payload in svg for svg in corpus)

        def max_depth(svg):
            tree, _ = summarize(svg, granularity="all")
            return max(node.depth for node in tree.iter_nodes())

        assert any(max_depth(svg) >= 6 for svg in corpus)

        for svg in corpus:
            _tree, vault = summarize(svg)
            snippet = show_full_svg(svg, "0", vault)
            out = stitch_back(svg, {"0": snippet.code}, vault)
            assert canonicalize(out) == canonicalize(svg)
            assert _data_uris(out) == _data_uris(svg)

        # targeted single-attribute edit stays localized under canonical diff
        ns = 'xmlns="http://www.w3.org/2000/svg"'
        doc = (
            f'<svg {ns}><g id="left"><rect width="10" height="3"/></g>'
            f'<g id="right"><circle r="5"/></g></svg>'
        )
        _tree, vault = summarize(doc, granularity="all")
        snippet = show_full_svg(doc, "0.0.0", vault)
        out = stitch_back(doc, {"0.0.0": snippet.code.replace('width="10"', 'width="20"')}, vault)

        def node_map(text):
            parsed = parse_document(text)
            collected = {}

            def walk(element, path):
                collected[path] = canonicalize_element(element)
                children = [
                    c for c in element.childNodes if c.nodeType == c.ELEMENT_NODE
                ]
                for index, child in enumerate(children):
                    walk(child, f"{path}.{index}")

            walk(parsed.documentElement, "0")
            parsed.unlink()
            return collected

        before, after = node_map(doc), node_map(out)
        assert set(before) == set(after)
        changed = {path for path in before if before[path] != after[path]}
        assert changed == {"0", "0.0", "0.0.0"}  # the target and its ancestors


def test_parser_robustness():
    """Mocked backend emitting k invalid outputs then one valid: parse
    succeeds iff k < max_retries and records exactly k+1 attempts. The
    fallback parser is deterministic over 1,000 runs and always yields a
    spec that passes strict validation."""
    with criterion("parser-robustness"):
        valid_output = json.dumps(
            {
                "rewrites": {
                    "content": "screen time by age",
                    "layout": None,
                    "illustration": None,
                    "style": None,
                },
                "chart_types": ["Bar Chart"],
                "weights": {
                    "content": 0.6,
                    "chart_type": 0.4,
                    "layout": 0,
                    "illustration": 0,
                    "style": 0,
                },
            }
        )
        max_retries = 3
        for k in range(0, max_retries + 2):
            calls = {"n": 0}

            def backend(prompt):
                calls["n"] += 1
                return "garbage {{{" if calls["n"] <= k else valid_output

            cfg = ParserConfig(max_retries=max_retries, fallback_enabled=False)
            if k < max_retries:
                spec, trace = parse_query("q", cfg, llm_call=backend)
                assert len(trace.attempts) == k + 1
                assert trace.attempts[-1].validation_outcome == "ok"
                assert spec.chart_types == frozenset({ChartType.BAR_CHART})
            else:
                with pytest.raises(BackendUnavailableError):
                    parse_query("q", cfg, llm_call=backend)

        query = "editorial rose chart with dense annotations and icons"
        reference = parse_query_fallback(query).to_json()
        for _ in range(1000):
            assert parse_query_fallback(query).to_json() == reference

        rng = np.random.default_rng(7331)
        words = (
            "pie bar chart minimalist radial icons pastel growth share timeline "
            "warm poster grid dense annotations pictograms funnel treemap compare "
            "screen time revenue commute editorial 3d clockwise sections summary"
        ).split()
        for _ in range(250):
            count = int(rng.integers(1, 9))
            query = " ".join(rng.choice(words, size=count))
            spec = parse_query_fallback(query)
            validate_intent_spec(spec)  # strict mode must pass


def test_service_persistence_scripted_session(tmp_path):
    """parse -> search -> edit weights -> commit 2 -> identity stitch ->
    restart -> verify: spec, commits, and version history restore exactly,
    with no external LLM or embedder (fixture/fallback modes only)."""
    with criterion("service-persistence"):
        rng = np.random.default_rng(888)
        dimension = 32
        kernel = default_kernel_table()
        svg_dir = tmp_path / "svgs"
        svg_dir.mkdir()
        ns = 'xmlns="http://www.w3.org/2000/svg"'
        records = []
        types = list(ChartType)
        for i in range(12):
            path = svg_dir / f"ex-{i:02d}.svg"
            path.write_text(
                f'<svg {ns}><g id="marks"><rect width="{i + 2}" height="4"/></g></svg>',
                encoding="utf-8",
            )
            records.append(
                CorpusRecord(
                    id=f"ex-{i:02d}",
                    chart_types=frozenset({types[i % len(types)]}),
                    base_embedding=normalize(rng.standard_normal(dimension)),
                    metadata={"title": f"exemplar {i}", "svg_path": str(path)},
                )
            )
        snapshot = build_index(records, init_heads(dimension, hidden=16, seed=1), kernel)

        sessions_dir = str(tmp_path / "sessions")
        config = ServiceConfig(dimension=dimension, sessions_dir=sessions_dir)
        client = TestClient(create_app(config, snapshot=snapshot))
        sid = "scripted"

        parsed = client.post("/parse", json={"query": "minimalist radial pie chart"})
        assert parsed.status_code == 200
        assert parsed.json()["trace"]["source"] == "fallback"

        search = client.post(
            "/search",
            json={"session_id": sid, "query": "minimalist radial pie chart", "k": 10},
        )
        assert search.status_code == 200

        edited = client.post(
            "/search",
            json={"session_id": sid, "spec_edits": {"weights": {"layout": 3.25}}},
        )
        assert edited.status_code == 200
        edited_spec = edited.json()["spec"]
        assert edited_spec["weights"]["layout"] == 3.25

        committed = client.post(
            f"/sessions/{sid}/commits", json={"record_ids": ["ex-03", "ex-07"]}
        )
        assert committed.status_code == 200

        stitched = client.post(
            f"/sessions/{sid}/svg/ex-03/stitch", json={"edits": {}}
        )
        assert stitched.status_code == 200
        version_1 = stitched.json()["version"]
        original = (svg_dir / "ex-03.svg").read_text(encoding="utf-8")
        assert canonicalize(version_1["svg"]) == canonicalize(original)

        # restart: fresh application over the same session directory
        client2 = TestClient(
            create_app(
                ServiceConfig(dimension=dimension, sessions_dir=sessions_dir),
                snapshot=snapshot,
            )
        )
        restored = client2.get(f"/sessions/{sid}").json()
        assert restored["spec"] == edited_spec
        assert [c["record_id"] for c in restored["committed"]] == ["ex-03", "ex-07"]
        versions = client2.get(f"/sessions/{sid}/svg/ex-03/versions").json()
        assert len(versions["versions"]) == 1
        assert versions["versions"][0]["version"] == version_1["version"]
        assert versions["versions"][0]["svg"] == version_1["svg"]
        assert versions["versions"][0]["created_at"] == version_1["created_at"]

        # searches still reproducible after restart (fixture embedder only)
        replay = client2.post(
            "/search",
            json={"session_id": sid, "spec_edits": {"weights": {"layout": 3.25}}},
        )
        assert replay.json()["results"] == edited.json()["results"]
