import math

import numpy as np
import pytest

from facetsearch.alignment import (
    AlignmentExample,
    NonFiniteLossError,
    TrainConfig,
    batch_gradient,
    batch_loss,
    caption_to_image_recall_at_1,
    finite_difference_gradient,
    gradient_check,
    make_synthetic_alignment_set,
    read_alignment_jsonl,
    train_heads,
    write_alignment_jsonl,
)
from facetsearch.core import EMBEDDING_FACETS, CoreError, normalize
from facetsearch.heads import FacetHeads, HeadParams, init_heads


def constant_heads(d=8, h=4):
    """Heads mapping every input to the first basis vector."""
    e1 = np.zeros(d)
    e1[0] = 1.0
    params = {
        f: HeadParams(np.zeros((d, h)), np.zeros(h), np.zeros((h, d)), e1.copy())
        for f in EMBEDDING_FACETS
    }
    return FacetHeads(dimension=d, hidden=h, params=params)


def oracle_loss_longdouble(batch, heads, tau):
    """Straightforward high-precision re-implementation without LSE."""
    base = np.stack([ex.base_image_embedding for ex in batch])
    projections = heads.project(base)
    total = np.longdouble(0.0)
    for facet in EMBEDDING_FACETS:
        e = projections[facet].astype(np.longdouble)
        for i, ex in enumerate(batch):
            for cap in ex.caption_text_embeddings[facet]:
                c = cap.astype(np.longdouble)
                numerator = np.exp(np.dot(c, e[i]) / np.longdouble(tau))
                denominator = np.longdouble(0.0)
                for j in range(len(batch)):
                    denominator += np.exp(np.dot(c, e[j]) / np.longdouble(tau))
                total += -np.log(numerator / denominator)
    return float(total)


class TestBatchLoss:
    def test_batch_of_one_is_exactly_zero(self):
        batch = make_synthetic_alignment_set(1, 2, 8, seed=1)
        heads = init_heads(8, hidden=4, seed=0)
        assert batch_loss(batch, heads, 0.07) == 0.0

    def test_equal_logits_batch_of_two(self):
        batch = make_synthetic_alignment_set(2, 2, 8, seed=2)
        value = batch_loss(batch, constant_heads(), 0.07)
        assert abs(value - 16.0 * math.log(2.0)) < 1e-9

    def test_matches_high_precision_oracle(self):
        batch = make_synthetic_alignment_set(8, 3, 16, seed=3)
        heads = init_heads(16, hidden=8, seed=4)
        fast = batch_loss(batch, heads, 0.07)
        slow = oracle_loss_longdouble(batch, heads, 0.07)
        assert abs(fast - slow) < 1e-9

    def test_permutation_invariance(self):
        batch = make_synthetic_alignment_set(6, 2, 8, seed=5)
        heads = init_heads(8, hidden=4, seed=6)
        reference = batch_loss(batch, heads, 0.1)
        rng = np.random.default_rng(0)
        for _ in range(5):
            order = rng.permutation(len(batch))
            shuffled = [batch[i] for i in order]
            assert batch_loss(shuffled, heads, 0.1) == pytest.approx(
                reference, abs=1e-9
            )

    def test_uniform_logits_value_is_tau_independent(self):
        batch = make_synthetic_alignment_set(5, 2, 8, seed=7)
        expected = 5 * 4 * 2 * math.log(5)
        for tau in (0.05, 0.07, 0.5, 1.0):
            assert batch_loss(batch, constant_heads(), tau) == pytest.approx(
                expected, abs=1e-9
            )

    def test_positive_for_distinct_images(self):
        batch = make_synthetic_alignment_set(4, 2, 8, seed=8)
        heads = init_heads(8, hidden=4, seed=9)
        assert batch_loss(batch, heads, 0.07) > 0.0

    def test_duplicate_image_terms_count_twice(self):
        batch = make_synthetic_alignment_set(2, 2, 8, seed=10)
        doubled = batch + [batch[1]]
        heads = init_heads(8, hidden=4, seed=11)
        value = batch_loss(doubled, heads, 0.07)
        oracle = oracle_loss_longdouble(doubled, heads, 0.07)
        assert abs(value - oracle) < 1e-9


class TestBatchGradient:
    def test_batch_of_one_gradient_is_zero(self):
        batch = make_synthetic_alignment_set(1, 2, 8, seed=1)
        heads = init_heads(8, hidden=4, seed=0)
        grads = batch_gradient(batch, heads, 0.07)
        for facet in EMBEDDING_FACETS:
            for name in ("w1", "b1", "w2", "b2"):
                assert np.all(getattr(grads[facet], name) == 0.0)

    def test_finite_difference_agreement(self):
        batch = make_synthetic_alignment_set(4, 2, 16, seed=12)
        heads = init_heads(16, hidden=8, seed=13)
        analytic = batch_gradient(batch, heads, 0.07)
        numeric = finite_difference_gradient(batch, heads, 0.07)
        worst = 0.0
        for facet in EMBEDDING_FACETS:
            for name in ("w1", "b1", "w2", "b2"):
                ga = getattr(analytic[facet], name)
                gn = getattr(numeric[facet], name)
                denom = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1e-6)
                worst = max(worst, float(np.max(np.abs(ga - gn) / denom)))
        assert worst < 1e-4

    def test_gradient_check_suite(self):
        reports = gradient_check(configs=5, seed=1)
        assert all(r["max_rel_error"] < 1e-4 for r in reports)

    def test_duplicated_example_doubles_its_contribution(self):
        # With a shared denominator, the outer sum over images is linear:
        # duplicating an image duplicates exactly its per-image terms.
        batch = make_synthetic_alignment_set(3, 2, 8, seed=14)
        heads = init_heads(8, hidden=4, seed=15)
        duplicated = batch + [batch[0]]
        analytic = batch_gradient(duplicated, heads, 0.1)
        numeric = finite_difference_gradient(duplicated, heads, 0.1)
        for facet in EMBEDDING_FACETS:
            for name in ("w1", "b1", "w2", "b2"):
                ga = getattr(analytic[facet], name)
                gn = getattr(numeric[facet], name)
                denom = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1e-6)
                assert float(np.max(np.abs(ga - gn) / denom)) < 1e-4


class TestTrainHeads:
    def test_zero_learning_rate_is_identity(self):
        dataset = make_synthetic_alignment_set(8, 2, 8, seed=16)
        cfg = TrainConfig(batch_size=4, learning_rate=0.0, epochs=3, seed=0, hidden=4)
        initial = init_heads(8, hidden=4, seed=0)
        trained, _log = train_heads(dataset, cfg, initial=initial)
        assert trained.version_hash() == initial.version_hash()

    def test_same_seed_same_heads(self):
        dataset = make_synthetic_alignment_set(16, 2, 8, seed=17)
        cfg = TrainConfig(batch_size=8, epochs=4, seed=5, hidden=4)
        first, _ = train_heads(dataset, cfg)
        second, _ = train_heads(dataset, cfg)
        assert first.version_hash() == second.version_hash()

    def test_loss_decreases_on_synthetic_set(self):
        dataset = make_synthetic_alignment_set(64, 4, 32, seed=18)
        cfg = TrainConfig(epochs=5, seed=18)
        _heads, log = train_heads(dataset, cfg)
        for before, after in zip(log.epoch_mean_loss, log.epoch_mean_loss[1:]):
            assert after < before

    def test_training_improves_recall(self):
        dataset = make_synthetic_alignment_set(64, 4, 32, seed=19)
        cfg = TrainConfig(epochs=25, seed=19)
        initial = init_heads(32, hidden=cfg.hidden, seed=cfg.seed)
        before = caption_to_image_recall_at_1(dataset, initial)
        trained, _ = train_heads(dataset, cfg, initial=initial)
        after = caption_to_image_recall_at_1(dataset, trained)
        for facet in EMBEDDING_FACETS:
            assert after[facet] > before[facet]

    def test_dataset_round_trip(self, tmp_path):
        dataset = make_synthetic_alignment_set(4, 2, 8, seed=20)
        path = tmp_path / "examples.jsonl"
        write_alignment_jsonl(dataset, path)
        loaded = read_alignment_jsonl(path)
        assert len(loaded) == len(dataset)
        for original, back in zip(dataset, loaded):
            assert original.image_id == back.image_id
            assert np.array_equal(
                original.base_image_embedding, back.base_image_embedding
            )
            for facet in EMBEDDING_FACETS:
                for a, b in zip(
                    original.caption_text_embeddings[facet],
                    back.caption_text_embeddings[facet],
                ):
                    assert np.array_equal(a, b)


class TestSyntheticSet:
    def test_deterministic(self):
        a = make_synthetic_alignment_set(8, 4, 16, seed=21)
        b = make_synthetic_alignment_set(8, 4, 16, seed=21)
        for x, y in zip(a, b):
            assert np.array_equal(x.base_image_embedding, y.base_image_embedding)

    def test_zero_noise_captions_equal_cluster_directions(self):
        dataset = make_synthetic_alignment_set(6, 3, 8, seed=22, noise=0.0)
        for facet in EMBEDDING_FACETS:
            captions = {
                tuple(np.round(c, 12))
                for ex in dataset
                for c in ex.caption_text_embeddings[facet]
            }
            assert len(captions) <= 3  # at most one point per cluster
            for ex in dataset:
                c1, c2 = ex.caption_text_embeddings[facet]
                assert np.allclose(c1, c2)

    def test_default_noise_keeps_captions_in_cluster(self):
        # Re-derive centroids by brute force: nearest centroid of every
        # caption must be its own cluster's direction.
        n, k, d, seed = 64, 4, 32, 23
        rng = np.random.default_rng(seed)
        directions = {
            f: np.stack([normalize(rng.standard_normal(d)) for _ in range(k)])
            for f in EMBEDDING_FACETS
        }
        assignments = {f: rng.integers(0, k, size=n) for f in EMBEDDING_FACETS}
        dataset = make_synthetic_alignment_set(n, k, d, seed=seed)
        for facet in EMBEDDING_FACETS:
            for i, ex in enumerate(dataset):
                for cap in ex.caption_text_embeddings[facet]:
                    nearest = int(np.argmax(directions[facet] @ cap))
                    assert nearest == assignments[facet][i]

    def test_needs_two_clusters(self):
        with pytest.raises(CoreError):
            make_synthetic_alignment_set(4, 1, 8, seed=0)


class TestValidation:
    def test_captions_must_come_in_pairs(self):
        base = normalize(np.arange(1.0, 9.0))
        with pytest.raises(CoreError):
            AlignmentExample(
                image_id="x",
                base_image_embedding=base,
                caption_text_embeddings={f: (base,) for f in EMBEDDING_FACETS},
            )

    def test_non_finite_loss_detected(self):
        batch = make_synthetic_alignment_set(2, 2, 8, seed=24)
        heads = init_heads(8, hidden=4, seed=25)
        heads.params[EMBEDDING_FACETS[0]].b2[:] = np.inf  # bypasses init check
        with pytest.raises((NonFiniteLossError, CoreError)):
            batch_loss(batch, heads, 0.07)
