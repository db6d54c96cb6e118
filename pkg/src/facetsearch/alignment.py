"""Contrastive training of the facet projection heads.

Supervision comes as precomputed text embeddings: two paraphrased
caption embeddings per facet per image (eight texts per image). For each
caption the matching image is the positive and every other image in the
minibatch is a negative, giving the in-batch softmax objective

    L = sum over images x, facets f, caption variants k of
        -log( exp(c_{x,f,k} . e_{x,f} / tau)
              / sum over batch images x' of exp(c_{x,f,k} . e_{x',f} / tau) )

where e_{x,f} is the head projection of the frozen base embedding.
Only the heads are trained; encoders stay external and frozen. All math
runs in float64 with analytic gradients (including the Jacobian of the
L2 normalization), checked against central finite differences in tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from facetsearch.core import (
    EMBEDDING_FACETS,
    CoreError,
    DimensionMismatchError,
    FacetId,
    normalize,
)
from facetsearch.heads import FacetHeads, HeadParams, init_heads


class NonFiniteLossError(CoreError):
    pass


class NonFiniteGradientError(CoreError):
    pass


@dataclass(frozen=True, eq=False)
class AlignmentExample:
    """One training image: frozen base embedding plus 4 facets x 2 caption
    embeddings, all unit-norm and of the shared dimension."""

    image_id: str
    base_image_embedding: np.ndarray
    caption_text_embeddings: Mapping[FacetId, tuple[np.ndarray, np.ndarray]]

    def __post_init__(self) -> None:
        base = np.asarray(self.base_image_embedding, dtype=np.float64)
        object.__setattr__(self, "base_image_embedding", base)
        caps: dict[FacetId, tuple[np.ndarray, np.ndarray]] = {}
        for facet in EMBEDDING_FACETS:
            pair = self.caption_text_embeddings.get(facet)
            if pair is None or len(pair) != 2:
                raise CoreError(
                    f"example {self.image_id!r} needs exactly 2 captions for "
                    f"facet {facet.value!r}"
                )
            caps[facet] = (
                np.asarray(pair[0], dtype=np.float64),
                np.asarray(pair[1], dtype=np.float64),
            )
        object.__setattr__(self, "caption_text_embeddings", caps)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "base_image_embedding": [float(x) for x in self.base_image_embedding],
            "captions": {
                f.value: [[float(x) for x in cap] for cap in pair]
                for f, pair in self.caption_text_embeddings.items()
            },
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "AlignmentExample":
        captions = {
            FacetId.parse(name): (np.asarray(pair[0]), np.asarray(pair[1]))
            for name, pair in obj["captions"].items()
        }
        return cls(
            image_id=str(obj["image_id"]),
            base_image_embedding=np.asarray(obj["base_image_embedding"]),
            caption_text_embeddings=captions,
        )


@dataclass
class TrainConfig:
    batch_size: int = 32
    temperature: float = 0.07
    learning_rate: float = 1e-3
    epochs: int = 10
    seed: int = 0
    momentum: float = 0.9  # 0 gives plain SGD
    hidden: int = 256

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise CoreError("temperature must be positive")
        if self.batch_size < 1:
            raise CoreError("batch size must be >= 1")


GradientDict = dict[FacetId, HeadParams]


def _stack_batch(
    batch: Sequence[AlignmentExample], dimension: int
) -> tuple[np.ndarray, dict[FacetId, np.ndarray]]:
    """Stack bases to (B, d) and captions to (B, 2, d) per facet."""
    if not batch:
        raise CoreError("batch must be non-empty")
    for ex in batch:
        if ex.base_image_embedding.shape != (dimension,):
            raise DimensionMismatchError(
                f"example {ex.image_id!r} has dimension "
                f"{ex.base_image_embedding.shape}, heads expect ({dimension},)"
            )
    base = np.stack([ex.base_image_embedding for ex in batch])
    captions = {
        f: np.stack([np.stack(ex.caption_text_embeddings[f]) for ex in batch])
        for f in EMBEDDING_FACETS
    }
    return base, captions


def batch_loss(
    batch: Sequence[AlignmentExample], heads: FacetHeads, temperature: float
) -> float:
    """Total in-batch contrastive loss (log-sum-exp stabilized)."""
    base, captions = _stack_batch(batch, heads.dimension)
    forward = heads.forward(base)
    total = 0.0
    for facet in EMBEDDING_FACETS:
        e = forward[facet]["e"]  # (B, d)
        c = captions[facet]  # (B, 2, d)
        logits = np.einsum("ikd,jd->ikj", c, e) / temperature  # (B, 2, B)
        shift = logits.max(axis=2, keepdims=True)
        lse = shift[..., 0] + np.log(np.exp(logits - shift).sum(axis=2))
        positives = logits[np.arange(len(batch)), :, np.arange(len(batch))]
        total += float((lse - positives).sum())
    if not math.isfinite(total):
        raise NonFiniteLossError(f"batch loss is {total}")
    return total


def batch_gradient(
    batch: Sequence[AlignmentExample], heads: FacetHeads, temperature: float
) -> GradientDict:
    """Exact analytic gradient of :func:`batch_loss` w.r.t. every head
    parameter, including the Jacobian of the output normalization."""
    base, captions = _stack_batch(batch, heads.dimension)
    forward = heads.forward(base)
    b_count = len(batch)
    grads: GradientDict = {}
    for facet in EMBEDDING_FACETS:
        p = heads.params[facet]
        pack = forward[facet]
        a, u, norms, e = pack["a"], pack["u"], pack["norms"], pack["e"]
        c = captions[facet]  # (B, 2, d)

        logits = np.einsum("ikd,jd->ikj", c, e) / temperature
        shift = logits.max(axis=2, keepdims=True)
        exp = np.exp(logits - shift)
        probs = exp / exp.sum(axis=2, keepdims=True)  # (B, 2, B)

        # dL/dlogits = softmax - onehot(positive); positives sit at j == i.
        dlogits = probs.copy()
        idx = np.arange(b_count)
        dlogits[idx, :, idx] -= 1.0
        # dL/de_j = (1/tau) * sum_{i,k} dlogits[i,k,j] * c[i,k]
        g_e = np.einsum("ikj,ikd->jd", dlogits, c) / temperature  # (B, d)

        # Through e = u / ||u||: de/du = (I - e e^T) / ||u||.
        g_u = (g_e - (g_e * e).sum(axis=1, keepdims=True) * e) / norms[:, None]

        g_w2 = a.T @ g_u
        g_b2 = g_u.sum(axis=0)
        g_a = g_u @ p.w2.T
        g_s = g_a * (1.0 - a * a)  # tanh'
        g_w1 = base.T @ g_s
        g_b1 = g_s.sum(axis=0)

        for name, arr in (("w1", g_w1), ("b1", g_b1), ("w2", g_w2), ("b2", g_b2)):
            if not np.all(np.isfinite(arr)):
                raise NonFiniteGradientError(
                    f"non-finite gradient in {facet.value}.{name}"
                )
        grads[facet] = HeadParams(w1=g_w1, b1=g_b1, w2=g_w2, b2=g_b2)
    return grads


@dataclass
class TrainLog:
    epoch_mean_loss: list[float] = field(default_factory=list)
    batches_per_epoch: int = 0
    config: TrainConfig | None = None


def train_heads(
    dataset: Sequence[AlignmentExample],
    cfg: TrainConfig,
    initial: FacetHeads | None = None,
) -> tuple[FacetHeads, TrainLog]:
    """Seeded shuffled mini-batch SGD (optionally with momentum).

    Deterministic given (dataset order, config, initial heads). The log
    records per-epoch mean loss, normalized per caption term so uneven
    final batches do not skew the curve.
    """
    if not dataset:
        raise CoreError("dataset must be non-empty")
    dimension = dataset[0].base_image_embedding.shape[0]
    heads = (initial or init_heads(dimension, hidden=cfg.hidden, seed=cfg.seed)).copy()
    velocity: GradientDict = {
        f: HeadParams(
            w1=np.zeros_like(heads.params[f].w1),
            b1=np.zeros_like(heads.params[f].b1),
            w2=np.zeros_like(heads.params[f].w2),
            b2=np.zeros_like(heads.params[f].b2),
        )
        for f in EMBEDDING_FACETS
    }

    rng = np.random.default_rng(cfg.seed)
    log = TrainLog(config=cfg)
    n = len(dataset)
    for _epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        epoch_terms = 0
        batch_count = 0
        for start in range(0, n, cfg.batch_size):
            chunk = [dataset[i] for i in order[start : start + cfg.batch_size]]
            try:
                loss = batch_loss(chunk, heads, cfg.temperature)
                grads = batch_gradient(chunk, heads, cfg.temperature)
            except NonFiniteLossError as exc:
                raise NonFiniteLossError(
                    f"epoch {_epoch} batch {batch_count} "
                    f"(first image {chunk[0].image_id!r}): {exc}"
                ) from exc
            for facet in EMBEDDING_FACETS:
                p, g, v = heads.params[facet], grads[facet], velocity[facet]
                for name in ("w1", "b1", "w2", "b2"):
                    vel = getattr(v, name)
                    vel *= cfg.momentum
                    vel += getattr(g, name)
                    getattr(p, name)[...] -= cfg.learning_rate * vel
            epoch_loss += loss
            epoch_terms += len(chunk) * len(EMBEDDING_FACETS) * 2
            batch_count += 1
        log.epoch_mean_loss.append(epoch_loss / epoch_terms)
        log.batches_per_epoch = batch_count

    heads.meta = dict(heads.meta)
    heads.meta.update(
        {
            "trained": True,
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "temperature": cfg.temperature,
            "learning_rate": cfg.learning_rate,
            "momentum": cfg.momentum,
            "seed": cfg.seed,
        }
    )
    return heads, log


def make_synthetic_alignment_set(
    n_images: int,
    n_clusters: int,
    dimension: int,
    seed: int = 0,
    noise: float = 0.1,
) -> list[AlignmentExample]:
    """Desk-scale synthetic supervision with per-facet cluster structure.

    Every facet gets its own random unit cluster directions and its own
    assignment of images to clusters, so a single shared projection
    cannot satisfy all facets at once. The base embedding mixes all four
    assigned directions plus image noise; each caption embedding is the
    image's facet direction plus independent noise.
    """
    if n_clusters < 2:
        raise CoreError("need at least 2 clusters")
    rng = np.random.default_rng(seed)
    directions = {
        f: np.stack([normalize(rng.standard_normal(dimension)) for _ in range(n_clusters)])
        for f in EMBEDDING_FACETS
    }
    assignments = {
        f: rng.integers(0, n_clusters, size=n_images) for f in EMBEDDING_FACETS
    }
    examples: list[AlignmentExample] = []
    for i in range(n_images):
        mix = np.zeros(dimension)
        for f in EMBEDDING_FACETS:
            mix += directions[f][assignments[f][i]]
        base = normalize(mix + noise * rng.standard_normal(dimension))
        captions: dict[FacetId, tuple[np.ndarray, np.ndarray]] = {}
        for f in EMBEDDING_FACETS:
            center = directions[f][assignments[f][i]]
            captions[f] = (
                normalize(center + noise * rng.standard_normal(dimension)),
                normalize(center + noise * rng.standard_normal(dimension)),
            )
        examples.append(
            AlignmentExample(
                image_id=f"img-{i:04d}",
                base_image_embedding=base,
                caption_text_embeddings=captions,
            )
        )
    return examples


def caption_to_image_recall_at_1(
    dataset: Sequence[AlignmentExample], heads: FacetHeads
) -> dict[FacetId, float]:
    """Fraction of captions whose own image ranks first, per facet."""
    base = np.stack([ex.base_image_embedding for ex in dataset])
    projections = heads.project(base)
    recalls: dict[FacetId, float] = {}
    for facet in EMBEDDING_FACETS:
        e = projections[facet]
        hits = 0
        total = 0
        for i, ex in enumerate(dataset):
            for cap in ex.caption_text_embeddings[facet]:
                scores = e @ cap
                if int(np.argmax(scores)) == i:
                    hits += 1
                total += 1
        recalls[facet] = hits / total
    return recalls


def read_alignment_jsonl(path: str | Path) -> list[AlignmentExample]:
    path = Path(path)
    examples = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                examples.append(AlignmentExample.from_dict(json.loads(line)))
    return examples


def write_alignment_jsonl(
    examples: Sequence[AlignmentExample], path: str | Path
) -> int:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_dict()) + "\n")
    return len(examples)


def finite_difference_gradient(
    batch: Sequence[AlignmentExample],
    heads: FacetHeads,
    temperature: float,
    step: float = 1e-5,
) -> GradientDict:
    """Central finite differences over every parameter (test oracle)."""
    work = heads.copy()
    grads: GradientDict = {}
    for facet in EMBEDDING_FACETS:
        out = {}
        for name in ("w1", "b1", "w2", "b2"):
            arr = getattr(work.params[facet], name)
            grad = np.zeros_like(arr)
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for idx in range(flat.size):
                original = flat[idx]
                flat[idx] = original + step
                up = batch_loss(batch, work, temperature)
                flat[idx] = original - step
                down = batch_loss(batch, work, temperature)
                flat[idx] = original
                gflat[idx] = (up - down) / (2.0 * step)
            out[name] = grad
        grads[facet] = HeadParams(**out)
    return grads


def gradient_check(
    configs: int = 10, seed: int = 0, step: float = 1e-5
) -> list[dict]:
    """Run analytic-vs-finite-difference checks on random small setups.

    Returns one report dict per configuration with the max relative
    error across all parameters.
    """
    rng = np.random.default_rng(seed)
    reports = []
    for c in range(configs):
        b = int(rng.choice([2, 4]))
        d = int(rng.choice([8, 16]))
        h = int(rng.choice([4, 8]))
        tau = float(rng.uniform(0.05, 0.5))
        heads = init_heads(d, hidden=h, seed=int(rng.integers(0, 2**31)))
        batch = make_synthetic_alignment_set(
            b, 2, d, seed=int(rng.integers(0, 2**31))
        )
        analytic = batch_gradient(batch, heads, tau)
        numeric = finite_difference_gradient(batch, heads, tau, step=step)
        max_rel = 0.0
        for facet in EMBEDDING_FACETS:
            for name in ("w1", "b1", "w2", "b2"):
                ga = getattr(analytic[facet], name)
                gn = getattr(numeric[facet], name)
                denom = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1e-6)
                max_rel = max(max_rel, float(np.max(np.abs(ga - gn) / denom)))
        reports.append(
            {"config": c, "B": b, "d": d, "h": h, "tau": tau, "max_rel_error": max_rel}
        )
    return reports
