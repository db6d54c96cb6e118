"""Text embedder boundary.

The engine never runs an encoder itself: queries are embedded by an
external HTTP service, or by the deterministic fixture embedder used in
tests and offline runs. Facet conditioning is realized as a literal
"<facet>: " text prefix prepended before embedding.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx
import numpy as np

from facetsearch.core import CoreError, normalize


class EmbedderFailureError(CoreError):
    """The embedder returned unusable vectors or kept failing after retries."""


class Embedder(Protocol):
    dimension: int

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Return an (n, dimension) float array, one row per input text."""
        ...


class FixtureEmbedder:
    """Deterministic stand-in embedder: seeded hash of the text, expanded
    to ``dimension`` floats and L2-normalized. Stable across processes and
    platforms, so tests can freeze exact expected vectors."""

    def __init__(self, dimension: int, salt: str = "") -> None:
        self.dimension = dimension
        self.salt = salt

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        rows = [self._expand(t) for t in texts]
        return np.stack(rows) if rows else np.zeros((0, self.dimension))

    def _expand(self, text: str) -> np.ndarray:
        out = np.empty(self.dimension, dtype=np.float64)
        filled = 0
        counter = 0
        while filled < self.dimension:
            digest = hashlib.sha256(
                f"{self.salt}\x00{text}\x00{counter}".encode()
            ).digest()
            for (value,) in struct.iter_unpack(">Q", digest):
                if filled >= self.dimension:
                    break
                out[filled] = value / 2.0**64 - 0.5
                filled += 1
            counter += 1
        return normalize(out)


class HttpEmbedder:
    """Client for an embedding endpoint: POST {"texts": [...]} and read
    back {"vectors": [[...], ...]}. Retries transport errors."""

    def __init__(
        self,
        endpoint: str,
        dimension: int,
        max_retries: int = 3,
        timeout: float = 30.0,
        client: httpx.Client | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.dimension = dimension
        self.max_retries = max_retries
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        last_error: Exception | None = None
        for _ in range(self.max_retries):
            try:
                response = self._client.post(self.endpoint, json={"texts": list(texts)})
                response.raise_for_status()
                vectors = response.json()["vectors"]
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                continue
            arr = np.asarray(vectors, dtype=np.float64)
            if arr.shape != (len(texts), self.dimension) or not np.all(np.isfinite(arr)):
                raise EmbedderFailureError(
                    f"embedder returned shape {arr.shape}, expected ({len(texts)}, {self.dimension})"
                )
            return arr
        raise EmbedderFailureError(f"embedder unreachable after {self.max_retries} attempts: {last_error}")


@dataclass
class EmbedderConfig:
    mode: str = "fixture"  # fixture | external
    dimension: int = 512
    endpoint: str | None = None
    max_retries: int = 3
    timeout: float = 30.0


def make_embedder(cfg: EmbedderConfig) -> Embedder:
    if cfg.mode == "fixture":
        return FixtureEmbedder(cfg.dimension)
    if cfg.mode == "external":
        if not cfg.endpoint:
            raise EmbedderFailureError("external embedder requires an endpoint")
        return HttpEmbedder(
            cfg.endpoint, cfg.dimension, max_retries=cfg.max_retries, timeout=cfg.timeout
        )
    raise EmbedderFailureError(f"unknown embedder mode: {cfg.mode!r}")
