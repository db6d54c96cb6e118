"""Per-facet MLP projection heads over frozen base image embeddings.

Each embedding facet owns a small two-layer net (tanh hidden layer)
mapping the shared base embedding into a facet-specific space, followed
by L2 normalization. Heads are plain float64 numpy arrays so training,
serialization, and version hashing stay exactly reproducible.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from facetsearch.core import (
    EMBEDDING_FACETS,
    CoreError,
    DimensionMismatchError,
    FacetId,
)

DEFAULT_HIDDEN = 256

_FORMAT_VERSION = 1


class DegenerateProjectionError(CoreError):
    """A projection collapsed to (near-)zero norm and cannot be normalized."""


@dataclass
class HeadParams:
    """Parameters of one facet head: x -> w2^T tanh(w1^T x + b1) + b2."""

    w1: np.ndarray  # (d, h)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h, d)
    b2: np.ndarray  # (d,)

    def copy(self) -> "HeadParams":
        return HeadParams(
            self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy()
        )

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.w1, self.b1, self.w2, self.b2)


@dataclass
class FacetHeads:
    """The four facet heads plus the shape/provenance metadata."""

    dimension: int
    hidden: int
    params: dict[FacetId, HeadParams]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if set(self.params) != set(EMBEDDING_FACETS):
            raise CoreError("heads must cover exactly the four embedding facets")
        for facet, p in self.params.items():
            expected = {
                "w1": (self.dimension, self.hidden),
                "b1": (self.hidden,),
                "w2": (self.hidden, self.dimension),
                "b2": (self.dimension,),
            }
            for name, shape in expected.items():
                arr = getattr(p, name)
                if arr.shape != shape:
                    raise DimensionMismatchError(
                        f"{facet.value}.{name}: expected {shape}, got {arr.shape}"
                    )
                if not np.all(np.isfinite(arr)):
                    raise CoreError(f"{facet.value}.{name} contains non-finite values")

    def copy(self) -> "FacetHeads":
        return FacetHeads(
            dimension=self.dimension,
            hidden=self.hidden,
            params={f: p.copy() for f, p in self.params.items()},
            meta=dict(self.meta),
        )

    def version_hash(self) -> str:
        """Content hash of shapes + parameters; stable across processes."""
        digest = hashlib.sha256()
        digest.update(f"v{_FORMAT_VERSION}|d={self.dimension}|h={self.hidden}|tanh".encode())
        for facet in EMBEDDING_FACETS:
            p = self.params[facet]
            for arr in p.arrays():
                digest.update(facet.value.encode())
                digest.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return digest.hexdigest()

    def forward(self, base: np.ndarray) -> dict[FacetId, dict[str, np.ndarray]]:
        """Run all heads over a batch of base embeddings.

        ``base`` has shape (n, d). Per facet returns the tanh activations
        ``a`` (n, h), pre-normalization outputs ``u`` (n, d), row norms
        (n,), and the unit-norm embeddings ``e`` (n, d). Kept around for
        backprop in the alignment trainer.
        """
        base = np.asarray(base, dtype=np.float64)
        if base.ndim != 2 or base.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"expected base of shape (n, {self.dimension}), got {base.shape}"
            )
        out: dict[FacetId, dict[str, np.ndarray]] = {}
        for facet in EMBEDDING_FACETS:
            p = self.params[facet]
            a = np.tanh(base @ p.w1 + p.b1)
            u = a @ p.w2 + p.b2
            norms = np.linalg.norm(u, axis=1)
            if np.any(norms < 1e-12):
                raise DegenerateProjectionError(
                    f"{facet.value} head produced a near-zero projection"
                )
            e = u / norms[:, None]
            out[facet] = {"a": a, "u": u, "norms": norms, "e": e}
        return out

    def project(self, base: np.ndarray) -> dict[FacetId, np.ndarray]:
        """Facet-specific unit-norm embeddings for a batch (n, d) of bases."""
        return {facet: pack["e"] for facet, pack in self.forward(base).items()}

    def save(self, path: str | Path) -> None:
        """Write a self-describing binary file; round-trips bit-exactly."""
        path = Path(path)
        arrays: dict[str, np.ndarray] = {}
        for facet in EMBEDDING_FACETS:
            p = self.params[facet]
            arrays[f"{facet.value}__w1"] = p.w1
            arrays[f"{facet.value}__b1"] = p.b1
            arrays[f"{facet.value}__w2"] = p.w2
            arrays[f"{facet.value}__b2"] = p.b2
        header = {
            "format": _FORMAT_VERSION,
            "dimension": self.dimension,
            "hidden": self.hidden,
            "activation": "tanh",
            "meta": self.meta,
        }
        buf = io.BytesIO()
        np.savez(buf, header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)
        path.write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "FacetHeads":
        path = Path(path)
        with np.load(io.BytesIO(path.read_bytes())) as data:
            header = json.loads(bytes(data["header"]).decode())
            if header.get("format") != _FORMAT_VERSION:
                raise CoreError(f"unsupported heads file format: {header.get('format')}")
            params: dict[FacetId, HeadParams] = {}
            for facet in EMBEDDING_FACETS:
                params[facet] = HeadParams(
                    w1=np.asarray(data[f"{facet.value}__w1"], dtype=np.float64),
                    b1=np.asarray(data[f"{facet.value}__b1"], dtype=np.float64),
                    w2=np.asarray(data[f"{facet.value}__w2"], dtype=np.float64),
                    b2=np.asarray(data[f"{facet.value}__b2"], dtype=np.float64),
                )
        return cls(
            dimension=int(header["dimension"]),
            hidden=int(header["hidden"]),
            params=params,
            meta=dict(header.get("meta") or {}),
        )


def init_heads(
    dimension: int,
    hidden: int = DEFAULT_HIDDEN,
    seed: int = 0,
) -> FacetHeads:
    """Seeded uniform(+-1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    params: dict[FacetId, HeadParams] = {}
    for facet in EMBEDDING_FACETS:
        bound1 = 1.0 / np.sqrt(dimension)
        bound2 = 1.0 / np.sqrt(hidden)
        params[facet] = HeadParams(
            w1=rng.uniform(-bound1, bound1, size=(dimension, hidden)),
            b1=np.zeros(hidden),
            w2=rng.uniform(-bound2, bound2, size=(hidden, dimension)),
            b2=np.zeros(dimension),
        )
    return FacetHeads(
        dimension=dimension,
        hidden=hidden,
        params=params,
        meta={"init": "uniform_fan_in", "seed": seed},
    )
