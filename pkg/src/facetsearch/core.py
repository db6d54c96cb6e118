"""Core domain types shared by every other module.

An infographic search intent is decomposed into five facets: what the
graphic should say (content), the chart form encoding the data (chart
type), the spatial composition (layout), the use of icons and imagery
(illustration), and the overall aesthetic (style). Chart type is a
discrete multi-choice facet over a closed pool of 13 types; the other
four are open-vocabulary and carried as short text rewrites.

A parsed query is an :class:`IntentSpec`: per-facet rewrites, an optional
chart-type set, and a non-negative weight per facet. The convention
throughout is that an unspecified facet has weight zero and, on the
embedding side, is represented by an explicit all-zero vector so scoring
code never branches on absence.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

DEFAULT_DIMENSION = 512

#: Tolerance for accepting a vector as unit-norm.
UNIT_NORM_TOLERANCE = 1e-6

#: Norms below this are treated as the zero vector (not normalizable).
ZERO_NORM_THRESHOLD = 1e-12


class CoreError(Exception):
    """Base class for domain-level errors raised by this package."""


class SpecValidationError(CoreError):
    """An IntentSpec violates one of its invariants."""


class NegativeWeightError(SpecValidationError):
    pass


class WeightOnAbsentFacetError(SpecValidationError):
    pass


class UnknownChartTypeError(SpecValidationError):
    pass


class AllWeightsZeroError(SpecValidationError):
    pass


class ZeroVectorError(CoreError):
    """Attempted to normalize a (near-)zero vector."""


class DimensionMismatchError(CoreError):
    pass


class FacetId(str, enum.Enum):
    """The five facets of infographic search intent."""

    CONTENT = "content"
    CHART_TYPE = "chart_type"
    LAYOUT = "layout"
    ILLUSTRATION = "illustration"
    STYLE = "style"

    @classmethod
    def parse(cls, name: str) -> "FacetId":
        key = name.strip().lower().replace(" ", "_").replace("-", "_")
        for member in cls:
            if member.value == key:
                return member
        raise SpecValidationError(f"unknown facet name: {name!r}")

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: The four facets scored through embeddings; chart type is discrete.
EMBEDDING_FACETS: tuple[FacetId, ...] = (
    FacetId.CONTENT,
    FacetId.LAYOUT,
    FacetId.ILLUSTRATION,
    FacetId.STYLE,
)

#: Canonical facet order used for serialization and prompts.
ALL_FACETS: tuple[FacetId, ...] = (
    FacetId.CONTENT,
    FacetId.CHART_TYPE,
    FacetId.LAYOUT,
    FacetId.ILLUSTRATION,
    FacetId.STYLE,
)


class ChartType(str, enum.Enum):
    """Closed pool of 13 coarse chart types."""

    BAR_CHART = "Bar Chart"
    LINE_CHART = "Line Chart"
    AREA_CHART = "Area Chart"
    RADAR_CHART = "Radar Chart"
    PIE_CHART = "Pie Chart"
    SCATTERPLOT = "Scatterplot"
    GAUGE_CHART = "Gauge Chart"
    TREEMAP = "Treemap"
    DIAGRAM = "Diagram"
    HISTOGRAM = "Histogram"
    RANGE_CHART = "Range Chart"
    FUNNEL_CHART = "Funnel Chart"
    PYRAMID_CHART = "Pyramid Chart"

    @classmethod
    def parse(cls, name: str) -> "ChartType":
        """Parse a canonical chart-type name, case-insensitively."""
        key = " ".join(name.split()).lower()
        member = _CHART_TYPE_BY_KEY.get(key)
        if member is None:
            raise UnknownChartTypeError(f"unknown chart type: {name!r}")
        return member

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


_CHART_TYPE_BY_KEY: dict[str, ChartType] = {t.value.lower(): t for t in ChartType}


def normalize(v: np.ndarray) -> np.ndarray:
    """Return ``v / ||v||_2`` as float64.

    Raises :class:`ZeroVectorError` when the norm falls below
    ``ZERO_NORM_THRESHOLD``; absent facets must be represented upstream
    by :func:`zero_vector`, never normalized.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ZeroVectorError("vector has non-finite components")
    norm = float(np.linalg.norm(v))
    if norm < ZERO_NORM_THRESHOLD:
        raise ZeroVectorError("cannot normalize a zero vector")
    return v / norm


def zero_vector(dimension: int) -> np.ndarray:
    """The designated embedding for an absent facet."""
    return np.zeros(dimension, dtype=np.float64)


def is_zero_embedding(v: np.ndarray) -> bool:
    return bool(np.all(v == 0.0))


def check_embedding(v: np.ndarray, dimension: int) -> np.ndarray:
    """Validate that ``v`` is unit-norm or the designated zero vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (dimension,):
        raise DimensionMismatchError(
            f"expected dimension {dimension}, got shape {v.shape}"
        )
    if is_zero_embedding(v):
        return v
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
        raise ZeroVectorError(f"vector is neither unit-norm nor zero (norm={norm})")
    return v


@dataclass(frozen=True)
class IntentSpec:
    """A parsed query: facet rewrites, chart-type set, and facet weights.

    ``rewrites`` holds text only for the four embedding facets; a missing
    key encodes an unspecified facet. ``weights`` may omit facets, which
    reads as weight zero.
    """

    rewrites: Mapping[FacetId, str] = field(default_factory=dict)
    chart_types: frozenset[ChartType] = field(default_factory=frozenset)
    weights: Mapping[FacetId, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: dict[FacetId, str] = {}
        for facet, text in dict(self.rewrites).items():
            if not isinstance(facet, FacetId):
                facet = FacetId.parse(str(facet))
            if facet not in EMBEDDING_FACETS:
                raise SpecValidationError(
                    f"rewrite not allowed for facet {facet.value!r}"
                )
            if text is None:
                continue
            text = str(text).strip()
            if text:
                cleaned[facet] = text
        object.__setattr__(self, "rewrites", cleaned)
        object.__setattr__(self, "chart_types", frozenset(self.chart_types))
        normalized = {f: 0.0 for f in ALL_FACETS}
        for f, w in dict(self.weights).items():
            normalized[FacetId(f)] = float(w)
        object.__setattr__(self, "weights", normalized)

    def rewrite(self, facet: FacetId) -> str | None:
        return self.rewrites.get(facet)

    def weight(self, facet: FacetId) -> float:
        return self.weights.get(facet, 0.0)

    def facet_present(self, facet: FacetId) -> bool:
        """Whether the facet is specified (rewrite text / non-empty type set)."""
        if facet == FacetId.CHART_TYPE:
            return bool(self.chart_types)
        return facet in self.rewrites

    def active_facets(self) -> list[FacetId]:
        """Facets with a strictly positive weight, in canonical order."""
        return [f for f in ALL_FACETS if self.weight(f) > 0.0]

    def to_dict(self) -> dict[str, Any]:
        """Canonical JSON-ready form (the schema the parser retries against)."""
        return {
            "rewrites": {
                f.value: self.rewrites.get(f) for f in EMBEDDING_FACETS
            },
            "chart_types": sorted(t.value for t in self.chart_types),
            "weights": {f.value: self.weight(f) for f in ALL_FACETS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "IntentSpec":
        if not isinstance(obj, Mapping):
            raise SpecValidationError("intent spec must be a JSON object")
        unknown = set(obj) - {"rewrites", "chart_types", "weights"}
        if unknown:
            raise SpecValidationError(f"unexpected keys: {sorted(unknown)}")

        raw_rewrites = obj.get("rewrites") or {}
        if not isinstance(raw_rewrites, Mapping):
            raise SpecValidationError("'rewrites' must be an object")
        rewrites: dict[FacetId, str] = {}
        for name, text in raw_rewrites.items():
            facet = FacetId.parse(str(name))
            if facet == FacetId.CHART_TYPE:
                raise SpecValidationError("chart_type takes no rewrite text")
            if text is None:
                continue
            if not isinstance(text, str):
                raise SpecValidationError(f"rewrite for {facet.value!r} must be text")
            rewrites[facet] = text

        raw_types = obj.get("chart_types") or []
        if isinstance(raw_types, (str, bytes)) or not isinstance(raw_types, Iterable):
            raise SpecValidationError("'chart_types' must be a list of names")
        chart_types = frozenset(ChartType.parse(str(t)) for t in raw_types)

        raw_weights = obj.get("weights") or {}
        if not isinstance(raw_weights, Mapping):
            raise SpecValidationError("'weights' must be an object")
        weights: dict[FacetId, float] = {}
        for name, value in raw_weights.items():
            facet = FacetId.parse(str(name))
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SpecValidationError(f"weight for {facet.value!r} must be a number")
            weights[facet] = float(value)

        return cls(rewrites=rewrites, chart_types=chart_types, weights=weights)

    @classmethod
    def from_json(cls, text: str) -> "IntentSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecValidationError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(obj)


def validate_intent_spec(
    spec: IntentSpec, *, coerce: bool = False
) -> tuple[IntentSpec, list[str]]:
    """Check IntentSpec invariants; return the (possibly adjusted) spec.

    In strict mode (default) a positive weight on an unspecified facet is
    an error. With ``coerce=True`` such weights are reset to zero and the
    adjustment is reported in the returned notes list, which suits noisy
    parser backends.

    Raises: NegativeWeightError, WeightOnAbsentFacetError,
    UnknownChartTypeError, AllWeightsZeroError.
    """
    notes: list[str] = []

    for t in spec.chart_types:
        if not isinstance(t, ChartType):
            raise UnknownChartTypeError(f"unknown chart type: {t!r}")

    weights = dict(spec.weights)
    for facet, w in weights.items():
        if not math.isfinite(w) or w < 0.0:
            raise NegativeWeightError(
                f"weight for {facet.value!r} must be a finite non-negative number, got {w}"
            )

    changed = False
    for facet in ALL_FACETS:
        w = weights.get(facet, 0.0)
        if w > 0.0 and not spec.facet_present(facet):
            if not coerce:
                raise WeightOnAbsentFacetError(
                    f"facet {facet.value!r} has weight {w} but is unspecified"
                )
            weights[facet] = 0.0
            changed = True
            notes.append(f"weight for unspecified facet {facet.value!r} coerced to 0")

    if all(weights.get(f, 0.0) == 0.0 for f in ALL_FACETS):
        raise AllWeightsZeroError("all facet weights are zero")

    if changed:
        spec = IntentSpec(
            rewrites=dict(spec.rewrites),
            chart_types=spec.chart_types,
            weights=weights,
        )
    return spec, notes


@dataclass(frozen=True, eq=False)
class CorpusRecord:
    """One exemplar infographic in the searchable corpus.

    Equality is identity-based: embedding arrays make field-wise
    comparison ill-defined, and records are deduplicated by id anyway.
    """

    id: str
    chart_types: frozenset[ChartType]
    base_embedding: np.ndarray
    facet_embeddings: Mapping[FacetId, np.ndarray] = field(default_factory=dict)
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise CoreError("record id must be non-empty")
        object.__setattr__(self, "chart_types", frozenset(self.chart_types))
        if not self.chart_types:
            raise CoreError(f"record {self.id!r} has an empty chart-type set")
        base = np.asarray(self.base_embedding, dtype=np.float64)
        object.__setattr__(self, "base_embedding", base)
        object.__setattr__(self, "facet_embeddings", dict(self.facet_embeddings))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def dimension(self) -> int:
        return int(self.base_embedding.shape[0])

    def to_dict(self) -> dict[str, Any]:
        """Ingestion JSON form; facet embeddings are index-time artifacts."""
        return {
            "id": self.id,
            "chart_types": sorted(t.value for t in self.chart_types),
            "base_embedding": [float(x) for x in self.base_embedding],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "CorpusRecord":
        try:
            rid = str(obj["id"])
            raw_types = obj["chart_types"]
            base = obj["base_embedding"]
        except KeyError as exc:
            raise CoreError(f"corpus record missing field {exc}") from exc
        chart_types = frozenset(ChartType.parse(str(t)) for t in raw_types)
        metadata = {str(k): str(v) for k, v in (obj.get("metadata") or {}).items()}
        return cls(
            id=rid,
            chart_types=chart_types,
            base_embedding=np.asarray(base, dtype=np.float64),
            metadata=metadata,
        )


@dataclass(frozen=True)
class RankedResult:
    """A scored exemplar: fused total plus the per-facet breakdown."""

    record_id: str
    total_score: float
    facet_scores: Mapping[FacetId, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "facet_scores", {FacetId(f): float(s) for f, s in dict(self.facet_scores).items()}
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "total_score": self.total_score,
            "facet_scores": {f.value: s for f, s in self.facet_scores.items()},
        }


#: Human-oriented description of the canonical IntentSpec JSON schema,
#: embedded in parser prompts and docs.
INTENT_SPEC_SCHEMA_TEXT = json.dumps(
    {
        "rewrites": {
            "content": "string or null",
            "layout": "string or null",
            "illustration": "string or null",
            "style": "string or null",
        },
        "chart_types": ["zero or more canonical chart-type names"],
        "weights": {
            "content": "number >= 0",
            "chart_type": "number >= 0",
            "layout": "number >= 0",
            "illustration": "number >= 0",
            "style": "number >= 0",
        },
    },
    indent=2,
)
