"""Pydantic request/response models for the JSON API."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class SpecModel(BaseModel):
    """Canonical wire form of an intent spec."""

    rewrites: dict[str, str | None]
    chart_types: list[str]
    weights: dict[str, float]


class ParseRequest(BaseModel):
    query: str


class TraceModel(BaseModel):
    source: str
    notes: list[str] = Field(default_factory=list)
    attempts: list[dict[str, str]] = Field(default_factory=list)


class ParseResponse(BaseModel):
    spec: SpecModel
    trace: TraceModel


class SpecEditPayload(BaseModel):
    """Partial spec update: omitted fields are left untouched; a null
    rewrite removes that facet."""

    rewrites: dict[str, str | None] | None = None
    weights: dict[str, float] | None = None
    chart_types: list[str] | None = None


class SearchRequest(BaseModel):
    session_id: str | None = None
    query: str | None = None
    spec_edits: SpecEditPayload | None = None
    k: int | None = None
    hard_filter: bool = False


class ResultModel(BaseModel):
    record_id: str
    total_score: float
    facet_scores: dict[str, float]
    chart_types: list[str]
    metadata: dict[str, str]


class SearchResponse(BaseModel):
    session_id: str | None
    spec: SpecModel
    notes: list[str] = Field(default_factory=list)
    trace: TraceModel | None = None
    results: list[ResultModel]
    k: int
    hard_filter: bool


class CommitRequest(BaseModel):
    record_ids: list[str]


class CommittedItem(BaseModel):
    record_id: str
    metadata: dict[str, str] = Field(default_factory=dict)


class CommitsResponse(BaseModel):
    session_id: str
    committed: list[CommittedItem]


class SessionResponse(BaseModel):
    session_id: str
    spec: SpecModel | None
    committed: list[CommittedItem]
    svg_versions: dict[str, int] = Field(default_factory=dict)
    history_len: int = 0


class AutoSelectRequest(BaseModel):
    k: int = 10


class AutoSelectResponse(BaseModel):
    selected_ids: list[str]
    note: str
    candidates: list[str]


class SummarizeResponse(BaseModel):
    record_id: str
    tree: dict[str, Any]


class ShowRequest(BaseModel):
    node_id: str


class ShowResponse(BaseModel):
    node_id: str
    code: str
    placeholder_tokens: list[str]


class StitchRequest(BaseModel):
    edits: dict[str, str] = Field(default_factory=dict)


class VersionModel(BaseModel):
    version: int
    created_at: str
    svg: str


class StitchResponse(BaseModel):
    record_id: str
    version: VersionModel


class VersionsResponse(BaseModel):
    record_id: str
    versions: list[VersionModel]


class ProposeRequest(BaseModel):
    message: str


class ProposeResponse(BaseModel):
    applied: bool
    note: str
    version: VersionModel | None = None


class ReindexRequest(BaseModel):
    index_dir: str | None = None


class HealthResponse(BaseModel):
    status: str
    records: int
    heads_version: str | None
    dimension: int


class RecordResponse(BaseModel):
    record_id: str
    chart_types: list[str]
    metadata: dict[str, str]
