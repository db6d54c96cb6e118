"""FastAPI application factory.

The app wraps an :class:`Engine` holding the live index snapshot, the
embedder/parser clients, and the session store. Search requests capture
the snapshot reference once, so an /admin/reindex swap never affects a
request already in flight. Every endpoint has a deterministic degraded
mode: with no external LLM/embedder configured the fallback parser and
fixture embedder keep the whole API usable offline.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException

from facetsearch.core import (
    ALL_FACETS,
    CoreError,
    FacetId,
    IntentSpec,
    SpecValidationError,
    validate_intent_spec,
)
from facetsearch.embedder import EmbedderConfig, make_embedder
from facetsearch.index import IndexSnapshot, load_index
from facetsearch.intent import KeywordTable, ParserConfig, parse_query
from facetsearch.scoring import embed_query_facets, rank_corpus
from facetsearch.service import autoselect as autoselect_mod
from facetsearch.service import schemas
from facetsearch.service.config import ServiceConfig
from facetsearch.service.sessions import (
    NotCommittedError,
    Session,
    SessionStore,
    UnknownRecordIdError,
)
from facetsearch.svgedit import (
    PayloadVault,
    show_full_svg,
    stitch_back,
    summarize,
)
from facetsearch.svgedit.vault import document_hash


class Engine:
    """Holds service state; the snapshot reference is swapped atomically."""

    def __init__(
        self,
        config: ServiceConfig,
        snapshot: IndexSnapshot | None = None,
        selection_client: autoselect_mod.SelectionClient | None = None,
        edit_client: Callable[[dict, str], dict] | None = None,
        llm_call: Callable[[str], str] | None = None,
    ) -> None:
        self.config = config
        self.snapshot = snapshot
        self.sessions = SessionStore(config.sessions_dir)
        self.embedder = make_embedder(
            EmbedderConfig(
                mode=config.embedder_mode,
                dimension=config.dimension,
                endpoint=config.embedder_endpoint,
            )
        )
        self.keyword_table = (
            KeywordTable.load(config.keyword_table)
            if config.keyword_table
            else KeywordTable.default()
        )
        self.parser_cfg = ParserConfig(
            max_retries=config.parser_max_retries,
            llm_endpoint=config.llm_endpoint,
            llm_model_name=config.llm_model,
            fallback_only=config.parser_fallback_only or not config.llm_endpoint,
        )
        self.llm_call = llm_call
        if selection_client is None and config.vlm_endpoint:
            selection_client = autoselect_mod.HttpSelectionClient(config.vlm_endpoint)
        self.selection_client = selection_client
        self.edit_client = edit_client
        self._reindex_lock = threading.Lock()
        if snapshot is None and config.index_dir:
            self.reindex(config.index_dir)

    def reindex(self, index_dir: str | None = None) -> IndexSnapshot:
        directory = index_dir or self.config.index_dir
        if not directory:
            raise CoreError("no index directory configured")
        with self._reindex_lock:
            snapshot, _heads = load_index(directory)
            self.snapshot = snapshot  # atomic swap; in-flight reads keep theirs
            if index_dir:
                self.config.index_dir = index_dir
        return snapshot

    def current_snapshot(self) -> IndexSnapshot:
        snapshot = self.snapshot
        if snapshot is None or len(snapshot) == 0:
            raise HTTPException(status_code=503, detail="no index loaded")
        return snapshot

    # --- search ---

    def parse(self, query: str):
        return parse_query(
            query,
            self.parser_cfg,
            llm_call=self.llm_call,
            keyword_table=self.keyword_table,
        )

    def apply_spec_edits(
        self, spec: IntentSpec, edits: schemas.SpecEditPayload
    ) -> tuple[IntentSpec, list[str]]:
        rewrites = dict(spec.rewrites)
        if edits.rewrites is not None:
            for name, text in edits.rewrites.items():
                facet = FacetId.parse(name)
                if text is None or not text.strip():
                    rewrites.pop(facet, None)
                else:
                    rewrites[facet] = text
        weights = {f: spec.weight(f) for f in ALL_FACETS}
        if edits.weights is not None:
            for name, value in edits.weights.items():
                weights[FacetId.parse(name)] = value
        chart_types = spec.chart_types
        if edits.chart_types is not None:
            from facetsearch.core import ChartType

            chart_types = frozenset(ChartType.parse(t) for t in edits.chart_types)
        edited = IntentSpec(rewrites=rewrites, chart_types=chart_types, weights=weights)
        return validate_intent_spec(edited, coerce=True)

    # --- svg sessions ---

    def record_svg_text(self, record_id: str) -> str:
        snapshot = self.current_snapshot()
        record = snapshot.get(record_id)
        if record is None:
            raise UnknownRecordIdError(f"unknown record id: {record_id!r}")
        path = record.metadata.get("svg_path")
        if not path:
            raise CoreError(f"record {record_id!r} has no svg_path metadata")
        return Path(path).read_text(encoding="utf-8")

    def svg_current(self, session: Session, record_id: str) -> tuple[str, PayloadVault]:
        if record_id not in session.committed:
            raise NotCommittedError(
                f"record {record_id!r} is not committed in this session"
            )
        state = session.svg_state(record_id)
        text = state.versions[-1].svg if state.versions else self.record_svg_text(record_id)
        vault = PayloadVault(
            document_hash=document_hash(text), entries=dict(state.vault_entries)
        )
        return text, vault


def _http_error(exc: CoreError) -> HTTPException:
    name = type(exc).__name__
    status = 400
    if isinstance(exc, (UnknownRecordIdError,)):
        status = 404
    elif "Unknown" in name or "Unresolvable" in name:
        status = 404
    elif "CapExceeded" in name or "NotCommitted" in name or "Conflict" in name:
        status = 409
    elif "BackendUnavailable" in name or "EmbedderFailure" in name:
        status = 503
    return HTTPException(status_code=status, detail=f"{name}: {exc}")


def _spec_model(spec: IntentSpec) -> schemas.SpecModel:
    return schemas.SpecModel(**spec.to_dict())


def _committed_items(
    session: Session, snapshot: IndexSnapshot | None
) -> list[schemas.CommittedItem]:
    items = []
    for rid in session.committed:
        record = snapshot.get(rid) if snapshot else None
        items.append(
            schemas.CommittedItem(
                record_id=rid, metadata=dict(record.metadata) if record else {}
            )
        )
    return items


def create_app(
    config: ServiceConfig | None = None,
    *,
    snapshot: IndexSnapshot | None = None,
    selection_client: autoselect_mod.SelectionClient | None = None,
    edit_client: Callable[[dict, str], dict] | None = None,
    llm_call: Callable[[str], str] | None = None,
) -> FastAPI:
    config = config or ServiceConfig()
    engine = Engine(
        config,
        snapshot=snapshot,
        selection_client=selection_client,
        edit_client=edit_client,
        llm_call=llm_call,
    )
    app = FastAPI(title="facetsearch", version="0.1.0")
    app.state.engine = engine

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        snap = engine.snapshot
        return schemas.HealthResponse(
            status="ok",
            records=len(snap) if snap else 0,
            heads_version=snap.heads_version if snap else None,
            dimension=config.dimension,
        )

    @app.post("/parse", response_model=schemas.ParseResponse)
    def parse(request: schemas.ParseRequest):
        try:
            spec, trace = engine.parse(request.query)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.ParseResponse(
            spec=_spec_model(spec), trace=schemas.TraceModel(**trace.to_dict())
        )

    @app.post("/search", response_model=schemas.SearchResponse)
    def search(request: schemas.SearchRequest):
        snap = engine.current_snapshot()  # captured once per request
        session: Session | None = None
        if request.session_id:
            try:
                session = engine.sessions.get(request.session_id)
            except CoreError as exc:
                raise _http_error(exc)

        trace_model = None
        notes: list[str] = []
        try:
            if request.query is not None and request.query.strip():
                spec, trace = engine.parse(request.query)
                trace_model = schemas.TraceModel(**trace.to_dict())
                notes.extend(trace.notes)
            elif request.spec_edits is not None:
                if session is None or session.current_spec is None:
                    raise HTTPException(
                        status_code=409,
                        detail="spec edits need a session with a parsed spec",
                    )
                spec, edit_notes = engine.apply_spec_edits(
                    session.current_spec, request.spec_edits
                )
                notes.extend(edit_notes)
            else:
                raise HTTPException(
                    status_code=400, detail="provide 'query' or 'spec_edits'"
                )
            vectors = embed_query_facets(spec, engine.embedder)
            k = request.k or config.default_k
            results = rank_corpus(
                spec, vectors, snap, k=k, hard_filter=request.hard_filter
            )
        except HTTPException:
            raise
        except CoreError as exc:
            raise _http_error(exc)

        if session is not None:
            with session.lock:
                engine.sessions.set_spec(session, spec)
                engine.sessions.add_history(
                    session, spec, [r.record_id for r in results]
                )

        result_models = []
        for r in results:
            record = snap.get(r.record_id)
            result_models.append(
                schemas.ResultModel(
                    record_id=r.record_id,
                    total_score=r.total_score,
                    facet_scores={f.value: s for f, s in r.facet_scores.items()},
                    chart_types=sorted(t.value for t in record.chart_types),
                    metadata=dict(record.metadata),
                )
            )
        return schemas.SearchResponse(
            session_id=request.session_id,
            spec=_spec_model(spec),
            notes=notes,
            trace=trace_model,
            results=result_models,
            k=request.k or config.default_k,
            hard_filter=request.hard_filter,
        )

    @app.get("/sessions/{session_id}", response_model=schemas.SessionResponse)
    def get_session(session_id: str):
        try:
            session = engine.sessions.get(session_id)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.SessionResponse(
            session_id=session_id,
            spec=_spec_model(session.current_spec) if session.current_spec else None,
            committed=_committed_items(session, engine.snapshot),
            svg_versions={rid: len(s.versions) for rid, s in session.svg.items()},
            history_len=len(session.history),
        )

    @app.get("/sessions/{session_id}/commits", response_model=schemas.CommitsResponse)
    def list_commits(session_id: str):
        try:
            session = engine.sessions.get(session_id)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.CommitsResponse(
            session_id=session_id,
            committed=_committed_items(session, engine.snapshot),
        )

    @app.post("/sessions/{session_id}/commits", response_model=schemas.CommitsResponse)
    def add_commits(session_id: str, request: schemas.CommitRequest):
        snap = engine.current_snapshot()
        try:
            session = engine.sessions.get(session_id)
            for rid in request.record_ids:
                if snap.get(rid) is None:
                    raise UnknownRecordIdError(f"unknown record id: {rid!r}")
            with session.lock:
                engine.sessions.commit(session, request.record_ids, config.commit_cap)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.CommitsResponse(
            session_id=session_id, committed=_committed_items(session, snap)
        )

    @app.delete(
        "/sessions/{session_id}/commits/{record_id}",
        response_model=schemas.CommitsResponse,
    )
    def remove_commit(session_id: str, record_id: str):
        try:
            session = engine.sessions.get(session_id)
            with session.lock:
                engine.sessions.uncommit(session, record_id)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.CommitsResponse(
            session_id=session_id,
            committed=_committed_items(session, engine.snapshot),
        )

    @app.post(
        "/sessions/{session_id}/autoselect", response_model=schemas.AutoSelectResponse
    )
    def auto_select_endpoint(session_id: str, request: schemas.AutoSelectRequest):
        snap = engine.current_snapshot()
        try:
            session = engine.sessions.get(session_id)
            if session.current_spec is None:
                raise HTTPException(status_code=409, detail="no spec in session")
            vectors = embed_query_facets(session.current_spec, engine.embedder)
            top = rank_corpus(session.current_spec, vectors, snap, k=request.k)
            selected, note = autoselect_mod.auto_select(
                session.current_spec, top, snap, client=engine.selection_client
            )
        except HTTPException:
            raise
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.AutoSelectResponse(
            selected_ids=selected,
            note=note,
            candidates=[r.record_id for r in top],
        )

    # --- svg adaptation ---

    @app.post(
        "/sessions/{session_id}/svg/{record_id}/summarize",
        response_model=schemas.SummarizeResponse,
    )
    def svg_summarize(session_id: str, record_id: str):
        try:
            session = engine.sessions.get(session_id)
            text, _vault = engine.svg_current(session, record_id)
            tree, _seed = summarize(text, granularity=config.svg_granularity)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.SummarizeResponse(record_id=record_id, tree=tree.to_dict())

    @app.post(
        "/sessions/{session_id}/svg/{record_id}/show",
        response_model=schemas.ShowResponse,
    )
    def svg_show(session_id: str, record_id: str, request: schemas.ShowRequest):
        try:
            session = engine.sessions.get(session_id)
            with session.lock:
                text, vault = engine.svg_current(session, record_id)
                before = set(vault.entries)
                snippet = show_full_svg(
                    text, request.node_id, vault, threshold=config.payload_threshold
                )
                added = {
                    token: vault.entries[token]
                    for token in vault.entries
                    if token not in before
                }
                engine.sessions.add_vault_entries(session, record_id, added)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.ShowResponse(**snippet.to_dict())

    @app.post(
        "/sessions/{session_id}/svg/{record_id}/stitch",
        response_model=schemas.StitchResponse,
    )
    def svg_stitch(session_id: str, record_id: str, request: schemas.StitchRequest):
        try:
            session = engine.sessions.get(session_id)
            with session.lock:
                text, vault = engine.svg_current(session, record_id)
                stitched = stitch_back(text, request.edits, vault)
                version = engine.sessions.add_svg_version(session, record_id, stitched)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.StitchResponse(
            record_id=record_id,
            version=schemas.VersionModel(
                version=version.version, created_at=version.created_at, svg=version.svg
            ),
        )

    @app.get(
        "/sessions/{session_id}/svg/{record_id}/versions",
        response_model=schemas.VersionsResponse,
    )
    def svg_versions(session_id: str, record_id: str):
        try:
            session = engine.sessions.get(session_id)
        except CoreError as exc:
            raise _http_error(exc)
        state = session.svg_state(record_id)
        return schemas.VersionsResponse(
            record_id=record_id,
            versions=[
                schemas.VersionModel(
                    version=v.version, created_at=v.created_at, svg=v.svg
                )
                for v in state.versions
            ],
        )

    @app.post(
        "/sessions/{session_id}/svg/{record_id}/propose",
        response_model=schemas.ProposeResponse,
    )
    def svg_propose(session_id: str, record_id: str, request: schemas.ProposeRequest):
        """Pass-through hook: hand the structural summary plus the user
        message to an external model; validate and apply returned
        node-addressed edits. Degrades to a no-op note offline."""
        try:
            session = engine.sessions.get(session_id)
            with session.lock:
                text, vault = engine.svg_current(session, record_id)
                if engine.edit_client is None:
                    return schemas.ProposeResponse(
                        applied=False,
                        note="no edit model configured; use /stitch with explicit edits",
                        version=None,
                    )
                tree, _seed = summarize(text, granularity=config.svg_granularity)
                reply = engine.edit_client(tree.to_dict(), request.message)
                edits = reply.get("edits") if isinstance(reply, dict) else None
                if not isinstance(edits, dict) or not edits:
                    return schemas.ProposeResponse(
                        applied=False, note="model returned no usable edits", version=None
                    )
                stitched = stitch_back(text, edits, vault)
                version = engine.sessions.add_svg_version(session, record_id, stitched)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.ProposeResponse(
            applied=True,
            note="edits applied",
            version=schemas.VersionModel(
                version=version.version, created_at=version.created_at, svg=version.svg
            ),
        )

    @app.get("/records/{record_id}", response_model=schemas.RecordResponse)
    def get_record(record_id: str):
        snap = engine.current_snapshot()
        record = snap.get(record_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown record: {record_id}")
        return schemas.RecordResponse(
            record_id=record_id,
            chart_types=sorted(t.value for t in record.chart_types),
            metadata=dict(record.metadata),
        )

    @app.post("/admin/reindex", response_model=schemas.HealthResponse)
    def reindex(request: schemas.ReindexRequest):
        try:
            snap = engine.reindex(request.index_dir)
        except CoreError as exc:
            raise _http_error(exc)
        return schemas.HealthResponse(
            status="ok",
            records=len(snap),
            heads_version=snap.heads_version,
            dimension=config.dimension,
        )

    frontend_dir = config.frontend_dir
    if frontend_dir and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
