"""Free-form query parsing into an IntentSpec.

Two paths share one validation gate:

- LLM path: a chat-completion-style HTTP backend gets a taxonomy-guided
  prompt with a fixed JSON output schema; invalid outputs (bad JSON,
  schema violations, unknown chart types, negative weights) burn one
  attempt and trigger a retry, up to ``max_retries`` attempts.
- Fallback path: a deterministic keyword scanner over a cue table, used
  when no backend is configured, when retries are exhausted, or when
  callers want hermetic behavior.

Every parse records a :class:`ParseTrace` so schema-invalid rates and
fallback usage can be measured on any backend.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import httpx

from facetsearch.core import (
    ALL_FACETS,
    EMBEDDING_FACETS,
    INTENT_SPEC_SCHEMA_TEXT,
    ChartType,
    CoreError,
    FacetId,
    IntentSpec,
    SpecValidationError,
    validate_intent_spec,
)


class EmptyQueryError(CoreError):
    pass


class BackendUnavailableError(CoreError):
    pass


@dataclass
class ParserConfig:
    max_retries: int = 3
    llm_endpoint: str | None = None
    llm_model_name: str = ""
    fallback_only: bool = False
    fallback_enabled: bool = True
    keyword_table_path: str | None = None
    api_key_env: str = "FACETSEARCH_LLM_API_KEY"
    timeout: float = 30.0
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.max_retries < 1:
            raise CoreError("max_retries must be >= 1")


@dataclass
class ParseAttempt:
    raw_model_output: str
    validation_outcome: str  # "ok" or an error code


@dataclass
class ParseTrace:
    attempts: list[ParseAttempt] = field(default_factory=list)
    source: str = "llm"  # llm | fallback
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "notes": list(self.notes),
            "attempts": [
                {"raw_model_output": a.raw_model_output, "validation_outcome": a.validation_outcome}
                for a in self.attempts
            ],
        }


_FACET_DEFINITIONS = {
    FacetId.CONTENT: "the subject matter and the message the graphic should get across",
    FacetId.CHART_TYPE: "the primary chart form encoding the data, from the fixed pool below",
    FacetId.LAYOUT: "spatial composition: arrangement, hierarchy, reading order",
    FacetId.ILLUSTRATION: "use of icons, pictograms, and decorative imagery",
    FacetId.STYLE: "overall visual aesthetics: palette, typography, tone",
}


def render_parser_prompt(query: str) -> str:
    """Deterministic instruction block for the LLM backend.

    Embeds the five facet definitions, the 13 chart-type names, the
    output schema, and the query verbatim exactly once. Byte-stable for
    identical inputs so prompt caches and traces stay comparable.
    """
    facet_lines = "\n".join(
        f"- {f.value}: {_FACET_DEFINITIONS[f]}" for f in ALL_FACETS
    )
    type_lines = ", ".join(t.value for t in ChartType)
    return (
        "You decompose a request for an infographic exemplar into five intent facets.\n"
        "Facets:\n"
        f"{facet_lines}\n"
        f"Chart-type pool (the only allowed chart_types values): {type_lines}\n"
        "\n"
        "Rewrite the request into a concise facet-focused description for each of\n"
        "content, layout, illustration, and style. Use null for any facet the\n"
        "request does not specify. List chart_types only when the request names or\n"
        "clearly implies chart forms. Assign a non-negative importance weight per\n"
        "facet, 0 for every unspecified facet.\n"
        "\n"
        "Respond with a single JSON object exactly matching this schema:\n"
        f"{INTENT_SPEC_SCHEMA_TEXT}\n"
        "\n"
        "Request:\n"
        f"{query}"
    )


@dataclass(frozen=True)
class KeywordTable:
    """Cue-phrase table for the deterministic fallback parser."""

    facet_cues: tuple[tuple[str, FacetId], ...]
    chart_synonyms: tuple[tuple[str, ChartType], ...]

    @classmethod
    def from_text(cls, text: str, *, source: str = "<string>") -> "KeywordTable":
        cues: list[tuple[str, FacetId]] = []
        synonyms: list[tuple[str, ChartType]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                cue, facet_name = parts
                facet = FacetId.parse(facet_name)
                if facet == FacetId.CHART_TYPE:
                    raise CoreError(
                        f"{source}:{lineno}: chart_type rows need a third column"
                    )
                cues.append((cue.strip().lower(), facet))
            elif len(parts) == 3 and FacetId.parse(parts[1]) == FacetId.CHART_TYPE:
                synonyms.append((parts[0].strip().lower(), ChartType.parse(parts[2])))
            else:
                raise CoreError(f"{source}:{lineno}: expected 'cue<TAB>facet'")
        return cls(facet_cues=tuple(cues), chart_synonyms=tuple(synonyms))

    @classmethod
    def load(cls, path: str | Path) -> "KeywordTable":
        path = Path(path)
        return cls.from_text(path.read_text(encoding="utf-8"), source=str(path))

    @classmethod
    def default(cls) -> "KeywordTable":
        text = (
            resources.files("facetsearch")
            .joinpath("data/keyword_table.tsv")
            .read_text(encoding="utf-8")
        )
        return cls.from_text(text, source="facetsearch/data/keyword_table.tsv")


#: Leading/trailing filler stripped from residual content text.
_STOPWORDS = {
    "a", "an", "the", "of", "for", "with", "about", "on", "in", "to",
    "and", "or", "my", "showing", "that", "this",
}


def _scan_matches(
    query: str, table: KeywordTable
) -> list[tuple[int, int, str, FacetId, ChartType | None]]:
    """Longest-match, left-to-right, non-overlapping cue scan.

    Returns (start, end, span_text, facet, chart_type) tuples in query
    order; chart_type is set for chart-type pool names and synonyms.
    """
    patterns: list[tuple[str, FacetId, ChartType | None]] = []
    for t in ChartType:
        patterns.append((t.value.lower(), FacetId.CHART_TYPE, t))
    for cue, chart in table.chart_synonyms:
        patterns.append((cue, FacetId.CHART_TYPE, chart))
    for cue, facet in table.facet_cues:
        patterns.append((cue, facet, None))

    candidates: list[tuple[int, int, str, FacetId, ChartType | None]] = []
    lowered = query.lower()
    for cue, facet, chart in patterns:
        for match in re.finditer(
            r"(?<![0-9a-z])" + re.escape(cue) + r"(?![0-9a-z])", lowered
        ):
            start, end = match.span()
            candidates.append((start, end, query[start:end], facet, chart))

    # Longer spans win; on equal length the earlier pattern stays.
    candidates.sort(key=lambda c: (c[0], -(c[1] - c[0])))
    chosen: list[tuple[int, int, str, FacetId, ChartType | None]] = []
    last_end = -1
    for cand in candidates:
        if cand[0] >= last_end:
            chosen.append(cand)
            last_end = cand[1]
    return chosen


def _trim_residual(text: str) -> str:
    tokens = [t for t in re.split(r"[\s,;:.!?()]+", text) if t]
    while tokens and tokens[0].lower() in _STOPWORDS:
        tokens.pop(0)
    while tokens and tokens[-1].lower() in _STOPWORDS:
        tokens.pop()
    return " ".join(tokens)


def parse_query_fallback(query: str, table: KeywordTable | None = None) -> IntentSpec:
    """Deterministic keyword parse.

    Facet rewrites concatenate the matched cue spans (query order);
    weights are matched-cue counts normalized by the total match count.
    Chart-type mentions (pool names or synonyms) populate chart_types and
    count toward the chart-type weight. A query with chart-type matches
    but no embedding-facet cues keeps its remaining text as the content
    rewrite; a query with no matches at all becomes a content-only spec.
    """
    table = table or KeywordTable.default()
    query = query.strip()
    if not query:
        raise EmptyQueryError("query is empty")

    matches = _scan_matches(query, table)
    spans: dict[FacetId, list[str]] = {f: [] for f in EMBEDDING_FACETS}
    counts: dict[FacetId, int] = {f: 0 for f in ALL_FACETS}
    chart_types: set[ChartType] = set()
    for _start, _end, span, facet, chart in matches:
        counts[facet] += 1
        if facet == FacetId.CHART_TYPE:
            chart_types.add(chart)  # type: ignore[arg-type]
        else:
            spans[facet].append(span)

    embedding_hits = any(counts[f] for f in EMBEDDING_FACETS)
    if not embedding_hits:
        cursor = 0
        residual_parts = []
        for start, end, *_ in matches:
            residual_parts.append(query[cursor:start])
            cursor = end
        residual_parts.append(query[cursor:])
        residual = _trim_residual(" ".join(residual_parts))
        if residual:
            spans[FacetId.CONTENT].append(residual)
            counts[FacetId.CONTENT] += 1

    total = sum(counts.values())
    if total == 0:
        # No cues at all: the whole query is the content description.
        return IntentSpec(
            rewrites={FacetId.CONTENT: query},
            chart_types=frozenset(),
            weights={FacetId.CONTENT: 1.0},
        )

    rewrites = {f: ", ".join(parts) for f, parts in spans.items() if parts}
    weights = {f: counts[f] / total for f in ALL_FACETS if counts[f]}
    return IntentSpec(
        rewrites=rewrites, chart_types=frozenset(chart_types), weights=weights
    )


def _extract_message_content(payload: dict) -> str:
    try:
        return payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ValueError(f"unexpected completion payload shape: {exc}") from exc


class LlmClient:
    """Minimal chat-completion client with bounded concurrency."""

    def __init__(self, cfg: ParserConfig) -> None:
        if not cfg.llm_endpoint:
            raise BackendUnavailableError("no LLM endpoint configured")
        self.cfg = cfg
        self._semaphore = threading.Semaphore(cfg.max_concurrency)
        self._client = httpx.Client(timeout=cfg.timeout)

    def __call__(self, prompt: str) -> str:
        headers = {}
        api_key = os.environ.get(self.cfg.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.cfg.llm_model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        with self._semaphore:
            response = self._client.post(
                self.cfg.llm_endpoint, json=body, headers=headers
            )
        response.raise_for_status()
        return _extract_message_content(response.json())


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


def _validate_model_output(raw: str) -> tuple[IntentSpec, list[str]]:
    """Parse + validate one model output; raises SpecValidationError."""
    text = raw.strip()
    fence = _FENCE_RE.match(text)
    if fence:
        text = fence.group(1).strip()
    spec = IntentSpec.from_json(text)
    notes: list[str] = []
    if spec.chart_types and spec.weight(FacetId.CHART_TYPE) == 0.0:
        # Backend omitted the chart-type weight: default to the mean of
        # the present embedding-facet weights (or 1.0 if none).
        present = [spec.weight(f) for f in EMBEDDING_FACETS if spec.weight(f) > 0]
        default = sum(present) / len(present) if present else 1.0
        weights = dict(spec.weights)
        weights[FacetId.CHART_TYPE] = default
        spec = IntentSpec(
            rewrites=dict(spec.rewrites),
            chart_types=spec.chart_types,
            weights=weights,
        )
        notes.append(f"chart_type weight defaulted to {default}")
    spec, coercion_notes = validate_intent_spec(spec, coerce=True)
    return spec, notes + coercion_notes


def parse_query(
    query: str,
    cfg: ParserConfig | None = None,
    llm_call: Callable[[str], str] | None = None,
    keyword_table: KeywordTable | None = None,
) -> tuple[IntentSpec, ParseTrace]:
    """Parse a query via the configured backend with schema retry.

    ``llm_call`` overrides the HTTP client (used by tests to mock the
    backend). When the LLM path is unavailable or exhausts its retries,
    the fallback parser takes over unless ``fallback_enabled`` is off,
    in which case BackendUnavailableError is raised.
    """
    cfg = cfg or ParserConfig()
    if not query or not query.strip():
        raise EmptyQueryError("query is empty")
    query = query.strip()

    trace = ParseTrace()
    use_llm = not cfg.fallback_only and (llm_call is not None or cfg.llm_endpoint)
    if use_llm:
        call = llm_call or LlmClient(cfg)
        prompt = render_parser_prompt(query)
        for _attempt in range(cfg.max_retries):
            try:
                raw = call(prompt)
            except Exception as exc:  # transport failures burn an attempt
                trace.attempts.append(
                    ParseAttempt(
                        raw_model_output=f"<transport error: {exc}>",
                        validation_outcome="transport_error",
                    )
                )
                continue
            try:
                spec, notes = _validate_model_output(raw)
            except SpecValidationError as exc:
                trace.attempts.append(
                    ParseAttempt(raw_model_output=raw, validation_outcome=type(exc).__name__)
                )
                continue
            trace.attempts.append(ParseAttempt(raw_model_output=raw, validation_outcome="ok"))
            trace.source = "llm"
            trace.notes.extend(notes)
            return spec, trace

    if not cfg.fallback_enabled and not cfg.fallback_only:
        raise BackendUnavailableError(
            f"LLM backend failed after {len(trace.attempts)} attempts and the "
            "fallback parser is disabled"
        )

    spec = parse_query_fallback(query, keyword_table)
    spec, notes = validate_intent_spec(spec, coerce=True)
    trace.attempts.append(
        ParseAttempt(raw_model_output=spec.to_json(), validation_outcome="ok")
    )
    trace.source = "fallback"
    trace.notes.extend(notes)
    return spec, trace
