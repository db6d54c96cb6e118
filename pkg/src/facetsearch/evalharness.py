"""Retrieval metrics and the benchmark runner.

Unique-target protocol: each query has exactly one ground-truth target
record; the engine ranks the whole snapshot and the target's 1-based
rank drives Recall@K and MRR@10. Multi-round sessions additionally get
dCRR@10, which sums per-round reciprocal ranks (truncated at 10) with a
geometric discount on later rounds.

Misses are explicit (rank ``None``), never sentinel integers, so a
missing target can never leak a tiny reciprocal-rank contribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from facetsearch.core import CoreError, IntentSpec, validate_intent_spec
from facetsearch.embedder import Embedder
from facetsearch.index import IndexSnapshot
from facetsearch.scoring import embed_query_facets, rank_corpus

Rank = int | None  # None encodes a miss


class EmptyInputError(CoreError):
    pass


class EmptySessionError(CoreError):
    pass


class UnresolvableTargetError(CoreError):
    pass


@dataclass(frozen=True)
class QueryTargetPair:
    query: str | IntentSpec
    target_id: str
    tag: str = "untagged"


@dataclass(frozen=True)
class RoundRecord:
    round_index: int  # 1-based
    rank_of_target: Rank


def recall_at_k(ranks: Sequence[Rank], k: int) -> float:
    """Fraction of queries whose target ranks within the top k."""
    if not ranks:
        raise EmptyInputError("no ranks given")
    if k < 1:
        raise CoreError(f"K must be >= 1, got {k}")
    hits = sum(1 for r in ranks if r is not None and r <= k)
    return hits / len(ranks)


def mrr_at_10(ranks: Sequence[Rank]) -> float:
    """Mean reciprocal rank, truncated at the top 10 (0 beyond)."""
    if not ranks:
        raise EmptyInputError("no ranks given")
    total = sum(1.0 / r for r in ranks if r is not None and r <= 10)
    return total / len(ranks)


def dcrr_at_10(session: Sequence[RoundRecord], gamma: float = 0.9) -> float:
    """Discounted cumulative reciprocal rank over a multi-round session.

    Sum over rounds r (1-based) of gamma^(r-1) * RR@10_r. Can exceed 1
    across rounds; a single round reduces to that round's RR@10.
    """
    if not session:
        raise EmptySessionError("session has no rounds")
    if not (0.0 < gamma <= 1.0):
        raise CoreError(f"gamma must lie in (0, 1], got {gamma}")
    last_index = 0
    total = 0.0
    for record in session:
        if record.round_index <= last_index:
            raise CoreError("round indices must be strictly increasing")
        last_index = record.round_index
        rank = record.rank_of_target
        rr = 1.0 / rank if rank is not None and rank <= 10 else 0.0
        total += gamma ** (record.round_index - 1) * rr
    return total


@dataclass
class QueryOutcome:
    query: str
    target_id: str
    tag: str
    rank: Rank
    error: str | None = None


@dataclass
class BenchmarkReport:
    per_tag: dict[str, dict[str, float]] = field(default_factory=dict)
    overall: dict[str, float] = field(default_factory=dict)
    outcomes: list[QueryOutcome] = field(default_factory=list)
    skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "per_tag": self.per_tag,
            "overall": self.overall,
            "skipped": self.skipped,
            "per_query": [
                {
                    "query": o.query,
                    "target_id": o.target_id,
                    "tag": o.tag,
                    "rank": o.rank,
                    "error": o.error,
                }
                for o in self.outcomes
            ],
        }

    def format_table(self) -> str:
        """Aligned text table: one column group per query family."""
        tags = sorted(self.per_tag)
        header_cells = []
        value_cells = []
        for tag in tags:
            metrics = self.per_tag[tag]
            header_cells.append(f"{tag} (n={int(metrics['n'])})")
            value_cells.append(
                f"R@1 {metrics['r_at_1']:.4f} / R@5 {metrics['r_at_5']:.4f} / "
                f"MRR@10 {metrics['mrr_at_10']:.4f}"
            )
        width = max((len(c) for c in header_cells + value_cells), default=10)
        lines = [
            " | ".join(c.ljust(width) for c in header_cells),
            "-+-".join("-" * width for _ in header_cells),
            " | ".join(c.ljust(width) for c in value_cells),
        ]
        if self.overall:
            lines.append("")
            lines.append(
                f"overall (n={int(self.overall['n'])}): "
                f"R@1 {self.overall['r_at_1']:.4f} / R@5 {self.overall['r_at_5']:.4f} / "
                f"MRR@10 {self.overall['mrr_at_10']:.4f}"
            )
        if self.skipped:
            lines.append(f"skipped (parser failures): {self.skipped}")
        return "\n".join(lines) + "\n"


def load_pairs_jsonl(path: str | Path) -> list[QueryTargetPair]:
    """Read benchmark pairs: {"query": text-or-spec-object, "target_id",
    "tag"} per line. An object query is taken as a pre-parsed spec."""
    path = Path(path)
    pairs: list[QueryTargetPair] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            raw_query = obj.get("query")
            if isinstance(raw_query, Mapping):
                query: str | IntentSpec = IntentSpec.from_dict(raw_query)
            elif isinstance(raw_query, str):
                query = raw_query
            else:
                raise CoreError(f"{path}:{lineno}: 'query' must be text or an object")
            pairs.append(
                QueryTargetPair(
                    query=query,
                    target_id=str(obj["target_id"]),
                    tag=str(obj.get("tag", "untagged")),
                )
            )
    return pairs


def _metrics_block(ranks: Sequence[Rank]) -> dict[str, float]:
    return {
        "r_at_1": recall_at_k(ranks, 1),
        "r_at_5": recall_at_k(ranks, 5),
        "mrr_at_10": mrr_at_10(ranks),
        "n": float(len(ranks)),
    }


def run_benchmark(
    pairs: Sequence[QueryTargetPair],
    snapshot: IndexSnapshot,
    embedder: Embedder,
    parse: Callable[[str], IntentSpec] | None = None,
) -> BenchmarkReport:
    """Rank the full snapshot for every pair and aggregate per tag.

    Text queries go through ``parse`` (the fallback parser unless a
    different callable is supplied); parser failures are recorded and
    excluded with a warning in the report rather than aborting the run.
    All target ids must resolve in the snapshot up front.
    """
    if not pairs:
        raise EmptyInputError("no benchmark pairs")
    missing = sorted({p.target_id for p in pairs if snapshot.get(p.target_id) is None})
    if missing:
        raise UnresolvableTargetError(f"target ids not in snapshot: {missing[:5]}")

    if parse is None:
        from facetsearch.intent import parse_query_fallback

        parse = parse_query_fallback

    report = BenchmarkReport()
    ranks_by_tag: dict[str, list[Rank]] = {}
    all_ranks: list[Rank] = []
    for pair in pairs:
        query_text = pair.query if isinstance(pair.query, str) else pair.query.to_json()
        try:
            spec = pair.query if isinstance(pair.query, IntentSpec) else parse(pair.query)
            spec, _ = validate_intent_spec(spec, coerce=True)
            vectors = embed_query_facets(spec, embedder)
            results = rank_corpus(spec, vectors, snapshot, k=len(snapshot))
        except CoreError as exc:
            report.outcomes.append(
                QueryOutcome(
                    query=query_text,
                    target_id=pair.target_id,
                    tag=pair.tag,
                    rank=None,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
            report.skipped += 1
            continue
        rank: Rank = None
        for position, result in enumerate(results, start=1):
            if result.record_id == pair.target_id:
                rank = position
                break
        report.outcomes.append(
            QueryOutcome(query=query_text, target_id=pair.target_id, tag=pair.tag, rank=rank)
        )
        ranks_by_tag.setdefault(pair.tag, []).append(rank)
        all_ranks.append(rank)

    for tag, ranks in sorted(ranks_by_tag.items()):
        report.per_tag[tag] = _metrics_block(ranks)
    if all_ranks:
        report.overall = _metrics_block(all_ranks)
    return report


def write_report(report: BenchmarkReport, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    (directory / "report.txt").write_text(report.format_table(), encoding="utf-8")
    return directory
