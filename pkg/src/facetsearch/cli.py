"""Command-line interface.

Batch lifecycle verbs (ingest, index, train-heads, gradcheck, eval, svg)
operate on local files through the library. Query verbs (parse-query,
search) run locally against an index directory by default, or act as a
thin client against a running service when --server is given. ``serve``
launches the HTTP service.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from facetsearch.core import DEFAULT_DIMENSION
from facetsearch.embedder import FixtureEmbedder
from facetsearch.index import (
    build_index,
    load_index,
    read_records_jsonl,
    save_index,
    write_records_jsonl,
)
from facetsearch.intent import KeywordTable, ParserConfig, parse_query
from facetsearch.kernel import default_kernel_table, load_kernel_table
from facetsearch.scoring import embed_query_facets, rank_corpus


@click.group()
def main() -> None:
    """Intent-aware infographic exemplar retrieval."""


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "output_path", required=True, type=click.Path())
@click.option("--dimension", "-d", default=DEFAULT_DIMENSION, show_default=True)
@click.option(
    "--normalize/--no-normalize",
    "renormalize",
    default=True,
    show_default=True,
    help="Re-normalize base embeddings to unit length.",
)
def ingest(input_path: str, output_path: str, dimension: int, renormalize: bool) -> None:
    """Validate raw corpus JSONL and write canonical records."""
    records = read_records_jsonl(input_path, dimension=dimension, renormalize=renormalize)
    count = write_records_jsonl(records, output_path)
    click.echo(f"ingested {count} records -> {output_path}")


@main.command()
@click.option("--records", required=True, type=click.Path(exists=True))
@click.option("--heads", "heads_path", required=True, type=click.Path(exists=True))
@click.option("--kernel-table", "kernel_path", type=click.Path(exists=True))
@click.option("--out", "output_dir", required=True, type=click.Path())
def index(records: str, heads_path: str, kernel_path: str | None, output_dir: str) -> None:
    """Build an index directory from records + heads (+ kernel table)."""
    from facetsearch.heads import FacetHeads

    heads = FacetHeads.load(heads_path)
    record_list = read_records_jsonl(records, dimension=heads.dimension)
    kernel = load_kernel_table(kernel_path) if kernel_path else default_kernel_table()
    snapshot = build_index(record_list, heads, kernel)
    save_index(snapshot, heads, output_dir)
    click.echo(
        f"indexed {len(snapshot)} records (d={snapshot.dimension}, "
        f"heads {snapshot.heads_version[:12]}) -> {output_dir}"
    )


def _parse_locally(query: str, fallback_only: bool, keyword_table: str | None):
    cfg = ParserConfig(fallback_only=fallback_only)
    table = KeywordTable.load(keyword_table) if keyword_table else None
    return parse_query(query, cfg, keyword_table=table)


@main.command("parse-query")
@click.argument("query")
@click.option("--server", help="Base URL of a running service (thin-client mode).")
@click.option("--fallback-only", is_flag=True, default=True, show_default=True)
@click.option("--keyword-table", type=click.Path(exists=True))
def parse_query_cmd(
    query: str, server: str | None, fallback_only: bool, keyword_table: str | None
) -> None:
    """Parse a free-form query into an intent spec."""
    if server:
        response = httpx.post(f"{server.rstrip('/')}/parse", json={"query": query})
        response.raise_for_status()
        click.echo(json.dumps(response.json(), indent=2, ensure_ascii=False))
        return
    spec, trace = _parse_locally(query, fallback_only, keyword_table)
    click.echo(
        json.dumps({"spec": spec.to_dict(), "trace": trace.to_dict()}, indent=2, ensure_ascii=False)
    )


@main.command()
@click.argument("query")
@click.option("--index", "index_dir", type=click.Path(exists=True))
@click.option("--server", help="Base URL of a running service (thin-client mode).")
@click.option("-k", default=10, show_default=True)
@click.option("--hard-filter", is_flag=True, help="Exact chart-type pre-filter.")
@click.option("--keyword-table", type=click.Path(exists=True))
def search(
    query: str,
    index_dir: str | None,
    server: str | None,
    k: int,
    hard_filter: bool,
    keyword_table: str | None,
) -> None:
    """Rank the corpus for a query (local index or remote service)."""
    if server:
        response = httpx.post(
            f"{server.rstrip('/')}/search",
            json={"query": query, "k": k, "hard_filter": hard_filter},
            timeout=60.0,
        )
        response.raise_for_status()
        click.echo(json.dumps(response.json(), indent=2, ensure_ascii=False))
        return
    if not index_dir:
        raise click.UsageError("provide --index DIR or --server URL")
    snapshot, _heads = load_index(index_dir)
    spec, _trace = _parse_locally(query, fallback_only=True, keyword_table=keyword_table)
    embedder = FixtureEmbedder(snapshot.dimension)
    vectors = embed_query_facets(spec, embedder)
    results = rank_corpus(spec, vectors, snapshot, k=k, hard_filter=hard_filter)
    click.echo(
        json.dumps(
            {"spec": spec.to_dict(), "results": [r.to_dict() for r in results]},
            indent=2,
            ensure_ascii=False,
        )
    )


@main.command("train-heads")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=10, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--temperature", default=0.07, show_default=True)
@click.option("--momentum", default=0.9, show_default=True)
@click.option("--hidden", default=256, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "output_path", required=True, type=click.Path())
def train_heads_cmd(
    data: str,
    epochs: int,
    batch_size: int,
    learning_rate: float,
    temperature: float,
    momentum: float,
    hidden: int,
    seed: int,
    output_path: str,
) -> None:
    """Train facet projection heads on alignment examples (JSONL)."""
    from facetsearch.alignment import TrainConfig, read_alignment_jsonl, train_heads

    dataset = read_alignment_jsonl(data)
    cfg = TrainConfig(
        batch_size=batch_size,
        temperature=temperature,
        learning_rate=learning_rate,
        epochs=epochs,
        seed=seed,
        momentum=momentum,
        hidden=hidden,
    )
    heads, log = train_heads(dataset, cfg)
    heads.save(output_path)
    for epoch, loss in enumerate(log.epoch_mean_loss, start=1):
        click.echo(f"epoch {epoch:3d}  mean loss {loss:.6f}")
    click.echo(f"saved heads {heads.version_hash()[:12]} -> {output_path}")


@main.command()
@click.option("--configs", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tolerance", default=1e-4, show_default=True)
def gradcheck(configs: int, seed: int, tolerance: float) -> None:
    """Check analytic gradients against central finite differences."""
    from facetsearch.alignment import gradient_check

    reports = gradient_check(configs=configs, seed=seed)
    failed = 0
    for report in reports:
        ok = report["max_rel_error"] < tolerance
        failed += 0 if ok else 1
        click.echo(
            f"config {report['config']:2d} B={report['B']} d={report['d']:2d} "
            f"h={report['h']} tau={report['tau']:.3f} "
            f"max_rel_error={report['max_rel_error']:.3e} {'ok' if ok else 'FAIL'}"
        )
    if failed:
        raise SystemExit(f"{failed}/{len(reports)} configurations failed")
    click.echo(f"all {len(reports)} configurations within {tolerance}")


@main.command("eval")
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "output_dir", required=True, type=click.Path())
@click.option("--keyword-table", type=click.Path(exists=True))
def eval_cmd(pairs: str, index_dir: str, output_dir: str, keyword_table: str | None) -> None:
    """Run the retrieval benchmark and write report.json / report.txt."""
    from facetsearch.evalharness import load_pairs_jsonl, run_benchmark, write_report
    from facetsearch.intent import parse_query_fallback

    snapshot, _heads = load_index(index_dir)
    pair_list = load_pairs_jsonl(pairs)
    table = KeywordTable.load(keyword_table) if keyword_table else None
    report = run_benchmark(
        pair_list,
        snapshot,
        FixtureEmbedder(snapshot.dimension),
        parse=lambda q: parse_query_fallback(q, table),
    )
    write_report(report, output_dir)
    click.echo(report.format_table())
    click.echo(f"wrote {output_dir}/report.json and report.txt")


@main.group()
def svg() -> None:
    """Structural SVG summarize / show / stitch."""


@svg.command("summarize")
@click.argument("svg_file", type=click.Path(exists=True))
@click.option("--granularity", default="containers", show_default=True,
              type=click.Choice(["containers", "all"]))
def svg_summarize(svg_file: str, granularity: str) -> None:
    """Emit the structural summary tree as JSON."""
    from facetsearch.svgedit import summarize

    text = Path(svg_file).read_text(encoding="utf-8")
    tree, _vault = summarize(text, granularity=granularity)
    click.echo(json.dumps(tree.to_dict(), indent=2, ensure_ascii=False))


@svg.command("show")
@click.argument("svg_file", type=click.Path(exists=True))
@click.option("--node", "node_id", required=True)
@click.option("--vault", "vault_path", type=click.Path(),
              help="Vault file to create/update with held-out payloads.")
@click.option("--threshold", default=256, show_default=True)
def svg_show(svg_file: str, node_id: str, vault_path: str | None, threshold: int) -> None:
    """Print sanitized subtree code for one node."""
    from facetsearch.svgedit import PayloadVault, show_full_svg
    from facetsearch.svgedit.vault import document_hash

    text = Path(svg_file).read_text(encoding="utf-8")
    if vault_path and Path(vault_path).exists():
        vault = PayloadVault.load(vault_path)
    else:
        vault = PayloadVault(document_hash=document_hash(text))
    snippet = show_full_svg(text, node_id, vault, threshold=threshold)
    if vault_path:
        vault.save(vault_path)
    click.echo(json.dumps(snippet.to_dict(), indent=2, ensure_ascii=False))


@svg.command("stitch")
@click.argument("svg_file", type=click.Path(exists=True))
@click.option("--edits", "edits_path", required=True, type=click.Path(exists=True),
              help="JSON file mapping node_id -> replacement code.")
@click.option("--vault", "vault_path", type=click.Path(exists=True))
@click.option("--out", "output_path", required=True, type=click.Path())
def svg_stitch(svg_file: str, edits_path: str, vault_path: str | None, output_path: str) -> None:
    """Apply node-addressed edits and restore payloads."""
    from facetsearch.svgedit import PayloadVault, stitch_back

    text = Path(svg_file).read_text(encoding="utf-8")
    edits = json.loads(Path(edits_path).read_text(encoding="utf-8"))
    vault = PayloadVault.load(vault_path) if vault_path else None
    result = stitch_back(text, edits, vault)
    Path(output_path).write_text(result, encoding="utf-8")
    if vault is not None and vault_path:
        vault.rebind(result)
        vault.save(vault_path)
    click.echo(f"stitched {len(edits)} edit(s) -> {output_path}")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
def serve(port: int, host: str, config_path: str | None) -> None:
    """Launch the HTTP service."""
    import uvicorn

    from facetsearch.service import ServiceConfig, create_app

    config = ServiceConfig.from_yaml(config_path) if config_path else ServiceConfig()
    app = create_app(config)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
