"""Build a self-contained demo workspace: synthetic corpus with SVG
exemplars, trained heads, an index directory, and a service config.

Usage: python scripts/make_demo.py [target_dir]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import yaml

from facetsearch.alignment import TrainConfig, train_heads
from facetsearch.alignment import make_synthetic_alignment_set
from facetsearch.core import ChartType, CorpusRecord, normalize
from facetsearch.embedder import FixtureEmbedder
from facetsearch.index import build_index, save_index, write_records_jsonl
from facetsearch.kernel import default_kernel_table

DIMENSION = 64
N_RECORDS = 120

PALETTES = [
    ("#264653", "#2a9d8f", "#e9c46a"),
    ("#606c38", "#dda15e", "#bc6c25"),
    ("#8ecae6", "#219ebc", "#ffb703"),
    ("#cdb4db", "#ffc8dd", "#a2d2ff"),
]

STYLE_WORDS = ["minimalist", "editorial", "playful", "pastel", "3d", "muted"]
LAYOUT_WORDS = ["radial", "vertical poster", "grid", "dense annotations", "sections"]
ILLO_WORDS = ["icons", "pictograms", "scene-based", "minimal decoration"]
TOPICS = [
    "commute mode share", "screen time by age", "coffee consumption trend",
    "renewable energy growth", "app downloads comparison", "water usage breakdown",
]


def demo_svg(index: int, title: str, palette) -> str:
    bars = "".join(
        f'<rect x="{12 + j * 22}" y="{90 - (index * 7 + j * 13) % 70}" width="16" '
        f'height="{(index * 7 + j * 13) % 70 + 8}" fill="{palette[j % 3]}"/>'
        for j in range(4)
    )
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 120 110">'
        f'<g id="header"><text x="6" y="12" font-size="8">{title}</text></g>'
        f'<g id="marks">{bars}</g>'
        f'<g id="footer"><text x="6" y="106" font-size="5">demo exemplar {index}</text></g>'
        "</svg>"
    )


def main() -> None:
    target = Path(sys.argv[1] if len(sys.argv) > 1 else "demo")
    target.mkdir(parents=True, exist_ok=True)
    svg_dir = target / "svgs"
    svg_dir.mkdir(exist_ok=True)
    rng = np.random.default_rng(2026)
    embedder = FixtureEmbedder(DIMENSION)
    types = list(ChartType)

    print(f"writing {N_RECORDS} demo records with SVGs ...")
    records = []
    for i in range(N_RECORDS):
        topic = TOPICS[i % len(TOPICS)]
        style = STYLE_WORDS[i % len(STYLE_WORDS)]
        layout = LAYOUT_WORDS[i % len(LAYOUT_WORDS)]
        illo = ILLO_WORDS[i % len(ILLO_WORDS)]
        chart = types[i % len(types)]
        title = f"{style} {chart.value.lower()} of {topic}"
        svg_path = svg_dir / f"demo-{i:03d}.svg"
        svg_path.write_text(
            demo_svg(i, title, PALETTES[i % len(PALETTES)]), encoding="utf-8"
        )
        # base embedding blends the facet descriptions so fixture-embedded
        # queries about style/layout/topic actually land near their records
        parts = embedder.embed_texts(
            [f"content: {topic}", f"layout: {layout}", f"illustration: {illo}", f"style: {style}"]
        )
        base = normalize(parts.sum(axis=0) + 0.35 * rng.standard_normal(DIMENSION))
        records.append(
            CorpusRecord(
                id=f"demo-{i:03d}",
                chart_types=frozenset({chart, types[(i * 5) % len(types)]}),
                base_embedding=base,
                metadata={
                    "title": title,
                    "svg_path": str(svg_path.resolve()),
                    "source": "synthetic-demo",
                },
            )
        )
    write_records_jsonl(records, target / "records.jsonl")

    print("training projection heads on a synthetic alignment set ...")
    dataset = make_synthetic_alignment_set(96, 6, DIMENSION, seed=7)
    heads, log = train_heads(dataset, TrainConfig(epochs=12, seed=7, hidden=128))
    print(f"  final epoch mean loss {log.epoch_mean_loss[-1]:.4f}")
    heads.save(target / "heads.bin")

    print("building index ...")
    snapshot = build_index(records, heads, default_kernel_table())
    save_index(snapshot, heads, target / "index")

    config = {
        "dimension": DIMENSION,
        "index_dir": str((target / "index").resolve()),
        "sessions_dir": str((target / "sessions").resolve()),
        "embedder_mode": "fixture",
        "parser_fallback_only": True,
    }
    (target / "config.yaml").write_text(yaml.safe_dump(config), encoding="utf-8")
    print(f"done. start the service with:\n  facetsearch serve --config {target}/config.yaml")


if __name__ == "__main__":
    main()
