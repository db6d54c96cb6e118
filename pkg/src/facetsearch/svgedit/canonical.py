"""Canonical serialization for SVG round-trip comparisons.

Raw byte identity across a parse/serialize cycle is unrealistic, so
equality checks use a normalized form instead: attributes sorted
lexicographically, double-quoted, whitespace runs in text collapsed to a
single space (whitespace-only text dropped), comments and processing
instructions omitted, empty elements self-closed. Two documents that
differ only in such noise canonicalize identically.
"""

from __future__ import annotations

import re
from xml.dom import minidom

_WS_RE = re.compile(r"\s+")


def _escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _escape_attr(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def canonicalize_element(element: minidom.Element) -> str:
    parts: list[str] = [f"<{element.tagName}"]
    attrs = element.attributes
    if attrs:
        for name in sorted(attrs.keys()):
            parts.append(f' {name}="{_escape_attr(attrs[name].value)}"')
    children = _canonical_children(element)
    if not children:
        parts.append("/>")
        return "".join(parts)
    parts.append(">")
    parts.extend(children)
    parts.append(f"</{element.tagName}>")
    return "".join(parts)


def _canonical_children(element: minidom.Element) -> list[str]:
    out: list[str] = []
    for child in element.childNodes:
        if child.nodeType == child.ELEMENT_NODE:
            out.append(canonicalize_element(child))
        elif child.nodeType in (child.TEXT_NODE, child.CDATA_SECTION_NODE):
            text = _WS_RE.sub(" ", child.data).strip()
            if text:
                out.append(_escape_text(text))
        # comments, PIs, and doctype noise are not part of the canonical form
    return out


def canonicalize(svg_text: str) -> str:
    """Canonical single-line form of a well-formed SVG document."""
    from facetsearch.svgedit.adapter import parse_document  # cycle-free at runtime

    doc = parse_document(svg_text)
    try:
        return canonicalize_element(doc.documentElement)
    finally:
        doc.unlink()
