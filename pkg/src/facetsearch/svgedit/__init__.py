"""Structural SVG editing substrate: summarize, sanitize, stitch.

Documents are parsed once into a DOM; nodes are addressed by stable
path-derived ids ("0.2.1" = root, third child, second grandchild among
element children). Large embedded payloads (base64 data URIs) are held
out in a vault behind placeholder tokens so edits travel as compact
sanitized snippets and payloads are restored byte-exactly on stitch.
"""

from facetsearch.svgedit.adapter import (
    MalformedDocumentError,
    MalformedReplacementError,
    NestedEditConflictError,
    SanitizedSnippet,
    SvgSummaryNode,
    UnknownNodeIdError,
    show_full_svg,
    stitch_back,
    summarize,
)
from facetsearch.svgedit.canonical import canonicalize
from facetsearch.svgedit.vault import PayloadVault, UnknownPlaceholderError

__all__ = [
    "MalformedDocumentError",
    "MalformedReplacementError",
    "NestedEditConflictError",
    "PayloadVault",
    "SanitizedSnippet",
    "SvgSummaryNode",
    "UnknownNodeIdError",
    "UnknownPlaceholderError",
    "canonicalize",
    "show_full_svg",
    "stitch_back",
    "summarize",
]
