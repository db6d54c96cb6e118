"""Summarize / show / stitch operations over one SVG document.

node_id scheme: the path of element-child indices from the root, dot
joined ("0" is the root, "0.2.1" the second element child of the root's
third element child). Ids derive purely from document order, so
re-summarizing an unmodified document reproduces them exactly, and edits
confined to a subtree's interior leave sibling ids untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping
from xml.dom import minidom
from xml.parsers.expat import ExpatError

from facetsearch.core import CoreError
from facetsearch.svgedit.vault import TOKEN_RE, PayloadVault, document_hash

DEFAULT_PAYLOAD_THRESHOLD = 256

#: Grouping/container tags always present in the structural summary.
CONTAINER_TAGS = {
    "svg", "g", "defs", "symbol", "marker", "pattern", "mask", "clipPath",
    "switch", "a", "foreignObject",
}

_PAYLOAD_ATTRS = ("href", "xlink:href")
_STYLE_URL_RE = re.compile(r"url\(\s*(['\"]?)(data:[^)'\"]+)\1\s*\)")
_WS_RE = re.compile(r"\s+")


class MalformedDocumentError(CoreError):
    pass


class MalformedReplacementError(CoreError):
    pass


class UnknownNodeIdError(CoreError):
    pass


class NestedEditConflictError(CoreError):
    pass


@dataclass
class SvgSummaryNode:
    node_id: str
    tag: str
    depth: int
    child_summary: dict[str, int] = field(default_factory=dict)
    text_excerpt: str | None = None
    children: list["SvgSummaryNode"] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "tag": self.tag,
            "depth": self.depth,
            "child_summary": dict(self.child_summary),
            "text_excerpt": self.text_excerpt,
            "children": [c.to_dict() for c in self.children],
        }

    def iter_nodes(self):
        yield self
        for child in self.children:
            yield from child.iter_nodes()


@dataclass
class SanitizedSnippet:
    node_id: str
    code: str
    placeholder_tokens: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "code": self.code,
            "placeholder_tokens": list(self.placeholder_tokens),
        }


def parse_document(text: str) -> minidom.Document:
    try:
        return minidom.parseString(text)
    except ExpatError as exc:
        raise MalformedDocumentError(f"not well-formed XML: {exc}") from exc


def element_children(node: minidom.Node) -> list[minidom.Element]:
    return [c for c in node.childNodes if c.nodeType == c.ELEMENT_NODE]


def resolve_node(doc: minidom.Document, node_id: str) -> minidom.Element:
    """Walk a dot-joined element-child-index path from the document root."""
    parts = node_id.split(".") if node_id else []
    if not parts or any(not p.isdigit() for p in parts):
        raise UnknownNodeIdError(f"malformed node_id: {node_id!r}")
    indices = [int(p) for p in parts]
    if indices[0] != 0:
        raise UnknownNodeIdError(f"node_id must start at the root ('0'): {node_id!r}")
    current: minidom.Element = doc.documentElement
    for index in indices[1:]:
        children = element_children(current)
        if index >= len(children):
            raise UnknownNodeIdError(f"no element at path {node_id!r}")
        current = children[index]
    return current


def _contained_text(element: minidom.Element, limit: int = 40) -> str | None:
    parts: list[str] = []
    stack = [element]
    while stack:
        node = stack.pop(0)
        for child in node.childNodes:
            if child.nodeType in (child.TEXT_NODE, child.CDATA_SECTION_NODE):
                parts.append(child.data)
            elif child.nodeType == child.ELEMENT_NODE:
                stack.append(child)
    text = _WS_RE.sub(" ", " ".join(parts)).strip()
    return text[:limit] if text else None


def _summarize_element(
    element: minidom.Element, node_id: str, depth: int, granularity: str
) -> SvgSummaryNode:
    children = element_children(element)
    summary: dict[str, int] = {}
    for child in children:
        summary[child.tagName] = summary.get(child.tagName, 0) + 1
    node = SvgSummaryNode(
        node_id=node_id,
        tag=element.tagName,
        depth=depth,
        child_summary=summary,
        text_excerpt=_contained_text(element),
    )
    for index, child in enumerate(children):
        include = granularity == "all" or (
            child.tagName in CONTAINER_TAGS or element_children(child)
        )
        if include:
            node.children.append(
                _summarize_element(child, f"{node_id}.{index}", depth + 1, granularity)
            )
    return node


def summarize(
    svg_text: str, granularity: str = "containers"
) -> tuple[SvgSummaryNode, PayloadVault]:
    """Build the structural summary tree plus a fresh vault for the doc.

    With the default granularity, grouping/container elements and any
    element with element children become summary nodes; leaf runs are
    collapsed into their parent's child_summary counts. ``"all"`` makes
    every element addressable in the summary.
    """
    if granularity not in ("containers", "all"):
        raise CoreError(f"unknown granularity: {granularity!r}")
    doc = parse_document(svg_text)
    try:
        root = _summarize_element(doc.documentElement, "0", 0, granularity)
    finally:
        doc.unlink()
    return root, PayloadVault(document_hash=document_hash(svg_text))


def _sanitize_clone(
    clone: minidom.Element, vault: PayloadVault, threshold: int
) -> list[str]:
    """Replace oversized data-URI payloads on the clone; returns tokens."""
    tokens: list[str] = []
    stack: list[minidom.Element] = [clone]
    while stack:
        element = stack.pop(0)
        for attr in _PAYLOAD_ATTRS:
            if element.hasAttribute(attr):
                value = element.getAttribute(attr)
                if value.startswith("data:") and len(value) > threshold:
                    token = vault.add(value)
                    element.setAttribute(attr, token)
                    if token not in tokens:
                        tokens.append(token)
        if element.hasAttribute("style"):
            style = element.getAttribute("style")

            def _swap(match: re.Match) -> str:
                uri = match.group(2)
                if len(uri) <= threshold:
                    return match.group(0)
                token = vault.add(uri)
                if token not in tokens:
                    tokens.append(token)
                return f"url({match.group(1)}{token}{match.group(1)})"

            new_style = _STYLE_URL_RE.sub(_swap, style)
            if new_style != style:
                element.setAttribute("style", new_style)
        stack.extend(element_children(element))
    return tokens


def show_full_svg(
    svg_text: str,
    node_id: str,
    vault: PayloadVault,
    threshold: int = DEFAULT_PAYLOAD_THRESHOLD,
) -> SanitizedSnippet:
    """Extract one subtree as sanitized code.

    The vault must have been produced for exactly this document text
    (summaries go stale when the document is replaced; a hash mismatch
    surfaces as UnknownNodeId). New payload tokens are recorded in the
    vault as a side effect.
    """
    if not vault.matches(svg_text):
        raise UnknownNodeIdError(
            "summary is stale: vault was built for a different document"
        )
    doc = parse_document(svg_text)
    try:
        element = resolve_node(doc, node_id)
        clone = element.cloneNode(True)
        tokens = _sanitize_clone(clone, vault, threshold)
        code = clone.toxml()
    finally:
        doc.unlink()
    return SanitizedSnippet(node_id=node_id, code=code, placeholder_tokens=tokens)


def _in_scope_namespace_decls(element: minidom.Element) -> dict[str, str]:
    """xmlns declarations visible at ``element``, nearest ancestor wins."""
    chain: list[minidom.Element] = []
    node = element
    while node is not None and node.nodeType == node.ELEMENT_NODE:
        chain.append(node)
        node = node.parentNode
    decls: dict[str, str] = {}
    for ancestor in reversed(chain):  # root first, closer ancestors override
        attrs = ancestor.attributes
        if attrs is None:
            continue
        for name in attrs.keys():
            if name == "xmlns" or name.startswith("xmlns:"):
                decls[name] = attrs[name].value
    return decls


def _parse_fragment(
    code: str, scope_decls: Mapping[str, str]
) -> tuple[minidom.Document, minidom.Element]:
    """Parse a replacement fragment, supplying in-scope xmlns decls."""
    decl_attrs = "".join(
        f' {name}="{value}"' for name, value in sorted(scope_decls.items())
    )
    wrapped = f"<fragment-scope{decl_attrs}>{code}</fragment-scope>"
    try:
        doc = minidom.parseString(wrapped)
    except ExpatError as exc:
        raise MalformedReplacementError(f"replacement is not well-formed: {exc}") from exc
    roots = element_children(doc.documentElement)
    if len(roots) != 1:
        doc.unlink()
        raise MalformedReplacementError(
            f"replacement must be exactly one element, got {len(roots)}"
        )
    return doc, roots[0]


def _restore_payloads(element: minidom.Element, vault: PayloadVault | None) -> None:
    """Substitute every placeholder token in the fragment from the vault."""

    def _sub(value: str) -> str:
        def _lookup(match: re.Match) -> str:
            if vault is None:
                from facetsearch.svgedit.vault import UnknownPlaceholderError

                raise UnknownPlaceholderError(
                    f"replacement references {match.group(0)} but no vault was given"
                )
            return vault.get(match.group(0))

        return TOKEN_RE.sub(_lookup, value)

    stack: list[minidom.Node] = [element]
    while stack:
        node = stack.pop(0)
        if node.nodeType == node.ELEMENT_NODE:
            attrs = node.attributes
            for name in list(attrs.keys()):
                value = attrs[name].value
                new_value = _sub(value)
                if new_value != value:
                    node.setAttribute(name, new_value)
            stack.extend(node.childNodes)
        elif node.nodeType in (node.TEXT_NODE, node.CDATA_SECTION_NODE):
            new_data = _sub(node.data)
            if new_data != node.data:
                node.data = new_data


def _check_non_nested(node_ids: list[str]) -> None:
    for i, a in enumerate(node_ids):
        for b in node_ids[i + 1 :]:
            if a == b:
                continue
            if b.startswith(a + ".") or a.startswith(b + "."):
                raise NestedEditConflictError(
                    f"edit targets are nested: {a!r} and {b!r}"
                )


def stitch_back(
    svg_text: str,
    edits: Mapping[str, str],
    vault: PayloadVault | None = None,
) -> str:
    """Replace whole subtrees and restore held-out payloads.

    Edit targets must be pairwise non-nested; replacement code must be a
    single well-formed element (in-scope xmlns declarations from the host
    document are honored). Placeholder tokens anywhere in a replacement
    are substituted byte-exactly from the vault. With no edits the
    document round-trips to a canonically equal copy.
    """
    if vault is not None and not vault.matches(svg_text):
        raise UnknownNodeIdError(
            "stitch targets a different document than the vault was built for"
        )
    doc = parse_document(svg_text)
    try:
        node_ids = sorted(edits.keys())
        _check_non_nested(node_ids)
        targets = {node_id: resolve_node(doc, node_id) for node_id in node_ids}
        for node_id in node_ids:
            target = targets[node_id]
            scope = _in_scope_namespace_decls(target)
            frag_doc, frag_root = _parse_fragment(edits[node_id], scope)
            try:
                _restore_payloads(frag_root, vault)
                imported = doc.importNode(frag_root, True)
            finally:
                frag_doc.unlink()
            target.parentNode.replaceChild(imported, target)
        result = doc.documentElement.toxml()
    finally:
        doc.unlink()
    if svg_text.lstrip().startswith("<?xml"):
        result = '<?xml version="1.0" encoding="UTF-8"?>\n' + result
    return result
