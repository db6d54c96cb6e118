"""Held-out payload store for sanitized SVG snippets.

Placeholder tokens look like U+27E6 PAYLOAD:n U+27E7 and map to the
exact attribute substring they replaced. The vault is bound to one
document (by content hash); rebinding after a stitch keeps old tokens
resolvable so snippets extracted from earlier versions still restore.

On-disk format (vault.bin): a magic line, the document hash, then
length-prefixed records of token and payload bytes.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

from facetsearch.core import CoreError

TOKEN_RE = re.compile(r"⟦PAYLOAD:(\d+)⟧")

_MAGIC = b"FSVAULT1\n"


class UnknownPlaceholderError(CoreError):
    pass


def document_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def make_token(number: int) -> str:
    return f"⟦PAYLOAD:{number}⟧"


@dataclass
class PayloadVault:
    document_hash: str
    entries: dict[str, str] = field(default_factory=dict)
    _by_payload: dict[str, str] = field(default_factory=dict, repr=False)
    _next: int = 1

    def __post_init__(self) -> None:
        self._by_payload = {payload: token for token, payload in self.entries.items()}
        if self.entries:
            numbers = [int(TOKEN_RE.fullmatch(t).group(1)) for t in self.entries]
            self._next = max(numbers) + 1

    def add(self, payload: str) -> str:
        """Vault a payload, reusing the token for repeated content."""
        existing = self._by_payload.get(payload)
        if existing is not None:
            return existing
        token = make_token(self._next)
        self._next += 1
        self.entries[token] = payload
        self._by_payload[payload] = token
        return token

    def get(self, token: str) -> str:
        try:
            return self.entries[token]
        except KeyError:
            raise UnknownPlaceholderError(f"no vault entry for {token}") from None

    def rebind(self, new_document_text: str) -> None:
        """Point the vault at a new document version, keeping all entries."""
        self.document_hash = document_hash(new_document_text)

    def matches(self, text: str) -> bool:
        return self.document_hash == document_hash(text)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        chunks: list[bytes] = [_MAGIC]
        doc_hash = self.document_hash.encode("utf-8")
        chunks.append(struct.pack(">I", len(doc_hash)))
        chunks.append(doc_hash)
        chunks.append(struct.pack(">I", len(self.entries)))
        for token in sorted(self.entries, key=lambda t: int(TOKEN_RE.fullmatch(t).group(1))):
            token_bytes = token.encode("utf-8")
            payload_bytes = self.entries[token].encode("utf-8")
            chunks.append(struct.pack(">I", len(token_bytes)))
            chunks.append(token_bytes)
            chunks.append(struct.pack(">I", len(payload_bytes)))
            chunks.append(payload_bytes)
        path.write_bytes(b"".join(chunks))

    @classmethod
    def load(cls, path: str | Path) -> "PayloadVault":
        data = Path(path).read_bytes()
        if not data.startswith(_MAGIC):
            raise CoreError(f"{path} is not a payload vault file")
        offset = len(_MAGIC)

        def read_block() -> bytes:
            nonlocal offset
            (length,) = struct.unpack_from(">I", data, offset)
            offset += 4
            block = data[offset : offset + length]
            if len(block) != length:
                raise CoreError(f"{path}: truncated vault file")
            offset += length
            return block

        doc_hash = read_block().decode("utf-8")
        (count,) = struct.unpack_from(">I", data, offset)
        offset += 4
        entries: dict[str, str] = {}
        for _ in range(count):
            token = read_block().decode("utf-8")
            payload = read_block().decode("utf-8")
            entries[token] = payload
        return cls(document_hash=doc_hash, entries=entries)
