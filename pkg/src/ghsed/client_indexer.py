"""Document-owner pipeline: tokenize, build the heuristic table, package for upload.

HT text format::

    GHSED-HT v1 <digest id> <mode>
    <index as 16 hex> <ki> <ki>|<digit sum>
    ...
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import FormatError
from .keyword_core import (
    DEFAULT_INDEX_BITS,
    MAX_KEYWORD_LEN,
    HtRecord,
    VerKey,
    digest_id,
    digit_sum,
    index_of,
    ki,
    parse_digest_id,
)
from .owner_crypto import DocumentCiphertext, ExponentMode, encrypt_document, encrypt_keyword

HT_MAGIC = "GHSED-HT"
HT_VERSION = "v1"

# ASCII-only on purpose: anything else, including accented letters, separates tokens
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


def tokenize(text: str) -> list[str]:
    return [tok.lower()[:MAX_KEYWORD_LEN] for tok in _TOKEN_RE.findall(text)]


@dataclass(frozen=True)
class HeuristicTable:
    records: tuple[HtRecord, ...] = ()
    digest_algorithm_id: str = field(default_factory=digest_id)
    mode: ExponentMode = ExponentMode.PUBLIC

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "mode", ExponentMode(self.mode))
        parse_digest_id(self.digest_algorithm_id)

    @property
    def index_bits(self) -> int:
        return parse_digest_id(self.digest_algorithm_id)

    def __len__(self):
        return len(self.records)


def record_for(w: str, key, mode=ExponentMode.PUBLIC,
               index_bits: int = DEFAULT_INDEX_BITS) -> HtRecord:
    k = ki(w)
    return HtRecord(index_of(w, index_bits), k, VerKey(k, digit_sum(encrypt_keyword(w, key, mode))))


def build_heuristic_table(plaintext: str, key, mode=ExponentMode.PUBLIC,
                          index_bits: int = DEFAULT_INDEX_BITS,
                          cache: dict | None = None) -> HeuristicTable:
    """One record per distinct keyword, sorted for a canonical serialization.

    ``cache`` maps keyword -> HtRecord and may be shared across documents
    built with the same key, mode and index width; every value is a pure
    function of those, so reuse only saves repeated modular exponentiations.
    """
    mode = ExponentMode(mode)
    if isinstance(plaintext, (bytes, bytearray)):
        plaintext = plaintext.decode("utf-8", errors="replace")
    words = dict.fromkeys(tokenize(plaintext))
    records = []
    for w in words:
        if cache is None:
            rec = record_for(w, key, mode, index_bits)
        else:
            rec = cache.get(w)
            if rec is None:
                rec = cache[w] = record_for(w, key, mode, index_bits)
        records.append(rec)
    records.sort()
    return HeuristicTable(tuple(records), digest_id(index_bits), mode)


def serialize_ht(t: HeuristicTable) -> bytes:
    lines = [f"{HT_MAGIC} {HT_VERSION} {t.digest_algorithm_id} {t.mode.value}"]
    lines.extend(f"{r.index:016x} {r.ki} {r.ver_key}" for r in t.records)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _decimal(tok: str, lineno: int, what: str) -> int:
    if not (tok.isascii() and tok.isdigit()) or (tok != "0" and tok.startswith("0")):
        raise FormatError(f"line {lineno}: {what} {tok!r} is not a canonical decimal")
    return int(tok)


def parse_ht(b: bytes) -> HeuristicTable:
    try:
        text = bytes(b).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"HT is not valid UTF-8: {exc}") from None
    if not text.endswith("\n"):
        raise FormatError("HT must end with a newline (truncated?)")
    lines = text[:-1].split("\n")
    header = lines[0].split(" ")
    if len(header) != 4 or header[0] != HT_MAGIC or header[1] != HT_VERSION:
        raise FormatError(f"line 1: bad header {lines[0]!r}")
    try:
        ident = header[2]
        parse_digest_id(ident)
        mode = ExponentMode(header[3])
    except (FormatError, ValueError):
        raise FormatError(f"line 1: bad header {lines[0]!r}") from None
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(" ")
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        idx, kic, vk = parts
        if len(idx) != 16 or any(c not in "0123456789abcdef" for c in idx):
            raise FormatError(f"line {lineno}: index {idx!r} is not 16 lowercase hex chars")
        k = _decimal(kic, lineno, "ki")
        try:
            ver = VerKey.parse(vk)
        except FormatError:
            raise FormatError(f"line {lineno}: malformed ver-key {vk!r}") from None
        if ver.ki != k:
            raise FormatError(f"line {lineno}: ver-key ki {ver.ki} does not match ki column {k}")
        records.append(HtRecord(int(idx, 16), k, ver))
    return HeuristicTable(tuple(records), ident, mode)


@dataclass(frozen=True)
class StorePackage:
    ciphertext: DocumentCiphertext
    table: HeuristicTable


def make_store_package(plaintext: bytes, key, mode=ExponentMode.PUBLIC,
                       index_bits: int = DEFAULT_INDEX_BITS,
                       cache: dict | None = None) -> StorePackage:
    text = bytes(plaintext).decode("utf-8", errors="replace")
    table = build_heuristic_table(text, key, mode, index_bits, cache)
    return StorePackage(encrypt_document(plaintext, key), table)
