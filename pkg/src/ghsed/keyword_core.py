"""Indexing arithmetic shared by the document owner and the server.

Every function here is pure. Keywords are plain ``str`` objects drawn from
the 36-symbol alphabet ``a-z0-9`` with length 1..64; :func:`check_keyword`
enforces that.
"""

from __future__ import annotations

import hashlib
import string
from dataclasses import dataclass

from .errors import DomainError, FormatError

ALPHABET = string.ascii_lowercase + string.digits
MAX_KEYWORD_LEN = 64
DIGEST_NAME = "sha256"
DEFAULT_INDEX_BITS = 64

_CHAR_VALUES = {c: i + 1 for i, c in enumerate(ALPHABET)}


def char_value(c: str) -> int:
    """a..z -> 1..26, 0..9 -> 27..36."""
    try:
        return _CHAR_VALUES[c]
    except KeyError:
        raise DomainError(f"character {c!r} is outside the keyword alphabet") from None


def check_keyword(w: str) -> str:
    if not isinstance(w, str):
        raise DomainError(f"keyword must be str, got {type(w).__name__}")
    if not 1 <= len(w) <= MAX_KEYWORD_LEN:
        raise DomainError(f"keyword length {len(w)} outside 1..{MAX_KEYWORD_LEN}")
    for c in w:
        if c not in _CHAR_VALUES:
            raise DomainError(f"character {c!r} in {w!r} is outside the keyword alphabet")
    return w


def ki(w: str) -> int:
    """Position-weighted character sum: sum of char_value(w[j]) * j, j from 1."""
    check_keyword(w)
    return sum(_CHAR_VALUES[c] * j for j, c in enumerate(w, start=1))


def ki_upper_bound(n: int) -> int:
    return 36 * n * (n + 1) // 2


def digit_sum(x: int) -> int:
    """Sum of the decimal digits of a non-negative integer."""
    if x < 0:
        raise DomainError("digit_sum is defined for non-negative integers only")
    s = str(x)
    return sum(d * s.count(str(d)) for d in range(1, 10))


def digest_id(index_bits: int = DEFAULT_INDEX_BITS) -> str:
    """Identifier written into every artifact header, e.g. ``sha256-64``."""
    if not 1 <= index_bits <= 64:
        raise DomainError(f"index_bits must be in 1..64, got {index_bits}")
    return f"{DIGEST_NAME}-{index_bits}"


def parse_digest_id(ident: str) -> int:
    """Inverse of :func:`digest_id`; returns the index width in bits."""
    name, sep, bits = ident.partition("-")
    if name != DIGEST_NAME or not sep or not bits.isdigit() or bits != str(int(bits)):
        raise FormatError(f"unsupported digest id {ident!r}")
    n = int(bits)
    if not 1 <= n <= 64:
        raise FormatError(f"unsupported digest id {ident!r}")
    return n


def index_of(w: str, index_bits: int = DEFAULT_INDEX_BITS) -> int:
    """First 8 bytes (big-endian) of SHA-256(w), optionally cut to the top ``index_bits`` bits.

    The reduced widths exist so tests can reach bucket collisions.
    """
    check_keyword(w)
    if not 1 <= index_bits <= 64:
        raise DomainError(f"index_bits must be in 1..64, got {index_bits}")
    head = int.from_bytes(hashlib.sha256(w.encode("utf-8")).digest()[:8], "big")
    return head >> (64 - index_bits)


@dataclass(frozen=True, order=True)
class VerKey:
    ki: int
    digit_sum: int

    def __post_init__(self):
        if self.ki < 0 or self.digit_sum < 0:
            raise DomainError("VerKey components must be non-negative")

    def __str__(self):
        return f"{self.ki}|{self.digit_sum}"

    @classmethod
    def parse(cls, text: str) -> "VerKey":
        left, sep, right = text.partition("|")
        if not sep or not _is_canonical_decimal(left) or not _is_canonical_decimal(right):
            raise FormatError(f"malformed ver-key {text!r}")
        return cls(int(left), int(right))


def make_ver_key(ki_value: int, s: int) -> VerKey:
    return VerKey(ki_value, s)


@dataclass(frozen=True, order=True)
class HtRecord:
    """One heuristic-table row: (index, KI, Ver-Key). KI is kept in both columns."""

    index: int
    ki: int
    ver_key: VerKey

    def __post_init__(self):
        if self.ver_key.ki != self.ki:
            raise FormatError(
                f"ver_key.ki {self.ver_key.ki} does not match ki column {self.ki}"
            )
        if not 0 <= self.index < 1 << 64:
            raise FormatError(f"index {self.index} does not fit in 64 bits")


def _is_canonical_decimal(s: str) -> bool:
    # no sign, no leading zeros, ASCII digits only
    return s.isascii() and s.isdigit() and (s == "0" or not s.startswith("0"))
