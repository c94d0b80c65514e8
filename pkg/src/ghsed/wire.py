"""Length-prefixed binary frames exchanged between owner and server.

Frame: ``u32 length`` (big-endian, counts msg_type + payload), ``u8 msg_type``, payload.

Payloads (all integers big-endian):

* STORE_REQ   u32 len, ciphertext | u32 len, HT bytes
* STORE_RESP  u64 doc id
* SEARCH_REQ  u8 flags (bit 0: ids only) | signed trapdoor bytes
* SEARCH_RESP u32 count | count x (u64 doc id, u32 len, ciphertext)
* ERROR       u8 code | UTF-8 text
"""

from __future__ import annotations

import enum
import struct

from .errors import ProtocolError

MAX_FRAME = 64 * 1024 * 1024
FLAG_IDS_ONLY = 0x01


class MsgType(enum.IntEnum):
    STORE_REQ = 0x01
    STORE_RESP = 0x02
    SEARCH_REQ = 0x03
    SEARCH_RESP = 0x04
    ERROR = 0x7F


class ErrorCode(enum.IntEnum):
    INTERNAL = 1
    AUTH = 3
    PROTO = 4
    STORAGE = 5


def encode_frame(msg_type: int, payload: bytes = b"") -> bytes:
    if 1 + len(payload) > MAX_FRAME:
        raise ProtocolError(f"frame of {1 + len(payload)} bytes exceeds {MAX_FRAME}")
    return struct.pack(">IB", 1 + len(payload), msg_type) + payload


def decode_frame(data: bytes) -> tuple[MsgType, bytes]:
    """Decode exactly one frame held in ``data``."""
    if len(data) < 5:
        raise ProtocolError("frame shorter than its header")
    length, raw_type = struct.unpack_from(">IB", data)
    if length != len(data) - 4:
        raise ProtocolError("frame length does not match its contents")
    return _msg_type(raw_type), bytes(data[5:])


def _msg_type(raw: int) -> MsgType:
    try:
        return MsgType(raw)
    except ValueError:
        raise ProtocolError(f"unknown message type 0x{raw:02x}") from None


def recv_exact(sock, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return bytes(buf)


def read_frame(sock) -> tuple[MsgType, bytes] | None:
    """Read one frame from a socket; ``None`` on a clean EOF before the header."""
    head = recv_exact(sock, 4)
    if not head:
        return None
    if len(head) < 4:
        raise ProtocolError("connection closed inside a frame header")
    (length,) = struct.unpack(">I", head)
    if length < 1 or length > MAX_FRAME:
        raise ProtocolError(f"invalid frame length {length}")
    body = recv_exact(sock, length)
    if len(body) < length:
        raise ProtocolError("connection closed inside a frame body")
    return _msg_type(body[0]), body[1:]


# -- payload codecs ---------------------------------------------------------------

class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def unpack(self, fmt):
        try:
            vals = struct.unpack_from(fmt, self.data, self.pos)
        except struct.error:
            raise ProtocolError("payload truncated") from None
        self.pos += struct.calcsize(fmt)
        return vals

    def blob(self):
        (n,) = self.unpack(">I")
        chunk = self.data[self.pos:self.pos + n]
        if len(chunk) != n:
            raise ProtocolError("payload truncated")
        self.pos += n
        return chunk

    def finish(self):
        if self.pos != len(self.data):
            raise ProtocolError("payload has trailing bytes")


def encode_store_req(ciphertext: bytes, ht: bytes) -> bytes:
    return struct.pack(">I", len(ciphertext)) + ciphertext + struct.pack(">I", len(ht)) + ht


def decode_store_req(payload: bytes) -> tuple[bytes, bytes]:
    c = _Cursor(payload)
    ct, ht = c.blob(), c.blob()
    c.finish()
    return ct, ht


def encode_store_resp(doc_id: int) -> bytes:
    return struct.pack(">Q", doc_id)


def decode_store_resp(payload: bytes) -> int:
    c = _Cursor(payload)
    (doc_id,) = c.unpack(">Q")
    c.finish()
    return doc_id


def encode_search_req(signed_trapdoor: bytes, ids_only: bool = False) -> bytes:
    return bytes([FLAG_IDS_ONLY if ids_only else 0]) + signed_trapdoor


def decode_search_req(payload: bytes) -> tuple[bytes, bool]:
    if not payload:
        raise ProtocolError("empty SEARCH_REQ")
    flags = payload[0]
    if flags & ~FLAG_IDS_ONLY:
        raise ProtocolError(f"unknown SEARCH_REQ flags 0x{flags:02x}")
    return payload[1:], bool(flags & FLAG_IDS_ONLY)


def encode_search_resp(items) -> bytes:
    parts = [struct.pack(">I", len(items))]
    for doc_id, ct in items:
        parts.append(struct.pack(">QI", doc_id, len(ct)) + ct)
    return b"".join(parts)


def decode_search_resp(payload: bytes) -> list[tuple[int, bytes]]:
    c = _Cursor(payload)
    (count,) = c.unpack(">I")
    items = []
    for _ in range(count):
        (doc_id,) = c.unpack(">Q")
        items.append((doc_id, c.blob()))
    c.finish()
    return items


def encode_error(code: int, text: str) -> bytes:
    return bytes([int(code)]) + text.encode("utf-8")


def decode_error(payload: bytes) -> tuple[int, str]:
    if not payload:
        raise ProtocolError("empty ERROR payload")
    return payload[0], payload[1:].decode("utf-8", errors="replace")


__all__ = [
    "ErrorCode", "MsgType", "MAX_FRAME",
    "decode_error", "decode_frame", "decode_search_req", "decode_search_resp",
    "decode_store_req", "decode_store_resp", "encode_error", "encode_frame",
    "encode_search_req", "encode_search_resp", "encode_store_req", "encode_store_resp",
    "read_frame", "recv_exact",
]
