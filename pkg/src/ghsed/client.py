"""Owner-side client: key directories and the store/search round trips."""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass
from pathlib import Path

from . import wire
from .client_indexer import make_store_package, serialize_ht, tokenize
from .errors import ParameterError, ProtocolError, RemoteError, TransportError
from .keyword_core import DEFAULT_INDEX_BITS
from .owner_crypto import ExponentMode, OwnerKeyPair, decrypt_document, make_trapdoor
from .server import OWNER_PUB_NAME, parse_address
from .wire import MsgType

KEY_NAME = "owner_key.pem"
CONFIG_NAME = "ghsed.json"


@dataclass(frozen=True)
class OwnerKeys:
    """The owner's key pair plus the indexing settings every HT and trapdoor must share."""

    key: OwnerKeyPair
    mode: ExponentMode = ExponentMode.PUBLIC
    index_bits: int = DEFAULT_INDEX_BITS

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        kpath = d / KEY_NAME
        kpath.write_bytes(self.key.to_pem())
        kpath.chmod(0o600)
        (d / OWNER_PUB_NAME).write_bytes(self.key.public.to_pem())
        cfg = {"mode": ExponentMode(self.mode).value, "index_bits": self.index_bits,
               "key_id": self.key.key_id}
        (d / CONFIG_NAME).write_text(json.dumps(cfg, indent=2) + "\n")

    @classmethod
    def load(cls, directory) -> "OwnerKeys":
        d = Path(directory)
        key = OwnerKeyPair.from_pem((d / KEY_NAME).read_bytes())
        cfg = {}
        if (d / CONFIG_NAME).exists():
            cfg = json.loads((d / CONFIG_NAME).read_text())
        return cls(key, ExponentMode(cfg.get("mode", "public")),
                   int(cfg.get("index_bits", DEFAULT_INDEX_BITS)))


def query_keyword(word: str) -> str:
    tokens = tokenize(word)
    if len(tokens) != 1:
        raise ParameterError(f"search term {word!r} must normalize to exactly one keyword")
    return tokens[0]


class GhsedClient:
    """Blocking request/response over one TCP connection.

    ``wiretap``, when given, is called with ``("send" | "recv", bytes)`` for
    every chunk crossing the socket.
    """

    def __init__(self, server, timeout: float = 30.0, wiretap=None):
        self.address = parse_address(server) if isinstance(server, str) else tuple(server)
        self.timeout = timeout
        self.wiretap = wiretap
        self._sock: socket.socket | None = None

    def connect(self):
        if self._sock is None:
            try:
                self._sock = socket.create_connection(self.address, timeout=self.timeout)
            except OSError as exc:
                raise TransportError(f"cannot connect to {self.address}: {exc}") from exc
        return self

    def close(self):
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self.connect()

    def __exit__(self, *exc):
        self.close()

    def call(self, msg_type: MsgType, payload: bytes) -> tuple[MsgType, bytes]:
        self.connect()
        frame = wire.encode_frame(msg_type, payload)
        try:
            self._sock.sendall(frame)
            if self.wiretap:
                self.wiretap("send", frame)
            reply = wire.read_frame(_Tapped(self._sock, self.wiretap))
        except OSError as exc:
            self.close()
            raise TransportError(f"connection to {self.address} failed: {exc}") from exc
        except ProtocolError:
            self.close()
            raise
        if reply is None:
            self.close()
            raise TransportError("server closed the connection")
        rtype, rpayload = reply
        if rtype is MsgType.ERROR:
            code, text = wire.decode_error(rpayload)
            raise RemoteError(code, text)
        return rtype, rpayload

    def _expect(self, reply, msg_type):
        if reply[0] is not msg_type:
            self.close()
            raise ProtocolError(f"expected {msg_type.name}, got {reply[0].name}")
        return reply[1]

    def store_raw(self, ciphertext: bytes, ht: bytes) -> int:
        reply = self.call(MsgType.STORE_REQ, wire.encode_store_req(ciphertext, ht))
        return wire.decode_store_resp(self._expect(reply, MsgType.STORE_RESP))

    def search_raw(self, signed_trapdoor: bytes, ids_only: bool = False) -> list[tuple[int, bytes]]:
        reply = self.call(MsgType.SEARCH_REQ, wire.encode_search_req(signed_trapdoor, ids_only))
        return wire.decode_search_resp(self._expect(reply, MsgType.SEARCH_RESP))

    def store(self, data: bytes, keys: OwnerKeys, cache: dict | None = None) -> int:
        pkg = make_store_package(data, keys.key, keys.mode, keys.index_bits, cache)
        return self.store_raw(pkg.ciphertext.to_bytes(), serialize_ht(pkg.table))

    def search(self, word: str, keys: OwnerKeys, ids_only: bool = False):
        """Return ``[(doc_id, plaintext)]``; plaintext is ``None`` when ``ids_only``."""
        w = query_keyword(word)
        st = make_trapdoor(w, keys.key, keys.mode, keys.index_bits)
        items = self.search_raw(st.to_bytes(), ids_only)
        if ids_only:
            return [(d, None) for d, _ in items]
        return [(d, decrypt_document(ct, keys.key)) for d, ct in items]


class _Tapped:
    def __init__(self, sock, tap):
        self.sock = sock
        self.tap = tap

    def recv(self, n):
        chunk = self.sock.recv(n)
        if self.tap and chunk:
            self.tap("recv", chunk)
        return chunk


def client_store(path, keys: OwnerKeys, server) -> int:
    data = Path(path).read_bytes()
    with GhsedClient(server) as c:
        return c.store(data, keys)


def client_search(word: str, keys: OwnerKeys, server, ids_only: bool = False):
    with GhsedClient(server) as c:
        return c.search(word, keys, ids_only)
