"""Threaded TCP server answering STORE_REQ and SEARCH_REQ frames.

Every SEARCH_REQ signature is verified against the owner's public key before
the GHT is touched. The server never receives or handles a plaintext keyword.
"""

from __future__ import annotations

import logging
import signal
import socketserver
import threading
from dataclasses import dataclass
from pathlib import Path

from . import wire
from .errors import (
    AuthorizationError,
    FormatError,
    IntegrityError,
    ProtocolError,
    StoreError,
)
from .ght_store import GhtStore
from .keyword_core import DEFAULT_INDEX_BITS
from .owner_crypto import OwnerPublicKey, SignedTrapdoor, verify_trapdoor
from .wire import ErrorCode, MsgType

log = logging.getLogger(__name__)

OWNER_PUB_NAME = "owner_pub.pem"


@dataclass
class ServerCounters:
    requests: int = 0
    stores: int = 0
    searches: int = 0
    auth_failures: int = 0
    protocol_errors: int = 0


class _Handler(socketserver.BaseRequestHandler):
    server: "GhsedServer"

    def handle(self):
        sock = self.request
        while True:
            try:
                frame = wire.read_frame(sock)
            except ProtocolError as exc:
                self._error(ErrorCode.PROTO, str(exc))
                return
            except OSError:
                return
            if frame is None:
                return
            reply = self.server.dispatch(*frame)
            try:
                sock.sendall(reply)
            except OSError:
                return
            if reply[4] == MsgType.ERROR and reply[5] in (ErrorCode.PROTO, ErrorCode.INTERNAL):
                return

    def _error(self, code, text):
        self.server.count("protocol_errors")
        try:
            self.request.sendall(wire.encode_frame(MsgType.ERROR, wire.encode_error(code, text)))
        except OSError:
            pass


class GhsedServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, store: GhtStore, owner_pub: OwnerPublicKey):
        self.store = store
        self.owner_pub = owner_pub
        self.counters = ServerCounters()
        self._count_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        super().__init__(address, _Handler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]

    def count(self, name: str):
        with self._count_lock:
            setattr(self.counters, name, getattr(self.counters, name) + 1)

    def dispatch(self, msg_type: MsgType, payload: bytes) -> bytes:
        self.count("requests")
        try:
            if msg_type is MsgType.STORE_REQ:
                return self._store(payload)
            if msg_type is MsgType.SEARCH_REQ:
                return self._search(payload)
            raise ProtocolError(f"unexpected message type {msg_type.name} from client")
        except AuthorizationError as exc:
            self.count("auth_failures")
            return _error(ErrorCode.AUTH, str(exc))
        except (ProtocolError, FormatError) as exc:
            self.count("protocol_errors")
            return _error(ErrorCode.PROTO, str(exc))
        except StoreError as exc:
            return _error(ErrorCode.STORAGE, str(exc))
        except Exception as exc:  # keep serving other connections
            log.exception("internal error handling %s", msg_type.name)
            return _error(ErrorCode.INTERNAL, f"internal error: {type(exc).__name__}")

    def _store(self, payload: bytes) -> bytes:
        ct, ht = wire.decode_store_req(payload)
        doc_id = self.store.store_document(ct, ht)
        self.count("stores")
        return wire.encode_frame(MsgType.STORE_RESP, wire.encode_store_resp(doc_id))

    def _search(self, payload: bytes) -> bytes:
        blob, ids_only = wire.decode_search_req(payload)
        st = SignedTrapdoor.from_bytes(blob)
        td = verify_trapdoor(st, self.owner_pub)
        doc_ids = sorted(self.store.search(td))
        self.count("searches")
        items = [(d, b"" if ids_only else self.store.fetch(d)) for d in doc_ids]
        return wire.encode_frame(MsgType.SEARCH_RESP, wire.encode_search_resp(items))

    # -- lifecycle ----------------------------------------------------------------

    def start_background(self) -> "GhsedServer":
        self._thread = threading.Thread(target=self.serve_forever, name="ghsed-server", daemon=True)
        self._thread.start()
        return self

    def close(self, snapshot: bool = True):
        """Stop accepting, flush the snapshot if the store is on disk, release the socket."""
        if self._thread is not None:
            self.shutdown()
            self._thread.join()
            self._thread = None
        self.server_close()
        if snapshot and self.store.data_dir is not None:
            self.store.snapshot()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _error(code: ErrorCode, text: str) -> bytes:
    return wire.encode_frame(MsgType.ERROR, wire.encode_error(code, text))


@dataclass
class ServeConfig:
    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 7878
    owner_pub: Path | None = None
    index_bits: int = DEFAULT_INDEX_BITS


def parse_address(text: str, default_port: int = 7878) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep:
        return text, default_port
    if not port.isdigit():
        raise ValueError(f"bad port in address {text!r}")
    return host.strip("[]") or "127.0.0.1", int(port)


def load_owner_pub(config: ServeConfig) -> OwnerPublicKey:
    path = Path(config.owner_pub) if config.owner_pub else Path(config.data_dir) / OWNER_PUB_NAME
    try:
        return OwnerPublicKey.from_pem(path.read_bytes())
    except OSError as exc:
        raise StoreError(f"cannot read owner public key {path}: {exc}") from exc


def make_server(config: ServeConfig) -> GhsedServer:
    try:
        store = GhtStore.open(config.data_dir, config.index_bits)
    except (IntegrityError, OSError) as exc:
        raise StoreError(f"cannot open data directory {config.data_dir}: {exc}") from exc
    return GhsedServer((config.host, config.port), store, load_owner_pub(config))


def serve(config: ServeConfig):
    """Run until SIGINT/SIGTERM, then snapshot the store."""
    srv = make_server(config)
    log.info("serving %s on %s:%d (%d documents)", config.data_dir, *srv.address,
             len(srv.store.registry))

    def _stop(signum, frame):
        threading.Thread(target=srv.shutdown, daemon=True).start()

    old = signal.signal(signal.SIGTERM, _stop)
    try:
        srv.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        signal.signal(signal.SIGTERM, old)
        srv.server_close()
        srv.store.snapshot()
        log.info("snapshot written, shutting down")


__all__ = ["GhsedServer", "ServeConfig", "ServerCounters", "make_server", "parse_address",
           "serve"]
