"""Server-side Global Heuristic Table, document registry and persistence.

The GHT maps a 64-bit index to a chain of entries. Each entry carries the KI
and Ver-Key of one keyword plus a bitmap of the documents containing it.
Distinct keywords whose indexes collide share a bucket and are told apart by
comparing (KI, Ver-Key) along the chain.
"""

from __future__ import annotations

import hashlib
import os
import struct
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping

from .client_indexer import HeuristicTable, parse_ht, serialize_ht
from .errors import FormatError, IntegrityError, StoreError
from .keyword_core import DEFAULT_INDEX_BITS, HtRecord, VerKey, digest_id, digit_sum, parse_digest_id
from .owner_crypto import DocumentCiphertext, Trapdoor

SNAPSHOT_MAGIC = b"GHSEDGHT"
SNAPSHOT_VERSION = 1
SNAPSHOT_NAME = "ght.snap"


class DocBitmap:
    """Growable bit array; bit d set means document d holds the keyword."""

    __slots__ = ("_bits",)

    def __init__(self, doc_ids: Iterable[int] = ()):
        self._bits = bytearray()
        for d in doc_ids:
            self.add(d)

    def add(self, d: int):
        if d < 0:
            raise ValueError("document ids are non-negative")
        byte = d >> 3
        if byte >= len(self._bits):
            self._bits.extend(bytes(byte + 1 - len(self._bits)))
        self._bits[byte] |= 1 << (d & 7)

    def flip(self, d: int):
        if d in self:
            self._bits[d >> 3] &= ~(1 << (d & 7)) & 0xFF
        else:
            self.add(d)

    def __contains__(self, d: int) -> bool:
        byte = d >> 3
        return 0 <= byte < len(self._bits) and bool(self._bits[byte] >> (d & 7) & 1)

    def members(self) -> list[int]:
        x = int.from_bytes(self._bits, "little")
        out = []
        while x:
            low = x & -x
            out.append(low.bit_length() - 1)
            x ^= low
        return out

    def __len__(self):
        return int.from_bytes(self._bits, "little").bit_count()

    def __eq__(self, other):
        if not isinstance(other, DocBitmap):
            return NotImplemented
        return self._bits.rstrip(b"\0") == other._bits.rstrip(b"\0")

    def __repr__(self):
        return f"DocBitmap({self.members()})"


@dataclass(eq=False)
class GhtEntry:
    ki: int
    ver_key: VerKey
    postings: DocBitmap = field(default_factory=DocBitmap)

    def matches(self, ki_value: int, ver_key: VerKey) -> bool:
        return self.ki == ki_value and self.ver_key == ver_key


@dataclass
class GhtStats:
    embed_calls: int = 0
    embed_bucket_probes: int = 0
    embed_chain_compares: int = 0
    search_calls: int = 0
    search_bucket_probes: int = 0
    search_chain_compares: int = 0
    search_bitmap_reads: int = 0
    baseline_calls: int = 0
    baseline_table_probes: int = 0
    baseline_chain_compares: int = 0

    @property
    def embed_probes(self) -> int:
        return self.embed_bucket_probes + self.embed_chain_compares

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class SearchTrace:
    bucket_probes: int = 0
    chains_walked: int = 0
    chain_compares: int = 0
    bitmaps_read: int = 0


class GlobalHeuristicTable:
    def __init__(self, index_bits: int = DEFAULT_INDEX_BITS):
        self.digest_algorithm_id = digest_id(index_bits)
        self.index_bits = index_bits
        self.buckets: dict[int, list[GhtEntry]] = {}
        self.stats = GhtStats()
        self._stats_lock = threading.Lock()

    # -- structure ----------------------------------------------------------

    @property
    def bucket_count(self) -> int:
        return len(self.buckets)

    @property
    def entry_count(self) -> int:
        return sum(len(c) for c in self.buckets.values())

    @property
    def max_chain(self) -> int:
        return max((len(c) for c in self.buckets.values()), default=0)

    @property
    def mean_chain(self) -> float:
        return self.entry_count / len(self.buckets) if self.buckets else 0.0

    def entries(self):
        for index, chain in self.buckets.items():
            for entry in chain:
                yield index, entry

    def check_invariants(self, registered: Iterable[int] | None = None):
        known = None if registered is None else set(registered)
        for index, chain in self.buckets.items():
            if not chain:
                raise AssertionError(f"bucket {index:016x} has an empty chain")
            seen = set()
            for e in chain:
                if e.ver_key.ki != e.ki:
                    raise AssertionError(f"bucket {index:016x}: ver_key.ki != ki")
                pair = (e.ki, e.ver_key)
                if pair in seen:
                    raise AssertionError(f"bucket {index:016x}: duplicate chain entry {pair}")
                seen.add(pair)
                members = e.postings.members()
                if not members:
                    raise AssertionError(f"bucket {index:016x}: entry without postings")
                if known is not None and not known.issuperset(members):
                    raise AssertionError(f"bucket {index:016x}: postings reference unknown docs")

    # -- operations ---------------------------------------------------------

    def embed(self, records: Iterable[HtRecord], doc_id: int):
        """Merge one document's records, then set bit ``doc_id`` on each matched entry.

        All lookups happen before anything is mutated, so a failure while
        planning leaves the table untouched.
        """
        plan = []
        pending: dict[int, list[GhtEntry]] = {}
        probes = compares = 0
        for r in records:
            probes += 1
            hit = None
            for chain in (self.buckets.get(r.index, ()), pending.get(r.index, ())):
                for e in chain:
                    compares += 1
                    if e.matches(r.ki, r.ver_key):
                        hit = e
                        break
                if hit is not None:
                    break
            if hit is None:
                hit = GhtEntry(r.ki, r.ver_key)
                pending.setdefault(r.index, []).append(hit)
                plan.append((r.index, hit, True))
            else:
                plan.append((r.index, hit, False))

        for index, entry, is_new in plan:
            if is_new:
                self.buckets.setdefault(index, []).append(entry)
            entry.postings.add(doc_id)
        with self._stats_lock:
            self.stats.embed_calls += 1
            self.stats.embed_bucket_probes += probes
            self.stats.embed_chain_compares += compares

    def search_traced(self, td: Trapdoor) -> tuple[set[int], SearchTrace]:
        trace = SearchTrace(bucket_probes=1)
        result: set[int] = set()
        chain = self.buckets.get(td.t_index)
        if chain is not None:
            trace.chains_walked = 1
            ver = VerKey(td.t_ki, digit_sum(td.t_ew))
            for e in chain:
                trace.chain_compares += 1
                if e.matches(td.t_ki, ver):
                    trace.bitmaps_read = 1
                    result = set(e.postings.members())
                    break
        with self._stats_lock:
            s = self.stats
            s.search_calls += 1
            s.search_bucket_probes += trace.bucket_probes
            s.search_chain_compares += trace.chain_compares
            s.search_bitmap_reads += trace.bitmaps_read
        return result, trace

    def search(self, td: Trapdoor) -> set[int]:
        return self.search_traced(td)[0]


# -- HSED baseline: one table per document ------------------------------------

DocTable = Mapping[int, list]


def doc_table(records: Iterable[HtRecord]) -> dict[int, list[HtRecord]]:
    out: dict[int, list[HtRecord]] = {}
    for r in records:
        out.setdefault(r.index, []).append(r)
    return out


def baseline_scan(td: Trapdoor, tables: Mapping[int, DocTable],
                  stats: GhtStats | None = None) -> set[int]:
    """Probe every document's own heuristic table, as the per-document scheme does."""
    ver = VerKey(td.t_ki, digit_sum(td.t_ew))
    found = set()
    probes = compares = 0
    for doc_id, table in tables.items():
        probes += 1
        for r in table.get(td.t_index, ()):
            compares += 1
            if r.ki == td.t_ki and r.ver_key == ver:
                found.add(doc_id)
                break
    if stats is not None:
        stats.baseline_calls += 1
        stats.baseline_table_probes += probes
        stats.baseline_chain_compares += compares
    return found


# -- registry and store ---------------------------------------------------------

class RWLock:
    """Many readers or one writer; a waiting writer blocks new readers."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False
        self._writers_waiting = 0

    @contextmanager
    def read(self):
        with self._cond:
            while self._writer or self._writers_waiting:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if not self._readers:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            self._writers_waiting += 1
            while self._writer or self._readers:
                self._cond.wait()
            self._writers_waiting -= 1
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


@dataclass(frozen=True)
class DocRecord:
    doc_id: int
    ciphertext_path: str
    ht_path: str
    size: int


@dataclass
class DocRegistry:
    entries: dict[int, DocRecord] = field(default_factory=dict)
    next_id: int = 1

    def __contains__(self, doc_id):
        return doc_id in self.entries

    def __len__(self):
        return len(self.entries)


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


class GhtStore:
    """Everything the untrusted server holds.

    With ``data_dir=None`` ciphertexts live in memory, which is what the
    benchmarks and most tests use.
    """

    def __init__(self, data_dir: str | os.PathLike | None = None,
                 index_bits: int = DEFAULT_INDEX_BITS, keep_doc_tables: bool = True):
        self.ght = GlobalHeuristicTable(index_bits)
        self.registry = DocRegistry()
        self.lock = RWLock()
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.keep_doc_tables = keep_doc_tables
        self._blobs: dict[int, bytes] = {}
        self._doc_tables: dict[int, dict] = {}
        if self.data_dir is not None:
            (self.data_dir / "docs").mkdir(parents=True, exist_ok=True)
            (self.data_dir / "hts").mkdir(parents=True, exist_ok=True)

    @property
    def index_bits(self) -> int:
        return self.ght.index_bits

    @property
    def stats(self) -> GhtStats:
        return self.ght.stats

    def _paths(self, doc_id: int) -> tuple[Path, Path]:
        return (self.data_dir / "docs" / f"{doc_id:010d}.ct",
                self.data_dir / "hts" / f"{doc_id:010d}.ht")

    def _check_table(self, table: HeuristicTable):
        if table.digest_algorithm_id != self.ght.digest_algorithm_id:
            raise FormatError(
                f"HT digest {table.digest_algorithm_id!r} does not match "
                f"store digest {self.ght.digest_algorithm_id!r}")

    def store_document(self, ciphertext, table) -> int:
        """Register, persist and embed one document; returns its DocId."""
        ct = ciphertext.to_bytes() if isinstance(ciphertext, DocumentCiphertext) else bytes(ciphertext)
        DocumentCiphertext.from_bytes(ct)
        if not isinstance(table, HeuristicTable):
            table = parse_ht(table)
        self._check_table(table)
        with self.lock.write():
            doc_id = self.registry.next_id
            ct_path = ht_path = ""
            if self.data_dir is not None:
                cpath, hpath = self._paths(doc_id)
                try:
                    _atomic_write(cpath, ct)
                    _atomic_write(hpath, serialize_ht(table))
                except OSError as exc:
                    for p in (cpath, hpath):
                        p.unlink(missing_ok=True)
                    raise StoreError(f"could not persist document {doc_id}: {exc}") from exc
                ct_path, ht_path = str(cpath.relative_to(self.data_dir)), str(hpath.relative_to(self.data_dir))
            else:
                self._blobs[doc_id] = ct
            self.registry.entries[doc_id] = DocRecord(doc_id, ct_path, ht_path, len(ct))
            self.registry.next_id = doc_id + 1
            self.ght.embed(table.records, doc_id)
            if self.keep_doc_tables:
                self._doc_tables[doc_id] = doc_table(table.records)
        return doc_id

    def embed_ht(self, table: HeuristicTable, doc_id: int):
        if doc_id not in self.registry:
            raise StoreError(f"document {doc_id} is not registered")
        self._check_table(table)
        with self.lock.write():
            self.ght.embed(table.records, doc_id)
            if self.keep_doc_tables:
                merged = self._doc_tables.setdefault(doc_id, {})
                for r in table.records:
                    merged.setdefault(r.index, []).append(r)

    def search(self, td: Trapdoor) -> set[int]:
        with self.lock.read():
            return self.ght.search(td)

    def search_traced(self, td: Trapdoor) -> tuple[set[int], SearchTrace]:
        with self.lock.read():
            return self.ght.search_traced(td)

    def baseline_scan(self, td: Trapdoor) -> set[int]:
        if not self.keep_doc_tables:
            raise StoreError("per-document tables are not kept by this store")
        with self.lock.read():
            return baseline_scan(td, self._doc_tables, self.ght.stats)

    def fetch(self, doc_id: int) -> bytes:
        with self.lock.read():
            rec = self.registry.entries.get(doc_id)
            if rec is None:
                raise StoreError(f"unknown document {doc_id}")
            if self.data_dir is None:
                return self._blobs[doc_id]
            try:
                return (self.data_dir / rec.ciphertext_path).read_bytes()
            except OSError as exc:
                raise StoreError(f"could not read document {doc_id}: {exc}") from exc

    # -- persistence ----------------------------------------------------------

    def snapshot(self, path=None) -> Path:
        path = Path(path) if path is not None else self._default_snapshot()
        with self.lock.read():
            blob = encode_snapshot(self.ght, self.registry)
        try:
            _atomic_write(path, blob)
        except OSError as exc:
            raise StoreError(f"could not write snapshot {path}: {exc}") from exc
        return path

    def restore(self, path=None):
        """Replace state with a snapshot; the file is fully validated before anything changes."""
        path = Path(path) if path is not None else self._default_snapshot()
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise StoreError(f"could not read snapshot {path}: {exc}") from exc
        ght, registry = decode_snapshot(blob)
        with self.lock.write():
            ght.stats = self.ght.stats
            self.ght = ght
            self.registry = registry
            self._doc_tables = self._tables_from_ght() if self.keep_doc_tables else {}
            if self.data_dir is None:
                self._blobs = {d: b for d, b in self._blobs.items() if d in registry}

    def _default_snapshot(self) -> Path:
        if self.data_dir is None:
            raise StoreError("no snapshot path given and the store has no data directory")
        return self.data_dir / SNAPSHOT_NAME

    def _tables_from_ght(self) -> dict[int, dict]:
        tables: dict[int, dict] = {d: {} for d in self.registry.entries}
        for index, entry in self.ght.entries():
            rec = HtRecord(index, entry.ki, entry.ver_key)
            for d in entry.postings.members():
                tables[d].setdefault(index, []).append(rec)
        return tables

    @classmethod
    def open(cls, data_dir, index_bits: int = DEFAULT_INDEX_BITS) -> "GhtStore":
        """Load a data directory: restore the snapshot, then replay any HT files stored after it."""
        store = cls(data_dir, index_bits)
        snap = store.data_dir / SNAPSHOT_NAME
        if snap.exists():
            store.restore(snap)
            if store.index_bits != index_bits:
                raise StoreError(
                    f"snapshot uses {store.index_bits}-bit indexes, expected {index_bits}")
        for hpath in sorted((store.data_dir / "hts").glob("*.ht")):
            doc_id = int(hpath.stem)
            if doc_id in store.registry:
                continue
            cpath = store.data_dir / "docs" / f"{doc_id:010d}.ct"
            if doc_id < store.registry.next_id or not cpath.exists():
                raise IntegrityError(f"orphaned document files for id {doc_id}")
            table = parse_ht(hpath.read_bytes())
            store._check_table(table)
            size = cpath.stat().st_size
            with store.lock.write():
                store.registry.entries[doc_id] = DocRecord(
                    doc_id, str(cpath.relative_to(store.data_dir)),
                    str(hpath.relative_to(store.data_dir)), size)
                store.registry.next_id = doc_id + 1
                store.ght.embed(table.records, doc_id)
                store._doc_tables[doc_id] = doc_table(table.records)
        return store


# -- snapshot codec ------------------------------------------------------------
#
# magic | u16 version | u8 len, digest id | u64 next_id
# u32 doc count, per doc: u64 id, u64 size, u16 len + ciphertext path, u16 len + HT path
# u64 bucket count, per bucket: u64 index, u32 chain length,
#     per entry: varint ki, varint digit sum, varint posting count, varint doc-id deltas
# 32-byte SHA-256 over everything above

def _put_varint(out: bytearray, v: int):
    while True:
        b = v & 0x7F
        v >>= 7
        if v:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def encode_snapshot(ght: GlobalHeuristicTable, registry: DocRegistry) -> bytes:
    out = bytearray(SNAPSHOT_MAGIC)
    ident = ght.digest_algorithm_id.encode("ascii")
    out += struct.pack(">HB", SNAPSHOT_VERSION, len(ident)) + ident
    out += struct.pack(">Q", registry.next_id)
    out += struct.pack(">I", len(registry.entries))
    for doc_id in sorted(registry.entries):
        rec = registry.entries[doc_id]
        cp, hp = rec.ciphertext_path.encode(), rec.ht_path.encode()
        out += struct.pack(">QQ", doc_id, rec.size)
        out += struct.pack(">H", len(cp)) + cp + struct.pack(">H", len(hp)) + hp
    out += struct.pack(">Q", len(ght.buckets))
    for index in sorted(ght.buckets):
        chain = ght.buckets[index]
        out += struct.pack(">QI", index, len(chain))
        for e in chain:
            _put_varint(out, e.ki)
            _put_varint(out, e.ver_key.digit_sum)
            members = e.postings.members()
            _put_varint(out, len(members))
            prev = 0
            for d in members:
                _put_varint(out, d - prev)
                prev = d
    out += hashlib.sha256(out).digest()
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def unpack(self, fmt):
        try:
            vals = struct.unpack_from(fmt, self.data, self.pos)
        except struct.error:
            raise IntegrityError("snapshot truncated") from None
        self.pos += struct.calcsize(fmt)
        return vals

    def take(self, n):
        chunk = self.data[self.pos:self.pos + n]
        if len(chunk) != n:
            raise IntegrityError("snapshot truncated")
        self.pos += n
        return chunk

    def varint(self):
        shift = v = 0
        while True:
            if self.pos >= len(self.data):
                raise IntegrityError("snapshot truncated")
            b = self.data[self.pos]
            self.pos += 1
            v |= (b & 0x7F) << shift
            if not b & 0x80:
                return v
            shift += 7
            if shift > 70:
                raise IntegrityError("snapshot varint overflow")


def decode_snapshot(blob: bytes) -> tuple[GlobalHeuristicTable, DocRegistry]:
    if len(blob) < len(SNAPSHOT_MAGIC) + 32 or not blob.startswith(SNAPSHOT_MAGIC):
        raise IntegrityError("not a GHT snapshot (bad magic or too short)")
    body, checksum = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != checksum:
        raise IntegrityError("snapshot checksum mismatch")
    rd = _Reader(body)
    rd.pos = len(SNAPSHOT_MAGIC)
    version, idlen = rd.unpack(">HB")
    if version != SNAPSHOT_VERSION:
        raise IntegrityError(f"unsupported snapshot version {version}")
    try:
        index_bits = parse_digest_id(rd.take(idlen).decode("ascii"))
    except (FormatError, UnicodeDecodeError):
        raise IntegrityError("snapshot names an unknown digest") from None
    (next_id,) = rd.unpack(">Q")
    registry = DocRegistry(next_id=next_id)
    (ndocs,) = rd.unpack(">I")
    try:
        for _ in range(ndocs):
            doc_id, size = rd.unpack(">QQ")
            (n,) = rd.unpack(">H")
            cp = rd.take(n).decode()
            (n,) = rd.unpack(">H")
            hp = rd.take(n).decode()
            if doc_id in registry.entries or not 1 <= doc_id < next_id:
                raise IntegrityError(f"snapshot registry entry {doc_id} is invalid")
            registry.entries[doc_id] = DocRecord(doc_id, cp, hp, size)
        ght = GlobalHeuristicTable(index_bits)
        (nbuckets,) = rd.unpack(">Q")
        for _ in range(nbuckets):
            index, clen = rd.unpack(">QI")
            if index in ght.buckets or index >> index_bits or clen == 0:
                raise IntegrityError(f"snapshot bucket {index:016x} is invalid")
            chain = []
            for _ in range(clen):
                kiv = rd.varint()
                ds = rd.varint()
                npost = rd.varint()
                postings = DocBitmap()
                d = 0
                for _ in range(npost):
                    d += rd.varint()
                    if d not in registry.entries:
                        raise IntegrityError(f"snapshot posting references unknown doc {d}")
                    postings.add(d)
                chain.append(GhtEntry(kiv, VerKey(kiv, ds), postings))
            ght.buckets[index] = chain
    except UnicodeDecodeError:
        raise IntegrityError("snapshot contains undecodable paths") from None
    if rd.pos != len(body):
        raise IntegrityError("snapshot has trailing bytes")
    try:
        ght.check_invariants(registry.entries)
    except AssertionError as exc:
        raise IntegrityError(f"snapshot violates table invariants: {exc}") from None
    return ght, registry


__all__ = [
    "DocBitmap", "DocRecord", "DocRegistry", "GhtEntry", "GhtStats", "GhtStore",
    "GlobalHeuristicTable", "RWLock", "SearchTrace", "baseline_scan", "decode_snapshot",
    "doc_table", "encode_snapshot",
]
