"""Desk-scale timing of GHT embedding and search, plus the per-document baseline.

Absolute times are machine-specific; the probe counters next to them are not.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
import string
import time
from dataclasses import dataclass

from .client_indexer import build_heuristic_table, tokenize
from .ght_store import GhtStore, GlobalHeuristicTable
from .keyword_core import DEFAULT_INDEX_BITS
from .owner_crypto import ExponentMode, encrypt_document, keygen, trapdoor

DEFAULT_SIZES = (100, 1_000, 10_000, 100_000)
PROBE_WORD = "zzprobeword"


@dataclass(frozen=True)
class CorpusSpec:
    document_count: int
    words_per_doc: int
    vocabulary_size: int
    word_length: tuple[int, int] = (4, 10)
    seed: int = 0
    repeats: int = 0


def gen_vocabulary(size: int, word_length=(4, 10), seed: int = 0) -> list[str]:
    """Distinct lowercase words; the first k words do not depend on ``size``."""
    lo, hi = word_length
    rng = random.Random(f"vocab:{seed}:{lo}:{hi}")
    seen: set[str] = set()
    words = []
    while len(words) < size:
        w = "".join(rng.choices(string.ascii_lowercase, k=rng.randint(lo, hi)))
        if w not in seen and w != PROBE_WORD:
            seen.add(w)
            words.append(w)
    return words


def gen_corpus(spec: CorpusSpec) -> list[str]:
    vocab = gen_vocabulary(spec.vocabulary_size, spec.word_length, spec.seed)
    rng = random.Random(f"corpus:{spec.seed}")
    k = min(spec.words_per_doc, len(vocab))
    docs = []
    for _ in range(spec.document_count):
        words = rng.sample(vocab, k)
        words += [rng.choice(words) for _ in range(spec.repeats)] if words else []
        if words:
            words[0] = words[0].capitalize()
        docs.append(" ".join(words) + ".")
    return docs


def plaintext_oracle(docs: list[str], first_id: int = 1) -> dict[str, set[int]]:
    """Keyword -> ids of documents whose plaintext contains it."""
    out: dict[str, set[int]] = {}
    for doc_id, text in enumerate(docs, start=first_id):
        for w in tokenize(text):
            out.setdefault(w, set()).add(doc_id)
    return out


@dataclass
class BenchReport:
    kind: str
    columns: tuple[str, ...]
    rows: list[dict]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({c: _fmt(row[c]) for c in self.columns})
        return buf.getvalue()

    def summary(self) -> str:
        cells = [list(self.columns)] + [[_fmt(r[c]) for c in self.columns] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return f"[{self.kind}]\n" + "\n".join(lines)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def _timed_median(fn, samples: int, batch: int, warmup: int = 1) -> float:
    for _ in range(warmup):
        for _ in range(batch):
            fn()
    times = []
    for _ in range(samples):
        t0 = time.perf_counter()
        for _ in range(batch):
            fn()
        times.append((time.perf_counter() - t0) / batch)
    return statistics.median(times)


EMBED_COLUMNS = ("records", "seed", "embed_median_s", "embed_min_s", "embed_bucket_probes",
                 "embed_chain_compares", "buckets", "max_chain")


def run_embed_experiment(sizes=DEFAULT_SIZES, seed: int = 0, key=None,
                         mode=ExponentMode.PUBLIC, repetitions: int = 5, warmup: int = 1,
                         cache: dict | None = None) -> BenchReport:
    """Embed one HT of ``size`` distinct records into an empty GHT, per size."""
    key = key or keygen(1024)
    cache = {} if cache is None else cache
    rows = []
    for size in sizes:
        spec = CorpusSpec(document_count=1, words_per_doc=size, vocabulary_size=size, seed=seed)
        (doc,) = gen_corpus(spec)
        table = build_heuristic_table(doc, key, mode, cache=cache)
        times = []
        ght = None
        for i in range(warmup + repetitions):
            ght = GlobalHeuristicTable()
            t0 = time.perf_counter()
            ght.embed(table.records, 1)
            dt = time.perf_counter() - t0
            if i >= warmup:
                times.append(dt)
        rows.append({
            "records": len(table),
            "seed": seed,
            "embed_median_s": statistics.median(times),
            "embed_min_s": min(times),
            "embed_bucket_probes": ght.stats.embed_bucket_probes,
            "embed_chain_compares": ght.stats.embed_chain_compares,
            "buckets": ght.bucket_count,
            "max_chain": ght.max_chain,
        })
    return BenchReport("embed", EMBED_COLUMNS, rows)


SEARCH_COLUMNS = ("ght_records", "documents", "seed", "buckets", "max_chain",
                  "search_median_s", "search_bucket_probes", "search_chain_compares",
                  "search_bitmaps_read", "result_size")
BASELINE_COLUMNS = ("baseline_median_s", "baseline_table_probes")


def build_store(docs: list[str], key, mode=ExponentMode.PUBLIC,
                index_bits: int = DEFAULT_INDEX_BITS, cache: dict | None = None) -> GhtStore:
    store = GhtStore(index_bits=index_bits)
    cache = {} if cache is None else cache
    for text in docs:
        table = build_heuristic_table(text, key, mode, index_bits, cache)
        store.store_document(encrypt_document(text.encode("utf-8"), key), table)
    return store


def run_search_experiment(sizes=DEFAULT_SIZES, seed: int = 0, key=None,
                          mode=ExponentMode.PUBLIC, words_per_doc: int = 10,
                          baseline: bool = True, samples: int = 31, batch: int = 200,
                          baseline_samples: int = 7, cache: dict | None = None) -> BenchReport:
    """Search a fixed probe keyword in GHTs built from ``size`` total HT records.

    The probe keyword sits in document 1 only, so the result and the chain it
    lives on are the same at every size.
    """
    key = key or keygen(1024)
    cache = {} if cache is None else cache
    rows = []
    td = trapdoor(PROBE_WORD, key, mode)
    for size in sizes:
        ndocs = max(1, size // words_per_doc)
        spec = CorpusSpec(document_count=ndocs, words_per_doc=words_per_doc,
                          vocabulary_size=max(words_per_doc, size // 2), seed=seed)
        docs = gen_corpus(spec)
        docs[0] = docs[0] + " " + PROBE_WORD
        store = build_store(docs, key, mode, cache=cache)
        ght = store.ght
        result, trace = ght.search_traced(td)
        row = {
            "ght_records": sum(len(e.postings) for _, e in ght.entries()),
            "documents": ndocs,
            "seed": seed,
            "buckets": ght.bucket_count,
            "max_chain": ght.max_chain,
            "search_median_s": _timed_median(lambda: ght.search(td), samples, batch),
            "search_bucket_probes": trace.bucket_probes,
            "search_chain_compares": trace.chain_compares,
            "search_bitmaps_read": trace.bitmaps_read,
            "result_size": len(result),
        }
        if baseline:
            before = store.stats.baseline_table_probes
            base = store.baseline_scan(td)
            if base != result:
                raise AssertionError(f"baseline {sorted(base)} != GHT {sorted(result)}")
            row["baseline_table_probes"] = store.stats.baseline_table_probes - before
            row["baseline_median_s"] = _timed_median(
                lambda: store.baseline_scan(td), baseline_samples, 1)
        rows.append(row)
    cols = SEARCH_COLUMNS + (BASELINE_COLUMNS if baseline else ())
    return BenchReport("search+baseline" if baseline else "search", cols, rows)
