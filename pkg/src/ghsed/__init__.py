"""Keyword search over encrypted documents held by an untrusted server.

The owner builds a heuristic table of (index, KI, Ver-Key) rows per document;
the server merges those into one global table and answers signed trapdoor
queries with the matching encrypted documents.
"""

from .client import GhsedClient, OwnerKeys, client_search, client_store
from .client_indexer import (
    HeuristicTable,
    StorePackage,
    build_heuristic_table,
    make_store_package,
    parse_ht,
    serialize_ht,
    tokenize,
)
from .ght_store import DocBitmap, GhtEntry, GhtStore, GlobalHeuristicTable, baseline_scan
from .keyword_core import HtRecord, VerKey, char_value, digit_sum, index_of, ki, make_ver_key
from .owner_crypto import (
    DocumentCiphertext,
    ExponentMode,
    OwnerKeyPair,
    OwnerPublicKey,
    SignedTrapdoor,
    Trapdoor,
    decrypt_document,
    encrypt_document,
    encrypt_keyword,
    keygen,
    make_trapdoor,
    trapdoor,
    verify_trapdoor,
)

__version__ = "0.1.0"

__all__ = [
    "DocBitmap", "DocumentCiphertext", "ExponentMode", "GhsedClient", "GhtEntry", "GhtStore",
    "GlobalHeuristicTable", "HeuristicTable", "HtRecord", "OwnerKeyPair", "OwnerKeys",
    "OwnerPublicKey", "SignedTrapdoor", "StorePackage", "Trapdoor", "VerKey", "baseline_scan",
    "build_heuristic_table", "char_value", "client_search", "client_store", "decrypt_document",
    "digit_sum", "encrypt_document", "encrypt_keyword", "index_of", "keygen", "ki",
    "make_store_package", "make_trapdoor", "make_ver_key", "parse_ht", "serialize_ht",
    "tokenize", "trapdoor", "verify_trapdoor",
]
