import random
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghsed.client_indexer import (
    HeuristicTable,
    build_heuristic_table,
    make_store_package,
    parse_ht,
    serialize_ht,
    tokenize,
)
from ghsed.errors import FormatError
from ghsed.keyword_core import HtRecord, VerKey
from ghsed.owner_crypto import ExponentMode, decrypt_document

from oracles import hand_digit_sum, hand_ew, hand_index, hand_ki, scan_oracle


@pytest.mark.parametrize("text, expected", [
    ("Urgent: report!", ["urgent", "report"]),
    ("", []),
    ("urgent urgent", ["urgent", "urgent"]),
    ("naïve café-42", ["na", "ve", "caf", "42"]),
    ("A" * 70, ["a" * 64]),
    ("x_y\ttab\nNL", ["x", "y", "tab", "nl"]),
])
def test_tokenize(text, expected):
    assert tokenize(text) == expected


def test_tokenize_ignores_non_ascii_case_mapping():
    # "İ".lower() is "i" + combining dot; it must still act as a separator
    assert tokenize("İstanbul") == ["stanbul"]


def test_repeated_word_single_record(key):
    assert len(build_heuristic_table("urgent urgent urgent", key)) == 1
    assert len(build_heuristic_table("", key)) == 0


def test_records_match_recomputation(key):
    t = build_heuristic_table("Urgent weekly report", key)
    assert len(t) == 3
    by_index = {r.index: r for r in t.records}
    for w in ["urgent", "weekly", "report"]:
        r = by_index[hand_index(w)]
        assert r.ki == hand_ki(w)
        assert r.ver_key == VerKey(hand_ki(w), hand_digit_sum(hand_ew(w, key.public_exponent, key.modulus)))
    assert list(t.records) == sorted(t.records)


def test_private_mode_records_differ(key):
    pub = build_heuristic_table("urgent", key, ExponentMode.PUBLIC)
    priv = build_heuristic_table("urgent", key, ExponentMode.PRIVATE)
    assert priv.mode is ExponentMode.PRIVATE
    assert pub.records[0].index == priv.records[0].index
    assert priv.records[0].ver_key.digit_sum == hand_digit_sum(
        hand_ew("urgent", key.private_exponent, key.modulus))


def test_cache_gives_same_table(key):
    cache = {}
    a = build_heuristic_table("alpha beta gamma", key, cache=cache)
    b = build_heuristic_table("alpha beta gamma", key, cache=cache)
    assert a == b == build_heuristic_table("gamma beta alpha", key)
    assert set(cache) == {"alpha", "beta", "gamma"}


def test_serialization_format(key):
    t = HeuristicTable((HtRecord(0xBA7816BF8F01CFEA, 14, VerKey(14, 15)),))
    assert serialize_ht(t) == b"GHSED-HT v1 sha256-64 public\nba7816bf8f01cfea 14 14|15\n"


def test_round_trip_large():
    rng = random.Random(5)
    records = sorted(HtRecord(rng.getrandbits(64), k, VerKey(k, rng.randint(0, 3000)))
                     for k in (rng.randint(1, 74880) for _ in range(1000)))
    t = HeuristicTable(tuple(records), "sha256-64", ExponentMode.PRIVATE)
    assert parse_ht(serialize_ht(t)) == t


def test_empty_table_round_trip():
    t = HeuristicTable()
    blob = serialize_ht(t)
    assert blob.count(b"\n") == 1
    assert parse_ht(blob) == t


@pytest.mark.parametrize("blob, where", [
    (b"GHSED-HT v1 sha256-64 public\nba7816bf8f01cfea 13 14|15\n", "line 2"),
    (b"GHSED-HT v2 sha256-64 public\n", "line 1"),
    (b"GHSED-HT v1 md5-64 public\n", "line 1"),
    (b"GHSED-HT v1 sha256-64 secret\n", "line 1"),
    (b"GHSED-HT v1 sha256-64 public\nba7816bf8f01cfea 14 14|15\nzz 1 1|1\n", "line 3"),
    (b"GHSED-HT v1 sha256-64 public\nba7816bf8f01cfea 014 14|15\n", "line 2"),
    (b"GHSED-HT v1 sha256-64 public\nba7816bf8f01cfea 14 14-15\n", "line 2"),
    (b"GHSED-HT v1 sha256-64 public\nba7816bf8f01cfea 14\n", "line 2"),
    (b"GHSED-HT v1 sha256-64 public\nba7816bf8f01cfea 14 14|15", "newline"),
    (b"\xff\xfe", "UTF-8"),
])
def test_parse_rejects(blob, where):
    with pytest.raises(FormatError, match=where):
        parse_ht(blob)


texts = st.lists(
    st.one_of(st.text(alphabet=string.ascii_letters + string.digits, min_size=1, max_size=8),
              st.sampled_from([" ", ", ", "!", "\n", "é", "--"])),
    max_size=40).map("".join)


@settings(max_examples=60, deadline=None)
@given(texts)
def test_distinct_and_complete(key, text):
    t = build_heuristic_table(text, key)
    distinct = set(tokenize(text))
    assert len(t) == len(distinct)
    idx = {(r.index, r.ki) for r in t.records}
    for w in distinct:
        assert (hand_index(w), hand_ki(w)) in idx
        assert scan_oracle([text], w) == {1}


def test_canonical_determinism(key):
    text = "The quick brown fox, the lazy dog. THE END 42"
    blobs = {serialize_ht(build_heuristic_table(text, key)) for _ in range(3)}
    assert len(blobs) == 1


def test_store_package(key):
    pkg = make_store_package("Urgent report".encode(), key)
    assert decrypt_document(pkg.ciphertext, key) == b"Urgent report"
    assert len(pkg.table) == 2
