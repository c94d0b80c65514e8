import random

from ghsed.bench import (
    CorpusSpec,
    build_store,
    gen_corpus,
    gen_vocabulary,
    plaintext_oracle,
    run_embed_experiment,
    run_search_experiment,
)
from ghsed.owner_crypto import trapdoor

from oracles import scan_oracle


def test_corpus_deterministic():
    spec = CorpusSpec(50, 12, 400, seed=3, repeats=2)
    assert gen_corpus(spec) == gen_corpus(spec)
    assert gen_corpus(spec) != gen_corpus(CorpusSpec(50, 12, 400, seed=4, repeats=2))


def test_vocabulary_prefix_stable():
    assert gen_vocabulary(1000)[:100] == gen_vocabulary(100)
    assert len(set(gen_vocabulary(5000))) == 5000


def test_single_word_vocabulary(key):
    docs = gen_corpus(CorpusSpec(20, 5, 1, seed=1))
    (word,) = gen_vocabulary(1, seed=1)
    store = build_store(docs, key)
    assert store.search(trapdoor(word, key)) == set(range(1, 21))


def test_random_queries_match_oracle(key, record_cache):
    docs = gen_corpus(CorpusSpec(300, 10, 1000, seed=8, repeats=4))
    store = build_store(docs, key, cache=record_cache)
    inverted = plaintext_oracle(docs)
    rng = random.Random(0)
    for w in rng.sample(gen_vocabulary(1000, seed=8), 100):
        expected = scan_oracle(docs, w)
        assert inverted.get(w, set()) == expected
        assert store.search(trapdoor(w, key)) == expected


def test_embed_experiment_counters(key, record_cache):
    report = run_embed_experiment((10, 100, 1000), key=key, repetitions=2, cache=record_cache)
    assert report.column("records") == [10, 100, 1000]
    assert report.column("embed_bucket_probes") == [10, 100, 1000]
    assert report.column("embed_chain_compares") == [0, 0, 0]
    assert "embed_median_s" in report.summary()


def test_search_experiment_counters(key, record_cache):
    report = run_search_experiment((100, 1000), key=key, samples=3, batch=10,
                                   baseline_samples=2, cache=record_cache)
    assert report.column("search_chain_compares") == [1, 1]
    assert report.column("result_size") == [1, 1]
    assert report.column("baseline_table_probes") == [10, 100]
    csv_lines = report.to_csv().splitlines()
    assert csv_lines[0].split(",")[-1] == "baseline_table_probes"
    assert len(csv_lines) == 3
