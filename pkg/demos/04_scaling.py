"""How embed and search cost grow with table size, and how the baseline compares.

Run:  python demos/04_scaling.py [max_records]

Times depend on the machine. The probe counts do not: embedding costs one
bucket probe per record, a search costs one probe regardless of size, and the
baseline probes one table per document.
"""

import sys

from ghsed import keygen
from ghsed.bench import run_embed_experiment, run_search_experiment

top = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
sizes = [s for s in (100, 1_000, 10_000, 100_000) if s <= top]
key = keygen(1024)
cache: dict = {}

embed = run_embed_experiment(sizes, key=key, repetitions=3, cache=cache)
print(embed.summary())
print()
search = run_search_experiment(sizes, key=key, samples=11, batch=100, baseline_samples=3,
                               cache=cache)
print(search.summary())

t = search.column("search_median_s")
b = search.column("baseline_median_s")
print()
print(f"from {sizes[0]} to {sizes[-1]} records: GHT search x{t[-1] / t[0]:.2f}, "
      f"baseline x{b[-1] / b[0]:.1f}")
