"""Keyword values by hand: KI, the keyword ciphertext, its digit sum, the index.

Run:  python demos/01_keyword_values.py
"""

from ghsed import ExponentMode, build_heuristic_table, keygen, serialize_ht
from ghsed.keyword_core import digit_sum, index_of, ki, make_ver_key
from ghsed.owner_crypto import encrypt_keyword

# KI weights each character's value (a=1 .. z=26, 0=27 .. 9=36) by its position.
# "abc" -> 1*1 + 2*2 + 3*3
print("ki('abc') =", ki("abc"))
print("ki('cab') =", ki("cab"), "(anagrams get different values)")

# The index is the top 64 bits of SHA-256 over the keyword.
print("index('abc') = %016x" % index_of("abc"))

# The keyword ciphertext is deterministic raw RSA, so the same word always
# produces the same digits and the same verification key.
key = keygen(1024)
ew = encrypt_keyword("urgent", key)
print("EW('urgent') has", len(str(ew)), "digits, digit sum", digit_sum(ew))
print("ver key:", make_ver_key(ki("urgent"), digit_sum(ew)))
assert encrypt_keyword("urgent", key) == ew

# A document's heuristic table keeps one record per distinct keyword.
table = build_heuristic_table("Urgent: the urgent report is late.", key)
print()
print(serialize_ht(table).decode())

# Private-exponent mode gives a different ciphertext for the same word, which
# keeps holders of the public key from recomputing it.
ew_priv = encrypt_keyword("urgent", key, ExponentMode.PRIVATE)
print("private-mode digit sum:", digit_sum(ew_priv))
