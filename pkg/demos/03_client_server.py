"""Store and search over TCP, and watch a tampered trapdoor get refused.

Run:  python demos/03_client_server.py
"""

from ghsed import GhsedClient, GhtStore, OwnerKeys, keygen, make_trapdoor
from ghsed.errors import RemoteError
from ghsed.server import GhsedServer

keys = OwnerKeys(keygen(2048))

# The server holds only the owner's public key, used to check trapdoor signatures.
with GhsedServer(("127.0.0.1", 0), GhtStore(), keys.key.public).start_background() as srv:
    print("server on %s:%d" % srv.address)
    sent = []
    with GhsedClient(srv.address, wiretap=lambda direction, b: sent.append(b)) as c:
        for text in (b"Urgent: board meeting moved to Friday.",
                     b"Quarterly report draft, not urgent.",
                     b"Lunch menu for Friday."):
            print("stored as", c.store(text, keys))

        for word in ("urgent", "friday", "holiday"):
            hits = c.search(word, keys)
            print(f"{word!r}: {[d for d, _ in hits]}")
            for doc_id, text in hits:
                print("   ", doc_id, text.decode())

        # None of the search traffic contains the keyword itself.
        assert all(b"urgent" not in b for b in sent[6:])

        blob = bytearray(make_trapdoor("urgent", keys.key).to_bytes())
        blob[-5] ^= 0x01
        try:
            c.search_raw(bytes(blob))
        except RemoteError as e:
            print("tampered trapdoor refused:", e)
