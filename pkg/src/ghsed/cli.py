"""``ghsed`` command line.

Exit codes: 0 ok, 2 usage, 3 auth, 4 protocol, 5 storage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import DEFAULT_SIZES, run_embed_experiment, run_search_experiment
from .client import GhsedClient, OwnerKeys
from .client_indexer import build_heuristic_table, serialize_ht
from .errors import (
    AuthorizationError,
    DomainError,
    FormatError,
    GhsedError,
    ParameterError,
    ProtocolError,
    RemoteError,
    StoreError,
    TransportError,
)
from .owner_crypto import ExponentMode, keygen
from .server import ServeConfig, parse_address, serve
from .wire import ErrorCode

EXIT_OK, EXIT_USAGE, EXIT_AUTH, EXIT_PROTO, EXIT_STORAGE = 0, 2, 3, 4, 5


def _sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghsed", description="Keyword search over encrypted documents.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("keygen", help="create an owner key directory")
    s.add_argument("--bits", type=int, default=2048)
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--mode", choices=[m.value for m in ExponentMode], default="public",
                   help="exponent used for keyword encryption")

    s = sub.add_parser("store", help="encrypt, index and upload a file")
    s.add_argument("--key", required=True, type=Path)
    s.add_argument("--server", required=True)
    s.add_argument("file", type=Path)

    s = sub.add_parser("search", help="retrieve documents containing a keyword")
    s.add_argument("--key", required=True, type=Path)
    s.add_argument("--server", required=True)
    s.add_argument("--ids-only", action="store_true")
    s.add_argument("--out", type=Path, help="write each match to <out>/<doc id>")
    s.add_argument("word")

    s = sub.add_parser("serve", help="run the storage server")
    s.add_argument("--data", required=True, type=Path)
    s.add_argument("--listen", default="127.0.0.1:7878")
    s.add_argument("--owner-pub", type=Path,
                   help="owner public key PEM (default: <data>/owner_pub.pem)")
    s.add_argument("--index-bits", type=int, default=64)

    s = sub.add_parser("index", help="print the heuristic table of a file")
    s.add_argument("--key", required=True, type=Path)
    s.add_argument("file", type=Path)

    s = sub.add_parser("bench", help="timing experiments")
    s.add_argument("experiment", choices=["embed", "search", "baseline"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path)
    s.add_argument("--sizes", type=_sizes, default=DEFAULT_SIZES)
    s.add_argument("--key", type=Path, help="key directory (default: fresh 1024-bit key)")
    return p


def _cmd_keygen(args):
    keys = OwnerKeys(keygen(args.bits), ExponentMode(args.mode))
    keys.save(args.out)
    print(f"wrote key {keys.key.key_id} ({args.bits} bits, {args.mode} mode) to {args.out}")


def _cmd_store(args):
    keys = OwnerKeys.load(args.key)
    try:
        data = args.file.read_bytes()
    except OSError as exc:
        raise StoreError(str(exc)) from exc
    with GhsedClient(args.server) as c:
        doc_id = c.store(data, keys)
    print(doc_id)


def _cmd_search(args):
    keys = OwnerKeys.load(args.key)
    with GhsedClient(args.server) as c:
        results = c.search(args.word, keys, ids_only=args.ids_only)
    for doc_id, body in results:
        if body is None:
            print(doc_id)
        elif args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / str(doc_id)).write_bytes(body)
            print(f"{doc_id}\t{args.out / str(doc_id)}")
        else:
            print(f"{doc_id}\t{len(body)} bytes")


def _cmd_serve(args):
    host, port = parse_address(args.listen)
    serve(ServeConfig(args.data, host, port, args.owner_pub, args.index_bits))


def _cmd_index(args):
    keys = OwnerKeys.load(args.key)
    text = args.file.read_bytes().decode("utf-8", errors="replace")
    table = build_heuristic_table(text, keys.key, keys.mode, keys.index_bits)
    sys.stdout.write(serialize_ht(table).decode("utf-8"))


def _cmd_bench(args):
    key = OwnerKeys.load(args.key).key if args.key else None
    if args.experiment == "embed":
        report = run_embed_experiment(args.sizes, args.seed, key)
    else:
        report = run_search_experiment(args.sizes, args.seed, key,
                                       baseline=args.experiment == "baseline")
    if args.out:
        args.out.write_text(report.to_csv())
    print(report.summary())


_COMMANDS = {
    "keygen": _cmd_keygen, "store": _cmd_store, "search": _cmd_search,
    "serve": _cmd_serve, "index": _cmd_index, "bench": _cmd_bench,
}

_REMOTE_EXIT = {ErrorCode.AUTH: EXIT_AUTH, ErrorCode.PROTO: EXIT_PROTO,
                ErrorCode.STORAGE: EXIT_STORAGE}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _COMMANDS[args.command](args)
    except RemoteError as exc:
        print(f"ghsed: {exc}", file=sys.stderr)
        return _REMOTE_EXIT.get(exc.code, EXIT_PROTO)
    except AuthorizationError as exc:
        print(f"ghsed: {exc}", file=sys.stderr)
        return EXIT_AUTH
    except (ParameterError, DomainError) as exc:
        print(f"ghsed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProtocolError, TransportError, FormatError) as exc:
        print(f"ghsed: {exc}", file=sys.stderr)
        return EXIT_PROTO
    except (StoreError, GhsedError, OSError) as exc:
        print(f"ghsed: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
