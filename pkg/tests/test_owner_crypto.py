import random
import string
from dataclasses import replace

import pytest

from ghsed.errors import (
    AuthenticityError,
    AuthorizationError,
    EncodingError,
    FormatError,
    ParameterError,
)
from ghsed.keyword_core import digit_sum, index_of
from ghsed.owner_crypto import (
    DocumentCiphertext,
    ExponentMode,
    OwnerKeyPair,
    OwnerPublicKey,
    SignedTrapdoor,
    Trapdoor,
    decrypt_document,
    encode_keyword,
    encrypt_document,
    encrypt_keyword,
    keygen,
    make_trapdoor,
    rsa_transform,
    trapdoor,
    verify_trapdoor,
)

from oracles import hand_digit_sum, hand_ew, square_and_multiply


def test_keygen_round_trip(key):
    assert key.modulus.bit_length() >= 1024
    assert pow(pow(2, key.public_exponent, key.modulus), key.private_exponent, key.modulus) == 2


def test_keygen_2048():
    k = keygen(2048)
    assert 2047 <= k.modulus.bit_length() <= 2048


def test_keygen_distinct():
    moduli = {keygen(1024).modulus for _ in range(3)}
    assert len(moduli) == 3


def test_keygen_too_small():
    with pytest.raises(ParameterError):
        keygen(512)


def test_keypair_rejects_bad_exponents(key):
    with pytest.raises(ParameterError):
        OwnerKeyPair(key.modulus, key.public_exponent, key.private_exponent + 2, key.p, key.q)


def test_pem_round_trip(key):
    assert OwnerKeyPair.from_pem(key.to_pem()) == key
    pub = OwnerPublicKey.from_pem(key.public.to_pem())
    assert pub == key.public
    assert pub.key_id == key.key_id


def test_rsa_transform_textbook():
    assert square_and_multiply(65, 17, 3233) == 2790
    assert rsa_transform(65, 17, 3233) == 2790
    with pytest.raises(EncodingError):
        rsa_transform(3233, 17, 3233)


def test_encrypt_keyword_matches_oracle(key):
    for w in ["urgent", "a", "z9" * 32]:
        for mode, exp in [(ExponentMode.PUBLIC, key.public_exponent),
                          (ExponentMode.PRIVATE, key.private_exponent)]:
            assert encrypt_keyword(w, key, mode) == hand_ew(w, exp, key.modulus)


def test_encrypt_keyword_deterministic_and_invertible(key):
    c1 = encrypt_keyword("urgent", key)
    assert c1 == encrypt_keyword("urgent", key)
    assert pow(c1, key.private_exponent, key.modulus) == encode_keyword("urgent")
    c2 = encrypt_keyword("urgent", key, ExponentMode.PRIVATE)
    assert pow(c2, key.public_exponent, key.modulus) == encode_keyword("urgent")


def test_public_key_suffices_in_public_mode_only(key):
    assert encrypt_keyword("report", key.public) == encrypt_keyword("report", key)
    with pytest.raises(ParameterError):
        encrypt_keyword("report", key.public, ExponentMode.PRIVATE)


def test_encrypt_keyword_injective(key):
    rng = random.Random(3)
    words = {"".join(rng.choices(string.ascii_lowercase + string.digits, k=rng.randint(1, 12)))
             for _ in range(2000)}
    cts = {encrypt_keyword(w, key) for w in words}
    assert len(cts) == len(words)


def test_trapdoor_index_agreement(key):
    for w in ["urgent", "report", "x", "0day"]:
        for mode in ExponentMode:
            at_index_time = digit_sum(encrypt_keyword(w, key, mode))
            td = trapdoor(w, key, mode)
            assert digit_sum(td.t_ew) == at_index_time == hand_digit_sum(td.t_ew)
            assert td.t_index == index_of(w)


# -- documents -----------------------------------------------------------------

def test_document_round_trip(key):
    for body in [b"", b"hello", bytes(range(256)) * 40]:
        ct = encrypt_document(body, key)
        assert decrypt_document(ct, key) == body
        assert decrypt_document(DocumentCiphertext.from_bytes(ct.to_bytes()), key) == body


def test_document_encryption_is_randomized(key):
    a, b = encrypt_document(b"same", key), encrypt_document(b"same", key)
    assert a.payload != b.payload and a.wrapped_key != b.wrapped_key


def test_document_every_bit_flip_detected(key):
    ct = encrypt_document(b"short doc", key)
    for field in ("payload", "nonce", "wrapped_key"):
        raw = getattr(ct, field)
        for i in range(len(raw) * 8):
            flipped = bytearray(raw)
            flipped[i // 8] ^= 1 << (i % 8)
            with pytest.raises(AuthenticityError):
                decrypt_document(replace(ct, **{field: bytes(flipped)}), key)


def test_document_wrong_key(key, other_key):
    with pytest.raises(AuthenticityError):
        decrypt_document(encrypt_document(b"secret", key), other_key)


def test_document_ciphertext_format_errors(key):
    blob = encrypt_document(b"x", key).to_bytes()
    for bad in [b"", b"NOTMAGIC" + blob[8:], blob[:20], blob[:-20]]:
        with pytest.raises(FormatError):
            DocumentCiphertext.from_bytes(bad)


@pytest.mark.slow
def test_hybrid_round_trip_bulk(key):
    rng = random.Random(11)
    for i in range(1000):
        size = rng.choice([0, 1, 15, 16, 17, 4096]) if i % 4 else rng.randint(0, 1 << 20)
        body = rng.randbytes(size)
        assert decrypt_document(encrypt_document(body, key), key) == body


# -- trapdoors ---------------------------------------------------------------------

def test_make_trapdoor(key):
    st = make_trapdoor("urgent", key)
    assert st.trapdoor.t_ki == 288
    assert st.trapdoor.t_ew == encrypt_keyword("urgent", key)
    assert verify_trapdoor(st, key.public) == st.trapdoor


def test_trapdoor_canonical_bytes():
    td = Trapdoor(0xBA7816BF8F01CFEA, 2790, 14)
    assert td.canonical_bytes() == b"GHSED-TD v1\n2790\n14\nba7816bf8f01cfea\n"
    assert Trapdoor.from_canonical(td.canonical_bytes()) == td
    for bad in [b"GHSED-TD v1\n02790\n14\nba7816bf8f01cfea\n",
                b"GHSED-TD v1\n2790\n14\nBA7816BF8F01CFEA\n",
                b"GHSED-TD v2\n2790\n14\nba7816bf8f01cfea\n",
                b"GHSED-TD v1\n2790\n14\nba7816bf8f01cfea"]:
        with pytest.raises(FormatError):
            Trapdoor.from_canonical(bad)


def test_tampered_trapdoor_rejected(key):
    st = make_trapdoor("urgent", key)
    bumped = replace(st, trapdoor=replace(st.trapdoor, t_ki=st.trapdoor.t_ki + 1))
    with pytest.raises(AuthorizationError):
        verify_trapdoor(bumped, key.public)


def test_trapdoor_from_other_key_rejected(key, other_key):
    st = make_trapdoor("urgent", other_key)
    with pytest.raises(AuthorizationError):
        verify_trapdoor(st, key.public)
    forged = replace(st, key_id=key.key_id)
    with pytest.raises(AuthorizationError):
        verify_trapdoor(forged, key.public)


def test_signed_trapdoor_every_byte_mutation_rejected(key):
    st = make_trapdoor("report", key)
    blob = st.to_bytes()
    assert verify_trapdoor(SignedTrapdoor.from_bytes(blob), key.public) == st.trapdoor
    for i in range(len(blob)):
        mutated = bytearray(blob)
        mutated[i] ^= 0x01
        with pytest.raises((AuthorizationError, FormatError)):
            verify_trapdoor(SignedTrapdoor.from_bytes(bytes(mutated)), key.public)


def test_private_mode_trapdoor(key):
    st = make_trapdoor("urgent", key, ExponentMode.PRIVATE)
    assert st.trapdoor.t_ew == encrypt_keyword("urgent", key, ExponentMode.PRIVATE)
    assert st.trapdoor.t_ew != encrypt_keyword("urgent", key.public)
    verify_trapdoor(st, key.public)
