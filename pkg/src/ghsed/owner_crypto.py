"""Owner key material, keyword encryption, document encryption and trapdoors.

Keyword encryption is raw (unpadded) RSA so that the same keyword always maps
to the same ciphertext integer; the server's match check depends on that.
This is deliberately not semantically secure: in ``public`` mode anyone with
the public key can run a dictionary attack against stored Ver-Keys.
``private`` mode exponentiates with the private exponent instead, so only the
owner can produce valid keyword ciphertexts.
"""

from __future__ import annotations

import enum
import hashlib
import os
import struct
from dataclasses import dataclass
from functools import cached_property

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import (
    AuthenticityError,
    AuthorizationError,
    EncodingError,
    FormatError,
    ParameterError,
)
from .keyword_core import DEFAULT_INDEX_BITS, check_keyword, index_of, ki

MIN_MODULUS_BITS = 1024
SIGNATURE_ALGORITHM = "rsa-pss-sha256"
TRAPDOOR_HEADER = "GHSED-TD v1"
_DOC_MAGIC = b"GHSEDDC1"
_PROBE = 2


class ExponentMode(str, enum.Enum):
    PUBLIC = "public"
    PRIVATE = "private"


def rsa_transform(m: int, exponent: int, modulus: int) -> int:
    """Textbook RSA: m ** exponent mod modulus."""
    if not 0 <= m < modulus:
        raise EncodingError("message integer must lie in [0, modulus)")
    return pow(m, exponent, modulus)


def _key_id(n: int, e: int) -> str:
    h = hashlib.sha256()
    for v in (n, e):
        b = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
        h.update(struct.pack(">I", len(b)) + b)
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class OwnerPublicKey:
    modulus: int
    public_exponent: int

    @property
    def key_id(self) -> str:
        return _key_id(self.modulus, self.public_exponent)

    @cached_property
    def _crypto(self) -> rsa.RSAPublicKey:
        return rsa.RSAPublicNumbers(self.public_exponent, self.modulus).public_key()

    def to_pem(self) -> bytes:
        return self._crypto.public_bytes(
            serialization.Encoding.PEM, serialization.PublicFormat.SubjectPublicKeyInfo
        )

    @classmethod
    def from_pem(cls, data: bytes) -> "OwnerPublicKey":
        key = serialization.load_pem_public_key(data)
        if not isinstance(key, rsa.RSAPublicKey):
            raise FormatError("owner public key must be RSA")
        nums = key.public_numbers()
        return cls(nums.n, nums.e)


@dataclass(frozen=True)
class OwnerKeyPair:
    modulus: int
    public_exponent: int
    private_exponent: int
    p: int
    q: int

    def __post_init__(self):
        if self.modulus.bit_length() < MIN_MODULUS_BITS:
            raise ParameterError(f"modulus must have at least {MIN_MODULUS_BITS} bits")
        if self.p * self.q != self.modulus:
            raise ParameterError("p * q does not equal the modulus")
        probe = pow(pow(_PROBE, self.public_exponent, self.modulus),
                    self.private_exponent, self.modulus)
        if probe != _PROBE:
            raise ParameterError("exponents are not inverse modulo lambda(N)")

    @property
    def key_id(self) -> str:
        return _key_id(self.modulus, self.public_exponent)

    @property
    def public(self) -> OwnerPublicKey:
        return OwnerPublicKey(self.modulus, self.public_exponent)

    @cached_property
    def _crypto(self) -> rsa.RSAPrivateKey:
        p, q, d = self.p, self.q, self.private_exponent
        nums = rsa.RSAPrivateNumbers(
            p=p, q=q, d=d,
            dmp1=rsa.rsa_crt_dmp1(d, p),
            dmq1=rsa.rsa_crt_dmq1(d, q),
            iqmp=rsa.rsa_crt_iqmp(p, q),
            public_numbers=rsa.RSAPublicNumbers(self.public_exponent, self.modulus),
        )
        return nums.private_key()

    def to_pem(self) -> bytes:
        return self._crypto.private_bytes(
            serialization.Encoding.PEM,
            serialization.PrivateFormat.PKCS8,
            serialization.NoEncryption(),
        )

    @classmethod
    def from_pem(cls, data: bytes) -> "OwnerKeyPair":
        key = serialization.load_pem_private_key(data, password=None)
        if not isinstance(key, rsa.RSAPrivateKey):
            raise FormatError("owner key must be RSA")
        return cls._from_crypto(key)

    @classmethod
    def _from_crypto(cls, key: rsa.RSAPrivateKey) -> "OwnerKeyPair":
        nums = key.private_numbers()
        return cls(nums.public_numbers.n, nums.public_numbers.e, nums.d, nums.p, nums.q)


def keygen(bits: int = 2048) -> OwnerKeyPair:
    if bits < MIN_MODULUS_BITS:
        raise ParameterError(f"key size must be at least {MIN_MODULUS_BITS} bits, got {bits}")
    return OwnerKeyPair._from_crypto(rsa.generate_private_key(65537, bits))


# -- keyword encryption ---------------------------------------------------------

def encode_keyword(w: str) -> int:
    return int.from_bytes(check_keyword(w).encode("utf-8"), "big")


def encrypt_keyword(w: str, key, mode: ExponentMode = ExponentMode.PUBLIC) -> int:
    """Deterministic keyword ciphertext EW; ``key`` may be a public key in public mode."""
    mode = ExponentMode(mode)
    if mode is ExponentMode.PUBLIC:
        exponent = key.public_exponent
    elif isinstance(key, OwnerKeyPair):
        exponent = key.private_exponent
    else:
        raise ParameterError("private-exponent mode requires the owner's key pair")
    m = encode_keyword(w)
    if m >= key.modulus:
        raise EncodingError(f"keyword {w!r} encodes to an integer >= modulus")
    return rsa_transform(m, exponent, key.modulus)


# -- document encryption -------------------------------------------------------

_OAEP = padding.OAEP(mgf=padding.MGF1(hashes.SHA256()), algorithm=hashes.SHA256(), label=None)


@dataclass(frozen=True)
class DocumentCiphertext:
    wrapped_key: bytes
    nonce: bytes
    payload: bytes

    def to_bytes(self) -> bytes:
        return b"".join([
            _DOC_MAGIC,
            struct.pack(">H", len(self.wrapped_key)), self.wrapped_key,
            struct.pack(">B", len(self.nonce)), self.nonce,
            self.payload,
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "DocumentCiphertext":
        data = bytes(data)
        if not data.startswith(_DOC_MAGIC):
            raise FormatError("document ciphertext: bad magic")
        pos = len(_DOC_MAGIC)
        try:
            (klen,) = struct.unpack_from(">H", data, pos)
            pos += 2
            wrapped = data[pos:pos + klen]
            pos += klen
            (nlen,) = struct.unpack_from(">B", data, pos)
            pos += 1
        except struct.error:
            raise FormatError("document ciphertext: truncated header") from None
        nonce = data[pos:pos + nlen]
        pos += nlen
        if len(wrapped) != klen or len(nonce) != nlen or nlen != 12:
            raise FormatError("document ciphertext: truncated header")
        payload = data[pos:]
        if len(payload) < 16:
            raise FormatError("document ciphertext: payload shorter than the tag")
        return cls(wrapped, nonce, payload)


def _doc_aad(wrapped_key: bytes) -> bytes:
    return _DOC_MAGIC + wrapped_key


def encrypt_document(plaintext: bytes, key) -> DocumentCiphertext:
    """AES-256-GCM body under a fresh content key, wrapped with RSA-OAEP."""
    pub = key.public if isinstance(key, OwnerKeyPair) else key
    content_key = AESGCM.generate_key(bit_length=256)
    nonce = os.urandom(12)
    wrapped = pub._crypto.encrypt(content_key, _OAEP)
    payload = AESGCM(content_key).encrypt(nonce, bytes(plaintext), _doc_aad(wrapped))
    return DocumentCiphertext(wrapped, nonce, payload)


def decrypt_document(c: DocumentCiphertext, key: OwnerKeyPair) -> bytes:
    if isinstance(c, (bytes, bytearray)):
        c = DocumentCiphertext.from_bytes(c)
    try:
        content_key = key._crypto.decrypt(c.wrapped_key, _OAEP)
    except ValueError:
        raise AuthenticityError("content key unwrap failed") from None
    try:
        return AESGCM(content_key).decrypt(c.nonce, c.payload, _doc_aad(c.wrapped_key))
    except (InvalidTag, ValueError):
        raise AuthenticityError("document payload failed authentication") from None


# -- trapdoors -----------------------------------------------------------------

@dataclass(frozen=True)
class Trapdoor:
    """Query (t_index, t_ew, t_ki). The server cannot derive t_index from t_ew,
    so the owner ships the keyword's index alongside, covered by the signature."""

    t_index: int
    t_ew: int
    t_ki: int

    def canonical_bytes(self) -> bytes:
        return (f"{TRAPDOOR_HEADER}\n{self.t_ew}\n{self.t_ki}\n{self.t_index:016x}\n"
                ).encode("utf-8")

    @classmethod
    def from_canonical(cls, data: bytes) -> "Trapdoor":
        try:
            text = bytes(data).decode("ascii")
        except UnicodeDecodeError:
            raise FormatError("trapdoor is not ASCII") from None
        lines = text.split("\n")
        if len(lines) != 5 or lines[0] != TRAPDOOR_HEADER or lines[4] != "":
            raise FormatError("trapdoor: bad layout")
        _, ew, kiv, idx, _ = lines
        for field in (ew, kiv):
            if not field.isdigit() or (field != "0" and field.startswith("0")):
                raise FormatError("trapdoor: non-canonical decimal field")
        if len(idx) != 16 or any(c not in "0123456789abcdef" for c in idx):
            raise FormatError("trapdoor: index must be 16 lowercase hex chars")
        td = cls(int(idx, 16), int(ew), int(kiv))
        if td.canonical_bytes() != data:
            raise FormatError("trapdoor: non-canonical encoding")
        return td


@dataclass(frozen=True)
class SignedTrapdoor:
    trapdoor: Trapdoor
    signature: bytes
    key_id: str
    algorithm: str = SIGNATURE_ALGORITHM

    def to_bytes(self) -> bytes:
        canon = self.trapdoor.canonical_bytes()
        alg = self.algorithm.encode("ascii")
        kid = self.key_id.encode("ascii")
        return b"".join([
            struct.pack(">I", len(canon)), canon,
            struct.pack(">B", len(alg)), alg,
            struct.pack(">B", len(kid)), kid,
            struct.pack(">H", len(self.signature)), self.signature,
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignedTrapdoor":
        data = bytes(data)
        pos = 0

        def take(fmt):
            nonlocal pos
            try:
                (n,) = struct.unpack_from(fmt, data, pos)
            except struct.error:
                raise FormatError("signed trapdoor: truncated") from None
            pos += struct.calcsize(fmt)
            chunk = data[pos:pos + n]
            if len(chunk) != n:
                raise FormatError("signed trapdoor: truncated")
            pos += n
            return chunk

        canon = take(">I")
        alg = take(">B")
        kid = take(">B")
        sig = take(">H")
        if pos != len(data):
            raise FormatError("signed trapdoor: trailing bytes")
        try:
            alg_s, kid_s = alg.decode("ascii"), kid.decode("ascii")
        except UnicodeDecodeError:
            raise FormatError("signed trapdoor: non-ASCII identifiers") from None
        return cls(Trapdoor.from_canonical(canon), sig, kid_s, alg_s)


_PSS = padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=padding.PSS.DIGEST_LENGTH)


def trapdoor(w: str, key, mode: ExponentMode = ExponentMode.PUBLIC,
             index_bits: int = DEFAULT_INDEX_BITS) -> Trapdoor:
    """Unsigned trapdoor; :func:`make_trapdoor` is what goes on the wire."""
    return Trapdoor(index_of(w, index_bits), encrypt_keyword(w, key, mode), ki(w))


def sign_trapdoor(td: Trapdoor, key: OwnerKeyPair) -> SignedTrapdoor:
    sig = key._crypto.sign(td.canonical_bytes(), _PSS, hashes.SHA256())
    return SignedTrapdoor(td, sig, key.key_id)


def make_trapdoor(w: str, key: OwnerKeyPair, mode: ExponentMode = ExponentMode.PUBLIC,
                  index_bits: int = DEFAULT_INDEX_BITS) -> SignedTrapdoor:
    return sign_trapdoor(trapdoor(w, key, mode, index_bits), key)


def verify_trapdoor(st: SignedTrapdoor, owner_pub: OwnerPublicKey) -> Trapdoor:
    if isinstance(owner_pub, OwnerKeyPair):
        owner_pub = owner_pub.public
    if st.algorithm != SIGNATURE_ALGORITHM:
        raise AuthorizationError(f"unsupported signature algorithm {st.algorithm!r}")
    if st.key_id != owner_pub.key_id:
        raise AuthorizationError("trapdoor signed by an unknown key")
    try:
        owner_pub._crypto.verify(st.signature, st.trapdoor.canonical_bytes(),
                                 _PSS, hashes.SHA256())
    except InvalidSignature:
        raise AuthorizationError("trapdoor signature does not verify") from None
    return st.trapdoor
