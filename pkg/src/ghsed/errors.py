"""Exception hierarchy shared by client and server code."""


class GhsedError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GhsedError, ValueError):
    """A character or keyword falls outside the indexing alphabet."""


class ParameterError(GhsedError, ValueError):
    pass


class EncodingError(GhsedError, ValueError):
    """A keyword's integer encoding does not fit below the modulus."""


class FormatError(GhsedError, ValueError):
    """A serialized artifact (HT file, trapdoor, ciphertext) is malformed."""


class AuthenticityError(GhsedError):
    """Document ciphertext failed authenticated decryption."""


class AuthorizationError(GhsedError):
    """Trapdoor signature did not verify against the owner key."""


class StoreError(GhsedError):
    pass


class IntegrityError(GhsedError):
    """Snapshot checksum or structure check failed."""


class ProtocolError(GhsedError):
    pass


class TransportError(GhsedError):
    pass


class RemoteError(GhsedError):
    """The server answered with an ERROR frame."""

    def __init__(self, code, text):
        super().__init__(f"server error {code}: {text}")
        self.code = code
        self.text = text
