"""Client-side cryptography.

Profile: secp256k1 identities (ECDSA-SHA256 signatures, ECIES-style Dek
wrapping via ECDH + HKDF-SHA256 + AES-256-GCM) and AES-256-GCM for blobs.
"""
import hashlib
import os
import struct
import threading
from typing import Iterable, List, Optional, Protocol, Tuple

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from app.models.crypto import Dek, DekFile, MemberKeys, SealedBlob
from app.utils.errors import (
    AuthenticationFailure,
    DuplicateRecipient,
    EmptyRecipients,
    EntropyUnavailable,
    InvalidConfig,
    MalformedDekFile,
    NonceExhaustion,
    NotARecipient,
    SeedTooShort,
    UnwrapFailure,
)
from app.utils.logging import get_logger

logger = get_logger(__name__)

CURVE = ec.SECP256K1()
CURVE_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
POINT_LEN = 33  # compressed SEC1 point
NONCE_LEN = 12
TAG_LEN = 16
DEK_LEN = 32
MIN_SEED_LEN = 32

DEK_FILE_MAGIC = b"EDGK1"
WRAP_INFO = b"edg-dek-wrap"
KEYGEN_SALT = b"edg-keygen"


def _point_bytes(public_key: ec.EllipticCurvePublicKey) -> bytes:
    return public_key.public_bytes(serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint)


def _load_point(data: bytes) -> ec.EllipticCurvePublicKey:
    return ec.EllipticCurvePublicKey.from_encoded_point(CURVE, data)


def _scalar_bytes(private_key: ec.EllipticCurvePrivateKey) -> bytes:
    return private_key.private_numbers().private_value.to_bytes(32, "big")


def member_id(sign_pub: bytes) -> bytes:
    """Identity id: SHA-256 of the compressed signing public key"""
    return hashlib.sha256(sign_pub).digest()


class Identity:
    """A member's signing and encryption keypairs"""

    def __init__(self, sign_key: ec.EllipticCurvePrivateKey, enc_key: ec.EllipticCurvePrivateKey):
        self._sign_key = sign_key
        self._enc_key = enc_key
        self.sign_pub = _point_bytes(sign_key.public_key())
        self.enc_pub = _point_bytes(enc_key.public_key())
        self.id = member_id(self.sign_pub)

    def public(self) -> MemberKeys:
        return MemberKeys(id=self.id, sign_pub=self.sign_pub, enc_pub=self.enc_pub)

    def private_bytes(self) -> bytes:
        """Raw private scalars (signing ‖ encryption); for the keystore only"""
        return _scalar_bytes(self._sign_key) + _scalar_bytes(self._enc_key)

    @classmethod
    def from_private_bytes(cls, raw: bytes) -> "Identity":
        if len(raw) != 64:
            raise InvalidConfig("Private key material must be 64 bytes")
        try:
            sign_key = ec.derive_private_key(int.from_bytes(raw[:32], "big"), CURVE)
            enc_key = ec.derive_private_key(int.from_bytes(raw[32:], "big"), CURVE)
        except ValueError:
            raise InvalidConfig("Private key scalar out of range")
        return cls(sign_key, enc_key)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Identity) and self.private_bytes() == other.private_bytes()

    def __hash__(self) -> int:
        return hash(self.id)

    def __repr__(self) -> str:
        return f"Identity({self.id.hex()[:12]})"


def _scalar_from_seed(seed: bytes, label: bytes) -> int:
    okm = HKDF(algorithm=hashes.SHA256(), length=48, salt=KEYGEN_SALT, info=label).derive(seed)
    # 48 bytes reduced mod n-1 keeps the bias negligible
    return int.from_bytes(okm, "big") % (CURVE_ORDER - 1) + 1


def keygen(seed: Optional[bytes] = None) -> Identity:
    """Create an identity; identical seeds give identical identities (tests only)"""
    if seed is None:
        try:
            return Identity(ec.generate_private_key(CURVE), ec.generate_private_key(CURVE))
        except OSError as e:
            raise EntropyUnavailable(f"Random source failed: {e}")
    if len(seed) < MIN_SEED_LEN:
        raise SeedTooShort(f"Seed must be at least {MIN_SEED_LEN} bytes, got {len(seed)}")
    return Identity(
        ec.derive_private_key(_scalar_from_seed(seed, b"sign"), CURVE),
        ec.derive_private_key(_scalar_from_seed(seed, b"wrap"), CURVE),
    )


def generate_dek() -> Dek:
    """Fresh 256-bit key from the operating system CSPRNG"""
    try:
        return Dek(key=AESGCM.generate_key(bit_length=256))
    except (OSError, NotImplementedError) as e:
        raise EntropyUnavailable(f"Random source failed: {e}")


class NonceSequence:
    """12-byte nonces: a 4-byte random prefix followed by an 8-byte counter"""

    LIMIT = 1 << 64

    def __init__(self, prefix: Optional[bytes] = None, start: int = 0):
        if prefix is None:
            try:
                prefix = os.urandom(4)
            except OSError as e:
                raise EntropyUnavailable(f"Random source failed: {e}")
        if len(prefix) != 4:
            raise InvalidConfig("Nonce prefix must be 4 bytes")
        self.prefix = prefix
        self._counter = start
        self._lock = threading.Lock()

    def next(self) -> bytes:
        with self._lock:
            if self._counter >= self.LIMIT:
                raise NonceExhaustion("Nonce counter exhausted; restart the process")
            value = self._counter
            self._counter += 1
        return self.prefix + value.to_bytes(8, "big")


_nonces = NonceSequence()


def encrypt_blob(
    plain: bytes,
    dek: Dek,
    segment_id: Optional[bytes] = None,
    nonces: Optional[NonceSequence] = None,
) -> SealedBlob:
    """AES-256-GCM with a fresh nonce; segment_id, when known, is the associated data"""
    nonce = (nonces or _nonces).next()
    out = AESGCM(dek.key).encrypt(nonce, bytes(plain), segment_id or b"")
    return SealedBlob(nonce=nonce, ciphertext=out[:-TAG_LEN], tag=out[-TAG_LEN:])


def decrypt_blob(sealed: SealedBlob, dek: Dek, segment_id: Optional[bytes] = None) -> bytes:
    try:
        return AESGCM(dek.key).decrypt(sealed.nonce, sealed.ciphertext + sealed.tag, segment_id or b"")
    except InvalidTag:
        raise AuthenticationFailure("Blob failed authentication")


def encode_sealed(sealed: SealedBlob) -> bytes:
    """Wire form: nonce ‖ ciphertext ‖ tag"""
    return sealed.nonce + sealed.ciphertext + sealed.tag


def parse_sealed(data: bytes) -> SealedBlob:
    if len(data) < NONCE_LEN + TAG_LEN:
        raise AuthenticationFailure("Sealed blob is truncated")
    return SealedBlob(nonce=data[:NONCE_LEN], ciphertext=data[NONCE_LEN:-TAG_LEN], tag=data[-TAG_LEN:])


# Dek wrapping

class KeyWrapper(Protocol):
    def wrap(self, dek: Dek, recipient_pub: bytes, context: bytes) -> bytes: ...

    def unwrap(self, wrapped: bytes, me: Identity, context: bytes) -> Dek: ...


class EciesWrapper:
    """Ephemeral ECDH on secp256k1, HKDF-SHA256, AES-256-GCM.

    Output: ephemeral point (33) ‖ nonce (12) ‖ encrypted Dek with tag (48).
    """

    WRAPPED_LEN = POINT_LEN + NONCE_LEN + DEK_LEN + TAG_LEN

    @staticmethod
    def _kek(shared: bytes, ephemeral_pub: bytes, recipient_pub: bytes) -> bytes:
        return HKDF(
            algorithm=hashes.SHA256(),
            length=32,
            salt=ephemeral_pub + recipient_pub,
            info=WRAP_INFO,
        ).derive(shared)

    def wrap(self, dek: Dek, recipient_pub: bytes, context: bytes) -> bytes:
        try:
            peer = _load_point(recipient_pub)
        except ValueError:
            raise InvalidConfig("Recipient encryption key is not a valid secp256k1 point")
        ephemeral = ec.generate_private_key(CURVE)
        ephemeral_pub = _point_bytes(ephemeral.public_key())
        kek = self._kek(ephemeral.exchange(ec.ECDH(), peer), ephemeral_pub, recipient_pub)
        nonce = os.urandom(NONCE_LEN)
        return ephemeral_pub + nonce + AESGCM(kek).encrypt(nonce, dek.key, context)

    def unwrap(self, wrapped: bytes, me: Identity, context: bytes) -> Dek:
        if len(wrapped) != self.WRAPPED_LEN:
            raise UnwrapFailure("Wrapped key has the wrong length")
        ephemeral_pub = wrapped[:POINT_LEN]
        nonce = wrapped[POINT_LEN:POINT_LEN + NONCE_LEN]
        body = wrapped[POINT_LEN + NONCE_LEN:]
        try:
            shared = me._enc_key.exchange(ec.ECDH(), _load_point(ephemeral_pub))
            kek = self._kek(shared, ephemeral_pub, me.enc_pub)
            return Dek(key=AESGCM(kek).decrypt(nonce, body, context))
        except (ValueError, InvalidTag):
            raise UnwrapFailure("Wrapped key could not be opened")


default_wrapper: KeyWrapper = EciesWrapper()


def _wrap_context(segment_id: bytes, recipient_id: bytes) -> bytes:
    return segment_id + recipient_id


def encode_dek_file(dek_file: DekFile) -> bytes:
    """Canonical bytes: magic ‖ segment_id ‖ version ‖ count ‖ sorted entries"""
    parts = [
        DEK_FILE_MAGIC,
        dek_file.segment_id,
        struct.pack(">QI", dek_file.version, len(dek_file.entries)),
    ]
    for rid in sorted(dek_file.entries):
        wrapped = dek_file.entries[rid]
        parts.append(rid + struct.pack(">I", len(wrapped)) + wrapped)
    return b"".join(parts)


def parse_dek_file(data: bytes) -> DekFile:
    """Strict parser; any deviation from the canonical layout is MalformedDekFile"""
    header = len(DEK_FILE_MAGIC) + 32 + 12
    if len(data) < header or not data.startswith(DEK_FILE_MAGIC):
        raise MalformedDekFile("Missing DEK file header")
    pos = len(DEK_FILE_MAGIC)
    segment_id = data[pos:pos + 32]
    version, count = struct.unpack_from(">QI", data, pos + 32)
    pos = header
    if version < 1 or count < 1:
        raise MalformedDekFile("DEK file needs version >= 1 and at least one entry")

    entries = {}
    previous = None
    for _ in range(count):
        if pos + 36 > len(data):
            raise MalformedDekFile("Truncated DEK file entry")
        rid = data[pos:pos + 32]
        (wrapped_len,) = struct.unpack_from(">I", data, pos + 32)
        pos += 36
        if pos + wrapped_len > len(data):
            raise MalformedDekFile("Truncated wrapped key")
        if previous is not None and rid <= previous:
            raise MalformedDekFile("DEK file entries are not strictly sorted")
        entries[rid] = data[pos:pos + wrapped_len]
        pos += wrapped_len
        previous = rid
    if pos != len(data):
        raise MalformedDekFile("Trailing bytes after DEK file entries")
    return DekFile(segment_id=segment_id, version=version, entries=entries)


def build_dek_file(
    dek: Dek,
    segment_id: bytes,
    recipients: Iterable[Tuple[bytes, bytes]],
    version: int,
    wrapper: KeyWrapper = default_wrapper,
) -> bytes:
    """Wrap dek for every (recipient id, encryption public key) and serialize"""
    recipients: List[Tuple[bytes, bytes]] = list(recipients)
    if not recipients:
        raise EmptyRecipients("A DEK file needs at least one recipient")
    ids = [rid for rid, _ in recipients]
    if len(set(ids)) != len(ids):
        raise DuplicateRecipient("Recipient ids must be unique")
    if len(segment_id) != 32 or version < 1:
        raise InvalidConfig("DEK file needs a 32-byte segment id and version >= 1")

    entries = {
        rid: wrapper.wrap(dek, enc_pub, _wrap_context(segment_id, rid))
        for rid, enc_pub in recipients
    }
    logger.debug(f"Built DEK file v{version} for segment {segment_id.hex()[:12]} with {len(entries)} recipients")
    return encode_dek_file(DekFile(segment_id=segment_id, version=version, entries=entries))


def open_dek_file(data: bytes, me: Identity, wrapper: KeyWrapper = default_wrapper) -> Dek:
    dek_file = parse_dek_file(data)
    wrapped = dek_file.entries.get(me.id)
    if wrapped is None:
        raise NotARecipient(f"Identity {me.id.hex()[:12]} is not a recipient of this DEK file")
    return wrapper.unwrap(wrapped, me, _wrap_context(dek_file.segment_id, me.id))


# Signatures

def sign(payload: bytes, me: Identity) -> bytes:
    """ECDSA over SHA-256 of payload (DER encoded)"""
    return me._sign_key.sign(bytes(payload), ec.ECDSA(hashes.SHA256()))


def verify_sig(payload: bytes, signature: bytes, signer_pub: bytes) -> bool:
    """True iff signature is valid for payload under signer_pub; never raises"""
    try:
        _load_point(signer_pub).verify(bytes(signature), bytes(payload), ec.ECDSA(hashes.SHA256()))
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False
