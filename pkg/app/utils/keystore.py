"""Passphrase-protected identity files.

Each identity is one JSON document ``<keystore>/<name>.json`` holding the
public keys in the clear and the private scalars sealed with AES-256-GCM
under a scrypt-derived key. The identity id is the associated data, so a
ciphertext cannot be moved under another name's header.
"""
import os
import re
import time
from pathlib import Path
from typing import List, Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt
from pydantic import ValidationError

from app.config import settings
from app.models.crypto import MemberKeys
from app.models.repo import IdentityFile, KdfParams
from app.utils.cas import write_atomic
from app.utils.cryptbox import Identity, keygen
from app.utils.errors import IdentityNotFound, InvalidConfig, IoFailure, KeystoreLocked
from app.utils.logging import get_logger

logger = get_logger(__name__)

SALT_LEN = 16
NAME_PATTERN = re.compile(r"^[A-Za-z0-9_.-]{1,64}$")


def _derive_key(passphrase: str, kdf: KdfParams) -> bytes:
    return Scrypt(salt=bytes.fromhex(kdf.salt), length=32, n=kdf.n, r=kdf.r, p=kdf.p).derive(
        passphrase.encode("utf-8")
    )


class Keystore:
    """Directory of identity files"""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _path(self, name: str) -> Path:
        if not NAME_PATTERN.match(name) or name.startswith("."):
            raise InvalidConfig(f"Invalid identity name '{name}'")
        return self.root / f"{name}.json"

    def _read(self, name: str) -> IdentityFile:
        path = self._path(name)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise IdentityNotFound(f"No identity named '{name}'")
        except OSError as e:
            raise IoFailure(f"Failed to read identity '{name}': {e}")
        try:
            return IdentityFile.model_validate_json(raw)
        except ValidationError as e:
            raise InvalidConfig(f"Identity file {path.name} is invalid: {e.error_count()} errors")

    def create(self, name: str, passphrase: str, identity: Optional[Identity] = None) -> IdentityFile:
        """Seal a new (or the given) identity under passphrase"""
        if self._path(name).exists():
            raise InvalidConfig(f"Identity '{name}' already exists")
        identity = identity or keygen()
        kdf = KdfParams(salt=os.urandom(SALT_LEN).hex(), n=settings.KDF_N, r=settings.KDF_R, p=settings.KDF_P)
        nonce = os.urandom(12)
        ciphertext = AESGCM(_derive_key(passphrase, kdf)).encrypt(nonce, identity.private_bytes(), identity.id)
        record = IdentityFile(
            name=name,
            id=identity.id.hex(),
            sign_pub=identity.sign_pub.hex(),
            enc_pub=identity.enc_pub.hex(),
            kdf=kdf,
            nonce=nonce.hex(),
            ciphertext=ciphertext.hex(),
            created_at=int(time.time()),
        )

        try:
            self.root.mkdir(parents=True, exist_ok=True)
            write_atomic(self._path(name), record.model_dump_json(indent=2).encode("utf-8"))
        except OSError as e:
            raise IoFailure(f"Failed to write identity '{name}': {e}")
        logger.info(f"Created identity '{name}' ({record.id[:12]})")
        return record

    def load_public(self, name: str) -> MemberKeys:
        record = self._read(name)
        return MemberKeys(
            id=bytes.fromhex(record.id),
            sign_pub=bytes.fromhex(record.sign_pub),
            enc_pub=bytes.fromhex(record.enc_pub),
        )

    def unlock(self, name: str, passphrase: str) -> Identity:
        """Decrypt the private keys; a wrong passphrase raises KeystoreLocked"""
        record = self._read(name)
        try:
            raw = AESGCM(_derive_key(passphrase, record.kdf)).decrypt(
                bytes.fromhex(record.nonce), bytes.fromhex(record.ciphertext), bytes.fromhex(record.id)
            )
        except InvalidTag:
            raise KeystoreLocked(f"Wrong passphrase for identity '{name}'")
        identity = Identity.from_private_bytes(raw)
        if identity.id.hex() != record.id:
            raise KeystoreLocked(f"Identity file '{name}' does not match its keys")
        logger.debug(f"Unlocked identity '{name}'")
        return identity

    def list_identities(self) -> List[IdentityFile]:
        if not self.root.is_dir():
            return []
        return [self._read(path.stem) for path in sorted(self.root.glob("*.json"))]

    def resolve(self, name_or_id: str) -> str:
        """Name of the identity matching a name or a (prefix of a) hex id"""
        if self._path(name_or_id).exists():
            return name_or_id
        needle = name_or_id.lower()
        matches = [r.name for r in self.list_identities() if len(needle) >= 8 and r.id.startswith(needle)]
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise InvalidConfig(f"'{name_or_id}' matches several identities")
        raise IdentityNotFound(f"No identity named or identified by '{name_or_id}'")
