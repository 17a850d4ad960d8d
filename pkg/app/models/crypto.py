from typing import Dict
from pydantic import BaseModel, ConfigDict, Field


class MemberKeys(BaseModel):
    """Public half of an identity, the only part that travels in messages"""
    model_config = ConfigDict(frozen=True)

    id: bytes = Field(min_length=32, max_length=32)
    sign_pub: bytes
    enc_pub: bytes


class Dek(BaseModel):
    """256-bit data-encryption key for one segment"""
    model_config = ConfigDict(frozen=True)

    key: bytes = Field(min_length=32, max_length=32)

    def __repr__(self) -> str:
        # never print key bytes
        return "Dek(<redacted>)"

    __str__ = __repr__


class SealedBlob(BaseModel):
    model_config = ConfigDict(frozen=True)

    nonce: bytes = Field(min_length=12, max_length=12)
    ciphertext: bytes
    tag: bytes = Field(min_length=16, max_length=16)


class DekFile(BaseModel):
    """Versioned map from recipient id to that recipient's wrapped Dek"""
    model_config = ConfigDict(frozen=True)

    segment_id: bytes = Field(min_length=32, max_length=32)
    version: int = Field(ge=1)
    entries: Dict[bytes, bytes]

    @property
    def recipients(self) -> list[bytes]:
        return sorted(self.entries)
