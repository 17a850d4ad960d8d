import hashlib
import re
from pydantic import BaseModel, ConfigDict, Field

from app.utils.errors import UsageError

_HEX_CID = re.compile(r"^[0-9a-f]{64}$")


class Cid(BaseModel):
    """SHA-256 content identifier; the text form is 64 lowercase hex chars"""
    model_config = ConfigDict(frozen=True)

    digest: bytes = Field(min_length=32, max_length=32)

    @classmethod
    def of(cls, data: bytes) -> "Cid":
        """Identifier of the exact bytes given"""
        return cls(digest=hashlib.sha256(data).digest())

    @classmethod
    def from_hex(cls, text: str) -> "Cid":
        if not _HEX_CID.match(text or ""):
            raise UsageError(f"Not a content identifier: {text!r}")
        return cls(digest=bytes.fromhex(text))

    @property
    def hex(self) -> str:
        return self.digest.hex()

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"Cid({self.hex[:12]})"

    def __lt__(self, other: "Cid") -> bool:
        return self.digest < other.digest


class StoredBlob(BaseModel):
    cid: Cid
    data: bytes
    pinned: bool = False
    created_at: int
