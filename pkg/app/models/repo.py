from typing import Optional
from pydantic import BaseModel, ConfigDict, Field

from .cas import Cid
from .crypto import Dek
from .ledger import CommitKind


class SegmentState(BaseModel):
    """Client-side cache of the segment the head belongs to"""
    genesis_seq: int
    genesis_cid: Cid
    dek: Dek
    dek_file_cid: Cid
    dek_file_version: int = 1
    patch_count: int = 0


class LogEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    seq: int
    kind: CommitKind
    cid: Cid
    author_id: bytes
    timestamp: int


class Reconstruction(BaseModel):
    seq: int
    plaintext: bytes
    patches_applied: int
    segment_genesis_seq: int


class WorkspaceConfig(BaseModel):
    """Contents of <repo>/.edg/config"""
    repo_id: str = Field(pattern=r"^[0-9a-f]{64}$")
    checkpoint_interval: int = Field(ge=1)
    ledger_path: str
    cas_path: str
    identity: Optional[str] = None


class KdfParams(BaseModel):
    salt: str
    n: int
    r: int
    p: int


class IdentityFile(BaseModel):
    """Keystore entry; private scalars only ever stored encrypted"""
    name: str = Field(min_length=1, max_length=64, pattern=r"^[A-Za-z0-9_.-]+$")
    id: str
    sign_pub: str
    enc_pub: str
    kdf: KdfParams
    nonce: str
    ciphertext: str
    created_at: int
