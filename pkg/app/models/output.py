"""Line models of the command-line json-lines output.

Field names and types here are the published output schema; `edg schema`
prints them. Binary values are rendered as lowercase hex.
"""
from typing import Dict, List, Optional
from pydantic import BaseModel


class IdentityLine(BaseModel):
    name: str
    id: str
    sign_pub: str
    enc_pub: str


class RepoLine(BaseModel):
    repo_id: str
    checkpoint_interval: int
    head_seq: int
    members: int


class CommitLine(BaseModel):
    seq: int
    kind: str
    cid: str
    parent_cid: Optional[str] = None
    dek_file_cid: str
    author_id: str
    timestamp: int


class LogLine(BaseModel):
    seq: int
    kind: str
    cid: str
    author_id: str
    timestamp: int


class EventLine(BaseModel):
    event_seq: int
    kind: str
    timestamp: int
    payload: Dict[str, Optional[str | int]]


class CheckoutLine(BaseModel):
    seq: int
    out: str
    size: int
    patches_applied: int


class AuditLine(BaseModel):
    seq: int
    ok: bool
    record_ok: bool
    parent_ok: bool
    signature_ok: bool
    authorized_ok: bool
    payload_ok: bool
    dek_file_ok: bool
    checkpoint_ok: bool
    issues: List[str]


class VerifySummaryLine(BaseModel):
    repo_id: str
    ok: bool
    commits: int
    failing_seqs: List[int]
    reconstruction_ok: Optional[bool] = None
    reconstruction_issue: Optional[str] = None


class MemberLine(BaseModel):
    member_id: str
    role: str


class GcLine(BaseModel):
    removed: List[str]
    kept: int


class ErrorLine(BaseModel):
    error: str
    exit_code: int
    seq: Optional[int] = None


OUTPUT_MODELS = {
    "identity": IdentityLine,
    "repo": RepoLine,
    "commit": CommitLine,
    "log": LogLine,
    "event": EventLine,
    "checkout": CheckoutLine,
    "audit": AuditLine,
    "verify": VerifySummaryLine,
    "member": MemberLine,
    "gc": GcLine,
    "error": ErrorLine,
}
