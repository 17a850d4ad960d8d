from enum import Enum, IntEnum
from typing import Dict, List, Optional, Union
from pydantic import BaseModel, ConfigDict, Field

from .cas import Cid
from .crypto import MemberKeys


class CommitKind(IntEnum):
    """Commit kinds; the value is the byte used in the signed payload"""
    GENESIS = 0
    PATCH = 1
    CHECKPOINT_GENESIS = 2

    @property
    def starts_segment(self) -> bool:
        return self in (CommitKind.GENESIS, CommitKind.CHECKPOINT_GENESIS)


class Role(str, Enum):
    OWNER = "owner"
    CONTRIBUTOR = "contributor"
    REVIEWER = "reviewer"

    @property
    def can_commit(self) -> bool:
        return self in (Role.OWNER, Role.CONTRIBUTOR)

    @property
    def can_read(self) -> bool:
        # Reviewers are read-only but still receive the segment key
        return True


class EventKind(IntEnum):
    REPO_CREATED = 0
    ROLE_SET = 1
    COMMITTED = 2


class RosterEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    role: Role
    keys: MemberKeys


class RepoConfig(BaseModel):
    """Checkpoint interval N and the initial member roster"""
    checkpoint_interval: int
    roster: Dict[bytes, RosterEntry] = Field(default_factory=dict)

    def owners(self) -> List[bytes]:
        return sorted(mid for mid, entry in self.roster.items() if entry.role == Role.OWNER)


class CommitRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    repo_id: bytes
    seq: int
    kind: CommitKind
    cid: Cid
    parent_cid: Optional[Cid] = None
    dek_file_cid: Cid
    author_id: bytes
    timestamp: int
    signature: bytes = b""


class RepoCreated(BaseModel):
    model_config = ConfigDict(frozen=True)

    owner_id: bytes
    config: RepoConfig


class RoleSet(BaseModel):
    """Roster change; role None removes the member"""
    model_config = ConfigDict(frozen=True)

    caller_id: bytes
    member_id: bytes
    role: Optional[Role] = None
    keys: Optional[MemberKeys] = None


class Committed(BaseModel):
    model_config = ConfigDict(frozen=True)

    record: CommitRecord


class LedgerEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    repo_id: bytes
    event_seq: int
    kind: EventKind
    timestamp: int
    payload: Union[RepoCreated, RoleSet, Committed]


class CommitAudit(BaseModel):
    """Outcome of every check run against one commit"""
    seq: int
    record_ok: bool = True
    parent_ok: bool = True
    signature_ok: bool = True
    authorized_ok: bool = True
    payload_ok: bool = True
    dek_file_ok: bool = True
    checkpoint_ok: bool = True
    issues: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.record_ok and self.parent_ok and self.signature_ok and self.authorized_ok
            and self.payload_ok and self.dek_file_ok and self.checkpoint_ok
        )

    def flag(self, check: str, issue: str) -> None:
        setattr(self, check, False)
        if issue not in self.issues:
            self.issues.append(issue)


class AuditReport(BaseModel):
    repo_id: str
    commits: List[CommitAudit] = Field(default_factory=list)
    reconstruction_ok: Optional[bool] = None
    reconstruction_issue: Optional[str] = None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.commits) and self.reconstruction_ok is not False

    @property
    def failing_seqs(self) -> List[int]:
        return [c.seq for c in self.commits if not c.ok]
