# Models package - Export all models for easy importing
from .cas import Cid, StoredBlob
from .crypto import MemberKeys, Dek, SealedBlob, DekFile
from .patch import CopyOp, InsertOp, PatchOp, PatchBlob, PatchStats
from .ledger import (
    CommitKind, Role, EventKind, RosterEntry, RepoConfig, CommitRecord,
    RepoCreated, RoleSet, Committed, LedgerEvent, CommitAudit, AuditReport,
)
from .repo import SegmentState, LogEntry, Reconstruction, WorkspaceConfig, KdfParams, IdentityFile
from .cli import OutputMode, PassphraseSource, CliConfig
from .output import (
    IdentityLine, RepoLine, CommitLine, LogLine, EventLine, CheckoutLine, AuditLine,
    VerifySummaryLine, MemberLine, GcLine, ErrorLine, OUTPUT_MODELS,
)
from .response import StandardResponse, success_response, error_response

__all__ = [
    # Store models
    "Cid",
    "StoredBlob",

    # Crypto models
    "MemberKeys",
    "Dek",
    "SealedBlob",
    "DekFile",

    # Patch models
    "CopyOp",
    "InsertOp",
    "PatchOp",
    "PatchBlob",
    "PatchStats",

    # Ledger models
    "CommitKind",
    "Role",
    "EventKind",
    "RosterEntry",
    "RepoConfig",
    "CommitRecord",
    "RepoCreated",
    "RoleSet",
    "Committed",
    "LedgerEvent",
    "CommitAudit",
    "AuditReport",

    # Repository models
    "SegmentState",
    "LogEntry",
    "Reconstruction",
    "WorkspaceConfig",
    "KdfParams",
    "IdentityFile",

    # Command-line models
    "OutputMode",
    "PassphraseSource",
    "CliConfig",
    "IdentityLine",
    "RepoLine",
    "CommitLine",
    "LogLine",
    "EventLine",
    "CheckoutLine",
    "AuditLine",
    "VerifySummaryLine",
    "MemberLine",
    "GcLine",
    "ErrorLine",
    "OUTPUT_MODELS",

    # Response models
    "StandardResponse",
    "success_response",
    "error_response",
]
