"""Rendering of command results.

Human mode prints one readable line per item. json-lines mode prints one
StandardResponse envelope per line; ``message`` names the line type and
``data`` follows the matching model in OUTPUT_MODELS.
"""
from typing import Optional

import click
from pydantic import BaseModel

from app.models.cli import OutputMode
from app.models.ledger import AuditReport, CommitAudit, CommitRecord, LedgerEvent, RepoCreated, RoleSet
from app.models.output import (
    OUTPUT_MODELS,
    AuditLine,
    CommitLine,
    ErrorLine,
    EventLine,
    LogLine,
    VerifySummaryLine,
)
from app.models.repo import LogEntry
from app.models.response import error_response, success_response
from app.utils.errors import EdgError


class Output:
    def __init__(self, mode: OutputMode = OutputMode.HUMAN):
        self.mode = mode

    @property
    def json(self) -> bool:
        return self.mode == OutputMode.JSON_LINES

    def emit(self, kind: str, line: BaseModel, human: Optional[str] = None) -> None:
        model = OUTPUT_MODELS[kind]
        if not isinstance(line, model):
            raise TypeError(f"{kind} lines must be {model.__name__}")
        if self.json:
            click.echo(success_response(line.model_dump(mode="json"), kind).model_dump_json())
        elif human is not None:
            click.echo(human)

    def error(self, message: str, exit_code: int, seq: Optional[int] = None) -> None:
        if self.json:
            line = ErrorLine(error=message, exit_code=exit_code, seq=seq)
            click.echo(error_response(message=message, data=line.model_dump(mode="json")).model_dump_json())
        else:
            click.echo(f"error: {message}", err=True)

    def exception(self, exc: EdgError) -> None:
        self.error(str(exc), exc.exit_code, exc.seq)


def _hex(value: Optional[bytes]) -> Optional[str]:
    return value.hex() if value is not None else None


def commit_line(record: CommitRecord) -> CommitLine:
    return CommitLine(
        seq=record.seq,
        kind=record.kind.name,
        cid=record.cid.hex,
        parent_cid=record.parent_cid.hex if record.parent_cid else None,
        dek_file_cid=record.dek_file_cid.hex,
        author_id=record.author_id.hex(),
        timestamp=record.timestamp,
    )


def commit_text(record: CommitRecord) -> str:
    return f"{record.seq}\t{record.kind.name}\t{record.cid.hex}"


def log_line(entry: LogEntry) -> LogLine:
    return LogLine(
        seq=entry.seq,
        kind=entry.kind.name,
        cid=entry.cid.hex,
        author_id=entry.author_id.hex(),
        timestamp=entry.timestamp,
    )


def log_text(entry: LogEntry) -> str:
    return f"{entry.seq:>5}  {entry.kind.name:<18} {entry.cid.hex[:16]}  {entry.author_id.hex()[:12]}  {entry.timestamp}"


def event_line(event: LedgerEvent) -> EventLine:
    payload = event.payload
    if isinstance(payload, RepoCreated):
        body = {
            "owner_id": payload.owner_id.hex(),
            "checkpoint_interval": payload.config.checkpoint_interval,
            "members": len(payload.config.roster),
        }
    elif isinstance(payload, RoleSet):
        body = {
            "caller_id": payload.caller_id.hex(),
            "member_id": payload.member_id.hex(),
            "role": payload.role.value if payload.role else None,
        }
    else:
        record = payload.record
        body = {
            "seq": record.seq,
            "kind": record.kind.name,
            "cid": record.cid.hex,
            "author_id": record.author_id.hex(),
        }
    return EventLine(event_seq=event.event_seq, kind=event.kind.name, timestamp=event.timestamp, payload=body)


def event_text(line: EventLine) -> str:
    details = " ".join(f"{k}={v}" for k, v in line.payload.items())
    return f"{line.event_seq:>5}  {line.kind:<12} {details}"


def audit_line(audit: CommitAudit) -> AuditLine:
    return AuditLine(ok=audit.ok, **audit.model_dump())


def audit_text(audit: CommitAudit) -> str:
    return f"{audit.seq:>5}  {'ok' if audit.ok else 'FAIL'}" + (f"  {'; '.join(audit.issues)}" if audit.issues else "")


def verify_line(report: AuditReport) -> VerifySummaryLine:
    return VerifySummaryLine(
        repo_id=report.repo_id,
        ok=report.ok,
        commits=len(report.commits),
        failing_seqs=report.failing_seqs,
        reconstruction_ok=report.reconstruction_ok,
        reconstruction_issue=report.reconstruction_issue,
    )
