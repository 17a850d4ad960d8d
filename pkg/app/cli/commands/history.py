import click

from app.cli.dependencies import CliSession, pass_session
from app.cli.output import audit_line, audit_text, event_line, event_text, log_line, log_text, verify_line
from app.utils.errors import VerificationFailed
from app.utils.logging import get_logger
from app.utils.repoclient import log as read_log
from app.utils.repoclient import open_repo, verify as verify_repo

logger = get_logger(__name__)


@click.command("log")
@pass_session
def log(session: CliSession):
    """List commits in ascending seq"""
    ledger, cas = session.stores()
    handle = open_repo(session.repo_id, None, ledger, cas)
    for entry in read_log(handle):
        session.output.emit("log", log_line(entry), log_text(entry))


@click.command("events")
@click.option("--from", "from_seq", type=click.IntRange(min=0), default=0, help="First event seq to show")
@pass_session
def events(session: CliSession, from_seq: int):
    """Print the ledger event stream"""
    ledger, _ = session.stores()
    for event in ledger.events(session.repo_id, from_seq):
        line = event_line(event)
        session.output.emit("event", line, event_text(line))


@click.command("verify")
@pass_session
def verify(session: CliSession):
    """Audit every commit and rebuild the head; exits 3 on any failure"""
    report = verify_repo(session.handle())
    for audit in report.commits:
        session.output.emit("audit", audit_line(audit), audit_text(audit))
    summary = verify_line(report)
    verdict = "ok" if report.ok else f"FAILED at seqs {report.failing_seqs}"
    if report.reconstruction_issue:
        verdict += f" (head: {report.reconstruction_issue})"
    session.output.emit("verify", summary, f"verify {verdict}")
    if not report.ok:
        seq = report.failing_seqs[0] if report.failing_seqs else None
        raise VerificationFailed(f"Verification failed for seqs {report.failing_seqs}", seq=seq)
