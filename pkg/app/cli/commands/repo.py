from pathlib import Path
from typing import Optional, Tuple

import click

from app.cli.dependencies import CliSession, pass_session
from app.cli.output import commit_line, commit_text
from app.config import settings
from app.models.ledger import Role
from app.models.output import CheckoutLine, RepoLine
from app.utils.cas import write_atomic
from app.utils.errors import CommitNotFound, InvalidConfig, IoFailure, NotFound, UsageError
from app.utils.logging import get_logger
from app.utils.repoclient import commit as commit_version
from app.utils.repoclient import init_workspace, reconstruct

logger = get_logger(__name__)

ROLE_NAMES = [role.value for role in Role]


def _read_input(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError:
        raise NotFound(f"Input file {path} not found")
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}")


def _parse_member(session: CliSession, entry: str):
    ref, sep, role = entry.rpartition(":")
    if not sep or role not in ROLE_NAMES:
        raise UsageError(f"--member expects <name-or-id>:<{'|'.join(ROLE_NAMES)}>, got '{entry}'")
    member_id, keys = session.resolve_member(ref)
    if keys is None:
        raise InvalidConfig(f"Public keys for '{ref}' are not in the keystore")
    return member_id, Role(role), keys


@click.command("init")
@click.option("--file", "file_path", type=click.Path(path_type=Path), required=True, help="Genesis plaintext")
@click.option("--interval", type=int, default=None, help="Checkpoint interval N (patches per segment)")
@click.option("--member", "members", multiple=True, help="Additional member as <name-or-id>:<role>")
@pass_session
def init(session: CliSession, file_path: Path, interval: Optional[int], members: Tuple[str, ...]):
    """Create a repository whose genesis is FILE"""
    plain = _read_input(file_path)
    interval = settings.DEFAULT_CHECKPOINT_INTERVAL if interval is None else interval
    name = session.identity_name()
    owner = session.keystore().unlock(name, session.passphrase())
    roster = [_parse_member(session, entry) for entry in members]

    handle = init_workspace(session.repo_path, plain, owner, name, interval, roster)
    session.output.emit(
        "repo",
        RepoLine(
            repo_id=handle.repo_id.hex(),
            checkpoint_interval=interval,
            head_seq=handle.head.seq,
            members=len(handle.ledger.roster(handle.repo_id)),
        ),
        f"Initialized repository {handle.repo_id.hex()}",
    )
    session.output.emit("commit", commit_line(handle.head), commit_text(handle.head))


@click.command("commit")
@click.option("--file", "file_path", type=click.Path(path_type=Path), default=None,
              help="New version (defaults to the working copy)")
@pass_session
def commit(session: CliSession, file_path: Optional[Path]):
    """Commit a new version; prints seq, kind and cid"""
    plain = _read_input(file_path or session.repo_path / settings.DATA_FILE)
    handle = session.handle()
    record = commit_version(handle, plain)
    session.output.emit("commit", commit_line(record), commit_text(record))


@click.command("checkout")
@click.option("--seq", type=int, default=None, help="Commit to check out (defaults to head)")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Output file (defaults to the working copy)")
@pass_session
def checkout(session: CliSession, seq: Optional[int], out_path: Optional[Path]):
    """Write the plaintext at SEQ"""
    handle = session.handle()
    if seq is None:
        if handle.head is None:
            raise CommitNotFound("Repository has no commits yet")
        seq = handle.head.seq
    rebuilt = reconstruct(handle, seq)
    out_path = out_path or session.repo_path / settings.DATA_FILE
    try:
        write_atomic(out_path, rebuilt.plaintext)
    except OSError as e:
        raise IoFailure(f"Cannot write {out_path}: {e}")
    session.output.emit(
        "checkout",
        CheckoutLine(seq=seq, out=str(out_path), size=len(rebuilt.plaintext), patches_applied=rebuilt.patches_applied),
        f"seq {seq} -> {out_path} ({len(rebuilt.plaintext)} bytes)",
    )


@click.command("head")
@pass_session
def head(session: CliSession):
    """Show the head commit"""
    ledger, _ = session.stores()
    record = ledger.get_head(session.repo_id)
    session.output.emit("commit", commit_line(record), commit_text(record))
