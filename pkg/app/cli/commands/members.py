import click

from app.cli.dependencies import CliSession, pass_session
from app.cli.output import commit_line, commit_text
from app.models.ledger import Role
from app.models.output import MemberLine
from app.utils.logging import get_logger
from app.utils.repoclient import grant as grant_role
from app.utils.repoclient import revoke as revoke_member

logger = get_logger(__name__)


@click.command("grant")
@click.option("--member", required=True, help="Identity name in the keystore, or hex member id")
@click.option("--role", type=click.Choice([role.value for role in Role]), required=True)
@pass_session
def grant(session: CliSession, member: str, role: str):
    """Give a member a role; new members receive the segment key"""
    member_id, keys = session.resolve_member(member)
    record = grant_role(session.handle(), member_id, Role(role), keys)
    session.output.emit("member", MemberLine(member_id=member_id.hex(), role=role), f"{member_id.hex()}\t{role}")
    if record is not None:
        session.output.emit("commit", commit_line(record), commit_text(record))


@click.command("revoke")
@click.option("--member", required=True, help="Identity name in the keystore, or hex member id")
@pass_session
def revoke(session: CliSession, member: str):
    """Remove a member; the next commit re-keys"""
    member_id, _ = session.resolve_member(member)
    revoke_member(session.handle(), member_id)
    session.output.emit("member", MemberLine(member_id=member_id.hex(), role="removed"), f"{member_id.hex()}\tremoved")


@click.command("members")
@pass_session
def members(session: CliSession):
    """List the current roster"""
    ledger, _ = session.stores()
    for member_id, entry in sorted(ledger.roster(session.repo_id).items()):
        session.output.emit(
            "member",
            MemberLine(member_id=member_id.hex(), role=entry.role.value),
            f"{member_id.hex()}\t{entry.role.value}",
        )
