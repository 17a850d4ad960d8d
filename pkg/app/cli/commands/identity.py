from typing import Optional

import click

from app.cli.dependencies import CliSession, pass_session
from app.models.output import IdentityLine
from app.models.repo import IdentityFile
from app.utils.cryptbox import keygen as derive_identity
from app.utils.errors import UsageError
from app.utils.logging import get_logger

logger = get_logger(__name__)


def identity_line(record: IdentityFile) -> IdentityLine:
    return IdentityLine(name=record.name, id=record.id, sign_pub=record.sign_pub, enc_pub=record.enc_pub)


@click.command("keygen")
@click.option("--name", required=True, help="Name of the new identity in the keystore")
@click.option("--seed-hex", hidden=True, default=None, help="Deterministic seed (tests only)")
@pass_session
def keygen(session: CliSession, name: str, seed_hex: Optional[str]):
    """Create an identity in the repository keystore"""
    identity = None
    if seed_hex is not None:
        try:
            identity = derive_identity(bytes.fromhex(seed_hex))
        except ValueError:
            raise UsageError("--seed-hex must be hexadecimal")
    record = session.keystore().create(name, session.passphrase(confirm=True), identity)
    session.output.emit("identity", identity_line(record), f"{record.name}\t{record.id}")


@click.command("identities")
@pass_session
def identities(session: CliSession):
    """List identities in the keystore"""
    for record in session.keystore().list_identities():
        session.output.emit("identity", identity_line(record), f"{record.name}\t{record.id}")
