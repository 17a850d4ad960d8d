import json

import click

from app.cli.dependencies import CliSession, pass_session
from app.config import settings
from app.models.output import OUTPUT_MODELS, GcLine
from app.models.response import StandardResponse
from app.utils.logging import get_logger
from app.utils.repoclient import collect_garbage

logger = get_logger(__name__)


@click.command("gc")
@pass_session
def gc(session: CliSession):
    """Delete blobs that no ledger record references.

    Pins left by failed commits are released first. With
    EDG_UNPIN_SUPERSEDED, segments older than the newest checkpoint go too.
    """
    ledger, cas = session.stores()
    removed = collect_garbage(ledger, cas, include_superseded=not settings.UNPIN_SUPERSEDED)
    line = GcLine(removed=sorted(cid.hex for cid in removed), kept=len(cas))
    session.output.emit("gc", line, f"removed {len(removed)} blobs, {line.kept} kept")


@click.command("schema")
def schema():
    """Print the JSON schema of every json-lines output type"""
    document = {
        "envelope": StandardResponse.model_json_schema(),
        "lines": {kind: model.model_json_schema() for kind, model in OUTPUT_MODELS.items()},
    }
    click.echo(json.dumps(document, indent=2, sort_keys=True))
