import logging
from pathlib import Path
from typing import Optional

import click

from app.cli.commands import history, identity, maintenance, members, repo
from app.cli.dependencies import CliSession
from app.cli.output import Output
from app.config import get_env_var, settings
from app.models.cli import CliConfig, OutputMode, PassphraseSource
from app.utils.errors import EXIT_INTERNAL, EdgError
from app.utils.logging import get_logger, setup_logging, verbosity_to_level

logger = get_logger(__name__)


class EdgGroup(click.Group):
    """Group that turns vault errors into their exit codes and error lines"""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except EdgError as e:
            logger.debug(f"{e.__class__.__name__}: {e}")
            self._output(ctx).exception(e)
            ctx.exit(e.exit_code)
        except Exception as e:
            logger.error(f"Unexpected error: {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
            self._output(ctx).error(f"internal error: {e.__class__.__name__}", EXIT_INTERNAL)
            ctx.exit(EXIT_INTERNAL)

    @staticmethod
    def _output(ctx: click.Context) -> Output:
        session = ctx.find_object(CliSession)
        return session.output if session else Output()


@click.group(cls=EdgGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--repo", "repo_path", type=click.Path(path_type=Path), envvar="EDG_REPO", default=None,
              help="Repository directory (default: current directory)")
@click.option("--identity", envvar="EDG_IDENTITY", default=None, help="Identity name or id in the keystore")
@click.option("--json", "json_lines", is_flag=True, help="Emit json-lines instead of text")
@click.option("--passphrase-file", type=click.Path(path_type=Path, dir_okay=False), default=None,
              help="Read the keystore passphrase from a file")
@click.option("-v", "--verbose", count=True, help="Increase log verbosity (-v INFO, -vv DEBUG)")
@click.version_option(settings.PROJECT_VERSION, prog_name=settings.PROJECT_NAME)
@click.pass_context
def cli(ctx: click.Context, repo_path: Optional[Path], identity: Optional[str], json_lines: bool,
        passphrase_file: Optional[Path], verbose: int):
    """Encrypted, versioned data repositories on a signed commit ledger"""
    level = verbosity_to_level(verbose)
    if level:
        setup_logging(log_level=level)

    if passphrase_file is not None:
        source = PassphraseSource.FILE
    elif get_env_var("EDG_PASSPHRASE") is not None:
        source = PassphraseSource.ENV
    else:
        source = PassphraseSource.PROMPT

    ctx.obj = CliSession(CliConfig(
        repo_path=repo_path or Path(settings.REPO_PATH),
        identity=identity or settings.IDENTITY,
        output_mode=OutputMode.JSON_LINES if json_lines else OutputMode.HUMAN,
        passphrase_source=source,
        passphrase_file=passphrase_file,
        verbose=verbose,
    ))


# Identity management
cli.add_command(identity.keygen)
cli.add_command(identity.identities)

# Repository lifecycle
cli.add_command(repo.init)
cli.add_command(repo.commit)
cli.add_command(repo.checkout)
cli.add_command(repo.head)

# History and audit
cli.add_command(history.log)
cli.add_command(history.events)
cli.add_command(history.verify)

# Membership
cli.add_command(members.grant)
cli.add_command(members.revoke)
cli.add_command(members.members)

# Maintenance
cli.add_command(maintenance.gc)
cli.add_command(maintenance.schema)
