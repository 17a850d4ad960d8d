import logging
import sys
from typing import List, Optional

import click

from app.cli import cli
from app.utils.errors import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, EdgError
from app.utils.logging import get_logger

# Get logger for this module
logger = get_logger(__name__)


def run(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return its exit code.

    Errors raised inside commands are rendered by the command group; this is
    the last line of defence for everything that escapes it.
    """
    try:
        rv = cli.main(args=argv, prog_name="edg", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("error: aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        # usage errors (unknown option, bad value) exit 1
        e.show()
        return EXIT_USAGE
    except EdgError as e:
        click.echo(f"error: {e}", err=True)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=logger.isEnabledFor(logging.DEBUG))
        click.echo("error: internal error", err=True)
        return EXIT_INTERNAL
    return rv if isinstance(rv, int) else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
