from enum import Enum
from pathlib import Path
from typing import Optional
from pydantic import BaseModel


class OutputMode(str, Enum):
    HUMAN = "human"
    JSON_LINES = "json-lines"


class PassphraseSource(str, Enum):
    PROMPT = "prompt"
    ENV = "env"
    FILE = "file"


class CliConfig(BaseModel):
    """Options shared by every command"""
    repo_path: Path
    identity: Optional[str] = None
    output_mode: OutputMode = OutputMode.HUMAN
    passphrase_source: PassphraseSource = PassphraseSource.PROMPT
    passphrase_file: Optional[Path] = None
    verbose: int = 0
