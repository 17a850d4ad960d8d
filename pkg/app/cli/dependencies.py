from pathlib import Path
from typing import Optional, Tuple

import click

from app.cli.output import Output
from app.config import get_env_var
from app.models.cli import CliConfig, PassphraseSource
from app.models.crypto import MemberKeys
from app.models.repo import WorkspaceConfig
from app.utils.cas import BlobStore
from app.utils.chainledger import Ledger
from app.utils.cryptbox import Identity
from app.utils.errors import IdentityNotFound, IoFailure, UsageError
from app.utils.keystore import Keystore
from app.utils.logging import get_logger
from app.utils.repoclient import (
    RepositoryHandle,
    keystore_for,
    load_workspace,
    open_repo,
    workspace_dir,
    workspace_stores,
)

logger = get_logger(__name__)


class CliSession:
    """Per-invocation access to the workspace, keystore and stores"""

    def __init__(self, config: CliConfig):
        self.config = config
        self.output = Output(config.output_mode)
        self._workspace: Optional[WorkspaceConfig] = None
        self._stores: Optional[Tuple[Ledger, BlobStore]] = None

    @property
    def repo_path(self) -> Path:
        return self.config.repo_path

    def keystore(self) -> Keystore:
        return keystore_for(self.repo_path)

    def passphrase(self, confirm: bool = False) -> str:
        source = self.config.passphrase_source
        if source == PassphraseSource.FILE:
            try:
                return self.config.passphrase_file.read_text(encoding="utf-8").rstrip("\r\n")
            except OSError as e:
                raise IoFailure(f"Cannot read passphrase file: {e}")
        if source == PassphraseSource.ENV:
            return get_env_var("EDG_PASSPHRASE")
        return click.prompt("Passphrase", hide_input=True, confirmation_prompt=confirm, err=True)

    def workspace(self) -> WorkspaceConfig:
        if self._workspace is None:
            self._workspace = load_workspace(self.repo_path)
        return self._workspace

    def stores(self) -> Tuple[Ledger, BlobStore]:
        if self._stores is None:
            self._stores = workspace_stores(self.repo_path, self.workspace())
        return self._stores

    @property
    def repo_id(self) -> bytes:
        return bytes.fromhex(self.workspace().repo_id)

    def identity_name(self) -> str:
        name = self.config.identity
        if name is None and (workspace_dir(self.repo_path) / "config").exists():
            name = self.workspace().identity
        if name is None:
            raise UsageError("No identity selected; pass --identity or set EDG_IDENTITY")
        return self.keystore().resolve(name)

    def unlock(self) -> Identity:
        return self.keystore().unlock(self.identity_name(), self.passphrase())

    def handle(self) -> RepositoryHandle:
        ledger, cas = self.stores()
        return open_repo(self.repo_id, self.unlock(), ledger, cas, workspace=self.repo_path)

    def resolve_member(self, ref: str) -> Tuple[bytes, Optional[MemberKeys]]:
        """Member id and keys from the keystore, or a bare 64-hex id without keys"""
        try:
            keys = self.keystore().load_public(self.keystore().resolve(ref))
            return keys.id, keys
        except IdentityNotFound:
            try:
                member = bytes.fromhex(ref)
            except ValueError:
                member = b""
            if len(member) != 32:
                raise
            return member, None


pass_session = click.make_pass_decorator(CliSession)
