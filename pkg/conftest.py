import pytest

from app.config import settings
from app.models.cas import Cid
from app.models.ledger import CommitKind, RepoConfig, Role, RosterEntry
from app.utils.cas import BlobStore
from app.utils.chainledger import Ledger, canonical_payload
from app.tests.helpers import BASE_TIME, random_bytes, seeded
from app.utils.cryptbox import sign
from app.utils.repoclient import init_repo


@pytest.fixture(autouse=True)
def fast_kdf(monkeypatch):
    """Keep keystore scrypt cheap in tests"""
    monkeypatch.setattr(settings, "KDF_N", 1024)


@pytest.fixture
def alice():
    return seeded(1)


@pytest.fixture
def bob():
    return seeded(2)


@pytest.fixture
def carol():
    return seeded(3)


@pytest.fixture
def mallory():
    return seeded(99)


@pytest.fixture
def cas(tmp_path):
    return BlobStore(tmp_path / "cas")


@pytest.fixture
def ledger(tmp_path):
    return Ledger(tmp_path / "ledger")


@pytest.fixture
def memory_ledger():
    return Ledger()


@pytest.fixture
def roster_config():
    """Factory for a RepoConfig with the given (identity, role) pairs"""
    def make(members, checkpoint_interval: int = 3) -> RepoConfig:
        return RepoConfig(
            checkpoint_interval=checkpoint_interval,
            roster={ident.id: RosterEntry(role=role, keys=ident.public()) for ident, role in members},
        )
    return make


@pytest.fixture
def signed_commit():
    """Commit to a ledger with a correct signature; returns the new seq"""
    def commit(ledger, repo_id, author, kind, cid, dek_file_cid=None, parent=None, timestamp=BASE_TIME, seq=None):
        dek_file_cid = dek_file_cid or Cid.of(b"dek-file:" + cid.digest)
        if seq is None:
            seq = ledger.head_seq(repo_id)
            seq = 0 if seq is None else seq + 1
        payload = canonical_payload(repo_id, seq, kind, cid, parent, dek_file_cid, author.id, timestamp)
        return ledger.commit_data(repo_id, author.id, cid, parent, dek_file_cid, kind, timestamp, sign(payload, author))
    return commit


@pytest.fixture
def chain(ledger, alice, roster_config, signed_commit):
    """Ledger repo (N=3) owned by alice with a genesis and two patches"""
    repo_id = ledger.create_repo(alice.public(), roster_config([(alice, Role.OWNER)]), BASE_TIME)
    parent = None
    for i, kind in enumerate([CommitKind.GENESIS, CommitKind.PATCH, CommitKind.PATCH]):
        cid = Cid.of(f"blob-{i}".encode())
        signed_commit(ledger, repo_id, alice, kind, cid, parent=parent, timestamp=BASE_TIME + i)
        parent = cid
    return repo_id


@pytest.fixture
def genesis_plain():
    return random_bytes(4096, seed=7)


@pytest.fixture
def repo(genesis_plain, alice, ledger, cas):
    """Live handle on a fresh repository (N=3) owned by alice"""
    return init_repo(genesis_plain, alice, [], 3, ledger, cas, timestamp=BASE_TIME)
