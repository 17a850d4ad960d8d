"""End-to-end repository workflows.

A RepositoryHandle ties one identity to a repository's ledger and blob
store and caches the head plaintext plus the current segment's key. All
mutating operations go through the ledger's compare-and-set on the head;
a handle that loses a race gets StaleParent and must `refresh` first.
"""
import time
from pathlib import Path
from typing import Iterable, List, Optional, Set, Tuple

from pydantic import ValidationError

from app.config import settings
from app.models.cas import Cid
from app.models.crypto import Dek, MemberKeys
from app.models.ledger import AuditReport, CommitKind, CommitRecord, RepoConfig, Role, RosterEntry
from app.models.repo import LogEntry, Reconstruction, SegmentState, WorkspaceConfig
from app.utils.cas import BlobStore, write_atomic
from app.utils.chainledger import Ledger, canonical_payload
from app.utils.cryptbox import (
    Identity,
    build_dek_file,
    decrypt_blob,
    encode_sealed,
    encrypt_blob,
    generate_dek,
    open_dek_file,
    parse_dek_file,
    parse_sealed,
    sign,
)
from app.utils.errors import (
    CommitNotFound,
    EdgError,
    IntegrityViolation,
    InvalidConfig,
    IoFailure,
    MalformedDekFile,
    NotARecipient,
    NotFound,
    PermissionDenied,
    RepoNotFound,
)
from app.utils.keystore import Keystore
from app.utils.logging import get_logger
from app.utils.patchset import ChunkIndex, apply, diff_indexed, parse_patch, serialize_patch

logger = get_logger(__name__)

Member = Tuple[bytes, Role, MemberKeys]


class RepositoryHandle:
    """One identity's live view of a repository; identity None gives a read-only handle"""

    def __init__(
        self,
        repo_id: bytes,
        ledger: Ledger,
        cas: BlobStore,
        identity: Optional[Identity],
        workspace: Optional[Path] = None,
        unpin_superseded: Optional[bool] = None,
    ):
        self.repo_id = repo_id
        self.ledger = ledger
        self.cas = cas
        self.identity = identity
        self.workspace = Path(workspace) if workspace is not None else None
        self.unpin_superseded = settings.UNPIN_SUPERSEDED if unpin_superseded is None else unpin_superseded
        self.head: Optional[CommitRecord] = None
        self.plaintext: Optional[bytes] = None
        self.segment: Optional[SegmentState] = None
        self._base_index: Optional[ChunkIndex] = None

    @property
    def checkpoint_interval(self) -> int:
        return self.ledger.config(self.repo_id).checkpoint_interval

    @property
    def head_seq(self) -> Optional[int]:
        return self.head.seq if self.head else None

    def require_identity(self) -> Identity:
        if self.identity is None:
            raise PermissionDenied("Read-only handle; unlock an identity first")
        return self.identity

    def __repr__(self) -> str:
        return f"RepositoryHandle({self.repo_id.hex()[:12]}, {self.identity!r}, head={self.head_seq})"


# Helpers

def _now() -> int:
    return int(time.time())


def _put_pinned(cas: BlobStore, data: bytes, fresh: List[Cid]) -> Cid:
    """Store and pin; newly pinned cids are recorded for rollback"""
    cid = cas.put(data)
    if not cas.is_pinned(cid):
        cas.pin(cid)
        fresh.append(cid)
    return cid


def _rollback(cas: BlobStore, fresh: Iterable[Cid]) -> None:
    for cid in fresh:
        try:
            cas.unpin(cid)
        except EdgError as e:
            logger.error(f"Rollback could not unpin {cid.hex[:12]}: {e}")


def _readers(roster: dict) -> List[Tuple[bytes, bytes]]:
    return [(mid, entry.keys.enc_pub) for mid, entry in sorted(roster.items()) if entry.role.can_read]


def _publish(
    handle: RepositoryHandle,
    kind: CommitKind,
    cid: Cid,
    dek_file_cid: Cid,
    timestamp: int,
) -> CommitRecord:
    parent = handle.head
    seq = parent.seq + 1 if parent else 0
    payload = canonical_payload(
        handle.repo_id, seq, kind, cid, parent.cid if parent else None,
        dek_file_cid, handle.require_identity().id, timestamp,
    )
    handle.ledger.commit_data(
        handle.repo_id,
        handle.identity.id,
        cid,
        parent.cid if parent else None,
        dek_file_cid,
        kind,
        timestamp,
        sign(payload, handle.identity),
    )
    return handle.ledger.get_commit(handle.repo_id, seq)


def _write_working_copy(handle: RepositoryHandle) -> None:
    if handle.workspace is None or handle.plaintext is None:
        return
    try:
        write_atomic(handle.workspace / settings.DATA_FILE, handle.plaintext)
    except OSError as e:
        raise IoFailure(f"Failed to write working copy: {e}")


def _seal_segment(
    handle_cas: BlobStore,
    plain: bytes,
    roster: dict,
    fresh: List[Cid],
) -> Tuple[Cid, Cid, Dek]:
    """Encrypt plain under a fresh key and publish a version-1 DEK file for it"""
    dek = generate_dek()
    genesis_cid = _put_pinned(handle_cas, encode_sealed(encrypt_blob(plain, dek)), fresh)
    dek_file = build_dek_file(dek, genesis_cid.digest, _readers(roster), version=1)
    dek_file_cid = _put_pinned(handle_cas, dek_file, fresh)
    return genesis_cid, dek_file_cid, dek


# Segment discovery

def _segment_records(handle: RepositoryHandle, seq: int) -> List[CommitRecord]:
    """Records from the segment genesis up to seq, oldest first"""
    chain = [handle.ledger.get_commit(handle.repo_id, seq)]
    while not chain[-1].kind.starts_segment:
        current = chain[-1]
        if current.seq == 0:
            raise IntegrityViolation("History does not start with a genesis", seq=current.seq)
        previous = handle.ledger.get_commit(handle.repo_id, current.seq - 1)
        if current.parent_cid != previous.cid:
            raise IntegrityViolation("Broken parent link", seq=current.seq)
        chain.append(previous)
    chain.reverse()
    return chain


def _segment_dek_files(handle: RepositoryHandle, genesis: CommitRecord) -> List[Tuple[int, Cid]]:
    """Distinct DEK files referenced inside the segment, newest first"""
    head_seq = handle.ledger.head_seq(handle.repo_id)
    found: List[Tuple[int, Cid]] = []
    for seq in range(genesis.seq, head_seq + 1):
        record = handle.ledger.get_commit(handle.repo_id, seq)
        if seq > genesis.seq and record.kind.starts_segment:
            break
        if all(cid != record.dek_file_cid for _, cid in found):
            found.append((seq, record.dek_file_cid))
    found.reverse()
    return found


def _open_segment(handle: RepositoryHandle, genesis: CommitRecord) -> Tuple[Dek, Cid, int]:
    """Recover the segment key; returns (dek, newest DEK file cid, its version)"""
    me = handle.require_identity()
    candidates = _segment_dek_files(handle, genesis)
    versions = {}
    for seq, cid in candidates:
        try:
            data = handle.cas.get(cid)
            dek_file = parse_dek_file(data)
            if dek_file.segment_id != genesis.cid.digest:
                raise MalformedDekFile("DEK file belongs to another segment")
            versions[cid] = dek_file.version
            dek = open_dek_file(data, me)
        except NotARecipient:
            continue
        except EdgError as e:
            raise e.at_seq(seq)
        # the newest candidate is always parsed first
        newest_cid = candidates[0][1]
        return dek, newest_cid, versions[newest_cid]
    raise NotARecipient(
        f"Identity {me.id.hex()[:12]} holds no key for segment starting at seq {genesis.seq}",
        seq=genesis.seq,
    )


def _decrypt_record(handle: RepositoryHandle, record: CommitRecord, dek: Dek, segment_id: Optional[bytes]) -> bytes:
    try:
        return decrypt_blob(parse_sealed(handle.cas.get(record.cid)), dek, segment_id)
    except EdgError as e:
        raise e.at_seq(record.seq)


# Operations

def reconstruct(handle: RepositoryHandle, seq: int) -> Reconstruction:
    """Rebuild the plaintext at seq from its segment genesis and patches.

    Args:
        handle: Repository handle whose identity must hold the segment key
        seq: Commit to reconstruct

    Returns:
        Reconstruction with the plaintext and the number of patches applied
    """
    head_seq = handle.ledger.head_seq(handle.repo_id)
    if head_seq is None or not 0 <= seq <= head_seq:
        raise CommitNotFound(f"No commit at seq {seq}", seq=seq)

    chain = _segment_records(handle, seq)
    genesis = chain[0]
    dek, _, _ = _open_segment(handle, genesis)

    plain = _decrypt_record(handle, genesis, dek, None)
    for record in chain[1:]:
        body = _decrypt_record(handle, record, dek, genesis.cid.digest)
        try:
            plain = apply(plain, parse_patch(body))
        except EdgError as e:
            raise e.at_seq(record.seq)

    logger.debug(f"Reconstructed seq {seq} from genesis {genesis.seq} with {len(chain) - 1} patches")
    return Reconstruction(
        seq=seq,
        plaintext=plain,
        patches_applied=len(chain) - 1,
        segment_genesis_seq=genesis.seq,
    )


def checkout(handle: RepositoryHandle, seq: Optional[int] = None) -> bytes:
    """Plaintext at seq (head when omitted)"""
    if seq is None:
        seq = handle.ledger.head_seq(handle.repo_id)
        if seq is None:
            raise CommitNotFound("Repository has no commits yet")
    plain = reconstruct(handle, seq).plaintext
    if handle.head is not None and seq == handle.head.seq:
        handle.plaintext = plain
        _write_working_copy(handle)
    return plain


def refresh(handle: RepositoryHandle) -> RepositoryHandle:
    """Reload head and segment cache from the ledger, including commits other processes made"""
    handle.ledger.sync(handle.repo_id)
    head = handle.ledger.get_head(handle.repo_id)
    if handle.head is not None and head == handle.head and handle.plaintext is not None:
        return handle
    handle.head = head
    handle.plaintext = None
    handle.segment = None
    handle._base_index = None

    rebuilt = reconstruct(handle, head.seq)
    genesis = handle.ledger.get_commit(handle.repo_id, rebuilt.segment_genesis_seq)
    dek, dek_file_cid, version = _open_segment(handle, genesis)
    handle.plaintext = rebuilt.plaintext
    handle.segment = SegmentState(
        genesis_seq=genesis.seq,
        genesis_cid=genesis.cid,
        dek=dek,
        dek_file_cid=dek_file_cid,
        dek_file_version=version,
        patch_count=rebuilt.patches_applied,
    )
    logger.debug(f"Refreshed {handle!r}")
    return handle


def _ensure_current(handle: RepositoryHandle) -> None:
    if handle.plaintext is None or handle.segment is None:
        refresh(handle)


def init_repo(
    plain: bytes,
    owner: Identity,
    members: Iterable[Member],
    checkpoint_interval: int,
    ledger: Ledger,
    cas: BlobStore,
    timestamp: Optional[int] = None,
    workspace: Optional[Path] = None,
) -> RepositoryHandle:
    """Create a repository whose genesis holds plain.

    Args:
        plain: Genesis plaintext
        owner: Identity that becomes the single OWNER
        members: Additional (id, role, keys) entries; the owner is added when absent
        checkpoint_interval: N, the maximum number of patches per segment
        ledger: Ledger to register the repository in
        cas: Blob store for encrypted blobs and DEK files
        timestamp: Creation time (seconds); defaults to now
        workspace: Repository directory for the working copy, if any

    Returns:
        A live handle positioned at the genesis commit
    """
    if checkpoint_interval < 1:
        raise InvalidConfig(f"Checkpoint interval must be >= 1, got {checkpoint_interval}")
    timestamp = _now() if timestamp is None else timestamp

    roster = {}
    for mid, role, keys in members:
        if mid in roster:
            raise InvalidConfig(f"Member {mid.hex()[:12]} listed twice")
        roster[mid] = RosterEntry(role=role, keys=keys)
    entry = roster.setdefault(owner.id, RosterEntry(role=Role.OWNER, keys=owner.public()))
    if entry.role != Role.OWNER:
        raise InvalidConfig("The creating identity must be the OWNER")
    config = RepoConfig(checkpoint_interval=checkpoint_interval, roster=roster)

    fresh: List[Cid] = []
    try:
        genesis_cid, dek_file_cid, dek = _seal_segment(cas, plain, roster, fresh)
        repo_id = ledger.create_repo(owner.public(), config, timestamp)
        handle = RepositoryHandle(repo_id, ledger, cas, owner, workspace)
        record = _publish(handle, CommitKind.GENESIS, genesis_cid, dek_file_cid, timestamp)
    except BaseException:
        _rollback(cas, fresh)
        raise

    handle.head = record
    handle.plaintext = bytes(plain)
    handle.segment = SegmentState(genesis_seq=0, genesis_cid=genesis_cid, dek=dek, dek_file_cid=dek_file_cid)
    _write_working_copy(handle)
    logger.info(f"Initialized repository {repo_id.hex()[:12]} with {len(roster)} members")
    return handle


def open_repo(
    repo_id: bytes,
    identity: Optional[Identity],
    ledger: Ledger,
    cas: BlobStore,
    workspace: Optional[Path] = None,
) -> RepositoryHandle:
    """Handle on an existing repository.

    Only the head record is loaded here; the head plaintext and segment key are
    rebuilt on first use, so identities without a key can still read history
    metadata and run checkouts of segments they hold.
    """
    ledger.config(repo_id)
    handle = RepositoryHandle(repo_id, ledger, cas, identity, workspace)
    if ledger.head_seq(repo_id) is not None:
        handle.head = ledger.get_head(repo_id)
    return handle


def _unpin_before(handle: RepositoryHandle, genesis_seq: int) -> None:
    """Release pins of every segment older than the one starting at genesis_seq"""
    released = 0
    for seq in range(genesis_seq):
        record = handle.ledger.get_commit(handle.repo_id, seq)
        for cid in (record.cid, record.dek_file_cid):
            try:
                if handle.cas.is_pinned(cid):
                    handle.cas.unpin(cid)
                    released += 1
            except NotFound:
                pass
    logger.info(f"Unpinned {released} superseded blobs before seq {genesis_seq}")


def _commit_checkpoint(handle: RepositoryHandle, new_plain: bytes, timestamp: int) -> CommitRecord:
    roster = handle.ledger.roster(handle.repo_id)
    fresh: List[Cid] = []
    try:
        genesis_cid, dek_file_cid, dek = _seal_segment(handle.cas, new_plain, roster, fresh)
        record = _publish(handle, CommitKind.CHECKPOINT_GENESIS, genesis_cid, dek_file_cid, timestamp)
    except BaseException:
        _rollback(handle.cas, fresh)
        raise
    handle.segment = SegmentState(
        genesis_seq=record.seq,
        genesis_cid=genesis_cid,
        dek=dek,
        dek_file_cid=dek_file_cid,
    )
    handle._base_index = None
    logger.info(f"Checkpoint at seq {record.seq} for {len(_readers(roster))} readers")
    if handle.unpin_superseded:
        _unpin_before(handle, record.seq)
    return record


def _commit_patch(
    handle: RepositoryHandle,
    new_plain: bytes,
    timestamp: int,
    fresh: Optional[List[Cid]] = None,
) -> CommitRecord:
    segment = handle.segment
    fresh = [] if fresh is None else fresh
    try:
        patch, target_index = diff_indexed(handle.plaintext, new_plain, handle._base_index)
        sealed = encrypt_blob(serialize_patch(patch), segment.dek, segment.genesis_cid.digest)
        cid = _put_pinned(handle.cas, encode_sealed(sealed), fresh)
        record = _publish(handle, CommitKind.PATCH, cid, segment.dek_file_cid, timestamp)
    except BaseException:
        _rollback(handle.cas, fresh)
        raise
    segment.patch_count += 1
    handle._base_index = target_index
    logger.debug(f"Patch seq {record.seq}: {len(patch.ops)} ops, {segment.patch_count} since genesis")
    return record


def _needs_checkpoint(handle: RepositoryHandle) -> bool:
    return (
        handle.ledger.checkpoint_required(handle.repo_id)
        or handle.segment.patch_count >= handle.checkpoint_interval
    )


def commit(handle: RepositoryHandle, new_plain: bytes, timestamp: Optional[int] = None) -> CommitRecord:
    """Publish new_plain as the next version.

    A patch against the cached head is committed while the segment has room;
    otherwise (or after a revocation) a checkpoint starts a new segment with
    a fresh key.

    Raises:
        PermissionDenied: the identity may not commit
        StaleParent: another handle committed first; refresh and retry
    """
    role = handle.ledger.role_of(handle.repo_id, handle.require_identity().id)
    if role is None or not role.can_commit:
        raise PermissionDenied(f"{handle.identity!r} may not commit to this repository")
    _ensure_current(handle)
    new_plain = bytes(new_plain)
    timestamp = _now() if timestamp is None else timestamp

    if _needs_checkpoint(handle):
        record = _commit_checkpoint(handle, new_plain, timestamp)
    else:
        record = _commit_patch(handle, new_plain, timestamp)

    handle.head = record
    handle.plaintext = new_plain
    _write_working_copy(handle)
    return record


def _holds_segment_key(handle: RepositoryHandle, member_id: bytes) -> bool:
    dek_file = parse_dek_file(handle.cas.get(handle.segment.dek_file_cid))
    return member_id in dek_file.recipients


def grant(
    handle: RepositoryHandle,
    member_id: bytes,
    role: Role,
    keys: Optional[MemberKeys] = None,
    timestamp: Optional[int] = None,
) -> Optional[CommitRecord]:
    """Give member_id a role; readers missing from the newest DEK file get a key.

    Returns the commit that anchors the new DEK file, or None when the member
    already holds the segment key (role change or ownership transfer). A
    grant whose anchor commit failed is completed by granting again.
    """
    timestamp = _now() if timestamp is None else timestamp
    me = handle.require_identity()
    if handle.ledger.role_of(handle.repo_id, me.id) != Role.OWNER:
        raise PermissionDenied("Only the OWNER may grant roles")
    refresh(handle)
    if handle.ledger.role_of(handle.repo_id, member_id) != role:
        handle.ledger.set_role(handle.repo_id, me.id, member_id, role, keys, timestamp)
    if not role.can_read or _holds_segment_key(handle, member_id):
        return None

    if _needs_checkpoint(handle):
        record = _commit_checkpoint(handle, handle.plaintext, timestamp)
    else:
        segment = handle.segment
        roster = handle.ledger.roster(handle.repo_id)
        fresh: List[Cid] = []
        try:
            dek_file = build_dek_file(
                segment.dek, segment.genesis_cid.digest, _readers(roster), segment.dek_file_version + 1
            )
            dek_file_cid = _put_pinned(handle.cas, dek_file, fresh)
        except BaseException:
            _rollback(handle.cas, fresh)
            raise
        previous = (segment.dek_file_cid, segment.dek_file_version)
        segment.dek_file_cid, segment.dek_file_version = dek_file_cid, segment.dek_file_version + 1
        try:
            record = _commit_patch(handle, handle.plaintext, timestamp, fresh)
        except BaseException:
            segment.dek_file_cid, segment.dek_file_version = previous
            raise
        logger.info(f"DEK file v{segment.dek_file_version} published at seq {record.seq}")
    handle.head = record
    return record


def revoke(handle: RepositoryHandle, member_id: bytes, timestamp: Optional[int] = None) -> None:
    """Remove a member; the next commit re-keys through a checkpoint"""
    timestamp = _now() if timestamp is None else timestamp
    handle.ledger.set_role(handle.repo_id, handle.require_identity().id, member_id, None, None, timestamp)
    logger.info(f"Revoked {member_id.hex()[:12]}; next commit starts a new segment")


def log(handle: RepositoryHandle) -> List[LogEntry]:
    head_seq = handle.ledger.head_seq(handle.repo_id)
    if head_seq is None:
        return []
    entries = []
    for seq in range(head_seq + 1):
        record = handle.ledger.get_commit(handle.repo_id, seq)
        entries.append(LogEntry(
            seq=record.seq,
            kind=record.kind,
            cid=record.cid,
            author_id=record.author_id,
            timestamp=record.timestamp,
        ))
    return entries


def verify(handle: RepositoryHandle) -> AuditReport:
    """Audit the chain against the store, then try to rebuild the head"""
    report = handle.ledger.verify_chain(handle.repo_id, handle.cas.digest_of)
    head_seq = handle.ledger.head_seq(handle.repo_id)
    if head_seq is None:
        return report
    if handle.identity is None:
        report.reconstruction_issue = "skipped: no identity unlocked"
        return report
    try:
        reconstruct(handle, head_seq)
        report.reconstruction_ok = True
    except NotARecipient as e:
        report.reconstruction_issue = f"skipped: {e}"
    except EdgError as e:
        report.reconstruction_ok = False
        report.reconstruction_issue = str(e)
        logger.warning(f"Head reconstruction failed: {e}")
    return report


def referenced_cids(handle: RepositoryHandle, include_superseded: bool = True) -> Set[Cid]:
    """Blob ids the ledger references; optionally only the newest segment's"""
    refs = handle.ledger.referenced_cids(handle.repo_id)
    if include_superseded:
        return refs
    head_seq = handle.ledger.head_seq(handle.repo_id)
    if head_seq is None:
        return set()
    genesis_seq = _segment_records(handle, head_seq)[0].seq
    current = set()
    for seq in range(genesis_seq, head_seq + 1):
        record = handle.ledger.get_commit(handle.repo_id, seq)
        current.update((record.cid, record.dek_file_cid))
    return current


def collect_garbage(ledger: Ledger, cas: BlobStore, include_superseded: bool = True) -> Set[Cid]:
    """Release pins no ledger record backs, then delete every unreferenced blob.

    Such pins are left by commits that failed between storing a blob and
    publishing it. Must not run while another writer is committing.
    """
    roots: Set[Cid] = set()
    for repo_id in ledger.repo_ids():
        ledger.sync(repo_id)
        roots |= referenced_cids(open_repo(repo_id, None, ledger, cas), include_superseded)
    orphans = cas.pinned() - roots
    for cid in sorted(orphans, key=lambda c: c.hex):
        try:
            cas.unpin(cid)
        except NotFound:
            logger.warning(f"gc: pin on missing blob {cid.hex[:12]} left in place")
    if orphans:
        logger.info(f"gc: released {len(orphans)} pins without a commit")
    return cas.gc(roots)


# Workspace layout

def workspace_dir(repo_path: str | Path) -> Path:
    return Path(repo_path) / settings.WORKSPACE_DIR


def keystore_for(repo_path: str | Path) -> Keystore:
    return Keystore(workspace_dir(repo_path) / "keystore")


def _resolve(base: Path, stored: str) -> Path:
    path = Path(stored)
    return path if path.is_absolute() else base / path


def save_workspace(repo_path: str | Path, config: WorkspaceConfig) -> None:
    target = workspace_dir(repo_path)
    try:
        target.mkdir(parents=True, exist_ok=True)
        write_atomic(target / "config", config.model_dump_json(indent=2).encode("utf-8"))
    except OSError as e:
        raise IoFailure(f"Failed to write workspace config: {e}")


def load_workspace(repo_path: str | Path) -> WorkspaceConfig:
    path = workspace_dir(repo_path) / "config"
    try:
        return WorkspaceConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise RepoNotFound(f"No repository at {Path(repo_path).resolve()} (missing {settings.WORKSPACE_DIR}/config)")
    except ValidationError as e:
        raise InvalidConfig(f"Workspace config is invalid: {e.error_count()} errors")
    except OSError as e:
        raise IoFailure(f"Failed to read workspace config: {e}")


def workspace_stores(repo_path: str | Path, config: WorkspaceConfig) -> Tuple[Ledger, BlobStore]:
    base = workspace_dir(repo_path)
    return Ledger(_resolve(base, config.ledger_path)), BlobStore(_resolve(base, config.cas_path))


def init_workspace(
    repo_path: str | Path,
    plain: bytes,
    owner: Identity,
    owner_name: str,
    checkpoint_interval: int,
    members: Iterable[Member] = (),
    ledger_path: str = "ledger",
    cas_path: str = "cas",
) -> RepositoryHandle:
    """Create `<repo>/.edg` with its stores and initialize a repository in it"""
    repo_path = Path(repo_path)
    if (workspace_dir(repo_path) / "config").exists():
        raise InvalidConfig(f"{repo_path} already holds a repository")
    base = workspace_dir(repo_path)
    ledger = Ledger(_resolve(base, ledger_path))
    cas = BlobStore(_resolve(base, cas_path))
    handle = init_repo(plain, owner, members, checkpoint_interval, ledger, cas, workspace=repo_path)
    save_workspace(repo_path, WorkspaceConfig(
        repo_id=handle.repo_id.hex(),
        checkpoint_interval=checkpoint_interval,
        ledger_path=ledger_path,
        cas_path=cas_path,
        identity=owner_name,
    ))
    return handle


def open_workspace(repo_path: str | Path, identity: Identity) -> RepositoryHandle:
    config = load_workspace(repo_path)
    ledger, cas = workspace_stores(repo_path, config)
    return open_repo(bytes.fromhex(config.repo_id), identity, ledger, cas, workspace=Path(repo_path))
