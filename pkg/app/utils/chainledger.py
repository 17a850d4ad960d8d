"""Deterministic commit ledger.

Each repository is an append-only chain of signed commit records plus an
event log (REPO_CREATED, ROLE_SET, COMMITTED). State is a pure fold of the
event log; the same `apply_event` runs live and during replay.

On disk, each repository has a directory ``<ledger>/<repo_hex>/`` with
``events.log`` and ``records.log``, both sequences of 4-byte big-endian
length-prefixed canonical frames. Commits are served from ``records.log``;
``verify_chain`` compares them against the event log and rechecks every rule.
"""
import fcntl
import hashlib
import os
import struct
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set

from app.models.cas import Cid
from app.models.crypto import MemberKeys
from app.models.ledger import (
    AuditReport,
    CommitAudit,
    CommitKind,
    CommitRecord,
    Committed,
    EventKind,
    LedgerEvent,
    RepoConfig,
    RepoCreated,
    Role,
    RoleSet,
    RosterEntry,
)
from app.utils.cryptbox import member_id, verify_sig
from app.utils.errors import (
    BadSignature,
    CannotOrphanRepo,
    CheckpointRequired,
    CommitNotFound,
    InvalidConfig,
    IoFailure,
    LedgerCorruption,
    MalformedRecord,
    MemberNotFound,
    PermissionDenied,
    RepoNotFound,
    StaleParent,
)
from app.utils.logging import get_logger

logger = get_logger(__name__)

PAYLOAD_MAGIC = b"EDGC1"
EVENT_MAGIC = b"EDGV1"
ZERO_CID = bytes(32)
PAYLOAD_LEN = 182
FRAME = struct.Struct(">I")

ROLE_CODES = {Role.OWNER: 0, Role.CONTRIBUTOR: 1, Role.REVIEWER: 2, None: 0xFF}
CODE_ROLES = {code: role for role, code in ROLE_CODES.items()}

BlobHashLookup = Callable[[Cid], Optional[bytes]]


# Canonical encodings

def canonical_payload(
    repo_id: bytes,
    seq: int,
    kind: CommitKind,
    cid: Cid,
    parent_cid: Optional[Cid],
    dek_file_cid: Cid,
    author_id: bytes,
    timestamp: int,
) -> bytes:
    """The exact bytes a commit signature covers"""
    if len(repo_id) != 32 or len(author_id) != 32:
        raise MalformedRecord("repo_id and author_id must be 32 bytes")
    if not (0 <= seq < 1 << 64 and 0 <= timestamp < 1 << 64):
        raise MalformedRecord("seq and timestamp must fit in 8 unsigned bytes")
    return b"".join([
        PAYLOAD_MAGIC,
        repo_id,
        struct.pack(">QB", seq, int(kind)),
        cid.digest,
        parent_cid.digest if parent_cid is not None else ZERO_CID,
        dek_file_cid.digest,
        author_id,
        struct.pack(">Q", timestamp),
    ])


def record_payload(record: CommitRecord) -> bytes:
    return canonical_payload(
        record.repo_id, record.seq, record.kind, record.cid, record.parent_cid,
        record.dek_file_cid, record.author_id, record.timestamp,
    )


def encode_record(record: CommitRecord) -> bytes:
    return record_payload(record) + struct.pack(">H", len(record.signature)) + record.signature


def decode_record(data: bytes) -> CommitRecord:
    """Parse one canonical record; any deviation raises MalformedRecord"""
    if len(data) < PAYLOAD_LEN + 2 or not data.startswith(PAYLOAD_MAGIC):
        raise MalformedRecord("Record too short or bad magic")
    pos = len(PAYLOAD_MAGIC)
    repo_id = data[pos:pos + 32]
    seq, kind_code = struct.unpack_from(">QB", data, pos + 32)
    pos += 41
    try:
        kind = CommitKind(kind_code)
    except ValueError:
        raise MalformedRecord(f"Unknown commit kind {kind_code}")
    cid, parent, dek_file = (data[pos + 32 * i:pos + 32 * (i + 1)] for i in range(3))
    pos += 96
    author_id = data[pos:pos + 32]
    (timestamp,) = struct.unpack_from(">Q", data, pos + 32)
    pos += 40
    (sig_len,) = struct.unpack_from(">H", data, pos)
    pos += 2
    if pos + sig_len != len(data):
        raise MalformedRecord("Signature length does not match record size")
    return CommitRecord(
        repo_id=repo_id,
        seq=seq,
        kind=kind,
        cid=Cid(digest=cid),
        parent_cid=None if parent == ZERO_CID else Cid(digest=parent),
        dek_file_cid=Cid(digest=dek_file),
        author_id=author_id,
        timestamp=timestamp,
        signature=data[pos:],
    )


def _lp(data: bytes) -> bytes:
    return struct.pack(">H", len(data)) + data


def _encode_keys(keys: MemberKeys) -> bytes:
    return _lp(keys.sign_pub) + _lp(keys.enc_pub)


def encode_config(config: RepoConfig) -> bytes:
    parts = [struct.pack(">QI", config.checkpoint_interval, len(config.roster))]
    for mid in sorted(config.roster):
        entry = config.roster[mid]
        parts.append(mid + bytes([ROLE_CODES[entry.role]]) + _encode_keys(entry.keys))
    return b"".join(parts)


def config_hash(config: RepoConfig) -> bytes:
    return hashlib.sha256(encode_config(config)).digest()


def derive_repo_id(owner_id: bytes, timestamp: int, config: RepoConfig) -> bytes:
    return hashlib.sha256(owner_id + struct.pack(">Q", timestamp) + config_hash(config)).digest()


def encode_event(event: LedgerEvent) -> bytes:
    payload = event.payload
    if isinstance(payload, RepoCreated):
        body = payload.owner_id + encode_config(payload.config)
    elif isinstance(payload, RoleSet):
        body = payload.caller_id + payload.member_id + bytes([ROLE_CODES[payload.role]])
        body += b"\x01" + _encode_keys(payload.keys) if payload.keys is not None else b"\x00"
    else:
        body = encode_record(payload.record)
    return EVENT_MAGIC + event.repo_id + struct.pack(">QBQ", event.event_seq, int(event.kind), event.timestamp) + body


class _Reader:
    """Bounds-checked cursor; overruns raise LedgerCorruption"""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise LedgerCorruption("Truncated ledger event")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def lp(self) -> bytes:
        (n,) = self.unpack(">H")
        return self.take(n)

    def keys(self, mid: bytes) -> MemberKeys:
        return MemberKeys(id=mid, sign_pub=self.lp(), enc_pub=self.lp())

    def role(self) -> Optional[Role]:
        code = self.take(1)[0]
        if code not in CODE_ROLES:
            raise LedgerCorruption(f"Unknown role code {code}")
        return CODE_ROLES[code]


def decode_event(data: bytes) -> LedgerEvent:
    if not data.startswith(EVENT_MAGIC):
        raise LedgerCorruption("Bad event magic")
    r = _Reader(data, len(EVENT_MAGIC))
    repo_id = r.take(32)
    event_seq, kind_code, timestamp = r.unpack(">QBQ")
    try:
        kind = EventKind(kind_code)
    except ValueError:
        raise LedgerCorruption(f"Unknown event kind {kind_code}")

    if kind == EventKind.REPO_CREATED:
        owner_id = r.take(32)
        interval, count = r.unpack(">QI")
        roster = {}
        for _ in range(count):
            mid = r.take(32)
            role = r.role()
            if role is None:
                raise LedgerCorruption("Roster entry without a role")
            roster[mid] = RosterEntry(role=role, keys=r.keys(mid))
        payload = RepoCreated(owner_id=owner_id, config=RepoConfig(checkpoint_interval=interval, roster=roster))
    elif kind == EventKind.ROLE_SET:
        caller_id = r.take(32)
        mid = r.take(32)
        role = r.role()
        keys = r.keys(mid) if r.take(1) == b"\x01" else None
        payload = RoleSet(caller_id=caller_id, member_id=mid, role=role, keys=keys)
    else:
        try:
            payload = Committed(record=decode_record(data[r.pos:]))
        except MalformedRecord as e:
            raise LedgerCorruption(f"Committed event holds a bad record: {e}")
        r.pos = len(data)
    if r.pos != len(data):
        raise LedgerCorruption("Trailing bytes in ledger event")
    return LedgerEvent(repo_id=repo_id, event_seq=event_seq, kind=kind, timestamp=timestamp, payload=payload)


# State machine

class RepoState:
    """Current state of one repository, a fold over its events"""

    def __init__(self, repo_id: bytes):
        self.repo_id = repo_id
        self.checkpoint_interval = 0
        self.roster: Dict[bytes, RosterEntry] = {}
        self.events: List[LedgerEvent] = []
        self.commits: List[CommitRecord] = []
        self.by_cid: Dict[Cid, int] = {}
        self.last_genesis_seq: Optional[int] = None
        self.rekey_pending = False
        # Records as served to readers; None marks a frame that failed to parse
        self.records: List[Optional[CommitRecord]] = []
        self.record_errors: Dict[int, str] = {}

    @property
    def head(self) -> Optional[CommitRecord]:
        return self.commits[-1] if self.commits else None

    def next_seq(self) -> int:
        return len(self.commits)

    def checkpoint_required(self) -> bool:
        if self.head is None:
            return False
        if self.rekey_pending:
            return True
        return self.next_seq() - self.last_genesis_seq > self.checkpoint_interval

    def canonical_bytes(self) -> bytes:
        roster = RepoConfig(checkpoint_interval=self.checkpoint_interval, roster=self.roster)
        parts = [self.repo_id, encode_config(roster), bytes([self.rekey_pending])]
        parts += [FRAME.pack(len(b)) + b for b in map(encode_record, self.commits)]
        parts += [FRAME.pack(len(b)) + b for b in map(encode_event, self.events)]
        return b"".join(parts)


def apply_event(state: RepoState, event: LedgerEvent) -> None:
    """Fold one event into state; callers validate before appending"""
    if event.event_seq != len(state.events):
        raise LedgerCorruption(f"Event seq {event.event_seq} out of order (expected {len(state.events)})")
    payload = event.payload
    if isinstance(payload, RepoCreated):
        if state.events:
            raise LedgerCorruption("REPO_CREATED after the first event")
        state.checkpoint_interval = payload.config.checkpoint_interval
        state.roster = dict(payload.config.roster)
    elif isinstance(payload, RoleSet):
        if payload.role is None:
            state.roster.pop(payload.member_id, None)
            state.rekey_pending = True
        else:
            current = state.roster.get(payload.member_id)
            keys = payload.keys or (current.keys if current else None)
            if keys is None:
                raise LedgerCorruption("Role set for unknown member without keys")
            if payload.role == Role.OWNER and payload.member_id != payload.caller_id:
                previous = state.roster[payload.caller_id]
                state.roster[payload.caller_id] = RosterEntry(role=Role.CONTRIBUTOR, keys=previous.keys)
            state.roster[payload.member_id] = RosterEntry(role=payload.role, keys=keys)
    else:
        record = payload.record
        if record.seq != state.next_seq():
            raise LedgerCorruption(f"Commit seq {record.seq} out of order")
        state.commits.append(record)
        state.records.append(record)
        state.by_cid.setdefault(record.cid, record.seq)
        if record.kind.starts_segment:
            state.last_genesis_seq = record.seq
            state.rekey_pending = False
    state.events.append(event)


class LedgerState:
    """All repositories of one ledger"""

    def __init__(self):
        self.repos: Dict[bytes, RepoState] = {}

    def apply(self, event: LedgerEvent) -> None:
        state = self.repos.get(event.repo_id)
        if state is None:
            if not isinstance(event.payload, RepoCreated):
                raise LedgerCorruption("First event of a repository must be REPO_CREATED")
            state = self.repos[event.repo_id] = RepoState(event.repo_id)
        apply_event(state, event)

    def canonical_bytes(self, repo_id: Optional[bytes] = None) -> bytes:
        ids = [repo_id] if repo_id is not None else sorted(self.repos)
        return b"".join(self.repos[rid].canonical_bytes() for rid in ids)


def replay(events: List[LedgerEvent]) -> LedgerState:
    """Fold events through a fresh state machine"""
    state = LedgerState()
    for event in events:
        state.apply(event)
    return state


# Persistence

@contextmanager
def _flock(path: Path):
    """Exclusive advisory lock on path, held across processes"""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(path, "ab")
    except OSError as e:
        raise IoFailure(f"Failed to open lock {path}: {e}")
    with fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)


class _FrameLog:
    """Append-only file of length-prefixed frames"""

    def __init__(self, path: Path):
        self.path = path

    def append(self, frame: bytes) -> None:
        """Append one frame; a failed write is cut back off the file"""
        try:
            size = self.path.stat().st_size if self.path.exists() else 0
        except OSError as e:
            raise IoFailure(f"Failed to stat {self.path.name}: {e}")
        try:
            with open(self.path, "ab") as fh:
                try:
                    fh.write(FRAME.pack(len(frame)) + frame)
                    fh.flush()
                    os.fsync(fh.fileno())
                except OSError:
                    fh.truncate(size)
                    raise
        except OSError as e:
            raise IoFailure(f"Failed to append to {self.path.name}: {e}")

    def read(self) -> List[bytes]:
        if not self.path.exists():
            return []
        data = self.path.read_bytes()
        frames = []
        pos = 0
        while pos < len(data):
            if pos + FRAME.size > len(data):
                raise LedgerCorruption(f"Truncated frame header in {self.path}")
            (n,) = FRAME.unpack_from(data, pos)
            pos += FRAME.size
            if pos + n > len(data):
                raise LedgerCorruption(f"Truncated frame in {self.path}")
            frames.append(data[pos:pos + n])
            pos += n
        return frames


class Ledger:
    """Serialized-writer ledger; readers see committed state only.

    ``path=None`` keeps everything in memory. With a path, every write holds
    an exclusive lock on the repository directory and first folds in events
    appended by other Ledger instances, so compare-and-set on the head holds
    across processes.
    """

    EVENTS_FILE = "events.log"
    RECORDS_FILE = "records.log"
    LOCK_FILE = "lock"

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path is not None else None
        self._state = LedgerState()
        self._lock = threading.RLock()
        if self.path is not None:
            self.path.mkdir(parents=True, exist_ok=True)
            for entry in sorted(self.path.iterdir()):
                if entry.is_dir() and len(entry.name) == 64:
                    self.sync(bytes.fromhex(entry.name))
            logger.debug(f"Opened ledger at {self.path} with {len(self._state.repos)} repositories")

    # Loading

    def _logs(self, repo_id: bytes):
        base = self.path / repo_id.hex()
        return _FrameLog(base / self.EVENTS_FILE), _FrameLog(base / self.RECORDS_FILE)

    @contextmanager
    def _exclusive(self, repo_id: bytes):
        """Serialize writers of repo_id, in this process and across processes"""
        with self._lock:
            if self.path is None:
                yield
                return
            with _flock(self.path / repo_id.hex() / self.LOCK_FILE):
                self._catch_up(repo_id)
                yield

    def sync(self, repo_id: bytes) -> None:
        """Fold in whatever other writers appended to repo_id since the last look"""
        with self._exclusive(repo_id):
            pass

    def _catch_up(self, repo_id: bytes) -> None:
        """Apply unseen events and reload the served records; caller holds the lock"""
        name = repo_id.hex()[:12]
        events_log, records_log = self._logs(repo_id)
        frames = events_log.read()
        state = self._state.repos.get(repo_id)
        known = len(state.events) if state else 0
        if len(frames) < known:
            raise LedgerCorruption(f"{name}: event log is shorter than the loaded state")
        for frame in frames[known:]:
            event = decode_event(frame)
            if event.repo_id != repo_id:
                raise LedgerCorruption(f"Event for another repository in {name}")
            self._state.apply(event)
        state = self._state.repos.get(repo_id)
        if state is None:
            return

        frames = records_log.read()
        if len(frames) > len(state.commits):
            raise LedgerCorruption(f"{name}: more records than committed events")
        records: List[Optional[CommitRecord]] = []
        state.record_errors = {}
        for seq, frame in enumerate(frames):
            try:
                records.append(decode_record(frame))
            except MalformedRecord as e:
                records.append(None)
                state.record_errors[seq] = str(e)
        for record in state.commits[len(frames):]:
            # the event was appended but the record write did not finish
            logger.warning(f"Restoring record {record.seq} of {name} from the event log")
            records_log.append(encode_record(record))
            records.append(record)
        state.records = records

    def _append(self, event: LedgerEvent) -> None:
        """Persist then apply; caller holds the lock.

        The event log is the source of truth: once its frame is durable the
        event is applied, and a records.log failure is left for the next
        catch-up to restore.
        """
        if self.path is not None:
            events_log, records_log = self._logs(event.repo_id)
            events_log.append(encode_event(event))
        self._state.apply(event)
        if self.path is not None and isinstance(event.payload, Committed):
            try:
                records_log.append(encode_record(event.payload.record))
            except IoFailure as e:
                logger.warning(f"Record {event.payload.record.seq} not written, restored on next sync: {e}")

    # Reads

    def _repo(self, repo_id: bytes) -> RepoState:
        state = self._state.repos.get(repo_id)
        if state is None:
            raise RepoNotFound(f"Repository {repo_id.hex()} not found")
        return state

    def repo_ids(self) -> List[bytes]:
        return sorted(self._state.repos)

    def config(self, repo_id: bytes) -> RepoConfig:
        state = self._repo(repo_id)
        return RepoConfig(checkpoint_interval=state.checkpoint_interval, roster=dict(state.roster))

    def roster(self, repo_id: bytes) -> Dict[bytes, RosterEntry]:
        return dict(self._repo(repo_id).roster)

    def role_of(self, repo_id: bytes, who: bytes) -> Optional[Role]:
        entry = self._repo(repo_id).roster.get(who)
        return entry.role if entry else None

    def checkpoint_required(self, repo_id: bytes) -> bool:
        return self._repo(repo_id).checkpoint_required()

    def _served(self, state: RepoState, seq: int) -> CommitRecord:
        if not 0 <= seq < len(state.records):
            raise CommitNotFound(f"No commit at seq {seq}", seq=seq)
        record = state.records[seq]
        if record is None:
            raise LedgerCorruption(f"Stored record is malformed: {state.record_errors.get(seq)}", seq=seq)
        return record

    def head_seq(self, repo_id: bytes) -> Optional[int]:
        state = self._repo(repo_id)
        return len(state.records) - 1 if state.records else None

    def get_head(self, repo_id: bytes) -> CommitRecord:
        state = self._repo(repo_id)
        if not state.records:
            raise CommitNotFound("Repository has no commits yet")
        return self._served(state, len(state.records) - 1)

    def get_commit(self, repo_id: bytes, seq: int) -> CommitRecord:
        return self._served(self._repo(repo_id), seq)

    def get_by_cid(self, repo_id: bytes, cid: Cid) -> CommitRecord:
        state = self._repo(repo_id)
        seq = state.by_cid.get(cid)
        if seq is None:
            raise CommitNotFound(f"No commit with cid {cid.hex}")
        return self._served(state, seq)

    def events(self, repo_id: bytes, from_event_seq: int = 0) -> List[LedgerEvent]:
        return list(self._repo(repo_id).events[max(from_event_seq, 0):])

    def referenced_cids(self, repo_id: bytes) -> Set[Cid]:
        refs = set()
        for record in self._repo(repo_id).commits:
            refs.add(record.cid)
            refs.add(record.dek_file_cid)
        return refs

    def snapshot(self, repo_id: Optional[bytes] = None) -> bytes:
        """Canonical serialization of the current state"""
        return self._state.canonical_bytes(repo_id)

    # Writes

    @staticmethod
    def _check_keys(mid: bytes, keys: MemberKeys) -> None:
        if keys.id != mid or member_id(keys.sign_pub) != mid:
            raise InvalidConfig(f"Keys do not belong to member {mid.hex()[:12]}")

    def create_repo(self, owner: MemberKeys, config: RepoConfig, timestamp: int) -> bytes:
        """Register a repository; the owner must be the roster's only OWNER"""
        if config.checkpoint_interval < 1:
            raise InvalidConfig(f"Checkpoint interval must be >= 1, got {config.checkpoint_interval}")
        entry = config.roster.get(owner.id)
        if entry is None or entry.role != Role.OWNER:
            raise InvalidConfig("Owner must be listed in the roster as OWNER")
        if config.owners() != [owner.id]:
            raise InvalidConfig("A repository has exactly one OWNER")
        for mid, member in config.roster.items():
            self._check_keys(mid, member.keys)

        repo_id = derive_repo_id(owner.id, timestamp, config)
        with self._exclusive(repo_id):
            if repo_id in self._state.repos:
                raise InvalidConfig(f"Repository {repo_id.hex()} already exists")
            self._append(LedgerEvent(
                repo_id=repo_id,
                event_seq=0,
                kind=EventKind.REPO_CREATED,
                timestamp=timestamp,
                payload=RepoCreated(owner_id=owner.id, config=config),
            ))
        logger.info(f"Created repository {repo_id.hex()[:12]} (N={config.checkpoint_interval}, {len(config.roster)} members)")
        return repo_id

    def commit_data(
        self,
        repo_id: bytes,
        caller_id: bytes,
        new_cid: Cid,
        parent_cid: Optional[Cid],
        dek_file_cid: Cid,
        kind: CommitKind,
        timestamp: int,
        signature: bytes,
    ) -> int:
        """Append a signed commit on top of the current head; returns its seq"""
        with self._exclusive(repo_id):
            state = self._repo(repo_id)
            member = state.roster.get(caller_id)
            if member is None or not member.role.can_commit:
                raise PermissionDenied(f"{caller_id.hex()[:12]} may not commit to this repository")

            seq = state.next_seq()
            head = state.head
            if head is None:
                if parent_cid is not None or kind != CommitKind.GENESIS:
                    raise MalformedRecord("The first commit must be a GENESIS without parent")
            else:
                if kind == CommitKind.GENESIS:
                    raise MalformedRecord("GENESIS is only valid as the first commit")
                if parent_cid != head.cid:
                    raise StaleParent(f"Parent is not the current head (seq {head.seq})")

            payload = canonical_payload(repo_id, seq, kind, new_cid, parent_cid, dek_file_cid, caller_id, timestamp)
            if not verify_sig(payload, signature, member.keys.sign_pub):
                raise BadSignature(f"Signature does not verify for commit {seq}")
            if kind == CommitKind.PATCH and state.checkpoint_required():
                raise CheckpointRequired(f"Commit {seq} must be a CHECKPOINT_GENESIS")

            record = CommitRecord(
                repo_id=repo_id,
                seq=seq,
                kind=kind,
                cid=new_cid,
                parent_cid=parent_cid,
                dek_file_cid=dek_file_cid,
                author_id=caller_id,
                timestamp=timestamp,
                signature=signature,
            )
            self._append(LedgerEvent(
                repo_id=repo_id,
                event_seq=len(state.events),
                kind=EventKind.COMMITTED,
                timestamp=timestamp,
                payload=Committed(record=record),
            ))
        logger.info(f"Committed {kind.name} seq {seq} to {repo_id.hex()[:12]} ({new_cid.hex[:12]})")
        return seq

    def set_role(
        self,
        repo_id: bytes,
        caller_id: bytes,
        member: bytes,
        role: Optional[Role],
        keys: Optional[MemberKeys] = None,
        timestamp: int = 0,
    ) -> None:
        """Grant, change or (role=None) remove a member; OWNER only"""
        with self._exclusive(repo_id):
            state = self._repo(repo_id)
            caller = state.roster.get(caller_id)
            if caller is None or caller.role != Role.OWNER:
                raise PermissionDenied("Only the OWNER may change roles")
            current = state.roster.get(member)

            if role is None:
                if current is None:
                    raise MemberNotFound(f"{member.hex()[:12]} is not a member")
                if current.role == Role.OWNER:
                    raise CannotOrphanRepo("The OWNER cannot be removed")
            else:
                if member == caller_id and role != Role.OWNER:
                    raise CannotOrphanRepo("The OWNER cannot demote itself; transfer ownership instead")
                if current is None and keys is None:
                    raise InvalidConfig("New members need public keys")
                if keys is not None:
                    self._check_keys(member, keys)

            self._append(LedgerEvent(
                repo_id=repo_id,
                event_seq=len(state.events),
                kind=EventKind.ROLE_SET,
                timestamp=timestamp,
                payload=RoleSet(caller_id=caller_id, member_id=member, role=role, keys=keys),
            ))
        logger.info(f"Role of {member.hex()[:12]} in {repo_id.hex()[:12]} set to {role.value if role else 'removed'}")

    # Audit

    def verify_chain(self, repo_id: bytes, blob_hash_lookup: BlobHashLookup) -> AuditReport:
        """Recheck every commit against the roster, chain and store at its time"""
        state = self._repo(repo_id)
        shadow = RepoState(repo_id)
        report = AuditReport(repo_id=repo_id.hex())

        for event in state.events:
            if not isinstance(event.payload, Committed):
                apply_event(shadow, event)
                continue

            expected = event.payload.record
            seq = expected.seq
            audit = CommitAudit(seq=seq)
            served = state.records[seq] if seq < len(state.records) else None
            if served is None:
                audit.flag("record_ok", f"malformed record: {state.record_errors.get(seq, 'missing')}")
                record = expected
            else:
                record = served
                if served.seq != seq or served.repo_id != repo_id:
                    audit.flag("record_ok", "record position mismatch")
                if served != expected:
                    audit.flag("record_ok", "record differs from event log")

            previous = state.records[seq - 1] if seq > 0 and seq - 1 < len(state.records) else None
            previous = previous or (shadow.commits[-1] if shadow.commits else None)
            if seq == 0:
                if record.parent_cid is not None or record.kind != CommitKind.GENESIS:
                    audit.flag("parent_ok", "genesis must have no parent")
            elif previous is None or record.parent_cid != previous.cid:
                audit.flag("parent_ok", "broken parent link")

            author = shadow.roster.get(record.author_id)
            if author is None or not verify_sig(record_payload(record), record.signature, author.keys.sign_pub):
                audit.flag("signature_ok", "bad signature")
            if author is None or not author.role.can_commit:
                audit.flag("authorized_ok", "author not authorized")

            payload_digest = blob_hash_lookup(record.cid)
            if payload_digest is None:
                audit.flag("payload_ok", "payload missing")
            elif payload_digest != record.cid.digest:
                audit.flag("payload_ok", "payload mismatch")
            dek_digest = blob_hash_lookup(record.dek_file_cid)
            if dek_digest is None:
                audit.flag("dek_file_ok", "dek file missing")
            elif dek_digest != record.dek_file_cid.digest:
                audit.flag("dek_file_ok", "dek file mismatch")

            if seq > 0 and record.kind == CommitKind.GENESIS:
                audit.flag("checkpoint_ok", "genesis after first commit")
            elif record.kind == CommitKind.PATCH and shadow.checkpoint_required():
                audit.flag("checkpoint_ok", "checkpoint rule violated")

            apply_event(shadow, event)
            report.commits.append(audit)

        failing = report.failing_seqs
        if failing:
            logger.warning(f"verify {repo_id.hex()[:12]}: failing seqs {failing}")
        else:
            logger.info(f"verify {repo_id.hex()[:12]}: {len(report.commits)} commits pass")
        return report
