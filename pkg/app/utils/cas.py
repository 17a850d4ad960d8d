"""Content-addressed blob store.

Objects live under ``objects/<hex[0:2]>/<hex>``; the pin set is one sorted,
LF-terminated hex Cid per line in ``pins``. Every file is written to a
temporary name and renamed into place.
"""
import errno
import hashlib
import os
import shutil
import threading
import uuid
from pathlib import Path
from typing import Iterable, Optional, Set

from app.models.cas import Cid, StoredBlob
from app.utils.errors import CidCollision, IntegrityViolation, IoFailure, NotFound, StorageFull, UsageError
from app.utils.logging import get_logger

logger = get_logger(__name__)

OBJECTS_DIR = "objects"
PINS_FILE = "pins"
TRASH_DIR = "trash"


def _io_error(exc: OSError, action: str) -> Exception:
    if exc.errno == errno.ENOSPC:
        return StorageFull(f"No space left while trying to {action}")
    return IoFailure(f"Failed to {action}: {exc.strerror or exc}")


def write_atomic(path: Path, data: bytes) -> None:
    """Write data to path through a temporary file and a rename"""
    tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


class BlobStore:
    """Immutable put/get by SHA-256 with direct pinning and pin-respecting gc.

    Reads take no lock; put, pin, unpin and gc are serialized by one store lock.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._objects = self.root / OBJECTS_DIR
        self._pins_path = self.root / PINS_FILE
        self._lock = threading.RLock()
        try:
            self._objects.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise _io_error(e, f"create store at {self.root}")
        self._pins = self._load_pins()
        logger.debug(f"Opened blob store at {self.root} ({len(self._pins)} pins)")

    # Paths and pin file

    def _path(self, cid: Cid) -> Path:
        h = cid.hex
        return self._objects / h[:2] / h

    def _load_pins(self) -> Set[Cid]:
        if not self._pins_path.exists():
            return set()
        try:
            lines = self._pins_path.read_text(encoding="ascii").splitlines()
        except OSError as e:
            raise _io_error(e, "read pin set")
        try:
            return {Cid.from_hex(line) for line in lines if line}
        except UsageError:
            raise IoFailure(f"Pin set at {self._pins_path} is malformed")

    def _save_pins(self, pins: Set[Cid]) -> None:
        body = "".join(f"{cid.hex}\n" for cid in sorted(pins))
        try:
            write_atomic(self._pins_path, body.encode("ascii"))
        except OSError as e:
            raise _io_error(e, "write pin set")

    # Blob operations

    def put(self, data: bytes) -> Cid:
        """Store data and return its Cid; storing identical bytes again is a no-op"""
        data = bytes(data)
        cid = Cid.of(data)
        path = self._path(cid)
        with self._lock:
            if path.exists():
                existing = self._read_raw(path, cid)
                if existing == data:
                    logger.debug(f"Blob {cid.hex[:12]} already stored")
                    return cid
                if hashlib.sha256(existing).digest() == cid.digest:
                    raise CidCollision(f"Distinct blobs share cid {cid.hex}")
                logger.warning(f"Rewriting corrupt copy of blob {cid.hex[:12]}")
            try:
                path.parent.mkdir(exist_ok=True)
                write_atomic(path, data)
            except OSError as e:
                raise _io_error(e, f"store blob {cid.hex[:12]}")
        logger.debug(f"Stored blob {cid.hex[:12]} ({len(data)} bytes)")
        return cid

    def _read_raw(self, path: Path, cid: Cid) -> bytes:
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"Blob {cid.hex} not found")
        except OSError as e:
            raise _io_error(e, f"read blob {cid.hex[:12]}")

    def get(self, cid: Cid) -> bytes:
        """Return the stored bytes after checking they still hash to cid"""
        data = self._read_raw(self._path(cid), cid)
        if hashlib.sha256(data).digest() != cid.digest:
            logger.warning(f"Integrity violation on blob {cid.hex[:12]}")
            raise IntegrityViolation(f"Blob {cid.hex} does not match its identifier")
        return data

    def contains(self, cid: Cid) -> bool:
        return self._path(cid).is_file()

    def digest_of(self, cid: Cid) -> Optional[bytes]:
        """SHA-256 of the persisted bytes for cid, or None when absent"""
        try:
            return hashlib.sha256(self._path(cid).read_bytes()).digest()
        except OSError:
            return None

    def stat(self, cid: Cid) -> StoredBlob:
        path = self._path(cid)
        data = self.get(cid)
        return StoredBlob(
            cid=cid,
            data=data,
            pinned=cid in self._pins,
            created_at=int(path.stat().st_mtime),
        )

    # Pinning

    def pin(self, cid: Cid) -> None:
        with self._lock:
            if not self.contains(cid):
                raise NotFound(f"Cannot pin missing blob {cid.hex}")
            if cid in self._pins:
                return
            pins = self._pins | {cid}
            self._save_pins(pins)
            self._pins = pins
        logger.debug(f"Pinned {cid.hex[:12]}")

    def unpin(self, cid: Cid) -> None:
        with self._lock:
            if not self.contains(cid):
                raise NotFound(f"Cannot unpin missing blob {cid.hex}")
            if cid not in self._pins:
                return
            pins = self._pins - {cid}
            self._save_pins(pins)
            self._pins = pins
        logger.debug(f"Unpinned {cid.hex[:12]}")

    def is_pinned(self, cid: Cid) -> bool:
        return cid in self._pins

    def pinned(self) -> Set[Cid]:
        return set(self._pins)

    # Inventory

    def list_cids(self) -> Set[Cid]:
        found = set()
        for shard in self._objects.iterdir():
            if not shard.is_dir():
                continue
            for entry in shard.iterdir():
                if entry.name.startswith("."):
                    continue
                try:
                    found.add(Cid.from_hex(entry.name))
                except UsageError:
                    logger.warning(f"Ignoring stray file {entry}")
        return found

    def __len__(self) -> int:
        return len(self.list_cids())

    def total_bytes(self) -> int:
        return sum(self._path(cid).stat().st_size for cid in self.list_cids())

    # Garbage collection

    def gc(self, roots: Iterable[Cid] = ()) -> Set[Cid]:
        """Remove every blob that is neither pinned nor a root.

        Victims are first moved aside; if any move fails all of them are put
        back, so a failed gc removes nothing.
        """
        keep = set(roots)
        with self._lock:
            victims = {cid for cid in self.list_cids() if cid not in self._pins and cid not in keep}
            if not victims:
                logger.info("gc: nothing to remove")
                return set()

            trash = self.root / TRASH_DIR / uuid.uuid4().hex
            moved = []
            try:
                trash.mkdir(parents=True)
                for cid in sorted(victims):
                    os.replace(self._path(cid), trash / cid.hex)
                    moved.append(cid)
            except OSError as e:
                for cid in moved:
                    try:
                        os.replace(trash / cid.hex, self._path(cid))
                    except OSError:
                        logger.error(f"gc rollback failed for {cid.hex}")
                raise _io_error(e, "collect garbage")

            shutil.rmtree(trash, ignore_errors=True)
        logger.info(f"gc: removed {len(victims)} blobs, kept {len(self._pins | keep)} protected")
        return victims
