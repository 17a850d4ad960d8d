"""Binary diff/apply engine.

Both sides are cut into content-defined chunks with a gear rolling hash.
Target chunks whose SHA-256 matches a base chunk become COPY ops, everything
else becomes INSERT. Unmatched gaps are then narrowed by growing the
neighbouring copies over bytes the base and target share at the gap edges.

Wire format, integers big-endian:
    "EDGP1" ‖ base_len (8) ‖ target_len (8) ‖ ops
    0x01 COPY   offset (8) ‖ length (8)
    0x02 INSERT length (8) ‖ bytes
"""
import hashlib
import struct
from typing import Dict, List, Optional, Tuple

from app.config import settings
from app.models.patch import CopyOp, InsertOp, PatchBlob, PatchStats
from app.utils.errors import BaseLengthMismatch, InputTooLarge, MalformedPatch
from app.utils.logging import get_logger

logger = get_logger(__name__)

PATCH_MAGIC = b"EDGP1"
HEADER = struct.Struct(">QQ")
U64 = struct.Struct(">Q")
COPY_ARGS = struct.Struct(">QQ")
TAG_COPY = 0x01
TAG_INSERT = 0x02
HEADER_LEN = len(PATCH_MAGIC) + HEADER.size

_M64 = (1 << 64) - 1
_WINDOW = 64

# Fixed pseudo-random gear table so chunking is identical across processes
GEAR = tuple(int.from_bytes(hashlib.sha256(b"edg-gear" + bytes([i])).digest()[:8], "big") for i in range(256))


def _chunk_mask(avg_size: int) -> int:
    bits = avg_size.bit_length() - 1
    # high bits of the gear hash depend on the whole window
    return ((1 << bits) - 1) << (64 - bits)


def cut_points(data: bytes, min_size: Optional[int] = None, avg_size: Optional[int] = None,
               max_size: Optional[int] = None) -> List[int]:
    """End offsets of the content-defined chunks of data"""
    min_size = min_size or settings.CHUNK_MIN
    avg_size = avg_size or settings.CHUNK_AVG
    max_size = max_size or settings.CHUNK_MAX
    mask = _chunk_mask(avg_size)
    gear = GEAR
    n = len(data)
    cuts = []
    start = 0
    while start < n:
        end = min(start + max_size, n)
        scan = start + min_size
        if scan >= end:
            cuts.append(end)
            start = end
            continue
        h = 0
        for b in data[max(start, scan - _WINDOW):scan]:
            h = ((h << 1) + gear[b]) & _M64
        cut = end
        pos = scan
        for b in data[scan:end]:
            h = ((h << 1) + gear[b]) & _M64
            pos += 1
            if not h & mask:
                cut = pos
                break
        cuts.append(cut)
        start = cut
    return cuts


class ChunkIndex:
    """Chunk layout of one byte string plus a digest → offsets lookup"""

    def __init__(self, size: int, chunks: List[Tuple[int, int, bytes]]):
        self.size = size
        self.chunks = chunks
        self.by_digest: Dict[bytes, List[int]] = {}
        self.digest_at: Dict[int, bytes] = {}
        for offset, _length, digest in chunks:
            self.by_digest.setdefault(digest, []).append(offset)
            self.digest_at[offset] = digest

    @classmethod
    def build(cls, data: bytes) -> "ChunkIndex":
        chunks = []
        start = 0
        for end in cut_points(data):
            chunks.append((start, end - start, hashlib.sha256(data[start:end]).digest()))
            start = end
        return cls(len(data), chunks)

    def __len__(self) -> int:
        return len(self.chunks)


def chunk_index(data: bytes) -> ChunkIndex:
    return ChunkIndex.build(data)


def _common_prefix(a: bytes, a_off: int, b: bytes, b_off: int, limit: int) -> int:
    limit = min(limit, len(a) - a_off, len(b) - b_off)
    if limit <= 0:
        return 0
    if a[a_off:a_off + limit] == b[b_off:b_off + limit]:
        return limit
    lo, hi = 0, limit - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if a[a_off:a_off + mid] == b[b_off:b_off + mid]:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _common_suffix(a: bytes, a_end: int, b: bytes, b_end: int, limit: int) -> int:
    limit = min(limit, a_end, b_end)
    if limit <= 0:
        return 0
    if a[a_end - limit:a_end] == b[b_end - limit:b_end]:
        return limit
    lo, hi = 0, limit - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if a[a_end - mid:a_end] == b[b_end - mid:b_end]:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _check_size(data: bytes, what: str) -> None:
    if len(data) > settings.PATCH_MAX_INPUT:
        raise InputTooLarge(f"{what} is {len(data)} bytes; limit is {settings.PATCH_MAX_INPUT}")


def _match_chunks(target: bytes, target_index: ChunkIndex, base_index: ChunkIndex) -> List[List[int]]:
    """[target offset, base offset, length] runs for target chunks found in base"""
    copies: List[List[int]] = []
    for t_off, t_len, digest in target_index.chunks:
        candidates = base_index.by_digest.get(digest)
        if not candidates:
            continue
        b_off = candidates[0]
        if copies:
            last = copies[-1]
            follow = last[1] + last[2]
            if last[0] + last[2] == t_off and base_index.digest_at.get(follow) == digest:
                b_off = follow
            if last[0] + last[2] == t_off and last[1] + last[2] == b_off:
                last[2] += t_len
                continue
        copies.append([t_off, b_off, t_len])
    return copies


def _narrow_gaps(base: bytes, target: bytes, copies: List[List[int]]) -> List[List[int]]:
    """Grow copies over the gaps between them where base and target agree"""
    out: List[List[int]] = []

    def push(t_off: int, b_off: int, length: int) -> None:
        if length <= 0:
            return
        if out and out[-1][0] + out[-1][2] == t_off and out[-1][1] + out[-1][2] == b_off:
            out[-1][2] += length
        else:
            out.append([t_off, b_off, length])

    t_pos = 0
    b_pos = 0
    for i in range(len(copies) + 1):
        last = i == len(copies)
        gap_end = len(target) if last else copies[i][0]
        next_b = len(base) if last else copies[i][1]
        if gap_end > t_pos:
            k = _common_prefix(target, t_pos, base, b_pos, gap_end - t_pos)
            push(t_pos, b_pos, k)
            t_pos += k
            b_pos += k
            k = _common_suffix(target, gap_end, base, next_b, gap_end - t_pos)
            if k:
                if last:
                    push(gap_end - k, next_b - k, k)
                else:
                    copies[i][0] -= k
                    copies[i][1] -= k
                    copies[i][2] += k
        if not last:
            t_off, b_off, length = copies[i]
            push(t_off, b_off, length)
            t_pos = t_off + length
            b_pos = b_off + length
    return out


def diff_indexed(base: bytes, target: bytes,
                 base_index: Optional[ChunkIndex] = None) -> Tuple[PatchBlob, ChunkIndex]:
    """Like diff, also returning the target's chunk index for the next diff"""
    _check_size(base, "Base")
    _check_size(target, "Target")
    base = bytes(base)
    target = bytes(target)
    target_index = ChunkIndex.build(target)

    if base == target:
        ops = [CopyOp(offset=0, length=len(base))] if base else []
        return PatchBlob(base_len=len(base), target_len=len(target), ops=ops), target_index
    if not base:
        ops = [InsertOp(data=target)] if target else []
        return PatchBlob(base_len=0, target_len=len(target), ops=ops), target_index

    if base_index is None or base_index.size != len(base):
        base_index = ChunkIndex.build(base)

    copies = _narrow_gaps(base, target, _match_chunks(target, target_index, base_index))

    ops = []
    pos = 0
    for t_off, b_off, length in copies:
        if t_off > pos:
            ops.append(InsertOp(data=target[pos:t_off]))
        ops.append(CopyOp(offset=b_off, length=length))
        pos = t_off + length
    if pos < len(target):
        ops.append(InsertOp(data=target[pos:]))

    patch = PatchBlob(base_len=len(base), target_len=len(target), ops=ops)
    logger.debug(f"diff: {len(base)} -> {len(target)} bytes in {len(ops)} ops")
    return patch, target_index


def diff(base: bytes, target: bytes, base_index: Optional[ChunkIndex] = None) -> PatchBlob:
    """Edit script with apply(base, diff(base, target)) == target"""
    return diff_indexed(base, target, base_index)[0]


def validate_patch(patch: PatchBlob) -> None:
    """Raise MalformedPatch unless every op is in bounds and lengths add up"""
    total = 0
    for op in patch.ops:
        if isinstance(op, CopyOp):
            if op.length == 0 or op.offset + op.length > patch.base_len:
                raise MalformedPatch(f"COPY({op.offset}, {op.length}) outside base of {patch.base_len} bytes")
        elif not op.data:
            raise MalformedPatch("Empty INSERT")
        total += op.output_length
    if total != patch.target_len:
        raise MalformedPatch(f"Ops produce {total} bytes, header says {patch.target_len}")


def apply(base: bytes, patch: PatchBlob) -> bytes:
    """Concatenate op outputs; never reads outside base"""
    if len(base) != patch.base_len:
        raise BaseLengthMismatch(f"Base is {len(base)} bytes, patch expects {patch.base_len}")
    validate_patch(patch)
    parts = []
    for op in patch.ops:
        if isinstance(op, CopyOp):
            parts.append(base[op.offset:op.offset + op.length])
        else:
            parts.append(op.data)
    out = b"".join(parts)
    if len(out) != patch.target_len:
        raise MalformedPatch("Output length differs from target_len")
    return out


def serialize_patch(patch: PatchBlob) -> bytes:
    parts = [PATCH_MAGIC, HEADER.pack(patch.base_len, patch.target_len)]
    for op in patch.ops:
        if isinstance(op, CopyOp):
            parts.append(bytes([TAG_COPY]) + COPY_ARGS.pack(op.offset, op.length))
        else:
            parts.append(bytes([TAG_INSERT]) + U64.pack(len(op.data)))
            parts.append(op.data)
    return b"".join(parts)


def parse_patch(data: bytes) -> PatchBlob:
    """Strictly parse and validate a serialized patch"""
    data = bytes(data)
    if len(data) < HEADER_LEN or not data.startswith(PATCH_MAGIC):
        raise MalformedPatch("Missing patch header")
    base_len, target_len = HEADER.unpack_from(data, len(PATCH_MAGIC))
    pos = HEADER_LEN
    ops = []
    produced = 0
    while pos < len(data):
        tag = data[pos]
        pos += 1
        if tag == TAG_COPY:
            if pos + COPY_ARGS.size > len(data):
                raise MalformedPatch("Truncated COPY")
            offset, length = COPY_ARGS.unpack_from(data, pos)
            pos += COPY_ARGS.size
            if length == 0 or offset + length > base_len:
                raise MalformedPatch(f"COPY({offset}, {length}) outside base of {base_len} bytes")
            ops.append(CopyOp(offset=offset, length=length))
        elif tag == TAG_INSERT:
            if pos + U64.size > len(data):
                raise MalformedPatch("Truncated INSERT length")
            (length,) = U64.unpack_from(data, pos)
            pos += U64.size
            if length == 0 or pos + length > len(data):
                raise MalformedPatch("Truncated or empty INSERT")
            ops.append(InsertOp(data=data[pos:pos + length]))
            pos += length
        else:
            raise MalformedPatch(f"Unknown op tag 0x{tag:02x}")
        produced += length
        if produced > target_len:
            raise MalformedPatch("Ops exceed target_len")
    if produced != target_len:
        raise MalformedPatch(f"Ops produce {produced} bytes, header says {target_len}")
    return PatchBlob(base_len=base_len, target_len=target_len, ops=ops)


def patch_stats(patch: PatchBlob) -> PatchStats:
    copies = [op for op in patch.ops if isinstance(op, CopyOp)]
    inserts = [op for op in patch.ops if isinstance(op, InsertOp)]
    return PatchStats(
        ops=len(patch.ops),
        copy_ops=len(copies),
        insert_ops=len(inserts),
        copied_bytes=sum(op.length for op in copies),
        inserted_bytes=sum(len(op.data) for op in inserts),
        encoded_size=HEADER_LEN + 17 * len(copies) + sum(9 + len(op.data) for op in inserts),
    )
