import random

from app.utils.cryptbox import keygen

# Fixed creation time so repo ids are reproducible
BASE_TIME = 1_700_000_000


def seeded(n: int):
    """Deterministic identity number n"""
    return keygen(bytes([n]) * 32)


def random_bytes(size: int, seed: int = 0) -> bytes:
    return random.Random(seed).randbytes(size)


def edit(data: bytes, rng: random.Random, max_span: int = 1024) -> bytes:
    """Apply one random replace, insert or delete to data"""
    pos = rng.randrange(len(data) + 1)
    span = rng.randint(1, max_span)
    choice = rng.random()
    if choice < 0.4 or not data:
        return data[:pos] + rng.randbytes(span) + data[pos:]
    if choice < 0.7:
        return data[:pos] + data[pos + span:]
    return data[:pos] + rng.randbytes(span) + data[pos + span:]
