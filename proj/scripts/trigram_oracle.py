"""Exact cosines of the hashed code-point trigram embedding, from integer counts."""
import math
import sys

DIM = 256


def fnv1a_32(data: bytes) -> int:
    h = 0x811C9DC5
    for b in data:
        h ^= b
        h = (h * 0x01000193) & 0xFFFFFFFF
    return h


def counts(text: str):
    c = [0] * DIM
    if 0 < len(text) < 3:
        c[fnv1a_32(text.encode()) % DIM] += 1
    for i in range(len(text) - 2):
        c[fnv1a_32(text[i:i + 3].encode()) % DIM] += 1
    return c


def cosine(a: str, b: str) -> float:
    x, y = counts(a), counts(b)
    dot = sum(p * q for p, q in zip(x, y))
    nx = math.sqrt(sum(p * p for p in x))
    ny = math.sqrt(sum(q * q for q in y))
    return dot / (nx * ny) if nx and ny else 0.0


PAIRS = [
    ("create index on users", "create index on user"),
    ("create index on users", "vacuum full analyze"),
    ("create index on user", "vacuum full analyze"),
    ("数据库索引优化", "数据库索引"),
    ("ab", "ab"),
]

if __name__ == "__main__":
    for a, b in PAIRS:
        print(f"{a!r} {b!r} {cosine(a, b)!r}")
    sys.exit(0)
