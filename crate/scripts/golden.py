"""Regenerates the golden-vector files under data/golden/.

Independent of the Rust code: Keccak-256 comes from pycryptodome, the bit
layout and SplitMix64 sampler are written out here from their definitions.

    pip install pycryptodome
    python3 scripts/golden.py
"""

import random
from pathlib import Path

from Crypto.Hash import keccak

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
KEY_BITS = 85
SLOTS = 42
LAYOUT_BYTES = 22


def keccak256(data: bytes) -> bytes:
    h = keccak.new(digest_bits=256)
    h.update(data)
    return h.digest()


def layout(key: int, slots: list) -> bytes:
    """slots: list of None (unanswered), 0 or 1."""
    bits = [(key >> i) & 1 for i in range(KEY_BITS)]
    for j in range(SLOTS):
        s = slots[j] if j < len(slots) else None
        bits.append(0 if s is None else 1)
        bits.append(1 if s == 1 else 0)
    bits += [0] * (LAYOUT_BYTES * 8 - len(bits))
    out = bytearray(LAYOUT_BYTES)
    for i, b in enumerate(bits):
        if b:
            out[i // 8] |= 1 << (i % 8)
    return bytes(out)


def slot_text(slots: list) -> str:
    return "".join("." if s is None else str(s) for s in slots)


def commitment_vectors(rng: random.Random) -> str:
    lines = [
        "# layout_hex digest_hex",
        "# preceding comment: key (hex) and slot answers, '.' = unanswered",
    ]
    cases = [(0, []), ((1 << KEY_BITS) - 1, [1] * SLOTS), (0, [0] * SLOTS), (1, [1, None, 0])]
    for _ in range(60):
        n = rng.randint(0, SLOTS)
        cases.append((rng.getrandbits(KEY_BITS), [rng.choice([None, 0, 1]) for _ in range(n)]))
    for key, slots in cases:
        lay = layout(key, slots)
        lines.append(f"# key={key:x} slots={slot_text(slots)}")
        lines.append(f"{lay.hex()} {keccak256(lay).hex()}")
    return "\n".join(lines) + "\n"


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def seed_value(timestamp: int, difficulty: int) -> int:
    digest = keccak256(timestamp.to_bytes(32, "big") + difficulty.to_bytes(32, "big"))
    return int.from_bytes(digest[24:], "big")


def sample(n: int, k: int, seed: int) -> list:
    state = seed
    pool = list(range(n))
    live = n
    out = []
    for _ in range(k):
        state = (state + GAMMA) & MASK64
        r = mix64(state) % live
        out.append(pool[r])
        pool[r], pool[live - 1] = pool[live - 1], pool[r]
        live -= 1
    return out


def selection_vectors(rng: random.Random) -> str:
    lines = ["# timestamp difficulty candidates k indices"]
    cases = [(0, 0, 1, 1), (1, 1, 5, 5), (1_600_000_000, 2_000_000, 10, 3)]
    for _ in range(60):
        n = rng.randint(1, 60)
        cases.append((rng.getrandbits(40), rng.getrandbits(48), n, rng.randint(1, n)))
    for ts, diff, n, k in cases:
        idx = sample(n, k, seed_value(ts, diff))
        lines.append(f"{ts} {diff} {n} {k} {','.join(map(str, idx))}")
    return "\n".join(lines) + "\n"


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "data" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20190613)
    (out / "commitment.txt").write_text(commitment_vectors(rng))
    (out / "peer_selection.txt").write_text(selection_vectors(rng))
    assert keccak256(b"").hex() == "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"


if __name__ == "__main__":
    main()
