"""Test vector sequences, the xorshift64* generator and the vector file format."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HdlSyntaxError, WidthMismatch, ZeroSeed

MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


class Prng:
    """xorshift64* generator.

    The state is a nonzero 64-bit integer; identical seeds give identical
    streams and the period is 2**64 - 1.
    """

    def __init__(self, seed: int):
        seed &= MASK64
        if seed == 0:
            raise ZeroSeed("xorshift64* needs a nonzero seed")
        self.state = seed

    def next(self) -> int:
        s = self.state
        s ^= s >> 12
        s ^= (s << 25) & MASK64
        s ^= s >> 27
        self.state = s
        return (s * _MULT) & MASK64

    def randbelow(self, k: int) -> int:
        """Unbiased integer in ``[0, k)`` by rejection."""
        if k <= 0:
            raise ValueError("k must be positive")
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            r = self.next()
            if r < limit:
                return r % k

    def bit_array(self, width: int, n: int) -> np.ndarray:
        """``n`` vectors as an (n, width) uint8 array; same stream as :meth:`bits`."""
        per = -(-width // 64)
        words = np.array([self.next() for _ in range(n * per)], dtype=np.uint64).reshape(n, per)
        shifts = np.arange(63, -1, -1, dtype=np.uint64)
        bits = ((words[:, :, None] >> shifts) & np.uint64(1)).astype(np.uint8)
        return bits.reshape(n, per * 64)[:, :width]

    def bits(self, width: int) -> tuple[int, ...]:
        """One vector of ``width`` bits, MSB-first from successive outputs."""
        out = []
        for _ in range(-(-width // 64)):
            word = self.next()
            take = min(64, width - len(out))
            out.extend((word >> (63 - i)) & 1 for i in range(take))
        return tuple(out)


def derive_seed(seed: int, stream: int) -> int:
    """Independent nonzero seed for a named sub-stream (splitmix64 finalizer)."""
    z = (seed + 0x9E3779B97F4A7C15 * (stream + 1)) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z or 1


@dataclass(frozen=True)
class VectorSequence:
    """Ordered test vectors over a circuit's primary inputs.

    ``resets`` lists the vector indices (other than 0) before which a
    sequential circuit returns to its reset state. Combinational
    circuits ignore it.
    """

    width: int
    vectors: tuple = ()
    provenance: str = "manual"
    resets: tuple = field(default=())

    def __post_init__(self):
        vecs = tuple(tuple(int(b) for b in v) for v in self.vectors)
        for i, v in enumerate(vecs):
            if len(v) != self.width:
                raise WidthMismatch(f"vector {i} has {len(v)} bits, expected {self.width}")
            if any(b not in (0, 1) for b in v):
                raise ValueError(f"vector {i} is not binary")
        resets = tuple(sorted(set(int(r) for r in self.resets)))
        if resets and (resets[0] <= 0 or resets[-1] >= len(vecs)):
            raise ValueError("reset points must lie strictly inside the sequence")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "resets", resets)

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]

    def segments(self) -> list[tuple[int, int]]:
        """(start, stop) ranges of the from-reset segments."""
        bounds = [0, *self.resets, len(self.vectors)]
        return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]

    def reset_mask(self) -> list[bool]:
        rs = set(self.resets)
        return [i in rs for i in range(len(self.vectors))]

    @classmethod
    def from_array(cls, arr: np.ndarray, provenance="array", resets=()) -> "VectorSequence":
        return cls(arr.shape[1], tuple(map(tuple, arr.tolist())), provenance, resets)

    def to_array(self) -> np.ndarray:
        return np.array(self.vectors, dtype=np.uint8).reshape(len(self.vectors), self.width)

    def take(self, n: int) -> "VectorSequence":
        return VectorSequence(self.width, self.vectors[:n], self.provenance,
                              tuple(r for r in self.resets if r < n))

    @classmethod
    def concat(cls, parts, provenance="concat", reset_between=False) -> "VectorSequence":
        parts = list(parts)
        if not parts:
            raise ValueError("nothing to concatenate")
        width = parts[0].width
        vectors, resets = [], []
        for p in parts:
            if p.width != width:
                raise WidthMismatch("sequences of different widths")
            base = len(vectors)
            if base and reset_between:
                resets.append(base)
            resets.extend(base + r for r in p.resets)
            vectors.extend(p.vectors)
        return cls(width, tuple(vectors), provenance, tuple(resets))


def random_vectors(width: int, n: int, seed: int) -> VectorSequence:
    """``n`` pseudo-random vectors of ``width`` bits from xorshift64*."""
    if width < 1:
        raise ValueError("width must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    arr = Prng(seed).bit_array(width, n)
    return VectorSequence.from_array(arr, f"random(seed={seed})")


def format_vectors(seq: VectorSequence) -> str:
    lines = [f"width={seq.width}"]
    resets = set(seq.resets)
    for i, v in enumerate(seq.vectors):
        if i in resets:
            lines.append("reset")
        lines.append("".join(map(str, v)))
    return "\n".join(lines) + "\n"


def parse_vectors(text: str, provenance="file") -> VectorSequence:
    """Parse the vector file format.

    First significant line ``width=<n>``, then one vector per line as
    0/1 characters MSB-first. ``#`` starts a comment and a line reading
    ``reset`` marks a return to the reset state before the next vector.
    """
    width = None
    vectors, resets = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if width is None:
            key, sep, val = line.partition("=")
            if key.strip() != "width" or not sep or not val.strip().isdigit():
                raise HdlSyntaxError("expected 'width=<n>' header", lineno)
            width = int(val)
            continue
        if line == "reset":
            if vectors and (not resets or resets[-1] != len(vectors)):
                resets.append(len(vectors))
            continue
        if set(line) - {"0", "1"}:
            raise HdlSyntaxError(f"not a binary vector: {line!r}", lineno)
        if len(line) != width:
            raise WidthMismatch(f"line {lineno}: vector has {len(line)} bits, expected {width}")
        vectors.append(tuple(int(c) for c in line))
    if width is None:
        raise HdlSyntaxError("missing 'width=<n>' header", 1)
    resets = [r for r in resets if r < len(vectors)]
    return VectorSequence(width, tuple(vectors), provenance, tuple(resets))


def read_vectors(path) -> VectorSequence:
    path = Path(path)
    return parse_vectors(path.read_text(encoding="utf-8"), provenance=f"file({path.name})")


def write_vectors(seq: VectorSequence, path) -> None:
    Path(path).write_text(format_vectors(seq), encoding="utf-8")
