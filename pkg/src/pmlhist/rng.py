"""Counter-based, path-addressed random streams.

A stream is identified by a 64-bit seed and a path of labels. Its key is
obtained by folding every label into a SplitMix64-style hash, and draw ``i``
of the stream is ``mix64(key + (i + 1) * GOLDEN)``. Nothing is stateful, so
any (seed, path, index) triple can be evaluated independently, in any order,
from any thread, and the compiled kernels reproduce the same bits.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
DERIVE_MULT = 0xD1B54A32D192ED03
DERIVE_SALT = 0x2545F4914F6CDD1D
ROOT_SALT = 0x6A09E667F3BCC909

# fixed child labels used by the mechanism and experiments
DATA = 0
NOISE = 1

Label = Union[int, str]


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (bijective on 64 bits)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def label_to_int(label: Label) -> int:
    if isinstance(label, (bool, np.bool_)):
        raise TypeError("stream labels must be int or str, not bool")
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"stream label must be non-negative, got {label}")
        return int(label) & MASK64
    if isinstance(label, str):
        digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"unsupported stream label {label!r}")


def root_key(seed: int) -> int:
    return mix64((seed & MASK64) ^ ROOT_SALT)


def derive(key: int, label: int) -> int:
    """Child key of ``key`` under integer ``label``."""
    return mix64((mix64(key ^ DERIVE_SALT) + (label + 1) * DERIVE_MULT) & MASK64)


def draw_u64(key: int, index: int) -> int:
    return mix64((key + (index + 1) * GOLDEN) & MASK64)


def u64_to_open_unit(z):
    """Map 64-bit words to doubles strictly inside (0, 1).

    52 bits plus a half step: with 53 bits the top value would round to 1.0.
    """
    if isinstance(z, np.ndarray):
        return ((z >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52
    return ((z >> 12) + 0.5) * 2.0**-52


def uniforms_for_key(key: int, count: int, start: int = 0) -> np.ndarray:
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + idx * np.uint64(GOLDEN)
        return u64_to_open_unit(mix64_array(z))


@dataclass(frozen=True)
class RandomStream:
    """Reproducible stream addressed by ``(seed, path)``."""

    seed: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "path", tuple(self.path))
        for label in self.path:
            label_to_int(label)

    @property
    def key(self) -> int:
        k = root_key(self.seed)
        for label in self.path:
            k = derive(k, label_to_int(label))
        return k

    def child(self, *labels: Label) -> "RandomStream":
        return RandomStream(self.seed, self.path + labels)

    def uniform(self, index: int = 0) -> float:
        """Draw ``index`` of this stream, uniform on the open interval (0, 1)."""
        return u64_to_open_unit(draw_u64(self.key, index))

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        return uniforms_for_key(self.key, count, start)
