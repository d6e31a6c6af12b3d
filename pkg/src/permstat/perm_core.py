"""Uniform permutations, enumeration, sampling without replacement.

Public permutations are 1-based: ``Permutation.map[i - 1]`` is the image of
``i``. Batched routines used by the Monte Carlo harnesses work on 0-based
``int64`` arrays of shape ``(count, n)`` for speed; ``perm[b, i] == k``
means draw ``b`` sends ``i + 1`` to ``k + 1``.

Randomness comes from PCG32 (XSH-RR, 64-bit state). An :class:`RngState`
``(seed, stream)`` is a plain value. Draw ``b`` of a batch keyed on
``(seed, stream)`` runs its own PCG32 generator on stream
``splitmix64(stream * 0x9E3779B97F4A7C15 + b)``, so a batch can be cut into
chunks and computed by any number of workers with identical output.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from . import _backend
from ._fallback import GOLDEN, PCG_MULT, draw_stream, splitmix64
from .errors import CapExceededError, DataError, InvalidSizeError

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1

ENUMERATION_CAP = 10
CHUNK = 4096

__all__ = [
    "ENUMERATION_CAP",
    "Pcg32",
    "Permutation",
    "RngState",
    "SampleMask",
    "enumerate_array",
    "enumerate_permutations",
    "map_chunks",
    "permutation_batch",
    "random_permutation",
    "resolve_threads",
    "sample_without_replacement",
    "transposition_couple",
]


class Pcg32:
    """PCG32 generator (64-bit LCG state, XSH-RR 32-bit output)."""

    __slots__ = ("state", "inc")

    def __init__(self, seed: int, stream: int = 0):
        self.inc = ((stream << 1) | 1) & _MASK64
        self.state = 0
        self._step()
        self.state = (self.state + seed) & _MASK64
        self._step()

    def _step(self):
        self.state = (self.state * PCG_MULT + self.inc) & _MASK64

    def next_u32(self) -> int:
        old = self.state
        self._step()
        xs = (((old >> 18) ^ old) >> 27) & _MASK32
        rot = old >> 59
        return ((xs >> rot) | (xs << ((32 - rot) & 31))) & _MASK32

    def bounded(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)``.

        Raw outputs below ``2**32 mod bound`` are rejected so the accepted
        range is an exact multiple of ``bound``; no modulo bias.
        """
        if not 1 <= bound <= _MASK32 + 1:
            raise InvalidSizeError(f"bound must be in [1, 2**32], got {bound}")
        threshold = ((1 << 32) - bound) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def random(self) -> float:
        """Uniform double in ``[0, 1)`` with 53 random bits."""
        hi = self.next_u32() >> 5
        lo = self.next_u32() >> 6
        return (hi * 67108864.0 + lo) / 9007199254740992.0


@dataclass(frozen=True)
class RngState:
    """Seed and stream identifying a reproducible random sequence."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _MASK64:
                raise InvalidSizeError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    def generator(self) -> Pcg32:
        return Pcg32(int(self.seed), int(self.stream))

    def spawn(self, key: int) -> "RngState":
        """Independent child stream, e.g. one per experiment in a suite."""
        return RngState(int(self.seed), splitmix64((int(self.stream) * GOLDEN + key + 1) & _MASK64))


def _as_generator(rng) -> Pcg32:
    if isinstance(rng, Pcg32):
        return rng
    if isinstance(rng, RngState):
        return rng.generator()
    raise TypeError(f"expected RngState or Pcg32, got {type(rng).__name__}")


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{1, ..., n}`` stored as the tuple of images."""

    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(v) for v in self.map)
        if len(m) == 0:
            raise InvalidSizeError("a permutation needs n >= 1")
        if sorted(m) != list(range(1, len(m) + 1)):
            raise DataError(f"not a bijection on 1..{len(m)}: {m}")
        object.__setattr__(self, "map", m)

    @property
    def n(self) -> int:
        return len(self.map)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_zero_based(cls, arr: Sequence[int]) -> "Permutation":
        return cls(tuple(int(v) + 1 for v in arr))

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.map, dtype=np.int64) - 1

    def __call__(self, i: int) -> int:
        return self.map[i - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self.map, start=1):
            inv[v - 1] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: ``i -> self(other(i))``."""
        if other.n != self.n:
            raise DataError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.map[j - 1] for j in other.map))

    def __len__(self):
        return self.n


def _fisher_yates(n: int, gen: Pcg32) -> list[int]:
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = gen.bounded(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def random_permutation(n: int, rng) -> Permutation:
    """Uniform draw from the symmetric group on ``{1..n}``.

    ``rng`` is an :class:`RngState` (fresh generator, fully determined by the
    value) or a :class:`Pcg32` (advanced in place for sequential draws).
    """
    if n < 1:
        raise InvalidSizeError(f"n must be >= 1, got {n}")
    return Permutation.from_zero_based(_fisher_yates(n, _as_generator(rng)))


def _check_cap(n: int, cap: int | None):
    cap = ENUMERATION_CAP if cap is None else cap
    if n < 1:
        raise InvalidSizeError(f"n must be >= 1, got {n}")
    if n > cap:
        raise CapExceededError(
            f"enumerating {n}! = {math.factorial(n)} permutations exceeds the cap n <= {cap}"
        )


def enumerate_permutations(n: int, cap: int | None = None) -> Iterator[Permutation]:
    """All ``n!`` permutations in lexicographic order of their maps."""
    _check_cap(n, cap)
    for p in itertools.permutations(range(1, n + 1)):
        yield Permutation(p)


def enumerate_array(n: int, cap: int | None = None) -> np.ndarray:
    """The ``n!`` permutations as a 0-based ``(n!, n)`` array, lexicographic."""
    _check_cap(n, cap)
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


@dataclass(frozen=True)
class SampleMask:
    """Indicator ``1(pi(i) <= n)`` of a simple random sample of n out of N."""

    n_total: int
    n_sample: int
    indicator: tuple[bool, ...]

    def __post_init__(self):
        if len(self.indicator) != self.n_total:
            raise DataError("indicator length must equal n_total")
        if sum(self.indicator) != self.n_sample:
            raise DataError("indicator must have exactly n_sample true entries")

    @classmethod
    def from_permutation(cls, pi: Permutation, n: int) -> "SampleMask":
        if not 1 <= n <= pi.n:
            raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={pi.n}")
        return cls(pi.n, n, tuple(v <= n for v in pi.map))

    def as_array(self) -> np.ndarray:
        return np.array(self.indicator, dtype=bool)

    def selected(self) -> list[int]:
        """1-based indices of the sampled units."""
        return [i for i, b in enumerate(self.indicator, start=1) if b]


def sample_without_replacement(N: int, n: int, rng) -> SampleMask:
    if not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    return SampleMask.from_permutation(random_permutation(N, rng), n)


def transposition_couple(pi: Permutation, rng=None, swap: tuple[int, int] | None = None):
    """Exchangeable partner ``pi ∘ (I, J)`` with I, J iid uniform on ``[N]``.

    Returns ``(pi_prime, (I, J))`` with 1-based indices. ``swap`` forces the
    pair instead of drawing it. ``I == J`` is allowed and leaves ``pi`` fixed.
    """
    N = pi.n
    if swap is None:
        gen = _as_generator(rng)
        I = gen.bounded(N) + 1
        J = gen.bounded(N) + 1
    else:
        I, J = swap
        if not (1 <= I <= N and 1 <= J <= N):
            raise InvalidSizeError(f"swap indices must lie in 1..{N}")
    m = list(pi.map)
    m[I - 1], m[J - 1] = m[J - 1], m[I - 1]
    return Permutation(tuple(m)), (I, J)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("PERMSTAT_THREADS", "1") or 1)
    if threads < 1:
        raise InvalidSizeError(f"threads must be >= 1, got {threads}")
    return threads


def _chunk_bounds(count: int) -> list[tuple[int, int]]:
    return [(s, min(CHUNK, count - s)) for s in range(0, count, CHUNK)]


def map_chunks(
    fn: Callable[[np.ndarray], np.ndarray],
    n: int,
    count: int,
    rng: RngState,
    threads: int | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Apply ``fn`` to batches of uniform permutations and concatenate.

    Chunk boundaries are fixed (``CHUNK`` draws), so the result does not
    depend on ``threads``.
    """
    if n < 1 or count < 0:
        raise InvalidSizeError(f"invalid batch n={n}, count={count}")
    kern = _backend.get(backend)
    seed, stream = int(rng.seed), int(rng.stream)

    def work(bounds):
        start, size = bounds
        return fn(kern.permutation_batch(n, seed, stream, start, size))

    chunks = _chunk_bounds(count)
    threads = resolve_threads(threads)
    if threads == 1 or len(chunks) <= 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    if not parts:
        return fn(np.empty((0, n), dtype=np.int64))
    return np.concatenate(parts, axis=0)


def permutation_batch(
    n: int,
    count: int,
    rng: RngState,
    start: int = 0,
    threads: int | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """``count`` uniform permutations as a 0-based ``(count, n)`` array."""
    if start:
        kern = _backend.get(backend)
        return kern.permutation_batch(n, int(rng.seed), int(rng.stream), start, count)
    return map_chunks(lambda p: p, n, count, rng, threads=threads, backend=backend)


def batch_row_stream(rng: RngState, index: int) -> int:
    """Stream id of draw ``index`` in a batch keyed on ``rng``."""
    return draw_stream(int(rng.stream), index)
