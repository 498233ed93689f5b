"""Seeded random streams.

Two kinds of draws are needed by the simulator:

* sequential draws (initial placement, target headings), taken in program order
  from a single-owner stream;
* keyed draws for the per-agent social coefficient, which must be a pure
  function of ``(seed, step, agent id)`` so that the order in which agents are
  processed cannot change the result.

Both are built on numpy's Philox counter-based generator, which produces the
same bits on every platform. Headings are sampled by rejection in the unit
disc so that only IEEE-exact operations (``+ * /`` and ``sqrt``) touch the
random bits.
"""

from __future__ import annotations

import numpy as np

SEED_BITS = 64
_SEQUENTIAL = 0
_KEYED = 1
_HASHED = 2
KEYED_BATCH = 1024


def _key(seed: int, stream: int) -> np.ndarray:
    ss = np.random.SeedSequence([seed, stream])
    return ss.generate_state(2, dtype=np.uint64)


def derive_seed(*parts: int) -> int:
    """Hash a tuple of non-negative integers into a fresh 64-bit seed."""
    ss = np.random.SeedSequence(list(parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RngStream:
    """Single-owner random stream. Never share one instance between threads."""

    def __init__(self, seed: int):
        if not 0 <= seed < 2**SEED_BITS:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(key=_key(self.seed, _SEQUENTIAL)))
        self._keyed_key = _key(self.seed, _KEYED)
        self._keyed_cache = None

    def draw_unit(self) -> float:
        return float(self._gen.random())

    def draw_units(self, shape) -> np.ndarray:
        return self._gen.random(shape)

    def draw_int(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return int(self._gen.integers(lo, hi, endpoint=True))

    def draw_heading(self) -> np.ndarray:
        return _unit_vector(self._gen)

    def keyed_units(self, step: int, n: int) -> np.ndarray:
        """``n`` uniforms in [0, 1) where entry ``i`` depends only on (seed, step, i).

        Step ``s`` owns a fixed-width slice of one Philox stream, starting at
        block ``s * width / 4``; slices are generated ``KEYED_BATCH`` steps at a
        time and cached, which changes nothing about the values.
        """
        width = -(-n // 4) * 4
        cache = self._keyed_cache
        if cache is None or cache[0] != width or not cache[1] <= step < cache[1] + len(cache[2]):
            start = step - step % KEYED_BATCH
            counter = np.array([start * (width // 4), 0, 0, 0], dtype=np.uint64)
            gen = np.random.Generator(np.random.Philox(key=self._keyed_key, counter=counter))
            block = gen.random((KEYED_BATCH, width))
            cache = self._keyed_cache = (width, start, block)
        return cache[2][step - cache[1], :n].copy()

    def keyed_heading(self, *parts: int) -> np.ndarray:
        """Deterministic unit vector keyed by arbitrary integers (plus the seed)."""
        ss = np.random.SeedSequence([self.seed, _HASHED, *parts])
        return _unit_vector(np.random.Generator(np.random.Philox(ss)))


def _unit_vector(gen: np.random.Generator) -> np.ndarray:
    while True:
        x, y = 2.0 * gen.random(2) - 1.0
        r2 = x * x + y * y
        if 1e-12 < r2 <= 1.0:
            r = np.sqrt(r2)
            return np.array([x / r, y / r])
