"""Counter-based random numbers (Philox4x32-10).

Every uniform is a pure function of ``(seed, stream_id, index, slot)``:

* ``seed``      -- 64-bit key shared by a whole experiment,
* ``stream_id`` -- 64-bit stream label (one per particle/mode pair),
* ``index``     -- 32-bit draw index within the stream (the time step),
* ``slot``      -- 32-bit sub-draw counter used by samplers that need
  more than one pair of uniforms per draw (rejection attempts, jumps).

The 128-bit Philox counter is exactly ``(stream_id, index, slot)`` so
distinct streams never share a counter and therefore never share draws.
Results do not depend on how a batch of draws is chunked or parallelised.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10

_TWO_M53 = 2.0**-53


def philox4x32(c0, c1, c2, c3, key0: int, key1: int):
    """Philox4x32 with 10 rounds on arrays of 32-bit counter words.

    Counter words are broadcast against each other; all are returned as
    ``uint64`` arrays holding 32-bit values.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        *(np.asarray(c, dtype=np.uint64) & _MASK32 for c in (c0, c1, c2, c3))
    )
    k0 = int(key0) & 0xFFFFFFFF
    k1 = int(key1) & 0xFFFFFFFF
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SHIFT32
        hi1 = p1 >> _SHIFT32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            p1 & _MASK32,
            hi0 ^ c3 ^ np.uint64(k1),
            p0 & _MASK32,
        )
    return c0, c1, c2, c3


def _split64(x):
    x = np.asarray(x, dtype=np.uint64)
    return x & _MASK32, x >> _SHIFT32


def uniform_pair(seed: int, stream_id, index, slot):
    """Two independent uniforms on the open interval (0, 1), 53-bit resolution.

    ``stream_id``, ``index`` and ``slot`` broadcast against each other.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    s_lo, s_hi = _split64(stream_id)
    w0, w1, w2, w3 = philox4x32(
        s_lo, s_hi, index, slot, seed & 0xFFFFFFFF, seed >> 32
    )
    a = ((w0 >> np.uint64(5)) << np.uint64(26)) | (w1 >> np.uint64(6))
    b = ((w2 >> np.uint64(5)) << np.uint64(26)) | (w3 >> np.uint64(6))
    return (a.astype(np.float64) + 0.5) * _TWO_M53, (b.astype(np.float64) + 0.5) * _TWO_M53


@dataclass(frozen=True)
class DrawSite:
    """A batch of draw locations: one ``(stream_id, index)`` per element.

    Samplers call :meth:`uniforms` with increasing ``slot`` numbers to get
    as many uniform pairs per element as they need.
    """

    seed: int
    stream_id: np.ndarray
    index: np.ndarray

    @classmethod
    def build(cls, seed: int, stream_id, index) -> "DrawSite":
        sid, idx = np.broadcast_arrays(
            np.asarray(stream_id, dtype=np.uint64), np.asarray(index, dtype=np.uint64)
        )
        return cls(int(seed), sid, idx)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.stream_id.shape

    def uniforms(self, slot, mask=None):
        """Uniform pair at ``slot`` for every element (or the masked subset)."""
        sid, idx = self.stream_id, self.index
        if mask is not None:
            sid, idx = sid[mask], idx[mask]
        return uniform_pair(self.seed, sid, idx, slot)

    def subset(self, mask) -> "DrawSite":
        return DrawSite(self.seed, self.stream_id[mask], self.index[mask])


class RngStream:
    """A single deterministic stream; each scalar draw consumes one index.

    Two streams with equal ``(seed, stream_id)`` replay identical draws;
    streams with different ``stream_id`` share no counter values.
    """

    def __init__(self, seed: int, stream_id: int = 0, position: int = 0):
        if not 0 <= int(stream_id) < 2**64:
            raise ValueError("stream_id must fit in 64 unsigned bits")
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id)
        self.position = int(position)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, position={self.position})"

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def take(self, n: int = 1) -> DrawSite:
        """Reserve the next ``n`` draw indices and return them as a site."""
        idx = np.arange(self.position, self.position + n, dtype=np.uint64)
        self.position += n
        return DrawSite.build(self.seed, self.stream_id, idx)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` uniforms on (0, 1) from ``ceil(n/2)`` fresh indices."""
        site = self.take((n + 1) // 2)
        a, b = site.uniforms(0)
        return np.column_stack([a, b]).ravel()[:n]


def stream_id(particle: int | np.ndarray, slot: int | np.ndarray, tag: int = 0):
    """Pack (tag, particle, slot) into a 64-bit stream label.

    Layout: 8-bit tag | 32-bit particle | 24-bit slot. ``slot`` 0 is
    reserved for the mode-order stream in the particle integrator, modes
    use ``slot = mode_index + 1``.
    """
    p = np.asarray(particle, dtype=np.uint64)
    s = np.asarray(slot, dtype=np.uint64)
    return (np.uint64(tag) << np.uint64(56)) | (p << np.uint64(24)) | s
