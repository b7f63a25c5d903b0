"""Deterministic, keyed random streams.

Every stochastic component in the package draws from a stream keyed by a
tuple of identifying fields (master seed, purpose tag, indices...). Keys
are hashed with SHA-256 and fed to counter-based generators, so distinct
key tuples give independent, reproducible streams regardless of the
order in which they are consumed.

Two flavours are provided:

* `stream(*fields)` - a numpy Generator backed by Philox, for bulk
  sequential draws (permutations, Monte Carlo batches).
* `edge_uniforms(fields, ids)` - stateless uniforms addressed by integer
  id. The uniform attached to a given id is a pure function of
  (fields, id), which is what the staged process needs: membership of a
  fixed pair in a bite must not depend on how many other pairs exist.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_MASTER_SEED = 0xC0FFEE

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)


def _digest(fields) -> bytes:
    h = hashlib.sha256()
    for f in fields:
        h.update(repr(f).encode())
        h.update(b"\x1f")
    return h.digest()


def stream_key(*fields) -> tuple[int, int]:
    """128-bit key (two 64-bit words) derived from the given fields."""
    d = _digest(fields)
    return (int.from_bytes(d[0:8], "little"), int.from_bytes(d[8:16], "little"))


def stream(*fields) -> np.random.Generator:
    """Independent numpy Generator for the given key fields."""
    key = np.array(stream_key(*fields), dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; wraps mod 2**64
    x = (x ^ (x >> _U64(30))) * _MIX1
    x = (x ^ (x >> _U64(27))) * _MIX2
    return x ^ (x >> _U64(31))


def edge_uniforms(fields, ids: np.ndarray) -> np.ndarray:
    """Uniforms in (0, 1) addressed by integer id.

    `fields` selects the stream (same convention as `stream`); `ids` is
    an integer array. Output u[k] depends only on (fields, ids[k]), so
    evaluating on a subset of ids gives the same values as evaluating on
    the full id space and slicing. The half-ulp offset keeps values away
    from the endpoints (birth times must be strictly inside (0, 1)).
    """
    k1, k2 = stream_key(*fields)
    x = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x + _GOLDEN) * _GOLDEN
        x = _mix(x ^ _U64(k1))
        x = _mix(x + _U64(k2))
    return ((x >> _U64(11)).astype(np.float64) + 0.5) * (1.0 / (1 << 53))
