"""Deterministic random streams on a counter-based bit generator.

All randomness in the package flows through here.  Streams are built on
Philox4x64 (counter based), keyed through ``SeedSequence`` by a user seed
plus a tuple of small integers naming the consumer, e.g. ``(seed,
subset_id)`` for the resampling engine.  Normal deviates are produced by
inverse-CDF transform of 53-bit uniforms so that every deviate consumes
exactly one counter word.  That fixed consumption is what makes
*windowed* substreams possible: the b-th resample of a test owns the
counter window ``[b * n, (b + 1) * n)`` of its stream, so drawing all B
resamples in one batched call and drawing resample b alone (by advancing
the counter) produce bit-identical values.  Results therefore do not
depend on scheduling or batching.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1

# Generator.random() returns multiples of 2**-53 in [0, 1).  An exact 0.0
# would map to -inf under ndtri; remapping it to 2**-54 (below the smallest
# positive value the generator can emit) keeps the transform finite without
# touching any other draw.
_UNIFORM_FLOOR = 2.0**-54


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator for ``(seed, *key)``.

    The same arguments always yield an identical stream, independent of
    platform and of any other stream in the program.
    """
    entropy = [int(seed) & _MASK64] + [int(k) & _MASK64 for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def child_seed(seed: int, *key: int) -> int:
    """Derive a 64-bit integer seed for a nested component.

    Used by experiment harnesses to hand independent seeds to data
    generators and test configurations, one per replication.
    """
    entropy = [int(seed) & _MASK64] + [int(k) & _MASK64 for k in key]
    state = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
    return int(state[0])


def _normals_from_uniforms(u: np.ndarray) -> np.ndarray:
    return ndtri(np.maximum(u, _UNIFORM_FLOOR))


def normal_matrix(seed: int, key: tuple[int, ...], rows: int, cols: int) -> np.ndarray:
    """Draw a ``(rows, cols)`` standard-normal matrix with windowed columns.

    Column ``b`` occupies counter window ``[b * rows, (b + 1) * rows)`` of
    the stream keyed by ``(seed, *key)``; see :func:`normal_window`.
    """
    gen = stream(seed, *key)
    u = gen.random((cols, rows))
    return _normals_from_uniforms(u).T


def normal_window(seed: int, key: tuple[int, ...], rows: int, window: int) -> np.ndarray:
    """Draw the ``rows`` normals of counter window ``window`` only.

    ``normal_window(seed, key, n, b)`` equals column ``b`` of
    ``normal_matrix(seed, key, n, B)`` for any ``B > b``.
    """
    gen = stream(seed, *key)
    start = int(window) * int(rows)
    # advance() counts 128-bit counter steps, i.e. four 64-bit outputs.
    gen.bit_generator.advance(start // 4)
    if start % 4:
        gen.random(start % 4)
    return _normals_from_uniforms(gen.random(rows))
