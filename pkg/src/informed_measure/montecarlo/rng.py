"""Counter-based random streams.

Every (seed, replicate, stream) triple owns an independent Philox4x64-10
stream: the key is ``(seed, replicate)`` and the stream id sits in the top
counter word.  Block ``j = 1, 2, ...`` of a stream is
``Philox4x64_10(key, counter=(j, 0, 0, stream))`` and its four words are
consumed in order.  Replicate ``k`` therefore sees the same draws no matter
which other replicates run, or in which process.

Uniforms use the top 53 bits of each word, offset by half a unit so they lie
strictly inside (0, 1) and can be pushed through any inverse CDF.
"""

import numpy as np

_MAX_U64 = 2**64
_SCALE = 2.0**-53


def _check_word(name, value):
    if not 0 <= int(value) < _MAX_U64:
        raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value!r}")


def raw_words(seed: int, replicate: int, size: int, stream: int = 0) -> np.ndarray:
    _check_word("seed", seed)
    _check_word("replicate", replicate)
    _check_word("stream", stream)
    bits = np.random.Philox(
        key=np.array([seed, replicate], dtype=np.uint64),
        counter=np.array([0, 0, 0, stream], dtype=np.uint64),
    )
    return bits.random_raw(size)


def uniforms(seed: int, replicate: int, size: int, stream: int = 0) -> np.ndarray:
    words = raw_words(seed, replicate, size, stream)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _SCALE
