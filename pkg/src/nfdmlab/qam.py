"""Cross 32-QAM mapping and exact soft demapping.

The labeling is a fixed quasi-Gray table found by annealing over the 52
nearest-neighbour pairs of the cross constellation; it costs 56 bit flips,
the minimum for a cross layout (four pairs cannot be Gray).
LLR sign convention: ``LLR = log P(bit=0|y) - log P(bit=1|y)``.
"""

import numpy as np
from scipy.special import logsumexp

BITS_PER_SYMBOL = 5

# label -> unnormalized (I, Q); label bits are MSB first
_RAW_TABLE = [
    (-3, 1), (-3, -5), (-3, -1), (-3, -3), (3, 1), (3, -5), (3, -1), (3, -3),
    (-5, 1), (-5, 3), (-5, -1), (-5, -3), (5, 1), (5, 3), (5, -1), (5, -3),
    (-1, 1), (-1, -5), (-1, -1), (-1, -3), (1, 1), (1, -5), (1, -1), (1, -3),
    (-1, 3), (-3, 3), (-1, 5), (-3, 5), (1, 3), (3, 3), (1, 5), (3, 5),
]

RAW_AVERAGE_ENERGY = 20.0
CONSTELLATION = np.array([complex(i, q) for i, q in _RAW_TABLE]) / np.sqrt(RAW_AVERAGE_ENERGY)
LABEL_BITS = ((np.arange(32)[:, None] >> np.arange(4, -1, -1)) & 1).astype(np.uint8)


def bits_to_labels(bits) -> np.ndarray:
    b = np.asarray(bits)
    if b.size % BITS_PER_SYMBOL:
        raise ValueError(f"bit count must be a multiple of {BITS_PER_SYMBOL}")
    b = b.reshape(-1, BITS_PER_SYMBOL).astype(np.int64)
    return b @ (1 << np.arange(4, -1, -1))


def labels_to_bits(labels) -> np.ndarray:
    return LABEL_BITS[np.asarray(labels, dtype=np.int64)].reshape(-1)


def qam32_map(bits) -> np.ndarray | complex:
    """Map bits to unit-energy cross 32-QAM symbols.

    A single 5-bit group returns a complex scalar; longer inputs (multiples
    of five) return an array of symbols.
    """
    b = np.asarray(bits)
    if b.ndim == 0 or b.size == 0 or b.size % BITS_PER_SYMBOL:
        raise ValueError(f"expected a multiple of {BITS_PER_SYMBOL} bits, got {b.size}")
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    sym = CONSTELLATION[bits_to_labels(b)]
    return complex(sym[0]) if b.size == BITS_PER_SYMBOL else sym


def hard_decision(symbols) -> np.ndarray:
    """Labels of the nearest constellation points."""
    y = np.asarray(symbols, dtype=np.complex128)
    d = np.abs(y[..., None] - CONSTELLATION) ** 2
    return np.argmin(d, axis=-1)


def qam32_llr(symbols, noise_variance) -> np.ndarray:
    """Exact per-bit LLRs, shape ``(..., 5)``, under circular Gaussian noise.

    ``noise_variance`` is the total complex variance ``E|n|^2`` and may
    broadcast against ``symbols``.
    """
    y = np.asarray(symbols, dtype=np.complex128)
    nv = np.asarray(noise_variance, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("symbols must be finite")
    if np.any(nv <= 0) or not np.all(np.isfinite(nv)):
        raise ValueError("noise_variance must be positive and finite")
    metric = -np.abs(y[..., None] - CONSTELLATION) ** 2 / nv[..., None]
    llr = np.empty(y.shape + (BITS_PER_SYMBOL,))
    for j in range(BITS_PER_SYMBOL):
        zero = LABEL_BITS[:, j] == 0
        llr[..., j] = logsumexp(metric[..., zero], axis=-1) - logsumexp(metric[..., ~zero], axis=-1)
    return llr


def qam32_demap(symbol, noise_variance: float):
    """Hard bits and LLRs for one or more received symbols.

    Returns ``(bits, llrs)``; for a scalar input both have length 5.
    """
    y = np.asarray(symbol, dtype=np.complex128)
    if not np.all(np.isfinite(y)):
        raise ValueError("symbol must be finite")
    bits = LABEL_BITS[hard_decision(y)]
    llrs = qam32_llr(y, noise_variance)
    if y.ndim == 0:
        return bits.reshape(BITS_PER_SYMBOL), llrs.reshape(BITS_PER_SYMBOL)
    return bits, llrs
