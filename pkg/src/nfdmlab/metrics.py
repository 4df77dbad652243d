"""BER, Q-factor, GMI and EVM."""

import numpy as np
from scipy.special import erfcinv


def ber_count(tx_bits, rx_bits) -> tuple[float, int]:
    tx = np.asarray(tx_bits).reshape(-1)
    rx = np.asarray(rx_bits).reshape(-1)
    if tx.size != rx.size:
        raise ValueError(f"length mismatch: {tx.size} vs {rx.size}")
    if tx.size == 0:
        raise ValueError("empty bit sequences")
    errors = int(np.count_nonzero(tx != rx))
    return errors / tx.size, errors


def q_from_ber(ber: float) -> float:
    """Q-factor in dB, ``20 log10(sqrt(2) erfcinv(2 ber))``."""
    if not 0 < ber < 0.5:
        raise ValueError(f"BER must lie in (0, 0.5), got {ber}")
    return float(20 * np.log10(np.sqrt(2) * erfcinv(2 * ber)))


def gmi_estimate(llrs, tx_bits, bits_per_symbol: int = 5) -> float:
    """Bit-metric GMI per symbol from LLRs (``log P0/P1`` convention)."""
    llr = np.asarray(llrs, dtype=float).reshape(-1)
    bits = np.asarray(tx_bits).reshape(-1)
    if llr.size != bits.size or llr.size % bits_per_symbol:
        raise ValueError("llrs and tx_bits must be aligned and whole symbols")
    if not np.all(np.isfinite(llr)):
        raise ValueError("LLRs must be finite")
    sign = 1.0 - 2.0 * bits
    # log2(1 + exp(-x)) evaluated stably
    penalty = np.logaddexp(0.0, -sign * llr) / np.log(2)
    n_symbols = llr.size // bits_per_symbol
    gmi = bits_per_symbol - penalty.sum() / n_symbols
    return float(np.clip(gmi, 0.0, bits_per_symbol))


def evm_db(received, reference, axis=None):
    """``10 log10(mean|y - x|^2 / mean|x|^2)``."""
    y = np.asarray(received)
    x = np.asarray(reference)
    err = np.mean(np.abs(y - x) ** 2, axis=axis)
    ref = np.mean(np.abs(x) ** 2, axis=axis)
    with np.errstate(divide="ignore"):
        return 10 * np.log10(err / ref)
