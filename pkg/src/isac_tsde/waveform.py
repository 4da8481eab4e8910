"""DFT-s-OFDM transmitter and receiver front end for the sensing user."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SystemConfig, _check_length, check_eta, dft, idft


@dataclass(frozen=True)
class SubcarrierMap:
    """Uniform subcarrier allocation ``{eta * k1 : k1 = 0..K1-1}``.

    ``eta == 1`` is localized (collocated) mapping, ``eta > 1`` distributed.
    """

    eta: int
    k1: int

    def indices(self) -> np.ndarray:
        return self.eta * np.arange(self.k1)

    def check(self, cfg: SystemConfig) -> "SubcarrierMap":
        check_eta(self.eta, cfg)
        if self.k1 != cfg.K1:
            raise ValueError(f"map carries {self.k1} subcarriers, config has K1={cfg.K1}")
        if self.eta * (self.k1 - 1) >= cfg.K:
            raise ValueError("mapped subcarrier index exceeds K - 1")
        return self

    @classmethod
    def for_config(cls, eta, cfg: SystemConfig) -> "SubcarrierMap":
        return cls(check_eta(eta, cfg), cfg.K1).check(cfg)

    @property
    def localized(self) -> bool:
        return self.eta == 1


def qpsk_symbols(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-power QPSK data symbols."""
    bits = rng.integers(0, 2, size=(2, n))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)


def chu_symbols(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-modulus chirp block whose n-point DFT has constant modulus.

    Root (coprime to ``n``), cyclic shift and a common QPSK phase are drawn at
    random, so consecutive blocks differ.
    """
    roots = [u for u in range(1, n) if np.gcd(u, n) == 1]
    u = roots[rng.integers(len(roots))]
    shift = rng.integers(n)
    m = (np.arange(n) + shift) % n
    # (m*m) mod 2n keeps the phase exact for large n; valid for even and odd n
    phase = np.pi * u * ((m * (m + n % 2)) % (2 * n)) / n
    return np.exp(-1j * phase) * np.exp(1j * np.pi / 4 * (2 * rng.integers(4) + 1))


SYMBOL_GENERATORS = {"chu": chu_symbols, "qpsk": qpsk_symbols}


def spread(block, cfg: SystemConfig) -> np.ndarray:
    """K1-point DFT precoding of one block of information symbols."""
    return dft(block, cfg.K1)


def map_subcarriers(X, smap: SubcarrierMap, cfg: SystemConfig) -> np.ndarray:
    """Place the K1 spread symbols on subcarriers ``eta*k1``; zeros elsewhere."""
    smap.check(cfg)
    X = _check_length(X, cfg.K1)
    X_tilde = np.zeros(cfg.K, dtype=complex)
    X_tilde[smap.indices()] = X
    return X_tilde


def to_time_with_cp(X_tilde, cfg: SystemConfig) -> np.ndarray:
    """K-point IDFT followed by cyclic-prefix insertion (length ``K + n_cp``)."""
    x = idft(X_tilde, cfg.K)
    n = np.arange(cfg.K + cfg.n_cp)
    return x[(n - cfg.n_cp) % cfg.K]


def strip_cp(samples, cfg: SystemConfig) -> np.ndarray:
    """Drop the cyclic prefix and return the frequency-domain vector ``Y~``."""
    samples = _check_length(samples, cfg.K + cfg.n_cp)
    return dft(samples[cfg.n_cp:], cfg.K)


def rx_front_end(y_freq, smap: SubcarrierMap, cfg: SystemConfig) -> np.ndarray:
    """Subcarrier demapping: pick ``Y~[eta*k1]`` for ``k1 = 0..K1-1``."""
    smap.check(cfg)
    y_freq = _check_length(y_freq, cfg.K)
    return y_freq[smap.indices()]


def sensing_snapshot(Y, X) -> np.ndarray:
    """Remove the data symbols by element-wise division, ``r = Y / X``.

    Raises
    ------
    ValueError
        If the vectors differ in length or any symbol is zero.
    """
    Y = np.asarray(Y, dtype=complex)
    X = np.asarray(X, dtype=complex)
    if Y.shape != X.shape or Y.ndim != 1:
        raise ValueError(f"shape mismatch: Y {Y.shape}, X {X.shape}")
    if np.any(X == 0):
        raise ValueError("symbol block contains a zero; cannot form the sensing snapshot")
    return Y / X


def equalize_despread(Y, H_used, cfg: SystemConfig) -> np.ndarray:
    """Zero-forcing FDE followed by the K1-point IDFT (communication loopback)."""
    Y = _check_length(Y, cfg.K1)
    H_used = _check_length(H_used, cfg.K1)
    if np.any(H_used == 0):
        raise ValueError("zero channel coefficient on a used subcarrier")
    return idft(Y / H_used, cfg.K1)
