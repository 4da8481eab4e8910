"""Numerology, transforms and the matched-filter ambiguity kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SystemConfig:
    """OFDM numerology for the sensing user.

    Parameters
    ----------
    delta_f : float
        Subcarrier spacing in Hz.
    K : int
        Total number of subcarriers.
    K1 : int
        Number of subcarriers allocated to the sensing user.
    n_cp : int, optional
        Cyclic prefix length in samples. Defaults to ``K // 8``.

    Notes
    -----
    ``K1 == K`` is accepted so that the full-bandwidth baseline can be
    expressed with the same type; every partial allocation needs
    ``K1 <= K / 2``.
    """

    delta_f: float
    K: int
    K1: int
    n_cp: int | None = None

    def __post_init__(self):
        if self.n_cp is None:
            object.__setattr__(self, "n_cp", self.K // 8)
        if not self.delta_f > 0:
            raise ValueError(f"delta_f must be positive, got {self.delta_f}")
        if self.K1 < 2 or self.K1 > self.K:
            raise ValueError(f"need 2 <= K1 <= K, got K1={self.K1}, K={self.K}")
        if self.K % self.K1:
            raise ValueError(f"K1={self.K1} must divide K={self.K}")
        if not 0 < self.n_cp < self.K:
            raise ValueError(f"need 0 < n_cp < K, got n_cp={self.n_cp}")

    @property
    def B(self) -> float:
        return self.delta_f * self.K

    @property
    def B1(self) -> float:
        return self.delta_f * self.K1

    @property
    def T_s(self) -> float:
        return 1.0 / self.B

    @property
    def T_cp(self) -> float:
        return self.n_cp * self.T_s

    @property
    def eta_max(self) -> int:
        return self.K // self.K1

    def with_k1(self, K1: int) -> "SystemConfig":
        return SystemConfig(self.delta_f, self.K, K1, self.n_cp)


def check_eta(eta, cfg: SystemConfig) -> int:
    """Validate a decimation factor against ``cfg`` and return it as int."""
    if int(eta) != eta or not 1 <= eta <= cfg.eta_max:
        raise ValueError(f"eta must be an integer in [1, {cfg.eta_max}], got {eta}")
    return int(eta)


def _check_length(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.shape[0] != n:
        raise ValueError(f"expected a length-{n} vector, got shape {v.shape}")
    return v


def dft(v, n: int) -> np.ndarray:
    """Unnormalized forward DFT, ``X[k] = sum_n x[n] exp(-2j*pi*n*k/N)``."""
    return np.fft.fft(_check_length(v, n))


def idft(v, n: int) -> np.ndarray:
    """Inverse DFT with the ``1/N`` normalization."""
    return np.fft.ifft(_check_length(v, n))


def dirichlet_gain(delta_tau, eta, cfg: SystemConfig):
    """Normalized matched-filter response to a path offset by ``delta_tau``.

    Closed form of ``(1/K1) * sum_k exp(-2j*pi*delta_f*eta*k*delta_tau)``.
    The kernel is periodic with period ``1/(delta_f*eta)``, so the argument
    is reduced to one period before evaluation and the 0/0 points (main lobe
    and grating lobes) take their limit value of 1.

    Parameters
    ----------
    delta_tau : float or array_like
        Delay offset ``tau_l - tau_p`` in seconds.
    eta : int
        Subcarrier decimation factor.
    cfg : SystemConfig

    Returns
    -------
    complex or ndarray of complex
    """
    eta = check_eta(eta, cfg)
    K1 = cfg.K1
    x = np.asarray(delta_tau, dtype=float) * cfg.delta_f * eta
    x = x - np.round(x)
    den = K1 * np.sin(np.pi * x)
    singular = np.abs(x) < 1e-15
    safe_den = np.where(singular, 1.0, den)
    mag = np.where(singular, 1.0, np.sin(np.pi * K1 * x) / safe_den)
    g = np.exp(-1j * np.pi * (K1 - 1) * x) * mag
    return g[()] if g.ndim == 0 else g


def delay_resolution(eta, cfg: SystemConfig) -> float:
    """Half main-lobe width ``1/(delta_f*K1*eta)`` in seconds."""
    return 1.0 / (cfg.delta_f * cfg.K1 * check_eta(eta, cfg))


def unambiguous_range(eta, cfg: SystemConfig) -> float:
    """Grating-lobe spacing ``1/(delta_f*eta)`` in seconds."""
    return 1.0 / (cfg.delta_f * check_eta(eta, cfg))
