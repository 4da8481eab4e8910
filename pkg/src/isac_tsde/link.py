"""One uplink transmission from the sensing user, as seen by the base station."""

from __future__ import annotations

import numpy as np

from .channel import MultipathChannel, apply_channel_awgn, apply_channel_time, awgn, noise_variance
from .core import SystemConfig
from .waveform import (
    SubcarrierMap,
    SYMBOL_GENERATORS,
    map_subcarriers,
    rx_front_end,
    sensing_snapshot,
    spread,
    strip_cp,
    to_time_with_cp,
)


class Uplink:
    """Callable ``eta -> r`` over a fixed (quasi-static) channel.

    Each call transmits a fresh symbol block and returns the sensing snapshot
    after symbol removal with the known symbols. The spread block is scaled
    to unit average power per used subcarrier, so ``snr_db`` is the received
    SNR per subcarrier for a unit-gain path. Blocks whose spectrum has an
    exact zero cannot be used for sensing and are redrawn.

    Parameters
    ----------
    cfg : SystemConfig
    channel : MultipathChannel
    snr_db : float or None
        Per-used-subcarrier SNR; ``None`` means noiseless.
    rng : numpy.random.Generator, optional
    symbols : {"chu", "qpsk"}
        ``"chu"`` sends a chirp block with a flat spectrum, so symbol removal
        does not color the noise. ``"qpsk"`` sends random QPSK data; the
        division by the spread symbols then amplifies noise on weak
        subcarriers.
    chain : {"frequency", "time"}
        ``"frequency"`` applies the channel per subcarrier; ``"time"`` runs the
        full IDFT/CP/convolution/DFT chain and requires on-grid delays.
    """

    def __init__(self, cfg: SystemConfig, channel: MultipathChannel, snr_db=None,
                 rng=None, symbols="chu", chain="frequency"):
        if symbols not in SYMBOL_GENERATORS:
            raise ValueError(f"unknown symbol type {symbols!r}")
        if chain not in ("frequency", "time"):
            raise ValueError(f"unknown chain {chain!r}")
        self.cfg = cfg
        self.channel = channel.check(cfg)
        self.snr_db = snr_db
        self.rng = np.random.default_rng() if rng is None else rng
        self.symbols = symbols
        self.chain = chain
        self.history = []
        self.redraws = 0
        self.noise_var_r = None

    @property
    def noise_var(self) -> float:
        return noise_variance(self.snr_db)

    def __call__(self, eta) -> np.ndarray:
        cfg = self.cfg
        smap = SubcarrierMap.for_config(eta, cfg)
        X = self._draw_block()
        if self.chain == "frequency":
            Y = apply_channel_awgn(X, self.channel, smap.eta, cfg, self.snr_db, self.rng)
        else:
            tx = to_time_with_cp(map_subcarriers(X, smap, cfg), cfg)
            Y = rx_front_end(strip_cp(apply_channel_time(tx, self.channel, cfg), cfg), smap, cfg)
            if self.snr_db is not None:
                Y = Y + awgn(cfg.K1, self.noise_var, self.rng)
        self.history.append(smap.eta)
        # per-sample noise variance of r after division by the known symbols
        self.noise_var_r = self.noise_var / np.abs(X) ** 2
        return sensing_snapshot(Y, X)

    def _draw_block(self) -> np.ndarray:
        cfg = self.cfg
        while True:
            X = spread(SYMBOL_GENERATORS[self.symbols](cfg.K1, self.rng), cfg) / np.sqrt(cfg.K1)
            if np.min(np.abs(X)) > 1e-9:
                return X
            self.redraws += 1
