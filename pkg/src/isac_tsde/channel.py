"""Multipath channel, AWGN and randomized scenario generation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SystemConfig, _check_length, check_eta


@dataclass(frozen=True)
class MultipathChannel:
    """Discrete multipath channel: complex gains and delays in seconds."""

    gains: tuple
    delays: tuple

    def __post_init__(self):
        gains = tuple(complex(g) for g in np.atleast_1d(self.gains))
        delays = tuple(float(d) for d in np.atleast_1d(self.delays))
        if len(gains) != len(delays):
            raise ValueError("gains and delays must have the same length")
        if not gains:
            raise ValueError("a channel needs at least one path")
        if min(delays) < 0:
            raise ValueError("delays must be non-negative")
        if len(set(delays)) != len(delays):
            raise ValueError("delays must be pairwise distinct")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "delays", delays)

    @property
    def L(self) -> int:
        return len(self.delays)

    @property
    def tau_min(self) -> float:
        return min(self.delays)

    @property
    def tau_max(self) -> float:
        return max(self.delays)

    @property
    def tau_d(self) -> float:
        return self.tau_max - self.tau_min

    def check(self, cfg: SystemConfig) -> "MultipathChannel":
        # no-ISI condition; a small relative slack absorbs float rounding of p*T_s
        if self.tau_max >= cfg.T_cp * (1 - 1e-12):
            raise ValueError(
                f"path delay {self.tau_max:.4g} s is not below the CP duration {cfg.T_cp:.4g} s"
            )
        return self

    def sample_delays(self, cfg: SystemConfig) -> np.ndarray:
        """Delays in units of T_s, rounded; raises if any is off the sample grid."""
        p = np.asarray(self.delays) / cfg.T_s
        idx = np.round(p)
        if np.any(np.abs(p - idx) > 1e-6):
            raise ValueError("channel has off-grid delays")
        return idx.astype(int)


def frequency_response(ch: MultipathChannel, eta, cfg: SystemConfig, n=None) -> np.ndarray:
    """``H[k] = sum_l a_l exp(-2j*pi*delta_f*eta*k*tau_l)`` for ``k < n``.

    ``n`` defaults to K1 (used subcarriers); pass ``eta=1, n=cfg.K`` for the
    full-band response.
    """
    eta = check_eta(eta, cfg)
    ch.check(cfg)
    n = cfg.K1 if n is None else n
    k = np.arange(n)[:, None]
    phase = np.exp(-2j * np.pi * cfg.delta_f * eta * k * np.asarray(ch.delays)[None, :])
    return phase @ np.asarray(ch.gains)


def awgn(n: int, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian noise with variance ``noise_var``."""
    return np.sqrt(noise_var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def noise_variance(snr_db) -> float:
    """Per-subcarrier noise variance for unit-power symbols; 0 when noiseless."""
    return 0.0 if snr_db is None else 10.0 ** (-snr_db / 10.0)


def apply_channel_awgn(X_used, ch: MultipathChannel, eta, cfg: SystemConfig,
                       snr_db=None, rng=None) -> np.ndarray:
    """Received used-subcarrier samples ``Y = H * X + w``."""
    X_used = _check_length(X_used, cfg.K1)
    Y = frequency_response(ch, eta, cfg) * X_used
    if snr_db is not None:
        if rng is None:
            raise ValueError("a random generator is required when snr_db is set")
        Y = Y + awgn(cfg.K1, noise_variance(snr_db), rng)
    return Y


def apply_channel_time(samples, ch: MultipathChannel, cfg: SystemConfig) -> np.ndarray:
    """Linear multipath convolution of a CP-prefixed block (integer delays only).

    Returns a block of the same length, i.e. the tail that would spill into
    the next symbol is discarded.
    """
    samples = _check_length(samples, cfg.K + cfg.n_cp)
    ch.check(cfg)
    out = np.zeros_like(samples)
    for gain, d in zip(ch.gains, ch.sample_delays(cfg)):
        out[d:] += gain * samples[: samples.shape[0] - d]
    return out


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe for drawing random channels in Monte Carlo runs.

    Delays are drawn in ``[delay_offset, delay_offset + delay_spread_max]``.
    All times are in seconds.
    """

    n_paths: int = 2
    delay_spread_max: float = 0.0
    delay_offset: float = 0.0
    on_grid: bool = True
    min_separation: float = 0.0
    gain_min: float = 0.5
    gain_max: float = 1.0
    snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.delay_spread_max < 0 or self.delay_offset < 0 or self.min_separation < 0:
            raise ValueError("delay_spread_max, delay_offset and min_separation must be >= 0")
        if not 0 < self.gain_min <= self.gain_max:
            raise ValueError("need 0 < gain_min <= gain_max")

    def check(self, cfg: SystemConfig) -> "ScenarioSpec":
        if self.delay_offset + self.delay_spread_max >= cfg.T_cp:
            raise ValueError("delay_offset + delay_spread_max must stay below the CP duration")
        return self


def _draw_grid(spec, cfg, rng, max_tries):
    lo = int(np.ceil(spec.delay_offset / cfg.T_s - 1e-9))
    hi = int(np.floor((spec.delay_offset + spec.delay_spread_max) / cfg.T_s + 1e-9))
    grid = np.arange(lo, hi + 1)
    step = max(1, int(np.ceil(spec.min_separation / cfg.T_s - 1e-9)))
    if grid.size == 0 or (spec.n_paths - 1) * step > hi - lo:
        raise ValueError("cannot place the requested paths on the delay grid")
    for _ in range(max_tries):
        p = np.sort(rng.choice(grid, size=spec.n_paths, replace=False))
        if np.all(np.diff(p) >= step):
            return p * cfg.T_s
    raise ValueError("rejection sampling failed to satisfy min_separation")


def _draw_continuous(spec, cfg, rng, max_tries):
    if (spec.n_paths - 1) * spec.min_separation > spec.delay_spread_max:
        raise ValueError("cannot place the requested paths with the required separation")
    for _ in range(max_tries):
        tau = np.sort(spec.delay_offset + rng.uniform(0, spec.delay_spread_max, spec.n_paths))
        if spec.n_paths == 1 or (np.all(np.diff(tau) >= spec.min_separation)
                                 and np.all(np.diff(tau) > 0)):
            return tau
    raise ValueError("rejection sampling failed to satisfy min_separation")


def generate_channel(spec: ScenarioSpec, cfg: SystemConfig, rng: np.random.Generator,
                     max_tries: int = 10_000) -> MultipathChannel:
    """Draw a random channel: delays by rejection sampling, gains with
    magnitude uniform in ``[gain_min, gain_max]`` and uniform phase."""
    spec.check(cfg)
    draw = _draw_grid if spec.on_grid else _draw_continuous
    delays = draw(spec, cfg, rng, max_tries)
    mag = rng.uniform(spec.gain_min, spec.gain_max, spec.n_paths)
    phase = rng.uniform(0, 2 * np.pi, spec.n_paths)
    return MultipathChannel(tuple(mag * np.exp(1j * phase)), tuple(delays)).check(cfg)
