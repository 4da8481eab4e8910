"""Matched-filter bank and successive (peak-pick and deflate) delay estimation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import SystemConfig, check_eta
from .validation import check_region, check_snapshot


@dataclass(frozen=True, eq=False)
class MatchedFilterBank:
    """Columns ``f_p(eta)[k] = exp(-2j*pi*k*p*eta/K)`` for ``p < n_cp``."""

    eta: int
    cfg: SystemConfig
    matrix: np.ndarray = field(repr=False)

    @property
    def n_filters(self) -> int:
        return self.matrix.shape[1]


@lru_cache(maxsize=64)
def build_bank(eta, cfg: SystemConfig) -> MatchedFilterBank:
    """Matched filters on the delay grid ``tau_p = p*T_s``, ``0 <= tau_p < T_cp``."""
    eta = check_eta(eta, cfg)
    k = np.arange(cfg.K1)[:, None]
    p = np.arange(cfg.n_cp)[None, :]
    # integer exponent mod K keeps the phases exact for large k*p*eta
    F = np.exp(-2j * np.pi * ((k * p * eta) % cfg.K) / cfg.K)
    F.setflags(write=False)
    return MatchedFilterBank(eta, cfg, F)


def mf_spectrum(r, bank: MatchedFilterBank, region=None) -> np.ndarray:
    """Normalized matched-filter outputs ``f_p^H r / ||f_p||^2``.

    Returns one value per index of ``region`` (sorted ascending), or per
    filter of the bank when ``region`` is None.
    """
    r = check_snapshot(r, bank.cfg.K1)
    region = check_region(region, bank.n_filters)
    F = bank.matrix[:, region]
    return (F.conj().T @ r) / bank.cfg.K1


@dataclass(frozen=True)
class StopRule:
    """Termination rule for :func:`successive_estimate`.

    Build with one of the constructors:

    * ``StopRule.threshold(gamma_th)``: stop once the residual power ratio
      drops to ``gamma_th``.
    * ``StopRule.fixed_count(n)``: stop after ``n`` paths (path count known).
    * ``StopRule.noise_floor(sigmas, noise_var)``: threshold mode whose
      ``gamma_th`` is set per snapshot so that the loop stops once the residual
      energy is within ``sigmas`` standard deviations of the expected noise
      energy. ``noise_var`` is the per-sample noise variance of the snapshot
      (scalar or one value per sample).
    """

    mode: str
    gamma_th: float | None = None
    n_paths: int | None = None
    sigmas: float = 3.0
    noise_var: object = None

    def __post_init__(self):
        if self.mode == "threshold":
            if self.gamma_th is None or not 0 < self.gamma_th < 1:
                raise ValueError(f"gamma_th must lie in (0, 1), got {self.gamma_th}")
        elif self.mode == "fixed_count":
            if self.n_paths is None or self.n_paths < 1:
                raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        elif self.mode == "noise_floor":
            if self.sigmas < 0:
                raise ValueError("sigmas must be non-negative")
        else:
            raise ValueError(f"unknown stop mode {self.mode!r}")

    @classmethod
    def threshold(cls, gamma_th=0.01):
        return cls("threshold", gamma_th=gamma_th)

    @classmethod
    def fixed_count(cls, n_paths):
        return cls("fixed_count", n_paths=int(n_paths))

    @classmethod
    def noise_floor(cls, sigmas=3.0, noise_var=None):
        return cls("noise_floor", sigmas=sigmas, noise_var=noise_var)

    def bind(self, noise_var) -> "StopRule":
        """Attach a snapshot's noise variance to an unbound noise-floor rule."""
        if self.mode != "noise_floor" or self.noise_var is not None:
            return self
        return replace(self, noise_var=noise_var)

    def initial_threshold(self, phi: float, n: int) -> float:
        """``gamma_th`` for a snapshot of energy ``phi`` and length ``n``."""
        if self.mode == "threshold":
            return self.gamma_th
        if self.mode == "fixed_count":
            return -np.inf
        if self.noise_var is None:
            raise ValueError("noise_floor stop rule needs the snapshot noise variance")
        v = np.broadcast_to(np.asarray(self.noise_var, dtype=float), (n,))
        floor = v.sum() + self.sigmas * np.sqrt(np.sum(v**2))
        # a noiseless snapshot still needs a reachable threshold
        return max(floor / phi, 1e-12)


@dataclass(frozen=True)
class DelayEstimate:
    """Outcome of successive delay estimation.

    ``indices`` are in selection order; ``converged`` is False when the
    iteration cap was hit before the stop rule was met.
    """

    indices: tuple
    delays: tuple
    eta: int
    residual_ratio: float
    converged: bool = True
    spectrum: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def l_hat(self) -> int:
        return len(self.indices)

    def sorted_delays(self) -> np.ndarray:
        return np.sort(np.asarray(self.delays))


def successive_estimate(r, bank: MatchedFilterBank, stop: StopRule, region=None,
                        joint_refit=False, keep_spectrum=False) -> DelayEstimate:
    """Greedy matched-filter delay estimation with successive cancellation.

    Each pass picks the filter with the largest ``|f_p^H r|`` among the not yet
    selected indices of ``region`` (lowest index on ties), removes the
    projection of the residual onto it, and updates the residual power ratio
    ``gamma = ||r||^2 / ||r_0||^2``. The number of passes never exceeds
    ``min(K1, len(region))``.

    Parameters
    ----------
    r : array_like
        Sensing snapshot of length K1.
    bank : MatchedFilterBank
    stop : StopRule
    region : array_like of int, optional
        Allowed delay indices; all filters of the bank when omitted.
    joint_refit : bool
        Re-fit all selected columns jointly by least squares at every pass
        instead of deflating only the newest column.
    keep_spectrum : bool
        Store ``|Gamma|`` of the initial snapshot over the full bank.

    Returns
    -------
    DelayEstimate
    """
    cfg = bank.cfg
    r0 = check_snapshot(r, cfg.K1)
    phi = float(np.vdot(r0, r0).real)
    if phi == 0:
        raise ValueError("snapshot is identically zero")
    region = check_region(region, bank.n_filters)
    gamma_th = stop.initial_threshold(phi, cfg.K1)
    target = stop.n_paths if stop.mode == "fixed_count" else None
    cap = min(cfg.K1, region.size)

    F = bank.matrix[:, region]
    available = np.ones(region.size, dtype=bool)
    chosen = []
    residual = r0.copy()
    gamma = 1.0
    while True:
        score = np.abs(F.conj().T @ residual)
        score[~available] = -1.0
        j = int(np.argmax(score))
        available[j] = False
        chosen.append(j)
        if joint_refit:
            A = F[:, chosen]
            coef, *_ = np.linalg.lstsq(A, r0, rcond=None)
            residual = r0 - A @ coef
        else:
            f = F[:, j]
            residual = residual - f * (np.vdot(f, residual) / np.vdot(f, f).real)
        gamma = float(np.vdot(residual, residual).real) / phi
        if target is not None:
            if len(chosen) >= target:
                converged = True
                break
        elif gamma <= gamma_th:
            converged = True
            break
        if len(chosen) >= cap:
            converged = False
            break

    indices = tuple(int(p) for p in region[chosen])
    spectrum = np.abs(mf_spectrum(r0, bank)) if keep_spectrum else None
    return DelayEstimate(
        indices=indices,
        delays=tuple(p * cfg.T_s for p in indices),
        eta=bank.eta,
        residual_ratio=min(max(gamma, 0.0), 1.0),
        converged=converged,
        spectrum=spectrum,
    )


def _stop_rule(n_paths, noise_var, gamma_th, sigmas):
    if n_paths is not None:
        return StopRule.fixed_count(n_paths)
    if noise_var is not None:
        return StopRule.noise_floor(sigmas, noise_var)
    return StopRule.threshold(gamma_th)


class SuccessiveDelayEstimator(BaseEstimator):
    """Single-snapshot delay estimator with a scikit-learn style interface.

    Parameters
    ----------
    config : SystemConfig
    eta : int, default=1
        Decimation factor the snapshot was acquired with.
    gamma_th : float, default=0.01
        Residual power ratio threshold (used when neither ``n_paths`` nor
        ``noise_var`` is given).
    n_paths : int, optional
        Known path count; switches to fixed-count stopping.
    noise_var : float or array_like, optional
        Snapshot noise variance; switches to noise-floor stopping.
    noise_sigmas : float, default=3.0
    region : array_like of int, optional
        Restrict the search to these delay indices.
    joint_refit : bool, default=False

    Attributes
    ----------
    estimate_ : DelayEstimate
    indices_ : ndarray of int
    delays_ : ndarray of float
        Estimated delays in seconds, in selection order.
    n_paths_ : int
    residual_ratio_ : float
    """

    def __init__(self, config=None, eta=1, gamma_th=0.01, n_paths=None, noise_var=None,
                 noise_sigmas=3.0, region=None, joint_refit=False):
        self.config = config
        self.eta = eta
        self.gamma_th = gamma_th
        self.n_paths = n_paths
        self.noise_var = noise_var
        self.noise_sigmas = noise_sigmas
        self.region = region
        self.joint_refit = joint_refit

    def _bank(self):
        if not isinstance(self.config, SystemConfig):
            raise ValueError("config must be a SystemConfig")
        return build_bank(self.eta, self.config)

    def fit(self, r, y=None):
        stop = _stop_rule(self.n_paths, self.noise_var, self.gamma_th, self.noise_sigmas)
        est = successive_estimate(r, self._bank(), stop, self.region, self.joint_refit)
        self.estimate_ = est
        self.indices_ = np.asarray(est.indices, dtype=int)
        self.delays_ = np.asarray(est.delays)
        self.n_paths_ = est.l_hat
        self.residual_ratio_ = est.residual_ratio
        return self

    def predict(self, r=None):
        """Estimated delays; refits first when a snapshot is passed."""
        if r is not None:
            self.fit(r)
        check_is_fitted(self, "estimate_")
        return self.delays_

    def fit_predict(self, r, y=None):
        return self.fit(r).delays_

    def transform(self, r):
        """Matched-filter spectrum ``Gamma`` of ``r`` over the search region."""
        return mf_spectrum(r, self._bank(), self.region)
