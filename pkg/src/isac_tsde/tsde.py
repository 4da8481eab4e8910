"""Two-stage delay estimation: coarse collocated pass, then a decimated refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import SystemConfig, delay_resolution
from .estimator import DelayEstimate, StopRule, build_bank, successive_estimate


@dataclass(frozen=True)
class SearchRegion:
    """Occupied coarse delay bins and the sample-index region they cover.

    Bin ``u`` spans sample indices ``[u*eta_max, (u+1)*eta_max)``.
    """

    bins: tuple
    eta_max: int

    def __post_init__(self):
        bins = tuple(sorted({int(u) for u in self.bins}))
        if not bins:
            raise ValueError("a search region needs at least one bin")
        if bins[0] < 0:
            raise ValueError("bin indices must be non-negative")
        object.__setattr__(self, "bins", bins)

    @property
    def l_prime(self) -> int:
        return len(self.bins)

    @property
    def xi(self) -> int:
        """Number of bins spanned from the first to the last occupied bin."""
        return self.bins[-1] + 1 - self.bins[0]

    def indices(self, n_cp=None) -> np.ndarray:
        """Sample indices of the region, optionally clipped to ``[0, n_cp)``."""
        idx = np.concatenate([np.arange(u * self.eta_max, (u + 1) * self.eta_max)
                              for u in self.bins])
        if n_cp is not None:
            idx = idx[idx < n_cp]
        return idx

    def intervals(self):
        return [(u * self.eta_max, (u + 1) * self.eta_max) for u in self.bins]


@dataclass(frozen=True)
class DecimationChoice:
    eta_star: int
    delta_u: float
    xi: int


def bin_set(est: DelayEstimate, cfg: SystemConfig) -> SearchRegion:
    """Coarse bins ``unique(floor(p / eta_max))`` of the estimated indices."""
    if est.l_hat == 0:
        raise ValueError("cannot form bins from an empty estimate")
    return SearchRegion(tuple(p // cfg.eta_max for p in est.indices), cfg.eta_max)


def select_decimation(region: SearchRegion, cfg: SystemConfig) -> DecimationChoice:
    """Largest integer decimation factor whose unambiguous range covers the
    protection region of width ``xi`` coarse bins.

    ``1/(delta_f*delta_u)`` reduces to ``K1/xi``, so the floor is taken in
    integer arithmetic.
    """
    xi = region.xi
    delta_u = xi * delay_resolution(1, cfg)
    eta_star = max(1, min(cfg.K1 // xi, cfg.eta_max))
    # grating-lobe spacing K/eta_star samples must cover xi*eta_max samples
    assert eta_star == 1 or eta_star * xi <= cfg.K1
    assert eta_star * (cfg.K1 - 1) < cfg.K
    return DecimationChoice(eta_star, delta_u, xi)


@dataclass(frozen=True)
class TSDEResult:
    """Everything produced by one two-stage run; ``estimate`` is the final answer."""

    stage1: DelayEstimate
    region: SearchRegion
    decimation: DecimationChoice
    stage2: DelayEstimate | None

    @property
    def estimate(self) -> DelayEstimate:
        return self.stage1 if self.stage2 is None else self.stage2

    @property
    def eta_star(self) -> int:
        return self.decimation.eta_star


def _snapshot(link, eta, stop):
    r = link(eta)
    return r, stop.bind(getattr(link, "noise_var_r", None))


def run_tsde(link, cfg: SystemConfig, stop: StopRule, coarse_stop: StopRule | None = None,
             joint_refit=False, keep_spectrum=False) -> TSDEResult:
    """Run the two-stage procedure over ``link``.

    Parameters
    ----------
    link : callable
        ``link(eta)`` performs one uplink transmission with decimation ``eta``
        over a fixed channel and returns the sensing snapshot. If the link
        exposes ``noise_var_r`` it is used to bind noise-floor stop rules.
    cfg : SystemConfig
    stop : StopRule
        Stop rule for the refinement stage.
    coarse_stop : StopRule, optional
        Stop rule for the coarse stage; defaults to ``stop``.
    """
    coarse_stop = stop if coarse_stop is None else coarse_stop
    r1, rule1 = _snapshot(link, 1, coarse_stop)
    stage1 = successive_estimate(r1, build_bank(1, cfg), rule1,
                                 joint_refit=joint_refit, keep_spectrum=keep_spectrum)
    region = bin_set(stage1, cfg)
    choice = select_decimation(region, cfg)
    if choice.eta_star == 1:
        return TSDEResult(stage1, region, choice, None)

    omega = region.indices(cfg.n_cp)
    r2, rule2 = _snapshot(link, choice.eta_star, stop)
    stage2 = successive_estimate(r2, build_bank(choice.eta_star, cfg), rule2, region=omega,
                                 joint_refit=joint_refit, keep_spectrum=keep_spectrum)
    return TSDEResult(stage1, region, choice, stage2)


class TwoStageDelayEstimator(BaseEstimator):
    """Two-stage delay estimator with a scikit-learn style interface.

    ``fit`` takes a link callable (``eta -> snapshot``) rather than a data
    matrix, because the second transmission depends on the first estimate.

    Parameters
    ----------
    config : SystemConfig
    gamma_th : float, default=0.01
    n_paths : int, optional
        Known path count for the refinement stage (fixed-count stopping).
    noise_floor : bool, default=False
        Use noise-floor stopping bound to the link's noise variance.
    noise_sigmas : float, default=3.0
    coarse : {"same", "threshold", "noise_floor"}, default="same"
        Stop rule for the coarse stage.
    joint_refit : bool, default=False
    """

    def __init__(self, config=None, gamma_th=0.01, n_paths=None, noise_floor=False,
                 noise_sigmas=3.0, coarse="same", joint_refit=False):
        self.config = config
        self.gamma_th = gamma_th
        self.n_paths = n_paths
        self.noise_floor = noise_floor
        self.noise_sigmas = noise_sigmas
        self.coarse = coarse
        self.joint_refit = joint_refit

    def _threshold_rule(self):
        if self.noise_floor:
            return StopRule.noise_floor(self.noise_sigmas)
        return StopRule.threshold(self.gamma_th)

    def fit(self, link, y=None):
        if not isinstance(self.config, SystemConfig):
            raise ValueError("config must be a SystemConfig")
        threshold = self._threshold_rule()
        stop = StopRule.fixed_count(self.n_paths) if self.n_paths is not None else threshold
        if self.coarse == "same":
            coarse = None
        elif self.coarse == "threshold":
            coarse = StopRule.threshold(self.gamma_th)
        elif self.coarse == "noise_floor":
            coarse = StopRule.noise_floor(self.noise_sigmas)
        else:
            raise ValueError(f"unknown coarse stop {self.coarse!r}")
        res = run_tsde(link, self.config, stop, coarse, joint_refit=self.joint_refit)
        self.result_ = res
        self.stage1_ = res.stage1
        self.region_ = res.region
        self.eta_star_ = res.eta_star
        self.estimate_ = res.estimate
        self.indices_ = np.asarray(res.estimate.indices, dtype=int)
        self.delays_ = np.asarray(res.estimate.delays)
        self.n_paths_ = res.estimate.l_hat
        return self

    def predict(self, link=None):
        if link is not None:
            self.fit(link)
        check_is_fitted(self, "estimate_")
        return self.delays_

    def fit_predict(self, link, y=None):
        return self.fit(link).delays_
