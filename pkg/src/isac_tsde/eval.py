"""Monte Carlo harness: detection probability and delay NMSE versus SNR."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ScenarioSpec, generate_channel
from .core import SystemConfig
from .estimator import StopRule, build_bank, successive_estimate
from .link import Uplink
from .tsde import run_tsde

METHODS = ("tsde", "collocated", "fullband")


def detection_probability(outcomes) -> float:
    """Fraction of ``(l_hat, l_true)`` pairs with ``l_hat == l_true``."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("no outcomes")
    return sum(int(l_hat == l_true) for l_hat, l_true in outcomes) / len(outcomes)


def nmse(true_delays, est_delays, pairing="sorted") -> float:
    """Per-trial normalized squared delay error ``mean(|tau - tau_hat|^2 / tau^2)``.

    Estimates are paired with true delays in ascending order, or by minimum
    total normalized error with ``pairing="hungarian"``.
    """
    tau = np.asarray(true_delays, dtype=float)
    est = np.asarray(est_delays, dtype=float)
    if tau.shape != est.shape or tau.ndim != 1 or tau.size == 0:
        raise ValueError(f"need equal non-empty lengths, got {tau.shape} and {est.shape}")
    if np.any(tau == 0):
        raise ValueError("true delays must be non-zero")
    if pairing == "sorted":
        tau, est = np.sort(tau), np.sort(est)
    elif pairing == "hungarian":
        from scipy.optimize import linear_sum_assignment

        cost = (tau[:, None] - est[None, :]) ** 2 / tau[:, None] ** 2
        rows, cols = linear_sum_assignment(cost)
        tau, est = tau[rows], est[cols]
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    return float(np.mean((tau - est) ** 2 / tau**2))


def oracle_exhaustive(r, bank, l_true, region=None) -> tuple:
    """Best least-squares support of size ``l_true`` by exhaustive search.

    Only meant for small problems: ``l_true <= 2`` and at most 256 candidates.
    """
    if l_true not in (1, 2):
        raise ValueError("exhaustive search supports l_true in {1, 2}")
    cand = np.arange(bank.n_filters) if region is None else np.unique(np.asarray(region, int))
    if cand.size > 256:
        raise ValueError("search domain too large for exhaustive search")
    r = np.asarray(r, dtype=complex)
    best, best_res = None, np.inf
    for support in itertools.combinations(cand.tolist(), l_true):
        A = bank.matrix[:, list(support)]
        coef, *_ = np.linalg.lstsq(A, r, rcond=None)
        res = float(np.linalg.norm(r - A @ coef) ** 2)
        if best is None or res < best_res - 1e-12 * max(1.0, best_res):
            best, best_res = support, res
    return tuple(best)


@dataclass(frozen=True)
class SweepConfig:
    """Monte Carlo sweep definition.

    ``gamma_th="auto"`` selects noise-floor stopping for the detection runs;
    a float selects a fixed residual ratio threshold.
    """

    cfg: SystemConfig
    scenario: ScenarioSpec
    snr_grid: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 1000
    methods: tuple = ("tsde", "collocated", "fullband")
    master_seed: int = 0
    gamma_th: object = "auto"
    noise_sigmas: float = 3.0
    joint_refit: bool = False
    pairing: str = "sorted"
    symbols: str = "chu"

    def __post_init__(self):
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_grid:
            raise ValueError("snr_grid must not be empty")
        if not self.methods:
            raise ValueError("methods must not be empty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.gamma_th != "auto" and not 0 < float(self.gamma_th) < 1:
            raise ValueError("gamma_th must be 'auto' or lie in (0, 1)")
        self.scenario.check(self.cfg)

    def detection_rule(self, snr_db=None) -> StopRule:
        """Stop rule for path-count detection; noiseless runs fall back to
        the default residual ratio threshold when ``gamma_th`` is ``"auto"``."""
        if self.gamma_th != "auto":
            return StopRule.threshold(float(self.gamma_th))
        if snr_db is None or np.isposinf(snr_db):
            return StopRule.threshold()
        return StopRule.noise_floor(self.noise_sigmas)


@dataclass
class MonteCarloRow:
    """Aggregate for one (method, SNR) point.

    ``correct`` and ``errors`` keep the per-trial outcomes in trial order
    (``errors`` is NaN where the trial was excluded from the NMSE average).
    """

    method: str
    snr_db: float
    trials: int
    pd: float
    nmse: float
    mean_l_hat: float
    failures: int = 0
    runtime: float = field(default=0.0, compare=False)
    correct: np.ndarray | None = field(default=None, repr=False, compare=False)
    errors: np.ndarray | None = field(default=None, repr=False, compare=False)


@dataclass
class MonteCarloReport:
    rows: list

    def row(self, method, snr_db) -> MonteCarloRow:
        for row in self.rows:
            if row.method == method and row.snr_db == float(snr_db):
                return row
        raise KeyError((method, snr_db))

    def to_csv(self) -> str:
        lines = ["method,snr_db,trials,pd,nmse"]
        for row in self.rows:
            lines.append(f"{row.method},{row.snr_db:.2f},{row.trials},{row.pd:.6f},{row.nmse:.6e}")
        return "\n".join(lines) + "\n"


def _trial_rngs(seed, method, snr_index, trial):
    """Channel stream shared by all methods (common random numbers), plus a
    method-specific stream for symbols and noise."""
    chan = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, snr_index, trial)))
    code = 1 + METHODS.index(method)
    noise = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(code, snr_index, trial)))
    return chan, noise


def _single_pass(link, cfg, stop, joint_refit):
    r = link(1)
    return successive_estimate(r, build_bank(1, cfg), stop.bind(link.noise_var_r),
                               joint_refit=joint_refit)


def run_trial(sc: SweepConfig, method: str, snr_index: int, trial: int) -> dict:
    """One Monte Carlo trial: a detection run and a known-path-count run."""
    cfg = sc.cfg
    snr_db = sc.snr_grid[snr_index]
    chan_rng, noise_rng = _trial_rngs(sc.master_seed, method, snr_index, trial)
    channel = generate_channel(sc.scenario, cfg, chan_rng)
    run_cfg = cfg.with_k1(cfg.K) if method == "fullband" else cfg
    link = Uplink(run_cfg, channel, snr_db, noise_rng, symbols=sc.symbols)
    detect = sc.detection_rule(snr_db)
    known = StopRule.fixed_count(channel.L)
    if method == "tsde":
        est_d = run_tsde(link, run_cfg, detect, joint_refit=sc.joint_refit).estimate
        est_n = run_tsde(link, run_cfg, known, coarse_stop=detect,
                         joint_refit=sc.joint_refit).estimate
    else:
        est_d = _single_pass(link, run_cfg, detect, sc.joint_refit)
        est_n = _single_pass(link, run_cfg, known, sc.joint_refit)
    err = None
    if est_n.converged and est_n.l_hat == channel.L:
        err = nmse(channel.delays, est_n.delays, sc.pairing)
    return {
        "l_hat": est_d.l_hat,
        "correct": bool(est_d.converged and est_d.l_hat == channel.L),
        "nmse": err,
    }


def _run_point(sc, method, snr_index):
    t0 = time.perf_counter()
    correct = np.zeros(sc.trials, dtype=bool)
    errors = np.full(sc.trials, np.nan)
    l_hats = []
    for trial in range(sc.trials):
        try:
            out = run_trial(sc, method, snr_index, trial)
        except (ValueError, np.linalg.LinAlgError):
            continue
        correct[trial] = out["correct"]
        l_hats.append(out["l_hat"])
        if out["nmse"] is not None:
            errors[trial] = out["nmse"]
    kept = errors[~np.isnan(errors)]
    return MonteCarloRow(
        method=method,
        snr_db=sc.snr_grid[snr_index],
        trials=sc.trials,
        pd=float(np.mean(correct)),
        nmse=float(np.mean(kept)) if kept.size else float("nan"),
        mean_l_hat=float(np.mean(l_hats)) if l_hats else float("nan"),
        failures=int(sc.trials - kept.size),
        runtime=time.perf_counter() - t0,
        correct=correct,
        errors=errors,
    )


def run_sweep(sc: SweepConfig, threads: int = 1) -> MonteCarloReport:
    """Evaluate every (method, SNR) point; rows ordered by method, then SNR.

    Results do not depend on ``threads``: each trial draws from its own
    seed-derived streams and per-point aggregation runs in trial order.
    """
    points = [(m, i) for m in sc.methods for i in range(len(sc.snr_grid))]
    if threads <= 1:
        rows = [_run_point(sc, m, i) for m, i in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda mi: _run_point(sc, *mi), points))
    return MonteCarloReport(rows)
