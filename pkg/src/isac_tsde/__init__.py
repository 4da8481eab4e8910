"""Two-stage delay estimation for uplink DFT-s-OFDM sensing."""

from importlib.metadata import PackageNotFoundError, version

from .channel import MultipathChannel, ScenarioSpec, generate_channel
from .core import SystemConfig, delay_resolution, dirichlet_gain, unambiguous_range
from .estimator import DelayEstimate, StopRule, SuccessiveDelayEstimator, successive_estimate
from .eval import MonteCarloReport, SweepConfig, run_sweep
from .link import Uplink
from .tsde import TSDEResult, TwoStageDelayEstimator, run_tsde

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "DelayEstimate",
    "MonteCarloReport",
    "MultipathChannel",
    "ScenarioSpec",
    "StopRule",
    "SuccessiveDelayEstimator",
    "SweepConfig",
    "SystemConfig",
    "TSDEResult",
    "TwoStageDelayEstimator",
    "Uplink",
    "delay_resolution",
    "dirichlet_gain",
    "generate_channel",
    "run_sweep",
    "run_tsde",
    "successive_estimate",
    "unambiguous_range",
    "__version__",
]
