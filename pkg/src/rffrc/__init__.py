"""Delay-embedded random Fourier feature forecasting of fast-slow systems."""

__version__ = "0.1.0"

from .dynamics import SystemSpec, Trajectory, simulate  # noqa: E402
from .embedding import DelayBuffer, build_supervised, delay_from_tail, push  # noqa: E402
from .forecaster import Forecaster, predict_one, rollout, train  # noqa: E402
from .metrics import nrmse  # noqa: E402
from .readout import fit, predict, select_lambda  # noqa: E402
from .rff import FeatureMapSpec, MultiScaleConfig, apply, sample_multi, sample_single  # noqa: E402

__all__ = [
    "__version__",
    "SystemSpec",
    "Trajectory",
    "simulate",
    "DelayBuffer",
    "build_supervised",
    "delay_from_tail",
    "push",
    "FeatureMapSpec",
    "MultiScaleConfig",
    "sample_single",
    "sample_multi",
    "apply",
    "fit",
    "predict",
    "select_lambda",
    "Forecaster",
    "train",
    "predict_one",
    "rollout",
    "nrmse",
]
