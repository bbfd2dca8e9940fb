"""Vigilance estimation from forehead EOG and EEG.

Signal separation, blink/saccade detection, EOG and differential-entropy
features, PERCLOS labels, SVR/CCRF/CCNF regression and session-wise
evaluation, plus a synthetic session generator for testing.
"""
from ._version import __version__
from ._core import BACKEND as KERNEL_BACKEND

__all__ = ["__version__", "KERNEL_BACKEND"]
