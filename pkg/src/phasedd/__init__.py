"""Simulation of a self-coherent phase-diverse direct-detection link with
digital predistortion for finite-extinction-ratio IQ modulators."""
from .config import LinkConfig, fast_profile
from .link import run_coherent_baseline, run_link, transmit
from .lms import BACKEND as LMS_BACKEND
from .rxdsp import MetricsReport, global_snr

__all__ = ["LinkConfig", "fast_profile", "run_link", "run_coherent_baseline", "transmit",
           "MetricsReport", "global_snr", "LMS_BACKEND"]
__version__ = "0.1.0"
