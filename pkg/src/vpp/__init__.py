"""Virtual pattern projection for stereo matching."""

import warnings

# numba falls back to its own thread pool when the system TBB is too old
warnings.filterwarnings("ignore", message="The TBB threading layer")

from .imgio import INVALID, Calibration, HintSet
from .occlusion import OcclusionDetector, OcclusionParams
from .patterning import VirtualPatternProjector, VppConfig, apply_vpp
from .sampling_eval import MetricsReport, evaluate, sample_hints
from .stereo_sgm import SemiGlobalMatcher, SgmParams

__all__ = [
    "INVALID",
    "Calibration",
    "HintSet",
    "MetricsReport",
    "OcclusionDetector",
    "OcclusionParams",
    "SemiGlobalMatcher",
    "SgmParams",
    "VirtualPatternProjector",
    "VppConfig",
    "apply_vpp",
    "evaluate",
    "sample_hints",
]

__version__ = "0.1.0"
