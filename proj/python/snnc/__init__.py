"""Python bindings for the snnc ANN-to-SNN conversion toolkit."""

import os
import sys

_ext_dir = os.environ.get("SNNC_EXTENSION_DIR")
if _ext_dir and _ext_dir not in sys.path:
    sys.path.insert(0, _ext_dir)

try:
    from snnc._snnc import *  # noqa: F401,F403
    from snnc._snnc import SnncError
except ImportError:
    from _snnc import *  # noqa: F401,F403
    from _snnc import SnncError

__all__ = [
    "LayerConfig",
    "Model",
    "SnncError",
    "check_config",
    "clip_floor",
    "confidence",
    "default_config",
    "energy",
    "entropy",
    "exit_boundaries",
    "kl_divergence",
    "load_configs",
    "load_model",
    "pareto_search",
    "run_snn",
    "step",
]
