"""freqlens: frequency-domain analysis and gated regulation of 1D-CNN classifiers."""

from . import data, focus, gradcam, harness, kernels, net, spectral

__version__ = "0.1.0"

__all__ = ["data", "focus", "gradcam", "harness", "kernels", "net", "spectral", "__version__"]
