"""edflow: ED census and acuity-stratified arrival forecasting on a 15-minute cadence."""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
