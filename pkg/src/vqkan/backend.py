"""Select the forward kernels: compiled extension if importable, numpy otherwise.

Set ``VQKAN_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _kernels_py

NAME = "python"
kernels = _kernels_py

if os.environ.get("VQKAN_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        NAME = "cython"

vqkan_forward = kernels.vqkan_forward
qnn_forward = kernels.qnn_forward
