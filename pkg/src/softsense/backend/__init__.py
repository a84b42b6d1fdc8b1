"""Kernel backend selection.

The hot elementwise kernels (activations, paired-softmax heads, masked
weighted cross-entropy, Adam updates) exist in two lanes: a compiled Cython
extension and a pure-NumPy fallback with identical semantics. The compiled
lane is picked at import when the extension is built; the environment
variable SOFTSENSE_BACKEND ("compiled" or "numpy") forces a lane. Dense
matrix products go through NumPy/BLAS in both lanes.

Determinism is per lane: one lane always reproduces itself bit for bit.
Across lanes, results agree bitwise for IEEE-basic kernels and to ~1 ulp
per element where exp/log are involved.
"""

import os

from . import numpy_kernels

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_forced = os.environ.get("SOFTSENSE_BACKEND", "").strip().lower()
if _forced in ("", None):
    _active = _compiled if _compiled is not None else numpy_kernels
elif _forced == "numpy":
    _active = numpy_kernels
elif _forced in ("compiled", "cython"):
    if _compiled is None:
        raise ImportError(
            "SOFTSENSE_BACKEND=compiled but softsense.backend._kernels is not built"
        )
    _active = _compiled
else:
    raise ImportError(
        f"unknown SOFTSENSE_BACKEND {_forced!r}; expected 'compiled' or 'numpy'"
    )


def backend_name():
    """Name of the lane in use: 'compiled' or 'numpy'."""
    return _active.NAME


def available_backends():
    names = ["numpy"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name):
    """Fetch a lane by name regardless of which one is active."""
    if name == "numpy":
        return numpy_kernels
    if name in ("compiled", "cython"):
        if _compiled is None:
            raise ImportError("compiled kernel lane is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


ACT_LINEAR = numpy_kernels.ACT_LINEAR
ACT_RELU = numpy_kernels.ACT_RELU
ACT_SIGMOID = numpy_kernels.ACT_SIGMOID

relu_fwd = _active.relu_fwd
sigmoid_fwd = _active.sigmoid_fwd
act_bwd = _active.act_bwd
pair_softmax_fwd = _active.pair_softmax_fwd
pair_softmax_bwd = _active.pair_softmax_bwd
masked_pair_ce = _active.masked_pair_ce
adam_update = _active.adam_update
