"""Kernel backend selection.

Imports the compiled Cython kernels when the extension built, otherwise
the NumPy reference versions. `EFIMOV3B_KERNELS=py` in the environment
forces the fallback (used by the benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("EFIMOV3B_KERNELS", "").lower() in {"py", "numpy", "fallback"}:
    _impl = _kernels_py
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "numpy"

jacobi_table = _impl.jacobi_table
channel_values = _impl.channel_values
zero_energy_sweep = _impl.zero_energy_sweep

__all__ = ["jacobi_table", "channel_values", "zero_energy_sweep", "BACKEND"]
