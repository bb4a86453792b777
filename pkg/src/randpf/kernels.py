"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy versions in ``_pykernels`` are. Setting ``RANDPF_BACKEND=python`` forces
the fallback.
"""
import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if os.environ.get("RANDPF_BACKEND", "").lower() == "python" or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = BACKENDS[BACKEND]

apply_pauli_steps = _impl.apply_pauli_steps
fwht = _impl.fwht
jacobi_eigh = _impl.jacobi_eigh
round_robin = _pykernels.round_robin
