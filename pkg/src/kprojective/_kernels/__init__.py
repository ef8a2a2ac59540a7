"""Hot kernels with a compiled fast path.

The Cython extension ``_ckernels`` is used when it was built; otherwise, or
when ``KPROJ_PURE_PYTHON`` is set in the environment, the numpy versions in
``_pykernels`` are used.  Both expose the same functions.
"""

import os

from . import _pykernels as python

if os.environ.get("KPROJ_PURE_PYTHON"):
    compiled = None
else:
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled if compiled is not None else python
BACKEND = active.BACKEND

qmatmul = active.qmatmul
qmatvec = active.qmatvec
min_abs_pairing = active.min_abs_pairing
canonicalize_rep = active.canonicalize_rep
chordal = active.chordal
normalized_orbit = active.normalized_orbit
power_iterate = active.power_iterate
abs_pairing = python.abs_pairing

__all__ = [
    "BACKEND", "compiled", "python", "qmatmul", "qmatvec", "min_abs_pairing",
    "abs_pairing", "canonicalize_rep", "chordal", "normalized_orbit", "power_iterate",
]
