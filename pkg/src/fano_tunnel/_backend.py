"""Kernel backend selection.

Hot numeric kernels exist in two versions: a numba ``@njit`` one and a pure
numpy one.  The active backend is chosen once at import time from the
environment:

* ``FANO_TUNNEL_BACKEND=numpy``  force the pure-numpy path,
* ``FANO_TUNNEL_BACKEND=numba``  require numba (ImportError if missing),
* unset / ``auto``               use numba when importable, else numpy.

``FANO_TUNNEL_THREADS`` caps numba worker threads (0 or unset = automatic).
"""

import os

_choice = os.environ.get("FANO_TUNNEL_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy", ""):
    raise ValueError(
        "FANO_TUNNEL_BACKEND must be 'auto', 'numba' or 'numpy', got %r" % _choice
    )

HAVE_NUMBA = False
if _choice in ("auto", "numba", ""):
    try:
        import numba

        HAVE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise

USE_NUMBA = HAVE_NUMBA and _choice != "numpy"

if HAVE_NUMBA:
    _threads = os.environ.get("FANO_TUNNEL_THREADS", "0").strip()
    try:
        _n = int(_threads)
    except ValueError:
        _n = 0
    if _n > 0:
        numba.set_num_threads(min(_n, numba.config.NUMBA_NUM_THREADS))


def active_backend():
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return "numba" if USE_NUMBA else "numpy"
