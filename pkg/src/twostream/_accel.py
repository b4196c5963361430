"""Backend selection for the compiled kernels.

``TWOSTREAM_BACKEND=numpy`` forces the vectorized fallback. Any other value
(or no value) uses numba when it can be imported.
"""
import os

BACKEND_ENV = "TWOSTREAM_BACKEND"


def requested_backend():
    return os.environ.get(BACKEND_ENV, "numba").strip().lower()


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend():
    if requested_backend() == "numpy" or not numba_available():
        return "numpy"
    return "numba"
