"""Backend selection for the hot kernels.

``WELDNRG_DISABLE_JIT=1`` forces the pure-numpy path even when numba is
importable. ``WELDNRG_THREADS`` caps numba and FFT worker threads.
"""
import os
import warnings

_FALSY = {"", "0", "false", "no", "off"}


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() not in _FALSY


try:
    import numba

    HAVE_NUMBA = True
    # an old system TBB only triggers a fallback to another threading layer
    warnings.filterwarnings("ignore", message=".*TBB threading layer.*")
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and not _env_flag("WELDNRG_DISABLE_JIT")


def thread_cap():
    """Requested worker count, or ``None`` when the environment sets no cap."""
    raw = os.environ.get("WELDNRG_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        return None
    return max(1, n)


def fft_workers():
    n = thread_cap()
    return n if n is not None else 1


def apply_thread_cap():
    n = thread_cap()
    if n is not None and HAVE_NUMBA:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
