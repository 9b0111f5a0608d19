"""Inner loops over the M x M welding log-ratio grid.

Each kernel has a numba version and a numpy version with identical
semantics; ``fill_log_ratio_rows`` dispatches according to
``weldnrg._accel.USE_JIT``. The numpy path materialises (rows x M)
temporaries, the jitted path does not.
"""
import math

import numpy as np

from . import _accel


def log_sin_table(m):
    """``log|sin(pi d / m)|`` for d = 0..m-1, mirrored so entry d equals entry m-d.

    Entry 0 is set to 0; callers never read it off the diagonal.
    """
    d = np.arange(m // 2 + 1)
    half = np.log(np.abs(np.sin(np.pi * d[1:] / m)))
    out = np.zeros(m)
    out[1:m // 2 + 1] = half
    out[m - np.arange(1, (m + 1) // 2)] = half[: (m + 1) // 2 - 1]
    return out


def log_ratio_rows_numpy(theta, diag, logsin, i0, out):
    rows, m = out.shape
    i = np.arange(i0, i0 + rows)
    with np.errstate(divide="ignore"):
        np.log(np.abs(np.sin(0.5 * (theta[i, None] - theta[None, :]))), out=out)
    out -= logsin[(i[:, None] - np.arange(m)[None, :]) % m]
    out[np.arange(rows), i] = diag[i]
    return out


if _accel.HAVE_NUMBA:
    from numba import njit, prange

    @njit(cache=True, parallel=True, fastmath=False)
    def _log_ratio_rows_jit(theta, diag, logsin, i0, out):
        rows, m = out.shape
        for r in prange(rows):
            i = i0 + r
            ti = theta[i]
            for j in range(m):
                if j == i:
                    out[r, j] = diag[i]
                else:
                    d = i - j
                    if d < 0:
                        d += m
                    out[r, j] = math.log(abs(math.sin(0.5 * (ti - theta[j])))) - logsin[d]
        return out

else:  # pragma: no cover
    _log_ratio_rows_jit = None


def fill_log_ratio_rows(theta, diag, logsin, i0, out, use_jit=None):
    """Write rows ``i0 .. i0+len(out)-1`` of the log-ratio grid into ``out``.

    Off-diagonal entry (i, j) is ``log|sin((theta_i-theta_j)/2)| - log|sin((s_i-s_j)/2)|``,
    i.e. ``log|(phi(e^{is_i}) - phi(e^{is_j})) / (e^{is_i} - e^{is_j})|``.
    """
    if use_jit is None:
        use_jit = _accel.USE_JIT
    if use_jit and _log_ratio_rows_jit is not None:
        return _log_ratio_rows_jit(theta, diag, logsin, np.int64(i0), out)
    return log_ratio_rows_numpy(theta, diag, logsin, i0, out)
