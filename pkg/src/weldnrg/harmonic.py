"""Fourier coefficients on the circle and the torus.

The welding Grunsky coefficients are the double Fourier coefficients of

    log |(phi(e^{is}) - phi(e^{it})) / (e^{is} - e^{it})|

computed with the trapezoid rule on a uniform M x M grid (spectrally
accurate for smooth ``phi``). The grid is never held in memory at large M:
``grunsky_table`` streams row blocks through the jitted fill kernel and a
row FFT, keeping only the |l| <= N columns.
"""
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import _accel, kernels
from .errors import InvalidParameterError, NumericFailure
from .homeo import TWO_PI

SYMMETRY_TOL = 1e-9


@dataclass
class FourierSeries1D:
    coefficients: np.ndarray  # index -N..N
    order: int

    def __getitem__(self, k):
        if abs(k) > self.order:
            return 0j
        return self.coefficients[k + self.order]


@dataclass
class SobolevVector:
    """Coordinates in the canonical basis e^{ikt}/sqrt|k| of the homogeneous H^{1/2}.

    ``plus[k-1] = u_k`` and ``minus[k-1] = u_{-k}`` with ``u_k = sqrt|k| * hat u_k``.
    """

    plus: np.ndarray
    minus: np.ndarray

    def stacked(self, n):
        out = np.zeros(2 * n, dtype=complex)
        if len(self.plus) > n or len(self.minus) > n:
            raise InvalidParameterError(
                f"vector of length ({len(self.plus)}, {len(self.minus)}) exceeds order {n}"
            )
        out[: len(self.plus)] = self.plus
        out[n:n + len(self.minus)] = self.minus
        return out

    @classmethod
    def from_stacked(cls, v):
        n = len(v) // 2
        return cls(np.asarray(v[:n]), np.asarray(v[n:]))


def fft_coeffs(samples, order):
    """hat u_k = (1/M) sum_j u_j e^{-2 pi i k j / M} for |k| <= order."""
    samples = np.asarray(samples)
    m = samples.shape[-1]
    if m < 2 * order + 2:
        raise InvalidParameterError(f"{m} samples cannot resolve order {order}")
    f = scipy.fft.fft(samples, workers=_accel.fft_workers()) / m
    k = np.arange(-order, order + 1)
    return FourierSeries1D(f[k % m], order)


def project_plus(v):
    """Positive modes in canonical coordinates; mode zero and negative modes are dropped."""
    k = np.arange(1, v.order + 1)
    return SobolevVector(np.sqrt(k) * v.coefficients[v.order + k], np.zeros(0, dtype=complex))


def project_minus(v):
    k = np.arange(1, v.order + 1)
    return SobolevVector(np.zeros(0, dtype=complex), np.sqrt(k) * v.coefficients[v.order - k])


def h_half_norm(v):
    """Squared homogeneous H^{1/2} norm ``sum |u_k|^2`` over both signs."""
    return float(np.sum(np.abs(v.plus) ** 2) + np.sum(np.abs(v.minus) ** 2))


class LogRatioGrid:
    """Lazily evaluated M x M grid of the welding log-ratio integrand.

    Entry (i, j) is the integrand at ``(s_i, s_j)`` with ``s_i = 2 pi i / M``.
    The diagonal holds the limit ``log Theta'`` when the lift has an analytic
    derivative, otherwise the mean of the two neighbouring entries in the row.
    Use :meth:`rows` for blocks and :attr:`values` to materialise everything
    (M**2 doubles).
    """

    def __init__(self, h, grid_size):
        if grid_size < 16:
            raise InvalidParameterError("log-ratio grid needs at least 16 points")
        m = int(grid_size)
        t = TWO_PI * np.arange(m) / m
        theta = np.ascontiguousarray(h(t), dtype=float)
        gaps = np.diff(np.append(theta, theta[0] + TWO_PI))
        if not np.all(gaps > 0):
            i = int(np.argmin(gaps))
            raise NumericFailure(
                f"sampled homeomorphism values coincide or decrease near s = {t[i]:.6g}",
                residual=float(gaps[i]),
            )
        self.grid_size = m
        self.theta = theta
        self.logsin = kernels.log_sin_table(m)
        if h.derivative is not None:
            d = h.derivative(t)
            if not np.all(d > 0):
                raise NumericFailure("nonpositive derivative on grid", residual=float(d.min()))
            self.diag = np.log(d)
        else:
            nxt = np.roll(theta, -1)
            nxt[-1] += TWO_PI
            prv = np.roll(theta, 1)
            prv[0] -= TWO_PI
            lo = np.log(np.abs(np.sin(0.5 * (theta - prv)))) - self.logsin[1]
            hi = np.log(np.abs(np.sin(0.5 * (nxt - theta)))) - self.logsin[1]
            self.diag = 0.5 * (lo + hi)

    def rows(self, i0, i1, out=None):
        m = self.grid_size
        if out is None:
            out = np.empty((i1 - i0, m))
        kernels.fill_log_ratio_rows(self.theta, self.diag, self.logsin, i0, out)
        return out

    @property
    def values(self):
        return self.rows(0, self.grid_size)

    @property
    def M(self):
        return self.grid_size


def log_ratio_grid(h, grid_size):
    return LogRatioGrid(h, grid_size)


@dataclass
class GrunskyTable:
    """hat lambda_{k,l} for |k|, |l| <= order; row index k + order, column l + order."""

    lambda_hat: np.ndarray
    order: int
    grid_size: int

    def coeff(self, k, l):
        return self.lambda_hat[k + self.order, l + self.order]

    def weighted(self, k, l):
        return np.sqrt(abs(k * l)) * self.coeff(k, l)

    def symmetry_defect(self):
        lh = self.lambda_hat
        return max(
            float(np.max(np.abs(lh - lh.T))),
            float(np.max(np.abs(lh[::-1, ::-1] - lh.conj()))),
        )


def grunsky_table(grid, order, block_rows=256, check=True):
    """2D trapezoid/FFT evaluation of the welding Grunsky coefficients.

    Row blocks of the grid are transformed along ``t`` and truncated to
    ``0 <= l <= order`` (negative l follow from the real integrand); the
    resulting M x (order+1) array is transformed along ``s``.
    """
    m = grid.grid_size
    n = int(order)
    if n < 1:
        raise InvalidParameterError("order must be positive")
    if m < 8 * n:
        raise InvalidParameterError(f"grid size {m} < 8 * order {n} (aliasing margin)")
    workers = _accel.fft_workers()
    partial = np.empty((m, n + 1), dtype=complex)
    buf = np.empty((min(block_rows, m), m))
    for i0 in range(0, m, block_rows):
        i1 = min(i0 + block_rows, m)
        block = grid.rows(i0, i1, out=buf[: i1 - i0])
        if not np.isfinite(block).all():
            raise NumericFailure(f"non-finite log-ratio entries in rows {i0}..{i1 - 1}")
        partial[i0:i1] = scipy.fft.rfft(block, axis=1, workers=workers)[:, : n + 1]
    full = scipy.fft.fft(partial, axis=0, workers=workers) / (m * m)
    k = np.arange(-n, n + 1) % m
    pos = full[k, :]                      # l = 0..n
    # hat lambda_{k,-l} = conj(hat lambda_{-k,l}) for a real integrand
    neg = pos[::-1, 1:][:, ::-1].conj()   # l = -n..-1
    table = np.concatenate([neg, pos], axis=1)

    defect = max(
        float(np.max(np.abs(table - table.T))),
        float(np.max(np.abs(table[::-1, ::-1] - table.conj()))),
    )
    if check and defect > SYMMETRY_TOL:
        raise NumericFailure(f"Grunsky table symmetry violated by {defect:.3g}", residual=defect)
    table = 0.5 * (table + table.T)
    table = 0.5 * (table + table[::-1, ::-1].conj())
    return GrunskyTable(table, n, m)


def grunsky_table_for(h, order, grid_size):
    return grunsky_table(log_ratio_grid(h, grid_size), order)
