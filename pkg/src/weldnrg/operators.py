"""Truncated composition operator, welding Grunsky matrix and classical Grunsky blocks.

Basis ordering for every 2n x 2n assembly is ``(e_1..e_n, f_1..f_n)`` with
``e_k = e^{ikt}/sqrt k`` and ``f_k = e^{-ikt}/sqrt k``.

Column l of X holds the Fourier content of ``phi^l``, which sits near row
``l * Theta'``; a plain n x n section therefore drops mass from its lower
rows, Gram products like ``X X^*`` go wrong near the corner and the section
of X can be nearly singular even though X is invertible. The blocks are
built at a wider size (see :func:`working_order`), products are summed over
the full width and inverses go through the Gram matrices
``X^*X = I + Y^t conj(Y)`` and ``XX^* = I + YY^*``, which are bounded below
by the identity.

Note the column relation carries ``Y^t conj(Y)``: it is the upper-left block
of ``C_phi^{-1} C_phi = I``. It coincides with ``Y^*Y`` only when that
matrix is real, e.g. for maps commuting with complex conjugation.
"""
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg

from . import _accel
from .errors import InvalidParameterError, NumericFailure
from .harmonic import SobolevVector, grunsky_table_for
from .homeo import TWO_PI

COND_LIMIT = 1e12
HERMITIAN_TOL = 1e-8


def _distortion(h, grid_size):
    t = TWO_PI * np.arange(grid_size) / grid_size
    d = h.deriv(t, step=TWO_PI / grid_size)
    if not np.all(d > 0):
        raise NumericFailure("nonpositive derivative while sizing truncation", float(d.min()))
    return max(float(d.max()), 1.0 / float(d.min()))


def _widen(n, kappa, cap):
    if kappa <= 1.0 + 1e-12:
        return int(n)
    return int(max(n, min(int(np.ceil(1.5 * kappa * n)) + 8, cap)))


def working_order(h, order, grid_size):
    """Internal truncation L >= order for Gram sections and solves.

    ``L ~ 1.5 * kappa * order`` with ``kappa = max(max Theta', 1/min Theta')``
    sampled on the grid, capped at ``grid_size // 8``.
    """
    return _widen(order, _distortion(h, grid_size), grid_size // 8)


@dataclass
class CompositionMatrix:
    """Blocks X, Y of C_phi.

    ``X_ext``/``Y_ext`` are R x R sections with R >= L >= order: L is the
    order at which Gram matrices are inverted and R is wide enough that the
    row and column sums of every entry below L are resolved.
    """

    X_ext: np.ndarray
    Y_ext: np.ndarray
    order: int
    grid_size: int
    working: int = 0

    def __post_init__(self):
        if not self.working:
            self.working = self.X_ext.shape[0]

    @property
    def X(self):
        return self.X_ext[: self.order, : self.order]

    @property
    def Y(self):
        return self.Y_ext[: self.order, : self.order]

    @property
    def N(self):
        return self.order

    @property
    def working_order(self):
        return self.working

    @property
    def extent(self):
        return self.X_ext.shape[0]

    def assembled(self, extended=False):
        X, Y = (self.X_ext, self.Y_ext) if extended else (self.X, self.Y)
        return np.block([[X, Y], [Y.conj(), X.conj()]])

    def gram_rows(self, n=None):
        """Order-n sections of ``X X^*``, ``Y Y^*`` and ``X Y^t`` (row products)."""
        n = self.order if n is None else n
        Xr, Yr = self.X_ext[:n], self.Y_ext[:n]
        return Xr @ Xr.conj().T, Yr @ Yr.conj().T, Xr @ Yr.T

    def gram_cols(self, n=None):
        """Order-n sections of ``X^* X``, ``Y^* Y`` and ``X^* Y`` (column products)."""
        n = self.order if n is None else n
        Xc, Yc = self.X_ext[:, :n], self.Y_ext[:, :n]
        return Xc.conj().T @ Xc, Yc.conj().T @ Yc, Xc.conj().T @ Yc

    def col_gram(self):
        """Cholesky factor of ``X^* X = I + Y^t conj(Y)`` at the working order."""
        L = self.working
        Yc = self.Y_ext[:, :L]
        return _cho(np.eye(L) + Yc.T @ Yc.conj(), "I + Y^t conj(Y)")

    def row_gram(self):
        """Cholesky factor of ``X X^* = I + Y Y^*`` at the working order."""
        L = self.working
        Yr = self.Y_ext[:L]
        return _cho(np.eye(L) + Yr @ Yr.conj().T, "I + YY^*")

    def inverse_rows(self, n=None, width=None):
        """Rows 1..n of X^{-1} = (X^*X)^{-1} X^*, columns 1..width."""
        n = self.order if n is None else n
        width = self.working if width is None else width
        L = self.working
        rhs = self.X_ext[:width, :L].conj().T
        return scipy.linalg.cho_solve(self.col_gram(), rhs)[:n]


def _cho(A, what):
    A = 0.5 * (A + A.conj().T)
    try:
        return scipy.linalg.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"{what} is not positive definite") from exc


def build_composition(h, order, grid_size, working=None):
    """x_{k,l}, y_{k,l} = sqrt(k/l) * (Fourier coefficient k of phi^{l}, phi^{-l})."""
    n, m = int(order), int(grid_size)
    if n < 1:
        raise InvalidParameterError("order must be positive")
    if m < 8 * n:
        raise InvalidParameterError(f"grid size {m} < 8 * order {n}")
    kappa = _distortion(h, m)
    L = _widen(n, kappa, m // 8) if working is None else max(n, int(working))
    # rows must reach kappa * L; content of phi^R must not alias into |k| <= R
    R = L if working is None else L
    if working is None and kappa > 1.0 + 1e-12:
        alias_cap = int(m / (kappa + 1.0)) - 8
        R = max(L, min(int(np.ceil(1.2 * kappa * L)) + 8, alias_cap))
    t = TWO_PI * np.arange(m) / m
    theta = h(t)
    k = np.arange(1, R + 1)
    X = np.empty((R, R), dtype=complex)
    Y = np.empty((R, R), dtype=complex)
    workers = _accel.fft_workers()
    batch = 64
    for l0 in range(1, R + 1, batch):
        ls = np.arange(l0, min(l0 + batch, R + 1))
        powers = np.exp(1j * ls[:, None] * theta[None, :])
        f = scipy.fft.fft(powers, axis=1, workers=workers) / m
        scale = np.sqrt(k[:, None] / ls[None, :])
        X[:, ls - 1] = scale * f[:, k].T
        # Fourier coefficient k of phi^{-l} is conj(coefficient -k of phi^{l})
        Y[:, ls - 1] = scale * f[:, (-k) % m].T.conj()
    return CompositionMatrix(X, Y, n, m, L)


@dataclass
class GrunskyMatrix:
    """Blocks M_{k,l} = lambda_{k,-l} and N_{k,l} = lambda_{k,l}, k, l = 1..n."""

    Mblock: np.ndarray
    Nblock: np.ndarray
    order: int

    def full(self):
        M, N = self.Mblock, self.Nblock
        return np.block([[M, N], [N.conj(), M.conj()]])

    @property
    def N(self):
        return self.order

    def interior(self, size=None):
        """Interior 2s x 2s assembly, default s = order // 2."""
        s = self.order // 2 if size is None else size
        return GrunskyMatrix(self.Mblock[:s, :s], self.Nblock[:s, :s], s)


def _symmetrize(M, N, tol, what):
    herm = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    symm = float(np.max(np.abs(N - N.T), initial=0.0))
    if max(herm, symm) > tol:
        raise NumericFailure(
            f"{what}: M not Hermitian ({herm:.3g}) or N not symmetric ({symm:.3g})",
            residual=max(herm, symm),
        )
    return 0.5 * (M + M.conj().T), 0.5 * (N + N.T)


def grunsky_from_table(table, weight_sign=1.0):
    """Weighted blocks lambda_{k,l} = sqrt|kl| hat lambda_{k,l}."""
    n = table.order
    k = np.arange(1, n + 1)
    w = weight_sign * np.sqrt(np.outer(k, k))
    lh = table.lambda_hat
    M = w * lh[n + k[:, None], n - k[None, :]]
    N = w * lh[n + k[:, None], n + k[None, :]]
    M, N = _symmetrize(M, N, HERMITIAN_TOL, "welding Grunsky matrix")
    return GrunskyMatrix(M, N, n)


def grunsky_matrix(h, order, grid_size):
    return grunsky_from_table(grunsky_table_for(h, order, grid_size))


def grunsky_from_composition(c):
    """(I - C C^*) / 2 assembled from the extended blocks and cut to order n."""
    R, n = c.extent, c.order
    C = c.assembled(extended=True)
    idx = np.r_[np.arange(n), R + np.arange(n)]
    Cr = C[idx]
    G = 0.5 * (np.eye(2 * n) - Cr @ Cr.conj().T)
    M = G[:n, :n]
    N = G[:n, n:]
    M, N = _symmetrize(M, N, 1e-6, "composition Grunsky matrix")
    return GrunskyMatrix(M, N, n)


@dataclass
class ClassicalGrunskyBlocks:
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    B4: np.ndarray
    condition: float


def classical_blocks(c, cond_limit=COND_LIMIT, size=None):
    """B1 = Y conj(X)^{-1}, B2 = (X^*)^{-1}, B3 = conj(X)^{-1}, B4 = -Y^* (X^*)^{-1}.

    X^{-1} is obtained as ``(I + Y^t conj(Y))^{-1} X^*`` from a Cholesky solve
    with the positive definite column Gram matrix; no inverse is formed.
    Finite sections of X itself are not used for solves because they lose
    rank where Theta' is large. ``size`` (default: the order) sets the block
    size; products of blocks need ``size`` well above the rows inspected.
    """
    n = c.order if size is None else min(int(size), c.working_order)
    R, L = c.extent, c.working_order
    chol = c.col_gram()
    cond = float(np.linalg.cond(np.tril(chol[0]))) ** 2
    if not np.isfinite(cond) or cond > cond_limit:
        raise NumericFailure(f"X^*X is ill-conditioned (cond = {cond:.3g})", residual=cond)
    Xinv = scipy.linalg.cho_solve(chol, c.X_ext[:R, :L].conj().T)  # rows 1..L of X^{-1}
    B3 = Xinv[:n, :n].conj()
    B2 = Xinv[:n, :n].conj().T
    B1 = c.Y_ext[:n, :L] @ Xinv[:, :n].conj()
    B4 = -(Xinv[:n, :R] @ c.Y_ext[:R, :n]).conj().T
    return ClassicalGrunskyBlocks(B1, B2, B3, B4, cond)


def apply_grunsky(g, v):
    """Apply the Hermitian 2n x 2n assembly to canonical coordinates (plus, minus)."""
    n = g.order
    if not isinstance(v, SobolevVector):
        v = SobolevVector.from_stacked(np.asarray(v))
    out = g.full() @ v.stacked(n)
    return SobolevVector(out[:n], out[n:])


def interior_indices(n, size=None):
    s = n // 2 if size is None else size
    return np.r_[np.arange(s), n + np.arange(s)]


def interior_distance(A, B, n, size=None):
    """Frobenius distance between interior blocks of two 2n x 2n assemblies."""
    idx = interior_indices(n, size)
    return float(np.linalg.norm((A - B)[np.ix_(idx, idx)]))


def symplectic_residuals(c, size=None):
    """Interior Frobenius norms of the identities satisfied by X, Y.

    ``X*X-Y*Y-I`` is the column relation with ``Y^*Y`` in place of
    ``Y^t conj(Y)``; it is only valid when ``Y^*Y`` is real and is reported
    as a diagnostic.
    """
    s = c.order // 2 if size is None else size
    XX, YY, XYt = c.gram_rows()
    XsX, YsY, XsY = c.gram_cols()
    X, Y = c.X_ext, c.Y_ext
    n = c.order
    # X^* Y = Y^t conj(X): both sides need the full row range
    YtXb = Y[:, :n].T @ X[:, :n].conj()
    I = np.eye(n)
    cut = (slice(0, s), slice(0, s))
    return {
        "XX*-YY*-I": float(np.linalg.norm((XX - YY - I)[cut])),
        "X*X-Y^tYbar-I": float(np.linalg.norm((XsX - YsY.conj() - I)[cut])),
        "XY^t-YX^t": float(np.linalg.norm((XYt - XYt.T)[cut])),
        "X*Y-Y^tXbar": float(np.linalg.norm((XsY - YtXb)[cut])),
        "X*X-Y*Y-I": float(np.linalg.norm((XsX - YsY - I)[cut])),
    }


def classical_residuals(b, size=None):
    """Interior norms of B1B1*+B2B2*-I and B3B3*+B4B4*-I plus the operator norms.

    Build ``b`` wider than the interior (``classical_blocks(c, size=L)``):
    the products sum over the full block width.
    """
    n = b.B1.shape[0]
    s = n // 2 if size is None else size
    I = np.eye(s)
    r12 = b.B1[:s] @ b.B1[:s].conj().T + b.B2[:s] @ b.B2[:s].conj().T - I
    r34 = b.B3[:s] @ b.B3[:s].conj().T + b.B4[:s] @ b.B4[:s].conj().T - I
    return {
        "B1B1*+B2B2*-I": float(np.linalg.norm(r12)),
        "B3B3*+B4B4*-I": float(np.linalg.norm(r34)),
        "|B1|": float(np.linalg.norm(b.B1, 2)),
        "|B2|": float(np.linalg.norm(b.B2, 2)),
    }


def composition_rule_residual(h1, h2, order, grid_size):
    """Interior distance between Lambda_{h1 o h2} and C_{h2} Lambda_{h1} C_{h2}^* + Lambda_{h2}."""
    from .homeo import compose

    n, m = int(order), int(grid_size)
    direct = grunsky_matrix(compose(h1, h2), n, m).full()
    c2 = build_composition(h2, n, m)
    L = c2.working_order
    if m < 8 * L:
        # the conjugation needs Lambda_{h1} at order L
        L = m // 8
    lam1 = grunsky_matrix(h1, L, m).full()
    X, Y = c2.X_ext[:n, :L], c2.Y_ext[:n, :L]
    C = np.block([[X, Y], [Y.conj(), X.conj()]])
    rule = C @ lam1 @ C.conj().T + grunsky_matrix(h2, n, m).full()
    return interior_distance(direct, rule, n)
