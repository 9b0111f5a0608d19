"""Spectra of the welding Grunsky matrix and the Loewner energy formulas.

Four routes to the energy are evaluated independently:

* minor:     12 log det(I - M)              (table path)
* xx / yy:   12 log det(X X^*) = 12 log det(I + Y Y^*)   (composition path)
* det2:      -12 sum log(1 - delta_k^2)     (singular values of B1)
             -12 sum [log(1 + eta) - eta]   (eigenvalues of Lambda (I - Lambda)^{-1})
* Dirichlet: |(X^*)^{-1} (log psi')_+|^2 + |conj(X)^{-1} (log phi')_-|^2 + 4 log|(X^{-1})_{11}|

Every determinant is a log-det read off a Cholesky factor.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidParameterError, NumericFailure, WeldingError
from .harmonic import grunsky_table_for
from .homeo import invert, iterate, log_derivative_series
from .operators import (
    build_composition,
    classical_blocks,
    grunsky_from_table,
)

log = logging.getLogger(__name__)

VK_TOL = 1e-10


def hermitian_logdet(A):
    """log det of a Hermitian positive definite matrix via its Cholesky factor."""
    A = 0.5 * (A + A.conj().T)
    try:
        Lf = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        w = np.linalg.eigvalsh(A)
        raise NumericFailure("matrix is not positive definite", residual=float(w.min())) from exc
    return 2.0 * float(np.sum(np.log(np.diag(Lf).real)))


def grunsky_eigenvalues(g):
    """Eigenvalues of the 2n x 2n Hermitian assembly, descending."""
    A = g.full()
    A = 0.5 * (A + A.conj().T)
    try:
        w = np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"eigensolver failed: {exc}") from exc
    return w[::-1]


@dataclass
class FredholmSpectrum:
    deltas: np.ndarray
    source: str = "from_B1"

    def __len__(self):
        return len(self.deltas)


def fredholm_spectrum(b, source="from_B1"):
    """Singular values of B1, descending; all must lie in [0, 1)."""
    s = np.linalg.svd(b.B1, compute_uv=False)
    s = np.sort(s)[::-1]
    if s.size and s[0] >= 1.0:
        raise NumericFailure(f"B1 is not a strict contraction (delta_1 = {s[0]:.6g})", float(s[0]))
    return FredholmSpectrum(s, source)


@dataclass
class SchattenReport:
    p: float
    norm: float
    eigens: np.ndarray


def schatten_norm(g, p):
    if not p > 1:
        raise InvalidParameterError(f"Schatten exponent must exceed 1, got {p}")
    eig = grunsky_eigenvalues(g)
    sv = np.abs(eig)  # Hermitian: singular values are |eigenvalues|
    return SchattenReport(float(p), float(np.sum(sv ** p) ** (1.0 / p)), eig)


def energy_minor(g):
    """12 log det(I - M) with M the top-left block."""
    n = g.order
    return 12.0 * hermitian_logdet(np.eye(n) - g.Mblock)


def energy_xx(c):
    """(12 log det X X^*, 12 log det(I + Y Y^*)), each at order n."""
    XX, YY, _ = c.gram_rows()
    n = c.order
    return 12.0 * hermitian_logdet(XX), 12.0 * hermitian_logdet(np.eye(n) + YY)


def energy_det2(spectrum):
    d = np.asarray(spectrum.deltas if isinstance(spectrum, FredholmSpectrum) else spectrum)
    if d.size and d.max() >= 1.0:
        raise NumericFailure("delta_k >= 1", residual=float(d.max()))
    return float(-12.0 * np.sum(np.log1p(-d * d)))


def eta_spectrum(g):
    """Eigenvalues of Lambda (I - Lambda)^{-1}, descending."""
    A = g.full()
    A = 0.5 * (A + A.conj().T)
    I = np.eye(A.shape[0])
    try:
        B = scipy.linalg.solve(I - A, A, assume_a="her")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericFailure(f"I - Lambda is singular: {exc}") from exc
    B = 0.5 * (B + B.conj().T)  # Lambda commutes with (I - Lambda)^{-1}
    return np.linalg.eigvalsh(B)[::-1]


def energy_det2_via_eta(g):
    """-12 log prod (1 + eta_k) e^{-eta_k}."""
    eta = eta_spectrum(g)
    if eta.size and eta.min() <= -1.0:
        raise NumericFailure("eta <= -1, I - Lambda lost positivity", float(eta.min()))
    return float(-12.0 * np.sum(np.log1p(eta) - eta))


def _canonical(series, sign):
    """Canonical H^{1/2} coordinates (k = 1..L) of the +/- part of a log-derivative series."""
    L = series.order
    k = np.arange(1, L + 1)
    return np.sqrt(k) * series.coefficients[L + sign * k]


def energy_dirichlet(h, c, order=None, grid_size=None, inverse=None):
    """Dirichlet-integral form of the energy; returns (total, a1, a2, a3).

    a1 = |(X^*)^{-1} (log psi')_+|^2, a2 = |conj(X)^{-1} (log phi')_-|^2,
    a3 = 4 log |(X^{-1})_{1,1}|, with psi the inverse homeomorphism.
    The norms use ``|(X^*)^{-1} v|^2 = v^* (X^*X)^{-1} v`` and
    ``|X^{-1} w|^2 = w^* (XX^*)^{-1} w`` at the working order.
    """
    m = c.grid_size if grid_size is None else grid_size
    L = c.working_order
    psi = invert(h) if inverse is None else inverse
    lphi = log_derivative_series(h, L, max(m, 8 * L))
    lpsi = log_derivative_series(psi, L, max(m, 8 * L))
    v = _canonical(lpsi, +1)
    w = _canonical(lphi, -1).conj()  # |conj(X)^{-1} u| = |X^{-1} conj(u)|
    a1 = float(np.real(np.vdot(v, scipy.linalg.cho_solve(c.col_gram(), v))))
    a2 = float(np.real(np.vdot(w, scipy.linalg.cho_solve(c.row_gram(), w))))
    x11 = c.inverse_rows(1, 1)[0, 0]
    if x11 == 0:
        raise NumericFailure("(X^{-1})_{11} vanished")
    a3 = 4.0 * float(np.log(abs(x11)))
    return a1 + a2 + a3, a1, a2, a3


def velling_kirillov(b):
    """log |(B2)_{11}| = log |f'(0) / g'(infinity)|, which must be <= 0."""
    b11 = b.B2[0, 0]
    if b11 == 0:
        raise NumericFailure("(B2)_{11} vanished")
    v = float(np.log(abs(b11)))
    if v > VK_TOL:
        raise NumericFailure(f"Velling-Kirillov term positive ({v:.3g})", residual=v)
    return v


FORMULA_KEYS = ("il_minor", "il_xx", "il_yy", "il_det2_d", "il_det2_eta", "il_dirichlet")


@dataclass
class EnergyReport:
    il_minor: float = float("nan")
    il_xx: float = float("nan")
    il_yy: float = float("nan")
    il_det2_d: float = float("nan")
    il_det2_eta: float = float("nan")
    il_dirichlet: float = float("nan")
    dirichlet_addends: tuple = (float("nan"),) * 3
    velling_kirillov: float = float("nan")
    spread: float = float("nan")
    order: int = 0
    grid_size: int = 0
    homeo_spec: str = ""
    failures: dict = field(default_factory=dict)
    deltas: np.ndarray = field(default=None, repr=False)
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def partial(self):
        return bool(self.failures)

    def values(self):
        return {k: getattr(self, k) for k in FORMULA_KEYS}

    @property
    def energy(self):
        """Headline value: the composition-operator determinant, else the first finite formula."""
        for k in ("il_xx",) + FORMULA_KEYS:
            v = getattr(self, k)
            if np.isfinite(v):
                return v
        return float("nan")

    def to_dict(self):
        def num(x):
            return float(x) if np.isfinite(x) else None

        return {
            "dirichlet_addends": [num(a) for a in self.dirichlet_addends],
            "grid_size": int(self.grid_size),
            "homeo_spec": self.homeo_spec,
            "il_det2_d": num(self.il_det2_d),
            "il_det2_eta": num(self.il_det2_eta),
            "il_dirichlet": num(self.il_dirichlet),
            "il_minor": num(self.il_minor),
            "il_xx": num(self.il_xx),
            "il_yy": num(self.il_yy),
            "order": int(self.order),
            "spread": num(self.spread),
            "velling_kirillov": num(self.velling_kirillov),
        }


def _spread(values):
    v = np.array([x for x in values if np.isfinite(x)])
    if v.size == 0:
        return float("nan")
    return float(v.max() - v.min())


def energy_report(h, order=64, grid_size=8192, spec=None, table=None, composition=None,
                  weight_sign=1.0):
    """Run every energy formula; a failing path is recorded, never dropped.

    ``weight_sign`` multiplies the table weights and exists for mutation tests.
    """
    rep = EnergyReport(order=int(order), grid_size=int(grid_size),
                       homeo_spec=spec if spec is not None else h.label)

    def attempt(name, fn):
        try:
            return fn()
        except WeldingError as exc:
            log.warning("%s failed: %s", name, exc)
            rep.failures[name] = str(exc)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, FloatingPointError) as exc:
            log.warning("%s failed: %s", name, exc)
            rep.failures[name] = f"{type(exc).__name__}: {exc}"
        return None

    g = attempt("grunsky_table", lambda: grunsky_from_table(
        table if table is not None else grunsky_table_for(h, order, grid_size), weight_sign))
    c = composition if composition is not None else attempt(
        "composition", lambda: build_composition(h, order, grid_size))

    if g is not None:
        v = attempt("il_minor", lambda: energy_minor(g))
        if v is not None:
            rep.il_minor = v
        v = attempt("il_det2_eta", lambda: energy_det2_via_eta(g))
        if v is not None:
            rep.il_det2_eta = v
        rep.eigenvalues = attempt("eigenvalues", lambda: grunsky_eigenvalues(g))
    if c is not None:
        v = attempt("il_xx", lambda: energy_xx(c))
        if v is not None:
            rep.il_xx, rep.il_yy = v
        b = attempt("classical_blocks", lambda: classical_blocks(c))
        if b is not None:
            s = attempt("fredholm_spectrum", lambda: fredholm_spectrum(b))
            if s is not None:
                rep.deltas = s.deltas
                rep.il_det2_d = energy_det2(s)
            v = attempt("velling_kirillov", lambda: velling_kirillov(b))
            if v is not None:
                rep.velling_kirillov = v
        v = attempt("il_dirichlet", lambda: energy_dirichlet(h, c, order, grid_size))
        if v is not None:
            rep.il_dirichlet = v[0]
            rep.dirichlet_addends = tuple(v[1:])
    rep.spread = _spread(rep.values().values())
    if any(not np.isfinite(x) for x in rep.values().values()) and not rep.failures:
        rep.failures["nonfinite"] = "a formula produced a non-finite value"
    return rep


@dataclass
class IterateEnergy:
    n: int
    energy: float
    spread: float
    bound: float = float("nan")
    passed: bool = True
    warning: str = ""


def growth_bound(K, n, norm_sq_sum):
    """((K^{n/2} - 1) / (K^{1/2} - 1))^2 * (|log psi'|^2 + |log phi'|^2)."""
    if not K > 1:
        raise InvalidParameterError("distortion K must exceed 1")
    return ((K ** (n / 2.0) - 1.0) / (np.sqrt(K) - 1.0)) ** 2 * norm_sq_sum


def iterate_energy(h, n_max, K_user=None, order=64, grid_size=8192, spread_limit=1e-3):
    """Energies of the iterates phi, phi o phi, ... with the optional growth bound."""
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    norm_sq = None
    if K_user is not None:
        norm_sq = (log_derivative_series(h, order, grid_size).h_half_norm_sq()
                   + log_derivative_series(invert(h), order, grid_size).h_half_norm_sq())
    out = []
    for n in range(1, n_max + 1):
        rep = energy_report(iterate(h, n), order, grid_size)
        item = IterateEnergy(n, rep.energy, rep.spread)
        if rep.partial or not rep.spread <= spread_limit * max(1.0, abs(rep.energy)):
            item.warning = f"iterate {n} not resolved at N={order}, M={grid_size}"
            log.warning(item.warning)
        if K_user is not None:
            item.bound = float(growth_bound(K_user, n, norm_sq))
            item.passed = bool(item.energy <= item.bound)
        out.append(item)
    return out
