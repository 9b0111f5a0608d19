"""Orientation-preserving circle homeomorphisms represented by their lifts.

A homeomorphism ``phi`` of the unit circle is stored as a strictly
increasing lift ``Theta`` with ``Theta(t + 2 pi) = Theta(t) + 2 pi`` so that
``phi(e^{it}) = e^{i Theta(t)}``. Lifts are vectorised callables on numpy
arrays of angles (radians).
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError, NumericFailure

TWO_PI = 2.0 * np.pi
INVERSION_TOL = 1e-13


@dataclass(frozen=True)
class MoebiusParams:
    a: complex = 0j
    beta: float = 0.0

    def __post_init__(self):
        if not abs(self.a) < 1.0:
            raise InvalidParameterError(f"Moebius parameter needs |a| < 1, got |a| = {abs(self.a)}")


@dataclass(frozen=True)
class TrigParams:
    """Terms ``(j, a_j, rho_j)`` of ``Theta(t) = t + sum a_j sin(j t + rho_j)``."""

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((int(j), float(a), float(r)) for j, a, r in self.terms)
        object.__setattr__(self, "terms", terms)
        for j, _, _ in terms:
            if j < 1:
                raise InvalidParameterError(f"trig frequency must be a positive integer, got {j}")
        total = sum(j * abs(a) for j, a, _ in terms)
        if total >= 1.0:
            raise InvalidParameterError(
                f"trig amplitudes need sum j*|a_j| < 1 for monotonicity, got {total}"
            )


@dataclass(frozen=True)
class CircleHomeo:
    lift: Callable
    derivative: Optional[Callable] = None
    kind: str = "sampled"
    label: str = ""
    params: object = field(default=None, compare=False)

    def __call__(self, theta):
        return self.lift(np.asarray(theta, dtype=float))

    def on_circle(self, theta):
        return np.exp(1j * self(theta))

    def deriv(self, theta, step=None):
        """Derivative of the lift; centred differences when no analytic form is set."""
        theta = np.asarray(theta, dtype=float)
        if self.derivative is not None:
            return self.derivative(theta)
        h = step if step is not None else TWO_PI / 4096
        return (self.lift(theta + h) - self.lift(theta - h)) / (2.0 * h)

    def __repr__(self):
        return f"CircleHomeo({self.label or self.kind})"


def moebius(params):
    """z -> e^{i beta} (z - a) / (1 - conj(a) z) restricted to the circle."""
    if not isinstance(params, MoebiusParams):
        params = MoebiusParams(*params)
    a, beta = complex(params.a), float(params.beta)

    # (e^{it} - a)/(1 - conj(a) e^{it}) = e^{it} w / conj(w) with w = 1 - a e^{-it},
    # and Re w > 0, so 2 arg(w) is a continuous branch.
    def lift(t):
        w = 1.0 - a * np.exp(-1j * t)
        return t + beta + 2.0 * np.arctan2(w.imag, w.real)

    def derivative(t):
        return (1.0 - abs(a) ** 2) / np.abs(1.0 - np.conj(a) * np.exp(1j * t)) ** 2

    if a == 0:
        label = "identity" if beta == 0 else f"rot:beta={beta!r}"
    else:
        label = f"mobius:a={_fmt_complex(a)},beta={beta!r}"
    return CircleHomeo(lift, derivative, "moebius", label, params)


def identity():
    return moebius(MoebiusParams(0j, 0.0))


def rotation(beta):
    return moebius(MoebiusParams(0j, float(beta)))


def trig_diffeo(params):
    """Theta(t) = t + sum_j a_j sin(j t + rho_j), requiring sum j |a_j| < 1."""
    if not isinstance(params, TrigParams):
        params = TrigParams(tuple(params))
    terms = params.terms
    js = np.array([j for j, _, _ in terms], dtype=float)
    amps = np.array([a for _, a, _ in terms])
    rhos = np.array([r for _, _, r in terms])

    def lift(t):
        t = np.asarray(t, dtype=float)
        out = t.copy()
        for j, a, r in zip(js, amps, rhos):
            out += a * np.sin(j * t + r)
        return out

    def derivative(t):
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        for j, a, r in zip(js, amps, rhos):
            out += j * a * np.cos(j * t + r)
        return out

    if not terms:
        label = "identity"
    else:
        label = "trig:" + ",".join(
            f"j{j}={a!r}" + (f"@{r!r}" if r != 0 else "") for j, a, r in terms
        )
    return CircleHomeo(lift, derivative, "trig", label, params)


def compose(h1, h2):
    """The homeomorphism ``h1 o h2`` (apply ``h2`` first)."""

    def lift(t):
        return h1.lift(h2.lift(t))

    derivative = None
    if h1.derivative is not None and h2.derivative is not None:
        def derivative(t):
            return h1.derivative(h2.lift(t)) * h2.derivative(t)

    return CircleHomeo(lift, derivative, "composed", f"comp({h1.label};{h2.label})", (h1, h2))


def iterate(h, n):
    """n-fold self-composition; ``iterate(h, 1)`` is ``h`` itself."""
    if n < 1:
        raise InvalidParameterError("iteration count must be >= 1")
    out = h
    for _ in range(n - 1):
        out = compose(h, out)
    return out


def solve_lift(h, y, tol=INVERSION_TOL, max_iter=200):
    """Solve ``h(x) = y`` elementwise by bracketing plus safeguarded Newton.

    Falls back to bisection whenever the Newton step leaves the bracket or
    no derivative is available.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    shape = y.shape
    y = y.ravel()
    has_deriv = h.derivative is not None
    x0 = y - (h.lift(y) - y)
    lo = x0.copy()
    hi = x0.copy()
    step = np.full_like(y, 0.5)
    for _ in range(80):
        bad = h.lift(lo) > y
        if not bad.any():
            break
        lo[bad] -= step[bad]
        step[bad] *= 2.0
    step[:] = 0.5
    for _ in range(80):
        bad = h.lift(hi) < y
        if not bad.any():
            break
        hi[bad] += step[bad]
        step[bad] *= 2.0

    x = x0.clip(lo, hi)
    prev_f = np.full_like(y, np.inf)
    active = np.arange(y.size)  # converged entries are frozen
    for _ in range(max_iter):
        xa, ya = x[active], y[active]
        f = h.lift(xa) - ya
        la = np.where(f < 0, xa, lo[active])
        ha = np.where(f > 0, xa, hi[active])
        lo[active], hi[active] = la, ha
        mid = 0.5 * (la + ha)
        if has_deriv:
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = xa - f / h.derivative(xa)
            # bisect when Newton leaves the open bracket or |f| fails to halve (2-cycles)
            af = np.abs(f)
            stalled = (af > 0.5 * prev_f[active]) & ~(np.abs(xn - xa) <= tol)
            prev_f[active] = np.where(stalled, np.inf, af)
            outside = ~((xn > la) & (xn < ha)) | ~np.isfinite(xn) | stalled
            xn = np.where(outside, mid, xn)
        else:
            xn = mid
        xn = np.where(f == 0, xa, xn)
        done = (np.abs(xn - xa) <= tol) | (ha - la <= tol)
        x[active] = xn
        active = active[~done]
        if active.size == 0:
            break
    else:
        worst = float(np.max(np.abs(h.lift(x[active]) - y[active])))
        raise NumericFailure(
            f"lift inversion did not converge in {max_iter} iterations", residual=worst
        )
    return x.reshape(shape)


def invert(h, tol=INVERSION_TOL):
    """Numerical inverse homeomorphism; derivative ``1/(Theta' o Theta^{-1})``."""

    def lift(t):
        t = np.asarray(t, dtype=float)
        return solve_lift(h, t.ravel(), tol).reshape(t.shape)

    derivative = None
    if h.derivative is not None:
        def derivative(t):
            return 1.0 / h.derivative(lift(t))

    return CircleHomeo(lift, derivative, "inverse", f"inv({h.label})", h)


def from_samples(values):
    """Homeomorphism from lift samples ``values[i] = Theta(2 pi i / n)``.

    Between nodes the lift is linearly interpolated; no derivative is attached,
    so consumers fall back to centred differences. Nothing is validated here:
    use :func:`validate` to check monotonicity.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    nodes = TWO_PI * np.arange(n) / n
    periodic = values - nodes

    def lift(t):
        t = np.asarray(t, dtype=float)
        return t + np.interp(t, nodes, periodic, period=TWO_PI)

    return CircleHomeo(lift, None, "sampled", f"sampled[{n}]", values)


@dataclass
class ValidationReport:
    passed: bool
    grid_size: int
    min_increment: float
    min_derivative: float
    max_periodicity_error: float
    violations: list

    def __bool__(self):
        return self.passed


def validate(h, grid_size=1024, periodicity_tol=1e-12):
    """Check monotonicity, degree one and positivity of the derivative on a grid."""
    if grid_size < 8:
        raise InvalidParameterError("validation grid needs at least 8 points")
    t = TWO_PI * np.arange(grid_size + 1) / grid_size
    violations = []
    vals = h(t)
    inc = np.diff(vals)
    bad = np.flatnonzero(~(inc > 0))
    for i in bad[:10]:
        violations.append(f"lift not increasing on [{t[i]:.6g}, {t[i + 1]:.6g}] (index {i})")

    if h.kind == "sampled":
        samples = np.asarray(h.params, dtype=float)
        raw = np.diff(np.append(samples, samples[0] + TWO_PI))
        for i in np.flatnonzero(~(raw > 0))[:10]:
            violations.append(
                f"sample {i} -> {(i + 1) % samples.size} not increasing "
                f"(theta = {TWO_PI * i / samples.size:.6g})"
            )
        inc = np.minimum(inc.min(), raw.min()) if raw.size else inc

    per = np.abs(h(t[:-1] + TWO_PI) - vals[:-1] - TWO_PI)
    max_per = float(per.max())
    if max_per > periodicity_tol:
        i = int(per.argmax())
        violations.append(f"periodicity error {max_per:.3g} at theta = {t[i]:.6g}")

    d = h.deriv(t[:-1], step=TWO_PI / grid_size)
    min_d = float(np.min(d))
    if not min_d > 0:
        i = int(np.argmin(d))
        violations.append(f"derivative {min_d:.3g} <= 0 at theta = {t[i]:.6g}")

    return ValidationReport(
        passed=not violations,
        grid_size=grid_size,
        min_increment=float(np.min(inc)),
        min_derivative=min_d,
        max_periodicity_error=max_per,
        violations=violations,
    )


@dataclass
class LogDerivativeSeries:
    """Fourier coefficients of ``log phi'(e^{it}) = log Theta'(t) + i (Theta(t) - t)``.

    ``real_coeffs`` and ``imag_coeffs`` are the coefficient arrays (index -N..N)
    of the two real parts; ``coefficients`` combines them. The imaginary zero
    mode depends on the choice of branch and is kept only for reporting.
    """

    real_coeffs: np.ndarray
    imag_coeffs: np.ndarray
    order: int

    @property
    def coefficients(self):
        return self.real_coeffs + 1j * self.imag_coeffs

    @property
    def imag_zero_mode(self):
        return float(self.imag_coeffs[self.order].real)

    def __getitem__(self, k):
        return self.coefficients[k + self.order]

    def h_half_norm_sq(self):
        """Squared homogeneous H^{1/2} norm ``sum_{k != 0} |k| |c_k|^2``."""
        k = np.abs(np.arange(-self.order, self.order + 1))
        return float(np.sum(k * np.abs(self.coefficients) ** 2))


def log_derivative_series(h, order, grid_size):
    """Sample ``log phi'`` on a uniform grid of ``grid_size`` points and FFT it."""
    from .harmonic import fft_coeffs

    if grid_size < 8 * order:
        raise InvalidParameterError(f"grid size {grid_size} < 8 * order {order}")
    t = TWO_PI * np.arange(grid_size) / grid_size
    d = h.deriv(t, step=TWO_PI / grid_size)
    if not np.all(d > 0):
        raise NumericFailure("nonpositive sampled derivative", residual=float(d.min()))
    re = fft_coeffs(np.log(d), order)
    im = fft_coeffs(h(t) - t, order)
    return LogDerivativeSeries(re.coefficients, im.coefficients, order)


# ---------------------------------------------------------------------------
# expression language: identity | rot:beta=x | mobius:a=re+imi,beta=x
#                      | trig:j1=a[@rho],j2=... | inv(e) | comp(e;e)
# ---------------------------------------------------------------------------

def _fmt_complex(a):
    a = complex(a)
    sign = "+" if a.imag >= 0 else "-"
    return f"{a.real!r}{sign}{abs(a.imag)!r}i"


class _Parser:
    def __init__(self, text):
        self.src = text
        # drop whitespace but remember original offsets for error messages
        self.chars = [(c, i) for i, c in enumerate(text) if not c.isspace()]
        self.pos = 0

    def _offset(self):
        if self.pos < len(self.chars):
            return self.chars[self.pos][1]
        return len(self.src)

    def error(self, msg):
        from .errors import DSLParseError

        return DSLParseError(msg, self.src, self._offset())

    def peek(self):
        # sentinel at the end so membership tests like `in "+-"` stay false
        return self.chars[self.pos][0] if self.pos < len(self.chars) else "\0"

    def take(self, s):
        n = len(s)
        got = "".join(c for c, _ in self.chars[self.pos:self.pos + n])
        if got != s:
            raise self.error(f"expected {s!r}")
        self.pos += n

    def accept(self, s):
        n = len(s)
        got = "".join(c for c, _ in self.chars[self.pos:self.pos + n])
        if got == s:
            self.pos += n
            return True
        return False

    def ident(self):
        start = self.pos
        while self.peek().isalpha() or (self.pos > start and self.peek().isdigit()):
            self.pos += 1
        if self.pos == start:
            raise self.error("expected a name")
        return "".join(c for c, _ in self.chars[start:self.pos])

    def number(self):
        start = self.pos
        if self.peek() in "+-":
            self.pos += 1
        digits = 0
        while self.peek().isdigit():
            self.pos += 1
            digits += 1
        if self.peek() == ".":
            self.pos += 1
            while self.peek().isdigit():
                self.pos += 1
                digits += 1
        if digits == 0:
            self.pos = start
            raise self.error("expected a number")
        if self.peek() in "eE":
            save = self.pos
            self.pos += 1
            if self.peek() in "+-":
                self.pos += 1
            if not self.peek().isdigit():
                self.pos = save
            while self.peek().isdigit():
                self.pos += 1
        return float("".join(c for c, _ in self.chars[start:self.pos]))

    def complex_number(self):
        re = self.number()
        if self.accept("i"):
            return complex(0.0, re)
        if self.peek() in "+-":
            im = self.number()
            self.take("i")
            return complex(re, im)
        return complex(re, 0.0)

    def expr(self):
        start = self.pos
        name = self.ident()
        if name == "identity":
            return identity()
        if name == "inv":
            self.take("(")
            inner = self.expr()
            self.take(")")
            return invert(inner)
        if name == "comp":
            self.take("(")
            a = self.expr()
            self.take(";")
            b = self.expr()
            self.take(")")
            return compose(a, b)
        if name == "rot":
            self.take(":")
            kw = self.keyword()
            if kw != "beta":
                raise self.error("rot expects beta=<float>")
            return rotation(self.number())
        if name == "mobius":
            self.take(":")
            a, beta, seen = None, 0.0, set()
            while True:
                kw = self.keyword()
                if kw in seen:
                    raise self.error(f"duplicate key {kw!r}")
                seen.add(kw)
                if kw == "a":
                    a = self.complex_number()
                elif kw == "beta":
                    beta = self.number()
                else:
                    raise self.error(f"unknown mobius key {kw!r}")
                if not self.accept(","):
                    break
            if a is None:
                raise self.error("mobius needs a=<complex>")
            try:
                return moebius(MoebiusParams(a, beta))
            except InvalidParameterError as exc:
                raise self.error(str(exc)) from None
        if name == "trig":
            self.take(":")
            terms = []
            while True:
                key_start = self.pos
                kw = self.keyword()
                if len(kw) < 2 or kw[0] != "j" or not kw[1:].isdigit():
                    self.pos = key_start
                    raise self.error(f"trig keys look like j<int>, got {kw!r}")
                amp = self.number()
                rho = self.number() if self.accept("@") else 0.0
                terms.append((int(kw[1:]), amp, rho))
                if not self.accept(","):
                    break
            try:
                return trig_diffeo(TrigParams(tuple(terms)))
            except InvalidParameterError as exc:
                raise self.error(str(exc)) from None
        self.pos = start
        raise self.error(f"unknown homeomorphism {name!r}")

    def keyword(self):
        kw = self.ident()
        self.take("=")
        return kw


def parse_homeo(text):
    """Parse an expression such as ``comp(mobius:a=0.3+0.1i,beta=0;trig:j2=0.2@1)``."""
    p = _Parser(text)
    if not p.chars:
        raise p.error("empty expression")
    h = p.expr()
    if p.pos != len(p.chars):
        raise p.error("unexpected trailing input")
    return h
