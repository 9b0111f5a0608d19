"""Named invariant checks at reference resolution, used by ``weldnrg selftest``."""
import logging
from dataclasses import dataclass

import numpy as np

from .harmonic import grunsky_table_for
from .homeo import TWO_PI, invert, parse_homeo, rotation, validate
from .operators import (
    build_composition,
    classical_blocks,
    classical_residuals,
    composition_rule_residual,
    grunsky_from_composition,
    grunsky_from_table,
    interior_distance,
    symplectic_residuals,
)
from .spectral import (
    energy_report,
    eta_spectrum,
    fredholm_spectrum,
    grunsky_eigenvalues,
)

log = logging.getLogger(__name__)

SMOOTH_CASES = (
    "trig:j1=0.2",
    "trig:j2=0.15@0.4,j3=0.05",
    "comp(mobius:a=0.2+0.1i;comp(trig:j2=0.1@1.1;mobius:a=-0.15i,beta=0.3))",
)
MOEBIUS_CASE = "mobius:a=0.3+0.2i,beta=0.5"


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    relation: str = "<"

    def row(self, width):
        flag = "PASS" if self.passed else "FAIL"
        return f"{self.name:<{width}}  {self.value: .3e} {self.relation} {self.tol:.1e}  {flag}"


def _upper(name, value, tol):
    value = float(value)
    return Check(name, value, tol, bool(np.isfinite(value) and value < tol))


def _lower(name, value, tol):
    value = float(value)
    return Check(name, value, tol, bool(np.isfinite(value) and value > tol), ">")


def quadrature_coefficient(h, k, l, grid_size=600):
    """Direct trapezoid sum for one hat lambda_{k,l}, independent of the FFT path."""
    m = grid_size
    s = TWO_PI * np.arange(m) / m
    z = np.exp(1j * s)
    w = h.on_circle(s)
    num = np.abs(w[:, None] - w[None, :])
    den = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(den, 1.0)
    np.fill_diagonal(num, 1.0)
    vals = np.log(num / den)
    np.fill_diagonal(vals, np.log(h.deriv(s, step=TWO_PI / m)))
    ek = np.exp(-1j * k * s)
    el = np.exp(-1j * l * s)
    return complex(ek @ vals @ el) / (m * m)


def _case_checks(spec, order, grid, weight_sign):
    h = parse_homeo(spec)
    tag = spec if len(spec) <= 24 else spec[:21] + "..."
    out = [Check(f"[{tag}] validate", 0.0, 0.0, bool(validate(h, 1024)), "=")]
    t = TWO_PI * np.arange(256) / 256
    out.append(_upper(f"[{tag}] inverse round trip", np.max(np.abs(invert(h)(h(t)) - t)), 1e-12))

    table = grunsky_table_for(h, order, grid)
    g = grunsky_from_table(table, weight_sign)
    c = build_composition(h, order, grid)
    gc = grunsky_from_composition(c)
    out.append(_upper(f"[{tag}] Lambda = (I - C C^*)/2",
                      interior_distance(g.full(), gc.full(), order), 1e-5))
    for name, v in symplectic_residuals(c).items():
        if name != "X*X-Y*Y-I":
            out.append(_upper(f"[{tag}] {name}", v, 1e-5))
    b = classical_blocks(c)
    cr = classical_residuals(classical_blocks(c, size=c.working_order), order // 2)
    out.append(_upper(f"[{tag}] B1B1*+B2B2*-I", cr["B1B1*+B2B2*-I"], 1e-5))
    out.append(_upper(f"[{tag}] B3B3*+B4B4*-I", cr["B3B3*+B4B4*-I"], 1e-5))

    eig = grunsky_eigenvalues(g)
    out.append(_upper(f"[{tag}] max eig Lambda", eig[0], 0.5))
    out.append(_lower(f"[{tag}] min eig (I - Lambda)", 1.0 - eig[0], 0.5))
    d = fredholm_spectrum(b).deltas
    out.append(_upper(f"[{tag}] delta_1", d[0], 1.0))
    eta = np.sort(np.abs(eta_spectrum(g)))
    dd = np.sort(np.concatenate([d, d]))
    out.append(_upper(f"[{tag}] |eta| vs +-delta", np.max(np.abs(eta - dd)), 1e-5))

    rep = energy_report(h, order, grid, spec=spec, table=table, composition=c,
                        weight_sign=weight_sign)
    vals = np.array(list(rep.values().values()))
    scale = max(1.0, float(np.nanmax(np.abs(vals))))
    spread = rep.spread if not rep.partial else float("inf")
    out.append(_upper(f"[{tag}] energy spread / max(1, E)", spread / scale, 1e-3))
    out.append(_lower(f"[{tag}] min energy", np.nanmin(vals), -1e-6))
    out.append(_upper(f"[{tag}] Velling-Kirillov log|B2_11|", rep.velling_kirillov, 1e-10))
    inv = energy_report(invert(h), order, grid)
    out.append(_upper(f"[{tag}] |E(h) - E(h^-1)|", abs(rep.energy - inv.energy), 1e-3))

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        k, l = (int(x) for x in rng.integers(-order // 4, order // 4 + 1, size=2))
        worst = max(worst, abs(table.coeff(k, l) - quadrature_coefficient(h, k, l)))
    out.append(_upper(f"[{tag}] table vs direct quadrature", worst, 1e-9))
    return out, h


def run_selftest(order=64, grid=8192, inject=None):
    """All checks as a list of :class:`Check`; ``inject='lambda-sign'`` flips the weights."""
    weight_sign = -1.0 if inject == "lambda-sign" else 1.0
    checks = []
    mu = parse_homeo(MOEBIUS_CASE)
    gm = grunsky_from_table(grunsky_table_for(mu, order, grid), weight_sign)
    checks.append(_upper("[moebius] max |Lambda|", np.max(np.abs(gm.full())), 1e-7))
    rep = energy_report(mu, order, grid, weight_sign=weight_sign)
    checks.append(_upper("[moebius] max |energy|",
                         np.nanmax(np.abs(list(rep.values().values()))), 1e-4))
    first = None
    for spec in SMOOTH_CASES:
        out, h = _case_checks(spec, order, grid, weight_sign)
        checks.extend(out)
        first = h if first is None else first
    checks.append(_upper("composition rule (trig o rotation)",
                         composition_rule_residual(first, rotation(np.pi / 5), order, grid), 1e-5))
    checks.append(_upper("composition rule (moebius o trig)",
                         composition_rule_residual(mu, first, order, grid), 1e-5))
    return checks


def format_table(checks):
    width = max(len(c.name) for c in checks)
    lines = [c.row(width) for c in checks]
    failed = [c.name for c in checks if not c.passed]
    lines.append(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        lines.append("failing: " + "; ".join(failed))
    return "\n".join(lines)
