"""Acceptance criteria at the reference resolution N=64, M=8192.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""
import numpy as np
import pytest

from weldnrg.homeo import TWO_PI, invert, log_derivative_series
from weldnrg.operators import (
    classical_blocks,
    grunsky_from_composition,
    grunsky_from_table,
    interior_distance,
    symplectic_residuals,
)
from weldnrg.spectral import (
    FORMULA_KEYS,
    energy_report,
    eta_spectrum,
    fredholm_spectrum,
    growth_bound,
    iterate_energy,
)

from conftest import (
    K15_BASE,
    K15_CONJUGATORS,
    REF_GRID,
    REF_ORDER,
    SMOOTH_FAMILY,
    EPS_IDENTITY,
    homeo,
    report,
    table,
    composition,
)

pytestmark = pytest.mark.acceptance

# Moebius factors used to conjugate the family, |a| <= 0.3
CONJUGATORS = (
    ("mobius:a=0.3,beta=0.5", "mobius:a=-0.2i"),
    ("mobius:a=-0.1+0.25i", "mobius:a=0.15-0.15i,beta=2"),
    ("mobius:a=0.2i,beta=-1", "mobius:a=-0.3"),
)


def conjugate(spec, i):
    a, b = CONJUGATORS[i % len(CONJUGATORS)]
    return f"comp({a};comp({spec};{b}))"


CONJUGATES = tuple(conjugate(s, i) for i, s in enumerate(SMOOTH_FAMILY))
INVERSES = tuple(f"inv({s})" for s in SMOOTH_FAMILY)


def random_moebius(n, seed=20240611):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        r = 0.7 * np.sqrt(rng.uniform())
        a = r * np.exp(1j * rng.uniform(0, TWO_PI))
        beta = rng.uniform(0, TWO_PI)
        out.append(f"mobius:a={a.real:.17f}{a.imag:+.17f}i,beta={beta:.17f}")
    return out


def relative_spread(rep):
    return rep.spread / max(1.0, abs(rep.energy))


def test_criterion_01_moebius_nullity(criterion):
    with criterion(1, "Moebius nullity (20 maps, |a| <= 0.7)") as rec:
        worst_entry = worst_energy = 0.0
        for spec in random_moebius(20):
            h = homeo(spec)
            t = table(spec)
            rep = energy_report(h, REF_ORDER, REF_GRID, spec=spec, table=t)
            assert not rep.partial, rep.failures
            worst_entry = max(worst_entry, float(np.max(np.abs(grunsky_from_table(t).full()))))
            worst_energy = max(worst_energy, max(abs(v) for v in rep.values().values()))
        rec.detail = f"max|Lambda| {worst_entry:.1e}, max|I^L| {worst_energy:.1e}"
        assert worst_entry < 1e-6
        assert worst_energy < 1e-4


def test_criterion_02_table_equals_composition(criterion):
    with criterion(2, "Lambda from table = (I - C C^*)/2") as rec:
        worst = 0.0
        for spec in SMOOTH_FAMILY + CONJUGATES:
            g1 = grunsky_from_table(table(spec)).full()
            g2 = grunsky_from_composition(composition(spec)).full()
            worst = max(worst, interior_distance(g1, g2, REF_ORDER))
        rec.detail = f"max interior distance {worst:.1e} over {2 * len(SMOOTH_FAMILY)} maps"
        assert worst < 1e-5


def test_criterion_03_cross_formula_agreement(criterion):
    with criterion(3, "cross-formula energy agreement") as rec:
        worst = 0.0
        for spec in SMOOTH_FAMILY:
            rep = report(spec)
            assert not rep.partial, rep.failures
            assert all(np.isfinite(rep.values()[k]) for k in FORMULA_KEYS)
            worst = max(worst, relative_spread(rep))
        rec.detail = f"max relative spread {worst:.1e}"
        assert worst < 1e-3


def test_criterion_04_symplectic_residuals(criterion):
    with criterion(4, "symplectic residuals XX*-YY*-I, X*X-Y*Y-I, XY^t-YX^t") as rec:
        keys = ("XX*-YY*-I", "X*X-Y*Y-I", "XY^t-YX^t")
        worst = dict.fromkeys(keys, 0.0)
        for spec in SMOOTH_FAMILY:
            res = symplectic_residuals(composition(spec))
            for k in keys:
                worst[k] = max(worst[k], res[k])
        rec.detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
        for k in keys:
            assert worst[k] < EPS_IDENTITY, k


def test_column_relation_with_transpose_holds():
    # the column relation in the form X^*X - Y^t conj(Y) = I holds on every member
    for spec in SMOOTH_FAMILY + CONJUGATES:
        res = symplectic_residuals(composition(spec))
        assert res["X*X-Y^tYbar-I"] < EPS_IDENTITY
        assert res["X*Y-Y^tXbar"] < EPS_IDENTITY


def test_criterion_05_invariance(criterion):
    with criterion(5, "Moebius and inversion invariance of I^L") as rec:
        worst_conj = worst_inv = 0.0
        for spec, cspec, ispec in zip(SMOOTH_FAMILY, CONJUGATES, INVERSES):
            e = report(spec).energy
            worst_conj = max(worst_conj, abs(report(cspec).energy - e))
            worst_inv = max(worst_inv, abs(report(ispec).energy - e))
        rec.detail = f"conjugation {worst_conj:.1e}, inversion {worst_inv:.1e}"
        assert worst_conj < 1e-3
        assert worst_inv < 1e-3


def test_criterion_06_spectral_bounds(criterion):
    with criterion(6, "spectral bounds and declared K=1.5 Fredholm bound") as rec:
        max_eig = max_delta = 0.0
        min_gap = np.inf
        for spec in SMOOTH_FAMILY + CONJUGATES:
            rep = report(spec)
            max_eig = max(max_eig, rep.eigenvalues[0])
            min_gap = min(min_gap, 1.0 - rep.eigenvalues[0])
            max_delta = max(max_delta, rep.deltas[0])
        k15 = 0.0
        for base in K15_BASE:
            for a, b in ((None, None),) + K15_CONJUGATORS:
                spec = base if a is None else f"comp({a};comp({base};{b}))"
                d = fredholm_spectrum(classical_blocks(composition(spec))).deltas
                k15 = max(k15, d[0])
        rec.detail = (f"max eig {max_eig:.3f}, min eig(I-Lambda) {min_gap:.3f}, "
                      f"max delta {max_delta:.3f}, K=1.5 delta_1 {k15:.4f} <= 0.2")
        assert max_eig < 0.5
        assert min_gap > 0.5
        assert max_delta < 1
        assert k15 <= 0.2 + 1e-6


def test_criterion_07_det2_consistency(criterion):
    with criterion(7, "det2: |eta| multiset = {delta, delta}, both paths agree") as rec:
        worst_multiset = worst_rel = 0.0
        for spec in SMOOTH_FAMILY:
            rep = report(spec)
            eta = np.sort(np.abs(eta_spectrum(grunsky_from_table(table(spec)))))
            d = np.sort(np.concatenate([rep.deltas, rep.deltas]))
            worst_multiset = max(worst_multiset, float(np.max(np.abs(eta - d))))
            worst_rel = max(worst_rel, abs(rep.il_det2_eta - rep.il_det2_d) / abs(rep.il_det2_d))
        rec.detail = f"multiset {worst_multiset:.1e}, relative {worst_rel:.1e}"
        assert worst_multiset < 1e-5
        assert worst_rel < 1e-5


def test_criterion_08_velling_kirillov(criterion):
    with criterion(8, "Velling-Kirillov sign log|(B2)_11| <= 1e-10") as rec:
        values = [report(s).velling_kirillov for s in SMOOTH_FAMILY + CONJUGATES + INVERSES]
        values += [report(s).velling_kirillov for s in random_moebius(20)[:3]]
        rec.detail = f"max {max(values):.3e} over {len(values)} cases"
        assert all(np.isfinite(values))
        assert max(values) <= 1e-10


def test_criterion_09_growth_bound(criterion):
    spec, K = "trig:j1=0.1", 1.5
    with criterion(9, "iterate growth bound, trig j1=0.1, K=1.5, n=1..4") as rec:
        items = iterate_energy(homeo(spec), 4, K, REF_ORDER, REF_GRID)
        h = homeo(spec)
        norm_sq = (log_derivative_series(h, REF_ORDER, REF_GRID).h_half_norm_sq()
                   + log_derivative_series(invert(h), REF_ORDER, REF_GRID).h_half_norm_sq())
        rec.detail = "; ".join(f"n={i.n}: {i.energy:.3e} <= {i.bound:.3e}" for i in items)
        for i in items:
            assert not i.warning, i.warning
            assert i.bound == pytest.approx(growth_bound(K, i.n, norm_sq), rel=1e-12)
            assert i.energy <= i.bound
        # the energies grow along the iterates while staying resolved
        assert abs(items[0].energy - report(spec).energy) < 1e-10
        assert report(spec).energy < items[-1].energy


def brute_coefficients(h, pairs, m=1000):
    """Trapezoid sums of log|(phi(z) - phi(w)) / (z - w)| on an m x m grid, per coefficient."""
    s = TWO_PI * np.arange(m) / m
    z = np.exp(1j * s)
    w = h.on_circle(s)
    off = ~np.eye(m, dtype=bool)
    vals = np.empty((m, m))
    vals[off] = np.log(np.abs((w[:, None] - w[None, :])[off] / (z[:, None] - z[None, :])[off]))
    vals[~off] = np.log(h.deriv(s))
    return [np.exp(-1j * k * s) @ vals @ np.exp(-1j * l * s) / m ** 2 for k, l in pairs]


def test_criterion_10_quadrature_oracle(criterion):
    rng = np.random.default_rng(7)
    with criterion(10, "table vs per-coefficient trapezoid, 25 entries per map") as rec:
        worst = largest = 0.0
        for spec in SMOOTH_FAMILY:
            # half the draws from the low modes, where entries are not exponentially small
            low = rng.integers(-8, 9, size=(12, 2))
            full = rng.integers(-REF_ORDER, REF_ORDER + 1, size=(13, 2))
            pairs = [tuple(p) for p in np.vstack([low, full])]
            t = table(spec)
            ref = brute_coefficients(homeo(spec), pairs)
            worst = max(worst, max(abs(t.coeff(k, l) - r) for (k, l), r in zip(pairs, ref)))
            largest = max(largest, max(abs(r) for r in ref))
        rec.detail = (f"max deviation {worst:.1e}, largest entry {largest:.1e} "
                      f"(M'=1000 vs M={REF_GRID})")
        assert worst < 1e-9


def test_criterion_11_convergence_in_order(criterion):
    with criterion(11, "spread at N=16/32/64 (reported; final tolerance asserted)") as rec:
        lines = []
        nonmono = 0
        for spec in SMOOTH_FAMILY:
            spreads = [relative_spread(report(spec, n)) for n in (16, 32, 64)]
            nonmono += any(b > a for a, b in zip(spreads, spreads[1:]))
            lines.append(spreads)
            assert spreads[-1] < 1e-3
        arr = np.array(lines)
        rec.detail = (f"median spreads {np.median(arr[:, 0]):.1e}/{np.median(arr[:, 1]):.1e}/"
                      f"{np.median(arr[:, 2]):.1e}, {nonmono} of {len(lines)} not monotone")
