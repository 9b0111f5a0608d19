"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 partial numeric result.
"""
import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _accel, serialize
from .errors import DSLParseError, InvalidParameterError, WeldingError
from .harmonic import grunsky_table_for
from .homeo import parse_homeo
from .operators import (
    build_composition,
    grunsky_from_composition,
    grunsky_from_table,
    interior_distance,
    symplectic_residuals,
)
from .spectral import (
    FORMULA_KEYS,
    energy_report,
    grunsky_eigenvalues,
    iterate_energy,
    schatten_norm,
)

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2
SCHATTEN_P = (1.5, 2.0, 3.0)
SWEEP_COLUMNS = {
    "energy_spread": ("order", "grid_size") + FORMULA_KEYS + ("spread",),
    "identity_residuals": ("order", "grid_size", "XX*-YY*-I", "X*X-Y^tYbar-I", "XY^t-YX^t",
                           "X*Y-Y^tXbar", "table_vs_composition"),
    "schatten": ("order", "grid_size", "p", "norm"),
}

log = logging.getLogger("weldnrg")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    homeo_spec: str
    order: int = 64
    grid: int = 8192
    K_user: Optional[float] = None
    output: Optional[str] = None
    format: str = "json"

    def __post_init__(self):
        _check_resolution(self.order, self.grid)
        if self.K_user is not None and not self.K_user > 1:
            raise ConfigError(f"--k must exceed 1, got {self.K_user}")


@dataclass
class SweepConfig:
    homeo_spec: str
    orders: list = field(default_factory=lambda: [16, 32, 64])
    grids: list = field(default_factory=lambda: [8192])
    quantity: str = "energy_spread"

    def __post_init__(self):
        if not self.orders or not self.grids:
            raise ConfigError("sweep needs at least one order and one grid size")
        if self.quantity not in SWEEP_COLUMNS:
            raise ConfigError(f"unknown quantity {self.quantity!r}")
        for n in self.orders:
            for m in self.grids:
                _check_resolution(n, m)


def _check_resolution(order, grid):
    if order < 1 or grid < 1:
        raise ConfigError("order and grid size must be positive")
    if grid < 8 * order:
        raise ConfigError(f"grid size {grid} must be at least 8 * order = {8 * order}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(header_line, columns, rows):
    buf = io.StringIO()
    if header_line:
        buf.write(header_line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if v is None else _cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v if np.isfinite(v) else ""
    return str(v)


def _report_failures(failures):
    for name, msg in failures.items():
        print(f"weldnrg: {name} failed: {msg}", file=sys.stderr)


def cmd_energy(cfg, iterates=None):
    h = parse_homeo(cfg.homeo_spec)
    if iterates:
        items = iterate_energy(h, iterates, cfg.K_user, cfg.order, cfg.grid)
        doc = {"homeo_spec": h.label, "order": cfg.order, "grid_size": cfg.grid,
               "K_user": cfg.K_user,
               "iterates": [{"n": it.n, "energy": it.energy, "spread": it.spread,
                             "bound": it.bound, "pass": it.passed, "warning": it.warning}
                            for it in items]}
        if cfg.format == "csv":
            text = _csv_text(None, ("n", "energy", "spread", "bound", "pass"),
                             [(it.n, it.energy, it.spread, it.bound, it.passed) for it in items])
        else:
            text = serialize.dumps(doc) + "\n"
        _emit(text, cfg.output)
        partial = any(it.warning for it in items) or not all(it.passed for it in items)
        return EXIT_PARTIAL if partial else EXIT_OK

    rep = energy_report(h, cfg.order, cfg.grid, spec=h.label)
    d = rep.to_dict()
    if cfg.format == "csv":
        cols = sorted(k for k in d if k != "dirichlet_addends")
        cols += ["dirichlet_addend1", "dirichlet_addend2", "dirichlet_addend3"]
        row = [d[k] for k in cols[:-3]] + list(d["dirichlet_addends"])
        text = _csv_text(None, cols, [row])
    else:
        text = serialize.dumps(d) + "\n"
    _emit(text, cfg.output)
    if rep.partial:
        _report_failures(rep.failures)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_spectrum(cfg):
    h = parse_homeo(cfg.homeo_spec)
    rep = energy_report(h, cfg.order, cfg.grid, spec=h.label)
    n = cfg.order
    eig = rep.eigenvalues if rep.eigenvalues is not None else np.full(2 * n, np.nan)
    deltas = rep.deltas if rep.deltas is not None else np.full(n, np.nan)
    cols = ["k", "delta", "eig_lambda"]
    rows = []
    bound = None
    if cfg.K_user is not None:
        K = cfg.K_user
        bound = (K - 1) / (K + 1)
        lo, hi = -(K - 1) / 2, (1 - 1 / K) / 2
        cols += ["delta_bound", "delta_pass", "eig_lower", "eig_upper", "eig_pass"]
    for i in range(2 * n):
        d = float(deltas[i]) if i < n else None
        row = [i + 1, d, float(eig[i])]
        if bound is not None:
            row += [bound if i < n else None, (d <= bound + 1e-6) if i < n else None,
                    lo, hi, bool(lo - 1e-6 <= eig[i] <= hi + 1e-6)]
        rows.append(row)
    if cfg.format == "json":
        doc = {"order": n, "grid_size": cfg.grid, "homeo_spec": h.label,
               "columns": cols, "rows": rows}
        text = serialize.dumps(doc) + "\n"
    else:
        text = _csv_text(f"# order={n},grid_size={cfg.grid}", cols, rows)
    _emit(text, cfg.output)
    if rep.partial:
        _report_failures(rep.failures)
        return EXIT_PARTIAL
    return EXIT_OK


def _sweep_rows(h, n, m, quantity):
    if quantity == "energy_spread":
        rep = energy_report(h, n, m)
        return [[n, m] + [rep.values()[k] for k in FORMULA_KEYS] + [rep.spread]], rep.partial
    if quantity == "identity_residuals":
        c = build_composition(h, n, m)
        res = symplectic_residuals(c)
        g = grunsky_from_table(grunsky_table_for(h, n, m))
        dist = interior_distance(g.full(), grunsky_from_composition(c).full(), n)
        cols = SWEEP_COLUMNS["identity_residuals"][2:-1]
        return [[n, m] + [res[k] for k in cols] + [dist]], False
    g = grunsky_from_table(grunsky_table_for(h, n, m))
    return [[n, m, p, schatten_norm(g, p).norm] for p in SCHATTEN_P], False


def cmd_sweep(cfg, output=None):
    h = parse_homeo(cfg.homeo_spec)
    rows, partial = [], False
    for n in cfg.orders:
        for m in cfg.grids:
            try:
                r, p = _sweep_rows(h, n, m, cfg.quantity)
            except WeldingError as exc:
                print(f"weldnrg: N={n}, M={m}: {exc}", file=sys.stderr)
                cols = len(SWEEP_COLUMNS[cfg.quantity])
                r, p = [[n, m] + [None] * (cols - 2)], True
            rows += r
            partial = partial or p
    text = _csv_text(f"# homeo={h.label},quantity={cfg.quantity}",
                     SWEEP_COLUMNS[cfg.quantity], rows)
    _emit(text, output)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_selftest(order=64, grid=8192, inject=None, output=None):
    from .selftest import format_table, run_selftest

    _check_resolution(order, grid)
    checks = run_selftest(order, grid, inject)
    _emit(format_table(checks) + "\n", output)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_PARTIAL


def cmd_grunsky_table(cfg, matrix_out=None):
    h = parse_homeo(cfg.homeo_spec)
    table = grunsky_table_for(h, cfg.order, cfg.grid)
    _emit(serialize.dumps(serialize.table_to_dict(table)) + "\n", cfg.output)
    if matrix_out:
        serialize.write_matrix_binary(matrix_out, grunsky_from_table(table).full())
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="weldnrg",
        description="Welding Grunsky operator and Loewner energy of circle homeomorphisms.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_homeo=True):
        if need_homeo:
            sp.add_argument("--homeo", required=True,
                            help="homeomorphism, e.g. 'trig:j1=0.2' or 'comp(mobius:a=0.3+0i;rot:beta=1)'")
        sp.add_argument("--order", type=int, default=64, help="truncation order N (default 64)")
        sp.add_argument("--grid", type=int, default=8192, help="quadrature grid size M (default 8192)")
        sp.add_argument("--out", default=None, help="output path (default stdout)")

    e = sub.add_parser("energy", help="Loewner energy by every formula (JSON)")
    common(e)
    e.add_argument("--k", type=float, default=None, help="declared distortion K > 1")
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.add_argument("--iterate", type=int, default=None, metavar="N",
                   help="energies of the iterates 1..N, with the growth bound when --k is set")

    s = sub.add_parser("spectrum", help="Fredholm spectrum and eigenvalues of Lambda (CSV)")
    common(s)
    s.add_argument("--k", type=float, default=None, help="declared distortion K > 1")
    s.add_argument("--format", choices=("json", "csv"), default="csv")

    w = sub.add_parser("sweep", help="convergence sweep over orders and grid sizes (CSV)")
    w.add_argument("--homeo", required=True)
    w.add_argument("--orders", type=_int_list, default=[16, 32, 64])
    w.add_argument("--grids", type=_int_list, default=[8192])
    w.add_argument("--quantity", choices=tuple(SWEEP_COLUMNS), default="energy_spread")
    w.add_argument("--out", default=None)

    t = sub.add_parser("selftest", help="run the invariant suite and print a pass/fail table")
    common(t, need_homeo=False)
    t.add_argument("--inject", choices=("lambda-sign",), default=None, help=argparse.SUPPRESS)

    g = sub.add_parser("grunsky-table", help="dump the Grunsky coefficient table (JSON)")
    common(g)
    g.add_argument("--matrix-out", default=None,
                   help="also write the 2N x 2N Lambda as a binary column-major dump")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(name)s: %(message)s")
    _accel.apply_thread_cap()
    try:
        if args.command == "sweep":
            return cmd_sweep(SweepConfig(args.homeo, args.orders, args.grids, args.quantity),
                             args.out)
        if args.command == "selftest":
            return cmd_selftest(args.order, args.grid, args.inject, args.out)
        cfg = RunConfig(args.homeo, args.order, args.grid, getattr(args, "k", None),
                        args.out, getattr(args, "format", "json"))
        if args.command == "energy":
            if args.iterate is not None and args.iterate < 1:
                raise ConfigError("--iterate must be >= 1")
            return cmd_energy(cfg, args.iterate)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        return cmd_grunsky_table(cfg, args.matrix_out)
    except DSLParseError as exc:
        print(f"weldnrg: {exc.annotated()}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InvalidParameterError) as exc:
        print(f"weldnrg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WeldingError as exc:
        print(f"weldnrg: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
