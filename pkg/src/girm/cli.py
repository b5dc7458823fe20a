"""Command-line runner for the diffusion experiments.

Exit status: 0 all checks pass, 1 solver error or tolerance failure,
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import sys
from contextlib import contextmanager

from .experiment import (
    PROBLEMS,
    SWEEP_PARAMS,
    ConfigError,
    RunConfig,
    coerce,
    load_config_file,
    run_steady,
    run_unsteady,
    sweep,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
NEUMANN_REFERENCE_DT = 0.005

EPILOG = """\
Defaults reproduce the reference experiments: dirichlet uses nu=0.05, L=1, M=41,
dt=0.0625; neumann uses M=161, dt=0.005.  Neumann runs are sensitive to dt.
Small t needs a large M, while for large t a small M stabilizes the march.
M is fixed per run, so pick it for the snapshot times you care about.
"""


def fmt(v) -> str:
    return format(float(v), ".17g")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="girm", description=__doc__, epilog=EPILOG,
                 formatter_class=argparse.RawDescriptionHelpFormatter)
    # every default is None so that only flags given on the command line override the config file
    ap.add_argument("--problem", choices=PROBLEMS)
    ap.add_argument("--nu", type=str)
    ap.add_argument("--L", type=str)
    ap.add_argument("--T", type=str)
    ap.add_argument("--M", type=str, help="space cells (steady: ignored)")
    ap.add_argument("--dt", type=str)
    ap.add_argument("--modes", type=str, help="oracle mode count")
    ap.add_argument("--snapshots", type=str, metavar="t1,t2,...")
    ap.add_argument("--initial", type=str, help="paper-gaussian | single-mode | constant:<v> | file:<path>")
    ap.add_argument("--gaussian-sign", dest="gaussian_sign", choices=("minus", "plus"))
    ap.add_argument("--tol", type=str, help="pass threshold on relative max-norm error")
    ap.add_argument("--out", type=str, help="CSV path, '-' for stdout")
    ap.add_argument("--config", type=str, help="key=value file; flags win")
    ap.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    ap.add_argument("--sweep", nargs=2, metavar=("PARAM", "V1,V2,..."), help=f"PARAM in {SWEEP_PARAMS}")
    return ap


def config_from_args(args) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for f in dataclasses.fields(RunConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            key, val = coerce(f.name, raw)
            values[key] = val
    try:
        return RunConfig(**values).resolved()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    with fh:
        yield fh


def write_field_csv(fh, res):
    buf = io.StringIO()
    buf.write("x,t,C,C_exact,abs_err\n")
    for j, t in enumerate(res.times):
        for i, x in enumerate(res.x):
            c, ce = res.C[i, j], res.C_exact[i, j]
            buf.write(f"{fmt(x)},{fmt(t)},{fmt(c)},{fmt(ce)},{fmt(abs(c - ce))}\n")
    fh.write(buf.getvalue())


def write_sweep_csv(fh, rows):
    fh.write("value,max_rel_err,l2_rel_err,wall_time_ms\n")
    for r in rows:
        fh.write(f"{fmt(r.value)},{fmt(r.max_rel_err)},{fmt(r.l2_rel_err)},{fmt(r.wall_time_ms)}\n")


def write_steady_csv(fh, rows):
    fh.write("case,elements,max_abs_err,tol,pass\n")
    for r in rows:
        tol = "" if r.tol is None else fmt(r.tol)
        fh.write(f"{r.case},{r.elements},{fmt(r.max_abs_err)},{tol},{int(r.passed)}\n")


def _report(cfg, text):
    # keep stdout clean when the CSV goes there
    print(text, file=sys.stderr if cfg.out == "-" else sys.stdout)


def cmd_run(cfg: RunConfig) -> int:
    if cfg.problem == "steady":
        rows, wall = run_steady(cfg)
        with _open_out(cfg.out) as fh:
            write_steady_csv(fh, rows)
        lines = [f"steady manufactured solutions ({wall * 1000:.1f} ms)"]
        lines += [f"  {r.case:<10} n={r.elements:<4} max_abs_err={r.max_abs_err:.3e}"
                  + ("" if r.tol is None else f"  tol={r.tol:.0e} {'PASS' if r.passed else 'FAIL'}") for r in rows]
        _report(cfg, "\n".join(lines))
        return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL
    res = run_unsteady(cfg)
    with _open_out(cfg.out) as fh:
        write_field_csv(fh, res)
    lines = [f"{cfg.problem}: nu={cfg.nu} L={cfg.L} M={cfg.M} dt={cfg.dt} modes={cfg.modes} "
             f"wall={res.wall_time * 1000:.1f} ms"]
    for e in res.errors:
        verdict = "PASS" if e.max_rel_err <= cfg.tol else "FAIL"
        lines.append(f"  t={e.t:<8g} max_rel_err={e.max_rel_err:.3e} l2_rel_err={e.l2_rel_err:.3e} {verdict}")
    if cfg.problem == "neumann" and cfg.dt > NEUMANN_REFERENCE_DT:
        lines.append(f"note: Neumann error grows with dt; dt={cfg.dt} is above the reference "
                     f"step {NEUMANN_REFERENCE_DT}")
    _report(cfg, "\n".join(lines))
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_sweep(cfg: RunConfig, parameter: str, raw_values: str) -> int:
    if cfg.problem == "steady":
        raise ConfigError("sweeps apply to dirichlet and neumann problems")
    try:
        values = [float(v) for v in raw_values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad sweep values {raw_values!r}") from None
    rows = sweep(cfg, parameter, values)
    with _open_out(cfg.out) as fh:
        write_sweep_csv(fh, rows)
    lines = [f"{cfg.problem} sweep over {parameter}"]
    lines += [f"  {parameter}={r.value:<10g} max_rel_err={r.max_rel_err:.3e}" for r in rows]
    _report(cfg, "\n".join(lines))
    return EXIT_OK if all(r.max_rel_err <= cfg.tol for r in rows) else EXIT_FAIL


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = config_from_args(args)
        if args.print_config:
            sys.stdout.write(cfg.to_text())
            return EXIT_OK
        if args.sweep:
            return cmd_sweep(cfg, *args.sweep)
        return cmd_run(cfg)
    except ConfigError as exc:
        print(f"girm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError, FloatingPointError, RuntimeError) as exc:
        print(f"girm: solver error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
