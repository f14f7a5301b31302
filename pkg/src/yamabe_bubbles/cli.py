"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or domain error,
3 quadrature tolerance failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace
from typing import Sequence

from . import constants as C
from .config import RunConfig, parse_grid
from .energy import ENERGY_SPEC, RESIDUAL_SPEC, AnsatzSpec, background_solution, energy_evaluation, residual_norm_result
from .manifolds import (
    SPHERE,
    is_nondegenerate_constant_solution,
    scalar_curvature,
    spectrum_below,
    yamabe_constant_cn,
)
from .quadrature import QuadratureToleranceError
from .reduction import REGIMES, PointwiseData, predict_blowup_point, reduced_expansion, t_star
from . import verify as V

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_TOL = 0, 1, 2, 3
SWEEP_HEADER = ("epsilon", "t", "value", "error_estimate")
FIT_HEADER = ("t", "slope", "intercept", "model", "rss")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return f"{float(x):.17g}"


def write_table(args, cmd: str, header: Sequence[str], rows: list[Sequence], out) -> None:
    """CSV (or JSON with --json) to --output, to $OUTPUT_DIR/<cmd>.csv, or to stdout."""
    if args.json:
        payload = [dict(zip(header, (fmt(v) for v in row))) for row in rows]
        text = json.dumps(payload, indent=1, sort_keys=False) + "\n"
        ext = "json"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        text = buf.getvalue()
        ext = "csv"
    path = args.output
    if path is None and args.cfg.resolved_output_dir():
        path = os.path.join(args.cfg.resolved_output_dir(), f"{cmd}.{ext}")
    if path is None:
        out.write(text)
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(f"wrote {path}", file=out)


# ---------------------------------------------------------------------------
# subcommands

def cmd_constants(args, out) -> int:
    n = args.cfg.n
    loc = C.local_coefficients(n)
    print(f"n = {n}", file=out)
    print(f"c_n = {fmt(yamabe_constant_cn(n))}", file=out)
    print(f"omega_n = {fmt(C.sphere_volume(n))}", file=out)
    print(f"K_n = {fmt(C.sobolev_constant(n))}", file=out)
    print(f"K_n^-n = {fmt(C.sobolev_energy(n))}", file=out)
    print(f"beta_n = {fmt(C.beta_n(n))}", file=out)
    for key in ("c3", "c4", "c5"):
        print(f"{key} = {fmt(loc[key])}", file=out)
    if n >= 5:
        print(f"six_factor = {fmt(loc['six_factor'])}", file=out)
    if n >= 7:
        print(f"weyl_coeff = {fmt(loc['weyl_coeff'])}", file=out)
    if n == 10:
        print(f"weyl_coeff/c5 = {fmt(loc['weyl_coeff'] / loc['c5'])} (5/567 = {fmt(5 / 567)})", file=out)
    M = args.cfg.manifold()
    coeffs = C.reduced_coefficients(M, u0=background_solution(M, args.cfg.h))
    print(f"c1 = {fmt(coeffs.c1)}  [{M}]", file=out)
    print(f"c2 = {fmt(coeffs.c2)}  [{M}]", file=out)
    return EXIT_OK


def cmd_spectrum(args, out) -> int:
    M = args.cfg.manifold()
    target = scalar_curvature(M) / (M.n - 1)
    cutoff = args.cutoff if args.cutoff is not None else 2.0 * target + 1.0
    print(f"{M}: target Scal/(n-1) = {fmt(target)}", file=out)
    for ev in spectrum_below(M, cutoff):
        print(f"  lambda = {fmt(ev.value)}  indices = {ev.indices}", file=out)
    verdict = is_nondegenerate_constant_solution(M, args.tol)
    print(f"verdict: {verdict.describe()}", file=out)
    return EXIT_OK


def _background(cfg: RunConfig):
    M = cfg.manifold()
    u0 = background_solution(M, cfg.h)
    scal = scalar_curvature(M)
    h = yamabe_constant_cn(M.n) * scal if cfg.h is None else cfg.h
    return M, u0, PointwiseData(u0, h, scal)


def cmd_expand(args, out) -> int:
    cfg = args.cfg
    M, u0, data = _background(cfg)
    coeffs = C.reduced_coefficients(M, u0=u0)
    rows = [(e, t, reduced_expansion(M.n, coeffs, data, t, e, cfg.regime), 0.0)
            for t in cfg.t_grid for e in cfg.eps_grid]
    write_table(args, "expand", SWEEP_HEADER, rows, out)
    return EXIT_OK


def _ansatz(cfg: RunConfig, t: float, e: float, base):
    quad = cfg.quadrature(base) or base
    return AnsatzSpec.build(cfg.manifold(), t, e, h=cfg.h, conformal=cfg.conformal, quad=quad)


def _admissible(fn, cfg, err):
    rows = []
    for t in cfg.t_grid:
        for e in cfg.eps_grid:
            try:
                rows.append(fn(t, e))
            except ValueError as exc:
                if "bubble scale" not in str(exc):
                    raise
                print(f"skipped eps={fmt(e)} t={fmt(t)}: {exc}", file=err)
    return rows


def cmd_energy(args, out) -> int:
    cfg = args.cfg
    if not cfg.conformal:
        raise ValueError("energy evaluation uses the conformal chart; drop --non-conformal")

    def one(t, e):
        r = energy_evaluation(_ansatz(cfg, t, e, ENERGY_SPEC)).require()
        return (e, t, r.value, r.error)
    write_table(args, "energy", SWEEP_HEADER, _admissible(one, cfg, args.err), out)
    return EXIT_OK


def _residual_row(cfg, t, e):
    r = residual_norm_result(_ansatz(cfg, t, e, RESIDUAL_SPEC))
    if not r.converged:
        raise QuadratureToleranceError(f"residual quadrature did not converge at eps={e:g}", r.value, r.error)
    return (e, t, r.value, r.error)


def cmd_residual(args, out) -> int:
    cfg = args.cfg
    rows = _admissible(lambda t, e: _residual_row(cfg, t, e), cfg, args.err)
    write_table(args, "residual", SWEEP_HEADER, rows, out)
    return EXIT_OK


def cmd_rates(args, out) -> int:
    cfg = args.cfg
    M, u0, data = _background(cfg)
    rows = []
    for t in cfg.t_grid:
        if args.quantity == "residual":
            sweep = _admissible(lambda t_, e: _residual_row(cfg, t_, e), cfg.with_overrides(t_grid=(t,)), args.err)
            pts = [(e, v) for e, _, v, _ in sweep]
            default_model, default_q = V.residual_rate_target(M.n, cfg.conformal)[1:]
        else:
            coeffs = C.reduced_coefficients(M, u0=u0)

            def one(t_, e):
                r = energy_evaluation(_ansatz(cfg, t_, e, ENERGY_SPEC)).require()
                return (e, abs(r.value - reduced_expansion(M.n, coeffs, data, t_, e, cfg.regime)))
            pts = _admissible(one, cfg.with_overrides(t_grid=(t,)), args.err)
            default_model, default_q = "power", 0
        model = args.model or default_model
        fit = V.fit_rate(pts, model, default_q if model == default_model else None)
        rows.append((t, fit.slope, fit.intercept, fit.model, fit.rss))
    write_table(args, "rates", FIT_HEADER, rows, out)
    return EXIT_OK


def cmd_reduce(args, out) -> int:
    cfg = args.cfg
    M, u0, base = _background(cfg)
    coeffs = C.reduced_coefficients(M, u0=u0)
    count = args.xi_count
    if count < 3:
        raise ValueError("--xi-count must be at least 3")
    if M.kind == SPHERE:
        xs = [math.pi * j / (count - 1) for j in range(count)]
        phase = xs
    else:
        xs = [2.0 * math.pi * M.r * j / count for j in range(count)]
        phase = [x / M.r for x in xs]
    grid = []
    for x, ph in zip(xs, phase):
        grid.append((x, PointwiseData(base.u0 * (1.0 + args.u0_amplitude * math.cos(ph)),
                                      base.h + args.h_amplitude * math.cos(ph), base.scal, args.weyl2)))
    pred = predict_blowup_point(grid, M.n, coeffs, cfg.regime)
    err = args.err if (args.output is None and not cfg.resolved_output_dir()) else out
    if pred.certified:
        print(f"xi* = {fmt(pred.xi)}  t* = {fmt(pred.t_star)}  index = {pred.index}  "
              f"strict_local_min = {pred.strict_local_min}  refined_xi = {fmt(pred.xi_refined)}", file=err)
    if pred.reason:
        print(pred.reason, file=err)
    rows = []
    for (x, d), phi, g in zip(grid, pred.phi, pred.g_min):
        rows.append((x, phi, t_star(M.n, coeffs, d, cfg.regime), g))
    write_table(args, "reduce", ("xi", "phi", "t_star", "g_min"), rows, out)
    return EXIT_OK


def cmd_verify_all(args, out) -> int:
    reports = V.run_all(quick=args.quick)
    text = V.render(reports)
    path = args.output
    if path is None and args.cfg.resolved_output_dir():
        path = os.path.join(args.cfg.resolved_output_dir(), "verify-all.txt")
    out.write(text)
    if path is not None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


COMMANDS = {
    "constants": cmd_constants,
    "spectrum": cmd_spectrum,
    "expand": cmd_expand,
    "energy": cmd_energy,
    "residual": cmd_residual,
    "rates": cmd_rates,
    "reduce": cmd_reduce,
    "verify-all": cmd_verify_all,
}


# ---------------------------------------------------------------------------
# argument parsing

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI-style run configuration")
    p.add_argument("--kind", choices=("sphere", "product"))
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=float, help="circle radius of the product")
    p.add_argument("--regime", choices=REGIMES)
    p.add_argument("--t", dest="t_grid", type=parse_grid, help="comma list or logspace(a, b, m)")
    p.add_argument("--eps", dest="eps_grid", type=parse_grid, help="comma list or logspace(a, b, m)")
    p.add_argument("--h", type=float, help="constant h (default: geometric c_n Scal)")
    p.add_argument("--non-conformal", action="store_true", help="Lambda = 1 mode on the sphere")
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--abs-tol", type=float)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--output", help="output file (default: stdout or $YAMABE_BUBBLES_OUTPUT_DIR)")
    p.add_argument("--output-dir")
    p.add_argument("--json", action="store_true", help="emit JSON rows instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="yamabe-bubbles", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name == "spectrum":
            p.add_argument("--cutoff", type=float, help="list eigenvalues up to this value")
            p.add_argument("--tol", type=float, default=1e-9)
        elif name == "rates":
            p.add_argument("--quantity", choices=("residual", "remainder"), default="residual")
            p.add_argument("--model", choices=V.MODELS)
        elif name == "reduce":
            p.add_argument("--xi-count", type=int, default=33)
            p.add_argument("--u0-amplitude", type=float, default=0.0)
            p.add_argument("--h-amplitude", type=float, default=0.0)
            p.add_argument("--weyl2", type=float, default=0.0)
        elif name == "verify-all":
            p.add_argument("--quick", action="store_true")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    over = dict(kind=args.kind, n=args.n, r=args.r, regime=args.regime, t_grid=args.t_grid,
                eps_grid=args.eps_grid, h=args.h, rel_tol=args.rel_tol, abs_tol=args.abs_tol,
                max_depth=args.max_depth, output_dir=args.output_dir)
    if args.non_conformal:
        over["conformal"] = False
    if args.kind == SPHERE and args.r is None:
        # a sphere given on the command line drops the radius a config file may carry
        cfg = replace(cfg.with_overrides(**{**over, "kind": None}), kind=SPHERE, r=None)
        return cfg
    return cfg.with_overrides(**over)


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.err = err
    try:
        args.cfg = _config(args)
        return COMMANDS[args.command](args, out)
    except QuadratureToleranceError as exc:
        print(f"tolerance failure: {exc}", file=err)
        return EXIT_TOL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
