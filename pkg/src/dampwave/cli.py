"""Command line entry point.

Exit codes: 0 success, 1 usage, 2 numerical failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import storage
from .exponents import ProblemParams, Reference, predicted_lifespan
from .harness import FitError, ExperimentConfig, compare_with_theory, emit_outputs, fit_exponent, run_sweep, sliding_fits

OK, USAGE, NUMERICAL, IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--solver", choices=("diamond", "fd", "ode"))
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--resolution", metavar="N", type=_pos_int)
    common.add_argument("--seed", metavar="U64", type=_u64)

    ap = _Parser(prog="dampwave", description="Blow-up experiments for damped 1D semilinear waves.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", parents=[common], help="single run; dumps the field and the F trace")
    s.add_argument("--eps", type=float, help="amplitude (default: first config amplitude)")
    s.add_argument("--t-max", type=float, help="final time for the PDE solvers")
    sub.add_parser("sweep", parents=[common], help="amplitude sweep to records.csv")
    f = sub.add_parser("fit", parents=[common], help="records.csv to fits.json")
    f.add_argument("records", nargs="?", help="records CSV (default: OUT/records.csv)")
    f.add_argument("--model", choices=("power", "b_eps", "exponential"))
    v = sub.add_parser("verify", parents=[common], help="a-priori estimates, inequality fuzz, slicing")
    v.add_argument("--samples", type=int, default=100_000)
    pr = sub.add_parser("predict", parents=[common], help="print the lifespan forms for p, mu, n")
    pr.add_argument("--p", type=float)
    pr.add_argument("--mu", type=float)
    pr.add_argument("--n", type=int)
    return ap


def _config(args) -> ExperimentConfig:
    try:
        d = storage.load_config(args.config) if args.config else {}
    except storage.StorageError:
        raise
    except Exception as e:  # malformed file
        raise UsageError(f"bad config: {e}") from e
    for key in ("solver", "out", "seed"):
        if getattr(args, key, None) is not None:
            d[key] = getattr(args, key)
    if args.resolution is not None:
        d["resolutions"] = [args.resolution]
    try:
        return ExperimentConfig.from_dict(d)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from e


def _out(cfg) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise storage.StorageError(f"{out}: {e}") from e
    return out


# -- subcommands ---------------------------------------------------------------


def cmd_solve(args, cfg) -> int:
    from .duhamel import CharacteristicGrid, diamond_march
    from .fd import UniformGrid, solve_ivp2
    from .functional import compute_F, ode_comparison_lifespan

    eps = args.eps if args.eps is not None else cfg.eps[0]
    params = cfg.params.with_eps(eps)
    out = _out(cfg)
    N = cfg.resolutions[0]
    t_max = args.t_max if args.t_max is not None else cfg.t_max
    if cfg.solver == "ode":
        rec = ode_comparison_lifespan(eps, params, profile=cfg.profile, method=cfg.ode_method)
        storage.write_records_csv(out / "records.csv", [rec])
        print(f"ode eps={eps:g} status={rec.status} log_T={rec.log_t_blowup}")
        return OK if rec.status == "blew_up" else NUMERICAL
    if cfg.solver == "diamond":
        grid = CharacteristicGrid.for_problem(cfg.k, N, t_max)
        res = diamond_march(cfg.profile, params, grid, cfg.threshold)
        vals, t, x = res.field.values, res.field.t, grid.x
        h, X, T = grid.h, grid.X, grid.t_max
    else:
        grid = UniformGrid.for_problem(cfg.k, N, t_max)
        res = solve_ivp2(cfg.profile, params, grid, cfg.threshold)
        vals, t, x = res.values, res.t_stored, grid.x
        h, X, T = grid.dx, grid.X, grid.t_max
    nrow = len(res.t)
    if res.status == "blew_up":
        nrow -= 1
    vals, t = vals[:nrow], t[:nrow]
    storage.write_field_csv(out / "field.csv", x, t, vals)
    storage.write_field_binary(out / "field.bin", vals, h, X, T)
    if len(res.t) >= 4:
        storage.write_trace_csv(out / "trace.csv", compute_F(res))
    print(f"{cfg.solver} eps={eps:g} h={h:g} status={res.status} t_blowup={res.t_blowup}")
    return NUMERICAL if res.status == "unresolved" else OK


def cmd_sweep(args, cfg) -> int:
    if cfg.model == "exponential" and cfg.solver != "ode":
        raise UsageError("exponential lifespans are out of reach for direct PDE runs; use --solver ode")
    recs = run_sweep(cfg)
    out = _out(cfg)
    storage.write_records_csv(out / "records.csv", recs)
    n_ok = sum(r.status == "blew_up" for r in recs)
    print(f"{len(recs)} records, {n_ok} resolved -> {out / 'records.csv'}")
    return NUMERICAL if recs and n_ok == 0 else OK


def cmd_fit(args, cfg) -> int:
    out = _out(cfg)
    path = Path(args.records) if args.records else out / "records.csv"
    recs = storage.read_records_csv(path)
    model = args.model or cfg.model or ExperimentConfig(p=recs[0].p if recs else cfg.p).default_model
    if model == "exponential" and any(r.solver != "ode" for r in recs):
        raise UsageError("exponential lifespans are out of reach for direct PDE runs; fit ODE surrogate records only")
    try:
        fit = fit_exponent(recs, model)
    except FitError as e:
        raise NumericalFailure(str(e)) from e
    verdict = compare_with_theory(fit, tol=cfg.tolerance)
    windows = []
    try:
        windows = [w.to_dict() for w in sliding_fits(recs, model)]
    except FitError:
        pass
    emit_outputs(recs, [fit], out)
    storage.write_json(out / "verdict.json", {"verdict": verdict, "sliding": windows})
    print(json.dumps(verdict, indent=2, default=float))
    return OK


def cmd_verify(args, cfg) -> int:
    from .duhamel import interpolation_bound_check, verify_apriori
    from .functional import slicing_cascade

    params = cfg.params
    out = _out(cfg)
    report = {}
    ok = True
    if float(params.p) != 3.0:
        T_list = [25.0, 50.0, 100.0, 200.0, 400.0]
        for which in ("linear_31", "annulus_32", "main_33", "mixed_34"):
            wr = verify_apriori(which, params, T_list, N=4, profile=cfg.profile)
            report[which] = {
                "skipped": wr.skipped,
                "fitted_exponent": wr.fitted_exponent,
                "theoretical_exponent": wr.theoretical_exponent,
                "relative_deviation": wr.relative_deviation,
                "empirical_constant": None if wr.skipped else wr.empirical_constant,
                "notes": wr.notes,
            }
            if which == "main_33" and wr.relative_deviation is not None:
                ok &= wr.relative_deviation <= 0.15
    rng = np.random.default_rng(cfg.seed)
    n = args.samples
    k = rng.uniform(1.01, 10.0, n)
    theta = rng.uniform(0.0, 1.0, n)
    alpha = rng.uniform(0.0, 50.0, n) * k
    beta = np.maximum(rng.uniform(-1.0, 50.0, n) * k, -alpha)
    good = interpolation_bound_check(theta, alpha, beta, k)
    report["interpolation_fuzz"] = {"samples": n, "violations": int(np.sum(~good)), "seed": cfg.seed}
    ok &= bool(np.all(good))
    if float(params.p) == 3.0:
        sl = slicing_cascade(cfg.eps[0], params)
        storage.write_json(out / "slicing.json", sl.to_json())
        report["slicing"] = {"closed_form_ok": sl.closed_form_ok, "S": sl.S, "log_bound": sl.log_bound}
        ok &= sl.closed_form_ok
    storage.write_json(out / "verify.json", report)
    print(json.dumps(report, indent=2, default=float))
    return OK if ok else NUMERICAL


def cmd_predict(args, cfg) -> int:
    p = args.p if args.p is not None else cfg.p
    mu = args.mu if args.mu is not None else cfg.mu
    n = args.n if args.n is not None else cfg.n
    try:
        params = ProblemParams(p=p, n=n, mu=mu, k=cfg.k)
    except ValueError as e:
        raise UsageError(str(e)) from e
    rows = {}
    for ref in Reference:
        try:
            pred = predicted_lifespan(cfg.eps[-1], params, ref)
        except ValueError as e:
            rows[ref.value] = {"error": str(e)}
            continue
        rows[ref.value] = {"form": pred.form.value, "exponent": pred.exponent, "regime": pred.regime.value}
    print(json.dumps({"p": p, "mu": mu, "n": n, "forms": rows}, indent=2))
    return OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "fit": cmd_fit, "verify": cmd_verify, "predict": cmd_predict}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.cmd](args, cfg)
    except UsageError as e:
        print(f"dampwave: error: {e}", file=sys.stderr)
        return USAGE
    except NumericalFailure as e:
        print(f"dampwave: numerical failure: {e}", file=sys.stderr)
        return NUMERICAL
    except (storage.StorageError, OSError) as e:
        print(f"dampwave: I/O error: {e}", file=sys.stderr)
        return IO
    except FloatingPointError as e:
        print(f"dampwave: numerical failure: {e}", file=sys.stderr)
        return NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
