"""Command-line front end.

Subcommands: test (run the corrected location test on a CSV), simulate (the
Monte Carlo experiments), mp-eval (tabulate the limit-law quantities) and
verify-identities (residual table for the analytic cross-checks).

Exit codes: 0 success, 2 input or validation problem, 3 verification failure.
The HIDIM_T2_THREADS environment variable caps simulation parallelism.
"""
from __future__ import annotations

import argparse
import hashlib
import math
import sys

from .csvio import CsvLayout, read_data_matrix
from .errors import DomainError, HidimT2Error
from .inference import (
    ALTERNATIVES,
    covariance_identity_residual,
    standardize_t2,
)
from .montecarlo import (
    EntryDistribution,
    SimConfig,
    estimate_process_covariance,
    generate_data,
    run_bilinear_experiment,
    run_mean_norm_experiment,
    run_t2_experiment,
)
from .mp_law import (
    MpModel,
    cdf,
    density,
    fixed_point_residual,
    integral_f,
    inverse_map_residual,
    stieltjes_m,
    companion_m,
)
from .reporting import make_envelope
from .spectral import hotelling_t2, resolvent_identity_check

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VERIFY = 3

FUNCTIONS = {
    "one": lambda x: 1.0,
    "x": lambda x: x,
    "x2": lambda x: x * x,
    "inv_x": lambda x: 1.0 / x,
    "inv_x2": lambda x: 1.0 / (x * x),
    "log": math.log,
}

_THRESHOLDS = {
    "fixed_point": 1e-12,
    "inverse_map": 1e-10,
    "resolvent": 1e-9,
    "covariance_identity": 1e-9,
}

_VERIFY_SEED = 7


def _parse_complex(text: str) -> complex:
    try:
        value = complex(text.strip().replace("i", "j"))
    except ValueError:
        raise DomainError(f"cannot parse complex number {text!r}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise DomainError(f"complex value must be finite, got {text!r}")
    return value


def _parse_complex_list(text: str) -> list[complex]:
    return [_parse_complex(part) for part in text.split(",") if part.strip()]


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise DomainError(f"cannot parse number list {text!r}") from None


def _parse_location(text: str):
    values = _parse_float_list(text)
    if not values:
        raise DomainError(f"cannot parse location {text!r}")
    return values[0] if len(values) == 1 else tuple(values)


def _fmt_complex(z: complex) -> str:
    return f"{z.real:g}{z.imag:+g}i"


def _file_sha256(path: str) -> str:
    with open(path, "rb") as handle:
        return hashlib.sha256(handle.read()).hexdigest()


def _print_table(headers: list[str], rows: list[list[str]]) -> None:
    widths = [len(h) for h in headers]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    print(line)
    print("  ".join("-" * w for w in widths))
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))


def _emit(envelope, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(envelope.to_json() + "\n")
        print(f"report written to {out_path}")


def _cmd_test(args) -> int:
    layout = CsvLayout(rows_are_observations=not args.columns_are_observations,
                       has_header=args.header, delimiter=args.delimiter)
    data = read_data_matrix(args.csv, layout)
    mu0 = _parse_location(args.mu0)
    t2 = hotelling_t2(data, mu0)
    report = standardize_t2(t2, data.n, data.p, alternative=args.alternative)
    print(f"n = {report.n}   p = {report.p}   c_n = {report.c_n:.6g}")
    print(f"T2 = {report.t2:.10g}")
    print(f"centering = {report.centering:.10g}   scaling = {report.scaling:.10g}")
    print(f"zscore = {report.zscore:.10g}")
    print(f"p_value = {report.p_value:.6g}   alternative = {report.alternative}")
    inputs = {
        "csv_sha256": _file_sha256(args.csv),
        "layout": layout,
        "mu0": mu0,
        "alternative": args.alternative,
    }
    _emit(make_envelope("test", inputs, report), args.out)
    return EXIT_OK


def _config_from_args(args) -> SimConfig:
    if args.config:
        import json

        with open(args.config) as handle:
            raw = json.load(handle)
        dist_raw = raw.get("dist", {})
        dist = EntryDistribution(kind=dist_raw.get("kind", "gaussian"),
                                 df=dist_raw.get("df"))
        shift = raw.get("mean_shift", 0.0)
        if isinstance(shift, list):
            shift = tuple(shift)
        return SimConfig(n=raw["n"], p=raw["p"], replicates=raw["replicates"],
                         dist=dist, seed=raw["seed"], mean_shift=shift,
                         truncation_exponent=raw.get("truncation_exponent"))
    missing = [name for name, value in
               (("--n", args.n), ("--p", args.p), ("--reps", args.reps), ("--seed", args.seed))
               if value is None]
    if missing:
        raise DomainError(f"missing required flags: {', '.join(missing)} (or use --config)")
    dist = EntryDistribution(kind=args.dist, df=args.df)
    shift = _parse_location(args.mean_shift) if args.mean_shift else 0.0
    return SimConfig(n=args.n, p=args.p, replicates=args.reps, dist=dist,
                     seed=args.seed, mean_shift=shift,
                     truncation_exponent=args.truncate_exponent)


def _simreport_payload(experiment: str, report) -> dict:
    theory = report.theory_variance
    ratio = report.sample_var_of_z / theory if theory > 0.0 else None
    return {
        "experiment": experiment,
        "config": report.config_echo,
        "zscores": report.zscores,
        "ks_statistic": report.ks_statistic,
        "sample_mean_of_z": report.sample_mean_of_z,
        "sample_var_of_z": report.sample_var_of_z,
        "theory_variance": theory,
        "variance_ratio": ratio,
        "failures": report.failures,
        "failed_indices": report.failed_indices,
        "runtime_seconds": report.runtime_seconds,
    }


def _cmd_simulate(args) -> int:
    config = _config_from_args(args)
    experiment = args.experiment
    zpoints = None
    fname = None
    if experiment == "t2":
        report = run_t2_experiment(config)
    elif experiment == "bilinear":
        fname = args.f or "x"
        if fname not in FUNCTIONS:
            raise DomainError(f"--f must be one of {sorted(FUNCTIONS)}, got {fname!r}")
        report = run_bilinear_experiment(config, FUNCTIONS[fname])
    elif experiment == "mean-norm":
        report = run_mean_norm_experiment(config)
    else:
        zpoints = _parse_complex_list(args.z or "1+1i,2+1i")
        estimate = estimate_process_covariance(config, zpoints)
        print(f"experiment = process-cov   n = {config.n}   p = {config.p}   "
              f"replicates = {config.replicates}   failures = {estimate.failures}")
        rows = []
        for i, zi in enumerate(estimate.zpoints):
            for j, zj in enumerate(estimate.zpoints):
                emp, theo = estimate.empirical[i, j], estimate.theory[i, j]
                rel = abs(emp - theo) / abs(theo) if theo != 0 else float("nan")
                rows.append([_fmt_complex(zi), _fmt_complex(zj),
                             _fmt_complex(emp), _fmt_complex(theo), f"{rel:.3f}"])
        _print_table(["z1", "z2", "empirical", "theory", "rel_err"], rows)
        payload = {
            "experiment": experiment,
            "config": config,
            "zpoints": estimate.zpoints,
            "empirical": estimate.empirical,
            "theory": estimate.theory,
            "replicates": estimate.replicates,
            "failures": estimate.failures,
            "failed_indices": estimate.failed_indices,
            "runtime_seconds": estimate.runtime_seconds,
        }
        inputs = {"experiment": experiment, "config": config, "zpoints": zpoints}
        _emit(make_envelope("simulate", inputs, payload), args.out)
        return EXIT_OK

    print(f"experiment = {experiment}   n = {config.n}   p = {config.p}   "
          f"replicates = {config.replicates}   dist = {config.dist.kind}   "
          f"seed = {config.seed}")
    print(f"ks = {report.ks_statistic:.6g}   mean(z) = {report.sample_mean_of_z:.6g}   "
          f"var(z) = {report.sample_var_of_z:.6g}")
    if report.theory_variance != 1.0:
        print(f"theory variance = {report.theory_variance:.10g}")
    print(f"failures = {report.failures}   runtime = {report.runtime_seconds:.2f} s")
    payload = _simreport_payload(experiment, report)
    inputs = {"experiment": experiment, "config": config, "f": fname, "zpoints": zpoints}
    _emit(make_envelope("simulate", inputs, payload), args.out)
    return EXIT_OK


def _cmd_mp_eval(args) -> int:
    model = MpModel(args.c)
    what = args.what
    rows: list[dict] = []
    if what in ("density", "cdf"):
        if not args.x:
            raise DomainError(f"{what} needs --x with a comma-separated grid")
        fn = density if what == "density" else cdf
        for x in _parse_float_list(args.x):
            rows.append({"x": x, "value": float(fn(model, x))})
        _print_table(["x", "value"],
                     [[f"{r['x']:g}", f"{r['value']:.12g}"] for r in rows])
    elif what in ("m", "mdot"):
        if not args.z:
            raise DomainError(f"{what} needs --z with a comma-separated grid")
        for z in _parse_complex_list(args.z):
            if what == "m":
                value = stieltjes_m(model, z)
                residual = fixed_point_residual(model, z)
            else:
                value = companion_m(model, z)
                residual = inverse_map_residual(model, z)
            rows.append({"z": z, "value": value, "residual": residual})
        _print_table(["z", "value", "residual"],
                     [[_fmt_complex(r["z"]), _fmt_complex(r["value"]),
                       f"{r['residual']:.3e}"] for r in rows])
    else:
        fname = args.f
        if fname not in FUNCTIONS:
            raise DomainError(f"--f must be one of {sorted(FUNCTIONS)}, got {fname!r}")
        value = integral_f(model, FUNCTIONS[fname])
        rows.append({"f": fname, "value": value})
        _print_table(["f", "value"], [[fname, f"{value:.12g}"]])
    inputs = {"c": float(args.c), "what": what, "x": args.x, "z": args.z, "f": args.f}
    payload = {"c": float(args.c), "what": what, "rows": rows}
    _emit(make_envelope("mp-eval", inputs, payload), args.out)
    return EXIT_OK


def _cmd_verify_identities(args) -> int:
    cs = _parse_float_list(args.c)
    zgrid = _parse_complex_list(args.z_grid)
    if not cs or not zgrid:
        raise DomainError("need at least one c and one grid point")
    thresholds = dict(_THRESHOLDS)
    if args.max_resid is not None:
        thresholds = {name: args.max_resid for name in thresholds}

    rows: list[dict] = []
    domain_errors = 0

    def add(check: str, c: float, where: str, residual: float | None, error: str | None):
        limit = thresholds[check]
        if error is not None:
            status = "error"
        else:
            status = "pass" if residual <= limit else "FAIL"
        rows.append({"check": check, "c": c, "at": where, "residual": residual,
                     "threshold": limit, "status": status, "error": error})

    for c in cs:
        model = MpModel(c)
        for z in zgrid:
            for check, fn in (("fixed_point", fixed_point_residual),
                              ("inverse_map", inverse_map_residual)):
                try:
                    add(check, c, _fmt_complex(z), float(fn(model, z)), None)
                except DomainError as exc:
                    domain_errors += 1
                    add(check, c, _fmt_complex(z), None, str(exc))
        pairs = list(zip(zgrid, zgrid[1:])) + [(zgrid[0], zgrid[0].conjugate())]
        for z1, z2 in pairs:
            where = f"{_fmt_complex(z1)},{_fmt_complex(z2)}"
            try:
                add("covariance_identity", c, where,
                    float(covariance_identity_residual(c, z1, z2)), None)
            except DomainError as exc:
                domain_errors += 1
                add("covariance_identity", c, where, None, str(exc))

    # one fixed-seed panel exercises the finite-sample resolvent link
    instance = SimConfig(n=80, p=20, replicates=1,
                         dist=EntryDistribution(kind="gaussian"), seed=_VERIFY_SEED)
    data = generate_data(instance, 0)
    for z in zgrid:
        try:
            add("resolvent", float("nan"), _fmt_complex(z),
                float(resolvent_identity_check(data, z)), None)
        except (DomainError, HidimT2Error) as exc:
            domain_errors += 1
            add("resolvent", float("nan"), _fmt_complex(z), None, str(exc))

    table = []
    for r in rows:
        table.append([
            r["check"],
            "-" if math.isnan(r["c"]) else f"{r['c']:g}",
            r["at"],
            "-" if r["residual"] is None else f"{r['residual']:.3e}",
            f"{r['threshold']:.1e}",
            r["status"] if r["error"] is None else f"error: {r['error']}",
        ])
    _print_table(["check", "c", "at", "residual", "threshold", "status"], table)

    payload_rows = [{**r, "c": None if math.isnan(r["c"]) else r["c"]} for r in rows]
    inputs = {"c": cs, "z_grid": zgrid, "max_resid": args.max_resid, "seed": _VERIFY_SEED}
    _emit(make_envelope("verify-identities", inputs,
                        {"thresholds": thresholds, "rows": payload_rows}), args.out)

    breaches = [r for r in rows if r["status"] == "FAIL"]
    if domain_errors:
        print(f"{domain_errors} grid point(s) were outside the valid domain", file=sys.stderr)
        return EXIT_INPUT
    if breaches:
        print(f"{len(breaches)} residual(s) exceeded their threshold", file=sys.stderr)
        return EXIT_VERIFY
    print("all residuals within thresholds")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hidim-t2",
        description="Dimension-corrected one-sample location test and its "
                    "limit-law toolkit.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_test = sub.add_parser("test", help="run the corrected test on a CSV panel")
    p_test.add_argument("csv", help="path to the delimited data file")
    p_test.add_argument("--mu0", default="0",
                        help="hypothesized location: scalar broadcast or comma vector")
    p_test.add_argument("--alternative", choices=ALTERNATIVES, default="two_sided")
    p_test.add_argument("--columns-are-observations", action="store_true",
                        help="treat each column as one observation (default: rows)")
    p_test.add_argument("--header", action="store_true",
                        help="skip the first non-blank row")
    p_test.add_argument("--delimiter", default=",")
    p_test.add_argument("--out", help="write the JSON report here")
    p_test.set_defaults(handler=_cmd_test)

    p_sim = sub.add_parser("simulate", help="run a seeded Monte Carlo experiment")
    p_sim.add_argument("experiment",
                       choices=["t2", "bilinear", "mean-norm", "process-cov"])
    p_sim.add_argument("--config", help="JSON file with the SimConfig fields")
    p_sim.add_argument("--n", type=int)
    p_sim.add_argument("--p", type=int)
    p_sim.add_argument("--reps", type=int)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--dist", default="gaussian",
                       choices=["gaussian", "rademacher", "shifted_exponential", "student_t"])
    p_sim.add_argument("--df", type=int, help="degrees of freedom for student_t")
    p_sim.add_argument("--mean-shift", help="true location: scalar or comma vector")
    p_sim.add_argument("--truncate-exponent", type=float, nargs="?", const=0.125,
                       help="preprocess panels at threshold n**(-e); bare flag means e = 0.125")
    p_sim.add_argument("--f", help="named function for the bilinear experiment")
    p_sim.add_argument("--z", help="comma list of complex grid points for process-cov")
    p_sim.add_argument("--out", help="write the JSON report here")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_mp = sub.add_parser("mp-eval", help="tabulate limit-law quantities")
    p_mp.add_argument("what", choices=["density", "cdf", "m", "mdot", "integral"])
    p_mp.add_argument("--c", type=float, required=True)
    p_mp.add_argument("--x", help="comma list of real evaluation points")
    p_mp.add_argument("--z", help="comma list of complex evaluation points")
    p_mp.add_argument("--f", help=f"named function, one of {sorted(FUNCTIONS)}")
    p_mp.add_argument("--out", help="write the JSON report here")
    p_mp.set_defaults(handler=_cmd_mp_eval)

    p_ver = sub.add_parser("verify-identities",
                           help="residual table for the analytic cross-checks")
    p_ver.add_argument("--c", default="0.2,0.5,0.8",
                       help="comma list of aspect ratios")
    p_ver.add_argument("--z-grid", default="1+1i,1-1i,2+1i,0.5+2i,-1+1i,3+2i",
                       help="comma list of complex grid points")
    p_ver.add_argument("--max-resid", type=float,
                       help="override every per-check threshold")
    p_ver.add_argument("--out", help="write the JSON report here")
    p_ver.set_defaults(handler=_cmd_verify_identities)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except HidimT2Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
