"""Command-line interface: ``oscgp <verb> [flags]``.

Exit status is 0 on success, 1 on a runtime error (or a failed
``series-check``) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from . import __version__
from .core import Branch, OgpParams, hermite_coeffs, oscillate, theoretical_moment
from .covariance import BorderCauchy, Exponential, FgnLike, bifbm_cov, model_from_dict
from .estimators import ObservationSet, estimate, lp_baseline, mesh_bound_h, alpha_estimates, ss_moment_estimates
from .harness import ExperimentSpec, run_clt, run_consistency
from .oracles import orthant_sweep
from .simulation import RngStream, TimeGrid, auto_mesh_grid, sample_general, sample_stationary

logger = logging.getLogger("oscgp")


def _positive(value):
    v = float(value)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return v


def _count(value):
    v = int(value)
    if v < 2:
        raise argparse.ArgumentTypeError(f"expected an integer >= 2, got {value}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="oscgp", description="Oscillating Gaussian process toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")

    s = sub.add_parser("simulate", help="simulate a driver path and its oscillation (CSV t,y,x)")
    s.add_argument("--model", required=True, choices=["exp", "border", "fgn", "bifbm"])
    s.add_argument("--theta", type=_positive, help="exponential rate (exp)")
    s.add_argument("--hurst", type=float, help="Hurst index (fgn, bifbm)")
    s.add_argument("--kk", type=float, help="bifractional K (bifbm)")
    s.add_argument("--alpha-plus", type=float, required=True)
    s.add_argument("--alpha-minus", type=float, required=True)
    s.add_argument("--dt", type=_positive)
    s.add_argument("--n", type=_count, required=True, help="number of grid points")
    s.add_argument("--t0", type=float, default=0.0)
    s.add_argument("--auto-mesh", action="store_true", help="use dt = log(n)/n")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--index", type=int, default=0, help="replication stream index")
    s.add_argument("--out", default="-")

    e = sub.add_parser("estimate", help="estimate (alpha_plus, alpha_minus) from a CSV of t,x")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--self-similar", action="store_true")
    e.add_argument("--hurst", type=float, help="self-similarity index (with --self-similar)")
    e.add_argument("--branch", choices=["both-positive", "mixed"], default="both-positive")
    e.add_argument("--baseline-lp", action="store_true")
    e.add_argument("--cov-model", help='driver covariance as JSON {"kind":..,"params":{..}} for h_N')
    e.add_argument("--out", default="-")

    r = sub.add_parser("refvals", help="closed-form moments and Hermite coefficients")
    r.add_argument("--alpha-plus", type=float, required=True)
    r.add_argument("--alpha-minus", type=float, required=True)
    r.add_argument("--n-moments", type=int, default=4)
    r.add_argument("--k-max", type=int, default=5)

    for verb in ("mc-consistency", "mc-clt"):
        m = sub.add_parser(verb, help=f"run a Monte Carlo study ({verb[3:]})")
        m.add_argument("--config", required=True)
        m.add_argument("--out-dir", required=True)
        m.add_argument("--n-jobs", type=int)

    c = sub.add_parser("series-check", help="orthant series vs quadrature sweep")
    c.add_argument("--tol", type=_positive, default=1e-8)
    c.add_argument("--max-mn", type=int, default=4)
    c.add_argument("--a-step", type=_positive, default=0.05)
    c.add_argument("--a-max", type=float, default=0.95)
    return p


def _dump(obj, dest):
    text = json.dumps(obj, indent=2, allow_nan=True)
    if dest == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(dest, "w") as fh:
            fh.write(text + "\n")


def _params(ap, am):
    return OgpParams(ap, am, Branch.BOTH_POSITIVE if am > 0 else Branch.MIXED_SIGN)


def _validate_simulate(parser, a):
    if a.model == "fgn" and a.hurst is None:
        parser.error("--model fgn requires --hurst")
    if a.model == "bifbm" and (a.hurst is None or a.kk is None):
        parser.error("--model bifbm requires --hurst and --kk")
    if a.model in ("exp", "border") and (a.hurst is not None or a.kk is not None):
        parser.error(f"--model {a.model} takes no --hurst/--kk")
    if a.model != "exp" and a.theta is not None:
        parser.error("--theta applies to --model exp only")
    if a.auto_mesh == (a.dt is not None):
        parser.error("give exactly one of --dt and --auto-mesh")


def cmd_simulate(a):
    params = _params(a.alpha_plus, a.alpha_minus)
    grid = auto_mesh_grid(a.n, a.t0) if a.auto_mesh else TimeGrid(a.t0, a.dt, a.n)
    rng = RngStream(a.seed, a.index)
    if a.model == "bifbm":
        H, K = a.hurst, a.kk
        bifbm_cov(H, K, 1.0, 1.0)
        path = sample_general(lambda s, t: bifbm_cov(H, K, s, t), grid, rng)
    else:
        model = {"exp": lambda: Exponential(a.theta if a.theta is not None else 1.0),
                 "border": BorderCauchy,
                 "fgn": lambda: FgnLike(a.hurst)}[a.model]()
        path = sample_stationary(model, grid, rng)
    x = oscillate(path.y, params)
    out = sys.stdout if a.out == "-" else open(a.out, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "y", "x"])
        for row in zip(path.times, path.y, x):
            w.writerow([f"{v:.17g}" for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def read_observations(path):
    """Read ``t,x`` or ``t,y,x`` CSV (header required); returns ``(t, x)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if "t" not in header or "x" not in header:
            raise ValueError(f"{path}: header must contain columns 't' and 'x', got {header}")
        it, ix = header.index("t"), header.index("x")
        rows = [(float(r[it]), float(r[ix])) for r in reader if r]
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def cmd_estimate(a):
    t, x = read_observations(a.infile)
    model = model_from_dict(json.loads(a.cov_model)) if a.cov_model else None
    if a.self_similar:
        obs = ObservationSet(t, x, a.hurst)
        m = ss_moment_estimates(obs, a.hurst)
        delta = float(np.max(np.diff(np.log(obs.times))))
        h = mesh_bound_h(model, delta) if model is not None else None
        report = alpha_estimates(m, a.branch, delta_max=delta, h_N=h)
    else:
        report = estimate(ObservationSet(t, x), a.branch, model)
    out = report.to_dict()
    out["config"] = {"in": a.infile, "self_similar": a.self_similar, "hurst": a.hurst,
                     "branch": a.branch, "cov_model": model.to_dict() if model else None}
    if a.baseline_lp:
        out["lp_baseline"] = lp_baseline(ObservationSet(t, x)).to_dict()
    _dump(out, a.out)
    return 0


def cmd_refvals(a):
    if a.n_moments < 1:
        raise ValueError("--n-moments must be >= 1")
    params = _params(a.alpha_plus, a.alpha_minus)
    out = {"config": {"alpha_plus": a.alpha_plus, "alpha_minus": a.alpha_minus,
                      "n_moments": a.n_moments, "k_max": a.k_max}}
    for n in range(1, a.n_moments + 1):
        out[f"mu_{n}"] = theoretical_moment(n, params)
    out["hermite"] = {
        "convention": "probabilists (E[He_j He_k] = k! delta_jk)",
        "f1": hermite_coeffs("f1", params, a.k_max).coeffs.tolist(),
        "f2": hermite_coeffs("f2", params, a.k_max).coeffs.tolist(),
    }
    _dump(out, "-")
    return 0


def cmd_mc(a):
    spec = ExperimentSpec.from_json(a.config)
    if a.n_jobs is not None:
        from dataclasses import replace

        spec = replace(spec, n_jobs=a.n_jobs)
    report = run_consistency(spec) if a.verb == "mc-consistency" else run_clt(spec)
    report.write(a.out_dir)
    summary = {"out_dir": a.out_dir, "kind": report.kind, "seconds": report.runtime["seconds"]}
    if report.slopes:
        summary["slopes"] = {k: v[0] for k, v in report.slopes.items()}
    if report.normality:
        summary["p_values"] = {k: v["p_value"] for k, v in report.normality.items() if isinstance(v, dict)}
    _dump(summary, "-")
    return 0


def cmd_series_check(a):
    recs = orthant_sweep(a.max_mn, a.a_step, a.a_max, a.tol)
    bad = [r for r in recs if not r["ok"]]
    worst = max(recs, key=lambda r: r["abs_err"])
    _dump({"config": {"tol": a.tol, "max_mn": a.max_mn, "a_step": a.a_step, "a_max": a.a_max},
           "points": len(recs), "failures": len(bad), "max_abs_err": worst["abs_err"],
           "worst": worst, "passed": not bad}, "-")
    return 0 if not bad else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "refvals": cmd_refvals,
    "mc-consistency": cmd_mc,
    "mc-clt": cmd_mc,
    "series-check": cmd_series_check,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.verb == "simulate":
        _validate_simulate(parser, args)
    try:
        return COMMANDS[args.verb](args)
    except Exception as exc:  # noqa: BLE001 - reported as runtime failure
        print(f"oscgp {args.verb}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
