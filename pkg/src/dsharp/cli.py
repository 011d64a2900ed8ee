"""Command-line interface: ``dsharp {fit,diagnose,decide,q2d,combine,gbayes,simulate}``.

Every command writes a JSON report (``--out``, default stdout) that carries
the resolved configuration and seed, and optionally CSV curves
(``--curves``). Exit status is 0 only when the report was fully written.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from . import decisions as dec
from . import divergence as div
from . import experts as exp_mod
from . import gbayes as gb
from . import io
from . import q2d as q2d_mod
from .distributions import parse_spec
from .errors import DSharpError, InputError
from .lp_basis import build_basis
from .sharpening import CURVE_POINTS, fit, make_dsharp

DEFAULT_SEED = 20240101
TAIL = 1e-6

log = logging.getLogger("dsharp")


def x_grid(*models, points: int = CURVE_POINTS, tail: float = TAIL) -> np.ndarray:
    """Evenly spaced x covering every model between its tail quantiles."""
    lo = min(float(m.quantile(tail)) for m in models)
    hi = max(float(m.quantile(1.0 - tail)) for m in models)
    return np.linspace(lo, hi, points)


def density_grid(*models, tol: float = 1e-5, max_points: int = 1 << 16) -> np.ndarray:
    """``x_grid`` refined by doubling until the trapezoid rule reproduces each
    model's mass over the grid within ``tol``."""
    points = CURVE_POINTS
    while True:
        x = x_grid(*models, points=points)
        ok = all(abs(np.trapezoid(np.asarray(m.pdf(x)), x) - (m.cdf(x[-1]) - m.cdf(x[0]))) < tol
                 for m in models)
        if ok or points >= max_points:
            return x
        points = 2 * points - 1


def _report(args, results: dict) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {
        "schema_version": io.SCHEMA_VERSION,
        "dsharp_version": __version__,
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "config": config,
        "results": results,
    }


def _emit(args, results: dict) -> None:
    text = io.dumps(_report(args, results))
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands ------------------------------------------------------------------


def cmd_fit(args) -> dict:
    data = io.read_data(args.data)
    base = parse_spec(args.f0)
    sf = fit(data, base, args.m, gamma=args.gamma, select=not args.fixed_m)
    model = sf.model()
    chi = sf.chisq()
    u = np.linspace(0.0, 1.0, CURVE_POINTS)
    d_curve = np.asarray(sf.eval_d(u))
    results = {
        "n": sf.n,
        "f0": base.to_spec(),
        "raw_coeffs": sf.raw_coeffs,
        "selected": list(sf.selected),
        "smooth_coeffs": {str(j): c for j, c in sf.smooth_coeffs.items()},
        "open_scores": sf.open_scores,
        "chisq": chi.value,
        "chisq_dof": chi.dof,
        "p_value": chi.p_value,
        "normalizer": model.normalizer,
        "d_argmax_u": float(u[int(np.argmax(d_curve))]),
    }
    if args.curves:
        x = density_grid(base, model)
        # the u and x columns share rows, so a refined x grid refines u too
        u = np.linspace(0.0, 1.0, x.size)
        io.write_csv(args.curves, {
            "u": u, "d_hat": np.asarray(sf.eval_d(u)), "x": x,
            "f0": np.asarray(base.pdf(x)), "f_hat": np.asarray(model.pdf(x)),
        })
    return results


def cmd_diagnose(args) -> dict:
    data = io.read_data(args.data)
    base = parse_spec(args.f0)
    sf = fit(data, base, args.m, gamma=args.gamma)
    chi = sf.chisq()
    model = sf.model()
    results = {
        "n": sf.n,
        "f0": base.to_spec(),
        "m": args.m,
        "raw_coeffs": sf.raw_coeffs,
        "chisq": chi.as_dict(),
        "selected": list(sf.selected),
        "smoothed_divergences": {k: div.model_divergence(model, k) for k in div.KINDS},
        "renyi_alpha_0.5": div.model_divergence(model, "renyi", alpha=0.5),
    }
    if args.curves:
        u = np.linspace(0.0, 1.0, CURVE_POINTS)
        io.write_csv(args.curves, {"u": u, "d_raw": sf.raw_coeffs @ build_basis(args.m).eval_all(u) + 1.0,
                                   "d_hat": np.asarray(sf.eval_d(u))})
    return results


def cmd_decide(args) -> dict:
    data = io.read_data(args.data)
    base = parse_spec(args.f0)
    problem = dec.DecisionProblem.load(args.losses)
    ens = dec.bootstrap_ensemble(data, base, M=args.M, B=args.B, seed=args.seed, gamma=args.gamma)
    profile = dec.action_profile(problem, ens)
    direct = dec.direct_fits(data, base, args.M)
    mm_boot = dec.minimax(problem, ens)
    mm_all = dec.minimax(problem, list(ens.members) + direct)
    robust = dec.robust_risks(problem, ens)
    results = {
        "n": int(data.size),
        "f0": base.to_spec(),
        "B": ens.B,
        "M": args.M,
        "skipped_replicates": list(ens.skipped),
        "actions": list(problem.actions),
        "optimal_action_f0": dec.optimal_action(problem, base),
        "profile": profile.as_dict(),
        "entropy": profile.entropy,
        "robust_action": problem.actions[dec.first_best(robust)],
        "robust_risks": dict(zip(problem.actions, robust)),
        "minimax_bootstrap": {
            "action": mm_boot.action,
            "worst_case": mm_boot.worst_case,
            "least_favorable_member": mm_boot.attained_by,
        },
        "minimax": {
            "action": mm_all.action,
            "worst_case": mm_all.worst_case,
            # indices < B are bootstrap members; B + m is the direct fit of size m
            "attained_by": mm_all.attained_by,
        },
    }
    if args.curves:
        members = list(ens.members)
        x = density_grid(base, *members[: min(len(members), 50)])
        dens = np.array([np.asarray(m.pdf(x)) for m in members])
        io.write_csv(args.curves, {
            "x": x, "f0": np.asarray(base.pdf(x)), "f_bar": dens.mean(axis=0),
            "band_min": dens.min(axis=0), "band_median": np.median(dens, axis=0),
            "band_max": dens.max(axis=0),
        })
    return results


def cmd_q2d(args) -> dict:
    qp = q2d_mod.QPData.read_csv(args.qp)
    lam = args.lam
    if lam not in ("auto", "loo"):
        try:
            lam = float(lam)
        except ValueError:
            raise InputError(f"--lambda must be auto, loo or a number, got {lam!r}") from None
    res = q2d_mod.q2d(qp, args.family, m=args.m, method=args.method, lam=lam)
    model = res.model
    results = res.as_dict()
    results["fitted_cdf"] = np.asarray(model.cdf(qp.x))
    results["target_p"] = qp.p
    if args.curves:
        x = density_grid(res.base, model)
        io.write_csv(args.curves, {"x": x, "f0": np.asarray(res.base.pdf(x)),
                                   "pdf": np.asarray(model.pdf(x)), "cdf": np.asarray(model.cdf(x))})
    return results


def cmd_combine(args) -> dict:
    data = io.read_data(args.data)
    try:
        specs = json.loads(open(args.experts).read())
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.experts}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(specs, list) or not all(isinstance(s, str) for s in specs):
        raise InputError(f"{args.experts}: expected a JSON list of model spec strings")
    experts = [parse_spec(s) for s in specs]
    ens = exp_mod.consensus(data, experts, args.m)
    results = ens.as_dict()
    if args.curves:
        x = density_grid(ens.consensus, *experts)
        cols = {"x": x, "consensus": np.asarray(ens.consensus.pdf(x))}
        cols.update({f"expert_{i + 1}": np.asarray(e.pdf(x)) for i, e in enumerate(experts)})
        io.write_csv(args.curves, cols)
    return results


def cmd_gbayes(args) -> dict:
    data = io.read_data(args.data)
    if args.prior == "uniform":
        if not args.grid:
            raise InputError("--grid is required with a uniform prior")
        names, grid = gb.parse_grid(args.grid)
        prior = None
    else:
        grid, prior = gb.read_prior(args.prior)
        names = (args.param,)
    family = gb.ParametricFamily.from_spec(args.f0, names)
    post = gb.d_posterior(data, family, grid, prior, kind=args.divergence, m=args.m,
                          alpha=args.alpha, smoothing=args.smoothing, names=names)
    if args.curves and grid.ndim == 1:
        io.write_csv(args.curves, {"theta": grid, "prior": post.prior, "posterior": post.posterior})
    return post.as_dict()


def _parse_coeffs(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        j, sep, c = item.partition(":")
        if not sep:
            raise InputError(f"bad coefficient {item!r}: expected ORDER:VALUE")
        try:
            out[int(j)] = float(c)
        except ValueError as exc:
            raise InputError(f"bad coefficient {item!r}") from exc
    return out


def cmd_simulate(args) -> dict:
    model = parse_spec(args.true_model)
    if args.coeffs:
        model = make_dsharp(model, _parse_coeffs(args.coeffs))
    sample = model.sample(args.n, seed=args.seed)
    io.write_data(args.data_out, sample.values)
    return {
        "true_model": args.true_model,
        "coeffs": _parse_coeffs(args.coeffs) if args.coeffs else {},
        "n": sample.n,
        "path": args.data_out,
        "mean": float(sample.values.mean()),
    }


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsharp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, f0=True, m=10):
        if data:
            p.add_argument("--data", required=True, help="CSV with one numeric column (header 'x' optional)")
        if f0:
            p.add_argument("--f0", required=True, help="model-0 spec, e.g. normal:mean=0,sd=1")
        p.add_argument("--m", type=int, default=m, help="LP basis order")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", default="-", help="JSON report path (default stdout)")
        p.add_argument("--curves", default=None, help="CSV path for plotting curves")

    p = sub.add_parser("fit", help="estimate the sharpening function and repaired model")
    common(p)
    p.add_argument("--gamma", type=float, default=2.0, help="OPEN penalty (2 = AIC)")
    p.add_argument("--fixed-m", action="store_true", help="keep all m raw coefficients (no OPEN)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="misspecification indices and chi-square test")
    common(p)
    p.add_argument("--gamma", type=float, default=2.0)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("decide", help="bootstrap abductive decision analysis")
    common(p)
    p.add_argument("--losses", required=True, help="JSON list of {action, expr|table}")
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--gamma", type=float, default=2.0)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("q2d", help="distribution from quantile-probability pairs")
    common(p, data=False, f0=False, m=q2d_mod.DEFAULT_M)
    p.add_argument("--qp", required=True, help="CSV with header x,p")
    p.add_argument("--family", default="normal", help="normal, laplace, logistic, uniform or exp")
    p.add_argument("--lambda", dest="lam", default="auto", help="auto, loo or a number")
    p.add_argument("--method", default="auto", choices=("auto", "ols", "lasso"))
    p.set_defaults(func=cmd_q2d)

    p = sub.add_parser("combine", help="relevance-weighted consensus of expert models")
    common(p, f0=False)
    p.add_argument("--experts", required=True, help="JSON list of model spec strings")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("gbayes", help="generalized d-posterior on a parameter grid")
    common(p, m=6)
    p.add_argument("--grid", default=None, help="name=lo:hi:step[;name=lo:hi:step]")
    p.add_argument("--prior", default="uniform", help="'uniform' or CSV with header theta,weight")
    p.add_argument("--param", default="mean", help="parameter named by a prior CSV")
    p.add_argument("--divergence", default="kl", choices=gb.KINDS)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--smoothing", default="raw", choices=("raw", "open"))
    p.set_defaults(func=cmd_gbayes)

    p = sub.add_parser("simulate", help="draw a fixture sample from a model")
    p.add_argument("--true-model", required=True, help="model spec to sample from")
    p.add_argument("--coeffs", default="", help="optional sharpening terms, e.g. 4:0.18")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--data-out", required=True, help="CSV path for the simulated data")
    p.add_argument("--out", default="-", help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        results = args.func(args)
        _emit(args, results)
    except (DSharpError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2 if isinstance(exc, (InputError, OSError)) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
