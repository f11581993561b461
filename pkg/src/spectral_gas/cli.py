"""Command-line driver.

Every subcommand writes its artifacts plus ``manifest.json`` into ``--out``.
``replay`` re-runs a manifest and reproduces the artifacts byte for byte.

Exit codes: 0 success, 2 usage, 3 numeric/domain failure, 4 resource guard.
"""
import argparse
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .coulomb import GasConfig, make_rng, mcmc_run
from .empirical import (
    ks_distance,
    normalize_cone,
    normalize_singular,
    normalize_uniform,
    singular_values,
    wasserstein1,
)
from .equilibrium import POSITIVE, SYMMETRIC, solve_equilibrium
from .ratefn import (
    EIGENVALUE,
    EIGENVALUE_INF,
    SINGULAR,
    GridMeasure,
    grid_log_energy,
    rate_gas,
    rate_pair,
    rate_spectral,
)
from .special import model_constants, parse_exponent, rate_constant_C
from .ullman import LimitLaw

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_RESOURCE = 4

MAX_N = 4096

ENSEMBLE_FLAGS = {"eigen": EIGENVALUE, "eigenvalue": EIGENVALUE, "singular": SINGULAR}


class ResourceGuard(RuntimeError):
    pass


class UsageError(ValueError):
    pass


def _json_value(v):
    if isinstance(v, float) and math.isinf(v):
        return "infinity" if v > 0 else "-infinity"
    if isinstance(v, (np.floating, np.integer)):
        return _json_value(v.item())
    return v


def _p_json(p):
    return "inf" if math.isinf(p) else p


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj):
    return json.dumps({k: _json_value(v) for k, v in obj.items()}, indent=2) + "\n"


def _csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- converge


def converge_replica(p, beta, ensemble, n, replica, seed, measure="cone", sweeps=400, burn_in=300):
    """One (n, replica) cell of the convergence experiment: ``(ks, w1)``.

    Randomness comes from streams keyed by ``(seed, n, replica)`` only, so
    replicas can run in any order or in parallel.
    """
    chain_seed = int(np.random.SeedSequence([int(seed), int(n), int(replica)]).generate_state(1, np.uint64)[0])
    config = GasConfig(
        n=n, p=p, beta=beta, ensemble=ensemble, sweeps=sweeps, burn_in=burn_in,
        thin=sweeps - burn_in, seed=chain_seed,
    )
    x = mcmc_run(config).states[-1]
    u = None
    if measure == "uniform":
        u = 1.0 - make_rng(seed, n, replica, 1).random()  # in (0, 1]
    elif measure != "cone":
        raise ValueError(f"unknown measure {measure!r}")
    if ensemble == SINGULAR:
        mu = singular_values(normalize_singular(x, p, beta, u=u))
        law = LimitLaw(p, SINGULAR)
    else:
        mu = normalize_cone(x, p) if u is None else normalize_uniform(x, u, p, beta)
        law = LimitLaw(p, EIGENVALUE)
    return ks_distance(mu, law), wasserstein1(mu, law)


def _converge_task(args):
    return converge_replica(*args)


def run_converge(p, beta, ensemble, n_list, replicas, seed, measure="cone", sweeps=400,
                 burn_in=300, workers=1, force=False):
    """Rows ``(n, replica, ks, w1)`` for every requested ``n`` and replica."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("n list must be strictly ascending")
    if max(n_list) > MAX_N and not force:
        raise ResourceGuard(f"n > {MAX_N} requires --force")
    tasks = [(p, beta, ensemble, n, r, seed, measure, sweeps, burn_in) for n in n_list for r in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_converge_task, tasks))
    else:
        results = [_converge_task(t) for t in tasks]
    return [(t[3], t[4], ks, w1) for t, (ks, w1) in zip(tasks, results)]


# ---------------------------------------------------------------- commands


def cmd_constants(args):
    p, beta = args.p, args.beta
    if math.isinf(p):
        record = {"p": "inf", "beta": beta, "C": rate_constant_C(p, beta)}
    else:
        record = model_constants(p, beta).as_dict()
    text = _dump_json(record)
    sys.stdout.write(text)
    return {"constants.json": text}


def cmd_limit_density(args):
    law = LimitLaw(args.p, ENSEMBLE_FLAGS[args.ensemble])
    x, d = law.tabulate(args.points)
    return {"limit_density.csv": _csv(["x", "density"], zip(map(float, x), map(float, d)))}


def cmd_converge(args):
    if math.isinf(args.p):
        raise ValueError("the gas sampler needs a finite p")
    rows = run_converge(
        args.p, args.beta, ENSEMBLE_FLAGS[args.ensemble], args.n, args.replicas, args.seed,
        measure=args.measure, sweeps=args.sweeps, burn_in=args.burn_in, workers=args.workers,
        force=args.force,
    )
    return {"converge.csv": _csv(["n", "replica", "ks", "w1"], rows)}


def cmd_rate(args):
    mu = GridMeasure.from_csv(args.grid)
    p, beta, variant = args.p, args.beta, args.variant
    if variant in (EIGENVALUE, EIGENVALUE_INF, SINGULAR):
        value = rate_spectral(mu, p, beta, variant)
    elif variant == "gas":
        value = rate_gas(mu, p, beta)
    elif variant == "pair":
        if args.m is None:
            raise ValueError("--m is required for the pair rate")
        value = rate_pair(mu, args.m, p, beta)
    else:  # argparse restricts choices
        raise ValueError(variant)
    record = {
        "variant": variant,
        "p": _p_json(p),
        "beta": beta,
        "N": mu.N,
        "log_energy": grid_log_energy(mu),
        "rate": value,
    }
    if variant == "pair":
        record["m"] = args.m
    text = _dump_json(record)
    sys.stdout.write(text)
    return {"rate.json": text}


def cmd_equilibrium(args):
    report = solve_equilibrium(
        args.p, args.beta, L=args.L, N=args.N, max_iter=args.max_iter, gap_tol=args.gap_tol,
        domain=args.domain, away_steps=args.away_steps,
    )
    record = {"p": _p_json(args.p), "beta": args.beta, "domain": args.domain, **report.as_dict()}
    mu = report.minimizer
    csv = _csv(["center", "weight"], zip(map(float, mu.centers), map(float, mu.weights)))
    text = _dump_json(record)
    sys.stdout.write(text)
    return {"equilibrium.json": text, "minimizer.csv": csv}


def cmd_sample(args):
    if math.isinf(args.p):
        raise ValueError("the gas sampler needs a finite p")
    if args.n > MAX_N and not args.force:
        raise ResourceGuard(f"n > {MAX_N} requires --force")
    config = GasConfig(
        n=args.n, p=args.p, beta=args.beta, ensemble=ENSEMBLE_FLAGS[args.ensemble],
        sweeps=args.sweeps, burn_in=args.burn_in, thin=args.thin, proposal_sigma=args.sigma,
        seed=args.seed,
    )
    chain = mcmc_run(config)
    header = [f"x{i}" for i in range(config.n)]
    rows = [[float(v) for v in row] for row in chain.states]
    summary = {"acceptance_rate": chain.acceptance_rate, "final_sigma": chain.final_sigma,
               "states": int(chain.states.shape[0])}
    return {"chain.csv": _csv(header, rows), "config.txt": config.to_kv(), "chain.json": _dump_json(summary)}


def cmd_replay(args):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    argv = list(manifest["argv"])
    out = args.out or os.path.dirname(os.path.abspath(args.manifest))
    return main(argv + ["--out", out])


# ---------------------------------------------------------------- parser


def _positive_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _exponent(text):
    try:
        return parse_exponent(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _n_list(text):
    try:
        vals = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("n values must be positive")
    return vals


def build_parser():
    parser = argparse.ArgumentParser(prog="spectral-gas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("constants", help="closed-form constants as JSON")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--beta", type=_positive_float, default=2.0)
    common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("limit-density", help="tabulate a limit density as CSV")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--ensemble", choices=["eigen", "singular"], default="eigen")
    sp.add_argument("--points", "--N", dest="points", type=int, default=1000)
    common(sp)
    sp.set_defaults(func=cmd_limit_density)

    sp = sub.add_parser("converge", help="distance of sampled spectra to the limit law")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--beta", type=_positive_float, default=2.0)
    sp.add_argument("--ensemble", choices=["eigen", "singular"], default="eigen")
    sp.add_argument("--n", type=_n_list, required=True, help="ascending list, e.g. 32,128,512")
    sp.add_argument("--replicas", type=int, default=8)
    sp.add_argument("--measure", choices=["cone", "uniform"], default="cone")
    sp.add_argument("--sweeps", type=int, default=400)
    sp.add_argument("--burn-in", type=int, default=300)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--force", action="store_true")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("rate", help="evaluate a rate function on a grid-measure CSV")
    sp.add_argument("--grid", required=True, help="CSV with header center,weight")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--beta", type=_positive_float, default=2.0)
    sp.add_argument("--variant", choices=[EIGENVALUE, EIGENVALUE_INF, SINGULAR, "gas", "pair"],
                    default=EIGENVALUE)
    sp.add_argument("--m", type=float, default=None, help="moment argument of the pair rate")
    common(sp)
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("equilibrium", help="Frank-Wolfe minimization of the rate function")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--beta", type=_positive_float, default=2.0)
    sp.add_argument("--N", type=int, default=1024)
    sp.add_argument("--L", type=_positive_float, default=None)
    sp.add_argument("--gap-tol", type=_positive_float, default=1e-5)
    sp.add_argument("--max-iter", type=int, default=500_000)
    sp.add_argument("--domain", choices=[SYMMETRIC, POSITIVE], default=SYMMETRIC)
    sp.add_argument("--away-steps", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_equilibrium)

    sp = sub.add_parser("sample", help="run the gas sampler and export the chain")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--beta", type=_positive_float, default=2.0)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--ensemble", choices=["eigen", "singular"], default="eigen")
    sp.add_argument("--sweeps", type=int, default=2000)
    sp.add_argument("--burn-in", type=int, default=500)
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--sigma", type=_positive_float, default=None)
    sp.add_argument("--force", action="store_true")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("replay", help="re-run a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", default=None, help="defaults to the manifest's directory")
    sp.set_defaults(func=cmd_replay)
    return parser


def _strip_out(argv):
    out = []
    skip = False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        out.append(a)
    return out


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    start = time.perf_counter()
    try:
        artifacts = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuard as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "replay":
        return artifacts
    paths = []
    for name, text in artifacts.items():
        path = os.path.join(args.out, name)
        _atomic_write(path, text)
        paths.append(name)
    params = {}
    for k, v in vars(args).items():
        if k in ("func", "out", "command"):
            continue
        params[k] = _p_json(v) if k == "p" else _json_value(v)
    manifest = {
        "subcommand": args.command,
        "params": params,
        "seed": getattr(args, "seed", None),
        "argv": _strip_out(argv),
        "artifacts": paths,
        "duration_s": time.perf_counter() - start,
        "version": __version__,
    }
    _atomic_write(os.path.join(args.out, "manifest.json"), json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
