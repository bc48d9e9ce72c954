"""Command-line interface: ``pmlhist {bound,calibrate,privatize,simulate,verify}``.

Data goes to stdout (or ``--out``); diagnostics go to stderr.

Exit codes: 0 success, 1 verification failed, 2 invalid input,
3 enumeration budget exceeded, 4 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, bounds, experiments, mechanism, oracle
from ._core import BACKEND
from .errors import CalibrationError, DomainError, EnumerationTooLarge, NoNoiseNeeded
from .rng import RandomStream

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_IO = 4

SEED_ENV = "PMLHIST_SEED"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise CliError(f"{SEED_ENV}={raw!r} is not an integer") from None
    return seed


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> tuple:
    return tuple(x.strip().lower() for x in text.split(",") if x.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _g(x: float) -> str:
    return format(x, ".12g")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    seed_default = _default_seed()
    parser = argparse.ArgumentParser(
        prog="pmlhist",
        description="Laplace histograms calibrated by pointwise maximal leakage.",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_, formatter_class=fmt)
        p.add_argument("--config", default=None,
                       help="file of key=value lines supplying defaults for this command")
        return p

    p = add("bound", "Print DP and PML leakage bounds for a noise scale.")
    p.add_argument("--b", type=float, default=2.0, help="Laplace noise scale")
    p.add_argument("--alpha", type=float, default=0.05, help="lower bound on every class probability")
    p.add_argument("--k", type=int, default=10, help="number of histogram bins")

    p = add("calibrate", "Noise scale for a target leakage level.")
    p.add_argument("--epsilon", type=float, required=True, help="target leakage in nats")
    p.add_argument("--alpha", type=float, default=0.05, help="class probability floor (pml only)")
    p.add_argument("--k", type=int, default=None, help="number of bins, checked against alpha <= 1/k")
    p.add_argument("--mechanism", choices=["dp", "pml"], default="pml", help="calibration target")
    p.add_argument("--tol", type=float, default=bounds.DEFAULT_TOL, help="bisection tolerance on epsilon")

    p = add("privatize", "Release a sanitized Laplace histogram of a label file.")
    p.add_argument("--input", required=True, help="labels, one 1-based integer per line (or CSV 'label' column)")
    p.add_argument("--epsilon", type=float, required=True, help="target leakage in nats")
    p.add_argument("--alpha", type=float, default=0.05, help="class probability floor (pml only)")
    p.add_argument("--k", type=int, default=None, help="number of bins (default: file header or max label)")
    p.add_argument("--mechanism", choices=["dp", "pml"], default="pml", help="calibration target")
    p.add_argument("--seed", type=_seed, default=seed_default, help=f"random seed (fallback: ${SEED_ENV})")

    p = add("simulate", "Monte Carlo TVD sweep; writes plot data as CSV.")
    p.add_argument("--sweep", choices=["epsilon", "k"], default="epsilon", help="which parameter grid to sweep")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--n", type=int, default=1000, help="dataset size")
    p.add_argument("--reps", type=int, default=10_000, help="repetitions per cell")
    p.add_argument("--seed", type=_seed, default=seed_default, help=f"random seed (fallback: ${SEED_ENV})")
    p.add_argument("--epsilons", type=_float_list, default=None,
                   help="comma list; default 0.1,0.2,0.5,1,2 (epsilon sweep) or 0.2,0.5 (k sweep)")
    p.add_argument("--ks", type=_int_list, default=None,
                   help="comma list; default 5,10 (epsilon sweep) or 2,5,10,20 (k sweep)")
    p.add_argument("--alphas", type=_float_list, default=None,
                   help="comma list; default 0.05,0.1 (epsilon sweep) or 0.05 (k sweep)")
    p.add_argument("--mechanisms", type=_str_list, default="dp,pml", help="comma list of dp,pml")
    p.add_argument("--fixed-dataset", type=_bool, nargs="?", const=True, default=False,
                   help="reuse one dataset across repetitions instead of resampling")
    p.add_argument("--workers", type=int, default=1, help="threads splitting the repetitions")

    p = add("verify", "Check the tight bound against exact enumerated leakage.")
    p.add_argument("--n", type=int, default=2, help="records in the database")
    p.add_argument("--k", type=int, default=None, help="number of bins (default: length of --probs, else 2)")
    p.add_argument("--b", type=float, default=1.0, help="Laplace noise scale")
    p.add_argument("--probs", type=_float_list, default=None, help="class probabilities (default uniform)")
    p.add_argument("--alpha", type=float, default=None, help="probability floor for the bound (default min probs)")
    p.add_argument("--trials", type=int, default=1000, help="random mechanism outcomes to check")
    p.add_argument("--seed", type=_seed, default=seed_default, help=f"random seed (fallback: ${SEED_ENV})")
    p.add_argument("--max-terms", type=int, default=oracle.DEFAULT_MAX_TERMS,
                   help="enumeration budget (count vectors)")
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise CliError(f"unknown command {command}")


def _load_config(path: str, sub: argparse.ArgumentParser) -> dict:
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO) from exc
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.lstrip("-").replace("-", "_")
        if dest not in known:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        action = known[dest]
        try:
            values[dest] = action.type(value) if action.type else value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise CliError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
        if action.choices is not None and values[dest] not in action.choices:
            raise CliError(f"{path}:{lineno}: {key} must be one of {list(action.choices)}")
        if action.required:
            action.required = False
    return values


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("command", nargs="?")
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config and known.command:
        sub = _subparser(parser, known.command)
        sub.set_defaults(**_load_config(known.config, sub))
    return parser.parse_args(argv)


def cmd_bound(args) -> int:
    b = bounds.check_scale(args.b)
    alpha = bounds.check_alpha(args.alpha, args.k)
    rows = [
        ("eps_dp", bounds.eps_dp(b)),
        ("eps_pml_tight", bounds.eps_pml_tight(b, alpha, args.k)),
        ("eps_pml_simplified", bounds.eps_pml_simplified(b, alpha, args.k)),
        ("eps_pml_composition", bounds.eps_pml_composition(b, alpha, args.k)),
        ("pml_cap", bounds.pml_cap(alpha, args.k)),
    ]
    for name, value in rows:
        print(f"{name:<20} {_g(value)}")
    return EXIT_OK


def _scale_for(epsilon, alpha, k, mech, tol=bounds.DEFAULT_TOL):
    if mech == "dp":
        return bounds.calibrate_dp(epsilon)
    return bounds.calibrate_pml(epsilon, alpha, tol=tol, k=k).scale


def cmd_calibrate(args) -> int:
    try:
        scale = _scale_for(args.epsilon, args.alpha, args.k, args.mechanism, args.tol)
    except NoNoiseNeeded as exc:
        print("none")
        print(f"no noise needed: epsilon {_g(exc.target)} >= PML cap -log(alpha) = "
              f"{_g(exc.cap)}", file=sys.stderr)
        return EXIT_OK
    print(_g(scale))
    return EXIT_OK


def cmd_privatize(args) -> int:
    try:
        data = mechanism.read_dataset(args.input, args.k)
    except OSError as exc:
        raise CliError(f"cannot read {args.input}: {exc}", EXIT_IO) from exc
    bounds.check_epsilon(args.epsilon)
    if args.mechanism == "pml":
        bounds.check_alpha(args.alpha, data.k)
    hist = mechanism.histogram(data)
    stream = RandomStream(args.seed, ("privatize",))
    try:
        scale = _scale_for(args.epsilon, args.alpha, data.k, args.mechanism)
    except NoNoiseNeeded:
        scale = None
    if scale is None:
        released = mechanism.sanitize(hist.counts)
        guarantee = (f"pml: epsilon={_g(args.epsilon)} exceeds the cap for alpha={_g(args.alpha)}; "
                     f"released without noise")
    else:
        _, released = mechanism.privatize(hist, scale, stream)
        if args.mechanism == "dp":
            guarantee = f"dp: epsilon={_g(bounds.eps_dp(scale))} with Laplace scale b={_g(scale)}"
        else:
            guarantee = (f"pml: epsilon={_g(bounds.eps_pml_tight(scale, args.alpha))} per record "
                         f"for class probabilities >= {_g(args.alpha)}, Laplace scale b={_g(scale)}")
    print(f"guarantee {guarantee}; n={data.n} k={data.k} seed={args.seed}", file=sys.stderr)
    out = sys.stdout
    out.write("bin,count\n")
    for j, c in enumerate(released.counts, start=1):
        out.write(f"{j},{int(c)}\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    overrides = dict(n=args.n, reps=args.reps, seed=args.seed, mechanisms=args.mechanisms,
                     fixed_dataset=args.fixed_dataset, workers=args.workers)
    for dest, field in (("epsilons", "epsilon_grid"), ("ks", "k_grid"), ("alphas", "alpha_grid")):
        if getattr(args, dest) is not None:
            overrides[field] = getattr(args, dest)
    if args.sweep == "epsilon":
        cfg = experiments.ExperimentConfig.epsilon_sweep(**overrides)
        run = experiments.sweep_epsilon
    else:
        cfg = experiments.ExperimentConfig.k_sweep(**overrides)
        run = experiments.sweep_k
    ncells = len(cfg.epsilon_grid) * len(cfg.k_grid) * len(cfg.alpha_grid) * len(cfg.mechanisms)
    print(f"simulate: {args.sweep} sweep, {ncells} cells x {cfg.reps} reps, "
          f"seed={cfg.seed}, backend={BACKEND}", file=sys.stderr)
    results = run(cfg)

    out = Path(args.out)
    tmp = None
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{out.name}.", dir=out.parent or ".")
        os.close(fd)
        experiments.emit_csv(results, tmp)
        os.replace(tmp, out)
        tmp = None
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc
    finally:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
    capped = sum(r.capped for r in results)
    if capped:
        print(f"simulate: {capped} pml cells above the cap ran without noise", file=sys.stderr)
    print(f"simulate: wrote {len(results)} rows to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.probs is not None:
        probs = np.asarray(args.probs)
        if args.k is not None and args.k != probs.size:
            raise CliError(f"--k {args.k} disagrees with {probs.size} probabilities")
    else:
        k = 2 if args.k is None else bounds.check_k(args.k)
        probs = np.full(k, 1.0 / k)
    if args.n < 1:
        raise CliError(f"--n must be >= 1, got {args.n}")
    if args.trials < 0:
        raise CliError(f"--trials must be >= 0, got {args.trials}")
    dist = oracle.ClassDistribution(probs, args.alpha)
    budget = oracle.EnumerationBudget(args.max_terms)
    report = oracle.verify_bound(dist, args.n, args.b, args.trials,
                                 RandomStream(args.seed, ("verify",)), budget)
    print(f"n={args.n} k={dist.k} b={_g(args.b)} alpha={_g(report.alpha)} "
          f"outcomes={report.evaluated}")
    print(f"bound          {_g(report.bound)}")
    print(f"max_pml        {_g(report.max_pml)}")
    print(f"min_gap        {report.min_gap:.3e}")
    print(f"witness_pml    {_g(report.witness_pml)}")
    print(f"witness_gap    {report.witness_gap:.3e}")
    print(f"violations     {len(report.violations)}")
    for y, val in report.violations[:10]:
        print(f"  violation y={np.array2string(y, precision=6)} pml={_g(val)}")
    ok = report.sound and report.tight
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "bound": cmd_bound,
    "calibrate": cmd_calibrate,
    "privatize": cmd_privatize,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"pmlhist: error: {exc}", file=sys.stderr)
        return exc.code
    except EnumerationTooLarge as exc:
        print(f"pmlhist: enumeration budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DomainError as exc:
        print(f"pmlhist: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CalibrationError as exc:
        print(f"pmlhist: calibration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"pmlhist: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
