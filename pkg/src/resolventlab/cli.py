"""Command-line entry point: ``resolventlab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import expsums, multipliers, opnorms, spectra
from .harness import ExperimentConfig, RECIPES, run_recipe
from .harness.cache import Cache, cached_representation_counts
from .harness.config import run_sweep, substream
from .harness.recipes import _json_default, rows_to_csv


def _floats(text: str) -> list[float]:
    """Comma list ``1,2,3`` or range ``lo:hi:num`` (inclusive linspace)."""
    if ":" in text:
        lo, hi, num = text.split(":")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(num))]
    return [float(v) for v in text.split(",") if v]


def _ints(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":")[:2]
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v]


def _manifold(args) -> spectra.ModelManifold:
    return spectra.ModelManifold(args.manifold, args.n, args.alpha, args.A, args.seed)


def _table(args, lam_max: float) -> spectra.SpectrumTable:
    man = _manifold(args)
    if man.kind == "torus":
        counts = None
        if args.cache:
            m_max = int(math.floor((lam_max / (2 * math.pi)) ** 2)) + 1
            counts = cached_representation_counts(man.n, m_max, Cache())
        return spectra.torus_spectrum(man.n, lam_max, counts=counts)
    k_max = int(math.ceil(lam_max)) + 2
    if man.kind == "sphere":
        return spectra.sphere_spectrum(man.n, k_max)
    return spectra.zoll_spectrum(man.n, man.alpha, man.A, k_max, man.seed)


def _emit_rows(args, name: str, rows) -> None:
    _emit_text(args, f"{name}.csv", rows_to_csv(rows))


def _emit_json(args, name: str, records) -> None:
    text = "".join(json.dumps(r, sort_keys=True, default=_json_default) + "\n" for r in records)
    _emit_text(args, f"{name}.jsonl", text)


def _emit_text(args, filename: str, text: str) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text, newline="")
    else:
        sys.stdout.write(text)


def _ascent(args) -> opnorms.AscentConfig:
    return opnorms.AscentConfig(restarts=args.restarts, iterations=args.iterations, seed=args.seed)


# -- subcommands --------------------------------------------------------------

def cmd_spectrum(args):
    table = _table(args, args.lambda_max)
    rows = [{"level": lvl, "multiplicity": mult, "cumulative": cum, "key": key}
            for lvl, mult, cum, key in zip(table.levels.tolist(), table.multiplicities.tolist(),
                                          table.cumulative.tolist(), table.keys.tolist())
            if lvl <= args.lambda_max]
    _emit_rows(args, "spectrum", rows)


def cmd_shells(args):
    lams = _floats(args.lam)
    table = _table(args, max(lams) + args.eps + 1)
    rows = [vars(spectra.shell_count(table, lam, args.eps)) for lam in lams]
    _emit_rows(args, "shells", rows)


def _eps_rule(rule: str):
    kind, _, arg = rule.partition(":")
    if kind == "power":
        return lambda lam: min(1.0, lam ** float(arg))
    if kind == "log":
        return lambda lam: min(1.0, 1.0 / math.log(lam))
    if kind == "const":
        return lambda lam: float(arg)
    raise ValueError(f"unknown epsilon rule {rule!r}; use power:<e>, log or const:<c>")


def cmd_density(args):
    grid = _floats(args.grid)
    table = _table(args, max(grid) + 2)
    pts = spectra.density_blowup_scan(table, _eps_rule(args.rule), grid, args.threshold)
    _emit_rows(args, "density", [vars(p) for p in pts])


def cmd_multcheck(args):
    pts = [(l, m, t) for l in _floats(args.lam) for m in _floats(args.mu) for t in _floats(args.t)]

    def one(pt):
        lam, mu, t = pt
        out = []
        for name, chk in (("heaviside", multipliers.heaviside_ft_check(mu, t)),
                          ("pole_pair", multipliers.pole_pair_ft_check(lam, mu, t))):
            out.append({"identity": name, "lam": lam, "mu": mu, "t": t, "numeric": chk.numeric,
                        "closed": chk.closed, "abs_error": chk.abs_error})
        return out

    rows = [r for block in run_sweep(one, pts, args.threads) for r in block]
    _emit_rows(args, "multcheck", rows)


def cmd_projnorm(args):
    man = _manifold(args)
    recs = [opnorms.window_norm_lower_bound(man, lam, args.eps, args.p, _ascent(args)).record()
            for lam in _floats(args.lam)]
    _emit_json(args, "projnorm", recs)


def cmd_resolvent(args):
    man = _manifold(args)
    pts = [(lam, mu) for lam in _floats(args.lam) for mu in _floats(args.mu)]

    def one(pt):
        shift = multipliers.ComplexShift(*pt)
        return opnorms.resolvent_norm_lower_bound(man, shift, args.p, cfg=_ascent(args), band=args.band).record()

    _emit_json(args, "resolvent", run_sweep(one, pts, args.threads))


def cmd_necsuff(args):
    man = _manifold(args)
    rows = [opnorms.necsuff_compare(man, lam, eps, args.p, _ascent(args))
            for lam in _floats(args.lam) for eps in _floats(args.eps)]
    _emit_rows(args, "necsuff", rows)


def cmd_expsum(args):
    rng = substream(args.seed, "cli-expsum")
    xs = rng.uniform(-0.5, 0.5, (args.samples, 3))
    rows = []
    for R in _floats(args.R):
        eps = R ** -args.eps_power
        for i, x in enumerate(xs):
            h = expsums.hlawka_sum(R, eps, x)
            rows.append({"R": R, "eps": eps, "sample": i, "abs_hlawka": abs(h),
                         "triangle": expsums.hlawka_abs_sum(R, eps, x)})
    _emit_rows(args, "expsum", rows)


def cmd_quadruples(args):
    rows = []
    for m in _ints(args.R2):
        P, Q = expsums.quadruple_count(args.n, m)
        rows.append({"n": args.n, "R_squared": m, "points": P, "quadruples": Q,
                     "ratio": Q / P ** 2 if P else math.nan})
    _emit_rows(args, "quadruples", rows)


def cmd_kernel_sup(args):
    if args.kind == "band":
        rows = [expsums.band_kernel_sup(lam, args.s, oversample=args.oversample) for lam in _floats(args.lam)]
    elif args.kind == "gap":
        rows = []
        for R in _floats(args.lam):
            eps = R ** -args.eps_power
            g = expsums.mollified_gap_kernel_sup(R, eps, oversample=args.oversample)
            rows.append({"R": R, "eps": eps, "sup": g.sup, "modes": g.modes, "method": g.method})
    else:
        man = _manifold(args)
        rows = []
        for lam in _floats(args.lam):
            est = opnorms.kernel_sup_norm(opnorms.window_operator(man, lam, args.eps), oversample=args.oversample)
            rows.append({"lam": lam, "eps": args.eps, "sup": est.value, "diagonal": est.meta.get("diagonal")})
    _emit_rows(args, "kernel_sup", rows)


def cmd_fit(args):
    with open(args.csv, newline="") as fh:
        data = [(float(r[args.x]), float(r[args.y])) for r in csv.DictReader(fh)]
    fit = opnorms.scaling_fit(data, args.predicted, args.tolerance)
    _emit_json(args, "fit", [{**vars(fit), "verdict": fit.verdict, "samples": len(data)}])


def cmd_run(args, config: ExperimentConfig | None):
    cfg = config if config is not None else ExperimentConfig()
    over = {"recipe": args.recipe}
    if args.out:
        over["out"] = args.out
    if args.threads is not None:
        over["threads"] = args.threads
    if args.seed_given:
        over["seed"] = args.seed
    cfg = cfg.merged(**over)
    bundle = run_recipe(cfg)
    sys.stdout.write(json.dumps({"recipe": bundle.recipe, **bundle.summary}, sort_keys=True,
                                default=_json_default) + "\n")
    return 0 if bundle.verdict in ("pass", "n/a") else 1


# -- parser -------------------------------------------------------------------

def _add_manifold(p, kind="torus", n=3):
    p.add_argument("--manifold", choices=["torus", "sphere", "zoll"], default=kind)
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--A", type=float, default=1.0)


def _add_ascent(p):
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--iterations", type=int, default=60)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON ExperimentConfig; its params supply option defaults")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)

    parser = argparse.ArgumentParser(prog="resolventlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        return p

    p = add("spectrum", cmd_spectrum, "eigenvalue table up to a horizon")
    _add_manifold(p)
    p.add_argument("--lambda-max", type=float, default=20.0)
    p.add_argument("--cache", action="store_true", help="use the on-disk representation-count cache")

    p = add("shells", cmd_shells, "window counts N(lam+eps) - N((lam-eps)-)")
    _add_manifold(p)
    p.add_argument("--lam", default="10:30:5")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--cache", action="store_true")

    p = add("density", cmd_density, "density-ratio scan along a lambda grid")
    _add_manifold(p)
    p.add_argument("--grid", default="10:60:6")
    p.add_argument("--rule", default="power:-0.5")
    p.add_argument("--threshold", type=float, default=math.inf)
    p.add_argument("--cache", action="store_true")

    p = add("multcheck", cmd_multcheck, "Fourier identities: quadrature against closed form")
    p.add_argument("--lam", default="-5,0.5,5")
    p.add_argument("--mu", default="-1,0.5")
    p.add_argument("--t", default="-1,0,2")

    p = add("projnorm", cmd_projnorm, "spectral-window norm lower bound")
    _add_manifold(p, "sphere")
    _add_ascent(p)
    p.add_argument("--lam", default="8.94427190999916")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--p", type=float, default=6.0)

    p = add("resolvent", cmd_resolvent, "resolvent norm lower bound")
    _add_manifold(p, "sphere")
    _add_ascent(p)
    p.add_argument("--lam", default="8.94427190999916")
    p.add_argument("--mu", default="0.5")
    p.add_argument("--p", type=float, default=6.0)
    p.add_argument("--band", type=int, default=1)

    p = add("necsuff", cmd_necsuff, "window side against resolvent side")
    _add_manifold(p, "sphere")
    _add_ascent(p)
    p.add_argument("--lam", default="8.94427190999916")
    p.add_argument("--eps", default="0.5")
    p.add_argument("--p", type=float, default=6.0)

    p = add("expsum", cmd_expsum, "shell exponential sums at random points")
    p.add_argument("--R", default="20,40")
    p.add_argument("--eps-power", type=float, default=0.3)
    p.add_argument("--samples", type=int, default=4)

    p = add("quadruples", cmd_quadruples, "additive quadruples on lattice spheres")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--R2", default="25,125")

    p = add("kernel-sup", cmd_kernel_sup, "kernel sup norms (band kernel, mollified gap or window)")
    _add_manifold(p)
    p.add_argument("--kind", choices=["band", "gap", "window"], default="band")
    p.add_argument("--lam", default="62.83185307179586")
    p.add_argument("--s", type=float, default=0.25)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--eps-power", type=float, default=0.2)
    p.add_argument("--oversample", type=float, default=1.0)

    p = add("fit", cmd_fit, "log-log slope of a CSV column pair")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--predicted", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=0.15)

    p = add("run", None, "run a named recipe")
    p.add_argument("recipe", choices=sorted(RECIPES))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = ExperimentConfig.load(args.config) if args.config else None
    if config is not None and config.params and args.command != "run":
        # config params act as option defaults; explicit flags still win
        sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sub.choices[args.command].set_defaults(**config.params)
        args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = config.seed if config is not None else 0
    if args.threads is None and args.command != "run":
        args.threads = config.threads if config is not None else 1
    if args.out is None and config is not None and config.out and args.command != "run":
        args.out = config.out
    if args.command == "run":
        return cmd_run(args, config)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
