"""Command-line entry point.

Subcommands: ``gen``, ``fit``, ``tables``, ``missing-curve``, ``clustering``
and ``verify``.  Options may also come from a JSON file given with
``--config``; flags on the command line take precedence.

Exit codes: 0 success, 1 verification mismatch, 2 parse error, 3 dimension
error, 4 iteration or evaluation cap reached (or line-search failure)
without tolerance convergence.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, io
from .bench import ClusteringConfig, ExperimentPlan, fit_files, run_accuracy_tables, run_clustering_demo, \
    run_missing_curve, verify
from .solvers import StopConfig
from .synth import ScenarioConfig, gen_mask, gen_scenario

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_PARSE = 2
EXIT_DIMENSION = 3
EXIT_CAP = 4

DEFAULTS = {
    "gen": dict(scenario=1, shape=[20, 20, 20], side_dim=20, rank=3, eta=0.1, weights="unit", seed=0,
                mask_fraction=None, out="data"),
    "fit": dict(side=[], mode=[], mask=None, rank=3, algo="opt", init="svd", seed=None, max_iter=None, out="fit"),
    "tables": dict(scenario=[1], eta=[0.1], rank=3, fit_rank=None, replicates=30, algo=["opt", "als"],
                   weights="unit", shape=[20, 20, 20], side_dim=20, seed=0, init="svd", jobs=1, out="tables"),
    "missing-curve": dict(fraction=[0.3, 0.5, 0.7, 0.85], replicates=10, shape=[20, 20, 20], side_dim=20, rank=3,
                          eta=0.0, seed=0, jobs=1, out="missing"),
    "clustering": dict(rows=40, cols=20, tubes=20, side_dim=20, noise=0.1, seed=0, svg=False, out="clustering"),
    "verify": dict(out="tables"),
}


class _ConfigError(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="cmtf", description="Coupled matrix-tensor factorization toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON file of option defaults")
        sp.add_argument("--out", help="output directory")
        return sp

    g = add("gen", "generate a synthetic coupled dataset")
    g.add_argument("--scenario", type=int, choices=[1, 2, 3])
    g.add_argument("--shape", type=int, nargs=3)
    g.add_argument("--side-dim", type=int)
    g.add_argument("--rank", type=int)
    g.add_argument("--eta", type=float)
    g.add_argument("--weights", choices=["unit", "random-integer"])
    g.add_argument("--seed", type=int)
    g.add_argument("--mask-fraction", type=float)

    f = add("fit", "fit a model to tensor and matrix files")
    f.add_argument("tensor")
    f.add_argument("--side", action="append", help="side block file; repeat for several")
    f.add_argument("--mode", type=int, action="append", help="coupled mode of each --side, default 0")
    f.add_argument("--mask", help="0/1 tensor file of known entries")
    f.add_argument("--rank", type=int)
    f.add_argument("--algo", choices=["opt", "als"])
    f.add_argument("--init", choices=["svd", "random"])
    f.add_argument("--seed", type=int)
    f.add_argument("--max-iter", type=int, help="iteration cap (default 1000 for opt, 10000 for als)")

    t = add("tables", "accuracy tables comparing OPT and ALS")
    t.add_argument("--scenario", type=int, nargs="+", choices=[1, 2, 3])
    t.add_argument("--eta", type=float, nargs="+")
    t.add_argument("--rank", type=int)
    t.add_argument("--fit-rank", type=int, nargs="+", help="default: rank and rank + 1")
    t.add_argument("--replicates", type=int)
    t.add_argument("--algo", nargs="+", choices=["opt", "als"])
    t.add_argument("--weights", choices=["unit", "random-integer"])
    t.add_argument("--shape", type=int, nargs=3)
    t.add_argument("--side-dim", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--init", choices=["svd", "random"])
    t.add_argument("--jobs", type=int)

    m = add("missing-curve", "completion error against fraction of missing entries")
    m.add_argument("--fraction", type=float, nargs="+")
    m.add_argument("--replicates", type=int)
    m.add_argument("--shape", type=int, nargs=3)
    m.add_argument("--side-dim", type=int)
    m.add_argument("--rank", type=int)
    m.add_argument("--eta", type=float)
    m.add_argument("--seed", type=int)
    m.add_argument("--jobs", type=int)

    c = add("clustering", "SVD, CP and CMTF clustering demo")
    c.add_argument("--rows", type=int)
    c.add_argument("--cols", type=int)
    c.add_argument("--tubes", type=int)
    c.add_argument("--side-dim", type=int)
    c.add_argument("--noise", type=float)
    c.add_argument("--seed", type=int)
    c.add_argument("--svg", action="store_true")

    add("verify", "recompute aggregate.csv from raw.csv in --out")
    return p


def _options(args):
    """Merge built-in defaults, the optional JSON config and explicit flags."""
    opts = dict(DEFAULTS[args.command])
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    config = getattr(args, "config", None)
    if config:
        try:
            loaded = json.loads(Path(config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise _ConfigError(f"cannot read config {config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise _ConfigError("config file must hold a JSON object")
        unknown = set(k.replace("-", "_") for k in loaded) - set(opts) - {"tensor"}
        if unknown:
            raise _ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update({k.replace("-", "_"): v for k, v in loaded.items()})
    opts.update(flags)
    return opts


def _gen(o):
    cfg = ScenarioConfig(scenario=o["scenario"], shape=o["shape"], side_dim=o["side_dim"], rank=o["rank"],
                         eta=o["eta"], weight_mode=o["weights"], seed=o["seed"])
    gt = gen_scenario(cfg)
    out = Path(o["out"])
    out.mkdir(parents=True, exist_ok=True)
    io.write_array(out / "X.txt", gt.data.tensor, kind="tensor")
    manifest = dict(scenario=cfg.scenario.value, shape=",".join(map(str, cfg.shape)), side_dim=cfg.side_dim,
                    rank=cfg.rank, eta=repr(cfg.eta), weights=cfg.weight_mode.value, seed=cfg.seed,
                    tensor_weights=",".join(f"{w:g}" for w in gt.tensor_weights), tensor="X.txt")
    for s, side in enumerate(gt.data.sides):
        io.write_array(out / f"Y{s}.txt", side.data)
        manifest[f"side{s}"] = f"Y{s}.txt"
        manifest[f"side{s}_mode"] = side.mode
        manifest[f"side{s}_weights"] = ",".join(f"{w:g}" for w in gt.side_weights[s])
    for n, f in enumerate(gt.model.factors):
        io.write_array(out / f"true_A{n}.txt", f)
    for s, vs in enumerate(gt.model.side_factors):
        for k, v in enumerate(vs, 1):
            io.write_array(out / f"true_V{s}_{k}.txt", v)
    if o["mask_fraction"] is not None:
        io.write_array(out / "W.txt", gen_mask(cfg.shape, o["mask_fraction"], cfg.seed + 1), kind="tensor")
        manifest["mask"] = "W.txt"
        manifest["mask_fraction"] = repr(float(o["mask_fraction"]))
    io.write_manifest(out / "manifest.txt", manifest)
    print(f"wrote dataset to {out}")
    return EXIT_OK


def _fit(o):
    sides = list(o["side"] or [])
    modes = list(o["mode"] or [])
    if modes and len(modes) != len(sides):
        raise ValueError(f"{len(sides)} --side files but {len(modes)} --mode values")
    modes = modes or [0] * len(sides)
    stop = None
    if o["max_iter"] is not None:
        stop = StopConfig(max_iterations=o["max_iter"])
    report = fit_files(o["tensor"], list(zip(sides, modes)), rank=o["rank"], algorithm=o["algo"], out_dir=o["out"],
                       mask_path=o["mask"], init=o["init"], random_state=o["seed"], stop=stop)
    print(f"stop_reason={report.stop_reason.value} objective={report.objective:.6g} "
          f"iterations={report.iterations}")
    return EXIT_OK if report.stop_reason.converged else EXIT_CAP


def _tables(o):
    fit_ranks = o["fit_rank"] or [o["rank"], o["rank"] + 1]
    plan = ExperimentPlan(scenarios=o["scenario"], etas=o["eta"], rank=o["rank"], fit_ranks=fit_ranks,
                          replicates=o["replicates"], algorithms=o["algo"], weights=o["weights"],
                          shape=o["shape"], side_dim=o["side_dim"], seed=o["seed"], init=o["init"], jobs=o["jobs"])
    _, agg = run_accuracy_tables(plan, o["out"])
    for row in agg:
        p = "" if row["p_value"] == "" else f" p={row['p_value']:.3g}"
        print(f"scenario {row['scenario']} eta {row['eta']:g} R={row['fit_rank']} {row['algorithm']}: "
              f"success {row['success_pct']:.1f}% mean FMS {row['mean_fms']:.3f}{p}")
    return EXIT_OK


def _missing(o):
    _, curve = run_missing_curve(o["fraction"], o["replicates"], o["shape"], o["side_dim"], o["rank"], o["eta"],
                                 o["seed"], out_dir=o["out"], jobs=o["jobs"])
    for row in curve:
        print(f"missing {row['fraction']:.2f}: TCS cp {row['tcs_cp']:.4g} cmtf {row['tcs_cmtf']:.4g}")
    return EXIT_OK


def _clustering(o):
    cfg = ClusteringConfig(n_rows=o["rows"], n_cols=o["cols"], n_tubes=o["tubes"], side_dim=o["side_dim"],
                           noise_scale=o["noise"], seed=o["seed"])
    _, purity, _ = run_clustering_demo(cfg, out_dir=o["out"], svg=o["svg"])
    for method, p in purity.items():
        print(f"{method}: purity {p:.3f}")
    return EXIT_OK


def _verify(o):
    problems = verify(o["out"])
    for msg in problems:
        print(msg, file=sys.stderr)
    print("aggregate consistent with raw data" if not problems else f"{len(problems)} mismatches")
    return EXIT_MISMATCH if problems else EXIT_OK


COMMANDS = {"gen": _gen, "fit": _fit, "tables": _tables, "missing-curve": _missing,
            "clustering": _clustering, "verify": _verify}


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](_options(args))
    except (io.FormatError, _ConfigError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION


if __name__ == "__main__":
    sys.exit(main())
