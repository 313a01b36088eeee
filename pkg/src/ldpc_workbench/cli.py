"""Command line interface: ``ldpc-wb <verb> [options]``.

Every verb accepts ``--seed``, ``--out`` and ``--config``.  A config file is
TOML; keys under a table named after the verb (``[experiment]``, ``[de]``,
...) or at top level fill in options not given on the command line.  Output
files land in ``--out`` or, failing that, the directory named by the
``LDPC_WB_OUTPUT_DIR`` environment variable (default: current directory).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .channels import parse_channel
from .codes import RegularEnsemble, girth, read_alist, sample_regular, tree_neighborhood_fraction, write_alist
from .decoders import bit_flip_decode, bp_decode, map_decode_bruteforce
from .density_evolution import DeSettings, bp_threshold, run_de
from .markov_channels import (entropy_rates, example_three_state, joint_decode_gec, llr_histograms, load_spec,
                              sample_channel)
from .messages import binary_entropy
from .rs_free_energy import RsSettings, conditional_entropy_rs, map_threshold
from .satisfiability import (brute_force_marginals, example_formula, generic_bp, random_ksat, read_dimacs,
                             root_influence, sample_tree_formula, decay_probe, to_factor_graph, write_dimacs)
from .weight_enumerator import expected_weight_enumerator, growth_curve, omega_star

# option defaults; argparse defaults stay None so config values can fill the gaps
DEFAULTS = {
    "seed": 0, "l": 3, "k": 6, "n": 1000, "channel": "bsc:0.05", "decoder": "bp", "max_iter": 200,
    "pop_size": 100_000, "t_max": 500, "tol": 1e-3, "family": "bsc", "samples": 1_000_000,
    "radius": 1, "trials": 100, "points": 200, "alpha": 0.3, "ksat": 3, "depth": 2,
    "format": "csv", "eps_d": None, "refine": False, "workers": 1, "codeword": "zero",
    "params": None, "ns": None, "min_block_errors": 100, "rounds": 100,
}
# verbs whose natural size differs from the decoding blocklength
VERB_DEFAULTS = {
    "gec": {"n": 1_000_000},  # entropy rates need long sequences; not applied to "gec decode"
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--config", type=Path, help="TOML configuration file")
    p.add_argument("--format", choices=("csv", "json"), help="table output format")


def _ensemble(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    p.add_argument("-l", type=int, help="variable degree")
    p.add_argument("-k", type=int, help="check degree")
    if with_n:
        p.add_argument("-n", type=int, help="blocklength")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpc-wb", description="Regular LDPC ensemble workbench")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("codes", help="sample a graph from the regular ensemble and write it as alist")
    _common(p)
    _ensemble(p)
    p.add_argument("--radius", type=int, help="radius for the tree-neighbourhood estimate")
    p.add_argument("--trials", type=int, help="root edges sampled for the tree estimate")

    p = sub.add_parser("decode", help="decode one channel realisation")
    _common(p)
    _ensemble(p)
    p.add_argument("--alist", type=Path, help="read the code from this file instead of sampling")
    p.add_argument("--channel", help="channel spec such as bsc:0.05, bec:0.4, awgn:0.8, zc:0.1")
    p.add_argument("--decoder", choices=("bp", "flip", "map"))
    p.add_argument("--max-iter", dest="max_iter", type=int)

    p = sub.add_parser("de", help="density evolution trajectory or BP threshold")
    _common(p)
    _ensemble(p, with_n=False)
    p.add_argument("--channel", help="run one trajectory on this channel")
    p.add_argument("--threshold", action="store_true", default=None, help="bisect for the BP threshold")
    p.add_argument("--family", choices=("bsc", "bec", "awgn"))
    p.add_argument("--pop-size", dest="pop_size", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("we", help="weight enumerator growth rate and exact averages")
    _common(p)
    _ensemble(p)
    p.add_argument("--points", type=int, help="grid points on (0, 1/2] for the growth curve")
    p.add_argument("--exact", action="store_true", default=None, help="also tabulate exact averages at blocklength n")

    p = sub.add_parser("rs", help="replica-symmetric conditional entropy or MAP threshold")
    _common(p)
    _ensemble(p, with_n=False)
    p.add_argument("--channel")
    p.add_argument("--threshold", action="store_true", default=None)
    p.add_argument("--family", choices=("bsc", "bec", "awgn"))
    p.add_argument("--pop-size", dest="pop_size", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("gec", help="three-state Gilbert-Elliott channel: rates and joint decoding")
    _common(p)
    _ensemble(p)
    p.add_argument("action", nargs="?", choices=("rates", "decode"), default="rates",
                   help="entropy rates of one long sequence, or joint decoding of a random codeword")
    p.add_argument("--spec", type=Path, help="JSON channel description with keys P, eps and optional init")
    p.add_argument("--rounds", type=int)
    p.add_argument("--window", type=int, help="radius of the windowed state estimate (default: whole block)")

    p = sub.add_parser("sat", help="k-SAT marginals by enumeration and by BP, or the tree decay probe")
    _common(p)
    p.add_argument("action", nargs="?", choices=("marginals", "probe"), default="marginals")
    p.add_argument("--cnf", type=Path, help="DIMACS formula; default is the built-in five-variable example")
    p.add_argument("--random", nargs=3, metavar=("N", "ALPHA", "K"), help="draw a random k-SAT formula")
    p.add_argument("--alpha", type=float, help="clause density for the probe")
    p.add_argument("--ksat", type=int, help="clause length for the probe")
    p.add_argument("--depth", type=int, help="largest tree depth for the probe")
    p.add_argument("--trials", type=int, help="trees per depth for the probe")

    p = sub.add_parser("experiment", help="Monte Carlo error rates over a blocklength and parameter grid")
    _common(p)
    _ensemble(p, with_n=False)
    p.add_argument("--ns", type=int, nargs="+")
    p.add_argument("--params", type=float, nargs="+")
    p.add_argument("--family", dest="channel_family", choices=("bsc", "bec", "awgn", "zc"))
    p.add_argument("--decoder", choices=("bp", "flip"))
    p.add_argument("--trials", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--codeword", choices=("zero", "random"))
    p.add_argument("--min-block-errors", dest="min_block_errors", type=int, help="0 disables early stopping")
    p.add_argument("--fixed-code", dest="fixed_code", action="store_true", default=None)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("scaling", help="fit the finite-size scaling law to error-rate records")
    _common(p)
    p.add_argument("records", type=Path, help="CSV or JSON records from the experiment verb")
    p.add_argument("--eps-d", dest="eps_d", type=float, help="asymptotic BP threshold")
    p.add_argument("--refine", action="store_true", default=None)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge command line values over config file values over built-in defaults."""
    opts = dict(DEFAULTS)
    if not (args.verb == "gec" and getattr(args, "action", None) == "decode"):
        opts.update(VERB_DEFAULTS.get(args.verb, {}))
    if args.config is not None:
        cfg = harness.load_config(args.config)
        opts.update({k: v for k, v in cfg.items() if not isinstance(v, dict)})
        opts.update(cfg.get(args.verb, {}))
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    if opts.get("out") is None:
        opts["out"] = harness.default_output_dir()
    opts["out"] = Path(opts["out"])
    return opts


def _say(obj) -> None:
    print(json.dumps(obj, indent=2, default=harness._json_default))


def _emit(rows, opts, stem, columns=None) -> Path:
    path = opts["out"] / f"{stem}.{opts['format']}"
    harness.emit(rows, path, opts["format"], columns)
    print(f"wrote {path}", file=sys.stderr)
    return path


# ----------------------------------------------------------------------
def cmd_codes(o):
    rng = np.random.default_rng(o["seed"])
    ens = RegularEnsemble(o["l"], o["k"], o["n"])
    graph = sample_regular(ens, rng)
    path = o["out"] / f"regular_{o['l']}_{o['k']}_{o['n']}.alist"
    o["out"].mkdir(parents=True, exist_ok=True)
    write_alist(graph, path)
    tree = tree_neighborhood_fraction(ens, o["radius"], o["trials"], rng)
    _say({"alist": str(path), "n": graph.n, "m": graph.m, "edges": int(graph.edge_var.size),
          "simple": graph.is_simple, "girth": girth(graph), "tree_fraction": tree, "radius": o["radius"]})


def cmd_decode(o):
    rng = np.random.default_rng(o["seed"])
    if o.get("alist"):
        graph = read_alist(o["alist"])
    else:
        graph = sample_regular(RegularEnsemble(o["l"], o["k"], o["n"]), rng)
    channel = parse_channel(o["channel"])
    x = graph.to_parity_check().sample_codeword(rng).astype(np.int64)
    y = channel.sample(x, rng)
    out = {"n": graph.n, "channel": channel.label(), "decoder": o["decoder"]}
    if o["decoder"] == "bp":
        res = bp_decode(graph, channel.llr(y), max_iter=o["max_iter"], rng=rng)
        out.update(iterations=res.iterations, converged=res.converged, bits=res.bits)
    elif o["decoder"] == "flip":
        if not channel.hard_output or channel.kind == "bec":
            raise SystemExit("bit flipping needs a hard-decision channel (bsc or zc)")
        res = bit_flip_decode(graph, y, rng)
        out.update(iterations=res.iterations, converged=res.converged, residual_unsat=res.residual_unsat,
                   bits=res.bits)
    else:
        res = map_decode_bruteforce(graph, channel, y)
        out.update(codewords=res.n_codewords, word_ties=res.word_ties, bits=res.symbol_bits)
    out["bit_errors"] = int(np.count_nonzero(out.pop("bits") != x))
    _say(out)


def _family_of(o):
    if o.get("channel"):
        return parse_channel(o["channel"]).kind
    return o["family"]


def cmd_de(o):
    settings = DeSettings(pop_size=o["pop_size"], t_max=o["t_max"])
    if o.get("threshold"):
        res = bp_threshold(o["l"], o["k"], _family_of(o), tol=o["tol"], settings=settings, seed=o["seed"])
        _say({"l": o["l"], "k": o["k"], "family": _family_of(o), "threshold": res.estimate,
              "lower": res.lower, "upper": res.upper, "monotone": res.monotone})
        _emit([{"param": p, "decodable": ok, "iterations": it} for p, ok, it in res.probes], o,
              f"de_threshold_{o['l']}_{o['k']}", ["param", "decodable", "iterations"])
        return
    channel = parse_channel(o["channel"])
    traj = run_de(o["l"], o["k"], channel, settings, rng=np.random.default_rng(o["seed"]),
                  stop_below_floor=True)
    rows = [{"iteration": t, "pb": float(pb), "entropy": float(hh)}
            for t, (pb, hh) in enumerate(zip(traj.pb, traj.entropy))]
    _emit(rows, o, f"de_{o['l']}_{o['k']}_{channel.kind}", ["iteration", "pb", "entropy"])
    _say({"channel": channel.label(), "iterations": traj.iterations, "final_pb": float(traj.pb[-1])})


def cmd_we(o):
    l, k = o["l"], o["k"]
    omegas = np.linspace(0.5 / o["points"], 0.5, o["points"])
    phi, z = growth_curve(l, k, omegas)
    _emit([{"omega": float(w), "phi": float(f), "z": float(s)} for w, f, s in zip(omegas, phi, z)], o,
          f"we_{l}_{k}", ["omega", "phi", "z"])
    summary = {"l": l, "k": k}
    try:
        summary["omega_star"] = omega_star(l, k)
    except ValueError as exc:
        summary["omega_star"] = None
        summary["note"] = str(exc)
    if o.get("exact"):
        n = o["n"]
        rows = [{"w": w, "average": float(expected_weight_enumerator(l, k, n, w))} for w in range(n + 1)]
        _emit(rows, o, f"we_exact_{l}_{k}_{n}", ["w", "average"])
    _say(summary)


def cmd_rs(o):
    settings = RsSettings(pop_size=o["pop_size"], t_max=o["t_max"], samples=o["samples"])
    if o.get("threshold"):
        res = map_threshold(o["l"], o["k"], _family_of(o), tol=o["tol"], settings=settings, seed=o["seed"])
        _say({"l": o["l"], "k": o["k"], "family": _family_of(o), "threshold": res.estimate,
              "lower": res.lower, "upper": res.upper})
        return
    channel = parse_channel(o["channel"])
    res = conditional_entropy_rs(o["l"], o["k"], channel, settings, seed=o["seed"])
    _say({"channel": channel.label(), "entropy_per_bit": res.value,
          "per_init": {name: {"value": e.value, "stderr": e.stderr, "iterations": fp.iterations,
                              "converged": fp.converged} for name, (e, fp) in res.per_init.items()}})


def cmd_gec(o):
    spec = load_spec(o["spec"]) if o.get("spec") else example_three_state()
    rng = np.random.default_rng(o["seed"])
    eps = spec.average_crossover()
    out = {"stationary": spec.stationary(), "ergodic": spec.ergodic, "average_crossover": eps,
           "memoryless_comparison": 1.0 - float(binary_entropy(eps))}
    if o["action"] == "rates":
        rates = entropy_rates(spec, o["n"], rng)
        out.update(h_y=rates.h_y, h_y_given_x=rates.h_y_given_x, information_rate=rates.information_rate)
    else:
        graph = sample_regular(RegularEnsemble(o["l"], o["k"], o["n"]), rng)
        x = graph.to_parity_check().sample_codeword(rng).astype(np.int64)
        y, _ = sample_channel(spec, x, rng)
        res = joint_decode_gec(graph, spec, y, rounds=o["rounds"], rng=rng, window=o.get("window"))
        out.update(converged=res.converged, iterations=res.iterations,
                   bit_errors=int(np.count_nonzero(res.bits != x)))
        hist = llr_histograms(res.channel_llr)
        counts_half, edges_half = hist["half"]
        counts_full, edges_full = hist["full"]
        rows = [{"half_center": 0.5 * (edges_half[i] + edges_half[i + 1]), "half_count": int(counts_half[i]),
                 "full_center": 0.5 * (edges_full[i] + edges_full[i + 1]), "full_count": int(counts_full[i])}
                for i in range(counts_half.size)]
        _emit(rows, o, "gec_channel_llr_histogram")
    _say(out)


def cmd_sat(o):
    rng = np.random.default_rng(o["seed"])
    if o["action"] == "probe":
        rows = []
        for t in range(1, o["depth"] + 1):
            vals, skipped = [], 0
            for _ in range(o["trials"]):
                tree = sample_tree_formula(o["ksat"], o["alpha"], t, rng)
                try:
                    vals.append(root_influence(*decay_probe(tree, method="auto", samples=4096, rng=rng)))
                except ValueError:  # no sampled boundary extends to a solution
                    skipped += 1
            rows.append({"depth": t, "influence": float(np.mean(vals)) if vals else math.nan,
                         "trees": len(vals), "inadmissible": skipped})
        _emit(rows, o, f"sat_probe_{o['ksat']}", ["depth", "influence", "trees", "inadmissible"])
        _say(rows)
        return
    if o.get("cnf"):
        formula = read_dimacs(o["cnf"])
    elif o.get("random"):
        n, alpha, k = o["random"]
        formula = random_ksat(int(n), float(alpha), int(k), rng)
        o["out"].mkdir(parents=True, exist_ok=True)
        write_dimacs(formula, o["out"] / "random.cnf")
    else:
        formula = example_formula()
    exact, count = brute_force_marginals(formula)
    bp = generic_bp(to_factor_graph(formula), iterations=100)
    rows = [{"var": i + 1, "exact": float(exact[i]), "bp": float(bp.marginals[i, 1])}
            for i in range(formula.n_vars)]
    _emit(rows, o, "sat_marginals", ["var", "exact", "bp"])
    _say({"solutions": count, "bp_contradiction": bp.contradiction, "marginals": rows})


def cmd_experiment(o):
    family = o.get("channel_family")
    if family is None:
        family = str(o["channel"]).split(":")[0]
    cfg = harness.ExperimentConfig(
        l=o["l"], k=o["k"], ns=list(o["ns"] or [o["n"]]), params=list(o["params"] or [0.05]),
        channel=family, decoder=o["decoder"], trials=o["trials"], max_iter=o["max_iter"], seed=o["seed"],
        codeword=o["codeword"], min_block_errors=o["min_block_errors"] or None, workers=o["workers"],
        fixed_code=bool(o.get("fixed_code")))
    try:
        records = harness.run_experiment(cfg)
    except ValueError as exc:
        raise SystemExit(f"invalid configuration: {exc}")
    _emit(records, o, f"experiment_{cfg.l}_{cfg.k}_{cfg.channel}_{cfg.decoder}")
    for r in records:
        print(f"n={r.n} param={r.param:g} pb={r.pb:.3e} pB={r.pB:.3f}±{r.pB_ci:.3f} trials={r.trials}")


def cmd_scaling(o):
    if o.get("eps_d") is None:
        raise SystemExit("--eps-d is required (for example from `ldpc-wb de --threshold`)")
    records = harness.read_records(o["records"])
    try:
        fit = harness.scaling_compare(records, o["eps_d"], refine=bool(o.get("refine")))
    except ValueError as exc:
        raise SystemExit(f"cannot fit: {exc}")
    used = [r for r in records if 0 < r.pB < 1]
    rows = [{"n": r.n, "param": r.param, "z": math.sqrt(r.n) * (r.param - o["eps_d"]), "pB": r.pB,
             "residual": float(res)} for r, res in zip(used, fit.residuals)]
    _emit(rows, o, "scaling", ["n", "param", "z", "pB", "residual"])
    _say({"alpha": fit.alpha, "beta": fit.beta, "rms": fit.rms, "plain_rms": fit.plain_rms,
          "improved": fit.improved, "points": fit.n_points})


COMMANDS = {"codes": cmd_codes, "decode": cmd_decode, "de": cmd_de, "we": cmd_we, "rs": cmd_rs,
            "gec": cmd_gec, "sat": cmd_sat, "experiment": cmd_experiment, "scaling": cmd_scaling}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = resolve(args)
    try:
        COMMANDS[args.verb](opts)
    except (OSError, ValueError) as exc:
        print(f"ldpc-wb {args.verb}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
