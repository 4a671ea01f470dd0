"""Command-line front end.

Every command prints (or writes with ``--out``) a report whose ``config``
block records the command, inputs, seed and parameters, so a run can be
repeated exactly.  Exit codes: 0 success, 2 invalid input, 3 a theoretical
guarantee failed on the instance, 4 a computational budget was exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .core import AtomPartition, catalog, cycle, edge_density
from .cutmetrics import cut_distance_bounds, cut_norm, disjoint_witness, weakstar_distance
from .errors import (
    ComplexityCap,
    GraphonError,
    RefinementTooLarge,
    TheoryViolation,
    TooLargeForExact,
)
from .homdensity import graph_norm, hom_density
from .order import (
    SQUARE,
    flatness_compare,
    int_f,
    pushforward_frequencies,
    stepping,
    structuredness_probe,
)
from .regularity import REGISTRY, fk_regularize
from .spectral import eigendecompose, spectral_compare

EXIT_OK, EXIT_INVALID, EXIT_THEORY, EXIT_BUDGET = 0, 2, 3, 4


def _eps(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("eps must lie in (0, 1]")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _pattern(args):
    if getattr(args, "graph", None):
        return fileio.load_graph(args.graph)
    return catalog(args.pattern)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> dict:
    W = fileio.load_graphon(args.graphon)
    spec = eigendecompose(W)
    out = {
        "atoms": W.k,
        "kind": W.kind,
        "edge_density": edge_density(W),
        "spectrum": spec.to_dict(),
        "t_C4": hom_density(cycle(4), W),
    }
    if W.is_graphon():
        out["range_frequencies"] = pushforward_frequencies(W, "range").to_dict()
        out["degree_frequencies"] = pushforward_frequencies(W, "degree").to_dict()
        out["int_square"] = int_f(SQUARE, W)
    return out


def cmd_cutnorm(args) -> dict:
    K = fileio.load_graphon(args.graphon)
    if args.minus:
        K = K - fileio.load_graphon(args.minus)
    value, w = cut_norm(K, args.strategy, seed=args.seed, threads=args.threads)
    dw = disjoint_witness(K, w)
    return {
        "strategy": args.strategy,
        "cut_norm": value,
        "witness": w.to_dict(),
        "disjoint_witness": {"A": [list(p) for p in dw.A], "B": [list(p) for p in dw.B], "value": dw.value},
    }


def cmd_cutdist(args) -> dict:
    U, W = fileio.load_graphon(args.a), fileio.load_graphon(args.b)
    b = cut_distance_bounds(U, W, effort=args.budget or 200, seed=args.seed)
    return {"bounds": b.to_dict(), "weakstar_depth4": weakstar_distance(U, W, 4)}


def cmd_density(args) -> dict:
    W = fileio.load_graphon(args.graphon)
    H = _pattern(args)
    budget = args.budget or 1e9
    t = hom_density(H, W, budget=budget)
    return {"graph": str(H), "vertices": H.n, "edges": H.e, "density": t, "norm": graph_norm(H, W).value}


def cmd_spectrum(args) -> dict:
    return eigendecompose(fileio.load_graphon(args.graphon)).to_dict()


def cmd_step(args) -> dict:
    W = fileio.load_graphon(args.graphon)
    P = fileio.load_partition(args.partition)
    return {"graphon": stepping(W, P, keep_atoms=args.keep_atoms).to_dict()}


def cmd_regularize(args) -> dict:
    W = fileio.load_graphon(args.graphon)
    r = fk_regularize(W, args.eps, args.theta, seed=args.seed)
    out = {
        "partition": r.partition.to_dict(),
        "final_cutnorm_bound": r.final_cutnorm_bound,
        "bound_exact": r.bound_exact,
        "iterations": r.iterations,
        "theta_initial": r.theta_initial,
        "trace": [vars(t) for t in r.pump_trace],
    }
    if args.out:
        base = Path(args.out)
        fileio.save_partition(r.partition, base.with_suffix(".partition.json"))
        base.with_suffix(".trace.csv").write_text(r.trace_csv(), encoding="utf-8")
    return out


def cmd_sample(args) -> dict:
    from .sampling import sample_reshuffle, verify_average_concentration

    G = fileio.load_graphon(args.graphon)
    R = fileio.load_partition(args.partition) if args.partition else AtomPartition.trivial(G.k)
    out = {}
    S, phi, _ = sample_reshuffle(G, R, args.stripes, args.seed)
    out["sample"] = S.to_dict()
    out["permutation"] = list(phi.perm)
    if args.trials:
        rep = verify_average_concentration(
            G, R, args.stripes, args.ensemble_size, args.trials, target=args.eps or 0.2, seed=args.seed
        )
        out["concentration"] = rep.to_dict()
    return out


def cmd_ensemble(args) -> dict:
    from .sampling import approx_by_versions

    U, V = fileio.load_graphon(args.a), fileio.load_graphon(args.b)
    lower = cut_distance_bounds(U, V, seed=args.seed).lower
    ens = approx_by_versions(U, V, args.eps or 0.2, lower, seed=args.seed, s0=args.stripes, N0=args.ensemble_size)
    return {"delta_lower": lower, "manifest": ens.manifest()}


def cmd_test_param(args) -> dict:
    from .testers import test_step_forcing, test_step_sidorenko

    fn = test_step_forcing if args.strict else test_step_sidorenko
    rep = fn(args.theta, trials=args.trials, seed=args.seed)
    out = rep.to_dict()
    out["_exit"] = EXIT_OK if rep.passed else EXIT_THEORY
    return out


def cmd_search_violation(args) -> dict:
    from .testers import search_step_sidorenko_violation

    H = _pattern(args)
    res = search_step_sidorenko_violation(H, budget=int(args.budget or 100_000), seed=args.seed)
    return res.to_dict()


def cmd_compare(args) -> dict:
    U, W = fileio.load_graphon(args.a), fileio.load_graphon(args.b)
    sc = spectral_compare(U, W)
    out = {
        "edge_density": [edge_density(U), edge_density(W)],
        "density_mismatch": abs(edge_density(U) - edge_density(W)) > 1e-9,
        "cut_distance": cut_distance_bounds(U, W, seed=args.seed).to_dict(),
        "spectral": {"relation": sc.relation.value, "strict": sc.strict},
    }
    if U.is_graphon() and W.is_graphon():
        for mode in ("range", "degree"):
            r = flatness_compare(pushforward_frequencies(U, mode), pushforward_frequencies(W, mode), certificate=False)
            out[f"{mode}_flatness"] = r.verdict.value
        out["probe"] = structuredness_probe(U, W, seed=args.seed).to_dict()
    return out


def cmd_gen(args) -> dict:
    from . import testers

    rng = np.random.default_rng(args.seed)
    k = args.atoms
    if args.family == "graphon":
        W = testers.random_graphon(rng, k, equal_weights=args.equal_weights)
    elif args.family == "kernel":
        W = testers.random_kernel(rng, k)
    elif args.family == "planted":
        W = testers.planted_graphon(rng, k or 16)
    else:
        P = testers.random_partition(rng, k or int(rng.integers(2, 13)))
        return {"partition": P.to_dict()}
    return {"graphon": W.to_dict()}


COMMANDS = {
    "analyze": cmd_analyze,
    "cutnorm": cmd_cutnorm,
    "cutdist": cmd_cutdist,
    "density": cmd_density,
    "spectrum": cmd_spectrum,
    "step": cmd_step,
    "regularize": cmd_regularize,
    "sample": cmd_sample,
    "ensemble": cmd_ensemble,
    "test-param": cmd_test_param,
    "search-violation": cmd_search_violation,
    "compare": cmd_compare,
    "gen": cmd_gen,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["json", "text", "csv"], default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    common.add_argument("--budget", type=float, default=None)

    p = argparse.ArgumentParser(prog="stepgraphon", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, *positional):
        sp = sub.add_parser(name, help=help_, parents=[common])
        for pos in positional:
            sp.add_argument(pos)
        return sp

    add("analyze", "summary quantities of one graphon", "graphon")
    sp = add("cutnorm", "cut norm with witnesses", "graphon")
    sp.add_argument("--minus", help="subtract this graphon first")
    sp.add_argument("--strategy", choices=["exact", "heuristic"], default="exact")
    add("cutdist", "cut distance bounds", "a", "b")
    sp = add("density", "homomorphism density", "graphon")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--pattern", help="catalog name such as C4, K1,2, P4, Q3, C4+")
    g.add_argument("--graph", help="edge-list file")
    add("spectrum", "signed spectrum", "graphon")
    sp = add("step", "stepping over a partition", "graphon")
    sp.add_argument("--partition", required=True)
    sp.add_argument("--keep-atoms", action="store_true")
    sp = add("regularize", "weak regularity partition", "graphon")
    sp.add_argument("--eps", type=_eps, required=True)
    sp.add_argument("--theta", choices=sorted(REGISTRY), default="c4")
    sp = add("sample", "random reshuffle and concentration report", "graphon")
    sp.add_argument("--partition")
    sp.add_argument("--stripes", type=_positive_int, default=16)
    sp.add_argument("--ensemble-size", type=_positive_int, default=64)
    sp.add_argument("--trials", type=int, default=0)
    sp.add_argument("--eps", type=_eps)
    sp = add("ensemble", "approximate a stepping by averages of versions", "a", "b")
    sp.add_argument("--eps", type=_eps)
    sp.add_argument("--stripes", type=_positive_int, default=16)
    sp.add_argument("--ensemble-size", type=_positive_int, default=16)
    sp = add("test-param", "randomized stepping monotonicity test")
    sp.add_argument("--theta", choices=sorted(REGISTRY), required=True)
    sp.add_argument("--trials", type=_positive_int, default=1000)
    sp.add_argument("--strict", action="store_true", help="require strict decrease")
    sp = add("search-violation", "search for a stepping that increases a density")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--pattern")
    g.add_argument("--graph")
    add("compare", "order-theoretic comparison of two graphons", "a", "b")
    sp = add("gen", "seeded random instances")
    sp.add_argument("--family", choices=["graphon", "kernel", "planted", "partition"], default="graphon")
    sp.add_argument("--atoms", type=_positive_int)
    sp.add_argument("--equal-weights", action="store_true")
    return p


def _config(args) -> dict:
    skip = {"format", "out", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return fileio.dumps(report)
    rows = list(_flatten(fileio._to_builtin(report)))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue()
    return "".join(f"{k}: {v}\n" for k, v in rows)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fn = COMMANDS[args.command]
    code = EXIT_OK
    try:
        result = fn(args)
    except (ComplexityCap, TooLargeForExact, RefinementTooLarge) as e:
        result, code = {"error": type(e).__name__, "message": str(e)}, EXIT_BUDGET
    except GraphonError as e:
        result, code = {"error": type(e).__name__, "message": str(e)}, EXIT_INVALID
    except TheoryViolation as e:
        result, code = {"error": type(e).__name__, "message": str(e)}, EXIT_THEORY
        trace = getattr(e, "trace", None)
        if trace:
            result["trace"] = [vars(t) for t in trace]
    except (OSError, KeyError, TypeError) as e:
        result, code = {"error": type(e).__name__, "message": str(e)}, EXIT_INVALID
    if isinstance(result, dict) and "_exit" in result:
        code = result.pop("_exit")
    report = {"config": _config(args), "result": result}
    text = render(report, args.format)
    if args.out and args.command != "regularize":
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if code != EXIT_OK and "error" in result:
        sys.stderr.write(f"{result['error']}: {result['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
