"""Command-line front end.

Every subcommand prints one JSON document to stdout.  With ``--out DIR`` the
JSON is also written to ``DIR/result.json`` together with any CSV data
(``trace.csv`` for search, ``trap_trace.csv`` for integrated transport,
``sweep.csv`` for sweeps, ``graph.txt`` for the graph subcommand).

Exit status: 0 on success, 1 for invalid input, 2 when a numerical
procedure fails.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import graphs, search, transfer, transport
from .errors import CTQWError, InvalidParameter, NumericalError
from .krylov import basis_state, lanczos

FAMILY_ALIASES = {
    "complete": "complete",
    "complete_bipartite": "complete_bipartite",
    "complete-bipartite": "complete_bipartite",
    "cbg": "complete_bipartite",
    "star": "star",
    "binary_tree": "binary_tree",
    "binary-tree": "binary_tree",
    "tree": "binary_tree",
    "hypercube": "hypercube",
    "path": "path",
}
CONSTRAINTS = {"none": "none", "matching": "at_most_one_per_node", "avoid-solution": "avoid_node"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def dumps(obj, indent=2, _level=0):
    """JSON with floats printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_string(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise InvalidParameter(f"cannot serialise non-finite value {x}")
        text = format(x, ".17g")
        if not any(c in text for c in ".en"):
            text += ".0"
        return text
    if isinstance(obj, str):
        return _string(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _string(s):
    import json

    return json.dumps(s, ensure_ascii=False)


def _add_graph_args(p):
    p.add_argument("--family", choices=sorted(FAMILY_ALIASES))
    p.add_argument("--n", type=int)
    p.add_argument("--m1", type=int)
    p.add_argument("--m2", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--graph-file")
    p.add_argument("--break-links", type=int, default=0)
    p.add_argument("--constraint", choices=sorted(CONSTRAINTS), default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")


def build_parser():
    parser = _Parser(prog="ctqw", description="Invariant-subspace tools for continuous-time quantum walks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("graph", help="emit the edge list of a graph")
    _add_graph_args(p)
    p.add_argument("--solution", type=int, default=0)

    p = sub.add_parser("reduce", help="Lanczos reduction from a node")
    _add_graph_args(p)
    p.add_argument("--seed-node", type=int, default=0)
    p.add_argument("--solution", type=int, default=0)

    p = sub.add_parser("search", help="spatial search run")
    _add_graph_args(p)
    p.add_argument("--solution", type=int, default=0)
    p.add_argument("--gamma", default="auto")
    p.add_argument("--initial", default="uniform", help="'uniform' or a node index")
    p.add_argument("--t-max", type=float)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("transport", help="transport efficiency to a trap")
    _add_graph_args(p)
    p.add_argument("--solution", type=int, default=0)
    p.add_argument("--trap", type=int, default=0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--initial", default="all-sites",
                   help="all-sites, all-but-trap, leaves, or a node index")
    p.add_argument("--method", choices=["subspace", "integrated", "both"], default="subspace")
    p.add_argument("--t-max", type=float, default=50.0)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("sweep", help="efficiency averaged over random broken links")
    _add_graph_args(p)
    p.add_argument("--solution", type=int, default=0)
    p.add_argument("--trap", type=int, default=0)
    p.add_argument("--initial", default="all-sites")
    p.add_argument("--r-values", default="0,1,2,3")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("transfer", help="state-transfer fidelity and its bound")
    _add_graph_args(p)
    p.add_argument("--solution", type=int, default=0)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--t-window", type=float)
    p.add_argument("--dt", type=float)
    return parser


def _family_spec(args):
    family = FAMILY_ALIASES[args.family]
    keys = {
        "complete": ("n",), "star": ("n",), "path": ("n",),
        "complete_bipartite": ("m1", "m2"), "binary_tree": ("levels",), "hypercube": ("d",),
    }[family]
    return graphs.FamilySpec(family, {k: getattr(args, k) for k in keys})


def _base_graph(args):
    if args.graph_file and args.family:
        raise InvalidParameter("give either --family or --graph-file, not both")
    if args.graph_file:
        return None, graphs.read_edgelist(args.graph_file)
    if not args.family:
        raise InvalidParameter("one of --family or --graph-file is required")
    spec = _family_spec(args)
    return spec, graphs.build(spec)


def _graph(args, avoid=None):
    spec, g = _base_graph(args)
    broken = []
    if args.break_links:
        constraint = CONSTRAINTS[args.constraint]
        if constraint == "avoid_node":
            broken = graphs.sample_broken(g, args.break_links, "avoid_node", avoid=avoid, seed=args.seed)
        else:
            broken = graphs.sample_broken(g, args.break_links, constraint, seed=args.seed)
        g = graphs.remove_links(g, broken)
    return spec, g, broken


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k != "out"}


def config_to_argv(cfg):
    """Command line that reproduces a run from its embedded configuration."""
    argv = [cfg["command"]]
    for key, value in cfg.items():
        if key == "command" or value is None:
            continue
        flag = "--" + key.replace("_", "-")
        argv.extend([flag, dumps(value) if isinstance(value, float) else str(value)])
    return argv


def _write(out, name, text):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _emit(args, result, files=()):
    doc = {"config": _config(args), "argv": config_to_argv(_config(args)), "result": result}
    text = dumps(doc) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write(args.out, "result.json", text)
        for name, content in files:
            _write(args.out, name, content)


def _mixture(args, g, spec, trap):
    choice = args.initial
    if choice.lstrip("-").isdigit():
        node = g.check_node(int(choice), "initial node")
        return transport.site_state(g.n, node)
    levels = None
    if spec is not None and spec.family == "binary_tree":
        levels = int(spec.params["levels"])
    return transport.mixture_for(choice, g, trap, levels)


def _w_location(spec, g, w):
    if spec is None:
        return "any"
    if spec.family == "star":
        return "center" if w == g.n - 1 else "leaf"
    if spec.family == "complete_bipartite":
        return "partition1" if w < int(spec.params["m1"]) else "partition2"
    return "any"


def cmd_graph(args):
    _, g, broken = _graph(args, avoid=args.solution)
    text = g.to_edgelist()
    result = {"n": g.n, "num_edges": g.num_edges, "broken": [list(e) for e in broken],
              "edges": [list(e) for e in g.edges]}
    _emit(args, result, [("graph.txt", text)])


def cmd_reduce(args):
    _, g, broken = _graph(args, avoid=args.solution)
    node = g.check_node(args.seed_node, "seed node")
    H = g.adjacency() if g.n <= search.DENSE_LIMIT else g.operator()
    b = lanczos(H, basis_state(g.n, node))
    result = b.to_dict()
    result["broken"] = [list(e) for e in broken]
    _emit(args, result)


def cmd_search(args):
    spec, g, broken = _graph(args, avoid=args.solution)
    w = g.check_node(args.solution, "solution")
    location = _w_location(spec, g, w)
    predicted = None
    if spec is not None:
        try:
            predicted = search.predict_T_P(spec, location)
        except CTQWError:
            predicted = None
    if args.gamma == "auto":
        if spec is None:
            raise InvalidParameter("--gamma auto needs a graph family")
        args.gamma = search.predict_gamma(spec, location)
    else:
        try:
            args.gamma = float(args.gamma)
        except ValueError:
            raise InvalidParameter(f"--gamma must be a number or 'auto', got {args.gamma!r}") from None
    if args.t_max is None:
        if predicted is None:
            raise InvalidParameter("--t-max is required when no closed-form prediction exists")
        args.t_max = 3.0 * predicted[0]
    if args.dt is None:
        args.dt = predicted[0] / 500.0 if predicted is not None else args.t_max / 5000.0
    initial = None
    if args.initial != "uniform":
        if not args.initial.lstrip("-").isdigit():
            raise InvalidParameter("--initial must be 'uniform' or a node index")
        initial = transport.site_state(g.n, g.check_node(int(args.initial), "initial node"))
    res = search.run_search(search.SearchProblem(g, w, args.gamma, initial), args.t_max, args.dt,
                            predicted=predicted)
    result = res.to_dict()
    result["broken"] = [list(e) for e in broken]
    _emit(args, result, [("trace.csv", res.trace.to_csv())])


def cmd_transport(args):
    spec, g, broken = _graph(args, avoid=args.trap)
    trap = g.check_node(args.trap, "trap")
    p = transport.TransportProblem(g, trap, args.kappa, _mixture(args, g, spec, trap))
    result = {"broken": [list(e) for e in broken]}
    files = []
    if args.method in ("subspace", "both"):
        res = transport.efficiency_subspace(p)
        result.update(res.to_dict())
    if args.method in ("integrated", "both"):
        res = transport.efficiency_integrated(p, t_max=args.t_max, dt=args.dt, keep_trace=True)
        key = "integrated" if args.method == "both" else None
        if key:
            result[key] = res.to_dict()
        else:
            result.update(res.to_dict())
        tr = res.trace
        lines = ["t,p_trap,norm2"]
        lines.extend(f"{a:.17g},{b:.17g},{c:.17g}" for a, b, c in zip(tr["t"], tr["p_trap"], tr["norm2"]))
        files.append(("trap_trace.csv", "\n".join(lines) + "\n"))
    _emit(args, result, files)


def cmd_sweep(args):
    spec, g = _base_graph(args)
    trap = g.check_node(args.trap, "trap")
    try:
        r_values = [int(x) for x in args.r_values.split(",") if x.strip()]
    except ValueError:
        raise InvalidParameter(f"cannot parse --r-values {args.r_values!r}") from None
    mixture = _mixture(args, g, spec, trap)
    if isinstance(mixture, np.ndarray):
        mixture = [(1.0, int(args.initial))]
    rows = transport.sweep_broken_links(g, trap, mixture, r_values, args.samples,
                                        seed=args.seed, jobs=args.jobs)
    result = {"rows": [r._asdict() for r in rows]}
    _emit(args, result, [("sweep.csv", transport.sweep_to_csv(rows))])


def cmd_transfer(args):
    _, g, broken = _graph(args, avoid=args.target)
    p = transfer.TransferProblem(g, g.check_node(args.source, "source"),
                                 g.check_node(args.target, "target"), args.t_window, args.dt)
    args.t_window, args.dt = p.window()
    report = transfer.max_fidelity_scan(p)
    result = report.to_dict()
    result["broken"] = [list(e) for e in broken]
    _emit(args, result)


COMMANDS = {
    "graph": cmd_graph,
    "reduce": cmd_reduce,
    "search": cmd_search,
    "transport": cmd_transport,
    "sweep": cmd_sweep,
    "transfer": cmd_transfer,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"ctqw: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (CTQWError, OSError) as exc:
        print(f"ctqw: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
