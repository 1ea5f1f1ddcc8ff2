"""Command-line front end.

Subcommands: closure, reconstruct, generate, trials, scan, gadget, eta.
Exit codes: 0 success, 2 config error, 3 unbracketed scan.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .geometry import Tolerance
from .harness import (ConfigError, Unbracketed, emit, eta, p_star, run_trials,
                      scan_threshold)
from .percolation import (PollutionSet, SimpleGraph, build_gadget, closure,
                          polluted_closure)
from .reconstruct import DistanceState, run_pipeline
from .simulate import InstanceSpec, generate


def _load_config(args):
    if args.config is None:
        raise ConfigError("--config is required for this subcommand")
    try:
        with open(args.config) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {args.config}: line {exc.lineno}: {exc.msg}") from exc
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.exact:
        cfg.setdefault("tol", {})["exact"] = True
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_eta(args):
    e = eta(args.d)
    line = f"eta({args.d}) = {e} = {float(e):.6f}"
    if args.n is not None:
        line += f"; p_star({args.n},{args.d}) = {p_star(args.n, args.d):.6g}"
    print(line)
    return 0


def cmd_gadget(args):
    g = build_gadget(args.d, args.r)
    out = _outdir(args)
    (out / "gadget.edges").write_text(g.graph.to_edge_list())
    meta = {"d": g.d, "r": g.r, "n": g.graph.n, "root_edge": list(g.root_edge),
            "bases": [list(b) for b in g.bases]}
    (out / "gadget.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote gadget with {g.graph.n} vertices, {len(g.graph.edges)} edges to {out}")
    return 0


def cmd_closure(args):
    g = SimpleGraph.from_edge_list(Path(args.graph).read_text(), n=args.n)
    if args.pollution is not None:
        data = json.loads(Path(args.pollution).read_text())
        P = PollutionSet.from_json(args.d, data)
        closed = polluted_closure(g, args.d, P)
    else:
        closed = closure(g, args.clique_size)
    out = _outdir(args)
    (out / "closure.edges").write_text(closed.to_edge_list())
    print(f"closure: {len(g.edges)} -> {len(closed.edges)} edges "
          f"({'complete' if closed.is_complete() else 'incomplete'})")
    return 0


def cmd_generate(args):
    cfg = _load_config(args)
    spec = InstanceSpec.from_json({**cfg["instance"], "seed": cfg.get("seed", 0)})
    P = generate(spec)
    out = _outdir(args)
    (out / "instance.json").write_text(json.dumps(P.to_json()) + "\n")
    print(f"wrote {P.n} points in R^{P.dim} to {out / 'instance.json'}")
    return 0


def cmd_reconstruct(args):
    with open(args.reveal) as f:
        data = json.load(f)
    n, d = int(data["n"]), int(data["d"])
    rounds = []
    for rnd in data["rounds"]:
        S = DistanceState(n)
        for u, v, d2 in rnd:
            S.set(int(u), int(v), float(d2))
        rounds.append(S)
    tol = Tolerance(exact_mode=args.exact)
    surviving, emb, steps, distances, info = run_pipeline(
        rounds, d, delta=args.delta, tol=tol)
    out = _outdir(args)
    report = {
        "surviving": surviving,
        "levels": info["levels"],
        "distances": [[u, v, d2] for (u, v), d2 in sorted(distances.items())],
        "reduction_steps": [s.to_json() for s in steps],
        "embedding": emb.to_json(),
    }
    (out / "reconstruction.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"reconstructed {len(surviving)}/{n} points over {info['levels']} level(s)")
    return 0


def cmd_trials(args):
    cfg = _load_config(args)
    reports = run_trials(cfg, threads=args.threads)
    out = _outdir(args)
    emit(reports, "csv", out / "trials.csv")
    emit(reports, "json", out / "trials.json")
    fracs = sorted(r.reconstructible_set_fraction for r in reports)
    med = fracs[len(fracs) // 2] if fracs else float("nan")
    print(f"{len(reports)} trials; median reconstructible fraction {med:.3f}")
    return 0


def cmd_scan(args):
    cfg = _load_config(args)
    result = scan_threshold(cfg, threads=args.threads)
    out = _outdir(args)
    emit(result, "csv", out / "scan.csv")
    emit(result, "json", out / "scan.json")
    emit(result, "svg", out / "scan.svg")
    if result.slope is not None:
        print(f"fitted slope {result.slope:.3f} (stderr {result.slope_stderr})")
    if result.unbracketed:
        print(f"unbracketed n values: {result.unbracketed}", file=sys.stderr)
        return 3
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="distrecon",
                                 description="Distance reconstruction and clique percolation toolkit")
    ap.add_argument("--seed", type=int, default=None, help="override config master seed")
    ap.add_argument("--config", type=str, default=None, help="JSON config file")
    ap.add_argument("--out", type=str, default=".", help="output directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--exact", action="store_true", help="exact rational independence tests")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eta", help="percolation exponent and working probability")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("-n", type=int, default=None)
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("gadget", help="emit the rooted percolation gadget")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("-r", type=int, required=True)
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("closure", help="bootstrap-percolation closure of a graph")
    p.add_argument("graph", help="edge-list file, one 'u v' per line")
    p.add_argument("--clique-size", type=int, default=4)
    p.add_argument("--pollution", type=str, default=None, help="JSON pollution file")
    p.add_argument("-d", type=int, default=1, help="dimension (with --pollution)")
    p.add_argument("-n", type=int, default=None, help="vertex count override")
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("generate", help="generate a ground-truth instance")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reconstruct", help="run the reconstruction pipeline on a reveal file")
    p.add_argument("reveal", help="JSON reveal file")
    p.add_argument("--delta", type=float, default=0.1)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("trials", help="Monte Carlo reconstruction trials")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("scan", help="percolation threshold scan and exponent fit")
    p.set_defaults(func=cmd_scan)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Unbracketed as exc:
        print(f"unbracketed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
