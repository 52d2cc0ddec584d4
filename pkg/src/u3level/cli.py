"""Command-line driver: ``u3level <subcommand> [flags]``.

Exit status is 0 when every asserted property holds, 1 on a violation and
2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import flint

from . import __version__
from .campaigns import (Fault, draw_graph, jsonable, raise_campaign, spectra_report, trial_seed,
                        verify_plocal, verify_tree)
from .quotient import GraphFormatError, read_graph, write_graph
from .tree import TreeParams

SCHEMA = "u3level-report/1"
EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2

DEFAULT_TRIALS = {"verify-plocal": 1000, "raise": 200, "spectra": 1, "gen-quotient": 1}
DEFAULT_PRIMES = {"verify-plocal": [2, 3, 5, 7], "raise": [3]}


class ConfigError(Exception):
    pass


def parse_range(text: str) -> tuple[int, int]:
    try:
        lo, _, hi = text.partition(":")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected min:max, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo, hi


def u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--q", type=int, action="append", help="residue field size (repeatable for verify-tree)")
    shared.add_argument("--p", type=int, action="append", help="prime for the local ring (repeatable)")
    shared.add_argument("--nx", type=parse_range, default=(2, 40), help="range of |X| as min:max")
    shared.add_argument("--trials", type=int)
    shared.add_argument("--seed", type=u64, default=0, help="master seed; trial t uses seed XOR t")
    shared.add_argument("--radius", type=int, default=4, help="ball radius for tree checks")
    shared.add_argument("--out", type=Path, help="write the report here instead of stdout")
    shared.add_argument("--format", choices=("json", "tsv"), default="json")
    shared.add_argument("--graph", type=Path, help="use a stored quotient graph")
    shared.add_argument("--inject-fault", dest="inject_fault", help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="u3level", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-tree", parents=[shared], help="operator identities on the tree")
    sub.add_parser("verify-plocal", parents=[shared], help="random p-local oracle comparisons")
    sub.add_parser("gen-quotient", parents=[shared], help="write a random quotient graph")
    sub.add_parser("spectra", parents=[shared], help="eigenblocks of T on quotients")
    sub.add_parser("raise", parents=[shared], help="level-raising campaign")
    return parser


def _config(args) -> dict:
    qs = args.q or [2]
    if args.command != "verify-tree" and len(qs) > 1:
        raise ConfigError("--q given more than once")
    for q in qs:
        if q < 2 or len(flint.fmpz(q).factor()) != 1:
            raise ConfigError(f"q={q} is not a prime power")
    primes = args.p or DEFAULT_PRIMES.get(args.command, [])
    for p in primes:
        if not flint.fmpz(p).is_prime():
            raise ConfigError(f"p={p} is not a prime")
        if args.command == "raise" and any(q % p == 0 for q in qs):
            raise ConfigError(f"p={p} divides q={qs[0]}: the prime must be prime to the residue characteristic")
    trials = args.trials if args.trials is not None else DEFAULT_TRIALS.get(args.command, 1)
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    cfg = {"subcommand": args.command, "q": qs if args.command == "verify-tree" else qs[0],
           "primes": primes, "nx": list(args.nx), "trials": trials, "seed": args.seed,
           "radius": args.radius, "format": args.format,
           "graph": str(args.graph) if args.graph else None}
    if args.inject_fault:
        cfg["inject_fault"] = args.inject_fault
    return cfg


def _load_graph(path: Path, q: int):
    try:
        g = read_graph(path.read_text())
    except (OSError, GraphFormatError) as exc:
        raise ConfigError(f"cannot read graph {path}: {exc}") from None
    if g.params.q != q:
        raise ConfigError(f"graph has q={g.params.q}, configured q={q}")
    return g


def run(cfg: dict, args) -> tuple[dict, bool]:
    cmd = cfg["subcommand"]
    if cmd == "verify-tree":
        try:
            records, ok = verify_tree(cfg["q"], cfg["radius"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        summary = {"checks": len(records), "failed": sum(not r["ok"] for r in records)}
        return {"records": records, "summary": summary}, ok
    if cmd == "verify-plocal":
        fault = Fault(cfg["inject_fault"]) if "inject_fault" in cfg else None
        records, ok, summary = verify_plocal(cfg["primes"], cfg["trials"], cfg["seed"], fault)
        doc = {"records": records, "summary": summary}
        if not ok:
            doc["counterexample"] = records[-1]
        return doc, ok
    params = TreeParams.u3(cfg["q"])
    if cmd == "raise":
        g = _load_graph(args.graph, cfg["q"]) if args.graph else None
        records, ok, summary = raise_campaign(cfg["q"], cfg["primes"], tuple(cfg["nx"]),
                                              cfg["trials"], cfg["seed"], g)
        return {"records": records, "summary": summary}, ok
    graphs = []
    if args.graph:
        graphs.append((None, _load_graph(args.graph, cfg["q"])))
    else:
        for t in range(cfg["trials"]):
            s = trial_seed(cfg["seed"], t)
            graphs.append((s, draw_graph(params, tuple(cfg["nx"]), s)))
    if cmd == "gen-quotient":
        return {"graphs": [{"seed": s, "digest": g.digest(), "text": write_graph(g)} for s, g in graphs]}, True
    records = [{"seed": s, **spectra_report(g)} for s, g in graphs]
    return {"records": jsonable(records), "summary": {"graphs": len(records)}}, True


def to_tsv(doc: dict) -> str:
    """Lossy one-row-per-item summary."""
    cmd = doc["config"]["subcommand"]
    rows = []
    if cmd == "raise":
        rows.append(["trial", "seed", "graph", "nX", "block", "lambda", "p", "d", "m", "n", "c",
                     "profile", "separation", "verdict"])
        for r in doc["records"]:
            for b in r["blocks"]:
                rows.append([r["trial"], r["seed"], r["graph"], r["nX"], b["index"], b["lam"], b["p"],
                             b["d"], b["m"], b["n"], b["c"], ",".join(map(str, b["profile"])),
                             b["separation"], b["verdict"]])
    elif cmd == "spectra":
        rows.append(["seed", "graph", "nX", "factor", "multiplicity", "lambda", "certificate"])
        for r in doc["records"]:
            for b in r["blocks"]:
                rows.append([r["seed"], r["graph"], r["nX"], ",".join(map(str, b["factor"])),
                             b["multiplicity"], b["lambda"], b["certificate"]])
    elif cmd == "gen-quotient":
        rows.append(["seed", "digest"])
        rows += [[g["seed"], g["digest"]] for g in doc["graphs"]]
    else:
        keys = sorted({k for r in doc["records"] for k, v in r.items() if not isinstance(v, (dict, list))})
        rows.append(keys)
        rows += [[r.get(k, "") for k in keys] for r in doc["records"]]
    return "".join("\t".join("" if v is None else str(v) for v in row) + "\n" for row in rows)


def render(doc: dict, fmt: str) -> str:
    if fmt == "tsv":
        return to_tsv(doc)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        body, ok = run(cfg, args)
    except ConfigError as exc:
        print(f"u3level: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    doc = {"schema": SCHEMA, "tool": "u3level", "version": __version__, "config": cfg, "ok": ok, **body}
    text = render(doc, cfg["format"])
    if cfg["subcommand"] == "gen-quotient" and cfg["format"] == "json" and len(doc["graphs"]) == 1:
        # a single graph is written in the plain graph file format
        text = doc["graphs"][0]["text"]
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"u3level: {cfg['subcommand']}: property violation", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
