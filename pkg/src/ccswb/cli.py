"""Command-line surface: parse, lts, must, mustsc, usable, accsets, refines,
normalize, check-axioms, sweep.

Exit codes: 0 = query answered (the verdict itself may be "fails"),
1 = usage or parse error, 2 = resource cap exceeded, 3 = internal
disagreement between the semantic decision and the brute-force oracle.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import equations, oracle, preorders, testing, usability
from .lts import DEFAULT_STATE_CAP, StateCapExceeded, cached_lts, compose
from .syntax import Action, EMPTY_ENV, Env, SyntaxErr, Term, parse_defs, parse_term, pretty

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAP = 2
EXIT_DISAGREE = 3


def _load(path: str) -> tuple[Env, list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_defs(fh.read())


def _term(env: Env, name_or_term: str) -> Term:
    if name_or_term in env:
        return env.lookup(name_or_term)
    return parse_term(name_or_term, env)


def _trace(text: str) -> tuple[Action, ...]:
    out = []
    for tok in text.replace(",", " ").split():
        if tok.startswith("~"):
            out.append(Action(tok[1:], co=True))
        else:
            out.append(Action(tok))
    return tuple(out)


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _state_cap(args) -> int:
    if args.state_cap is not None:
        return args.state_cap
    env_cap = os.environ.get("CCSWB_STATE_CAP")
    return int(env_cap) if env_cap else DEFAULT_STATE_CAP


def cmd_parse(args) -> int:
    env, names = _load(args.file)
    payload = {"defs": {n: pretty(env.lookup(n)) for n in names}}
    _emit(args, payload, "\n".join(f"def {n} = {pretty(env.lookup(n))}" for n in names))
    return EXIT_OK


def cmd_lts(args) -> int:
    env, names = _load(args.file)
    t = _term(env, args.process or names[-1])
    lts = cached_lts(t, env, _state_cap(args))
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(lts.to_dot())
    payload = {
        "process": pretty(t),
        "states": len(lts),
        "edges": lts.n_edges(),
        "converges": lts.converges(),
        "alphabet": sorted(str(a) for a in lts.alphabet()),
    }
    _emit(args, payload,
          f"{pretty(t)}: {len(lts)} states, {lts.n_edges()} edges, "
          f"{'convergent' if lts.converges() else 'divergent'}")
    return EXIT_OK


def _must_common(args, symmetric: bool) -> int:
    env, _ = _load(args.file)
    server = _term(env, args.server)
    client = _term(env, args.client)
    cap = _state_cap(args)
    if args.dot:
        product = compose(cached_lts(server, env, cap), cached_lts(client, env, cap), cap)
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(product.to_dot())
    verdict = (testing.must_sc if symmetric else testing.must)(server, client, env, cap)
    name = "mustSC" if symmetric else "must"
    human = f"{name}({pretty(server)}, {pretty(client)}): {'holds' if verdict.holds else 'fails'}"
    if verdict.evidence is not None:
        states = " -> ".join(f"{l} || {r}" for l, r in verdict.evidence.pretty_path())
        human += f"\n  counterexample ({verdict.evidence.shape}): {states}"
        if verdict.evidence.loop_start is not None:
            human += f"\n  loops back to position {verdict.evidence.loop_start}"
    _emit(args, verdict.to_json(), human)
    return EXIT_OK


def cmd_must(args) -> int:
    return _must_common(args, symmetric=False)


def cmd_mustsc(args) -> int:
    return _must_common(args, symmetric=True)


def cmd_usable(args) -> int:
    env, _ = _load(args.file)
    t = _term(env, args.client)
    report = usability.usable(t, env, depth=args.bound, state_cap=_state_cap(args),
                              verify_witness=True)
    human = f"usable({pretty(t)}): {report.usable} ({report.mode})"
    if report.witness_server is not None:
        human += f", witness server {pretty(report.witness_server)}"
    _emit(args, report.to_json(), human)
    return EXIT_OK


def cmd_accsets(args) -> int:
    env, _ = _load(args.file)
    t = _term(env, args.process)
    s = _trace(args.trace or "")
    lts = cached_lts(t, env, _state_cap(args))
    fam = lts.acc_ut(s) if args.unsuccessful else lts.acc(s)
    kindname = "unsuccessful acceptance" if args.unsuccessful else "acceptance"
    sets = sorted(sorted(str(a) for a in rs) for rs in fam)
    payload = {"process": pretty(t), "trace": [str(a) for a in s], "family": sets}
    _emit(args, payload,
          f"{kindname} set of {pretty(t)} after '{' '.join(map(str, s))}': "
          + ("{" + ", ".join("{" + ", ".join(rs) + "}" for rs in sets) + "}"))
    return EXIT_OK


def cmd_refines(args) -> int:
    env, _ = _load(args.file)
    left = _term(env, args.left)
    right = _term(env, args.right)
    fn = preorders.leq_plus if args.precongruence else preorders.leq
    verdict = fn(args.kind, left, right, env, bound=args.bound, state_cap=_state_cap(args))
    rel = f"{args.kind}{'+' if args.precongruence else ''}"
    human = (f"{pretty(left)} <={rel} {pretty(right)}: "
             f"{'holds' if verdict.holds else 'fails'} ({verdict.mode})")
    payload = verdict.to_json()
    if not verdict.holds and verdict.failing_clause is not None:
        human += f"\n  clause: {verdict.failing_clause.to_json()}"
        if args.witness and not args.precongruence:
            try:
                w = preorders.synthesize_witness(args.kind, left, right, env, verdict,
                                                 _state_cap(args))
            except preorders.SynthesisGap:
                w = oracle.refute_by_search(args.kind, left, right, env, limit=2000,
                                            state_cap=_state_cap(args))
            if w is not None:
                payload["witness_test"] = pretty(w)
                human += f"\n  witness test: {pretty(w)}"
    _emit(args, payload, human)
    return EXIT_OK


def cmd_normalize(args) -> int:
    env, _ = _load(args.file)
    t = _term(env, args.process)
    if args.theory == "clt":
        nf = equations.normalize_cnf(t, env)
        term = equations.cnf_to_term(nf)
        errors = equations.check_cnf(nf)
    elif args.theory == "svr":
        nf = equations.normalize_snf(t, env)
        term = equations.pnf_to_term(nf)
        errors = []
    else:
        nf, exact = equations.normalize_pnf_info(t, env)
        term = equations.pnf_to_term(nf)
        errors = equations.check_pnf(nf)
    payload = {"theory": args.theory, "input": pretty(t), "normal_form": pretty(term),
               "valid": not errors}
    _emit(args, payload, f"{pretty(t)}  --[{args.theory}]-->  {pretty(term)}")
    return EXIT_OK


def cmd_check_axioms(args) -> int:
    kind_of = {"svr": "SVR", "clt": "CLT", "p2p": "P2P"}
    theory = kind_of[args.theory]
    alphabet = tuple(args.alphabet.split(","))
    reports = []
    bad = 0
    for name, axset in ((theory, equations.THEORY_AXIOMS[theory]),
                        ("Derived", equations.THEORY_AXIOMS["Derived"])):
        if name == "Derived" and args.theory == "svr":
            continue
        insts = equations.instantiate_axioms(name, alphabet, depth=args.depth,
                                             samples=args.samples, seed=args.seed)
        failures = equations.check_instances(args.theory, insts)
        bad += len(failures)
        reports.append({"axioms": name, "instances": len(insts), "violations":
                        [dict(inst.to_json(), direction=d) for inst, d in failures]})
    payload = {"theory": args.theory, "reports": reports, "sound": bad == 0}
    human = "\n".join(
        f"{r['axioms']}: {r['instances']} instances, {len(r['violations'])} violations"
        for r in reports)
    _emit(args, payload, human)
    return EXIT_OK if bad == 0 else EXIT_DISAGREE


def cmd_sweep(args) -> int:
    alphabet = tuple(args.alphabet.split(","))
    spec = oracle.EnumSpec(alphabet=alphabet, max_depth=args.depth, max_width=args.width)
    corpus = list(oracle.enumerate_terms(spec))
    report = oracle.cross_validate(args.kind, corpus, EMPTY_ENV, test_limit=args.test_limit,
                                   pair_cap=args.pairs_cap, seed=args.seed,
                                   state_cap=_state_cap(args))
    payload = {
        "kind": args.kind,
        "corpus": len(corpus),
        "pairs": len(report.records),
        "disagreements": [r.to_json() for r in report.disagreements],
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for r in report.records if args.verbose else []:
            print(json.dumps(r.to_json(), sort_keys=True))
        print(f"{args.kind}: {len(report.records)} pairs checked, "
              f"{len(report.disagreements)} disagreements")
        for r in report.disagreements:
            print("  DISAGREE:", json.dumps(r.to_json(), sort_keys=True))
    return EXIT_OK if report.ok else EXIT_DISAGREE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccswb",
                                 description="Workbench for must-testing of servers, "
                                             "clients and peers")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    ap.add_argument("--state-cap", type=int, default=None,
                    help="max reachable states per graph (env CCSWB_STATE_CAP)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a definition file and echo it back")
    p.add_argument("file")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("lts", help="build the transition graph of a process")
    p.add_argument("file")
    p.add_argument("-p", "--process", help="definition name or inline term")
    p.add_argument("--dot", help="write DOT to this path")
    p.set_defaults(fn=cmd_lts)

    for name, fn in (("must", cmd_must), ("mustsc", cmd_mustsc)):
        p = sub.add_parser(name, help=f"decide {name} for a server/client pair")
        p.add_argument("file")
        p.add_argument("-s", "--server", required=True)
        p.add_argument("-c", "--client", required=True)
        p.add_argument("--dot", help="write the product graph to this path")
        p.set_defaults(fn=fn)

    p = sub.add_parser("usable", help="decide client/peer usability")
    p.add_argument("file")
    p.add_argument("-c", "--client", required=True)
    p.add_argument("--bound", type=int, default=None, help="force a bounded verdict")
    p.set_defaults(fn=cmd_usable)

    p = sub.add_parser("accsets", help="acceptance sets after a trace")
    p.add_argument("file")
    p.add_argument("-p", "--process", required=True)
    p.add_argument("--trace", default="", help="space-separated actions, ~ for co")
    p.add_argument("--unsuccessful", action="store_true")
    p.set_defaults(fn=cmd_accsets)

    p = sub.add_parser("refines", help="decide a refinement preorder")
    p.add_argument("file")
    p.add_argument("--kind", choices=preorders.KINDS, required=True)
    p.add_argument("-l", "--left", required=True)
    p.add_argument("-r", "--right", required=True)
    p.add_argument("--precongruence", action="store_true",
                   help="decide under a fresh success summand")
    p.add_argument("--bound", type=int, default=None, help="force a bounded verdict")
    p.add_argument("--witness", action="store_true",
                   help="attach a distinguishing test to refutations")
    p.set_defaults(fn=cmd_refines)

    p = sub.add_parser("normalize", help="normal form under a theory")
    p.add_argument("file")
    p.add_argument("-p", "--process", required=True)
    p.add_argument("--theory", choices=("svr", "clt", "p2p"), default="p2p")
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("check-axioms", help="seeded axiom soundness sweep")
    p.add_argument("--theory", choices=("svr", "clt", "p2p"), required=True)
    p.add_argument("--alphabet", default="a,b")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--samples", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_check_axioms)

    p = sub.add_parser("sweep", help="cross-validate a preorder against search")
    p.add_argument("--kind", choices=preorders.KINDS, required=True)
    p.add_argument("--alphabet", default="a,b")
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--width", type=int, default=2)
    p.add_argument("--test-limit", type=int, default=600)
    p.add_argument("--pairs-cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_sweep)

    return ap


def run(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except SyntaxErr as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StateCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (preorders.ModeError, usability.VisibleCycle, equations.NotCCSf) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
