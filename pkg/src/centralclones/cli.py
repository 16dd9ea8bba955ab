"""Command-line interface.

Exit codes: 0 ok, 1 usage or parse error, 2 validation failure (including a
certificate that does not verify), 3 internal inconsistency.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import derived as dv
from .catalog import enumerate_relations
from .certify import (DEFAULT_NODE_BUDGET, DEFAULT_SEPARATOR_ARITY, Certificate,
                      find_certificate, verify_certificate)
from .classifier import classify
from .closure import DEFAULT_CLOSURE_BUDGET, bounded_closure
from .interp import interpolate
from .polycheck import BudgetExceeded
from .relcore import (CentralityError, Operation, ParseError, RelationError, read_operation,
                      read_relation, relation_to_json, validate_central, write_relation)
from .survey import run_survey

OK, USAGE, INVALID, INCONSISTENT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _relation(path: str):
    return read_relation(_read_text(path))


def _operation(spec: str, k: int) -> Operation:
    """A file path, an operation line (k=.. arity=.. table=..) or a bare
    comma/space separated table."""
    text = _read_text(spec) if Path(spec).is_file() else spec
    if "table=" in text:
        return read_operation(text)
    try:
        values = [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ParseError(f"cannot read operation {spec!r}") from exc
    if not values:
        raise ParseError("empty operation table")
    return Operation.from_table(k, values)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    rel = _relation(args.file)
    try:
        c = validate_central(rel)
    except CentralityError as exc:
        _emit(args, {"central": False, "reason": exc.reason, "witness": exc.witness,
                     "message": str(exc)}, f"not central: {exc}")
        return INVALID
    _emit(args, {"central": True, "k": c.k, "arity": c.arity, "center": sorted(c.center)},
          f"central relation on E_{c.k}, arity {c.arity}, center {sorted(c.center)}")
    return OK


def cmd_center(args) -> int:
    rel = _relation(args.file)
    try:
        c = validate_central(rel)
    except CentralityError as exc:
        _emit(args, {"central": False, "reason": exc.reason}, f"not central: {exc}")
        return INVALID
    _emit(args, {"center": sorted(c.center)}, " ".join(map(str, sorted(c.center))))
    return OK


def cmd_chains(args) -> int:
    rel = _relation(args.file)
    try:
        c = validate_central(rel)
    except CentralityError as exc:
        _emit(args, {"central": False, "reason": exc.reason}, f"not central: {exc}")
        return INVALID
    chains = [sorted(b) for b in c.maximal_chains]
    _emit(args, {"maximal_chains": chains},
          "\n".join("{" + ",".join(map(str, b)) + "}" for b in chains))
    return OK


def _params(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"parameter {item!r} must look like name=value")
        try:
            out[name] = int(value)
        except ValueError:
            out[name] = value
    return out


def _derive(kind: str, rho, sigma, p: dict, mode: str | None):
    def m(default):
        return {"index_mode": mode or default}

    def need(name):
        if name not in p:
            raise UsageError(f"{kind} needs --param {name}=<int>")
        return p[name]

    gamma = lambda: dv.rho_cap_sigma(rho, sigma)  # noqa: E731
    table = {
        "Tau": lambda: dv.tau(rho, sigma),
        "GammaBinary": lambda: dv.gamma_binary(rho, sigma),
        "GammaT": lambda: dv.gamma_t(rho, sigma, need("t")),
        "RhoL": lambda: dv.rho_l(rho, need("l")),
        "AlphaN": lambda: dv.alpha_n(rho, sigma, need("n"), **m("strict")),
        "BetaChain": lambda: dv.beta_chain(rho, sigma, need("j")),
        "Alpha1Of": lambda: dv.alpha1_of(gamma().relation, p.get("positions", "lt_h"), gamma().spec),
        "BetaT": lambda: dv.beta_t(rho, gamma(), need("t"), **m("strict")),
        "Lambda": lambda: dv.lambda_pad(rho, p.get("s", sigma.arity)),
        "GammaPrime": lambda: dv.gamma_prime(rho, sigma),
        "ThetaUp": lambda: dv.theta_up(rho, sigma, need("t"), **m("strict")),
        "ThetaDown": lambda: dv.theta_down(rho, sigma, need("t"), **m("repeats")),
        "GammaS": lambda: dv.gamma_s_rel(rho, sigma, **m("repeats")),
        "GammaPrimeT": lambda: dv.gamma_prime_t(rho, sigma, need("t"), **m("repeats")),
        "GammaPrimeH": lambda: dv.gamma_prime_h(rho, sigma, **m("repeats")),
        "GammaPrimeChain": lambda: dv.gamma_prime_chain(rho, sigma, need("n"), **m("repeats")),
        "ThetaCommon": lambda: dv.theta_common(rho, sigma, need("t"), **m("repeats")),
        "Intersect": gamma,
    }
    if kind not in table:
        raise UsageError(f"unknown kind {kind!r}; choose from {', '.join(sorted(table))}")
    return table[kind]()


def cmd_derive(args) -> int:
    rho = validate_central(_relation(args.rho))
    sigma = validate_central(_relation(args.sigma))
    d = _derive(args.kind, rho, sigma, _params(args.param), args.index_mode)
    _emit(args, {"relation": relation_to_json(d.relation), "derived_spec": d.spec.to_json()},
          write_relation(d.relation) + "\n# " + d.spec.describe())
    return OK


def cmd_classify(args) -> int:
    res = classify(_relation(args.rho), _relation(args.sigma))
    lines = [f"verdict: {res.verdict}"]
    lines += [f"  {k}: {v}" for k, v in res.evidence.items()]
    lines += [f"  - {r}" for r in res.reasons]
    _emit(args, res.to_json(), "\n".join(lines))
    return OK


def cmd_certify(args) -> int:
    rho, sigma = _relation(args.rho), _relation(args.sigma)
    cert = find_certificate(rho, sigma, args.max_arity, args.budget or DEFAULT_NODE_BUDGET)
    if cert is None:
        msg = ("no certificate found within the search bounds "
               "(this does not show that the pair is maximal)")
        _emit(args, {"found": False, "message": msg}, msg)
        return INVALID
    body = json.dumps(cert.to_json(), sort_keys=True)
    if args.output:
        Path(args.output).write_text(body)
    if args.json:
        print(body)
    else:
        print(f"certificate found: {cert.lemma_tag}, delta arity {cert.delta.arity}, "
              f"f_mid arity {cert.f_mid.arity}, g_top arity {cert.g_top.arity}"
              + (f"; written to {args.output}" if args.output else ""))
    return OK


def cmd_verify(args) -> int:
    try:
        cert = Certificate.from_json(json.loads(_read_text(args.certificate)))
    except json.JSONDecodeError as exc:
        raise ParseError(f"certificate is not JSON: {exc.msg}") from exc
    rho = _relation(args.rho) if args.rho else cert.rho
    sigma = _relation(args.sigma) if args.sigma else cert.sigma
    res = verify_certificate(rho, sigma, cert)
    _emit(args, {"ok": res.ok, "clause": res.clause, "message": res.message},
          "certificate verified" if res else f"certificate rejected (clause {res.clause}): {res.message}")
    return OK if res else INVALID


def cmd_interpolate(args) -> int:
    rho = validate_central(_relation(args.rho))
    sigma = validate_central(_relation(args.sigma))
    g = _operation(args.g, rho.k)
    target = _operation(args.target, rho.k)
    if target.arity > 2 or (target.arity == 2 and rho.k != 3):
        raise UsageError("targets are limited to arity 1, or arity 2 on E_3")
    t = interpolate(rho, sigma, g, target, seed=args.seed)
    lines = [f"{t.sigma_type}, case {t.case}: m={t.m}, q={t.q}, c={t.c}"]
    lines += [f"{'PASS' if c['ok'] else 'FAIL'} {name} [{c['mode']}]" for name, c in t.checks.items()]
    _emit(args, t.to_json(), "\n".join(lines))
    return OK if t.ok else INCONSISTENT


def cmd_closure(args) -> int:
    gens = []
    if args.gens:
        for lineno, line in enumerate(_read_text(args.gens).splitlines(), 1):
            if line.strip() and not line.lstrip().startswith("#"):
                try:
                    gens.append(read_operation(line))
                except ParseError as exc:
                    raise ParseError(f"line {lineno}: {exc}") from exc
    k = args.k or (gens[0].k if gens else None)
    if k is None:
        raise UsageError("give --k when there are no generators")
    clone = bounded_closure(gens, args.max_arity, args.budget or DEFAULT_CLOSURE_BUDGET, k)
    stats = clone.stats()
    payload = dict(stats)
    if not args.stats:
        payload = {"counts": stats["counts"], "fixpoint": stats["fixpoint"]}
    text = "\n".join(f"arity {n}: {c} operations" for n, c in stats["counts"].items())
    if args.stats:
        text += f"\nfixpoint: {stats['fixpoint']}\nargument tuples tried: {stats['compositions']}"
    _emit(args, payload, text)
    return OK if clone.fixpoint else INVALID


def cmd_enumerate(args) -> int:
    rels = enumerate_relations(args.k, args.arity, args.central, args.dedup_iso)
    plain = [r.rel if hasattr(r, "rel") else r for r in rels]
    _emit(args, {"count": len(plain), "relations": [relation_to_json(r) for r in plain]},
          f"# {len(plain)} relations\n" + "\n\n".join(write_relation(r) for r in plain))
    return OK


def cmd_survey(args) -> int:
    def progress(row):
        if args.verbose:
            print(f"{row.rho_id[:10]} {row.sigma_id[:10]} {row.verdict}"
                  f"{'' if row.consistent else '  INCONSISTENT'}", file=sys.stderr)

    s = run_survey(args.k, args.max_arity, args.separator_arity,
                   args.budget or DEFAULT_NODE_BUDGET, args.seed, args.cert_dir,
                   interp=not args.no_interp, cross_check=args.cross_check, progress=progress,
                   jobs=args.jobs)
    body = s.dumps(args.timings)
    if args.output:
        Path(args.output).write_text(body)
    if args.json:
        print(body)
    else:
        print(f"{'rho':<12} {'sigma':<12} {'h':>2} {'s':>2}  verdict         backing")
        for r in s.rows:
            if r.certificate:
                backing = f"certificate {r.certificate['lemma_tag']}"
            elif r.interpolation:
                backing = f"interpolation {r.interpolation['status']}"
            else:
                backing = "-"
            flag = "" if r.consistent else "  INCONSISTENT: " + "; ".join(r.problems)
            print(f"{r.rho_id[:12]} {r.sigma_id[:12]} {r.rho_arity:>2} {r.sigma_arity:>2}  "
                  f"{r.verdict:<15} {backing}{flag}")
        print(f"# {len(s.rows)} rows, verdicts {s.verdict_counts()}, "
              f"{len(s.inconsistent)} inconsistent")
    return INCONSISTENT if s.inconsistent else OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def flags(top: bool) -> argparse.ArgumentParser:
        # Subcommands accept the global flags too, without clobbering values
        # given before the subcommand name.
        d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
        q = _Parser(add_help=False)
        q.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")
        q.add_argument("--seed", type=int, default=d(0), help="seed for sampled checks")
        q.add_argument("--budget", type=int, default=d(None),
                       help="search budget (separator nodes, or closure argument tuples)")
        return q

    common = flags(False)
    p = _Parser(prog="centralclones", parents=[flags(True)],
                description="Maximality of Pol{rho, sigma} inside Pol rho for central relations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, helptext in (("validate", cmd_validate, "check that a relation is central"),
                               ("center", cmd_center, "print the center"),
                               ("chains", cmd_chains, "print the maximal chains")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("file")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("derive", parents=[common], help="build a derived relation")
    sp.add_argument("kind")
    sp.add_argument("rho")
    sp.add_argument("sigma")
    sp.add_argument("-p", "--param", action="append", metavar="NAME=VALUE")
    sp.add_argument("--index-mode", choices=dv.INDEX_MODES)
    sp.set_defaults(func=cmd_derive)

    sp = sub.add_parser("classify", parents=[common], help="decide the type of a pair")
    sp.add_argument("rho")
    sp.add_argument("sigma")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("certify", parents=[common], help="build a non-maximality certificate")
    sp.add_argument("rho")
    sp.add_argument("sigma")
    sp.add_argument("-o", "--output")
    sp.add_argument("--max-arity", type=int, default=DEFAULT_SEPARATOR_ARITY)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("verify", parents=[common], help="check a certificate file")
    sp.add_argument("certificate")
    sp.add_argument("--rho")
    sp.add_argument("--sigma")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("interpolate", parents=[common], help="rebuild a target from g")
    sp.add_argument("rho")
    sp.add_argument("sigma")
    sp.add_argument("--g", required=True, help="file, operation line, or table like 0,2,1")
    sp.add_argument("--target", required=True)
    sp.set_defaults(func=cmd_interpolate)

    sp = sub.add_parser("closure", parents=[common], help="bounded clone closure")
    sp.add_argument("--gens", help="file with one operation line per generator")
    sp.add_argument("--k", type=int)
    sp.add_argument("--max-arity", type=int, default=2)
    sp.add_argument("--stats", action="store_true")
    sp.set_defaults(func=cmd_closure)

    sp = sub.add_parser("enumerate", parents=[common], help="list relations")
    sp.add_argument("k", type=int)
    sp.add_argument("arity", type=int)
    sp.add_argument("--central", action="store_true")
    sp.add_argument("--dedup-iso", action="store_true")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("survey", parents=[common], help="classify and back every pair")
    sp.add_argument("k", type=int)
    sp.add_argument("--max-arity", type=int, default=3)
    sp.add_argument("--separator-arity", type=int, default=DEFAULT_SEPARATOR_ARITY)
    sp.add_argument("-o", "--output")
    sp.add_argument("--cert-dir")
    sp.add_argument("--no-interp", action="store_true")
    sp.add_argument("--cross-check", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--timings", action="store_true")
    sp.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_survey)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (CentralityError, RelationError, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
