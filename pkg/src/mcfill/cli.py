"""Command line front end.

Every subcommand prints one JSON report.  Exit codes: 0 the property holds or
the operation succeeded, 1 the property is refuted (or a certificate failed to
replay), 2 malformed input or an exceeded resource cap.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import Any, Sequence

from . import dyadic
from .cube import CubeModel, cube_witness
from .errors import InputError, McfillError
from .families import HereditaryFamily, SchreierFamily, is_filling, replay_filling
from .integration import (
    decide_mc_integrability,
    gamma_select,
    indicator_from_json,
    replay_decide_certificate,
    riemann_norm,
)
from .mcfilling import (
    DEFAULT_MAX_POINTS,
    TransversalSystem,
    check_mc_filling,
    check_mc_filling_covers,
    filling_to_mc_pipeline,
    greedy_select,
    replay_mc_certificate,
)
from .serial import load_family, load_model, load_partition, read_json, sha256_file
from .uec import OrthoSystem, uec_partition
from .verdict import Verdict, fmt_q, parse_q


class CertificateMismatch(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would print usage and exit 2 on its own
        raise InputError(message)


def _q(s: str) -> Fraction:
    try:
        return parse_q(s)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"not a rational: {s!r}") from None


def _csv(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()] if s else []


def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in _csv(s)]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {s!r}") from None


def _elements_for(family: HereditaryFamily, raw: list[str]) -> list:
    if isinstance(family, SchreierFamily) and family.order is None:
        try:
            return [int(x) for x in raw]
        except ValueError:
            raise InputError("the schreier family needs natural-number elements") from None
    return raw


def _verdict_from_json(d: dict) -> Verdict:
    r = d.get("result", d)
    return Verdict(r["kind"], r["holds"], Fraction(r["epsilon"]), Fraction(r["value"]),
                   r["certificate"], r.get("caps", {}))


def _replay(fn, *args) -> dict:
    try:
        value = fn(*args)
    except InputError as e:
        raise CertificateMismatch(f"certificate does not replay: {e}") from None
    return {"replayed": True, "value": fmt_q(value)}


# --------------------------------------------------------------------------
# subcommands: each returns (exit code, result payload, caps)


def cmd_check_filling(a):
    family = load_family(a.family)
    if a.verify_certificate:
        v = _verdict_from_json(read_json(a.verify_certificate))
        return 0, _replay(replay_filling, v, family), {}
    ground = _elements_for(family, _csv(a.ground))
    v = is_filling(family, ground, _q(a.epsilon), a.max_h)
    return (0 if v.holds else 1), v.to_json(), v.caps


def cmd_check_mcfilling(a):
    model = load_model(a.model)
    family = load_family(a.family)
    if a.verify_certificate:
        v = _verdict_from_json(read_json(a.verify_certificate))
        return 0, _replay(replay_mc_certificate, v, model, family), {}
    if a.covers:
        v = check_mc_filling_covers(model, family, _q(a.epsilon), max_points=a.max_points,
                                    audit_trials=a.audit_trials, seed=a.seed)
    else:
        v = check_mc_filling(model, family, _q(a.epsilon), max_points=a.max_points,
                             workers=a.threads)
    return (0 if v.holds else 1), v.to_json(), v.caps


def cmd_decide_mc(a):
    model = load_model(a.model)
    fm = indicator_from_json(read_json(a.indicator))
    if a.verify_certificate:
        v = _verdict_from_json(read_json(a.verify_certificate))
        return 0, _replay(replay_decide_certificate, v, model, fm), {}
    v = decide_mc_integrability(model, fm, _q(a.epsilon), max_points=a.max_points,
                                require_null=not a.allow_nonnull)
    return (0 if v.holds else 1), v.to_json(), v.caps


def cmd_riemann(a):
    model = load_model(a.model)
    fm = indicator_from_json(read_json(a.indicator))
    d = read_json(a.tagged)
    tagged = [(frozenset(p["blocks"]), str(p["tag"])) for p in d.get("tagged", [])]
    sel = riemann_norm(model, fm, tagged)
    return 0, {"norm": fmt_q(sel.value), "tags": sorted(sel.member)}, {}


def _read_lines(path) -> list[str]:
    try:
        with open(path) as fh:
            return [ln.strip() for ln in fh if ln.strip()]
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None


def cmd_dyadic_extract(a):
    leaves = _read_lines(a.leaves)
    if len(leaves) > a.max_leaves:
        raise InputError(f"{len(leaves)} leaves exceed --max-leaves {a.max_leaves}")
    D = dyadic.dyadicD_extract(leaves)
    ok = dyadic.extraction_bound_holds(len(D), len(set(leaves)))
    return 0, {"member": sorted(D), "size": len(D), "bound_holds": ok,
               "v_set": sorted(dyadic.v_set(D), key=lambda s: (len(s), s))}, \
        {"max_leaves": a.max_leaves}


def cmd_schreier_extract(a):
    return 0, {"member": dyadic.schreier_extract(_ints(a.elements))}, {}


def cmd_chain_extract(a):
    nodes = ["" if x in ("root", "-") else x for x in _csv(a.nodes)]
    if a.nodes.startswith(","):
        nodes.append("")
    chain = dyadic.chain_extract(nodes)
    return 0, {"chain": chain, "length": len(chain)}, {}


def cmd_pipeline(a):
    model = load_model(a.model)
    family = load_family(a.family)
    res = filling_to_mc_pipeline(model, _csv(a.A), family, _q(a.epsilon), _q(a.eta1),
                                 load_partition(a.partition), strict_alpha=a.strict_alpha,
                                 verify_filling_max_h=a.verify_filling_max_h)
    return 0, res.to_json(), {}


def cmd_greedy(a):
    model = load_model(a.model)
    d = read_json(a.transversals)
    if "phi" in d:
        phi = {str(k): v for k, v in d["phi"].items()}
    else:
        phi = {str(x): label for label, pts in d["classes"].items() for x in pts}
    res = greedy_select(model, TransversalSystem(phi), load_family(a.class_family),
                        load_partition(a.partition), _q(a.epsilon))
    return 0, res.to_json(), {}


def cmd_gamma(a):
    model = load_model(a.model)
    d = read_json(a.classes)
    classes = d.get("classes", d.get("functionals"))
    if not isinstance(classes, dict):
        raise InputError("classes file needs a 'classes' object")
    res = gamma_select(model, classes, load_partition(a.partition), _q(a.epsilon))
    return 0, res.to_json(), {}


def cmd_cube(a):
    cube = CubeModel.from_json(read_json(a.cube))
    Z = {}
    for item in _csv(a.fix):
        g, _, bit = item.partition("=")
        try:
            Z[int(g)] = bit
        except ValueError:
            raise InputError(f"bad coordinate assignment {item!r}") from None
    x = cube_witness(cube, Z, a.beta)
    return 0, {"point": x}, {}


def cmd_uec(a):
    model = load_model(a.model)
    d = read_json(a.ortho)
    if "vectors" in d:
        ortho = OrthoSystem.build([[parse_q(c) for c in v] for v in d["vectors"]], d["grouping"])
    else:
        ortho = OrthoSystem.standard(int(d["dimension"]), d["grouping"])
    injection = {str(k): int(v) for k, v in d["injection"].items()}
    res = uec_partition(model, ortho, injection, _q(a.epsilon))
    payload = {
        "parts": [{"n": n, "m": m, "points": sorted(P)} for n, m, P in res.parts],
        "covers": [{"n": n, "m": m, "blocks": sorted(c)} for (n, m), c in sorted(res.covers.items())],
        "report": res.report,
    }
    return (0 if res.report["certified"] else 1), payload, {}


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mcfill", description=__doc__.splitlines()[0])
    p.add_argument("--report", help="also write the report to this path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(fn=fn)
        sp.add_argument("--report", dest="report_sub", help=argparse.SUPPRESS)
        return sp

    sp = add("check-filling", cmd_check_filling)
    sp.add_argument("--family", required=True)
    sp.add_argument("--ground", default="")
    sp.add_argument("--epsilon", default="1/2")
    sp.add_argument("--max-h", "--max-subset", dest="max_h", type=int, default=8)
    sp.add_argument("--verify-certificate")

    sp = add("check-mcfilling", cmd_check_mcfilling)
    sp.add_argument("--model", required=True)
    sp.add_argument("--family", required=True)
    sp.add_argument("--epsilon", default="1/2")
    sp.add_argument("--covers", action="store_true")
    sp.add_argument("--audit-trials", type=int, default=0)
    sp.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS)
    sp.add_argument("--verify-certificate")

    sp = add("decide-mc", cmd_decide_mc)
    sp.add_argument("--model", required=True)
    sp.add_argument("--indicator", required=True)
    sp.add_argument("--epsilon", default="1/2")
    sp.add_argument("--allow-nonnull", action="store_true")
    sp.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS)
    sp.add_argument("--verify-certificate")

    sp = add("riemann", cmd_riemann)
    sp.add_argument("--model", required=True)
    sp.add_argument("--indicator", required=True)
    sp.add_argument("--tagged", required=True)

    sp = add("dyadic-extract", cmd_dyadic_extract)
    sp.add_argument("--leaves", required=True, help="file with one bit string per line")
    sp.add_argument("--max-leaves", type=int, default=4096)

    sp = add("schreier-extract", cmd_schreier_extract)
    sp.add_argument("elements", help="comma-separated naturals")

    sp = add("chain-extract", cmd_chain_extract)
    sp.add_argument("nodes", help="comma-separated bit strings; 'root' for the empty node")

    sp = add("pipeline-filling2mc", cmd_pipeline)
    sp.add_argument("--model", required=True)
    sp.add_argument("--family", required=True)
    sp.add_argument("--A", required=True, help="comma-separated point ids")
    sp.add_argument("--partition", required=True)
    sp.add_argument("--epsilon", required=True)
    sp.add_argument("--eta1", default="1/10")
    sp.add_argument("--strict-alpha", action="store_true")
    sp.add_argument("--verify-filling-max-h", type=int)

    sp = add("greedy-select", cmd_greedy)
    sp.add_argument("--model", required=True)
    sp.add_argument("--transversals", required=True)
    sp.add_argument("--class-family", required=True)
    sp.add_argument("--partition", required=True)
    sp.add_argument("--epsilon", default="1/2")

    sp = add("gamma-select", cmd_gamma)
    sp.add_argument("--model", required=True)
    sp.add_argument("--classes", required=True)
    sp.add_argument("--partition", required=True)
    sp.add_argument("--epsilon", default="1/2")

    sp = add("cube-witness", cmd_cube)
    sp.add_argument("--cube", required=True)
    sp.add_argument("--fix", default="", help="coordinate assignments like '1=1,4=0'")
    sp.add_argument("--beta", type=int, required=True)

    sp = add("uec-partition", cmd_uec)
    sp.add_argument("--model", required=True)
    sp.add_argument("--ortho", required=True)
    sp.add_argument("--epsilon", default="1/2")
    return p


_FILE_ARGS = ("model", "family", "indicator", "tagged", "leaves", "partition", "transversals",
              "class_family", "classes", "cube", "ortho", "verify_certificate")


def run(argv: Sequence[str] | None = None, out=None) -> tuple[int, dict]:
    """Run one command; returns the exit code and the report (also printed)."""
    out = out or sys.stdout
    start = time.perf_counter()
    report: dict[str, Any] = {"command": None}
    code = 2
    report_path = None
    try:
        args = build_parser().parse_args(argv)
        report_path = getattr(args, "report_sub", None) or args.report
        if args.command is None:
            raise InputError("missing subcommand")
        report["command"] = args.command
        report["inputs"] = {k: sha256_file(getattr(args, k)) for k in _FILE_ARGS
                            if getattr(args, k, None)}
        code, payload, caps = args.fn(args)
        report.update(result=payload, caps=caps, seed=args.seed)
    except CertificateMismatch as e:
        code = 1
        report["error"] = {"type": "CertificateMismatch", "message": str(e)}
    except McfillError as e:
        code = 2
        report["error"] = {"type": type(e).__name__, "message": str(e)}
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        # structurally malformed input files
        code = 2
        report["error"] = {"type": "InputError", "message": f"malformed input: {e!r}"}
    report["exit_code"] = code
    report["wall_time"] = round(time.perf_counter() - start, 6)
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    print(text, file=out)
    if report_path:
        with open(report_path, "w") as fh:
            fh.write(text + "\n")
    return code, report


def main(argv: Sequence[str] | None = None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
