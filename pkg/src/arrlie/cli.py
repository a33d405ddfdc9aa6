"""Command line interface.

Subcommands operate on arrangement or presentation JSON files and print a
single JSON document to stdout (sorted keys, compact separators), so runs
are byte-for-byte reproducible.  Timing goes to stderr.  Exit codes: 0 for
success, 1 when a computed verdict is negative, 2 for bad inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

from . import decomp, rings
from .arrangement import ArrangementError, arrangement_from_json, \
    arrangement_to_json, betti, catalog_arrangement, mobius_l2
from .freelie import DEFAULT_GUARD, SizeGuardError, witt_rank
from .holonomy import falk_invariant, holonomy_graded, presentation_from_json
from .nilpotent import Class2Group, h2_rank_check, k_invariant_matrix

_SAFE = 2 ** 53


class InputError(ValueError):
    """Bad file, flag, or JSON payload; maps to exit code 2."""


def _jsonable(x):
    """Make a payload JSON-safe: big ints and rationals become strings."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return x if abs(x) < _SAFE else str(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return _jsonable(x.numerator)
        return "%d/%d" % (x.numerator, x.denominator)
    if isinstance(x, str):
        return x
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    raise TypeError("cannot serialize %r" % (x,))


def _dumps(payload):
    return json.dumps(_jsonable(payload), sort_keys=True,
                      separators=(",", ":")) + "\n"


def _print_table(payload, out):
    """Aligned key/value text for --table; nested values stay as JSON."""
    if isinstance(payload, dict):
        keys = sorted(payload)
        width = max(len(str(k)) for k in keys) if keys else 0
        for k in keys:
            v = payload[k]
            if isinstance(v, (dict, list, tuple)):
                v = json.dumps(_jsonable(v), sort_keys=True)
            out.write("%-*s  %s\n" % (width, k, v))
    elif isinstance(payload, (list, tuple)):
        for i, v in enumerate(payload):
            if isinstance(v, (dict, list, tuple)):
                v = json.dumps(_jsonable(v), sort_keys=True)
            out.write("%d  %s\n" % (i + 1, v))
    else:
        out.write("%s\n" % (payload,))


def _read_json(path):
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise InputError("%s: %s" % (path, e.strerror or e)) from None
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as e:
        raise InputError("%s: invalid JSON (%s)" % (path, e)) from None
    return obj, hashlib.sha256(raw).hexdigest()


def _load_arrangement(path, digests):
    obj, digest = _read_json(path)
    digests.append({"path": path, "sha256": digest})
    try:
        return arrangement_from_json(obj)
    except ArrangementError as e:
        raise InputError("%s: %s" % (path, e)) from None


def _load_source(path, digests):
    """Arrangement or presentation, keyed on the JSON shape."""
    obj, digest = _read_json(path)
    digests.append({"path": path, "sha256": digest})
    try:
        if isinstance(obj, dict) and "generators" in obj:
            return presentation_from_json(obj)
        return arrangement_from_json(obj)
    except (ArrangementError, ValueError) as e:
        raise InputError("%s: %s" % (path, e)) from None


def _ring(text):
    try:
        return rings.parse(text)
    except ValueError as e:
        raise InputError(str(e)) from None


def _parse_iso(text):
    """Inline JSON, or a path to a JSON file, giving the atom map."""
    try:
        return json.loads(text)
    except ValueError:
        pass
    if os.path.exists(text):
        obj, _ = _read_json(text)
        return obj
    raise InputError("--iso %r is neither inline JSON nor a readable file"
                     % text)


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (payload, exit_code)

def _cmd_lattice(args, digests):
    arr = _load_arrangement(args.file, digests)
    b = betti(arr)
    payload = {"atoms": list(arr.atoms),
               "pencils": [list(p) for p in arr.pencils],
               "mu": mobius_l2(arr), "b1": b.b1, "b2": b.b2}
    return payload, 0


def _cmd_betti(args, digests):
    arr = _load_arrangement(args.file, digests)
    b = betti(arr)
    return {"b1": b.b1, "b2": b.b2}, 0


def _cmd_witt(args, digests):
    if args.alphabet < 1 or args.max_degree < 1:
        raise InputError("--alphabet and --max-degree must be positive")
    return [witt_rank(args.alphabet, n)
            for n in range(1, args.max_degree + 1)], 0


def _cmd_holonomy(args, digests):
    src = _load_source(args.file, digests)
    ring = _ring(args.ring)
    payload = {}
    for d in range(1, args.max_degree + 1):
        g = holonomy_graded(src, d, ring, guard=args.guard,
                            override=args.override)
        payload[str(d)] = {"rank": g.rank, "torsion": list(g.torsion)}
    return payload, 0


def _cmd_falk(args, digests):
    arr = _load_arrangement(args.file, digests)
    return falk_invariant(arr), 0


def _cmd_nq2(args, digests):
    src = _load_source(args.file, digests)
    grp = Class2Group(src)
    try:
        el = grp.evaluate(args.word)
    except ValueError as e:
        raise InputError("bad --word: %s" % e) from None
    return {"exps": list(el.exps), "tail": list(el.tail),
            "identity": grp.is_identity(el),
            "names": list(grp.names)}, 0


def _cmd_kinv(args, digests):
    src = _load_source(args.file, digests)
    return k_invariant_matrix(src), 0


def _cmd_h2check(args, digests):
    src = _load_source(args.file, digests)
    rep = h2_rank_check(src, n=args.degree, ring=_ring(args.ring),
                        guard=args.guard, override=args.override)
    return rep, 0 if rep["pass"] else 1


def _cmd_decomp(args, digests):
    arr = _load_arrangement(args.file, digests)
    rep = decomp.is_decomposable(arr, guard=args.guard,
                                 override=args.override)
    return rep, 0 if rep["decomposable"] else 1


def _cmd_lcs(args, digests):
    arr = _load_arrangement(args.file, digests)
    return decomp.lcs_ranks_decomposable(arr, args.max_degree,
                                         guard=args.guard,
                                         override=args.override), 0


def _cmd_verify_iso(args, digests):
    arr_a = _load_arrangement(args.file_a, digests)
    arr_b = _load_arrangement(args.file_b, digests)
    iso = _parse_iso(args.iso)
    corrections = None
    if args.corrections:
        obj = _parse_iso(args.corrections)
        corrections = {}
        for fi, table in obj.items():
            corr = {}
            for key, vec in table.items():
                atom, deg = key.rsplit(".", 1)
                corr[(atom, int(deg))] = tuple(int(v) for v in vec)
            corrections[int(fi)] = corr
    rep = decomp.verify_decomposable_iso(
        arr_a, arr_b, iso, n=args.degree, ring=_ring(args.ring),
        corrections=corrections, perturb=args.perturb,
        guard=args.guard, override=args.override)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        bundle = {
            "verdict.json": {k: rep[k] for k in
                             ("pass", "ring", "degree", "check", "perturb",
                              "candidates")},
            "matrices.json": {"matrices": rep["matrices"],
                              "basis": rep["basis"]},
            "report.json": rep,
        }
        for name, payload in sorted(bundle.items()):
            with open(os.path.join(args.out, name), "w") as f:
                f.write(_dumps(payload))
    verdict = {k: rep[k] for k in ("pass", "ring", "degree", "check",
                                   "candidates")}
    return verdict, 0 if rep["pass"] else 1


def _cmd_catalog(args, digests):
    try:
        arr = catalog_arrangement(args.family, args.param)
    except ArrangementError as e:
        raise InputError(str(e)) from None
    payload = arrangement_to_json(arr)
    if args.out:
        with open(args.out, "w") as f:
            f.write(_dumps(payload))
    return payload, 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch

def _build_parser():
    p = argparse.ArgumentParser(
        prog="arrlie",
        description="Exact nilpotent and Lie-algebraic invariants of "
                    "hyperplane-arrangement groups.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, ring=False, degree=None, maxdeg=None):
        sp.add_argument("--json", action="store_true", default=False,
                        help="JSON output (the default)")
        sp.add_argument("--table", action="store_true",
                        help="aligned text output instead of JSON")
        sp.add_argument("--report", action="store_true",
                        help="wrap the payload with command echo and "
                             "input digests")
        sp.add_argument("--guard", type=int, default=DEFAULT_GUARD,
                        help="size guard for basis enumeration")
        sp.add_argument("--override", action="store_true",
                        help="lift the per-degree alphabet limits")
        if ring:
            sp.add_argument("--ring", default="z",
                            help="coefficients: z, q, or fp:<p>")
        if degree is not None:
            sp.add_argument("--degree", type=int, default=degree)
        if maxdeg is not None:
            sp.add_argument("--max-degree", type=int, default=maxdeg,
                            dest="max_degree")

    sp = sub.add_parser("lattice", help="atoms, pencils, Mobius and Betti data")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(func=_cmd_lattice)

    sp = sub.add_parser("betti", help="b1 and b2 of the complement")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(func=_cmd_betti)

    sp = sub.add_parser("witt", help="free Lie algebra rank table")
    sp.add_argument("--alphabet", type=int, required=True)
    common(sp, maxdeg=5)
    sp.set_defaults(func=_cmd_witt)

    sp = sub.add_parser("holonomy", help="graded pieces of the holonomy "
                                         "Lie algebra")
    sp.add_argument("file")
    common(sp, ring=True, maxdeg=3)
    sp.set_defaults(func=_cmd_holonomy)

    sp = sub.add_parser("falk", help="rank of the degree 3 piece over Q")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(func=_cmd_falk)

    sp = sub.add_parser("nq2", help="evaluate a word in the class-2 quotient")
    sp.add_argument("file")
    sp.add_argument("--word", required=True,
                    help="dotted word like H1.H2.H1^-1.H2^-1, or letters "
                         "with uppercase inverses")
    common(sp)
    sp.set_defaults(func=_cmd_nq2)

    sp = sub.add_parser("kinv", help="k-invariant matrix of the class-2 "
                                     "extension")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(func=_cmd_kinv)

    sp = sub.add_parser("h2check", help="H2 rank comparison for the degree-n "
                                        "quotient")
    sp.add_argument("file")
    common(sp, ring=True, degree=3)
    sp.set_defaults(func=_cmd_h2check)

    sp = sub.add_parser("decomp", help="decomposability verdict")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(func=_cmd_decomp)

    sp = sub.add_parser("lcs", help="LCS ranks, decomposable product formula")
    sp.add_argument("file")
    common(sp, maxdeg=5)
    sp.set_defaults(func=_cmd_lcs)

    sp = sub.add_parser("verify-iso", help="diagram certificate for a "
                                           "lattice isomorphism")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--iso", required=True,
                    help="atom map as inline JSON or a path to a JSON file")
    sp.add_argument("--corrections",
                    help="B-side local corrections, inline JSON or a path: "
                         "{flat: {\"atom.degree\": [coords...]}}")
    sp.add_argument("--perturb", choices=["sigma", "lift"],
                    help="negative control: break one leg on purpose")
    sp.add_argument("--out", help="directory for the audit bundle")
    common(sp, ring=True, degree=4)
    sp.set_defaults(func=_cmd_verify_iso)

    sp = sub.add_parser("catalog", help="emit a catalog arrangement as JSON")
    sp.add_argument("family", help="braid, pencil, generic, or near_pencil")
    sp.add_argument("param", type=int)
    sp.add_argument("--out", help="write to this file instead of stdout")
    common(sp)
    sp.set_defaults(func=_cmd_catalog)

    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    digests = []
    t0 = time.time()
    try:
        payload, code = args.func(args, digests)
    except InputError as e:
        sys.stderr.write("arrlie: error: %s\n" % e)
        return 2
    except (ArrangementError, SizeGuardError) as e:
        sys.stderr.write("arrlie: error: %s\n" % e)
        return 2
    except ValueError as e:
        sys.stderr.write("arrlie: error: %s\n" % e)
        return 2
    finally:
        sys.stderr.write("arrlie: %s in %.3fs\n"
                         % (getattr(args, "command", "?"),
                            time.time() - t0))
    if args.report:
        payload = {"command": argv, "inputs": digests, "report": payload}
    if args.table:
        _print_table(_jsonable(payload), sys.stdout)
    else:
        sys.stdout.write(_dumps(payload))
    return code


if __name__ == "__main__":
    sys.exit(main())
