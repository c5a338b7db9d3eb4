"""Command-line front end.

Subcommands::

    analyze      full index report (JSON)
    curves       eigencurves on a grid (CSV)
    verify       residual summary; exit status 1 if any residual is nonzero
    hamiltonian  unstable-eigenvalue counts for a J, L problem (JSON)
    random       seeded random problem (JSON)

Exit status: 0 success, 1 residual failure, 2 usage, 3 invalid input,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import generators
from .branches import curves_csv, track_branches
from .hamiltonian import jl_spectrum, theorem1_check, theorem2_bound
from .index_counts import analyze, compute_K_infinity
from .pencil_model import (GridSpec, HamiltonianProblem, InvalidProblemError,
                           InvariantBreach, NumericalFailure, PolyPencil,
                           problem_from_dict, problem_to_dict)

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


# -- canonical JSON -------------------------------------------------------

def _fmt_float(x):
    if math.isnan(x) or math.isinf(x):
        return "null"
    if x == 0:
        return "0.0"
    s = f"{x:.17g}"
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def canonical_json(obj, indent=None):
    """JSON text with sorted keys and floats at 17 significant digits."""
    pad = "" if indent is None else "\n"
    sep = "," if indent is None else ","

    def enc(o, level):
        ind = "" if indent is None else " " * (indent * (level + 1))
        end = "" if indent is None else " " * (indent * level)
        colon = ":" if indent is None else ": "
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if o is None:
            return "null"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{ind}{json.dumps(str(k))}{colon}{enc(o[k], level + 1)}"
                     for k in sorted(o, key=str)]
            return "{" + pad + (sep + pad).join(items) + pad + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            if len(o) == 0:
                return "[]"
            items = [ind + enc(v, level + 1) for v in o]
            return "[" + pad + (sep + pad).join(items) + pad + end + "]"
        raise TypeError(f"cannot encode {type(o).__name__}")

    return enc(obj, 0) + "\n"


def _write(text, path):
    """Write ``text`` to ``path`` atomically, or to stdout when ``path`` is None."""
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidProblemError(f"cannot read {path}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidProblemError(f"{path}: not valid JSON ({exc})") from exc
    # a report embeds the problem it was computed from
    if isinstance(d, dict) and "type" not in d and isinstance(d.get("pencil"), dict):
        d = d["pencil"]
    return problem_from_dict(d)


def _require_pencil(obj):
    if not isinstance(obj, PolyPencil):
        raise InvalidProblemError("this subcommand needs a pencil problem")
    return obj


def _grid(args, P):
    if args.lambda_min is None and args.lambda_max is None and args.samples is None:
        return None
    K = compute_K_infinity(P)
    lo = -K if args.lambda_min is None else args.lambda_min
    hi = K if args.lambda_max is None else args.lambda_max
    return GridSpec(lo, hi, args.samples or 401)


def _local_pairs(P, count, seed):
    K = compute_K_infinity(P)
    rng = np.random.default_rng(seed)
    pts = np.sort(rng.uniform(-1.2 * K, 1.2 * K, (count, 2)), axis=1)
    return [(float(a), float(b)) for a, b in pts if a < b]


# -- subcommands ----------------------------------------------------------

def cmd_analyze(args):
    P = _require_pencil(_load(args.input))
    rep = analyze(P, _grid(args, P), _local_pairs(P, args.local_pairs, args.seed))
    _write(canonical_json(rep.to_dict(), args.json_indent), args.output)
    return EXIT_OK


def cmd_verify(args):
    P = _require_pencil(_load(args.input))
    rep = analyze(P, _grid(args, P), _local_pairs(P, args.local_pairs, args.seed))
    out = {
        "eq1_residual": rep.eq1_residual,
        "eq2_residual": rep.eq2_residual,
        "kernel_residuals": [list(r) for r in rep.kernel_residuals],
        "local_residuals": [r for _, _, r in rep.local_checks],
        "oracle_match": None if rep.oracle is None else rep.oracle["match"],
        "ok": rep.ok(),
    }
    if rep.quadratic is not None:
        out["quadratic"] = {k: v for k, v in rep.quadratic.items() if k.startswith("residual")}
    _write(canonical_json(out, args.json_indent), args.output)
    return EXIT_OK if rep.ok() else EXIT_RESIDUAL


def cmd_curves(args):
    P = _require_pencil(_load(args.input))
    grid = _grid(args, P)
    if grid is None:
        K = compute_K_infinity(P)
        grid = GridSpec(-K, K, 401)
    _write(curves_csv(track_branches(P, grid)), args.output)
    return EXIT_OK


def cmd_hamiltonian(args):
    H = _load(args.input)
    if not isinstance(H, HamiltonianProblem):
        raise InvalidProblemError("hamiltonian subcommand needs a hamiltonian problem")
    spec = jl_spectrum(H)
    t1 = theorem1_check(H, spec)
    out = {
        "problem": problem_to_dict(H),
        "condition_J": H.condition_J,
        "k_r": spec.k_r,
        "k_c": spec.k_c,
        "n_uns": spec.n_uns,
        "z": spec.z,
        "k_i_minus": spec.k_i_minus,
        "imaginary": [{"lambda": lam, "alg_mult": m, "kappa": [kp, km]}
                      for lam, m, kp, km in spec.imaginary],
        "theorem1": {"residual": t1.residual, "n_L": t1.n_L, "n_D": t1.n_D,
                     "skipped": t1.skipped},
        "kernel_residuals": [list(r) for r in spec.kernel_residuals],
        "notes": list(spec.notes),
    }
    if H.canonical_blocks is not None:
        t2 = theorem2_bound(H, spec)
        out["theorem2"] = {"lower_bound": t2.lower_bound, "k_r": t2.k_r,
                           "holds": t2.holds, "skipped": t2.skipped}
    _write(canonical_json(out, args.json_indent), args.output)
    failed = (t1.residual not in (None, 0)
              or any(any(r) for r in spec.kernel_residuals)
              or out.get("theorem2", {}).get("holds") is False)
    return EXIT_RESIDUAL if failed else EXIT_OK


def _inertia(text):
    parts = [int(x) for x in text.split(",")]
    if len(parts) not in (2, 3) or min(parts) < 0:
        raise argparse.ArgumentTypeError("inertia must be POS,NEG or POS,NEG,ZERO")
    return tuple(parts) + (0,) * (3 - len(parts))


def cmd_random(args):
    rng = np.random.default_rng(args.seed)
    if args.kind == "pencil":
        lead = None
        if args.inertia is not None:
            pos, neg, zero = args.inertia
            if zero or pos + neg != args.n:
                raise InvalidProblemError("leading inertia must be POS,NEG with POS+NEG = n")
            lead = (pos, neg)
        obj = generators.random_pencil(args.n, args.p, args.q, rng, lead_inertia=lead)
    elif args.kind == "quadratic":
        if args.inertia is not None and sum(args.inertia) != args.n:
            raise InvalidProblemError("inertia of M must add up to n")
        obj = generators.random_quadratic(args.n, rng, M_inertia=args.inertia)
    else:
        for tri in (args.inertia, args.inertia_minus):
            if tri is not None and sum(tri) != args.n:
                raise InvalidProblemError("block inertia must add up to n")
        obj = generators.random_canonical(args.n, rng=rng, inertia_plus=args.inertia,
                                          inertia_minus=args.inertia_minus)
    _write(canonical_json(problem_to_dict(obj), args.json_indent), args.output)
    return EXIT_OK


# -- parser ---------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="krein-pencil", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True, grid=True):
        if needs_input:
            p.add_argument("--input", required=True, help="problem or report JSON")
        p.add_argument("--output", help="output file (default: stdout)")
        p.add_argument("--json-indent", type=int, default=None)
        if grid:
            p.add_argument("--lambda-min", type=float)
            p.add_argument("--lambda-max", type=float)
            p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int, default=0)

    for name, fn, hlp in (("analyze", cmd_analyze, "full index report"),
                          ("verify", cmd_verify, "residual summary")):
        p = sub.add_parser(name, help=hlp)
        common(p)
        p.add_argument("--local-pairs", type=int, default=20,
                       help="random intervals for the local identity")
        p.set_defaults(func=fn)
    p = sub.add_parser("curves", help="eigencurves as CSV")
    common(p)
    p.set_defaults(func=cmd_curves)
    p = sub.add_parser("hamiltonian", help="counts for a J, L problem")
    common(p, grid=False)
    p.set_defaults(func=cmd_hamiltonian)
    p = sub.add_parser("random", help="seeded random problem")
    common(p, needs_input=False, grid=False)
    p.add_argument("--kind", choices=("pencil", "quadratic", "canonical"), default="pencil")
    p.add_argument("--n", type=int, default=3, help="matrix size (block size for canonical)")
    p.add_argument("--p", type=int, default=2, help="degree of the matrix part")
    p.add_argument("--q", type=int, default=1, help="degree of the scalar part (-1: none)")
    p.add_argument("--inertia", type=_inertia,
                   help="POS,NEG[,ZERO] for L_p, M or L_+ depending on --kind")
    p.add_argument("--inertia-minus", type=_inertia, help="POS,NEG[,ZERO] for L_- (canonical)")
    p.set_defaults(func=cmd_random)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", 1) < 1 or getattr(args, "p", 1) < 0 or getattr(args, "q", 0) < -1:
        parser.error("need n >= 1, p >= 0, q >= -1")
    if getattr(args, "samples", None) is not None and args.samples < 3:
        parser.error("--samples must be at least 3")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except InvalidProblemError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalFailure, InvariantBreach, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
