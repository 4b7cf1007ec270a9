"""Command-line front end.

Every invocation prints one JSON document to stdout and appends an
experiment record (JSON-lines) to the log.  Exit codes: 0 success, 1 usage
error, 2 mathematical assertion failed (a verified bound was violated).

Environment: MAHLER_LAB_SEED supplies the default seed, MAHLER_LAB_LOG the
default log path (fallback ./experiments.jsonl).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import bodies as B
from . import capacity as C
from . import crofton as CR
from . import embedding as E
from . import symplectic as SY
from . import volume as V
from .verify import run_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSERTION = 2


def body_content_hash(body_or_desc) -> str:
    """Git-style blob hash of the canonical body description."""
    canon = B.canonical_description(body_or_desc).encode()
    return hashlib.sha1(b"blob %d\0" % len(canon) + canon).hexdigest()


def _load_body_arg(text: str) -> B.ConvexBody:
    raw = text.strip()
    if not raw.startswith("{"):
        raw = Path(text).read_text()
    return B.parse_body(raw)


def _parse_normal_arg(text: str):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if any("." in p or "e" in p.lower() for p in parts):
        return np.array([float(p) for p in parts])
    return tuple(Fraction(p) for p in parts)


def _default_seed() -> int:
    return int(os.environ.get("MAHLER_LAB_SEED", "0"))


def _log_path(args) -> Path:
    if args.log:
        return Path(args.log)
    return Path(os.environ.get("MAHLER_LAB_LOG", "experiments.jsonl"))


def _emit(args, command: str, result: dict, seed, body=None, parameters=None,
          exit_code: int = EXIT_OK) -> int:
    record = {
        "version": __version__,
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "seed": seed,
        "parameters": parameters or {},
        "result": result,
    }
    if body is not None:
        record["body_hash"] = body_content_hash(body)
        record["body"] = body.describe()
    print(json.dumps(result, indent=2, default=_json_default))
    if not args.no_log:
        path = _log_path(args)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a") as fh:
            fh.write(json.dumps(record, default=_json_default) + "\n")
    return exit_code


def _json_default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_volume(args) -> int:
    body = _load_body_arg(args.body)
    seed = args.seed if args.seed is not None else _default_seed()
    if args.method == "exact":
        res = V.exact_polytope_volume(body)
    elif args.method == "mc":
        res = V.mc_volume(body, args.samples, seed)
    else:
        res = V.volume_of(body, samples=args.samples, seed=seed)
    return _emit(args, "volume", res.as_dict(), seed, body,
                 {"samples": args.samples, "method": args.method})


def cmd_mahler(args) -> int:
    body = _load_body_arg(args.body)
    seed = args.seed if args.seed is not None else _default_seed()
    rep = V.mahler_product(body, samples=args.samples, seed=seed)
    return _emit(args, "mahler", rep.as_dict(), seed, body,
                 {"samples": args.samples})


def cmd_section(args) -> int:
    body = _load_body_arg(args.body)
    u = _parse_normal_arg(args.normal)
    sec = B.hyperplane_section(body, u)
    result = {"body": sec.describe()}
    if isinstance(sec, (B.PolytopeBody, B.DiagonalImageBody)):
        result["volume"] = V.exact_polytope_volume(sec).as_dict()
    return _emit(args, "section", result, None, body, {"normal": args.normal})


def cmd_project(args) -> int:
    body = _load_body_arg(args.body)
    u = _parse_normal_arg(args.normal)
    proj = B.hyperplane_projection(body, u)
    result = {"body": proj.describe()}
    if isinstance(proj, (B.PolytopeBody, B.DiagonalImageBody)):
        result["volume"] = V.exact_polytope_volume(proj).as_dict()
    return _emit(args, "project", result, None, body, {"normal": args.normal})


def cmd_reduce(args) -> int:
    body = _load_body_arg(args.body)
    if not isinstance(body, B.LagrangianProductBody):
        print("error: reduce needs a Lagrangian product body", file=sys.stderr)
        return EXIT_USAGE
    normals = [_parse_normal_arg(t) for t in args.normal]
    reduced = SY.iterate_reduction(body, normals)
    result = {"body": reduced.describe(), "dim": reduced.dim}
    if isinstance(reduced.base, (B.PolytopeBody, B.DiagonalImageBody)):
        vol_prod = V.volume_of(reduced)
        result["volume_product"] = vol_prod.as_dict()
    return _emit(args, "reduce", result, None, body,
                 {"normals": args.normal})


def cmd_capacity(args) -> int:
    body = _load_body_arg(args.body)
    seed = args.seed if args.seed is not None else _default_seed()
    fn = C.symmetric_capacity_estimate if args.symmetric else C.capacity_estimate
    est = fn(body, m=args.points, starts=args.starts, seed=seed,
             max_iters=args.max_iters)
    return _emit(args, "capacity", est.as_dict(include_loop=not args.no_loop),
                 seed, body,
                 {"points": args.points, "starts": args.starts,
                  "symmetric": args.symmetric})


def cmd_crofton(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.epsilon == 0.0:
        slc = CR.linear_slice(2)
    else:
        slc = CR.perturbed_slice(2, args.epsilon, args.g)
    rep = CR.crofton_check(slc, R=args.radius, samples=args.samples, seed=seed)
    tol = 1e-6 + rep["rhs_ci"] if args.epsilon == 0.0 else 3.0 * rep["rhs_ci"] + 1e-9
    rep["agrees"] = abs(rep["lhs"] - rep["rhs"]) <= tol
    code = EXIT_OK if rep["agrees"] else EXIT_ASSERTION
    return _emit(args, "crofton", rep, seed, None,
                 {"epsilon": args.epsilon, "g": args.g,
                  "samples": args.samples, "radius": args.radius}, code)


def cmd_embed(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    profile = E.load_or_build_profile(args.alpha, args.nexp,
                                      cache_dir=args.cache)
    rep = E.product_embedding_check(
        args.alpha, args.copies, args.nexp, samples=args.samples, seed=seed,
        profile=profile, r_factor=args.radius_factor)
    ok = rep["contained_fraction"] == 1.0 or args.radius_factor > 1.0
    code = EXIT_OK if ok else EXIT_ASSERTION
    return _emit(args, "embed", rep, seed, None,
                 {"alpha": args.alpha, "nexp": args.nexp,
                  "copies": args.copies, "samples": args.samples,
                  "radius_factor": args.radius_factor}, code)


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    params: dict = {"seed": seed}
    if args.trials is not None:
        params["trials"] = args.trials
    if args.samples is not None:
        params["samples"] = args.samples
    if args.n is not None:
        if args.suite in ("sections-lp", "sections-hanner", "reduction-bound"):
            params["n_values"] = [args.n]
        elif args.suite == "polytopes-2n2":
            params["n"] = args.n
    rep = run_suite(args.suite, **params)
    code = EXIT_OK if rep["passed"] else EXIT_ASSERTION
    return _emit(args, "verify", rep, seed, None,
                 {"suite": args.suite, **params}, code)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mahlerlab",
        description="volume products, symplectic reductions, capacity and "
                    "embedding experiments for symmetric convex bodies",
    )
    ap.add_argument("--log", default=None, help="experiment log path (JSONL)")
    ap.add_argument("--no-log", action="store_true", help="skip log append")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_body(p):
        p.add_argument("--body", required=True,
                       help="body description: inline JSON or a file path")

    p = sub.add_parser("volume", help="volume of a body")
    add_body(p)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--method", choices=["auto", "exact", "mc"], default="auto")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("mahler", help="volume product vs 4^n/n!")
    add_body(p)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_mahler)

    p = sub.add_parser("section", help="central hyperplane section")
    add_body(p)
    p.add_argument("--normal", required=True, help="comma-separated rationals")
    p.set_defaults(func=cmd_section)

    p = sub.add_parser("project", help="projection to a hyperplane")
    add_body(p)
    p.add_argument("--normal", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("reduce", help="linear symplectic reduction of K x K°")
    add_body(p)
    p.add_argument("--normal", action="append", required=True,
                   help="repeatable: one reduction step per normal")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("capacity", help="capacity estimate via loop descent")
    add_body(p)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--max-iters", type=int, default=50_000)
    p.add_argument("--no-loop", action="store_true",
                   help="omit the argmin loop vertices from the output")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("crofton", help="circle-average identity at N=2")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--g", default="q2^3", help="odd polynomial, e.g. 'q2^3'")
    p.add_argument("--samples", type=int, default=10**4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.set_defaults(func=cmd_crofton)

    p = sub.add_parser("embed", help="ball-into-product containment check")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--nexp", type=int, default=8)
    p.add_argument("--copies", type=int, default=2)
    p.add_argument("--radius-factor", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cache", default=None, help="profile cache directory")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True,
                   choices=["sections-lp", "sections-hanner", "polytopes-2n2",
                            "reduction-bound", "capacity-monotone", "crofton",
                            "embedding"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (B.BodyError, CR.CroftonError, E.EmbeddingError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
