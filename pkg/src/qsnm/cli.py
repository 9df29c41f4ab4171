"""Command-line front end: verify, compute, list, gen."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .connections import QSFamilyParams
from .expr import DomainError
from .fields import STANDARD_POINTS, DegeneracyError, tensor_eval
from .manifold import (
    GenerationError, ManifoldSpec, ManifoldSpecError, QSManifold, RandomManifoldConfig,
    TENSOR_NAMES, random_manifold,
)
from .verify import DEFAULT_TOL, SuiteInfo, emit_report, registry, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qsnm", description="Verify quarter-symmetric non-metric connection identities.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    v = sub.add_parser("verify", help="run the identity registry on one manifold")
    src = v.add_mutually_exclusive_group()
    src.add_argument("--manifold", metavar="PATH", help="manifold spec JSON file")
    src.add_argument("--random", action="store_true", help="generate a random manifold")
    v.add_argument("--dim", type=int, default=3, help="dimension for --random (2-4)")
    v.add_argument("--seed", type=int, default=0, help="generation and sampling seed")
    v.add_argument("--points", type=int, default=STANDARD_POINTS)
    v.add_argument("--tol", type=float, default=DEFAULT_TOL)
    v.add_argument("--format", choices=("table", "json"), default="table")
    v.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    v.add_argument("--a", type=float, help="a of the (a, b) family tested for torsion")
    v.add_argument("--b", type=float, help="b of the (a, b) family tested for torsion")
    v.add_argument("--timing", action="store_true", help="record wall time in the report")

    c = sub.add_parser("compute", help="print the components of a named tensor at a point")
    c.add_argument("--tensor", required=True, choices=list(TENSOR_NAMES), metavar="NAME")
    c.add_argument("--manifold", required=True, metavar="PATH")
    c.add_argument("--point", required=True, metavar="c1,c2,...")

    sub.add_parser("list", help="print the identity catalog")

    g = sub.add_parser("gen", help="write a random manifold spec")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, metavar="PATH")
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--degree", type=int, default=2)
    g.add_argument("--no-trig", action="store_true")
    return p


def _load(path: str) -> QSManifold:
    return QSManifold.from_spec(ManifoldSpec.from_json(Path(path).read_text(encoding="utf-8")))


def _cmd_verify(args, out) -> int:
    if args.manifold is None and not args.random:
        raise UsageError("verify: one of --manifold or --random is required")
    if (args.a is None) != (args.b is None):
        raise UsageError("verify: --a and --b must be given together")
    if args.points < 1:
        raise UsageError("verify: --points must be positive")
    if args.tol <= 0:
        raise UsageError("verify: --tol must be positive")
    t0 = time.perf_counter()
    if args.random:
        try:
            cfg = RandomManifoldConfig(seed=args.seed, dimension=args.dim)
        except ValueError as exc:
            raise UsageError(f"verify: {exc}") from exc
        spec = random_manifold(cfg)
        M = QSManifold.from_spec(spec)
    else:
        M = _load(args.manifold)
        spec = M.spec
    options = {}
    if args.a is not None:
        options["family"] = (QSFamilyParams(args.a, args.b),)
    reports = run_suite(M, args.points, args.seed, args.tol, **options)
    elapsed = (time.perf_counter() - t0) * 1000.0 if args.timing else None
    suite = SuiteInfo(args.seed, M.dimension, spec.spec_hash if spec else None, elapsed)
    text = emit_report(reports, args.format, args.out, suite)
    if args.out is None:
        out.write(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _label(name: str, valence, idx) -> str:
    r, _ = valence
    up = "".join(str(i + 1) for i in idx[:r])
    low = "".join(str(i + 1) for i in idx[r:])
    return name + (f"^{up}" if up else "") + (f"_{low}" if low else "")


def _cmd_compute(args, out) -> int:
    try:
        point = [float(v) for v in args.point.split(",")]
    except ValueError as exc:
        raise UsageError(f"compute: bad --point {args.point!r}") from exc
    M = _load(args.manifold)
    if len(point) != M.dimension:
        raise UsageError(f"compute: --point needs {M.dimension} coordinates")
    T = M.tensor(args.tensor)
    vals = tensor_eval(T, np.array(point))
    for idx in np.ndindex(vals.shape):
        v = float(vals[idx]) + 0.0
        out.write(f"{_label(args.tensor, T.valence, idx)} = {v:.12g}\n")
    return EXIT_OK


def _cmd_list(out) -> int:
    width = max(len(c.name) for c in registry())
    for k, c in enumerate(registry(), 1):
        out.write(f"{k:>2}  {c.name:<{width}}  {c.description}\n")
        out.write(f"    {'':<{width}}  anchor: {c.anchor}\n")
    return EXIT_OK


def _cmd_gen(args, out) -> int:
    try:
        cfg = RandomManifoldConfig(seed=args.seed, dimension=args.dim, eps=args.eps,
                                   degree=args.degree, trig=not args.no_trig)
    except ValueError as exc:
        raise UsageError(f"gen: {exc}") from exc
    spec = random_manifold(cfg)
    Path(args.out).write_text(spec.to_json(), encoding="utf-8")
    out.write(f"wrote {args.out} (spec {spec.spec_hash})\n")
    return EXIT_OK


def _join_point(argv: list[str]) -> list[str]:
    # "--point -1,0" would otherwise be read as an option
    out, k = [], 0
    while k < len(argv):
        if argv[k] == "--point" and k + 1 < len(argv):
            out.append(f"--point={argv[k + 1]}")
            k += 2
        else:
            out.append(argv[k])
            k += 1
    return out


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = _build_parser()
    argv = _join_point(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        if args.command == "verify":
            return _cmd_verify(args, out)
        if args.command == "compute":
            return _cmd_compute(args, out)
        if args.command == "list":
            return _cmd_list(out)
        return _cmd_gen(args, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except (OSError, ManifoldSpecError, DegeneracyError, GenerationError, DomainError) as exc:
        err.write(f"qsnm: error: {exc}\n")
        return EXIT_ERROR


def cli_main(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
