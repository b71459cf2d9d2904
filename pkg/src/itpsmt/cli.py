"""Command-line driver."""

from __future__ import annotations

import argparse
import sys

from . import frontend
from .proofs import ProofError
from .sexpr import SexprError


def build_argparser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="itpsmt",
        description="Interpolating SMT solver for LRA, DL, UTVPI, EUF and EUF+LRA.")
    p.add_argument("file", help="problem file (s-expressions)")
    p.add_argument("--theory",
                   choices=["auto", "lra", "rdl", "idl", "utvpi-q", "utvpi-z",
                            "euf", "euf+lra"],
                   default="auto", help="theory backend (default: auto-detect)")
    p.add_argument("--stronger", action="store_true",
                   help="emit strengthened arithmetic interpolants")
    p.add_argument("--validate", action="store_true",
                   help="re-check every interpolant in a fresh context")
    p.add_argument("--dump-proof", metavar="PATH",
                   help="write the refutation proof to PATH")
    p.add_argument("--seed", type=int, default=0, help="random seed (reserved)")
    p.add_argument("--budget", type=int, default=None,
                   help="abort after this many solver steps")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_argparser().parse_args(argv)
    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 20
    options = frontend.Options(theory=args.theory, stronger=args.stronger,
                               validate=args.validate,
                               dump_proof=args.dump_proof,
                               budget=args.budget, seed=args.seed)
    try:
        problem = frontend.parse(text)
        verdict = frontend.run(problem, options)
    except (frontend.InputError, SexprError, ProofError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 20
    sys.stdout.write(frontend.render(verdict, problem.ctx))
    if verdict.proof_text is not None and args.dump_proof:
        with open(args.dump_proof, "w", encoding="utf-8") as fh:
            fh.write(verdict.proof_text)
    return frontend.EXIT_CODES[verdict.status]


if __name__ == "__main__":
    raise SystemExit(main())
