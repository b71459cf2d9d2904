"""Interpolating SMT solver for LRA, difference logic, UTVPI, EUF and
their delayed-theory-combination, with Craig interpolants extracted from
logged resolution proofs."""

from .frontend import (Options, Problem, Verdict, detect_logic, equivalent,
                       entails, parse, render, run, validate)
from .partition import Partition
from .proofs import Proof, check_proof, interpolate, sequence_interpolants
from .terms import Context

__all__ = [
    "Context", "Options", "Partition", "Problem", "Proof", "Verdict",
    "check_proof", "detect_logic", "entails", "equivalent", "interpolate",
    "parse", "render", "run", "sequence_interpolants", "validate",
]
