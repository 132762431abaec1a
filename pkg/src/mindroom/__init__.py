"""Sorted modal event-calculus reasoner, epistemic planner, and
overseer-room simulator."""

from .sorts import Signature, Sort, FunctionDecl, SignatureError, default_signature
from .terms import Variable, Constant, FunctionApplication, Term, numeral, plus
from .formulas import (
    Atom, Equals, Not, And, Or, Implies, Iff, ForAll, Exists,
    Perceives, Knows, Believes, Desires, Intends, Common, Says, SaysTo,
    Formula, atom, render,
)
from .sexpr import ParseError, parse_formula, parse_term, parse_dcec_file
from .transform import Substitution, substitute, alpha_normalize, alpha_equivalent, canonical, compose
from .sortcheck import sort_check

__version__ = "0.1.0"
