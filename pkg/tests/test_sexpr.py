"""Concrete syntax: parse/render round trips and diagnostics."""

import random

import pytest

from mindroom import (
    Atom,
    Believes,
    ParseError,
    alpha_equivalent,
    parse_formula,
    render,
)
from mindroom.formulas import And, ForAll, Knows
from mindroom.terms import Constant, FunctionApplication, Variable

from gen import random_formula


def test_holds_on_table(sig):
    f = parse_formula("(holds (on A ctable) 0)", sig)
    assert isinstance(f, Atom)
    assert render(f) == "(holds (on A ctable) 0)"


def test_degenerate_conjunction_rejected(sig):
    with pytest.raises(ParseError, match="at least 2"):
        parse_formula("(and)", sig)
    with pytest.raises(ParseError, match="at least 2"):
        parse_formula("(and (holds (clear A) 0))", sig)


def test_belief_formula(sig):
    f = parse_formula("(believes h2 5 (holds (on A B) 5))", sig)
    assert isinstance(f, Believes)
    assert f.agent == Constant("h2", "Agent")
    assert render(f) == "(believes h2 5 (holds (on A B) 5))"


def test_render_clear(sig):
    f = parse_formula("(holds (clear A) 0)", sig)
    assert render(f) == "(holds (clear A) 0)"


def test_alpha_variants_render_identically_after_normalization(sig):
    from mindroom import alpha_normalize

    f = parse_formula("(forall (?x Agent) (perceives ?x 0 (holds (clear A) 0)))", sig)
    g = parse_formula("(forall (?y Agent) (perceives ?y 0 (holds (clear A) 0)))", sig)
    assert render(alpha_normalize(f)) == render(alpha_normalize(g))


def test_nested_knowledge_round_trips(sig):
    text = "(knows a 1 (knows b 1 (holds (on A B) 1)))"
    f = parse_formula(text, sig)
    assert isinstance(f, Knows) and isinstance(f.body, Knows)
    assert parse_formula(render(f), sig) == f


def test_unknown_symbol_is_reported_with_position(sig):
    with pytest.raises(ParseError, match="unknown symbol 'bogus'.*line 1"):
        parse_formula("(holds (bogus A) 0)", sig)


def test_sort_mismatch_names_both_sorts(sig):
    with pytest.raises(ParseError, match="sort"):
        parse_formula("(on ctable A)", sig)


def test_offset_time_terms_parse_and_fold(sig):
    f = parse_formula("(says-to cir h2 (+ 9 1) (holds (on A C) 6))", sig)
    assert render(f) == "(says-to cir h2 10 (holds (on A C) 6))"
    g = parse_formula("(forall (?t Moment) (prior ?t (+ ?t 1)))", sig)
    assert render(g) == "(forall (?t Moment) (prior ?t (+ ?t 1)))"


def test_comments_and_blank_lines_in_files(tmp_path, sig):
    p = tmp_path / "f.dcec"
    p.write_text("; a comment\n\n(holds (clear A) 0)\n")
    from mindroom import parse_dcec_file

    out = parse_dcec_file(str(p), sig)
    assert len(out) == 1


def test_round_trip_generated_formulae(sig):
    """parse(render(f)) is alpha-equivalent to f over a thousand
    generated well-sorted formulae."""
    rng = random.Random(20240817)
    for _ in range(1000):
        f = random_formula(rng, sig)
        back = parse_formula(render(f), sig)
        assert alpha_equivalent(back, f), render(f)
