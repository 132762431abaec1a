"""S-expression concrete syntax.

Grammar (EBNF):

    formula  := "(" head arg* ")" | boolean-term
    head     := "not" | "and" | "or" | "implies" | "iff" | "="
              | "forall" | "exists"
              | "believes" | "knows" | "perceives" | "desires" | "intends"
              | "common" | "says" | "says-to"
              | FUNCTION                     ; Boolean-valued application
    binder   := "(" "?"IDENT SORT ")"        ; after forall/exists
    term     := "?"IDENT | IDENT | INTEGER | "(" FUNCTION term* ")"

Identifiers are ASCII and case-sensitive; integers are decimal and take
sort Moment or Numeric from the position they occupy.  `.dcec` files hold
one formula per line; lines starting with ";" are comments.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import formulas as F
from .formulas import Formula
from .sorts import AGENT, BOOLEAN, MOMENT, NUMERIC, Signature, SignatureError
from .terms import Constant, FunctionApplication, Term, Variable

_OPERATORS = {
    "not", "and", "or", "implies", "iff", "=", "forall", "exists",
    "believes", "knows", "perceives", "desires", "intends",
    "common", "says", "says-to",
}


class ParseError(Exception):
    def __init__(self, message: str, pos: int | None = None, text: str = ""):
        if pos is not None and text:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.pos = pos


@dataclass(frozen=True)
class _Token:
    value: str
    pos: int


def tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append(_Token(c, i))
            i += 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            tokens.append(_Token(text[i:j], i))
            i = j
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.tokens = tokenize(text)
        self.pos = 0
        # variable name -> sort, from binders in scope and free-var inference
        self.scope: list[dict[str, str]] = [{}]

    def error(self, msg: str, tok: _Token | None = None) -> ParseError:
        return ParseError(msg, tok.pos if tok else None, self.text)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.text), self.text)
        self.pos += 1
        return tok

    def expect(self, value: str) -> _Token:
        tok = self.next()
        if tok.value != value:
            raise self.error(f"expected '{value}', found '{tok.value}'", tok)
        return tok

    def lookup_var(self, name: str) -> str | None:
        for frame in reversed(self.scope):
            if name in frame:
                return frame[name]
        return None

    # -- terms ---------------------------------------------------------

    def parse_term(self, expected: tuple[str, ...]) -> Term:
        tok = self.next()
        if tok.value == "(":
            head = self.next()
            decl = self._function(head)
            args = []
            for accepted in decl.args:
                args.append(self.parse_term(accepted))
            self.expect(")")
            term: Term = FunctionApplication(head.value, tuple(args))
            if head.value == "+":
                from .terms import numeral_value, plus

                k = numeral_value(args[1])
                if k is not None:
                    term = plus(args[0], k)
            actual = decl.result
        elif tok.value.startswith("?"):
            name = tok.value[1:]
            if not name:
                raise self.error("empty variable name", tok)
            sort = self.lookup_var(name)
            if sort is None:
                sort = expected[0]
                self.scope[-1][name] = sort
            term, actual = Variable(name, sort), sort
        elif tok.value.isdigit():
            sort = next(
                (s for s in (MOMENT, NUMERIC) if self.sig.fits(s, expected)), MOMENT
            )
            term, actual = Constant(tok.value, sort), sort
        else:
            try:
                actual = self.sig.constant_sort(tok.value)
            except SignatureError:
                raise self.error(f"unknown symbol '{tok.value}'", tok) from None
            term = Constant(tok.value, actual)
        if not self.sig.fits(actual, expected):
            raise self.error(
                f"sort mismatch: '{tok.value}' has sort {actual}, "
                f"expected {' or '.join(expected)}",
                tok,
            )
        return term

    def _function(self, tok: _Token):
        if tok.value in _OPERATORS or tok.value in "()":
            raise self.error(f"'{tok.value}' cannot be used as a function symbol", tok)
        try:
            return self.sig.function(tok.value)
        except SignatureError:
            raise self.error(f"unknown symbol '{tok.value}'", tok) from None

    # -- formulas ------------------------------------------------------

    def parse_formula(self) -> Formula:
        tok = self.next()
        if tok.value != "(":
            # bare Boolean term: propositional constant or placeholder var
            self.pos -= 1
            term = self.parse_term((BOOLEAN,))
            return F.Atom(term)
        head = self.next()
        h = head.value
        if h == "not":
            body = self.parse_formula()
            self.expect(")")
            return F.Not(body)
        if h in ("and", "or"):
            items = []
            while self.peek() and self.peek().value != ")":
                items.append(self.parse_formula())
            self.expect(")")
            if len(items) < 2:
                raise self.error(f"'{h}' requires at least 2 operands", head)
            return (F.And if h == "and" else F.Or)(tuple(items))
        if h in ("implies", "iff"):
            lhs = self.parse_formula()
            rhs = self.parse_formula()
            self.expect(")")
            return (F.Implies if h == "implies" else F.Iff)(lhs, rhs)
        if h == "=":
            # both sides at the top of the sort forest: accept anything
            roots = tuple(s for s, v in self.sig.sorts.items() if v.parent is None)
            left = self.parse_term(roots)
            right = self.parse_term(roots)
            self.expect(")")
            return F.Equals(left, right)
        if h in ("forall", "exists"):
            self.expect("(")
            vtok = self.next()
            if not vtok.value.startswith("?") or len(vtok.value) < 2:
                raise self.error("binder must name a '?'-variable", vtok)
            stok = self.next()
            if stok.value not in self.sig.sorts:
                raise self.error(f"unknown sort '{stok.value}'", stok)
            self.expect(")")
            var = Variable(vtok.value[1:], stok.value)
            self.scope.append({var.name: var.sort})
            body = self.parse_formula()
            self.scope.pop()
            self.expect(")")
            return (F.ForAll if h == "forall" else F.Exists)(var, body)
        if h in ("believes", "knows", "perceives", "desires", "intends"):
            agent = self.parse_term((AGENT,))
            time = self.parse_term((MOMENT,))
            body = self.parse_formula()
            self.expect(")")
            node = {
                "believes": F.Believes, "knows": F.Knows,
                "perceives": F.Perceives, "desires": F.Desires,
                "intends": F.Intends,
            }[h]
            return node(agent, time, body)
        if h == "common":
            time = self.parse_term((MOMENT,))
            body = self.parse_formula()
            self.expect(")")
            return F.Common(time, body)
        if h == "says":
            speaker = self.parse_term((AGENT,))
            time = self.parse_term((MOMENT,))
            body = self.parse_formula()
            self.expect(")")
            return F.Says(speaker, time, body)
        if h == "says-to":
            speaker = self.parse_term((AGENT,))
            addressee = self.parse_term((AGENT,))
            time = self.parse_term((MOMENT,))
            body = self.parse_formula()
            self.expect(")")
            return F.SaysTo(speaker, addressee, time, body)
        # Boolean-valued application in formula position
        decl = self._function(head)
        if decl.result != BOOLEAN:
            raise self.error(
                f"'{h}' has result sort {decl.result}; a formula needs Boolean", head
            )
        args = [self.parse_term(accepted) for accepted in decl.args]
        self.expect(")")
        return F.Atom(FunctionApplication(h, tuple(args)))


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse and sort-check one formula."""
    from .sortcheck import sort_check

    parser = _Parser(text, sig)
    f = parser.parse_formula()
    tok = parser.peek()
    if tok is not None:
        raise parser.error(f"trailing input '{tok.value}'", tok)
    violations = sort_check(f, sig)
    if violations:
        raise ParseError("; ".join(violations))
    return f


def parse_term(text: str, sig: Signature, expected: tuple[str, ...]) -> Term:
    parser = _Parser(text, sig)
    t = parser.parse_term(expected)
    tok = parser.peek()
    if tok is not None:
        raise parser.error(f"trailing input '{tok.value}'", tok)
    return t


def parse_dcec_file(path: str, sig: Signature) -> list[Formula]:
    """One formula per line; ';' starts a comment."""
    out = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith(";"):
                continue
            try:
                out.append(parse_formula(stripped, sig))
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return out
