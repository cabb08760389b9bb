"""Recursive-descent parser for the theory language.

    # comments run to end of line
    type Age = interval 50..74 unit "years"
    lattice Exam { m, bx, m^bx }          # m^bx is placed below m and bx
    lattice Freq { an, bi }
    convert Daily -> Weekly mul 7 add 0
    pred s(Age, Exam, Freq)
    theory Tc { s([50,54], m, an); s(Age:[55,74], m, bi) | s([55,74], m, an) }
    generic_sheaf Ex3 {
      nodes 0, 1;
      order 0 <= 1;
      stalk 0 = { {0} };
      stalk 1 = { {1}, {0} };
      map 0 -> 1 { {0} -> {1} }
    }
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .lattice import INF, ConversionMap, FiniteLattice, IntervalType, LatticeError, Value
from .theory import Atom, Corpus, Literal, PredicateSignature, TheoryDoc


class DslError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0, filename: str = "<input>"):
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename
        super().__init__(f"{filename}:{line}:{col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<range>\.\.)
  | (?P<arrow>->)
  | (?P<le><=)
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\^[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<not>[¬~])
  | (?P<punct>[{}()\[\],;:|=</])
    """,
    re.VERBOSE,
)


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise DslError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1, filename)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            if kind == "punct":
                kind = text
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, source: str, corpus: Optional[Corpus] = None, filename: str = "<input>"):
        self.filename = filename
        self.tokens = tokenize(source, filename)
        self.i = 0
        self.corpus = corpus if corpus is not None else Corpus()

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> DslError:
        tok = tok or self.tok
        return DslError(message, tok.line, tok.col, self.filename)

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.accept(kind, text)
        if tok is None:
            want = text or kind
            got = self.tok.text or self.tok.kind
            raise self.error(f"expected {want!r}, found {got!r}")
        return tok

    def ident(self) -> Token:
        return self.expect("ident")

    # top level

    def parse(self) -> Corpus:
        handlers = {
            "type": self.type_decl,
            "lattice": self.lattice_decl,
            "convert": self.convert_decl,
            "pred": self.pred_decl,
            "theory": self.theory_decl,
            "generic_sheaf": self.generic_sheaf_decl,
        }
        while not self.at("eof"):
            if self.accept(";"):
                continue
            tok = self.tok
            if tok.kind != "ident" or tok.text not in handlers:
                raise self.error(f"expected a declaration, found {tok.text!r}")
            self.i += 1
            handlers[tok.text]()
        self.corpus.sources.append(self.filename)
        return self.corpus

    def _declare_type(self, tok: Token, t) -> None:
        if tok.text in self.corpus.types:
            raise self.error(f"type {tok.text} already declared", tok)
        self.corpus.types[tok.text] = t

    def type_decl(self):
        name = self.ident()
        self.expect("=")
        kw = self.ident()
        if kw.text != "interval":
            raise self.error("only 'interval' types can be declared with 'type'", kw)
        lo = int(self.expect("int").text)
        self.expect("range")
        if self.accept("ident", "inf"):
            hi = None
        else:
            hi = int(self.expect("int").text)
        unit = None
        if self.accept("ident", "unit"):
            unit = self.expect("string").text[1:-1]
        try:
            t = IntervalType(name.text, lo, hi, unit)
        except LatticeError as e:
            raise self.error(str(e), name) from None
        self._declare_type(name, t)

    def lattice_decl(self):
        name = self.ident()
        self.expect("{")
        elements: list[str] = []
        order: list[tuple[str, str]] = []

        def note(e):
            if e not in elements:
                elements.append(e)

        while not self.accept("}"):
            lower = self.ident().text
            note(lower)
            if self.accept("le"):
                upper = self.ident().text
                note(upper)
                order.append((lower, upper))
            if not self.accept(",") and not self.accept(";") and not self.at("}"):
                raise self.error("expected ',' or '}' in lattice body")
        for e in list(elements):
            if "^" in e:
                for part in e.split("^"):
                    if part in elements:
                        order.append((e, part))
        try:
            t = FiniteLattice(name.text, tuple(elements), tuple(order))
        except LatticeError as e:
            raise self.error(str(e), name) from None
        self._declare_type(name, t)

    def _lookup_type(self, tok: Token):
        try:
            return self.corpus.types[tok.text]
        except KeyError:
            raise self.error(f"unknown type {tok.text}", tok) from None

    def convert_decl(self):
        src = self._lookup_type(self.ident())
        self.expect("arrow")
        dst_tok = self.ident()
        dst = self._lookup_type(dst_tok)
        self.expect("ident", "mul")
        mul = self.rational()
        offset = 0
        if self.accept("ident", "add"):
            offset = int(self.expect("int").text)
        try:
            cmap = ConversionMap(src, dst, mul, offset)
        except LatticeError as e:
            raise self.error(str(e), dst_tok) from None
        self.corpus.conversions[src.name, dst.name] = cmap

    def rational(self) -> Fraction:
        num = int(self.expect("int").text)
        if self.accept("/"):
            return Fraction(num, int(self.expect("int").text))
        return Fraction(num)

    def pred_decl(self):
        name = self.ident()
        if name.text in self.corpus.predicates:
            raise self.error(f"predicate {name.text} already declared", name)
        self.expect("(")
        types = []
        if not self.at(")"):
            types.append(self._lookup_type(self.ident()))
            while self.accept(","):
                types.append(self._lookup_type(self.ident()))
        self.expect(")")
        self.corpus.predicates[name.text] = PredicateSignature(name.text, tuple(types))

    def theory_decl(self):
        name = self.ident()
        if any(doc.id == name.text for doc in self.corpus.theories):
            raise self.error(f"duplicate theory id {name.text}", name)
        self.expect("{")
        clauses = []
        while not self.accept("}"):
            if self.accept(";") or self.accept(","):
                continue
            clause = [self.literal()]
            while self.accept("|"):
                clause.append(self.literal())
            clauses.append(tuple(clause))
        if not clauses:
            raise self.error(f"theory {name.text} has no statements", name)
        self.corpus.theories.append(TheoryDoc(name.text, tuple(clauses)))

    def literal(self) -> Literal:
        negated = bool(self.accept("not") or self.accept("ident", "not"))
        if negated and (self.at("not") or self.at("ident", "not")):
            raise self.error("double negation is not allowed")
        return Literal(self.atom(), positive=not negated)

    def atom(self) -> Atom:
        name = self.ident()
        sig = self.corpus.predicates.get(name.text)
        if sig is None:
            raise self.error(f"unknown predicate {name.text}", name)
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.argument(sig, 0))
            while self.accept(","):
                args.append(self.argument(sig, len(args)))
        close = self.expect(")")
        if len(args) != sig.arity:
            raise self.error(
                f"{name.text} expects {sig.arity} arguments, got {len(args)}", close
            )
        return Atom(name.text, tuple(args))

    def argument(self, sig: PredicateSignature, index: int) -> Value:
        start = self.tok
        if index >= sig.arity:
            raise self.error(f"{sig.name} expects {sig.arity} arguments")
        t = sig.types[index]
        # optional "Type:" label, possibly naming a convertible unit
        if self.at("ident") and self.tokens[self.i + 1].kind == ":":
            label = self.ident()
            self.expect(":")
            stated = self._lookup_type(label)
            if stated != t and (stated.name, t.name) not in self.corpus.conversions:
                raise self.error(
                    f"argument {index + 1} of {sig.name} has type {t.name}, not {stated.name}",
                    label,
                )
            t = stated
        try:
            return self.value(t)
        except LatticeError as e:
            raise self.error(str(e), start) from None

    def value(self, t) -> Value:
        if isinstance(t, IntervalType):
            if self.accept("["):
                lo = int(self.expect("int").text)
                self.expect(",")
                if self.accept("]"):
                    return t.value(lo, INF)
                if self.accept("ident", "inf"):
                    hi = INF
                else:
                    hi = int(self.expect("int").text)
                self.expect("]")
                return t.value(lo, hi)
            point = int(self.expect("int").text)
            return t.value(point, point)
        return t.element(self.ident().text)

    # generic sheaves

    def element_label(self) -> str:
        if self.accept("{"):
            parts = []
            if not self.at("}"):
                parts.append(self.scalar())
                while self.accept(","):
                    parts.append(self.scalar())
            self.expect("}")
            return "{" + ",".join(parts) + "}"
        return self.scalar()

    def scalar(self) -> str:
        tok = self.accept("int") or self.accept("ident")
        if tok is None:
            raise self.error("expected an element")
        return tok.text

    def generic_sheaf_decl(self):
        from .sheaf import GenericSheafSpec, SheafError

        name = self.ident()
        if name.text in self.corpus.generic_sheaves:
            raise self.error(f"generic_sheaf {name.text} already declared", name)
        self.expect("{")
        nodes: list[str] = []
        order: list[tuple[str, str]] = []
        stalks: dict[str, list[str]] = {}
        maps: dict[tuple[str, str], dict[str, str]] = {}
        while not self.accept("}"):
            if self.accept(";"):
                continue
            kw = self.ident()
            if kw.text == "nodes":
                nodes.append(self.scalar())
                while self.accept(","):
                    nodes.append(self.scalar())
            elif kw.text == "order":
                while True:
                    lower = self.scalar()
                    if not (self.accept("le") or self.accept("<")):
                        raise self.error("expected '<=' in order pair")
                    order.append((lower, self.scalar()))
                    if not self.accept(","):
                        break
            elif kw.text == "stalk":
                node = self.scalar()
                self.expect("=")
                self.expect("{")
                elems = []
                if not self.at("}"):
                    elems.append(self.element_label())
                    while self.accept(","):
                        elems.append(self.element_label())
                self.expect("}")
                stalks[node] = elems
            elif kw.text == "map":
                src = self.scalar()
                self.expect("arrow")
                dst = self.scalar()
                self.expect("{")
                table = {}
                while not self.accept("}"):
                    if self.accept(";") or self.accept(","):
                        continue
                    a = self.element_label()
                    self.expect("arrow")
                    table[a] = self.element_label()
                maps[src, dst] = table
            else:
                raise self.error(f"unknown generic_sheaf item {kw.text!r}", kw)
        try:
            spec = GenericSheafSpec.build(name.text, nodes, order, stalks, maps)
        except SheafError as e:
            raise self.error(str(e), name) from None
        self.corpus.generic_sheaves[name.text] = spec


def parse(source: str, corpus: Optional[Corpus] = None, filename: str = "<input>") -> Corpus:
    """Parse DSL text, extending ``corpus`` when given."""
    return Parser(source, corpus, filename).parse()


def parse_files(paths) -> Corpus:
    corpus = Corpus()
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            parse(fh.read(), corpus, str(path))
    return corpus
