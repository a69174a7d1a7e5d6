"""Recursive-descent parser for the `.qir` dialect.

Grammar sketch (precedence: unary > `*` `(x)` `/` > `+` `-`, all left
associative)::

    unit      := item*
    item      := 'decl' typed ';' | 'def' NAME '=' expr ';'
               | 'equation' NAME '{' ['forall' typed ';'] expr '=' expr ';' ['when' expr ';'] '}'
               | 'algorithm' NAME '{' clause* '}' | 'goal' stmt
    clause    := 'Input' typed ';' | 'Output' typed ';' | 'Match' assign ';'
               | 'Require' expr ';' | 'Var' typed ';' | 'body' '{' stmt* '}'
    stmt      := NAME '=' expr ';' | 'while' '(' expr ('>'|'<') expr ')' '{' stmt* '}'
    primary   := NUMBER | 'i' | NAME | I_NAME | 'I_{' set '}' | 'gamma5' | 'gamma[' dir ']'
               | 'shift(' set ',' dir ')' | 'proj(' parity ',' set ')' | 'U(' dir ')[' NAME ']'
               | 'dagger(' expr ')' | 'conj(' expr ')' | 'zero(' set [',' set] ')'
               | 'isInvertible(' expr ')' | '<' expr '|' expr '>' | '(' expr ')'
               | ('dsum' | 'sum') NAME 'in' set ':' postfix
    postfix   := primary ('^-1' | '^t' | '[' set ']')*

`(x)` is always the tensor-product token, so a parenthesised lone symbol
named `x` must be written `( x )`.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass

from .. import ir
from ..errors import DuplicateName, ProgramErrors, QiralError, SyntaxError_, UnboundSymbol
from ..shapes import MatrixShape, ScalarShape, VectorShape, infer_shape, symbol_shape
from .unit import AlgorithmTemplate, Equation, SourceUnit

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<tensor>\(x\)) | (?P<dsumop>\(\+\))
  | (?P<ident>I_\{|[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>\d+\.\d*(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)
  | (?P<arrow>->)
  | (?P<op>[-+*/^=;:,(){}\[\]<>|])
    """,
    re.VERBOSE,
)

KEYWORDS = {"decl", "def", "equation", "algorithm", "goal", "while", "forall", "when",
            "body", "in", "dsum", "sum"}
CLAUSES = {"input", "output", "match", "require", "var"}
CALLS = ("shift", "proj", "U", "dagger", "conj", "zero", "isInvertible")


@dataclass
class Token:
    kind: str
    text: str
    loc: ir.Loc


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SyntaxError_(f"unexpected character {text[pos]!r}", ir.Loc(line, col))
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind == "tensor" and s == "(x)" and out and out[-1].text in CALLS \
                    and out[-1].loc.line == line and out[-1].loc.col + len(out[-1].text) == col:
                # `U(x)` is a call on direction x, not a tensor product
                out += [Token("op", "(", ir.Loc(line, col)), Token("ident", "x", ir.Loc(line, col + 1)),
                        Token("op", ")", ir.Loc(line, col + 2))]
            elif kind not in ("ws", "comment"):
                out.append(Token(kind, s, ir.Loc(line, col)))
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", ir.Loc(line, col)))
    return out


class _Scope:
    def __init__(self, parent: _Scope | None = None):
        self.parent = parent
        self.syms: dict[str, ir.Term] = {}
        self.sets: dict[str, ir.IndexSet] = {}

    def lookup(self, name: str) -> ir.Term | None:
        s: _Scope | None = self
        while s is not None:
            if name in s.syms:
                return s.syms[name]
            s = s.parent
        return None

    def lookup_set(self, name: str) -> ir.IndexSet | None:
        s: _Scope | None = self
        while s is not None:
            if name in s.sets:
                return s.sets[name]
            s = s.parent
        return None


class Parser:
    def __init__(self, text: str, lattice: ir.Lattice | None = None,
                 base: SourceUnit | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.errors: list[QiralError] = []
        self.lattice = lattice or ir.Lattice("L")
        self.globals = _Scope()
        self.globals.sets.update({"L": self.lattice, "C": ir.C, "S": ir.S, "D": ir.D})
        self.scope = self.globals
        self.open_sets = False
        self.binders: list[tuple[str, str]] = []
        self.seen: dict[str, set[str]] = {"symbol": set(), "equation": set(), "algorithm": set()}
        if base is not None:
            for sym in base.declarations:
                self.globals.syms[sym.name] = sym
            for name, body in base.defs:
                self._register_def(name, body, None)

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "ident", "tensor", "dsumop", "arrow")

    def at_kw(self, word: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text.lower() == word

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise SyntaxError_(f"expected {text!r}, found {self.tok.text or 'end of input'!r}",
                               self.tok.loc)
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise SyntaxError_(f"expected {word!r}, found {self.tok.text!r}", self.tok.loc)
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident" or self.tok.text == "I_{":
            raise SyntaxError_(f"expected a name, found {self.tok.text!r}", self.tok.loc)
        return self.advance()

    # -- declarations --------------------------------------------------------
    def _declare(self, name: str, category: str, loc):
        if name in self.seen[category]:
            self.errors.append(DuplicateName(f"{category} {name!r} defined twice", loc))
        self.seen[category].add(name)

    def _register_def(self, name: str, body: ir.Term, loc):
        try:
            shape = infer_shape(body)
        except QiralError:
            return
        if isinstance(shape, MatrixShape):
            self.globals.syms[name] = ir.MatrixSym(name, shape.rows, shape.cols)
        elif isinstance(shape, VectorShape):
            self.globals.syms[name] = ir.VectorSym(name, shape.over)
        elif isinstance(shape, ScalarShape):
            self.globals.syms[name] = ir.SymScalar(name, real=False)

    # -- index sets ----------------------------------------------------------
    def set_expr(self) -> ir.IndexSet:
        parts = [self.set_atom()]
        while self.at("(x)"):
            self.advance()
            parts.append(self.set_atom())
        return ir.product(*parts)

    def set_atom(self) -> ir.IndexSet:
        if self.at("("):
            self.advance()
            s = self.set_expr()
            self.expect(")")
            return s
        t = self.ident()
        if t.text in ("even", "odd") and self.at("("):
            self.advance()
            lat = self.set_atom()
            self.expect(")")
            if not isinstance(lat, ir.Lattice):
                raise SyntaxError_(f"{t.text}() needs a lattice", t.loc)
            return ir.Sublattice(lat, t.text)
        return self._named_set(t.text, t.loc)

    def _named_set(self, name: str, loc) -> ir.IndexSet:
        s = self.scope.lookup_set(name)
        if s is not None:
            return s
        if self.open_sets:
            s = ir.Abstract(name)
            self.scope.sets[name] = s
            return s
        raise UnboundSymbol(f"unknown index set {name!r}", loc)

    # -- types ---------------------------------------------------------------
    def typed_list(self) -> list[ir.Term]:
        out: list[ir.Term] = []
        while True:
            names = [self.ident()]
            while self.at(","):
                self.advance()
                names.append(self.ident())
            self.expect(":")
            proto = self.type_(names[0].text, names[0].loc)
            out.append(proto)
            out.extend(dataclasses.replace(proto, name=n.text, loc=n.loc) for n in names[1:])
            # another group follows only if `, NAME ... :` comes next
            if self.at(","):
                self.advance()
                continue
            return out

    def type_(self, name: str, loc) -> ir.Term:
        t = self.ident()
        kind = t.text
        if kind in ("real", "complex"):
            return ir.SymScalar(name, real=(kind == "real"), loc=loc)
        if kind == "vector":
            self.expect("(")
            s = self.set_expr()
            self.expect(")")
            return ir.VectorSym(name, s, loc=loc)
        if kind == "matrix":
            self.expect("(")
            r = self.set_expr()
            self.expect(",")
            c = self.set_expr()
            self.expect(")")
            return ir.MatrixSym(name, r, c, loc=loc)
        raise SyntaxError_(f"unknown type {kind!r}", t.loc)

    # -- expressions -----------------------------------------------------------
    def expr(self) -> ir.Term:
        left = self.product_expr()
        while self.at("+") or self.at("-"):
            op = self.advance()
            right = self.product_expr()
            if op.text == "+":
                left = ir.Add((left, right), loc=op.loc)
            else:
                left = ir.Sub(left, right, loc=op.loc)
        return left

    def product_expr(self) -> ir.Term:
        left = self.unary()
        while self.at("*") or self.at("(x)") or self.at("/") or self.at("(+)"):
            op = self.advance()
            if op.text == "(+)":
                raise SyntaxError_("binary direct sum is not supported; use dsum", op.loc)
            right = self.unary()
            if op.text == "*":
                left = ir.Mul((left, right), loc=op.loc)
            elif op.text == "/":
                left = ir.Div(left, right, loc=op.loc)
            else:
                left = ir.Tensor((left, right), loc=op.loc)
        return left

    def unary(self) -> ir.Term:
        if self.at("-"):
            op = self.advance()
            return ir.Neg(self.unary(), loc=op.loc)
        return self.postfix()

    def postfix(self) -> ir.Term:
        t = self.primary()
        while True:
            if self.at("^"):
                op = self.advance()
                if self.at("-"):
                    self.advance()
                    one = self.advance()
                    if one.text != "1":
                        raise SyntaxError_("expected ^-1", one.loc)
                    t = ir.Inverse(t, loc=op.loc)
                elif self.at("t"):
                    self.advance()
                    t = ir.Transpose(t, loc=op.loc)
                else:
                    raise SyntaxError_("expected ^-1 or ^t", self.tok.loc)
            elif self.at("["):
                op = self.advance()
                s = self.set_expr()
                self.expect("]")
                t = ir.SubVector(t, s, loc=op.loc)
            else:
                return t

    def direction(self) -> ir.Dir:
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        t = self.ident()
        if t.text not in ir.DIRECTIONS and (t.text, "dir") not in self.binders:
            self.errors.append(UnboundSymbol(f"direction {t.text!r} is not bound", t.loc))
        return ir.Dir(t.text, sign)

    def primary(self) -> ir.Term:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return ir.ScalarLit(complex(float(t.text)), loc=t.loc)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("<"):
            self.advance()
            a = self.expr()
            self.expect("|")
            b = self.expr()
            self.expect(">")
            return ir.InnerProduct(a, b, loc=t.loc)
        if t.text == "I_{":
            self.advance()
            s = self.set_expr()
            self.expect("}")
            return ir.Identity(s, loc=t.loc)
        if t.kind != "ident":
            raise SyntaxError_(f"unexpected {t.text or 'end of input'!r}", t.loc)
        name = t.text
        if name.startswith("I_") and len(name) > 2:
            self.advance()
            return ir.Identity(self._named_set(name[2:], t.loc), loc=t.loc)
        if name in ("dsum", "sum"):
            return self.binder_form()
        if name in KEYWORDS:
            raise SyntaxError_(f"unexpected keyword {name!r}", t.loc)
        self.advance()
        if name == "i" and self.scope.lookup("i") is None:
            return ir.ImaginaryUnit(loc=t.loc)
        if name == "gamma5":
            return ir.Gamma5(loc=t.loc)
        if name == "gamma" and self.at("["):
            self.advance()
            d = self.direction()
            self.expect("]")
            return ir.Gamma(d, loc=t.loc)
        if self.at("(") and name in CALLS:
            return self.call(name, t.loc)
        sym = self.scope.lookup(name)
        if sym is None:
            self.errors.append(UnboundSymbol(f"symbol {name!r} is not declared", t.loc))
            return ir.SymScalar(name, loc=t.loc)
        return dataclasses.replace(sym, loc=t.loc)

    def call(self, name: str, loc) -> ir.Term:
        self.expect("(")
        if name == "shift":
            lat = self.set_expr()
            self.expect(",")
            d = self.direction()
            self.expect(")")
            return ir.Shift(lat, d, loc=loc)
        if name == "proj":
            par = self.ident()
            if par.text not in ir.PARITIES:
                raise SyntaxError_("projection parity must be even or odd", par.loc)
            self.expect(",")
            lat = self.set_expr()
            self.expect(")")
            if not isinstance(lat, ir.Lattice):
                raise SyntaxError_("projection needs a lattice", loc)
            return ir.Projection(par.text, lat, loc=loc)
        if name == "U":
            d = self.direction()
            self.expect(")")
            self.expect("[")
            s = self.ident()
            if (s.text, "site") not in self.binders:
                self.errors.append(UnboundSymbol(f"site {s.text!r} is not bound", s.loc))
            self.expect("]")
            return ir.GaugeLink(d, s.text, loc=loc)
        if name == "zero":
            r = self.set_expr()
            c = None
            if self.at(","):
                self.advance()
                c = self.set_expr()
            self.expect(")")
            return ir.Zero(r, c, loc=loc)
        arg = self.expr()
        self.expect(")")
        if name == "dagger":
            return ir.Dagger(arg, loc=loc)
        if name == "conj":
            return ir.Conj(arg, loc=loc)
        return ir.Pred("isInvertible", (arg,), loc=loc)

    def binder_form(self) -> ir.Term:
        kw = self.advance()
        var = self.ident()
        self.expect_kw("in")
        dom = self.set_expr()
        self.expect(":")
        kind = "dir" if isinstance(dom, ir.Directions) else "site"
        self.binders.append((var.text, kind))
        try:
            body = self.postfix()
        finally:
            self.binders.pop()
        cls = ir.DirectSum if kw.text == "dsum" else ir.IndexedSum
        return cls(var.text, dom, body, loc=kw.loc)

    # -- statements ----------------------------------------------------------
    def statement(self) -> ir.Statement:
        if self.at_kw("while"):
            w = self.advance()
            self.expect("(")
            lhs = self.expr()
            if not (self.at(">") or self.at("<")):
                raise SyntaxError_("while condition must compare with > or <", self.tok.loc)
            op = self.advance().text
            rhs = self.expr()
            self.expect(")")
            body = self.block()
            return ir.While(ir.Compare(op, lhs, rhs), tuple(body), loc=w.loc)
        st = self.assignment()
        self.expect(";")
        return st

    def assignment(self) -> ir.Assign:
        start = self.tok
        lhs = self.postfix()
        self.expect("=")
        rhs = self.expr()
        return ir.Assign(lhs, rhs, loc=start.loc)

    def block(self) -> list[ir.Statement]:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise SyntaxError_("unterminated block", self.tok.loc)
            out.append(self.statement())
        self.advance()
        return out

    # -- items ---------------------------------------------------------------
    def unit(self) -> SourceUnit:
        decls, defs, eqs, tpls, goal = [], [], [], [], []
        while self.tok.kind != "eof":
            t = self.tok
            if self.at_kw("decl"):
                self.advance()
                for sym in self.typed_list():
                    self._declare(sym.name, "symbol", sym.loc)
                    self.globals.syms[sym.name] = sym
                    decls.append(sym)
                self.expect(";")
            elif self.at_kw("def"):
                self.advance()
                name = self.ident()
                self.expect("=")
                body = self.expr()
                self.expect(";")
                self._declare(name.text, "symbol", name.loc)
                self._register_def(name.text, body, name.loc)
                defs.append((name.text, body))
            elif self.at_kw("equation"):
                eqs.append(self.equation())
            elif self.at_kw("algorithm"):
                tpls.append(self.algorithm())
            elif self.at_kw("goal"):
                self.advance()
                goal.append(self.statement())
            else:
                raise SyntaxError_(f"unexpected {t.text!r} at top level", t.loc)
        return SourceUnit(tuple(decls), tuple(defs), tuple(eqs), tuple(tpls), tuple(goal))

    def _enter(self):
        self.scope = _Scope(self.globals)
        self.open_sets = True

    def _leave(self):
        self.scope = self.globals
        self.open_sets = False

    def equation(self) -> Equation:
        kw = self.advance()
        name = self.ident()
        self._declare(name.text, "equation", name.loc)
        self.expect("{")
        self._enter()
        try:
            params: list[ir.Term] = []
            if self.at_kw("forall"):
                self.advance()
                params = self.typed_list()
                self.expect(";")
                for p in params:
                    self.scope.syms[p.name] = p
            lhs = self.expr()
            self.expect("=")
            rhs = self.expr()
            self.expect(";")
            cond = None
            if self.at_kw("when"):
                self.advance()
                cond = self.expr()
                self.expect(";")
            self.expect("}")
        finally:
            self._leave()
        return Equation(name.text, tuple(params), lhs, rhs, cond, loc=kw.loc)

    def algorithm(self) -> AlgorithmTemplate:
        kw = self.advance()
        name = self.ident()
        self._declare(name.text, "algorithm", name.loc)
        self.expect("{")
        self._enter()
        inputs: list = []
        outputs: list = []
        locals_: list = []
        requires: list = []
        match = None
        body: list = []
        try:
            while not self.at("}"):
                word = self.tok.text.lower()
                if self.tok.kind != "ident" or word not in CLAUSES | {"body"}:
                    raise SyntaxError_(f"unexpected {self.tok.text!r} in algorithm",
                                       self.tok.loc)
                clause = self.advance()
                if word in ("input", "output", "var"):
                    syms = self.typed_list()
                    self.expect(";")
                    for s in syms:
                        if s.name in self.scope.syms:
                            self.errors.append(DuplicateName(
                                f"{s.name!r} declared twice in {name.text}", s.loc))
                        self.scope.syms[s.name] = s
                    {"input": inputs, "output": outputs, "var": locals_}[word].extend(syms)
                elif word == "match":
                    if match is not None:
                        self.errors.append(SyntaxError_(
                            f"{name.text} has more than one Match clause", clause.loc))
                    match = self.assignment()
                    self.expect(";")
                elif word == "require":
                    requires.append(self.expr())
                    self.expect(";")
                else:
                    body = self.block()
            self.advance()
        finally:
            self._leave()
        if match is None:
            raise SyntaxError_(f"algorithm {name.text} has no Match clause", kw.loc)
        return AlgorithmTemplate(name.text, tuple(inputs), tuple(outputs), match,
                                 tuple(requires), tuple(locals_), tuple(body), loc=kw.loc)


def parse(source: str, lattice: ir.Lattice | None = None,
          base: SourceUnit | None = None) -> SourceUnit:
    """Parse `.qir` text.  `base` supplies symbols declared by earlier files."""
    p = Parser(source, lattice, base)
    try:
        unit = p.unit()
    except QiralError as e:
        raise ProgramErrors(p.errors + [e]) from None
    if p.errors:
        raise ProgramErrors(p.errors)
    return unit


def parse_files(paths, lattice: ir.Lattice | None = None) -> SourceUnit:
    unit = SourceUnit()
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        try:
            part = parse(text, lattice, base=unit)
        except ProgramErrors as e:
            for err in e.errors:
                err.message = f"{path}: {err.message}"
            raise
        unit = unit.merge(part)
    return unit
