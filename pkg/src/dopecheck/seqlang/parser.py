"""Tokenizer and recursive-descent parser for ``.dope`` programs.

The grammar is documented in ``docs/lang.md``.  Every error carries a
line and column; semantic errors also name the offending variable.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..values import Grid, to_value
from .ast import (
    And,
    Assign,
    BinOp,
    BoolLit,
    Call,
    Cmp,
    Decl,
    Expr,
    If,
    Implies,
    InInterval,
    Neg,
    NondetAssign,
    Not,
    Num,
    Or,
    Pow,
    Program,
    Seq,
    Skip,
    Stmt,
    Sym,
    Var,
    While,
    stmt_exprs,
    walk,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class SemanticError(ParseError):
    def __init__(self, message: str, variable: str | None = None, line: int = 0, col: int = 0):
        self.variable = variable
        super().__init__(message, line, col)


KEYWORDS = {
    "param", "input", "output", "var", "const", "step", "in", "if", "then", "else",
    "while", "do", "skip", "true", "false", "and", "or", "not",
}
FUNCTIONS = {"abs": 1, "min": 2, "max": 2}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*|//[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\.\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9']*)
  | (?P<op>:in|:=|==|!=|<=|>=|=>|&&|\|\||[-+*/^(){}\[\],;<>!=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, kw, op, eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - start + 1)
        kind, text = m.lastgroup, m.group()
        col = pos - start + 1
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "name":
            tokens.append(Token("kw" if text in KEYWORDS else "name", text, line, col))
        elif kind in ("num", "op"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0

    # -- token helpers -------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text in texts

    def take(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.take()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def fail(self, message: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{message}, found {found}", t.line, t.col)

    def name(self) -> Token:
        if self.tok.kind != "name":
            self.fail("expected a name")
        return self.take()

    # -- program -------------------------------------------------------------
    def program(self) -> tuple[list[Decl], dict[str, Fraction], Stmt, dict]:
        decls: list[Decl] = []
        consts: dict[str, Fraction] = {}
        positions: dict[str, tuple[int, int]] = {}
        while self.at("param", "input", "output", "var", "const"):
            role_tok = self.take()
            while True:
                nt = self.name()
                if nt.text in positions:
                    raise SemanticError(f"{nt.text!r} declared twice", nt.text, nt.line, nt.col)
                positions[nt.text] = (nt.line, nt.col)
                if role_tok.text == "const":
                    self.expect("=")
                    consts[nt.text] = self.signed_number()
                else:
                    grid = self.grid() if self.accept("in") else None
                    decls.append(Decl(nt.text, role_tok.text, grid, (nt.line, nt.col)))
                if not self.accept(","):
                    break
            self.expect(";")
        body = self.stmts(top=True)
        if self.tok.kind != "eof":
            self.fail("expected ';' or end of input")
        return decls, consts, body, positions

    def signed_number(self) -> Fraction:
        sign = -1 if self.accept("-") else 1
        if self.tok.kind != "num":
            self.fail("expected a number")
        return sign * to_value(self.take().text)

    def grid(self) -> Grid:
        t = self.tok
        if not self.at("[", "("):
            self.fail("expected '[' or '(' to open a domain")
        lo_open = self.take().text == "("
        lo = self.signed_number()
        self.expect(",")
        hi = self.signed_number()
        if not self.at("]", ")"):
            self.fail("expected ']' or ')' to close a domain")
        hi_open = self.take().text == ")"
        self.expect("step")
        step = self.signed_number()
        try:
            return Grid(lo, hi, step, lo_open, hi_open)
        except ValueError as exc:
            raise ParseError(str(exc), t.line, t.col) from None

    # -- statements ----------------------------------------------------------
    def stmts(self, top: bool = False) -> Stmt:
        items: list[Stmt] = []
        while True:
            if (top and self.tok.kind == "eof") or (not top and self.at("}")):
                break
            items.append(self.stmt())
            if not self.accept(";"):
                break
        return Seq.of(*items) if items else Skip()

    def block(self) -> Stmt:
        if self.accept("{"):
            body = self.stmts()
            self.expect("}")
            return body
        return self.stmt()

    def stmt(self) -> Stmt:
        t = self.tok
        pos = (t.line, t.col)
        if self.accept("skip"):
            return Skip(pos)
        if self.accept("if"):
            cond = self.expr()
            self.accept("then")
            then = self.block()
            else_ = self.block() if self.accept("else") else Skip()
            return If(cond, then, else_, pos)
        if self.accept("while"):
            cond = self.expr()
            self.accept("do")
            return While(cond, self.block(), pos)
        if self.at("{"):
            return self.block()
        if t.kind == "name":
            self.take()
            if self.accept(":="):
                return Assign(t.text, self.expr(), pos)
            if self.accept(":in"):
                self.expect("[")
                lo = self.expr()
                self.expect(",")
                hi = self.expr()
                self.expect("]")
                return NondetAssign(t.text, lo, hi, pos)
            self.fail("expected ':=' or ':in'")
        self.fail("expected a statement")

    # -- expressions (lowest precedence first) -------------------------------
    def expr(self) -> Expr:
        left = self.disj()
        if self.accept("=>"):
            return Implies(left, self.expr())
        return left

    def disj(self) -> Expr:
        e = self.conj()
        while self.at("||", "or"):
            self.take()
            e = Or(e, self.conj())
        return e

    def conj(self) -> Expr:
        e = self.negation()
        while self.at("&&", "and"):
            self.take()
            e = And(e, self.negation())
        return e

    def negation(self) -> Expr:
        if self.at("!", "not"):
            self.take()
            return Not(self.negation())
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.additive()
        if self.at("==", "!=", "<", "<=", ">", ">=", "="):
            op = self.take().text
            return Cmp("==" if op == "=" else op, left, self.additive())
        if self.accept("in"):
            if not self.at("[", "("):
                self.fail("expected '[' or '(' after 'in'")
            lo_closed = self.take().text == "["
            lo = self.additive()
            self.expect(",")
            hi = self.additive()
            if not self.at("]", ")"):
                self.fail("expected ']' or ')'")
            hi_closed = self.take().text == "]"
            return InInterval(left, lo, hi, lo_closed, hi_closed)
        return left

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.at("+", "-"):
            op = self.take().text
            e = BinOp(op, e, self.multiplicative())
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.at("*", "/"):
            op = self.take().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            nxt = self.toks[self.i + 1]
            if self.tok.kind == "num" and not (nxt.kind == "op" and nxt.text == "^"):
                return Num(-to_value(self.take().text))
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            t = self.tok
            if self.accept("("):
                exp = self.signed_number()
                self.expect(")")
            else:
                exp = self.signed_number()
            if exp.denominator != 1:
                raise ParseError("exponent must be an integer", t.line, t.col)
            return Pow(base, int(exp))
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Num(to_value(t.text))
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            self.take()
            if t.text in FUNCTIONS and self.at("("):
                self.take()
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[t.text]:
                    raise ParseError(f"{t.text} takes {FUNCTIONS[t.text]} argument(s)", t.line, t.col)
                return Call(t.text, tuple(args))
            return Var(t.text)
        self.fail("expected an expression")


def _resolve(e: Expr, consts: dict[str, Fraction]) -> Expr:
    """Turn references to ``const`` names into ``Sym`` nodes."""
    names = e.free_vars() & consts.keys()
    return e.subst({n: Sym(n) for n in names}) if names else e


def _resolve_stmt(s: Stmt, consts) -> Stmt:
    if isinstance(s, Assign):
        return Assign(s.var, _resolve(s.expr, consts), s.pos)
    if isinstance(s, NondetAssign):
        return NondetAssign(s.var, _resolve(s.lo, consts), _resolve(s.hi, consts), s.pos)
    if isinstance(s, Seq):
        return Seq(_resolve_stmt(s.first, consts), _resolve_stmt(s.second, consts))
    if isinstance(s, If):
        return If(_resolve(s.cond, consts), _resolve_stmt(s.then, consts), _resolve_stmt(s.else_, consts), s.pos)
    if isinstance(s, While):
        return While(_resolve(s.cond, consts), _resolve_stmt(s.body, consts), s.pos)
    return s


def check_program(prog: Program, positions: dict | None = None) -> None:
    """Raise ``SemanticError`` for undeclared names and role violations."""
    roles = {d.name: d.role for d in prog.decls}
    consts = dict(prog.consts)
    for node in walk(prog.body):
        pos = getattr(node, "pos", None) or (0, 0)
        for e in stmt_exprs(node):
            for v in sorted(e.free_vars()):
                if v not in roles:
                    raise SemanticError(f"undeclared variable {v!r}", v, *pos)
        if isinstance(node, (Assign, NondetAssign)):
            v = node.var
            if v in consts:
                raise SemanticError(f"cannot assign to constant {v!r}", v, *pos)
            if v not in roles:
                raise SemanticError(f"undeclared variable {v!r}", v, *pos)
            if roles[v] == "param":
                raise SemanticError(f"parameter {v!r} is read-only", v, *pos)
            if roles[v] == "input":
                raise SemanticError(f"input {v!r} is read-only", v, *pos)
            if isinstance(node, NondetAssign) and prog.grid(v) is None:
                raise SemanticError(f"nondeterministic target {v!r} needs a declared domain", v, *pos)


def parse(source: str) -> Program:
    p = _Parser(source)
    decls, consts, body, positions = p.program()
    body = _resolve_stmt(body, consts)
    prog = Program(tuple(decls), body, tuple(consts.items()))
    check_program(prog, positions)
    return prog


def parse_expr(source: str, consts: dict[str, Fraction] | None = None) -> Expr:
    """Parse a standalone boolean or arithmetic expression."""
    p = _Parser(source)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    return _resolve(e, consts or {})
