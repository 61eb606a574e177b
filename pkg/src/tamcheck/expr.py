"""Expression and statement language shared by edge guards, updates, template
functions and query state formulae.

The surface syntax follows the usual C-like conventions: integer arithmetic,
comparisons, `&&`/`||`/`!`/`not`/`imply`, array indexing, record fields,
function calls, and bounded quantifiers `forall (i : typename) ...` /
`exists (i : typename) ...`.  Statements (used in updates and function bodies)
are assignments, calls, `if`/`else`, bounded `for (i : typename) { ... }` and
`return`.

This module is purely syntactic: it produces AST nodes with source positions.
Name resolution and compilation to Python happen in `model.py` against a
network's symbol table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class ParseError(Exception):
    """Syntax or resolution error, carrying a position in the source text."""

    def __init__(self, message: str, text: str = "", pos: int = -1):
        self.message = message
        self.text = text
        self.pos = pos
        if pos >= 0:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            super().__init__(f"{message} (line {line}, column {col})")
        else:
            super().__init__(message)


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: int
    pos: int = -1


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: int = -1


@dataclass(frozen=True)
class Name:
    ident: str
    pos: int = -1


@dataclass(frozen=True)
class DeadlockAtom:
    pos: int = -1


# Postfix operation tags: ("call", [args]), ("index", expr), ("attr", name)
@dataclass(frozen=True)
class Postfix:
    base: Name
    ops: tuple
    pos: int = -1


@dataclass(frozen=True)
class Unary:
    op: str  # '-' or 'not'
    operand: object
    pos: int = -1


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object
    pos: int = -1


@dataclass(frozen=True)
class Quant:
    kind: str  # 'forall' or 'exists'
    var: str
    typename: str
    body: object
    pos: int = -1


@dataclass(frozen=True)
class SAssign:
    target: object  # Name or Postfix
    value: object
    pos: int = -1


@dataclass(frozen=True)
class SCall:
    call: Postfix
    pos: int = -1


@dataclass(frozen=True)
class SIf:
    cond: object
    then: tuple
    orelse: tuple
    pos: int = -1


@dataclass(frozen=True)
class SFor:
    var: str
    typename: str
    body: tuple
    pos: int = -1


@dataclass(frozen=True)
class SReturn:
    value: object  # expr or None
    pos: int = -1


@dataclass(frozen=True)
class FuncDef:
    name: str
    ret: str  # 'int', 'bool', 'void' or a typedef name
    params: tuple  # of (name, typename)
    body: tuple
    pos: int = -1


@dataclass(frozen=True)
class SyncRef:
    """A synchronisation annotation `chan[index]!` or `chan?`."""

    channel: str
    index: object  # expr or None for scalar channels
    direction: str  # 'send' or 'receive'
    pos: int = -1


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>-->|&&|\|\||==|!=|<=|>=|[-+*/%<>=!?(),.:;{}\[\]])
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "true", "false", "not", "imply", "forall", "exists", "deadlock",
    "if", "else", "for", "return", "int", "bool", "void",
}


@dataclass
class Token:
    kind: str  # 'num' | 'id' | 'op' | 'kw' | 'eof'
    text: str
    pos: int


def tokenize(text: str) -> list:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", text, i)
        i = m.end()
        if m.lastgroup in ("ws", "comment"):
            continue
        kind = m.lastgroup
        value = m.group()
        if kind == "id" and value in KEYWORDS:
            kind = "kw"
        tokens.append(Token(kind, value, m.start()))
    tokens.append(Token("eof", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# Parser

class Parser:
    """Recursive-descent parser over a token list.

    Precedence, loosest to tightest: imply (right-assoc), ||, &&, unary
    not / quantifiers, comparison, additive, multiplicative, unary minus,
    postfix.  Quantifier bodies extend as far to the right as possible, so
    `forall (i : t) p(i) imply q(i)` quantifies the whole implication.
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers

    def peek(self, offset: int = 0) -> Token:
        j = min(self.i + offset, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("op", "kw")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.accept(text):
            raise ParseError(f"expected {text!r}, found {tok.text!r}", self.text, tok.pos)
        return tok

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "id":
            raise ParseError(f"expected identifier, found {tok.text!r}", self.text, tok.pos)
        return self.next()

    def done(self) -> bool:
        return self.peek().kind == "eof"

    # -- expressions

    def expression(self):
        return self.imply_expr()

    def imply_expr(self):
        left = self.or_expr()
        if self.at("imply"):
            pos = self.next().pos
            right = self.imply_expr()
            return Bin("imply", left, right, pos)
        return left

    def or_expr(self):
        left = self.and_expr()
        while self.at("||"):
            pos = self.next().pos
            left = Bin("or", left, self.and_expr(), pos)
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.at("&&"):
            pos = self.next().pos
            left = Bin("and", left, self.not_expr(), pos)
        return left

    def not_expr(self):
        tok = self.peek()
        if self.accept("not") or self.accept("!"):
            return Unary("not", self.not_expr(), tok.pos)
        if tok.text in ("forall", "exists") and tok.kind == "kw":
            self.next()
            self.expect("(")
            var = self.expect_ident().text
            self.expect(":")
            typename = self.expect_ident().text
            self.expect(")")
            body = self.imply_expr()  # maximal scope
            return Quant(tok.text, var, typename, body, tok.pos)
        return self.comparison()

    def comparison(self):
        left = self.additive()
        tok = self.peek()
        if tok.text in ("==", "!=", "<", "<=", ">", ">="):
            self.next()
            return Bin(tok.text, left, self.additive(), tok.pos)
        return left

    def additive(self):
        left = self.multiplicative()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            tok = self.next()
            left = Bin(tok.text, left, self.multiplicative(), tok.pos)
        return left

    def multiplicative(self):
        left = self.unary()
        while self.peek().text in ("*", "/", "%") and self.peek().kind == "op":
            tok = self.next()
            left = Bin(tok.text, left, self.unary(), tok.pos)
        return left

    def unary(self):
        tok = self.peek()
        if self.accept("-"):
            return Unary("-", self.unary(), tok.pos)
        return self.postfix()

    def postfix(self):
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Num(int(tok.text), tok.pos)
        if tok.kind == "kw":
            if self.accept("true"):
                return BoolLit(True, tok.pos)
            if self.accept("false"):
                return BoolLit(False, tok.pos)
            if self.accept("deadlock"):
                return DeadlockAtom(tok.pos)
            raise ParseError(f"unexpected keyword {tok.text!r}", self.text, tok.pos)
        if self.accept("("):
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind != "id":
            raise ParseError(f"unexpected token {tok.text!r}", self.text, tok.pos)
        base = Name(self.next().text, tok.pos)
        ops = []
        while True:
            if self.at("("):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expression())
                    while self.accept(","):
                        args.append(self.expression())
                self.expect(")")
                ops.append(("call", tuple(args)))
            elif self.at("["):
                self.next()
                idx = self.expression()
                self.expect("]")
                ops.append(("index", idx))
            elif self.at(".") :
                self.next()
                attr = self.expect_ident().text
                ops.append(("attr", attr))
            else:
                break
        if not ops:
            return base
        return Postfix(base, tuple(ops), tok.pos)

    # -- statements

    def statement(self):
        tok = self.peek()
        if self.accept("if"):
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.stmt_or_block()
            orelse = ()
            if self.accept("else"):
                orelse = self.stmt_or_block()
            return SIf(cond, then, orelse, tok.pos)
        if self.accept("for"):
            self.expect("(")
            var = self.expect_ident().text
            self.expect(":")
            typename = self.expect_ident().text
            self.expect(")")
            body = self.stmt_or_block()
            return SFor(var, typename, body, tok.pos)
        if self.accept("return"):
            value = None
            if not (self.at(";") or self.done() or self.at("}")):
                value = self.expression()
            self.accept(";")
            return SReturn(value, tok.pos)
        # assignment or bare call
        target = self.postfix()
        if self.accept("="):
            value = self.expression()
            self.accept(";")
            return SAssign(target, value, tok.pos)
        self.accept(";")
        if isinstance(target, Postfix) and target.ops and target.ops[-1][0] == "call":
            return SCall(target, tok.pos)
        raise ParseError("expected assignment or call", self.text, tok.pos)

    def stmt_or_block(self) -> tuple:
        if self.accept("{"):
            stmts = []
            while not self.accept("}"):
                if self.done():
                    raise ParseError("unterminated block", self.text, self.peek().pos)
                stmts.append(self.statement())
            return tuple(stmts)
        return (self.statement(),)

    def statement_list(self, separators=(",", ";")) -> tuple:
        stmts = []
        while not self.done():
            stmts.append(self.statement())
            while self.peek().text in separators and self.peek().kind == "op":
                self.next()
        return tuple(stmts)

    # -- function definitions

    def function_def(self) -> FuncDef:
        tok = self.peek()
        if tok.kind not in ("id", "kw"):
            raise ParseError("expected return type", self.text, tok.pos)
        ret = self.next().text
        name = self.expect_ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptype = self.next().text
                pname = self.expect_ident().text
                params.append((pname, ptype))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("{")
        body = []
        while not self.accept("}"):
            if self.done():
                raise ParseError("unterminated function body", self.text, self.peek().pos)
            body.append(self.statement())
        return FuncDef(name, ret, tuple(params), tuple(body), tok.pos)


def parse_expression(text: str):
    """Parse a single expression; the whole text must be consumed."""
    p = Parser(text)
    e = p.expression()
    if not p.done():
        raise ParseError(f"trailing input {p.peek().text!r}", text, p.peek().pos)
    return e


def parse_update(text: str) -> tuple:
    """Parse a comma/semicolon separated statement list (an edge update)."""
    p = Parser(text)
    return p.statement_list()


def parse_function(text: str) -> FuncDef:
    p = Parser(text)
    f = p.function_def()
    if not p.done():
        raise ParseError(f"trailing input {p.peek().text!r}", text, p.peek().pos)
    return f


_SYNC_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*(\[(.*)\])?\s*([!?])\s*$", re.DOTALL)


def parse_sync(text: str) -> SyncRef:
    m = _SYNC_RE.match(text)
    if not m:
        raise ParseError(f"malformed synchronisation {text!r}", text, 0)
    channel, _, idx_text, mark = m.groups()
    index = parse_expression(idx_text) if idx_text is not None else None
    direction = "send" if mark == "!" else "receive"
    return SyncRef(channel, index, direction, 0)


def walk(node):
    """Yield every AST node in a tree (expressions and statements)."""
    yield node
    if isinstance(node, Postfix):
        yield from walk(node.base)
        for kind, payload in node.ops:
            if kind == "call":
                for a in payload:
                    yield from walk(a)
            elif kind == "index":
                yield from walk(payload)
    elif isinstance(node, Unary):
        yield from walk(node.operand)
    elif isinstance(node, Bin):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Quant):
        yield from walk(node.body)
    elif isinstance(node, SAssign):
        yield from walk(node.target)
        yield from walk(node.value)
    elif isinstance(node, SCall):
        yield from walk(node.call)
    elif isinstance(node, SIf):
        yield from walk(node.cond)
        for s in node.then:
            yield from walk(s)
        for s in node.orelse:
            yield from walk(s)
    elif isinstance(node, SFor):
        for s in node.body:
            yield from walk(s)
    elif isinstance(node, SReturn):
        if node.value is not None:
            yield from walk(node.value)
    elif isinstance(node, FuncDef):
        for s in node.body:
            yield from walk(s)
