"""Lexing, parsing, and desugaring of annotated mini-C.

The grammar is the usual C compound-statement grammar with two additions:
an optional comment list may open a block, and an optional comment list may
follow each block item.  Annotation comments (``/*@ ... */`` and
``//@ ...``) survive lexing as payload tokens; ordinary comments are
dropped.  Attachment is normalized to two wrappers: a comment list at block
start attaches left on the first statement, every other list attaches
right on the statement it follows.

``desugar`` lowers the three C loop forms to the general
``loop (incr) { body }`` shape, hoists local declarations (initializers
become leading assignments), and preserves every comment wrapper at the
position of its carrier statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ast_core import (
    AssignLoad, AssignStore, AssignVar, Break, CExpr, CInt, CNull, CVar,
    CmpEq, CmpNe, CondExpr, Continue, FieldDecl, Loc, NOLOC, RecordDecl,
    Return, Skip, Truthy,
)
from .errors import LexError, ParseError, UnsupportedFeature


# ============================================================
# Tokens
# ============================================================

KEYWORDS = {
    "struct", "if", "else", "while", "for", "do", "break", "continue",
    "return", "NULL", "void", "int", "unsigned",
    # recognized only to report them as unsupported with a good message
    "switch", "goto", "case", "default", "sizeof", "typedef",
}

PUNCTS2 = ("->", "==", "!=")
PUNCTS1 = "{}()[];,*=!<>&+-/%."


@dataclass(frozen=True)
class Token:
    kind: str   # "ident" | "int" | "punct" | "keyword" | "comment" | "eof"
    text: str
    line: int
    col: int

    def loc(self) -> Loc:
        return Loc(self.line, self.col)


def lex(source: str) -> list[Token]:
    """Tokenize; annotation comments become single payload tokens."""
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if source.startswith("//", i):
            is_ann = source.startswith("//@", i)
            l0, c0 = line, col
            j = source.find("\n", i)
            end = n if j < 0 else j
            if is_ann:
                toks.append(Token("comment", source[i + 3:end], l0, c0))
            advance(end - i)
            continue
        if source.startswith("/*", i):
            is_ann = source.startswith("/*@", i)
            l0, c0 = line, col
            j = source.find("*/", i + 2)
            if j < 0:
                raise LexError("unterminated comment", l0, c0)
            if is_ann:
                toks.append(Token("comment", source[i + 3:j], l0, c0))
            advance(j + 2 - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "keyword" if text in KEYWORDS else "ident"
            toks.append(Token(kind, text, line, col))
            advance(j - i)
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            toks.append(Token("int", source[i:j], line, col))
            advance(j - i)
            continue
        two = source[i:i + 2]
        if two in PUNCTS2:
            toks.append(Token("punct", two, line, col))
            advance(2)
            continue
        if ch in PUNCTS1:
            toks.append(Token("punct", ch, line, col))
            advance(1)
            continue
        raise LexError(f"illegal character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


# ============================================================
# Comment-carrying statement forms
# ============================================================

@dataclass(frozen=True)
class CommentL:
    """An annotation comment attached on the left of its carrier statement."""

    text: str
    stmt: "CStmt"
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CommentR:
    """An annotation comment attached on the right of its carrier statement."""

    stmt: "CStmt"
    text: str
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CSeq:
    first: "CStmt"
    rest: "CStmt"


@dataclass(frozen=True)
class CIf:
    cond: CondExpr
    then: "CStmt"
    els: "CStmt"
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CLoop:
    body: "CStmt"
    incr: "CStmt"
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CLoopInv:
    """A loop whose invariant payloads have been attached by the builder."""

    inv_text: str
    con_inv_text: str
    inv_loc: Loc
    body: "CStmt"
    incr: "CStmt"
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


# surface forms removed by desugar
@dataclass(frozen=True)
class CBlock:
    items: tuple
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CWhile:
    cond: CondExpr
    body: "CStmt"
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CFor:
    init: Optional["CStmt"]
    cond: Optional[CondExpr]
    update: Optional["CStmt"]
    body: "CStmt"
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CDoWhile:
    body: "CStmt"
    cond: CondExpr
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class CDecl:
    """Local declarations; desugar hoists them into the function's table."""

    decls: tuple          # of (name, CType, Optional[CExpr] initializer)
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


# ============================================================
# Types, functions, programs
# ============================================================

@dataclass(frozen=True)
class CType:
    kind: str                      # "void" | "value" | "pointer"
    record: Optional[str] = None   # record name when kind == "pointer"

    def __str__(self) -> str:
        if self.kind == "pointer":
            return f"struct {self.record} *"
        return {"void": "void", "value": "int"}[self.kind]


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple      # of (name, CType)
    locals: tuple      # of (name, CType); filled by desugar
    ret_type: CType
    body: object       # CStmt
    loc: Loc = field(default=NOLOC, compare=False, repr=False)

    def var_types(self) -> dict[str, CType]:
        return dict(self.params) | dict(self.locals)


@dataclass(frozen=True)
class Program:
    records: tuple     # of RecordDecl
    functions: tuple   # of FuncDef

    def record(self, name: str) -> RecordDecl:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)


# ============================================================
# Parser
# ============================================================

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    # --- token utilities ---

    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None, ahead=0) -> bool:
        t = self.peek(ahead)
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if not self.at(kind, text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text!r}",
                             t.line, t.col, expected=(want,))
        return self.next()

    def unsupported(self, feature: str, tok: Token):
        raise UnsupportedFeature(feature, tok.line, tok.col)

    # --- program structure ---

    def program(self) -> Program:
        records, functions = [], []
        while not self.at("eof"):
            if self.at("keyword", "typedef"):
                self.unsupported("typedef", self.peek())
            if self.at("keyword", "struct") and self.at("punct", "{", ahead=2):
                records.append(self.record_decl())
            else:
                functions.append(self.func_def())
        names = [r.name for r in records] + [f.name for f in functions]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ParseError(f"duplicate declaration of {sorted(dup)[0]!r}")
        return Program(tuple(records), tuple(functions))

    def record_decl(self) -> RecordDecl:
        self.expect("keyword", "struct")
        name = self.expect("ident").text
        self.expect("punct", "{")
        fields = []
        while not self.at("punct", "}"):
            fields.append(self.field_decl())
        self.expect("punct", "}")
        self.expect("punct", ";")
        fnames = [f.name for f in fields]
        if len(set(fnames)) != len(fnames):
            raise ParseError(f"duplicate field name in struct {name}")
        return RecordDecl(name, tuple(fields))

    def field_decl(self) -> FieldDecl:
        if self.at("keyword", "int") or self.at("keyword", "unsigned"):
            self.next()
            fname = self.expect("ident").text
            self.expect("punct", ";")
            return FieldDecl(fname, "value")
        self.expect("keyword", "struct")
        target = self.expect("ident").text
        self.expect("punct", "*")
        fname = self.expect("ident").text
        self.expect("punct", ";")
        return FieldDecl(fname, "pointer", target)

    def type_spec(self) -> CType:
        if self.at("keyword", "void"):
            self.next()
            return CType("void")
        if self.at("keyword", "int") or self.at("keyword", "unsigned"):
            self.next()
            return CType("value")
        self.expect("keyword", "struct")
        rec = self.expect("ident").text
        return CType("pointer", rec)  # '*' handled by callers

    def func_def(self) -> FuncDef:
        start = self.peek()
        ret = self.type_spec()
        if ret.kind == "pointer":
            self.expect("punct", "*")
        name = self.expect("ident").text
        self.expect("punct", "(")
        params = []
        if not self.at("punct", ")"):
            if self.at("keyword", "void") and self.at("punct", ")", ahead=1):
                self.next()
            else:
                while True:
                    ptype = self.type_spec()
                    if ptype.kind == "pointer":
                        self.expect("punct", "*")
                    if ptype.kind == "void":
                        raise ParseError("void parameter", self.peek().line, self.peek().col)
                    pname = self.expect("ident").text
                    params.append((pname, ptype))
                    if not self.at("punct", ","):
                        break
                    self.next()
        self.expect("punct", ")")
        body = self.compound()
        return FuncDef(name, tuple(params), (), ret, body, start.loc())

    # --- statements ---

    def comment_list(self) -> list[Token]:
        out = []
        while self.at("comment"):
            out.append(self.next())
        return out

    def compound(self):
        lb = self.expect("punct", "{")
        leading = self.comment_list()
        items = []
        while not self.at("punct", "}"):
            stmt = self.block_item()
            for c in self.comment_list():
                stmt = CommentR(stmt, c.text, c.loc())
            items.append(stmt)
        self.expect("punct", "}")
        if not items:
            anchor = Skip(lb.loc())
        else:
            anchor = items[0]
        for c in reversed(leading):
            anchor = CommentL(c.text, anchor, c.loc())
        if not items:
            items = [anchor]
        else:
            items[0] = anchor
        return CBlock(tuple(items), lb.loc())

    def block_item(self):
        t = self.peek()
        if t.kind == "keyword" and t.text in ("struct", "int", "unsigned"):
            return self.declaration()
        return self.statement()

    def declaration(self) -> CDecl:
        start = self.peek()
        base = self.type_spec()
        decls = []
        while True:
            if base.kind == "pointer":
                self.expect("punct", "*")
            name = self.expect("ident").text
            init = None
            if self.at("punct", "="):
                self.next()
                init = self.unary()
            decls.append((name, base, init))
            if not self.at("punct", ","):
                break
            self.next()
        self.expect("punct", ";")
        return CDecl(tuple(decls), start.loc())

    def statement(self):
        t = self.peek()
        if t.kind == "punct" and t.text == "{":
            return self.compound()
        if t.kind == "punct" and t.text == ";":
            self.next()
            return Skip(t.loc())
        if t.kind == "keyword":
            if t.text == "if":
                return self.if_stmt()
            if t.text == "while":
                self.next()
                self.expect("punct", "(")
                cond = self.condition()
                self.expect("punct", ")")
                body = self.statement()
                return CWhile(cond, body, t.loc())
            if t.text == "for":
                return self.for_stmt()
            if t.text == "do":
                self.next()
                body = self.statement()
                self.expect("keyword", "while")
                self.expect("punct", "(")
                cond = self.condition()
                self.expect("punct", ")")
                self.expect("punct", ";")
                return CDoWhile(body, cond, t.loc())
            if t.text == "break":
                self.next()
                self.expect("punct", ";")
                return Break(t.loc())
            if t.text == "continue":
                self.next()
                self.expect("punct", ";")
                return Continue(t.loc())
            if t.text == "return":
                self.next()
                expr = None
                if not self.at("punct", ";"):
                    expr = self.unary()
                self.expect("punct", ";")
                return Return(expr, t.loc())
            if t.text in ("switch", "goto"):
                self.unsupported(t.text, t)
        if t.kind == "ident" or (t.kind == "keyword" and t.text == "NULL") or t.kind == "int":
            s = self.simple_assign()
            self.expect("punct", ";")
            return s
        if t.kind == "punct" and t.text == "(":
            self.unsupported("parenthesized expression or cast", t)
        if t.kind == "punct" and t.text == "*":
            self.unsupported("pointer dereference assignment", t)
        raise ParseError(f"unexpected token {t.text!r}", t.line, t.col,
                         expected=("statement",))

    def if_stmt(self):
        t = self.expect("keyword", "if")
        self.expect("punct", "(")
        cond = self.condition()
        self.expect("punct", ")")
        then = self.statement()
        els: object = Skip(t.loc())
        if self.at("keyword", "else"):
            self.next()
            els = self.statement()
        return CIf(cond, then, els, t.loc())

    def for_stmt(self):
        t = self.expect("keyword", "for")
        self.expect("punct", "(")
        init = None
        if not self.at("punct", ";"):
            init = self.simple_assign(for_init=True)
        self.expect("punct", ";")
        cond = None
        if not self.at("punct", ";"):
            cond = self.condition()
        self.expect("punct", ";")
        update = None
        if not self.at("punct", ")"):
            update = self.simple_assign()
        self.expect("punct", ")")
        body = self.statement()
        return CFor(init, cond, update, body, t.loc())

    def simple_assign(self, for_init: bool = False):
        t = self.peek()
        lhs = self.unary()
        if self.at("punct", "->"):
            self.next()
            fieldname = self.expect("ident").text
            self.expect("punct", "=")
            rhs = self.unary()
            return AssignStore(lhs, fieldname, rhs, t.loc(), for_init)
        if not isinstance(lhs, CVar):
            raise ParseError("assignment target must be a variable or a field",
                             t.line, t.col)
        self.expect("punct", "=")
        rhs = self.unary()
        if self.at("punct", "->"):
            self.next()
            fieldname = self.expect("ident").text
            return AssignLoad(lhs.name, rhs, fieldname, t.loc(), for_init)
        return AssignVar(lhs.name, rhs, t.loc(), for_init)

    def unary(self) -> CExpr:
        t = self.peek()
        if t.kind == "ident":
            if self.at("punct", "(", ahead=1):
                self.unsupported("function call", t)
            if self.at("punct", "[", ahead=1):
                self.unsupported("array subscript", t)
            self.next()
            return CVar(t.text)
        if t.kind == "keyword" and t.text == "NULL":
            self.next()
            return CNull()
        if t.kind == "int":
            self.next()
            return CInt(int(t.text))
        if t.kind == "keyword" and t.text == "sizeof":
            self.unsupported("sizeof", t)
        if t.kind == "punct" and t.text == "(":
            self.unsupported("parenthesized expression or cast", t)
        raise ParseError(f"expected expression, found {t.text!r}", t.line, t.col,
                         expected=("expression",))

    def condition(self) -> CondExpr:
        lhs = self.unary()
        if self.at("punct", "=="):
            self.next()
            return CmpEq(lhs, self.unary())
        if self.at("punct", "!="):
            self.next()
            return CmpNe(lhs, self.unary())
        return Truthy(lhs)


def parse_program(tokens: list[Token]) -> Program:
    """Parse a token stream into a program with comment-carrying bodies."""
    return _Parser(tokens).program()


def parse_source(source: str) -> Program:
    return parse_program(lex(source))


# ============================================================
# Desugaring
# ============================================================

def desugar(program: Program) -> Program:
    """Lower the surface forms of every function body.

    While/for/do-while loops become the general loop; declarations are
    hoisted (initializers turn into leading assignments, tagged as for-init
    when they came from a for header); blocks become right-nested sequences.
    Comment wrappers ride with their carrier statements through each rewrite.
    """
    return Program(program.records,
                   tuple(_desugar_func(f) for f in program.functions))


def _desugar_func(f: FuncDef) -> FuncDef:
    hoisted: list[tuple[str, CType]] = []
    body = _desugar_stmt(f.body, hoisted)
    declared = {n for n, _ in f.params} | {n for n, _ in hoisted}
    _check_vars(body, declared, f.name)
    return FuncDef(f.name, f.params, tuple(hoisted), f.ret_type, body, f.loc)


def _desugar_stmt(s, hoisted: list):
    if isinstance(s, CommentL):
        return CommentL(s.text, _desugar_stmt(s.stmt, hoisted), s.loc)
    if isinstance(s, CommentR):
        return CommentR(_desugar_stmt(s.stmt, hoisted), s.text, s.loc)
    if isinstance(s, CBlock):
        items = [_desugar_stmt(i, hoisted) for i in s.items]
        return _seq_of(items, s.loc)
    if isinstance(s, CDecl):
        inits = []
        for name, ctype, init in s.decls:
            hoisted.append((name, ctype))
            if init is not None:
                inits.append(AssignVar(name, init, s.loc))
        return _seq_of(inits, s.loc)
    if isinstance(s, CIf):
        return CIf(s.cond, _desugar_stmt(s.then, hoisted),
                   _desugar_stmt(s.els, hoisted), s.loc)
    if isinstance(s, CWhile):
        body = _desugar_stmt(s.body, hoisted)
        guard = CIf(s.cond, Skip(s.loc), Break(s.loc), s.loc)
        return CLoop(CSeq(guard, body), Skip(s.loc), s.loc)
    if isinstance(s, CFor):
        body = _desugar_stmt(s.body, hoisted)
        if s.cond is not None:
            guard = CIf(s.cond, Skip(s.loc), Break(s.loc), s.loc)
            body = CSeq(guard, body)
        incr = _desugar_stmt(s.update, hoisted) if s.update is not None else Skip(s.loc)
        loop = CLoop(body, incr, s.loc)
        if s.init is not None:
            return CSeq(_desugar_stmt(s.init, hoisted), loop)
        return loop
    if isinstance(s, CDoWhile):
        body = _desugar_stmt(s.body, hoisted)
        guard = CIf(s.cond, Skip(s.loc), Break(s.loc), s.loc)
        return CLoop(CSeq(body, guard), Skip(s.loc), s.loc)
    if isinstance(s, CLoop):
        return CLoop(_desugar_stmt(s.body, hoisted),
                     _desugar_stmt(s.incr, hoisted), s.loc)
    if isinstance(s, CSeq):
        return CSeq(_desugar_stmt(s.first, hoisted), _desugar_stmt(s.rest, hoisted))
    return s


def _seq_of(items: list, loc: Loc):
    if not items:
        return Skip(loc)
    out = items[-1]
    for s in reversed(items[:-1]):
        out = CSeq(s, out)
    return out


def _check_vars(s, declared: set, fname: str):
    """Every program variable mentioned by a statement must be declared."""
    def expr_vars(e):
        return [e.name] if isinstance(e, CVar) else []

    def cond_vars(c):
        if isinstance(c, Truthy):
            return expr_vars(c.expr)
        return expr_vars(c.lhs) + expr_vars(c.rhs)

    def walk(node):
        if isinstance(node, (CommentL, CommentR)):
            walk(node.stmt)
        elif isinstance(node, CSeq):
            walk(node.first)
            walk(node.rest)
        elif isinstance(node, CIf):
            for n in cond_vars(node.cond):
                check(n, node.loc)
            walk(node.then)
            walk(node.els)
        elif isinstance(node, CLoop):
            walk(node.body)
            walk(node.incr)
        elif isinstance(node, AssignVar):
            check(node.dst, node.loc)
            for n in expr_vars(node.src):
                check(n, node.loc)
        elif isinstance(node, AssignLoad):
            check(node.dst, node.loc)
            for n in expr_vars(node.src):
                check(n, node.loc)
        elif isinstance(node, AssignStore):
            for n in expr_vars(node.dst) + expr_vars(node.src):
                check(n, node.loc)
        elif isinstance(node, Return):
            if node.expr is not None:
                for n in expr_vars(node.expr):
                    check(n, node.loc)

    def check(name, loc):
        if name not in declared:
            raise ParseError(f"undeclared variable {name!r} in {fname}",
                             loc.line, loc.col)

    walk(s)


# ============================================================
# Comment stripping
# ============================================================

def strip_comments(s):
    """Remove comment wrappers from a desugared statement tree."""
    from .ast_core import If, Loop, Seq
    if isinstance(s, (CommentL, CommentR)):
        return strip_comments(s.stmt)
    if isinstance(s, CSeq):
        return Seq(strip_comments(s.first), strip_comments(s.rest))
    if isinstance(s, CIf):
        return If(s.cond, strip_comments(s.then), strip_comments(s.els), s.loc)
    if isinstance(s, (CLoop, CLoopInv)):
        return Loop(strip_comments(s.body), strip_comments(s.incr), s.loc)
    if isinstance(s, (CBlock, CWhile, CFor, CDoWhile, CDecl)):
        raise TypeError(f"strip_comments expects a desugared statement, got {type(s).__name__}")
    return s


def comment_payloads(s) -> list[str]:
    """All annotation payload texts in a statement tree, in source order."""
    out: list[str] = []

    def walk(node):
        if isinstance(node, CommentL):
            out.append(node.text)
            walk(node.stmt)
        elif isinstance(node, CommentR):
            walk(node.stmt)
            out.append(node.text)
        elif isinstance(node, CSeq):
            walk(node.first)
            walk(node.rest)
        elif isinstance(node, CBlock):
            for i in node.items:
                walk(i)
        elif isinstance(node, CIf):
            walk(node.then)
            walk(node.els)
        elif isinstance(node, (CLoop, CLoopInv)):
            walk(node.body)
            walk(node.incr)
        elif isinstance(node, CWhile):
            walk(node.body)
        elif isinstance(node, CFor):
            walk(node.body)
        elif isinstance(node, CDoWhile):
            walk(node.body)

    walk(s)
    return out
