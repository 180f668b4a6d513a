"""From comment-carrying statements to well-typed annotated statements.

The builder has five jobs, run in a fixed order per function:

1. extract the With/Require/Ensure function specification from the leading
   annotations;
2. attach the closest preceding Inv annotations to each loop (duplicating a
   single invariant when the increment is skip, rewriting the loop to
   ``loop (skip) { body; incr }`` when the body is continue-free);
3. right-associate all sequences so a Given scopes over the remainder of
   its block;
4. parse every annotation payload into a canonical assertion;
5. generate Given clauses for every existential prefix used as a
   precondition, and check that complex statements followed by code either
   carry an assertion or have exactly one normal exit point.

Assertion payload grammar (see docs/annotations.md):

    asrt  := ["exists" ident+ ","] atom (("&&" | "*") atom)*
    atom  := term ("==" | "!=") term | "ll" "(" term "," term ")"
           | "lseg" "(" term "," term "," term ")"
           | term "|->" "(" term ("," term)* ")" | "emp"
    term  := ident | "NULL" | integer | "nil" | "cons" "(" term "," term ")"
           | "app" "(" term "," term ")" | "rev" "(" term ")"

Bare identifiers that name a declared C variable denote that variable's
value and compile to ``locals`` bindings; sorts of logical names are
inferred from use.  Identifiers may carry trailing primes (``l2'``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .ast_core import (
    AAssert, AGiven, AIf, ALoop, ASeq, AStmt, Assertion, AssignLoad,
    AssignStore, AssignVar, Break, Continue, Eq, FieldDecl, FuncSpec,
    IntLit, ListPred, ListSeg, Loc, LogVar, Neq, NIL, NOLOC, NULL,
    PointsTo, RecordDecl, RET_NAME, Return, Skip, Sort, Term,
    erase_annotations, find_unbound, fresh_name, rename_exists, AppSeq,
    ConsSeq, RevSeq, stmt_loc,
)
from .cparse import (
    CDoWhile, CBlock, CDecl, CFor, CIf, CLoop, CLoopInv, CSeq, CWhile,
    CommentL, CommentR, FuncDef, Program, strip_comments,
)
from .errors import (
    AmbiguousInvariant, AnnParseError, AnnocError, BuildError, Diagnostic,
    MissingInvariant, SingleInvariantUnsupported, SortError, SpecError,
)


# ============================================================
# Annotation payload classification
# ============================================================

ANN_KEYWORDS = ("With", "Require", "Ensure", "Inv", "Assert")


@dataclass(frozen=True)
class RawAnnotation:
    kind: str     # one of ANN_KEYWORDS
    text: str     # payload after the keyword
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


def classify_payload(text: str, loc: Loc = NOLOC) -> RawAnnotation:
    """Split an annotation comment body into its leading keyword and payload."""
    stripped = text.strip()
    for kw in ANN_KEYWORDS:
        if stripped == kw or (stripped.startswith(kw) and
                              not (stripped[len(kw):len(kw) + 1].isalnum() or
                                   stripped[len(kw):len(kw) + 1] == "_")):
            return RawAnnotation(kw, stripped[len(kw):].strip(), loc)
    raise AnnParseError(
        f"annotation must start with one of {', '.join(ANN_KEYWORDS)}: {stripped[:40]!r}",
        loc.line, loc.col)


# ============================================================
# Assertion parsing
# ============================================================

_ASRT_PUNCTS = ("|->", "==", "!=", "&&", "(", ")", ",", "*")


def _lex_payload(text: str, loc: Loc) -> list[tuple[str, str]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        matched = False
        for p in _ASRT_PUNCTS:
            if text.startswith(p, i):
                toks.append(("punct", p))
                i += len(p)
                matched = True
                break
        if matched:
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            while j < n and text[j] == "'":
                j += 1
            toks.append(("ident", text[i:j]))
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(("int", text[i:j]))
            i = j
            continue
        raise AnnParseError(f"bad character {ch!r} in annotation", loc.line, loc.col)
    toks.append(("end", ""))
    return toks


class _SortSolver:
    """Union-find over logical names and the two sort constants."""

    VAL = "#Val"
    SEQ = "#Seq"

    def __init__(self, loc: Loc):
        self.parent: dict[str, str] = {self.VAL: self.VAL, self.SEQ: self.SEQ}
        self.loc = loc

    def _find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def unify(self, a: str, b: str, name_hint: str = ""):
        ra, rb = self._find(a), self._find(b)
        if ra == rb:
            return
        if ra.startswith("#") and rb.startswith("#"):
            raise SortError(
                f"name {name_hint or b!r} used both as a value and as a sequence",
                self.loc.line, self.loc.col)
        if rb.startswith("#"):
            ra, rb = rb, ra
        self.parent[rb] = ra

    def sort_of(self, name: str) -> Sort:
        r = self._find(name)
        if r == self.SEQ:
            return Sort.SEQ
        return Sort.VAL  # unconstrained defaults to Val


# raw term tree built before program-variable substitution
@dataclass(frozen=True)
class _RawIdent:
    name: str


_RawTerm = Union["_RawIdent", Term, tuple]


class _AsrtParser:
    """Recursive-descent parser for one assertion payload."""

    def __init__(self, text: str, scope: "AsrtScope", loc: Loc):
        self.toks = _lex_payload(text, loc)
        self.pos = 0
        self.scope = scope
        self.loc = loc
        self.sorts = _SortSolver(loc)

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        if t[0] != "end":
            self.pos += 1
        return t

    def expect_punct(self, p: str):
        k, v = self.next()
        if k != "punct" or v != p:
            raise AnnParseError(f"expected {p!r} in annotation, found {v!r}",
                                self.loc.line, self.loc.col)

    def at_punct(self, p: str) -> bool:
        k, v = self.peek()
        return k == "punct" and v == p

    # --- terms ---

    def term(self):
        k, v = self.next()
        if k == "int":
            return IntLit(int(v))
        if k != "ident":
            raise AnnParseError(f"expected a term, found {v!r}",
                                self.loc.line, self.loc.col)
        if v == "NULL":
            return NULL
        if v == "nil":
            return NIL
        if v in ("cons", "app", "rev"):
            self.expect_punct("(")
            a = self.term()
            if v == "rev":
                self.expect_punct(")")
                self.constrain(a, self.sorts.SEQ)
                return RevSeq(self.wrap(a))
            self.expect_punct(",")
            b = self.term()
            self.expect_punct(")")
            if v == "cons":
                self.constrain(a, self.sorts.VAL)
                self.constrain(b, self.sorts.SEQ)
                return ConsSeq(self.wrap(a), self.wrap(b))
            self.constrain(a, self.sorts.SEQ)
            self.constrain(b, self.sorts.SEQ)
            return AppSeq(self.wrap(a), self.wrap(b))
        return _RawIdent(v)

    def wrap(self, t):
        """Replace raw identifiers with terms (program vars become value vars)."""
        if isinstance(t, _RawIdent):
            if t.name in self.scope.progvars:
                return LogVar(self.scope.value_var(t.name, self))
            return LogVar(t.name)
        return t

    def sort_node(self, t) -> str:
        """Sort-solver node for a parsed (pre-wrap) term."""
        if isinstance(t, _RawIdent):
            if t.name in self.scope.progvars:
                return self.sorts.VAL
            return t.name
        if isinstance(t, (ConsSeq, AppSeq, RevSeq)) or t == NIL:
            return self.sorts.SEQ
        if isinstance(t, LogVar):
            return t.name
        return self.sorts.VAL

    def constrain(self, t, node: str):
        hint = t.name if isinstance(t, _RawIdent) else str(t)
        self.sorts.unify(self.sort_node(t), node, hint)

    # --- atoms / assertion ---

    def parse(self) -> Assertion:
        exists: list[str] = []
        k, v = self.peek()
        if k == "ident" and v == "exists":
            self.next()
            while True:
                k, v = self.next()
                if k != "ident":
                    raise AnnParseError("expected binder name after 'exists'",
                                        self.loc.line, self.loc.col)
                if v in self.scope.progvars:
                    raise AnnParseError(
                        f"existential {v!r} collides with a program variable",
                        self.loc.line, self.loc.col)
                exists.append(v)
                if self.at_punct(","):
                    self.next()
                    break
                if self.peek()[0] == "end":
                    raise AnnParseError("missing ',' after existential binders",
                                        self.loc.line, self.loc.col)

        self.scope.open_assertion(exists, self)
        atoms = [self.atom()]
        while self.at_punct("&&") or self.at_punct("*"):
            self.next()
            atoms.append(self.atom())
        if self.peek()[0] != "end":
            raise AnnParseError(f"trailing tokens in annotation: {self.peek()[1]!r}",
                                self.loc.line, self.loc.col)

        pure, spatial = [], []
        for a in atoms:
            if a is None:
                continue  # emp
            if isinstance(a, (Eq, Neq)):
                pure.append(a)
            elif isinstance(a, tuple) and a[0] == "local":
                self.scope.bind_local(a[1], a[2], pure)
            else:
                spatial.append(a)
        return self.scope.close_assertion(exists, pure, spatial, self)

    def atom(self):
        k, v = self.peek()
        if k == "ident" and v == "emp":
            self.next()
            return None
        if k == "ident" and v == "ll":
            self.next()
            self.expect_punct("(")
            p = self.term()
            self.expect_punct(",")
            l = self.term()
            self.expect_punct(")")
            self.constrain(p, self.sorts.VAL)
            self.constrain(l, self.sorts.SEQ)
            return ListPred(self.wrap(p), self.wrap(l))
        if k == "ident" and v == "lseg":
            self.next()
            self.expect_punct("(")
            p = self.term()
            self.expect_punct(",")
            q = self.term()
            self.expect_punct(",")
            l = self.term()
            self.expect_punct(")")
            self.constrain(p, self.sorts.VAL)
            self.constrain(q, self.sorts.VAL)
            self.constrain(l, self.sorts.SEQ)
            return ListSeg(self.wrap(p), self.wrap(q), self.wrap(l))
        lhs = self.term()
        if self.at_punct("|->"):
            self.next()
            self.expect_punct("(")
            vals = [self.term()]
            while self.at_punct(","):
                self.next()
                vals.append(self.term())
            self.expect_punct(")")
            self.constrain(lhs, self.sorts.VAL)
            for t in vals:
                self.constrain(t, self.sorts.VAL)
            rec = self.scope.record_with_arity(len(vals), self.loc)
            fields = tuple((f.name, self.wrap(t)) for f, t in zip(rec.fields, vals))
            return PointsTo(self.wrap(lhs), rec.name, fields)
        k2, op = self.next()
        if k2 != "punct" or op not in ("==", "!="):
            raise AnnParseError(f"expected '==', '!=' or a spatial atom, found {op!r}",
                                self.loc.line, self.loc.col)
        rhs = self.term()
        self.constrain(lhs, self.sort_node(rhs))
        if op == "==":
            # a bare program variable on one side is a value binding
            for a, b in ((lhs, rhs), (rhs, lhs)):
                if isinstance(a, _RawIdent) and a.name in self.scope.progvars:
                    return ("local", a.name, self.wrap(b))
            return Eq(self.wrap(lhs), self.wrap(rhs))
        return Neq(self.wrap(lhs), self.wrap(rhs))


class AsrtScope:
    """Per-function context shared by every parse_assertion call."""

    def __init__(self, progvars, binders, records, taken=None):
        self.progvars = set(progvars)
        self.binders = list(binders)          # ambient (name, Sort) pairs
        self.records = tuple(records)
        self.taken = taken if taken is not None else set(n for n, _ in binders)
        self.evidence: dict[str, Sort] = {}   # inferred sorts of free names
        # per-assertion state
        self._locals: list[tuple[str, Term]] = []
        self._implicits: list[str] = []
        self._valvars: dict[str, str] = {}

    def with_progvars(self, extra) -> "AsrtScope":
        s = AsrtScope(self.progvars | set(extra), self.binders, self.records, self.taken)
        s.evidence = self.evidence
        return s

    def record_with_arity(self, n: int, loc: Loc) -> RecordDecl:
        hits = [r for r in self.records if len(r.fields) == n]
        if len(hits) != 1:
            raise AnnParseError(
                f"cannot resolve '|->' with {n} fields to a unique record type",
                loc.line, loc.col)
        return hits[0]

    # --- per-assertion lifecycle ---

    def open_assertion(self, exists: list[str], parser: _AsrtParser):
        self._locals = []
        self._implicits = []
        self._valvars = {}
        dup = [n for n in exists if exists.count(n) > 1]
        if dup:
            raise AnnParseError(f"duplicate existential {dup[0]!r}",
                                parser.loc.line, parser.loc.col)
        self._exists_set = set(exists)

    def value_var(self, progvar: str, parser: _AsrtParser) -> str:
        """Implicit existential holding a program variable's value."""
        if progvar in self._valvars:
            return self._valvars[progvar]
        name = fresh_name(progvar, self.taken | self._exists_set)
        self.taken.add(name)
        self._valvars[progvar] = name
        self._implicits.append(name)
        parser.sorts.unify(name, parser.sorts.VAL, name)
        if self.local_term(progvar) is None:
            self._locals.append((progvar, LogVar(name)))
        return name

    def local_term(self, progvar: str) -> Optional[Term]:
        for n, t in self._locals:
            if n == progvar:
                return t
        return None

    def bind_local(self, progvar: str, value: Term, pure: list):
        prev = self.local_term(progvar)
        if prev is None:
            self._locals.append((progvar, value))
        else:
            pure.append(Eq(prev, value))

    def close_assertion(self, exists, pure, spatial, parser: _AsrtParser) -> Assertion:
        names = exists + self._implicits
        binder_list = tuple((n, parser.sorts.sort_of(n)) for n in names)
        a = Assertion(binder_list, tuple(self._locals), tuple(pure), tuple(spatial))
        ambient = {n for n, _ in self.binders}
        for n in (set(a.exists_names()) - set(self._implicits)):
            if n in ambient:
                raise AnnParseError(
                    f"existential {n!r} shadows an enclosing logical binder; rename it",
                    parser.loc.line, parser.loc.col)
        for n in sorted(set(_assertion_names(a)) - set(a.exists_names())):
            if not _constrained(parser, n):
                continue  # this assertion gives no sort evidence for n
            s = parser.sorts.sort_of(n)
            prev = self.evidence.get(n)
            if prev is not None and prev is not s:
                raise SortError(f"name {n!r} used at two different sorts",
                                parser.loc.line, parser.loc.col)
            self.evidence[n] = s
        return a


def _constrained(parser: _AsrtParser, name: str) -> bool:
    return parser.sorts._find(name).startswith("#")


def _assertion_names(a: Assertion) -> list[str]:
    from .ast_core import free_logical_vars
    return free_logical_vars(a)


def parse_assertion(payload: str, scope: AsrtScope, loc: Loc = NOLOC) -> Assertion:
    """Parse one assertion payload into a canonical Assertion."""
    return _AsrtParser(payload, scope, loc).parse()


def parse_binders(payload: str, loc: Loc = NOLOC) -> list[str]:
    """Parse a With payload: identifiers, optionally comma-separated."""
    names = []
    for k, v in _lex_payload(payload, loc)[:-1]:
        if k == "ident":
            names.append(v)
        elif (k, v) == ("punct", ","):
            continue
        else:
            raise AnnParseError(f"bad token {v!r} in With binders", loc.line, loc.col)
    if len(set(names)) != len(names):
        raise AnnParseError("duplicate With binder", loc.line, loc.col)
    return names


# ============================================================
# Flattening comment-carrying blocks
# ============================================================

def _flatten(c) -> list:
    """Block-level items of a statement tree: RawAnnotations and statements."""
    if isinstance(c, RawAnnotation):
        return [c]
    if isinstance(c, CommentL):
        ann = classify_payload(c.text, c.loc)
        return [ann] + _flatten(c.stmt)
    if isinstance(c, CommentR):
        ann = classify_payload(c.text, c.loc)
        return _flatten(c.stmt) + [ann]
    if isinstance(c, CSeq):
        return _flatten(c.first) + _flatten(c.rest)
    return [c]


def _rebuild(items: list):
    out = None
    for s in reversed(items):
        out = s if out is None else CSeq(s, out)
    return out if out is not None else Skip()


# ============================================================
# Function spec extraction
# ============================================================

def extract_funcspec_texts(body) -> tuple[Optional[RawAnnotation], RawAnnotation,
                                          RawAnnotation, object]:
    """Split off the leading With?/Require/Ensure annotations of a body."""
    items = _flatten(body)
    lead: list[RawAnnotation] = []
    rest = list(items)
    while rest and isinstance(rest[0], RawAnnotation) and len(lead) < 3:
        if lead and lead[-1].kind == "Ensure":
            break
        lead.append(rest.pop(0))
    withann: Optional[RawAnnotation] = None
    if lead and lead[0].kind == "With":
        withann = lead.pop(0)
    if len(lead) < 2 or lead[0].kind != "Require" or lead[1].kind != "Ensure":
        got = [a.kind for a in ([withann] if withann else []) + lead]
        first = ([withann] + lead if withann else lead)
        loc = first[0].loc if first else NOLOC
        raise SpecError(
            f"function must start with With?/Require/Ensure annotations, found {got}",
            loc.line, loc.col)
    return withann, lead[0], lead[1], _rebuild(rest)


# ============================================================
# Loop invariant attachment
# ============================================================

def has_continue(c) -> bool:
    """True iff a continue occurs in ``c`` outside any nested loop."""
    if isinstance(c, Continue):
        return True
    if isinstance(c, (CommentL,)):
        return has_continue(c.stmt)
    if isinstance(c, CommentR):
        return has_continue(c.stmt)
    if isinstance(c, CSeq):
        return has_continue(c.first) or has_continue(c.rest)
    if isinstance(c, CIf):
        return has_continue(c.then) or has_continue(c.els)
    if isinstance(c, (CLoop, CLoopInv)):
        return False  # continues in inner loops belong to those loops
    return False


def _is_skip(c) -> bool:
    if isinstance(c, (CommentL, CommentR)):
        return _is_skip(c.stmt)
    return isinstance(c, Skip)


def attach_invariants(c):
    """Attach the nearest preceding Inv annotations to each loop.

    Hoisted for-initializer assignments may sit between the Inv comments and
    their loop; anything else in between is an error.  Two Inv lines become
    (inv, continue-inv); a single line is used twice, after rewriting the
    loop to ``loop (skip) { body; incr }`` when the increment is not skip
    and the body is continue-free.
    """
    items = _flatten(c)
    out: list = []
    pending: list[RawAnnotation] = []
    for it in items:
        if isinstance(it, RawAnnotation):
            if it.kind == "Inv":
                pending.append(it)
            else:
                if pending:
                    raise MissingInvariant(pending[0].loc.line, pending[0].loc.col)
                out.append(it)
            continue
        if isinstance(it, CLoop):
            out.append(_attach_to_loop(it, pending))
            pending = []
            continue
        if pending and not (isinstance(it, AssignVar) and it.for_init) and not _is_skip(it):
            raise MissingInvariant(pending[0].loc.line, pending[0].loc.col)
        out.append(_attach_recurse(it))
    if pending:
        raise MissingInvariant(pending[0].loc.line, pending[0].loc.col)
    return _rebuild(out)


def _attach_recurse(it):
    if isinstance(it, CIf):
        return CIf(it.cond, attach_invariants(it.then), attach_invariants(it.els), it.loc)
    if isinstance(it, CLoop):
        return _attach_to_loop(it, [])
    return it


def _attach_to_loop(loop: CLoop, pending: list[RawAnnotation]) -> CLoopInv:
    if not pending:
        raise MissingInvariant(loop.loc.line, loop.loc.col)
    if len(pending) > 2:
        raise AmbiguousInvariant(len(pending), loop.loc.line, loop.loc.col)
    body, incr = loop.body, loop.incr
    if len(pending) == 2:
        inv, con = pending[0], pending[1]
    else:
        inv = con = pending[0]
        if not _is_skip(incr):
            if has_continue(body):
                raise SingleInvariantUnsupported(loop.loc.line, loop.loc.col)
            body, incr = CSeq(body, incr), Skip(loop.loc)
    return CLoopInv(inv.text, con.text, inv.loc,
                    attach_invariants(body), attach_invariants(incr), loop.loc)


# ============================================================
# Reassociation (comment tree -> annotated tree with raw payloads)
# ============================================================

def reassociate(c) -> AStmt:
    """Flatten nested sequences and fold them from right to left, so every
    sequence node has a single (non-sequence, non-Given) statement on the
    left.  Skips inside sequences are dropped; an all-skip block is Skip.
    Annotation payloads stay as raw text inside the produced nodes.
    """
    items = _flatten(c)
    conv: list = []
    for it in items:
        if isinstance(it, RawAnnotation):
            if it.kind != "Assert":
                raise SpecError(f"{it.kind} annotation is only allowed at the "
                                f"start of a function", it.loc.line, it.loc.col)
            conv.append(AAssert(it.text, it.loc))  # payload parsed later
            continue
        if isinstance(it, Skip):
            continue
        conv.append(_reassoc_stmt(it))
    if not conv:
        return Skip(stmt_loc(c) if not isinstance(c, (CSeq, CommentL, CommentR)) else NOLOC)
    out = conv[-1]
    for s in reversed(conv[:-1]):
        out = ASeq(s, out)
    return out


def _reassoc_stmt(it) -> AStmt:
    if isinstance(it, CIf):
        return AIf(it.cond, reassociate(it.then), reassociate(it.els), it.loc)
    if isinstance(it, CLoopInv):
        return ALoop(it.inv_text, it.con_inv_text,
                     reassociate(it.body), reassociate(it.incr), it.loc)
    if isinstance(it, CLoop):
        raise MissingInvariant(it.loc.line, it.loc.col)
    if isinstance(it, (AssignVar, AssignLoad, AssignStore, Break, Continue, Return, Skip)):
        return it
    raise TypeError(f"unexpected node in reassociate: {type(it).__name__}")


def parse_payloads(c: AStmt, scope: AsrtScope) -> AStmt:
    """Parse every raw annotation payload in the tree into an Assertion."""
    if isinstance(c, AAssert):
        return AAssert(parse_assertion(c.assertion, scope, c.loc), c.loc)
    if isinstance(c, ASeq):
        return ASeq(parse_payloads(c.first, scope), parse_payloads(c.rest, scope))
    if isinstance(c, AIf):
        return AIf(c.cond, parse_payloads(c.then, scope), parse_payloads(c.els, scope), c.loc)
    if isinstance(c, ALoop):
        inv = parse_assertion(c.inv, scope, c.loc)
        con = inv if c.con_inv == c.inv else parse_assertion(c.con_inv, scope, c.loc)
        return ALoop(inv, con, parse_payloads(c.body, scope),
                     parse_payloads(c.incr, scope), c.loc)
    return c


# ============================================================
# Exit counting
# ============================================================

def count_normal_exit(c: AStmt) -> int:
    """Number of normal exit points of an annotated statement: how many
    entailments against the surrounding normal postcondition verifying it
    produces.
    """
    if isinstance(c, AGiven):
        return count_normal_exit(c.body)
    if isinstance(c, ASeq):
        n1 = count_normal_exit(c.first)
        if isinstance(c.rest, Skip):
            return n1
        if n1 == 0:
            return 0
        return count_normal_exit(c.rest)
    if isinstance(c, AIf):
        return count_normal_exit(c.then) + count_normal_exit(c.els)
    if isinstance(c, ALoop):
        return count_break(c.body)
    if isinstance(c, (Break, Continue, Return)):
        return 0
    return 1  # skip, assert, assignment


def count_break(c: AStmt) -> int:
    """Number of break exits of a loop body that reach the enclosing loop."""
    if isinstance(c, AGiven):
        return count_break(c.body)
    if isinstance(c, ASeq):
        n1 = count_break(c.first)
        if count_normal_exit(c.first) == 0:
            return n1  # the rest is unreachable
        return n1 + count_break(c.rest)
    if isinstance(c, AIf):
        return count_break(c.then) + count_break(c.els)
    if isinstance(c, ALoop):
        return 0  # inner breaks belong to the inner loop
    if isinstance(c, Break):
        return 1
    return 0


# ============================================================
# Given generation
# ============================================================

def generate_givens(c: AStmt, ambient) -> AStmt:
    """Insert Given clauses wherever an existential prefix is consumed:
    after each assertion that is used as a precondition (followed by more
    statements), and at the head of loop bodies (for the loop invariant's
    prefix) and of non-skip increments (for the continue invariant's).
    """
    taken = set(n for n, _ in ambient)
    return _givens(c, taken)


def _wrap_givens(binders, body: AStmt, taken: set, loc: Loc) -> AStmt:
    for n, _ in binders:
        if n in taken:
            raise AnnParseError(
                f"existential {n!r} shadows an enclosing logical binder; rename it",
                loc.line, loc.col)
    out = body
    for n, s in reversed(list(binders)):
        out = AGiven(n, s, out, loc)
    return out


def _givens(c: AStmt, taken: set) -> AStmt:
    if isinstance(c, ASeq) and isinstance(c.first, AAssert):
        a = c.first.assertion
        inner = set(n for n, _ in a.exists)
        rest = _givens(c.rest, taken | inner)
        if a.exists:
            rest = _wrap_givens(a.exists, rest, taken, c.first.loc)
        return ASeq(c.first, rest)
    if isinstance(c, ASeq):
        return ASeq(_givens_single(c.first, taken), _givens(c.rest, taken))
    return _givens_single(c, taken)


def _givens_single(c: AStmt, taken: set) -> AStmt:
    if isinstance(c, AIf):
        return AIf(c.cond, _givens(c.then, taken), _givens(c.els, taken), c.loc)
    if isinstance(c, ALoop):
        body = _givens(c.body, taken | set(c.inv.exists_names()))
        if c.inv.exists:
            body = _wrap_givens(c.inv.exists, body, taken, c.loc)
        incr = _givens(c.incr, taken | set(c.con_inv.exists_names()))
        if c.con_inv.exists and not isinstance(c.incr, Skip):
            incr = _wrap_givens(c.con_inv.exists, incr, taken, c.loc)
        return ALoop(c.inv, c.con_inv, body, incr, c.loc)
    return c


# ============================================================
# Postcondition-omission checking
# ============================================================

def check_postconditions(c: AStmt) -> list[Diagnostic]:
    """A complex statement followed by code and not immediately by an
    assertion must have exactly one normal exit point.
    """
    diags: list[Diagnostic] = []

    def head(node):
        return node.first if isinstance(node, ASeq) else node

    def walk(node):
        if isinstance(node, AGiven):
            walk(node.body)
        elif isinstance(node, ASeq):
            first, rest = node.first, node.rest
            if isinstance(first, (AIf, ALoop)) and not isinstance(head(rest), AAssert):
                n = count_normal_exit(first)
                if n != 1:
                    diags.append(Diagnostic(
                        "MissingAssertionAfterComplexStatement",
                        f"statement has {n} normal exit points; write an "
                        f"assertion after it (exactly 1 exit allows omission)",
                        first.loc.line, first.loc.col))
            walk(first)
            walk(rest)
        elif isinstance(node, AIf):
            walk(node.then)
            walk(node.els)
        elif isinstance(node, ALoop):
            walk(node.body)
            walk(node.incr)

    walk(c)
    return diags


# ============================================================
# Whole-program build
# ============================================================

@dataclass(frozen=True)
class BuiltFunction:
    name: str
    spec: FuncSpec
    annotated: AStmt
    plain: object          # Stmt, always erase_annotations(annotated)
    func: FuncDef
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


def list_record_of(records) -> Optional[RecordDecl]:
    """The designated list record: two fields, one value and one
    self-pointer.  None when absent or ambiguous.
    """
    hits = []
    for r in records:
        if len(r.fields) != 2:
            continue
        kinds = {f.kind for f in r.fields}
        if kinds == {"value", "pointer"}:
            ptr = next(f for f in r.fields if f.kind == "pointer")
            if ptr.target == r.name:
                hits.append(r)
    return hits[0] if len(hits) == 1 else None


def build(program: Program) -> list[BuiltFunction]:
    """Run the full annotation-building pipeline on a desugared program."""
    out = []
    errors: list[AnnocError] = []
    for f in program.functions:
        try:
            out.append(build_function(f, program))
        except BuildError as e:
            errors.extend(e.diagnostics)
        except AnnocError as e:
            errors.append(e)
    if errors:
        raise BuildError(errors)
    return out


def build_function(f: FuncDef, program: Program) -> BuiltFunction:
    progvars = {n for n, _ in f.params} | {n for n, _ in f.locals}
    withann, reqann, ensann, body = extract_funcspec_texts(f.body)
    with_names = parse_binders(withann.text, withann.loc) if withann else []
    for n in with_names:
        if n in progvars:
            raise SpecError(f"With binder {n!r} collides with a program variable",
                            withann.loc.line, withann.loc.col)

    # all annotation payloads share one name pool so implicit value variables
    # never collide with user-written logical names anywhere in the function
    logical_idents = _logical_ident_pool(f, progvars)
    scope = AsrtScope(progvars, [(n, Sort.VAL) for n in with_names],
                      program.records, taken=set(with_names) | logical_idents)

    require = parse_assertion(reqann.text, scope, reqann.loc)
    ensure = parse_assertion(ensann.text, scope.with_progvars({RET_NAME}), ensann.loc)

    stripped = attach_invariants(body)
    raw = reassociate(stripped)
    annotated = parse_payloads(raw, scope)

    with_vars = tuple((n, scope.evidence.get(n, Sort.VAL)) for n in with_names)
    spec = FuncSpec(with_vars, require, ensure)

    free_spec = set(_assertion_names(require)) | \
        (set(_assertion_names(ensure)))
    stray = sorted(free_spec - set(with_names))
    if stray:
        raise SpecError(f"Require/Ensure mention unbound logical names {stray}; "
                        f"bind them with With", reqann.loc.line, reqann.loc.col)

    ambient = with_vars + require.exists
    annotated = generate_givens(annotated, ambient)

    diags = list(check_postconditions(annotated))
    unbound = find_unbound(ambient, annotated)
    if unbound is not None:
        name, loc = unbound
        diags.append(Diagnostic("UnboundLogicalVariable",
                                f"assertion uses unbound logical name {name!r}",
                                loc.line, loc.col))
    if diags:
        raise BuildError(diags)

    plain = erase_annotations(annotated)
    return BuiltFunction(f.name, spec, annotated, plain, f, f.loc)


def _logical_ident_pool(f: FuncDef, progvars) -> set:
    """Conservative set of identifiers used logically in any annotation."""
    reserved = {"exists", "NULL", "nil", "cons", "app", "rev", "ll", "lseg",
                "emp"} | set(ANN_KEYWORDS)
    pool: set = set()

    def scan(text: str):
        for k, v in _lex_payload(text, NOLOC)[:-1]:
            if k == "ident" and v not in reserved and v not in progvars:
                pool.add(v)

    def walk(c):
        if isinstance(c, CommentL):
            scan(c.text)
            walk(c.stmt)
        elif isinstance(c, CommentR):
            walk(c.stmt)
            scan(c.text)
        elif isinstance(c, CSeq):
            walk(c.first)
            walk(c.rest)
        elif isinstance(c, CIf):
            walk(c.then)
            walk(c.els)
        elif isinstance(c, (CLoop, CLoopInv)):
            walk(c.body)
            walk(c.incr)

    walk(f.body)
    return pool
