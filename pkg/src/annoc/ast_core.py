"""Core data model: logical terms, symbolic-heap assertions, and statement ASTs.

Three statement languages share their leaf statements (Skip, the three
assignment forms, Break, Continue, Return):

* ``Stmt``   -- the plain mini-C statement tree (Seq / If / Loop).
* ``AStmt``  -- the annotated tree: adds AAssert, AGiven, and loops carrying
  their two invariants; sequences are right-associated so that a Given
  scopes over the whole remainder of its block.
* ``CStmt``  -- the intermediate comment-carrying tree produced by the
  parser (CommentL / CommentR wrappers plus surface loop forms that the
  desugarer removes).

Everything here is an immutable value: nodes compare structurally (source
positions are excluded from equality), are hashable, and are safe to share
between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union


# ============================================================
# Sorts and logical terms
# ============================================================

class Sort(enum.Enum):
    """Sort of a logical variable: a machine value or a finite value sequence."""

    VAL = "Val"
    SEQ = "Seq"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Term:
    """Base for logical value/sequence terms. Abstract."""


@dataclass(frozen=True)
class LogVar(Term):
    """A logical variable; its sort lives in the binder that introduces it."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class NullLit(Term):
    """The null pointer constant. Distinct from every integer literal."""

    def __str__(self) -> str:
        return "NULL"


@dataclass(frozen=True)
class IntLit(Term):
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class NilSeq(Term):
    """The empty sequence."""

    def __str__(self) -> str:
        return "nil"


@dataclass(frozen=True)
class ConsSeq(Term):
    """Sequence with head value ``head`` followed by sequence ``tail``."""

    head: Term
    tail: Term

    def __str__(self) -> str:
        return f"cons({self.head}, {self.tail})"


@dataclass(frozen=True)
class AppSeq(Term):
    """Concatenation of two sequences."""

    left: Term
    right: Term

    def __str__(self) -> str:
        return f"app({self.left}, {self.right})"


@dataclass(frozen=True)
class RevSeq(Term):
    """Reversal of a sequence."""

    arg: Term

    def __str__(self) -> str:
        return f"rev({self.arg})"


NULL = NullLit()
NIL = NilSeq()


def term_children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, ConsSeq):
        return (t.head, t.tail)
    if isinstance(t, AppSeq):
        return (t.left, t.right)
    if isinstance(t, RevSeq):
        return (t.arg,)
    return ()


def rebuild_term(t: Term, children: tuple[Term, ...]) -> Term:
    if isinstance(t, ConsSeq):
        return ConsSeq(*children)
    if isinstance(t, AppSeq):
        return AppSeq(*children)
    if isinstance(t, RevSeq):
        return RevSeq(*children)
    return t


def term_vars(t: Term) -> list[str]:
    """Names of logical variables in ``t``, in first-occurrence order."""
    out: list[str] = []
    def walk(u: Term):
        if isinstance(u, LogVar):
            if u.name not in out:
                out.append(u.name)
        else:
            for c in term_children(u):
                walk(c)
    walk(t)
    return out


def subst_term(t: Term, mapping: dict[str, Term]) -> Term:
    """Simultaneous substitution of logical variables in a term."""
    if isinstance(t, LogVar):
        return mapping.get(t.name, t)
    kids = term_children(t)
    if not kids:
        return t
    return rebuild_term(t, tuple(subst_term(k, mapping) for k in kids))


def term_sort(t: Term, env: dict[str, Sort]) -> Sort:
    """Sort of ``t`` under binder environment ``env``.

    Raises KeyError for an unbound variable and ValueError for an
    ill-sorted application; used by the sort-correctness checks.
    """
    if isinstance(t, LogVar):
        return env[t.name]
    if isinstance(t, (NullLit, IntLit)):
        return Sort.VAL
    if isinstance(t, NilSeq):
        return Sort.SEQ
    if isinstance(t, ConsSeq):
        if term_sort(t.head, env) is not Sort.VAL or term_sort(t.tail, env) is not Sort.SEQ:
            raise ValueError(f"ill-sorted cons: {t}")
        return Sort.SEQ
    if isinstance(t, AppSeq):
        if term_sort(t.left, env) is not Sort.SEQ or term_sort(t.right, env) is not Sort.SEQ:
            raise ValueError(f"ill-sorted app: {t}")
        return Sort.SEQ
    if isinstance(t, RevSeq):
        if term_sort(t.arg, env) is not Sort.SEQ:
            raise ValueError(f"ill-sorted rev: {t}")
        return Sort.SEQ
    raise TypeError(f"unknown term {t!r}")


# ============================================================
# Pure propositions and spatial chunks
# ============================================================

@dataclass(frozen=True)
class PureProp:
    """Base for pure (heap-independent) propositions."""


@dataclass(frozen=True)
class Eq(PureProp):
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} == {self.rhs}"


@dataclass(frozen=True)
class Neq(PureProp):
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} != {self.rhs}"


#: Pure conjunct marking an assertion as unsatisfiable.
FALSE_PROP = Eq(IntLit(0), IntLit(1))


def prop_terms(p: PureProp) -> tuple[Term, Term]:
    assert isinstance(p, (Eq, Neq))
    return (p.lhs, p.rhs)


def prop_vars(p: PureProp) -> list[str]:
    out: list[str] = []
    for t in prop_terms(p):
        for n in term_vars(t):
            if n not in out:
                out.append(n)
    return out


def subst_prop(p: PureProp, mapping: dict[str, Term]) -> PureProp:
    cls = type(p)
    return cls(subst_term(p.lhs, mapping), subst_term(p.rhs, mapping))


@dataclass(frozen=True)
class Chunk:
    """Base for spatial heap atoms. Abstract."""


@dataclass(frozen=True)
class PointsTo(Chunk):
    """One record cell: ``addr`` owns a record of type ``record`` whose
    fields (in declaration order) hold ``field_vals``.
    """

    addr: Term
    record: str
    field_vals: tuple[tuple[str, Term], ...]

    def __str__(self) -> str:
        vals = ", ".join(str(v) for _, v in self.field_vals)
        return f"{self.addr} |-> ({vals})"

    def field(self, name: str) -> Term:
        for f, v in self.field_vals:
            if f == name:
                return v
        raise KeyError(name)

    def with_field(self, name: str, value: Term) -> "PointsTo":
        vals = tuple((f, value if f == name else v) for f, v in self.field_vals)
        return PointsTo(self.addr, self.record, vals)


@dataclass(frozen=True)
class ListPred(Chunk):
    """``ll(addr, contents)``: addr heads a null-terminated acyclic list whose
    stored values form ``contents``.  ``ll(NULL, L)`` forces ``L = nil``.
    """

    addr: Term
    contents: Term

    def __str__(self) -> str:
        return f"ll({self.addr}, {self.contents})"


@dataclass(frozen=True)
class ListSeg(Chunk):
    """``lseg(start, stop, contents)``: a chain of ``|contents|`` cells from
    ``start`` whose last tail pointer equals ``stop``; the ``stop`` cell is
    not part of the chunk.  ``lseg(p, NULL, L)`` coincides with ``ll(p, L)``.
    """

    start: Term
    stop: Term
    contents: Term

    def __str__(self) -> str:
        return f"lseg({self.start}, {self.stop}, {self.contents})"


def chunk_terms(c: Chunk) -> tuple[Term, ...]:
    if isinstance(c, PointsTo):
        return (c.addr,) + tuple(v for _, v in c.field_vals)
    if isinstance(c, ListPred):
        return (c.addr, c.contents)
    if isinstance(c, ListSeg):
        return (c.start, c.stop, c.contents)
    raise TypeError(c)


def chunk_vars(c: Chunk) -> list[str]:
    out: list[str] = []
    for t in chunk_terms(c):
        for n in term_vars(t):
            if n not in out:
                out.append(n)
    return out


def subst_chunk(c: Chunk, mapping: dict[str, Term]) -> Chunk:
    if isinstance(c, PointsTo):
        return PointsTo(subst_term(c.addr, mapping), c.record,
                        tuple((f, subst_term(v, mapping)) for f, v in c.field_vals))
    if isinstance(c, ListPred):
        return ListPred(subst_term(c.addr, mapping), subst_term(c.contents, mapping))
    if isinstance(c, ListSeg):
        return ListSeg(subst_term(c.start, mapping), subst_term(c.stop, mapping),
                       subst_term(c.contents, mapping))
    raise TypeError(c)


# ============================================================
# Assertions (canonical symbolic heaps)
# ============================================================

@dataclass(frozen=True)
class Assertion:
    """A canonical symbolic heap.

    Invariants:
    - all existential binders are hoisted into the single ``exists`` prefix;
    - ``locals`` binds each program variable at most once, to the term that
      denotes its current value;
    - every logical variable in locals/pure/spatial is either in ``exists``
      or bound by the surrounding logical context.
    """

    exists: tuple[tuple[str, Sort], ...] = ()
    locals: tuple[tuple[str, Term], ...] = ()
    pure: tuple[PureProp, ...] = ()
    spatial: tuple[Chunk, ...] = ()

    @staticmethod
    def make(exists: Iterable = (), locals: Iterable = (), pure: Iterable = (),
             spatial: Iterable = ()) -> "Assertion":
        return Assertion(tuple(exists), tuple(locals), tuple(pure), tuple(spatial))

    def locals_map(self) -> dict[str, Term]:
        return dict(self.locals)

    def local(self, name: str) -> Optional[Term]:
        for n, t in self.locals:
            if n == name:
                return t
        return None

    def with_local(self, name: str, value: Term) -> "Assertion":
        """Rebind one program variable (append if new)."""
        if self.local(name) is None:
            return Assertion(self.exists, self.locals + ((name, value),),
                             self.pure, self.spatial)
        repl = tuple((n, value if n == name else t) for n, t in self.locals)
        return Assertion(self.exists, repl, self.pure, self.spatial)

    def exists_names(self) -> list[str]:
        return [n for n, _ in self.exists]

    def is_unsat_marked(self) -> bool:
        return FALSE_PROP in self.pure


EMP = Assertion()


def free_logical_vars(a: Assertion) -> list[str]:
    """Logical variables used by ``a`` minus its own existentials,
    in first-occurrence order (locals, then pure, then spatial).
    """
    bound = set(a.exists_names())
    out: list[str] = []
    def add(names):
        for n in names:
            if n not in bound and n not in out:
                out.append(n)
    for _, t in a.locals:
        add(term_vars(t))
    for p in a.pure:
        add(prop_vars(p))
    for c in a.spatial:
        add(chunk_vars(c))
    return out


def _fresh_name(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def fresh_name(base: str, taken) -> str:
    """First of base, base', base'', ... not in ``taken``."""
    return _fresh_name(base, taken)


def rename_exists(a: Assertion, avoid) -> Assertion:
    """Alpha-rename ``a``'s existential prefix away from the names in ``avoid``."""
    avoid = set(avoid)
    mapping: dict[str, Term] = {}
    new_exists = []
    taken = avoid | {n for n, _ in a.exists}
    for n, s in a.exists:
        if n in avoid:
            n2 = _fresh_name(n, taken)
            taken.add(n2)
            mapping[n] = LogVar(n2)
            new_exists.append((n2, s))
        else:
            new_exists.append((n, s))
    if not mapping:
        return a
    return Assertion(tuple(new_exists),
                     tuple((n, subst_term(t, mapping)) for n, t in a.locals),
                     tuple(subst_prop(p, mapping) for p in a.pure),
                     tuple(subst_chunk(c, mapping) for c in a.spatial))


def subst(a: Assertion, mapping: dict[str, Term]) -> Assertion:
    """Capture-avoiding simultaneous substitution in locals/pure/spatial.

    Binders in ``a.exists`` are renamed first when they would capture a
    variable of the mapping's range (or collide with its domain).
    """
    if not mapping:
        return a
    range_vars: set[str] = set()
    for t in mapping.values():
        range_vars.update(term_vars(t))
    clash = {n for n, _ in a.exists} & (range_vars | set(mapping))
    if clash:
        a = rename_exists(a, clash | range_vars | set(mapping))
    return Assertion(a.exists,
                     tuple((n, subst_term(t, mapping)) for n, t in a.locals),
                     tuple(subst_prop(p, mapping) for p in a.pure),
                     tuple(subst_chunk(c, mapping) for c in a.spatial))


# ============================================================
# Program expressions and conditions
# ============================================================

@dataclass(frozen=True)
class CExpr:
    """Base for the tiny C expression language allowed in statements."""


@dataclass(frozen=True)
class CVar(CExpr):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CNull(CExpr):
    def __str__(self) -> str:
        return "NULL"


@dataclass(frozen=True)
class CInt(CExpr):
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class CondExpr:
    """Base for branch conditions. Abstract."""


@dataclass(frozen=True)
class Truthy(CondExpr):
    """Pointer/integer nonzero test, as in ``while (v)``."""

    expr: CExpr

    def __str__(self) -> str:
        return str(self.expr)


@dataclass(frozen=True)
class CmpEq(CondExpr):
    lhs: CExpr
    rhs: CExpr

    def __str__(self) -> str:
        return f"{self.lhs} == {self.rhs}"


@dataclass(frozen=True)
class CmpNe(CondExpr):
    lhs: CExpr
    rhs: CExpr

    def __str__(self) -> str:
        return f"{self.lhs} != {self.rhs}"


# ============================================================
# Statements
# ============================================================

@dataclass(frozen=True)
class Loc:
    """Source position; excluded from structural equality."""

    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOLOC = Loc()


def _loc_field():
    return field(default=NOLOC, compare=False, repr=False)


# --- leaves shared by Stmt, AStmt and CStmt ---

@dataclass(frozen=True)
class Skip:
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class AssignVar:
    """``dst = src;``"""

    dst: str
    src: CExpr
    loc: Loc = _loc_field()
    for_init: bool = field(default=False, compare=False, repr=False)


@dataclass(frozen=True)
class AssignLoad:
    """``dst = src->fieldname;``"""

    dst: str
    src: CExpr
    fieldname: str
    loc: Loc = _loc_field()
    for_init: bool = field(default=False, compare=False, repr=False)


@dataclass(frozen=True)
class AssignStore:
    """``dst->fieldname = src;``"""

    dst: CExpr
    fieldname: str
    src: CExpr
    loc: Loc = _loc_field()
    for_init: bool = field(default=False, compare=False, repr=False)


Assign = (AssignVar, AssignLoad, AssignStore)


@dataclass(frozen=True)
class Break:
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Continue:
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Return:
    expr: Optional[CExpr] = None
    loc: Loc = _loc_field()


# --- plain statements ---

@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    rest: "Stmt"


@dataclass(frozen=True)
class If:
    cond: CondExpr
    then: "Stmt"
    els: "Stmt"
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Loop:
    """General loop: run ``body``; continue jumps to ``incr``; then repeat."""

    body: "Stmt"
    incr: "Stmt"
    loc: Loc = _loc_field()


Stmt = Union[Skip, AssignVar, AssignLoad, AssignStore, Break, Continue, Return,
             Seq, If, Loop]

SIMPLE_LEAVES = (Skip, AssignVar, AssignLoad, AssignStore, Break, Continue, Return)


# --- annotated statements ---

@dataclass(frozen=True)
class AAssert:
    assertion: Assertion
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class AGiven:
    """Introduces logical variable ``name`` by eliminating the matching head
    existential of the precondition; scopes over the whole wrapped statement.
    """

    name: str
    sort: Sort
    body: "AStmt"
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class ASeq:
    """Right-associated sequence: ``first`` is never an ASeq or AGiven."""

    first: "AStmt"
    rest: "AStmt"


@dataclass(frozen=True)
class AIf:
    cond: CondExpr
    then: "AStmt"
    els: "AStmt"
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class ALoop:
    """Loop carrying its loop invariant and continue invariant."""

    inv: Assertion
    con_inv: Assertion
    body: "AStmt"
    incr: "AStmt"
    loc: Loc = _loc_field()


AStmt = Union[Skip, AssignVar, AssignLoad, AssignStore, Break, Continue, Return,
              AAssert, AGiven, ASeq, AIf, ALoop]


def stmt_loc(s) -> Loc:
    if isinstance(s, (Seq, ASeq)):
        return stmt_loc(s.first)
    return getattr(s, "loc", NOLOC)


# ============================================================
# Annotated-statement utilities
# ============================================================

def erase_annotations(c: AStmt) -> Stmt:
    """Strip annotations from an annotated statement.

    Assertions disappear from sequences (a lone AAssert becomes Skip),
    Given binders are peeled, and annotated loops drop their invariants.
    Right-association of the remaining sequence is preserved.
    """
    erased = _erase_list(c)
    if not erased:
        return Skip(stmt_loc(c))
    out = erased[-1]
    for s in reversed(erased[:-1]):
        out = Seq(s, out)
    return out


def _erase_list(c: AStmt) -> list:
    if isinstance(c, ASeq):
        return _erase_list(c.first) + _erase_list(c.rest)
    if isinstance(c, AGiven):
        return _erase_list(c.body)
    if isinstance(c, AAssert):
        return []
    if isinstance(c, AIf):
        return [If(c.cond, erase_annotations(c.then), erase_annotations(c.els), c.loc)]
    if isinstance(c, ALoop):
        return [Loop(erase_annotations(c.body), erase_annotations(c.incr), c.loc)]
    return [c]


def well_typed(binders: Iterable[tuple[str, Sort]], c: AStmt) -> bool:
    """True iff every logical variable used in an embedded assertion is bound
    by an enclosing Given, the ambient binder list, or the assertion's own
    existential prefix.  Adding binders never flips the result to False.
    """
    return find_unbound(binders, c) is None


def find_unbound(binders: Iterable[tuple[str, Sort]], c: AStmt):
    """Name and position of the first unbound logical variable, or None."""
    env = {n for n, _ in binders}

    def check_assertion(a: Assertion, loc: Loc):
        for n in free_logical_vars(a):
            if n not in env:
                return (n, loc)
        return None

    def walk(node):
        if isinstance(node, AGiven):
            # scope of a Given is exactly its body; right-association makes
            # that the whole remainder of the block
            shadowed = node.name in env
            env.add(node.name)
            bad = walk(node.body)
            if not shadowed:
                env.discard(node.name)
            return bad
        if isinstance(node, ASeq):
            return walk(node.first) or walk(node.rest)
        if isinstance(node, AAssert):
            return check_assertion(node.assertion, node.loc)
        if isinstance(node, AIf):
            return walk(node.then) or walk(node.els)
        if isinstance(node, ALoop):
            return (check_assertion(node.inv, node.loc)
                    or check_assertion(node.con_inv, node.loc)
                    or walk(node.body) or walk(node.incr))
        return None

    return walk(c)


def right_associated(c: AStmt) -> bool:
    """Full-tree check that no ASeq has an ASeq or AGiven as its first child."""
    if isinstance(c, ASeq):
        if isinstance(c.first, (ASeq, AGiven)):
            return False
        return right_associated(c.first) and right_associated(c.rest)
    if isinstance(c, AGiven):
        return right_associated(c.body)
    if isinstance(c, AIf):
        return right_associated(c.then) and right_associated(c.els)
    if isinstance(c, ALoop):
        return right_associated(c.body) and right_associated(c.incr)
    return True


# ============================================================
# Records, function specs, programs
# ============================================================

@dataclass(frozen=True)
class FieldDecl:
    """``kind`` is 'value' for integer fields, 'pointer' for struct pointers
    (``target`` names the pointed-to record).
    """

    name: str
    kind: str
    target: Optional[str] = None


@dataclass(frozen=True)
class RecordDecl:
    name: str
    fields: tuple[FieldDecl, ...]

    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]


@dataclass(frozen=True)
class FuncSpec:
    """With-bound logical variables plus the Require/Ensure assertions.

    ``ensure`` may bind the returned value through the distinguished local
    name ``ret``.
    """

    with_vars: tuple[tuple[str, Sort], ...]
    require: Assertion
    ensure: Assertion


RET_NAME = "ret"


# ============================================================
# Entailments and postcondition targets
# ============================================================

@dataclass(frozen=True)
class Known:
    assertion: Assertion


@dataclass(frozen=True)
class Hole:
    """An uninstantiated postcondition; created once, filled at most once."""

    hole_id: int


RhsTarget = Union[Known, Hole]

SigmaCtx = tuple  # of (name, Sort)
GammaCtx = tuple  # of PureProp


#: Origin slots an entailment can target.
SLOT_NORMAL = "normal"
SLOT_BREAK = "break"
SLOT_CONTINUE = "continue"
SLOT_RETURN = "return"
SLOT_PRE = "pre-consequence"


@dataclass(frozen=True)
class Origin:
    loc: Loc
    slot: str
    note: str = ""


@dataclass(frozen=True)
class Entailment:
    """A residual proof obligation  sigma; gamma; lhs |= rhs."""

    sigma: SigmaCtx
    gamma: GammaCtx
    lhs: Assertion
    rhs: RhsTarget
    origin: Origin
