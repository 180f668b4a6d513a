"""Forward symbolic executor.

``ae`` computes the strongest postcondition of an assignment over an
existential-free canonical assertion; ``norm_cond`` turns a branch
condition into a pure fact on the assertion, detecting contradictory
branches.  Both keep the assertion in canonical form: because program
variables live in the ``locals`` mapping, a plain assignment is a mapping
update and needs no fresh-variable renaming.
"""

from __future__ import annotations

from .ast_core import (
    Assertion, AssignLoad, AssignStore, AssignVar, CExpr, CInt, CNull,
    CondExpr, CmpEq, CmpNe, CVar, Eq, FALSE_PROP, IntLit, Neq, NULL,
    PointsTo, Term, Truthy, stmt_loc,
)
from .congruence import Congruence
from .errors import AmbiguousChunk, NoChunk, UnboundProgVar


def eval_expr(p: Assertion, e: CExpr) -> Term:
    """Value of a program expression under the precondition's locals."""
    if isinstance(e, CVar):
        t = p.local(e.name)
        if t is None:
            raise UnboundProgVar(e.name)
        return t
    if isinstance(e, CNull):
        return NULL
    if isinstance(e, CInt):
        return IntLit(e.value)
    raise TypeError(e)


def knowledge(gamma, p: Assertion) -> Congruence:
    """Congruence closure over the proof context and the assertion's pure part."""
    cc = Congruence()
    cc.feed(gamma)
    cc.feed(p.pure)
    return cc


def _find_points_to(cc: Congruence, p: Assertion, addr: Term, fieldname: str,
                    loc) -> PointsTo:
    """The unique points-to chunk whose address is provably equal to ``addr``."""
    hits = [c for c in p.spatial
            if isinstance(c, PointsTo) and cc.equal(c.addr, addr)]
    if not hits:
        raise NoChunk(str(addr), fieldname, loc.line, loc.col)
    if len(hits) > 1:
        raise AmbiguousChunk(str(addr), loc.line, loc.col)
    chunk = hits[0]
    if fieldname not in [f for f, _ in chunk.field_vals]:
        raise NoChunk(str(addr), fieldname, loc.line, loc.col)
    return chunk


def ae(sigma, gamma, p: Assertion, c) -> Assertion:
    """Strongest postcondition of one assignment statement.

    Requires ``p.exists`` to be empty (Given binders already introduced).
    Field access resolves the unique points-to chunk at the address, up to
    the equalities known from gamma and p.pure; failure means the
    precondition cannot guarantee the statement runs.
    """
    assert not p.exists, "ae needs an existential-free precondition"
    loc = stmt_loc(c)
    if isinstance(c, AssignVar):
        val = eval_expr(p, c.src)
        return p.with_local(c.dst, val)
    if isinstance(c, AssignLoad):
        addr = eval_expr(p, c.src)
        chunk = _find_points_to(knowledge(gamma, p), p, addr, c.fieldname, loc)
        return p.with_local(c.dst, chunk.field(c.fieldname))
    if isinstance(c, AssignStore):
        addr = eval_expr(p, c.dst)
        val = eval_expr(p, c.src)
        chunk = _find_points_to(knowledge(gamma, p), p, addr, c.fieldname, loc)
        spatial = tuple(chunk.with_field(c.fieldname, val) if ch is chunk else ch
                        for ch in p.spatial)
        return Assertion(p.exists, p.locals, p.pure, spatial)
    raise TypeError(c)


def branch_fact(p: Assertion, b: CondExpr, branch: bool):
    """The branch condition as a pure proposition in solver-friendly form."""
    if isinstance(b, Truthy):
        v = eval_expr(p, b.expr)
        return Neq(v, NULL) if branch else Eq(v, NULL)
    if isinstance(b, CmpEq):
        l, r = eval_expr(p, b.lhs), eval_expr(p, b.rhs)
        return Eq(l, r) if branch else Neq(l, r)
    if isinstance(b, CmpNe):
        l, r = eval_expr(p, b.lhs), eval_expr(p, b.rhs)
        return Neq(l, r) if branch else Eq(l, r)
    raise TypeError(b)


def norm_cond(sigma, gamma, p: Assertion, b: CondExpr, branch: bool) -> Assertion:
    """Append the branch fact to ``p`` and normalize.

    A contradiction between gamma, p.pure and the new fact marks the result
    unsatisfiable by appending the ``0 == 1`` conjunct; downstream rules then
    treat the branch as dead.
    """
    assert not p.exists, "norm needs an existential-free precondition"
    fact = branch_fact(p, b, branch)
    pure = p.pure + (fact,)
    cc = Congruence()
    cc.feed(gamma)
    cc.feed(pure)
    if cc.unsat() and FALSE_PROP not in pure:
        pure = pure + (FALSE_PROP,)
    return Assertion(p.exists, p.locals, pure, p.spatial)
