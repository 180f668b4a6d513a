"""Rewriting for the pure theory of value sequences (rev/app/cons/nil).

Two layers:

* base simplification, always on: the nil units
  ``rev(nil) -> nil``, ``app(nil, x) -> x``, ``app(x, nil) -> x``;
* the list-theory layer (the ``--no-rewrite`` toggle): append
  associativity, pushing ``rev`` through constructors and concatenation,
  involution, and the embedding of ``cons`` as a singleton concatenation
  so associativity can compare mixed spellings.

With the full layer the normal form is a right-nested concatenation of
atoms (singletons ``cons(v, nil)``, sequence variables, and ``rev`` of
irreducible arguments); the system terminates, which the step-budget
property test pins at a quadratic bound.
"""

from __future__ import annotations

from .ast_core import (
    AppSeq, ConsSeq, Eq, LogVar, NIL, NilSeq, RevSeq, Term, term_children,
    rebuild_term,
)


class RewriteBudget(Exception):
    """Raised when normalization exceeds its step budget (a non-termination guard)."""


def normalize(t: Term, full: bool = True, _counter: list | None = None) -> Term:
    """Innermost normalization; ``full=False`` keeps only the nil units."""
    counter = _counter if _counter is not None else [0, _budget(t)]
    return _norm(t, full, counter)


def rewrite_steps(t: Term, full: bool = True) -> int:
    """Number of rule applications normalization performs on ``t``."""
    counter = [0, _budget(t)]
    _norm(t, full, counter)
    return counter[0]


def _budget(t: Term) -> int:
    n = _size(t)
    return 20 * (n + 2) * (n + 2)


def _size(t: Term) -> int:
    return 1 + sum(_size(c) for c in term_children(t))


def _norm(t: Term, full: bool, counter: list) -> Term:
    kids = term_children(t)
    if kids:
        t = rebuild_term(t, tuple(_norm(k, full, counter) for k in kids))
    while True:
        t2 = _step(t, full)
        if t2 is None:
            return t
        counter[0] += 1
        if counter[0] > counter[1]:
            raise RewriteBudget(f"rewrite budget exceeded on {t}")
        # a root rewrite can expose fresh redexes below the new root
        t = _norm(t2, full, counter) if term_children(t2) else t2


def _step(t: Term, full: bool):
    if isinstance(t, RevSeq):
        a = t.arg
        if isinstance(a, NilSeq):
            return NIL
        if full and isinstance(a, RevSeq):
            return a.arg
        if full and isinstance(a, ConsSeq):
            return AppSeq(RevSeq(a.tail), ConsSeq(a.head, NIL))
        if full and isinstance(a, AppSeq):
            return AppSeq(RevSeq(a.right), RevSeq(a.left))
        return None
    if isinstance(t, AppSeq):
        if isinstance(t.left, NilSeq):
            return t.right
        if isinstance(t.right, NilSeq):
            return t.left
        if full and isinstance(t.left, AppSeq):
            return AppSeq(t.left.left, AppSeq(t.left.right, t.right))
        if full and isinstance(t.left, ConsSeq) and not isinstance(t.left.tail, NilSeq):
            # expose the singleton so associativity can regroup it
            return AppSeq(ConsSeq(t.left.head, NIL), AppSeq(t.left.tail, t.right))
        return None
    if full and isinstance(t, ConsSeq) and not isinstance(t.tail, NilSeq):
        return AppSeq(ConsSeq(t.head, NIL), t.tail)
    return None


# --- equality modulo known equations ---------------------------------------

def oriented_defs(facts) -> dict[str, Term]:
    """Variable definitions read off the known equalities.

    An equation with a logical variable on one side defines that variable,
    first definition wins; self-referential orientations are skipped.
    """
    defs: dict[str, Term] = {}
    for f in facts:
        if not isinstance(f, Eq):
            continue
        for var, other in ((f.lhs, f.rhs), (f.rhs, f.lhs)):
            if isinstance(var, LogVar) and var.name not in defs:
                defs[var.name] = other
                break
    return defs


def resolve(t: Term, defs: dict[str, Term], _active=frozenset()) -> Term:
    """Substitute variable definitions to a fixpoint, guarding cycles."""
    if isinstance(t, LogVar):
        if t.name in defs and t.name not in _active:
            return resolve(defs[t.name], defs, _active | {t.name})
        return t
    kids = term_children(t)
    if not kids:
        return t
    return rebuild_term(t, tuple(resolve(k, defs, _active) for k in kids))


def equal_mod(lhs: Term, rhs: Term, defs: dict[str, Term], full: bool) -> bool:
    """Normalized syntactic equality after expanding known definitions."""
    a = normalize(resolve(lhs, defs), full)
    b = normalize(resolve(rhs, defs), full)
    return a == b
