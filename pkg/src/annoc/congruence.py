"""Congruence closure over ground logical terms.

Used for chunk lookup in the symbolic executor and for fact saturation in
the entailment solver.  The term universe per instance is small (the terms
of one assertion plus one proof context), so the implementation favours
clarity: a union-find keyed on terms, with congruence propagated by
re-scanning composite terms to a fixpoint after each merge.

Disequality knowledge is a recorded list of Neq pairs plus clashes between
distinct literal constructors (NULL, integer literals, nil vs cons).  There
is no constructor injectivity.
"""

from __future__ import annotations

from .ast_core import (
    AppSeq, ConsSeq, Eq, IntLit, Neq, NilSeq, NullLit, PureProp, RevSeq, Term,
    term_children,
)


def _head_kind(t: Term):
    """Literal-constructor tag used for clash detection, or None."""
    if isinstance(t, NullLit):
        return ("null",)
    if isinstance(t, IntLit):
        return ("int", t.value)
    if isinstance(t, NilSeq):
        return ("nil",)
    if isinstance(t, ConsSeq):
        return ("cons",)
    return None


def _clash(a, b) -> bool:
    if a is None or b is None or a == b:
        return False
    # cons-headed terms clash only with nil (no injectivity between two cons)
    if a[0] == "cons":
        return b[0] == "nil"
    if b[0] == "cons":
        return a[0] == "nil"
    return True


class Congruence:
    def __init__(self):
        self._parent: dict[Term, Term] = {}
        self._order: list[Term] = []      # registration order, for determinism
        self._idx: dict[Term, int] = {}
        self._neqs: list[tuple[Term, Term]] = []

    # --- registration -----------------------------------------------------

    def add_term(self, t: Term) -> None:
        if t in self._parent:
            return
        self._register(t)
        self._congruence_fixpoint()

    def _register(self, t: Term) -> None:
        if t in self._parent:
            return
        self._parent[t] = t
        self._idx[t] = len(self._order)
        self._order.append(t)
        for c in term_children(t):
            self._register(c)

    def feed(self, props) -> None:
        """Absorb a batch of pure propositions (Eq merges, Neq records)."""
        for p in props:
            if isinstance(p, Eq):
                self.merge(p.lhs, p.rhs)
            elif isinstance(p, Neq):
                self.add_term(p.lhs)
                self.add_term(p.rhs)
                self._neqs.append((p.lhs, p.rhs))
            else:
                raise TypeError(p)

    # --- union-find --------------------------------------------------------

    def rep(self, t: Term) -> Term:
        self.add_term(t)
        root = t
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[t] != root:
            self._parent[t], t = root, self._parent[t]
        return root

    def merge(self, s: Term, t: Term) -> None:
        self.add_term(s)
        self.add_term(t)
        rs, rt = self.rep(s), self.rep(t)
        if rs == rt:
            return
        # keep the earlier-registered term as representative (deterministic)
        if self._idx[rs] > self._idx[rt]:
            rs, rt = rt, rs
        self._parent[rt] = rs
        self._congruence_fixpoint()

    def _congruence_fixpoint(self) -> None:
        changed = True
        while changed:
            changed = False
            sigs: dict[tuple, Term] = {}
            for t in self._order:
                kids = term_children(t)
                if not kids:
                    continue
                sig = (type(t).__name__,) + tuple(self.rep(k) for k in kids)
                other = sigs.get(sig)
                if other is None:
                    sigs[sig] = t
                    continue
                rt, ro = self.rep(t), self.rep(other)
                if rt != ro:
                    if self._idx[rt] > self._idx[ro]:
                        rt, ro = ro, rt
                    self._parent[ro] = rt
                    changed = True

    # --- queries ------------------------------------------------------------

    def equal(self, s: Term, t: Term) -> bool:
        return self.rep(s) == self.rep(t)

    def members(self, t: Term) -> list[Term]:
        r = self.rep(t)
        return [u for u in self._order if self.rep(u) == r]

    def known_neq(self, s: Term, t: Term) -> bool:
        """Provably distinct: a recorded disequality or a literal clash."""
        self.add_term(s)
        self.add_term(t)
        for a, b in self._neqs:
            if (self.equal(a, s) and self.equal(b, t)) or \
               (self.equal(a, t) and self.equal(b, s)):
                return True
        return _clash(self._class_head(s), self._class_head(t))

    def _class_head(self, t: Term):
        for u in self.members(t):
            h = _head_kind(u)
            if h is not None:
                return h
        return None

    def unsat(self) -> bool:
        """A recorded disequality collapsed, or one class holds clashing literals."""
        for a, b in self._neqs:
            if self.equal(a, b):
                return True
        seen: dict[Term, tuple] = {}
        for t in self._order:
            h = _head_kind(t)
            if h is None:
                continue
            r = self.rep(t)
            if r in seen:
                if _clash(seen[r], h):
                    return True
            else:
                seen[r] = h
        return False
