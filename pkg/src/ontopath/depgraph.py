"""Concept dependency graph and the three rewriting primitives built on it.

The graph inverts the normal-form axioms: an epsilon edge A -> B records
B <= A, a role edge A -(p)-> B records exists p . B <= A, and a conjunction
hyperedge A -> {B1..Bk} records B1 & ... & Bk <= A.

Three queries are answered here:

* ``witness``: which label sets jointly entail a concept (backward chaining
  over conjunction and subsumption edges);
* ``rewr_concept``: a regular path expression matching exactly the
  data-level derivations of a concept, obtained by reading the graph as a
  finite automaton and eliminating states;
* ``rewrite_role``: the union of a role's entailed subroles.

To keep rewritings complete on entailments that route through existential
witnesses, the graph also runs a consequence-driven label completion: for
every concept name a set of certain subsumers, and for every existential
axiom the labels certainly carried by its witness (including effects of the
edge back to the witness's parent).  Derived subsumptions feed extra
epsilon transitions into the automaton and extra alternatives into witness
expansion; everything remains sound because each completion rule is valid
in every model.
"""
from __future__ import annotations

import warnings

from .query import (
    ANY_NODE,
    EdgeStep,
    NodeTest,
    PathExpr,
    Star,
    concat_path,
    star_path,
    union_path,
)
from .tbox import (
    TOP,
    AtomicInclusion,
    ConjInclusion,
    ExistsLeft,
    ExistsRight,
    Role,
    RoleInclusion,
    TBox,
    concept_names,
    normalize,
)

DEFAULT_WITNESS_CAP = 1024


class RoleOrder:
    """Reflexive-transitive closure of role inclusions, closed under inversion."""

    def __init__(self, normalized):
        self._sup = {}
        self._sub = {}
        for nf in normalized:
            if isinstance(nf, RoleInclusion):
                for sub, sup in ((nf.sub, nf.sup), (nf.sub.inverse(), nf.sup.inverse())):
                    self._sup.setdefault(sub, set()).add(sup)
                    self._sub.setdefault(sup, set()).add(sub)
        self._above = {}
        self._below = {}

    def _closure(self, role: Role, direct, memo) -> frozenset:
        hit = memo.get(role)
        if hit is not None:
            return hit
        seen = {role}
        stack = [role]
        while stack:
            for nxt in direct.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        result = frozenset(seen)
        memo[role] = result
        return result

    def superroles(self, role: Role) -> frozenset:
        return self._closure(role, self._sup, self._above)

    def subroles(self, role: Role) -> frozenset:
        return self._closure(role, self._sub, self._below)

    def is_subrole(self, sub: Role, sup: Role) -> bool:
        return sup in self.superroles(sub)


class DependencyGraph:
    """Built once from a TBox; the three query operations are pure.

    Internal memo tables (concept paths, hypothesis closures) only ever
    gain entries that are deterministic functions of the immutable inputs,
    so sharing one graph across threads is safe.
    """

    def __init__(self, t: TBox):
        t = normalize(t)
        self.tbox = t
        nf = t.normalized
        self.nodes = concept_names(nf)
        self.eps_edges = tuple(
            (ax.rhs, ax.lhs) for ax in nf if isinstance(ax, AtomicInclusion))
        self.role_edges = tuple(
            (ax.rhs, ax.role, ax.filler) for ax in nf if isinstance(ax, ExistsLeft))
        self.conj_edges = tuple(
            (ax.rhs, frozenset(ax.lhs)) for ax in nf if isinstance(ax, ConjInclusion))
        self.roles = RoleOrder(nf)
        self.ex_right = tuple(
            (i, ax) for i, ax in enumerate(nf) if isinstance(ax, ExistsRight))
        self._atomic = tuple(ax for ax in nf if isinstance(ax, AtomicInclusion))
        self._conj = tuple(ax for ax in nf if isinstance(ax, ConjInclusion))
        self._ex_left = tuple(ax for ax in nf if isinstance(ax, ExistsLeft))
        self._ex_right_by_lhs = {}
        for i, ax in self.ex_right:
            self._ex_right_by_lhs.setdefault(ax.lhs, []).append(i)
        self._subsumers = {}
        self._witness_labels = {}
        self._complete()
        self._automaton = self._build_automaton()
        self._concept_paths = {}
        self._hypothesis_cache = {}

    # -- label completion ---------------------------------------------------

    def _close_labels(self, labels, parent) -> set:
        """Close a label set under all non-generating consequences.

        `parent`, when given, is a pair (parent labels, role from parent):
        the closed set then describes an existential witness that carries an
        inverse edge back to a parent with (at least) those labels.
        """
        out = set(labels)
        out.add(TOP)
        changed = True
        while changed:
            changed = False
            for ax in self._atomic:
                if ax.lhs in out and ax.rhs not in out:
                    out.add(ax.rhs)
                    changed = True
            for ax in self._conj:
                if ax.rhs not in out and all(n in out for n in ax.lhs):
                    out.add(ax.rhs)
                    changed = True
            for name in sorted(out):
                for i in self._ex_right_by_lhs.get(name, ()):
                    ax = self.tbox.normalized[i]
                    child = self._witness_labels.get(i, {ax.filler, TOP})
                    for left in self._ex_left:
                        if left.rhs in out:
                            continue
                        if self.roles.is_subrole(ax.role, left.role) and left.filler in child:
                            out.add(left.rhs)
                            changed = True
            if parent is not None:
                parent_labels, role_in = parent
                for left in self._ex_left:
                    if left.rhs in out:
                        continue
                    if (self.roles.is_subrole(role_in.inverse(), left.role)
                            and left.filler in parent_labels):
                        out.add(left.rhs)
                        changed = True
        return out

    def _complete(self):
        for name in self.nodes:
            self._subsumers[name] = {name, TOP}
        for i, ax in self.ex_right:
            self._witness_labels[i] = {ax.filler, TOP}
        changed = True
        while changed:
            changed = False
            for name in self.nodes:
                closed = self._close_labels(self._subsumers[name], None)
                if closed != self._subsumers[name]:
                    self._subsumers[name] = closed
                    changed = True
            for i, ax in self.ex_right:
                closed = self._close_labels(
                    self._witness_labels[i], (self._subsumers[ax.lhs], ax.role))
                if closed != self._witness_labels[i]:
                    self._witness_labels[i] = closed
                    changed = True
        self._subsumers = {n: frozenset(s) for n, s in self._subsumers.items()}
        self._witness_labels = {i: frozenset(s) for i, s in self._witness_labels.items()}

    def subsumers(self, name: str) -> frozenset:
        """Concept names certainly entailed for anything labeled `name`."""
        return self._subsumers.get(name, frozenset({name, TOP}))

    def entails_subsumption(self, sub: str, sup: str) -> bool:
        return sup == TOP or sup in self.subsumers(sub)

    def witness_labels(self, axiom_index: int) -> frozenset:
        """Labels certainly carried by the witness of an ExistsRight axiom."""
        return self._witness_labels[axiom_index]

    def witness_labels_with(self, axiom_index: int, extra_parent_label: str) -> frozenset:
        """Witness labels when the parent additionally carries one label."""
        key = (axiom_index, extra_parent_label)
        hit = self._hypothesis_cache.get(key)
        if hit is None:
            ax = self.tbox.normalized[axiom_index]
            parent = self._close_labels({ax.lhs, extra_parent_label}, None)
            hit = frozenset(self._close_labels({ax.filler}, (parent, ax.role)))
            self._hypothesis_cache[key] = hit
        return hit

    # -- automaton ------------------------------------------------------------

    def _label_tests(self, name: str, seen=None) -> PathExpr:
        """Zero-length path expressions that certify `name` at a node."""
        if seen is None:
            seen = frozenset()
        labels = {y for y in self.nodes if name in self._subsumers[y]}
        branches = [NodeTest(frozenset(labels))] if labels else []
        for rhs, parts in self.conj_edges:
            if rhs != name or parts & seen:
                continue
            guarded = seen | parts | {name}
            branches.append(concat_path(
                [self._label_tests(p, guarded) for p in sorted(parts)]))
        return union_path(branches) if len(branches) > 1 else branches[0]

    def _build_automaton(self):
        """Transitions (src, label, dst); label None means epsilon."""
        trans = []
        for src in self.nodes:
            if src == TOP:
                continue
            for dst in self.nodes:
                if dst != src and src in self._subsumers[dst]:
                    trans.append((src, None, dst))
        for rhs, role, filler in self.role_edges:
            if rhs != TOP:
                trans.append((rhs, EdgeStep(role), filler))
        for rhs, parts in self.conj_edges:
            if rhs == TOP:
                continue
            for target in sorted(parts):
                prefix = concat_path(
                    [self._label_tests(p, parts) for p in sorted(parts) if p != target])
                trans.append((rhs, prefix, target))
        return tuple(trans)

    # -- regex extraction -------------------------------------------------------

    def concept_path(self, name: str) -> PathExpr:
        cached = self._concept_paths.get(name)
        if cached is not None:
            return cached
        result = self._eliminate(name)
        self._concept_paths[name] = result
        return result

    def _eliminate(self, start: str) -> PathExpr:
        outgoing = {}
        for src, label, dst in self._automaton:
            outgoing.setdefault(src, []).append((label, dst))
        # Restrict to states reachable from the start concept.
        reachable = {start}
        queue = [start]
        while queue:
            state = queue.pop()
            for _, dst in outgoing.get(state, ()):
                if dst not in reachable:
                    reachable.add(dst)
                    queue.append(dst)
        depth = {start: 0}
        frontier = [start]
        while frontier:
            nxt = []
            for state in frontier:
                for _, dst in sorted(outgoing.get(state, ()),
                                     key=lambda e: e[1]):
                    if dst not in depth:
                        depth[dst] = depth[state] + 1
                        nxt.append(dst)
            frontier = nxt

        START, FINAL = "\x00start", "\x00final"
        edges = {}

        def merge(u, v, regex):
            edges[(u, v)] = _r_union(edges.get((u, v)), regex)

        merge(START, start, (True, None))
        for src, label, dst in self._automaton:
            if src in reachable:
                merge(src, dst, (True, None) if label is None else (False, label))
        for state in sorted(reachable):
            if state == TOP:
                merge(state, FINAL, (True, None))
            else:
                merge(state, FINAL, (False, NodeTest(frozenset({state}))))

        order = sorted(reachable, key=lambda s: (-depth[s], s))
        for state in order:
            loop = edges.pop((state, state), None)
            loop_star = _r_star(loop)
            ins = [(u, r) for (u, v), r in list(edges.items()) if v == state]
            outs = [(v, r) for (u, v), r in list(edges.items()) if u == state]
            for u, r_in in ins:
                del edges[(u, state)]
            for v, r_out in outs:
                del edges[(state, v)]
            for u, r_in in ins:
                for v, r_out in outs:
                    merge(u, v, _r_concat(_r_concat(r_in, loop_star), r_out))
        return _r_to_path(edges.get((START, FINAL)))


# -- regexes during elimination: (accepts_epsilon, expr-or-None) --------------


def _nullable(expr: PathExpr) -> bool:
    """Whether the expression already matches the zero-length walk everywhere."""
    if isinstance(expr, Star) or expr == ANY_NODE:
        return True
    from .query import Concat, UnionPath

    if isinstance(expr, UnionPath):
        return any(_nullable(b) for b in expr.branches)
    if isinstance(expr, Concat):
        return all(_nullable(p) for p in expr.parts)
    return False


def _r(eps, expr):
    if eps and expr is not None and _nullable(expr):
        eps = False
    return (eps, expr)


def _r_union(a, b):
    if a is None:
        return b
    if b is None:
        return a
    eps = a[0] or b[0]
    exprs = [x for x in (a[1], b[1]) if x is not None]
    if not exprs:
        return (eps, None)
    return _r(eps, exprs[0] if len(exprs) == 1 else union_path(exprs))


def _r_concat(a, b):
    if a is None or b is None:
        return None
    eps = a[0] and b[0]
    branches = []
    if a[1] is not None and b[1] is not None:
        branches.append(concat_path([a[1], b[1]]))
    if a[0] and b[1] is not None:
        branches.append(b[1])
    if b[0] and a[1] is not None:
        branches.append(a[1])
    if not branches:
        return (eps, None)
    return _r(eps, branches[0] if len(branches) == 1 else union_path(branches))


def _r_star(a):
    if a is None or a[1] is None:
        return (True, None)
    return _r(True, star_path(a[1]))


def _r_to_path(r) -> PathExpr:
    if r is None:
        return None
    eps, expr = r
    if expr is None:
        return ANY_NODE if eps else None
    if not eps or _nullable(expr):
        return expr
    return union_path([ANY_NODE, expr])


# ---------------------------------------------------------------------------
# Public operations


def build_dependency_graph(t: TBox) -> DependencyGraph:
    return DependencyGraph(t)


def witness(name: str, g: DependencyGraph, cap: int = DEFAULT_WITNESS_CAP):
    """All minimal label sets that jointly entail `name`.

    Expansion replaces a set element either by a single entailed-subsumee
    alternative or by the left-hand side of a conjunction axiom; the result
    is pruned to an antichain.  Always contains {name}.
    """
    alternatives = {}
    for member in g.nodes:
        if member == TOP:
            # The universal concept needs no witnessing.
            alternatives[member] = ((), ())
            continue
        alts = [y for y in g.nodes if member in g.subsumers(y) and y != member]
        conjs = [parts for rhs, parts in g.conj_edges if rhs == member]
        alternatives[member] = (sorted(alts), sorted(conjs, key=sorted))

    start = frozenset({name})
    visited = {start}
    queue = [start]
    truncated = False
    while queue:
        current = queue.pop(0)
        for member in sorted(current):
            alts, conjs = alternatives.get(member, ((), ()))
            candidates = [current - {member} | {alt} for alt in alts]
            candidates += [current - {member} | parts for parts in conjs]
            for candidate in candidates:
                if candidate not in visited:
                    if len(visited) >= cap:
                        truncated = True
                        break
                    visited.add(candidate)
                    queue.append(candidate)
    if truncated:
        warnings.warn(
            f"witness expansion for {name!r} truncated at {cap} sets; "
            "the rewriting may be incomplete", RuntimeWarning)
    minimal = [
        s for s in visited
        if not any(other < s for other in visited)
    ]
    return tuple(sorted(minimal, key=lambda s: (len(s), sorted(s))))


def rewr_concept(name: str, g: DependencyGraph) -> PathExpr:
    """A path expression whose matches from a node certify the concept there."""
    return g.concept_path(name)


def rewrite_role(role: Role, t: TBox) -> PathExpr:
    """Union over the entailed subroles of `role` (always including itself)."""
    t = normalize(t)
    order = RoleOrder(t.normalized)
    return union_path([EdgeStep(sub) for sub in sorted(order.subroles(role), key=str)])


def dump_dependency_graph(g: DependencyGraph) -> str:
    """Line-based debug dump for golden-file tests."""
    lines = []
    for sup, sub in sorted(g.eps_edges):
        lines.append(f"eps {sup} <- {sub}")
    for sup, role, filler in sorted(g.role_edges, key=lambda e: (e[0], str(e[1]), e[2])):
        lines.append(f"role {sup} <-[{role}] {filler}")
    for sup, parts in sorted(g.conj_edges, key=lambda e: (e[0], sorted(e[1]))):
        lines.append(f"conj {sup} <- {{{','.join(sorted(parts))}}}")
    return "\n".join(lines) + ("\n" if lines else "")
