"""Bounded chase: saturate a property graph with a TBox to answer queries.

This is the verification oracle for the rewriting pipeline.  Labels and
edges are closed under the non-generating normal-form rules; existential
right-hand sides spawn anonymous witness nodes (reused per node/axiom
pair) up to a generation depth.  Certain answers are the query answers
over the chased graph that touch only base nodes.
"""
from __future__ import annotations

from .graph import PropertyGraph, eval_query
from .tbox import (
    TOP,
    AtomicInclusion,
    ConjInclusion,
    ExistsLeft,
    ExistsRight,
    Role,
    RoleInclusion,
    TBox,
    normalize,
)

ANON_PREFIX = "_:"


class ChasedGraph(PropertyGraph):
    """A property graph extended with anonymous witness nodes."""

    def __init__(self, base: PropertyGraph, depth: int):
        super().__init__()
        self.labels = {n: set(ls) for n, ls in base.labels.items()}
        self.node_props = {n: dict(ps) for n, ps in base.node_props.items()}
        self.edges = set(base.edges)
        self.edge_props = {pair: dict(ps) for pair, ps in base.edge_props.items()}
        self._pairs_by_label = {l: set(ps) for l, ps in base._pairs_by_label.items()}
        self.base_nodes = frozenset(base.nodes)
        self.depth = depth

    def is_anonymous(self, node_id) -> bool:
        return node_id not in self.base_nodes


def _matching_successors(g, node, role: Role):
    if role.inverted:
        return [u for (u, v) in g.pairs(role.name) if v == node]
    return [v for (u, v) in g.pairs(role.name) if u == node]


def _add_role_edge(g, src, role: Role, dst) -> bool:
    edge = (dst, role.name, src) if role.inverted else (src, role.name, dst)
    if edge in g.edges:
        return False
    g.add_edge(*edge)
    return True


def chase(g: PropertyGraph, t: TBox, depth: int) -> ChasedGraph:
    """Least fixpoint of the normal-form rules over g, to witness depth `depth`."""
    t = normalize(t)
    out = ChasedGraph(g, depth)
    generation = {n: 0 for n in out.nodes}

    def ensure_label(node, name) -> bool:
        if name == TOP or name in out.labels[node]:
            return False
        out.add_label(node, name)
        return True

    changed = True
    while changed:
        changed = False
        for axiom_index, nf in enumerate(t.normalized):
            if isinstance(nf, AtomicInclusion):
                for node in sorted(out.nodes):
                    if out.has_label(node, nf.lhs) and ensure_label(node, nf.rhs):
                        changed = True
            elif isinstance(nf, ConjInclusion):
                for node in sorted(out.nodes):
                    if all(out.has_label(node, name) for name in nf.lhs):
                        if ensure_label(node, nf.rhs):
                            changed = True
            elif isinstance(nf, ExistsLeft):
                for node in sorted(out.nodes):
                    if out.has_label(node, nf.rhs):
                        continue
                    for succ in _matching_successors(out, node, nf.role):
                        if out.has_label(succ, nf.filler):
                            ensure_label(node, nf.rhs)
                            changed = True
                            break
            elif isinstance(nf, RoleInclusion):
                base_pairs = out.pairs(nf.sub.name)
                pairs = ({(v, u) for (u, v) in base_pairs} if nf.sub.inverted
                         else set(base_pairs))
                for u, v in sorted(pairs):
                    if _add_role_edge(out, u, nf.sup, v):
                        changed = True
            elif isinstance(nf, ExistsRight):
                for node in sorted(out.nodes):
                    if not out.has_label(node, nf.lhs):
                        continue
                    if any(out.has_label(s, nf.filler)
                           for s in _matching_successors(out, node, nf.role)):
                        continue
                    if generation[node] >= depth:
                        continue
                    witness = f"{ANON_PREFIX}{node}/{axiom_index}"
                    while witness in out.labels:
                        # A loaded node may squat on the reserved name.
                        witness += "'"
                    out.add_node(witness)
                    generation[witness] = generation[node] + 1
                    _add_role_edge(out, node, nf.role, witness)
                    ensure_label(witness, nf.filler)
                    changed = True
            else:
                raise TypeError(f"unexpected normal-form axiom {nf!r}")
    return out


def certain_answers(q, g: PropertyGraph, t: TBox, depth: int) -> set:
    """Answers over the chased graph restricted to base-node tuples."""
    chased = chase(g, t, depth)
    return {
        answer
        for answer in eval_query(q, chased)
        if all(node in chased.base_nodes for node in answer)
    }
