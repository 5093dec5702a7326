"""Bottom-up left-corner chart parser.

Operates left to right and breadth first: every consequence of the tokens read
so far is drawn before the next token is shifted. Three optimizations are
built in and individually observable through the counters:

* static rule indexing via a discrimination tree over each rule's first
  daughter, sharing one unification per group of rules with alphabetically
  equal first daughters;
* dynamic indexing of active edges on the (functor, closed atom positions) of
  their next daughter, skipping unifications that must fail;
* deferred structure copying: in the default lazy mode, rule instances are
  materialized only when a constituent is actually built.
"""

from __future__ import annotations

from collections import deque
from typing import Optional

from .forest import PackedForest
from .grammar import Grammar, ParseError, Rule, UnknownWordError
from .metrics import Counters
from .terms import (Category, Subst, Var, VarSource, rename_value, resolve,
                    unify_values)


# ---------------------------------------------------------------------------
# Discrimination-tree rule index

class _TrieNode:
    __slots__ = ("atom_edges", "var_edge", "cat_edges", "groups")

    def __init__(self):
        self.atom_edges: dict = {}
        self.var_edge: Optional[_TrieNode] = None
        self.cat_edges: dict = {}   # (functor, arity) -> node
        self.groups: list = []


class _Group:
    """Rules whose first daughters are alphabetic variants share one pattern,
    so one unification against a constituent serves the whole group."""

    __slots__ = ("pattern", "members")

    def __init__(self, pattern: Category):
        self.pattern = pattern
        self.members: list = []    # (rule, {canonical var -> rule var})


_VARTOK = ("var",)


def _tokens_of(value, out: list) -> None:
    if isinstance(value, Var):
        out.append(_VARTOK)
    elif isinstance(value, Category):
        out.append(("cat", value.functor, len(value.args)))
        for a in value.args:
            _tokens_of(a, out)
    else:
        out.append(("atom", value))


def _canonical(value, mapping: dict):
    if isinstance(value, Var):
        canon = mapping.get(value)
        if canon is None:
            canon = Var(f"$c{len(mapping)}")
            mapping[value] = canon
        return canon
    if isinstance(value, Category) and value.args:
        return Category(value.functor, tuple(_canonical(a, mapping) for a in value.args))
    return value


class RuleIndex:
    """Maps a constituent category to the rule groups whose first daughter can
    unify with it. False positives occur only under wildcard branches and are
    removed by the group unification; there are no false negatives."""

    def __init__(self, grammar: Grammar):
        self.grammar = grammar
        self.root = _TrieNode()
        self._groups_by_pattern: dict = {}
        for rule in grammar.rules:
            mapping: dict = {}
            pattern = _canonical(rule.daughters[0].category, mapping)
            group = self._groups_by_pattern.get(pattern)
            if group is None:
                group = _Group(pattern)
                self._groups_by_pattern[pattern] = group
                self._insert(pattern, group)
            group.members.append((rule, {cv: ov for ov, cv in mapping.items()}))

    def _insert(self, pattern: Category, group: _Group) -> None:
        toks: list = []
        _tokens_of(pattern, toks)
        node = self.root
        for tok in toks:
            if tok is _VARTOK or tok[0] == "var":
                if node.var_edge is None:
                    node.var_edge = _TrieNode()
                node = node.var_edge
            elif tok[0] == "atom":
                node = node.atom_edges.setdefault(tok[1], _TrieNode())
            else:
                node = node.cat_edges.setdefault((tok[1], tok[2]), _TrieNode())
        node.groups.append(group)

    def retrieve_groups(self, category: Category) -> list:
        toks: list = []
        _tokens_of(category, toks)
        # skips[i]: index just past the query subtree starting at i
        skips = [0] * len(toks)

        def span(i: int) -> int:
            tok = toks[i]
            end = i + 1
            if tok[0] == "cat":
                for _ in range(tok[2]):
                    end = span(end)
            skips[i] = end
            return end

        span(0)
        out: list = []
        self._retrieve(self.root, toks, skips, 0, out)
        seen: set = set()
        unique = []
        for g in out:
            if id(g) not in seen:
                seen.add(id(g))
                unique.append(g)
        return unique

    def _retrieve(self, node: _TrieNode, toks, skips, i: int, out: list) -> None:
        if i == len(toks):
            out.extend(node.groups)
            return
        tok = toks[i]
        if tok[0] == "var":
            # a query variable matches every branch; consume one index value
            for nxt in self._skip_value(node):
                self._retrieve(nxt, toks, skips, i + 1, out)
            return
        if node.var_edge is not None:
            self._retrieve(node.var_edge, toks, skips, skips[i], out)
        if tok[0] == "atom":
            child = node.atom_edges.get(tok[1])
            if child is not None:
                self._retrieve(child, toks, skips, i + 1, out)
        else:
            child = node.cat_edges.get((tok[1], tok[2]))
            if child is not None:
                self._retrieve(child, toks, skips, i + 1, out)

    def _skip_value(self, node: _TrieNode) -> list:
        out = []
        if node.var_edge is not None:
            out.append(node.var_edge)
        out.extend(node.atom_edges.values())
        for (_, arity), child in node.cat_edges.items():
            frontier = [child]
            for _ in range(arity):
                frontier = [m for n in frontier for m in self._skip_value(n)]
            out.extend(frontier)
        return out

    def matching_rules(self, category: Category) -> list:
        """Rules whose first daughter unifies with the category (after the
        final unification step); order follows the grammar."""
        hits = []
        for group in self.retrieve_groups(category):
            if unify_values(group.pattern, category, {}) is not None:
                hits.extend(rule for rule, _ in group.members)
        order = {r.id: i for i, r in enumerate(self.grammar.rules)}
        hits.sort(key=lambda r: order[r.id])
        return hits


def build_rule_index(grammar: Grammar) -> RuleIndex:
    return RuleIndex(grammar)


# ---------------------------------------------------------------------------
# Parser

class Edge:
    """An active (partial) constituent; complete ones live in the forest."""

    __slots__ = ("rule", "mother", "daughters", "next", "bindings", "span", "found")

    def __init__(self, rule, mother, daughters, nxt, bindings, span, found):
        self.rule = rule
        self.mother = mother          # instance category, renamed apart
        self.daughters = daughters    # [(pattern, kleene)], renamed with mother
        self.next = nxt
        self.bindings = bindings
        self.span = span
        self.found = found            # forest node ids consumed so far

    def __repr__(self):
        return f"<edge {self.rule.id}@{self.next} {self.span} found={self.found}>"


def _atom_key(category: Category, bindings: Subst):
    """(functor, ((pos, atom), ...)) over top-level atom-valued arguments."""
    closed = []
    for i, a in enumerate(category.args):
        if isinstance(a, Var):
            a = resolve(a, bindings)
        if isinstance(a, str):
            closed.append((i, a))
    return category.functor, tuple(closed)


def _atoms_compatible(a_closed, b_closed) -> bool:
    b = dict(b_closed)
    for pos, atom in a_closed:
        other = b.get(pos)
        if other is not None and other != atom:
            return False
    return True


class _Parse:
    def __init__(self, grammar: Grammar, index: RuleIndex, tokens,
                 dynamic_indexing: bool, copy_mode: str, counters: Counters,
                 agenda_order: str):
        self.grammar = grammar
        self.index = index
        self.tokens = tokens
        self.dynamic_indexing = dynamic_indexing
        self.eager = copy_mode == "eager"
        self.counters = counters
        self.agenda_order = agenda_order
        self.forest = PackedForest(tokens, grammar.start, counters)
        self.vars = VarSource()
        self.agenda: deque = deque()
        self.edges_at: dict = {}       # end -> [edge]          (unindexed mode)
        self.edges_idx: dict = {}      # (end, functor) -> [(closed, edge)]
        self.edge_seen: set = set()
        self.processed: set = set()

    def run(self) -> PackedForest:
        lexicon = self.grammar.lexicon
        for i, word in enumerate(self.tokens):
            for e_idx, cat in enumerate(lexicon[word]):
                inst = rename_value(cat, {}, self.vars)
                self.counters.categories_built += 1
                res = self.forest.add_node(inst, (i, i + 1), (f"lex:{word}:{e_idx}", ()))
                if res.fresh:
                    self.agenda.append(res.node_id)
            while self.agenda:
                nid = (self.agenda.popleft() if self.agenda_order == "fifo"
                       else self.agenda.pop())
                # the node may have been absorbed by a more general
                # representative while queued; process the representative once
                nid = self.forest.resolve(nid)
                if nid in self.processed:
                    continue
                self.processed.add(nid)
                self._process(nid)
        return self.forest

    def _process(self, nid: int) -> None:
        node = self.forest.node(nid)
        cat = node.category
        start, end = node.span
        # rule invocation (first-daughter index; one unification per group)
        for group in self.index.retrieve_groups(cat):
            fresh_map: dict = {}
            pattern = rename_value(group.pattern, fresh_map, self.vars)
            self.counters.unify_attempts += 1
            s = unify_values(pattern, cat, {})
            if s is None:
                continue
            self.counters.unify_successes += 1
            for rule, canon_to_rule in group.members:
                prebound = {rv: fresh_map[cv] for cv, rv in canon_to_rule.items()}
                mapping = dict(prebound)
                mother = rename_value(rule.mother, mapping, self.vars)
                daughters = tuple((rename_value(d.category, mapping, self.vars), d.kleene)
                                  for d in rule.daughters)
                self.counters.categories_built += 1 + len(daughters)
                edge = Edge(rule, mother, daughters, 0, s, (start, start), ())
                self._consume(edge, nid, cat, s)
        # extension of waiting edges
        for edge in self._candidate_edges(start, cat):
            pattern = edge.daughters[edge.next][0]
            self.counters.unify_attempts += 1
            s = unify_values(pattern, cat, edge.bindings)
            if s is None:
                continue
            self.counters.unify_successes += 1
            self._consume(edge, nid, cat, s)

    def _candidate_edges(self, at: int, cat: Category) -> list:
        if not self.dynamic_indexing:
            return list(self.edges_at.get(at, ()))
        bucket = self.edges_idx.get((at, cat.functor))
        if not bucket:
            return []
        cat_key = _atom_key(cat, {})
        return [edge for closed, edge in bucket
                if _atoms_compatible(closed, cat_key[1])]

    def _consume(self, edge: Edge, nid: int, cat: Category, s: Subst) -> None:
        """Extend edge over a constituent; kleene daughters spawn both a
        repeat edge and an advance edge."""
        found = edge.found + (nid,)
        span = (edge.span[0], self.forest.node(nid).span[1])
        _, kleene = edge.daughters[edge.next]
        self._emit(edge, edge.next + 1, s, span, found)
        if kleene:
            self._emit(edge, edge.next, s, span, found)

    def _emit(self, edge: Edge, nxt: int, s: Subst, span, found) -> None:
        rule = edge.rule
        key = (rule.id, nxt, span,
               tuple(self.forest.resolve(n) for n in found))
        if key in self.edge_seen:
            return
        self.edge_seen.add(key)
        if nxt == len(edge.daughters):
            mother = resolve(edge.mother, s)
            self.counters.categories_built += 1
            res = self.forest.add_node(mother, span, (rule.id, found))
            if res.fresh:
                self.agenda.append(res.node_id)
            return
        if self.eager:
            mother = resolve(edge.mother, s)
            daughters = tuple((resolve(p, s), k) for p, k in edge.daughters)
            self.counters.categories_built += 1 + len(daughters)
            new = Edge(rule, mother, daughters, nxt, {}, span, found)
        else:
            new = Edge(rule, edge.mother, edge.daughters, nxt, s, span, found)
        self.counters.edges_created += 1
        self._store(new)

    def _store(self, edge: Edge) -> None:
        end = edge.span[1]
        if not self.dynamic_indexing:
            self.edges_at.setdefault(end, []).append(edge)
            return
        pattern = edge.daughters[edge.next][0]
        functor, closed = _atom_key(pattern, edge.bindings)
        self.edges_idx.setdefault((end, functor), []).append((closed, edge))


def parse_bulc(grammar: Grammar, index: RuleIndex, tokens, *,
               dynamic_indexing: bool = True, copy_mode: str = "lazy",
               counters: Optional[Counters] = None,
               agenda_order: str = "fifo") -> PackedForest:
    """Parse tokens into a packed forest. Kleene daughters are consumed
    natively, producing flat derivations."""
    if index.grammar is not grammar:
        raise ParseError("rule index was built for a different grammar")
    tokens = list(tokens)
    if not tokens:
        raise ParseError("empty input")
    for i, word in enumerate(tokens):
        if word not in grammar.lexicon:
            raise UnknownWordError(word, i)
    counters = counters if counters is not None else Counters()
    parse = _Parse(grammar, index, tokens, dynamic_indexing, copy_mode,
                   counters, agenda_order)
    return parse.run()
