"""Shared packed parse forest: subtree sharing, subsumption packing, counting
and validated enumeration.

All three engines emit the same structure. Sub-analyses over the same span
whose categories stand in a subsumption relationship are merged into one node;
the most general category is kept as the representative (when a newcomer is
strictly more general it takes over and absorbs the old node's derivations).
Packing can admit combinations that no longer unify, so enumeration re-runs
the rule unifications along each extracted tree and drops the failures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .grammar import Grammar, Rule
from .metrics import Counters
from .terms import (Category, Subst, VarSource, format_value, rename_value,
                    resolve, subsumes, unify_values)

# (rule id or "lex:<word>:<entry>", child node ids)
Derivation = tuple


class ForestError(Exception):
    pass


class ForestCycleError(ForestError):
    """The forest encodes infinitely many trees (derivation cycle)."""


@dataclass
class AddResult:
    node_id: int
    fresh: bool              # a new representative node was created
    absorbed: tuple = ()     # node ids this new representative took over


class ForestNode:
    __slots__ = ("id", "category", "span", "derivations", "_deriv_seen", "packed_into")

    def __init__(self, nid: int, category: Category, span: tuple):
        self.id = nid
        self.category = category
        self.span = span
        self.derivations: list = []
        self._deriv_seen: set = set()
        self.packed_into: Optional[int] = None

    def add_derivation(self, derivation: Derivation) -> None:
        if derivation not in self._deriv_seen:
            self._deriv_seen.add(derivation)
            self.derivations.append(derivation)

    def __repr__(self):
        return f"<node {self.id} {self.category} @{self.span}>"


@dataclass(frozen=True)
class Tree:
    """One extracted parse tree; categories are the bottom-up instantiations."""
    rule_id: str
    category: Category
    children: tuple
    word: Optional[str] = None


class PackedForest:
    """Single-writer during a parse, immutable and shareable afterwards."""

    def __init__(self, tokens, start: str, counters: Optional[Counters] = None):
        self.tokens = tuple(tokens)
        self.start = start
        self.counters = counters if counters is not None else Counters()
        self.nodes: list = []
        self._by_span: dict = {}   # span -> representative node ids, id order

    def node(self, nid: int) -> ForestNode:
        return self.nodes[nid]

    def resolve(self, nid: int) -> int:
        node = self.nodes[nid]
        while node.packed_into is not None:
            node = self.nodes[node.packed_into]
        return node.id

    def representatives(self):
        return [n for n in self.nodes if n.packed_into is None]

    def _check_span(self, span: tuple, derivation: Derivation) -> None:
        start, end = span
        _, children = derivation
        if not children:
            if end - start != 1:
                raise ForestError(f"leaf derivation must span one token, got {span}")
            return
        at = start
        for cid in children:
            child = self.nodes[self.resolve(cid)]
            if child.span[0] != at:
                raise ForestError(
                    f"children do not tile {span}: gap at {at} before node {cid}")
            at = child.span[1]
        if at != end:
            raise ForestError(f"children do not tile {span}: end at {at}")

    def add_node(self, category: Category, span: tuple,
                 derivation: Derivation) -> AddResult:
        """Insert a sub-analysis, sharing or packing against same-span nodes.

        Returns the representative's id plus whether a new representative was
        created (fresh) and which old nodes it absorbed, so engines can decide
        whether parent combinations still need to be explored.
        """
        self._check_span(span, derivation)
        mates = self._by_span.setdefault(span, [])
        functor = category.functor
        # share, or pack under a more-general existing node
        for nid in mates:
            node = self.nodes[nid]
            if node.category.functor != functor:
                continue
            if subsumes(node.category, category):
                node.add_derivation(derivation)
                return AddResult(nid, False)
        # the newcomer may be strictly more general than existing nodes
        absorbed = tuple(nid for nid in mates
                         if self.nodes[nid].category.functor == functor
                         and subsumes(category, self.nodes[nid].category))
        fresh = ForestNode(len(self.nodes), category, span)
        fresh.add_derivation(derivation)
        self.nodes.append(fresh)
        self.counters.nodes_created += 1
        for nid in absorbed:
            old = self.nodes[nid]
            for d in old.derivations:
                fresh.add_derivation(d)
            old.derivations = []
            old._deriv_seen = set()
            old.packed_into = fresh.id
            mates.remove(nid)
        mates.append(fresh.id)
        return AddResult(fresh.id, True, absorbed)

    def roots(self) -> list:
        """Representative nodes spanning the whole input with the start functor."""
        full = (0, len(self.tokens))
        return [nid for nid in self._by_span.get(full, ())
                if self.nodes[nid].category.functor == self.start]

    def _resolved_derivations(self, node: ForestNode):
        seen = set()
        out = []
        for rid, children in node.derivations:
            key = (rid, tuple(self.resolve(c) for c in children))
            if key not in seen:
                seen.add(key)
                out.append(key)
        out.sort()
        return out

    def count_trees(self) -> int:
        """Number of raw derivation trees reachable from the roots.

        No unification re-validation happens here; see unpack for that.
        """
        memo: dict = {}
        on_stack: set = set()

        def count(nid: int) -> int:
            nid = self.resolve(nid)
            if nid in memo:
                return memo[nid]
            if nid in on_stack:
                raise ForestCycleError(f"derivation cycle through node {nid}")
            on_stack.add(nid)
            total = 0
            for _, children in self._resolved_derivations(self.nodes[nid]):
                prod = 1
                for c in children:
                    prod *= count(c)
                    if prod == 0:
                        break
                total += prod
            on_stack.discard(nid)
            memo[nid] = total
            return total

        return sum(count(r) for r in self.roots())

    # -- enumeration ---------------------------------------------------------

    def _raw_trees(self, nid: int, path: set) -> Iterator[tuple]:
        nid = self.resolve(nid)
        if nid in path:
            raise ForestCycleError(f"derivation cycle through node {nid}")
        path.add(nid)
        try:
            for rid, children in self._resolved_derivations(self.nodes[nid]):
                if not children:
                    yield (rid, ())
                else:
                    yield from ((rid, combo)
                                for combo in self._combos(children, 0, path))
        finally:
            path.discard(nid)

    def _combos(self, children: tuple, i: int, path: set) -> Iterator[tuple]:
        if i == len(children):
            yield ()
            return
        for head in self._raw_trees(children[i], path):
            for rest in self._combos(children, i + 1, path):
                yield (head,) + rest

    def iter_raw_trees(self) -> Iterator[tuple]:
        """Deterministic order: derivations sorted by rule id then child ids."""
        path: set = set()
        for root in sorted(self.roots()):
            yield from self._raw_trees(root, path)


def _instantiate_rule(rule: Rule, source: VarSource):
    mapping: dict = {}
    mother = rename_value(rule.mother, mapping, source)
    daughters = [(rename_value(d.category, mapping, source), d.kleene)
                 for d in rule.daughters]
    return mother, daughters


def _align_daughters(daughters, n_children):
    """Expand the (at most one) kleene daughter to soak up extra children."""
    fixed = len(daughters) - sum(1 for _, k in daughters if k)
    out = []
    for pattern, kleene in daughters:
        if kleene:
            out.extend([pattern] * (n_children - fixed))
        else:
            out.append(pattern)
    return out if len(out) == n_children else None


def _build_tree(grammar: Grammar, raw: tuple, source: VarSource) -> Optional[Tree]:
    """Re-run the rule unifications along a raw tree; None when they fail."""
    rid, children = raw
    if rid.startswith("lex:"):
        _, word, idx = rid.split(":")
        cat = grammar.lexicon[word][int(idx)]
        return Tree(rid, rename_value(cat, {}, source), (), word)
    built = []
    for c in children:
        sub = _build_tree(grammar, c, source)
        if sub is None:
            return None
        built.append(sub)
    rule = grammar.rules_by_id[rid]
    mother, daughters = _instantiate_rule(rule, source)
    patterns = _align_daughters(daughters, len(built))
    if patterns is None:
        return None
    s: Subst = {}
    for pattern, child in zip(patterns, built):
        s2 = unify_values(pattern, child.category, s)
        if s2 is None:
            return None
        s = s2
    return Tree(rid, resolve(mother, s), tuple(built))


def _flatten_tree(tree: Tree, aux_functors: set) -> Tree:
    children = []
    for child in tree.children:
        child = _flatten_tree(child, aux_functors)
        if child.category.functor in aux_functors:
            children.extend(_unchain(child, aux_functors))
        else:
            children.append(child)
    return Tree(tree.rule_id, tree.category, tuple(children), tree.word)


def _unchain(knode: Tree, aux_functors: set) -> list:
    # K -> D yields [D]; K -> K D yields unchain(K) + [D]
    kids = list(knode.children)
    if kids and kids[0].category.functor in aux_functors:
        return _unchain(kids[0], aux_functors) + kids[1:]
    return kids


def unpack_with_stats(forest: PackedForest, grammar: Grammar,
                      kleene_map: Optional[dict] = None,
                      limit: Optional[int] = None) -> tuple:
    """Enumerate up to `limit` validated trees plus the count of trees the
    re-validation filtered out along the way."""
    aux = set(kleene_map or ())
    source = VarSource()
    trees: list = []
    filtered = 0
    if limit == 0:
        return trees, filtered
    for raw in forest.iter_raw_trees():
        tree = _build_tree(grammar, raw, source)
        if tree is None:
            filtered += 1
            continue
        if aux:
            tree = _flatten_tree(tree, aux)
        trees.append(tree)
        if limit is not None and len(trees) >= limit:
            break
    return trees, filtered


def unpack(forest: PackedForest, grammar: Grammar,
           kleene_map: Optional[dict] = None,
           limit: Optional[int] = None) -> list:
    return unpack_with_stats(forest, grammar, kleene_map, limit)[0]


def format_tree(tree: Tree, canon: Optional[dict] = None) -> str:
    """Labeled bracketing `(ruleId category (child)...)`; variable numbering is
    shared across the whole tree so variants print identically."""
    if canon is None:
        canon = {}
    label = format_value(tree.category, canon)
    if tree.word is not None:
        return f"({tree.rule_id} {label} {tree.word})"
    inner = " ".join(format_tree(c, canon) for c in tree.children)
    return f"({tree.rule_id} {label} {inner})"


def tree_multiset(trees) -> list:
    """Sorted serialized forms; the cross-engine differ compares these."""
    return sorted(format_tree(t) for t in trees)
