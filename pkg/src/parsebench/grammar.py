"""Grammar formalism: rules with optional kleene daughters, lexicon, loading.

Grammar text format (one statement per ';', comments from '#' to end of line):

    atoms sg pl nom acc ;
    cat S/0 NP/2 VP/1 Det/1 N/1 ;           # functor/arity
    start S ;
    rule r1 : S() -> NP(X, nom) VP(X) ;
    rule r3 : NP(X, C) -> NP(X, C) PP()* ;  # trailing * marks a kleene daughter
    word the : Det(X) ;

Tokens beginning with an uppercase letter are variables; other bare tokens in
argument position must be declared atoms. A kleene daughter matches one or
more constituents: with empty daughter sequences (epsilon rules) rejected at
load, a zero-repetition reading would smuggle epsilon back in (and, on rules
like ``NP -> NP PP()*``, collapse into unary cycles), so repetition here means
"at least once".
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Optional

from .terms import (Category, Signature, SignatureError, Value, Var,
                    nesting_depth, variables_of)

CATEGORY_SPACE_CEILING = 10 ** 18


class GrammarError(Exception):
    """Malformed grammar text or an invalid grammar object."""


class ParseError(Exception):
    """A parse invocation that cannot proceed (bad input, table mismatch)."""


class UnknownWordError(ParseError):
    def __init__(self, word: str, position: int):
        super().__init__(f"unknown word {word!r} at position {position}")
        self.word = word
        self.position = position


@dataclass(frozen=True)
class Daughter:
    category: Category
    kleene: bool = False


@dataclass(frozen=True)
class Rule:
    """One phrase-structure rule. `source` names the original rule for rules
    introduced by kleene expansion."""
    id: str
    mother: Category
    daughters: tuple
    source: Optional[str] = None

    def __post_init__(self):
        if not self.daughters:
            raise GrammarError(f"rule {self.id}: empty daughter sequence (epsilon rules are rejected)")
        if sum(1 for d in self.daughters if d.kleene) > 1:
            raise GrammarError(f"rule {self.id}: more than one kleene daughter")

    @property
    def origin(self) -> str:
        return self.source or self.id


@dataclass(frozen=True)
class GrammarStats:
    rule_count: int
    max_daughters: int
    category_space_bound: int
    category_space_saturated: bool
    kleene_rule_count: int
    le2_daughter_fraction: float


class Grammar:
    """Immutable after construction; shareable across concurrent parses."""

    def __init__(self, signature: Signature, rules, start: str, lexicon: dict):
        self.signature = signature
        self.rules = tuple(rules)
        self.start = start
        # word -> tuple of categories; entry order is significant (it names
        # lexical derivations "lex:<word>:<index>" in forests).
        self.lexicon = {w: tuple(cats) for w, cats in lexicon.items()}
        self.rules_by_id = {r.id: r for r in self.rules}
        self._validate()

    def _validate(self) -> None:
        sig = self.signature
        if self.start not in sig.functors:
            raise GrammarError(f"start functor {self.start!r} not declared")
        if len(self.rules_by_id) != len(self.rules):
            seen = set()
            dup = next(r.id for r in self.rules if r.id in seen or seen.add(r.id))
            raise GrammarError(f"duplicate rule id {dup!r}")
        for rule in self.rules:
            try:
                sig.validate(rule.mother)
                for d in rule.daughters:
                    sig.validate(d.category)
            except SignatureError as exc:
                raise GrammarError(f"rule {rule.id}: {exc}") from exc
        for word, cats in self.lexicon.items():
            for cat in cats:
                try:
                    sig.validate(cat)
                except SignatureError as exc:
                    raise GrammarError(f"word {word!r}: {exc}") from exc
        self._check_unary_cycles()

    def _check_unary_cycles(self) -> None:
        # A chain of single-daughter rules whose functors cycle would admit
        # infinitely many trees over one span; reject like epsilon rules.
        edges: dict = {}
        for rule in self.rules:
            if len(rule.daughters) == 1:
                edges.setdefault(rule.mother.functor, set()).add(
                    rule.daughters[0].category.functor)
        visiting: set = set()
        done: set = set()

        def visit(f: str) -> None:
            if f in done:
                return
            if f in visiting:
                raise GrammarError(
                    f"unary rule cycle through functor {f!r} (would admit infinite trees)")
            visiting.add(f)
            for g in edges.get(f, ()):
                visit(g)
            visiting.discard(f)
            done.add(f)

        for f in list(edges):
            visit(f)

    def has_kleene(self) -> bool:
        return any(d.kleene for r in self.rules for d in r.daughters)

    def lexical_categories(self):
        for word, cats in self.lexicon.items():
            for idx, cat in enumerate(cats):
                yield word, idx, cat

    def free_mother_variables(self, rule: Rule) -> set:
        """Mother variables bound by no daughter (they stay free in results)."""
        bound: set = set()
        for d in rule.daughters:
            bound |= variables_of(d.category)
        return variables_of(rule.mother) - bound


# ---------------------------------------------------------------------------
# Text format

_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*|->|[();:,/*]|\S")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")


def _tokenize(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for tok in _TOKEN_RE.findall(line):
            yield tok, lineno


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokenize(text))
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def next(self) -> str:
        if self.pos >= len(self.toks):
            raise GrammarError("unexpected end of grammar text")
        tok, _ = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise GrammarError(f"line {self.line()}: expected {tok!r}, got {got!r}")

    def line(self) -> int:
        i = min(self.pos, len(self.toks) - 1)
        return self.toks[i][1] if self.toks else 0

    def name(self) -> str:
        tok = self.next()
        if not _NAME_RE.match(tok):
            raise GrammarError(f"line {self.line()}: expected a name, got {tok!r}")
        return tok


def _parse_value(p: _Parser, atoms: set, functors: dict) -> Value:
    tok = p.name()
    if p.peek() == "(":
        return _parse_category(p, tok, atoms, functors)
    if tok[0].isupper():
        return Var(tok)
    if tok not in atoms:
        raise GrammarError(f"line {p.line()}: undeclared atom {tok!r}")
    return tok


def _parse_category(p: _Parser, functor: str, atoms: set, functors: dict) -> Category:
    if functor not in functors:
        raise GrammarError(f"line {p.line()}: undeclared functor {functor!r}")
    p.expect("(")
    args = []
    if p.peek() != ")":
        args.append(_parse_value(p, atoms, functors))
        while p.peek() == ",":
            p.next()
            args.append(_parse_value(p, atoms, functors))
    p.expect(")")
    return Category(functor, tuple(args))


def loads(text: str, max_depth: int = 2) -> Grammar:
    """Parse grammar text into a validated Grammar."""
    p = _Parser(text)
    atoms: list = []
    functors: dict = {}
    start: Optional[str] = None
    rules: list = []
    lexicon: dict = {}

    while p.peek() is not None:
        head = p.next()
        if head == ";":
            continue
        if head == "atoms":
            while p.peek() != ";":
                atoms.append(p.name())
            p.expect(";")
        elif head == "cat":
            while p.peek() != ";":
                name = p.name()
                p.expect("/")
                arity_tok = p.next()
                if not arity_tok.isdigit():
                    raise GrammarError(f"line {p.line()}: bad arity {arity_tok!r}")
                if name in functors and functors[name] != int(arity_tok):
                    raise GrammarError(f"line {p.line()}: conflicting arity for {name!r}")
                functors[name] = int(arity_tok)
            p.expect(";")
        elif head == "start":
            start = p.name()
            p.expect(";")
        elif head == "rule":
            rule_id = p.name()
            p.expect(":")
            mother = _parse_category(p, p.name(), set(atoms), functors)
            p.expect("->")
            daughters = []
            while p.peek() != ";":
                cat = _parse_category(p, p.name(), set(atoms), functors)
                kleene = False
                if p.peek() == "*":
                    p.next()
                    kleene = True
                daughters.append(Daughter(cat, kleene))
            p.expect(";")
            rules.append(Rule(rule_id, mother, tuple(daughters)))
        elif head == "word":
            word = p.next()
            p.expect(":")
            cats = [_parse_category(p, p.name(), set(atoms), functors)]
            while p.peek() == ",":
                p.next()
                cats.append(_parse_category(p, p.name(), set(atoms), functors))
            p.expect(";")
            lexicon.setdefault(word, []).extend(cats)
        else:
            raise GrammarError(f"line {p.line()}: unknown statement {head!r}")

    if start is None:
        raise GrammarError("missing start declaration")
    signature = Signature(functors, atoms, max_depth=max_depth)
    return Grammar(signature, rules, start, lexicon)


def load(path, max_depth: int = 2) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), max_depth=max_depth)


# ---------------------------------------------------------------------------
# Kleene expansion

# aux functor name -> id of the rule whose kleene daughter it replaces
KleeneMap = dict


def expand_kleene(g: Grammar) -> tuple:
    """Rewrite kleene daughters into recursive auxiliary rules.

    ``M -> a D* b`` becomes ``M -> a K b``, ``K -> D`` and ``K -> K D`` with a
    fresh functor K carrying D's variables, so agreement still flows through
    the chain. Returns (grammar, kleene_map); the map lets forest unpacking
    flatten K-chains back into iterated daughters. Grammars without kleene
    daughters come back unchanged with an empty map.
    """
    if not g.has_kleene():
        return g, {}

    functors = dict(g.signature.functors)
    rules: list = []
    kleene_map: KleeneMap = {}
    counter = itertools.count(1)

    for rule in g.rules:
        idx = next((i for i, d in enumerate(rule.daughters) if d.kleene), None)
        if idx is None:
            rules.append(rule)
            continue
        d = rule.daughters[idx]
        aux = f"k{next(counter)}_{rule.id}"
        while aux in functors or aux in g.signature.atoms:
            aux = f"k{next(counter)}_{rule.id}"
        carried = tuple(sorted(variables_of(d.category), key=lambda v: (v.name, v.seq)))
        functors[aux] = len(carried)
        aux_cat = Category(aux, carried)
        kleene_map[aux] = rule.id
        new_daughters = (rule.daughters[:idx] + (Daughter(aux_cat),)
                         + rule.daughters[idx + 1:])
        rules.append(Rule(rule.id, rule.mother, new_daughters, source=rule.origin))
        rules.append(Rule(f"{rule.id}.k1", aux_cat, (Daughter(d.category),),
                          source=rule.origin))
        rules.append(Rule(f"{rule.id}.k2", aux_cat,
                          (Daughter(aux_cat), Daughter(d.category)),
                          source=rule.origin))

    signature = Signature(functors, g.signature.atoms, g.signature.max_depth)
    return Grammar(signature, rules, g.start, g.lexicon), kleene_map


# ---------------------------------------------------------------------------
# Statistics

def _saturating_mul(a: int, b: int, ceiling: int) -> int:
    v = a * b
    return ceiling if v > ceiling else v


def grammar_stats(g: Grammar, ceiling: int = CATEGORY_SPACE_CEILING) -> GrammarStats:
    """Summary statistics including an over-approximate ground-category bound.

    The bound multiplies, per functor argument position, the number of atoms
    seen there across rules and lexicon (widened to the whole declared atom
    set as soon as a variable occurs) plus the counts of nested functors seen
    there, down to the nesting cap. It saturates at `ceiling`, in which case
    category_space_saturated is set and the bound reads "at least ceiling".
    """
    atoms_at: dict = {}
    open_at: dict = {}
    nested_at: dict = {}

    def scan(cat: Category) -> None:
        for i, arg in enumerate(cat.args):
            key = (cat.functor, i)
            if isinstance(arg, Var):
                open_at[key] = True
            elif isinstance(arg, Category):
                nested_at.setdefault(key, set()).add(arg.functor)
                scan(arg)
            else:
                atoms_at.setdefault(key, set()).add(arg)

    for rule in g.rules:
        scan(rule.mother)
        for d in rule.daughters:
            scan(d.category)
    for _, _, cat in g.lexical_categories():
        scan(cat)

    total_atoms = len(g.signature.atoms)
    saturated = False

    def count_functor(f: str, depth: int) -> int:
        nonlocal saturated
        total = 1
        for i in range(g.signature.functors[f]):
            key = (f, i)
            width = total_atoms if open_at.get(key) else len(atoms_at.get(key, ()))
            if depth > 0:
                for nested in nested_at.get(key, ()):
                    width += count_functor(nested, depth - 1)
            total = _saturating_mul(total, width, ceiling)
            if total >= ceiling:
                saturated = True
                return ceiling
        return total

    bound = 0
    for f in sorted(g.signature.functors):
        bound += count_functor(f, g.signature.max_depth)
        if bound > ceiling:
            bound = ceiling
            saturated = True
            break

    daughter_counts = [len(r.daughters) for r in g.rules]
    le2 = sum(1 for c in daughter_counts if c <= 2)
    return GrammarStats(
        rule_count=len(g.rules),
        max_daughters=max(daughter_counts, default=0),
        category_space_bound=bound,
        category_space_saturated=saturated,
        kleene_rule_count=sum(1 for r in g.rules if any(d.kleene for d in r.daughters)),
        le2_daughter_fraction=(le2 / len(g.rules)) if g.rules else 1.0,
    )
