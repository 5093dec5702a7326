"""Fixed-arity term categories: signatures, unification, subsumption.

A category is a functor applied to a fixed number of argument values, where
each value is an atom (plain string), a variable, or a nested category.
Variables are scoped to one rule or lexical-entry instance; parsers rename
them apart with a VarSource before any two instances meet.

Unification failure is an ordinary outcome (None); mixing categories that are
not well-formed against the signature in use is a usage error (SignatureError).
"""

from __future__ import annotations

from typing import Iterator, Optional, Union

from .metrics import Counters


class SignatureError(Exception):
    """A category does not fit the signature it is being used against."""


class Var:
    """A term variable. Identity is (name, seq); seq 0 is the source form."""

    __slots__ = ("name", "seq", "_hash")

    def __init__(self, name: str, seq: int = 0):
        self.name = name
        self.seq = seq
        self._hash = hash((name, seq))

    def __eq__(self, other):
        return (self is other) or (isinstance(other, Var)
                                   and self.name == other.name and self.seq == other.seq)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.name!r})" if self.seq == 0 else f"Var({self.name!r},{self.seq})"


class Category:
    """Functor plus a fixed-arity tuple of argument values. Immutable."""

    __slots__ = ("functor", "args", "_hash")

    def __init__(self, functor: str, args: tuple = ()):
        self.functor = functor
        self.args = args
        self._hash = hash((functor, args))

    def __eq__(self, other):
        return (self is other) or (isinstance(other, Category)
                                   and self._hash == other._hash
                                   and self.functor == other.functor
                                   and self.args == other.args)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Category({self.functor!r}, {self.args!r})"

    def __str__(self):
        return format_category(self)


Value = Union[str, Var, Category]
Subst = dict


class Signature:
    """Declared functors (with arities) and atoms; names are disjoint.

    max_depth caps category nesting: a category whose arguments are all atoms
    or variables has depth 0, and each level of category-valued argument adds
    one. The default cap of 2 keeps the ground-category space finite.
    """

    def __init__(self, functors: dict, atoms, max_depth: int = 2):
        self.functors = dict(functors)
        self.atoms = frozenset(atoms)
        self.max_depth = max_depth
        overlap = set(self.functors) & self.atoms
        if overlap:
            raise SignatureError(f"names declared as both functor and atom: {sorted(overlap)}")
        for name, arity in self.functors.items():
            if arity < 0:
                raise SignatureError(f"negative arity for functor {name}")

    def arity(self, functor: str) -> int:
        try:
            return self.functors[functor]
        except KeyError:
            raise SignatureError(f"undeclared functor {functor!r}") from None

    def validate(self, category: Category) -> None:
        """Raise SignatureError unless category is well-formed here."""
        if not isinstance(category, Category):
            raise SignatureError(f"not a category: {category!r}")
        if nesting_depth(category) > self.max_depth:
            raise SignatureError(
                f"category {category} exceeds nesting depth {self.max_depth}")
        self._validate(category)

    def _validate(self, category: Category) -> None:
        arity = self.arity(category.functor)
        if len(category.args) != arity:
            raise SignatureError(
                f"functor {category.functor}/{arity} applied to {len(category.args)} arguments")
        for arg in category.args:
            if isinstance(arg, Category):
                self._validate(arg)
            elif isinstance(arg, str):
                if arg not in self.atoms:
                    raise SignatureError(f"undeclared atom {arg!r} in {category}")
            elif not isinstance(arg, Var):
                raise SignatureError(f"bad value {arg!r} in {category}")


def nesting_depth(value: Value) -> int:
    if isinstance(value, Category):
        if not value.args:
            return 0
        return max((nesting_depth(a) + (1 if isinstance(a, Category) else 0))
                   for a in value.args)
    return 0


class VarSource:
    """Fresh-variable supply for one parse context (not thread-shared)."""

    __slots__ = ("_n",)

    def __init__(self):
        self._n = 0

    def fresh(self, name: str = "_") -> Var:
        self._n += 1
        return Var(name, self._n)


def walk(value: Value, subst: Subst) -> Value:
    """Follow variable bindings to the representative value (shallow)."""
    while isinstance(value, Var):
        bound = subst.get(value)
        if bound is None:
            return value
        value = bound
    return value


def resolve(value: Value, subst: Subst) -> Value:
    """Apply subst throughout value, building a new term."""
    value = walk(value, subst)
    if isinstance(value, Category) and value.args:
        return Category(value.functor, tuple(resolve(a, subst) for a in value.args))
    return value


def variables_of(value: Value) -> set:
    out: set = set()
    _collect_vars(value, out)
    return out


def _collect_vars(value: Value, out: set) -> None:
    if isinstance(value, Var):
        out.add(value)
    elif isinstance(value, Category):
        for a in value.args:
            _collect_vars(a, out)


def rename_value(value: Value, mapping: dict, source: VarSource) -> Value:
    """Rename variables apart, extending mapping with fresh variables."""
    if isinstance(value, Var):
        fresh = mapping.get(value)
        if fresh is None:
            fresh = source.fresh(value.name)
            mapping[value] = fresh
        return fresh
    if isinstance(value, Category) and value.args:
        return Category(value.functor, tuple(rename_value(a, mapping, source)
                                             for a in value.args))
    return value


def _occurs(var: Var, value: Value, subst: Subst) -> bool:
    value = walk(value, subst)
    if isinstance(value, Var):
        return value == var
    if isinstance(value, Category):
        return any(_occurs(var, a, subst) for a in value.args)
    return False


def unify_values(a: Value, b: Value, subst: Subst,
                 occurs_check: bool = True) -> Optional[Subst]:
    """Most general unifier of a and b extending subst, or None.

    The input subst is not mutated; on success a new dict is returned.
    """
    s = dict(subst)
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = walk(x, s)
        y = walk(y, s)
        if x is y:
            continue
        if isinstance(x, Var):
            if occurs_check and isinstance(y, Category) and _occurs(x, y, s):
                return None
            s[x] = y
        elif isinstance(y, Var):
            if occurs_check and isinstance(x, Category) and _occurs(y, x, s):
                return None
            s[y] = x
        elif isinstance(x, Category):
            if (not isinstance(y, Category) or x.functor != y.functor
                    or len(x.args) != len(y.args)):
                return None
            stack.extend(zip(x.args, y.args))
        else:
            # atoms (or atom vs category)
            if x != y:
                return None
    return s


def unify(a: Category, b: Category, *, signature: Optional[Signature] = None,
          counters: Optional[Counters] = None,
          occurs_check: bool = True) -> Optional[tuple]:
    """Unify two categories; return (unified category, substitution) or None.

    Passing a signature validates both inputs first and raises SignatureError
    on mismatch, which is distinct from unification failure (None).
    """
    if signature is not None:
        signature.validate(a)
        signature.validate(b)
    if counters is not None:
        counters.unify_attempts += 1
    s = unify_values(a, b, {}, occurs_check)
    if s is None:
        return None
    if counters is not None:
        counters.unify_successes += 1
    return resolve(a, s), s


_SUBSUMES_SOURCE = VarSource()


def subsumes(general: Category, specific: Category, *,
             signature: Optional[Signature] = None) -> bool:
    """True iff some substitution maps general onto specific exactly.

    Variables of specific act as frozen constants, so subsumes(F(X,X), F(Y,Z))
    is False while subsumes(F(Y,Z), F(X,X)) is True.
    """
    if signature is not None:
        signature.validate(general)
        signature.validate(specific)
    if variables_of(general) & variables_of(specific):
        general = rename_value(general, {}, _SUBSUMES_SOURCE)
    binding: dict = {}
    stack = [(general, specific)]
    while stack:
        g, s = stack.pop()
        if isinstance(g, Var):
            prev = binding.get(g)
            if prev is None:
                binding[g] = s
            elif prev != s:
                return False
        elif isinstance(s, Var):
            return False
        elif isinstance(g, Category):
            if (not isinstance(s, Category) or g.functor != s.functor
                    or len(g.args) != len(s.args)):
                return False
            stack.extend(zip(g.args, s.args))
        else:
            if g != s:
                return False
    return True


def variants(a: Category, b: Category) -> bool:
    """Alphabetic-variant test: each subsumes the other."""
    return subsumes(a, b) and subsumes(b, a)


def format_value(value: Value, canon: Optional[dict] = None) -> str:
    if isinstance(value, Var):
        if canon is None:
            return f"{value.name}.{value.seq}" if value.seq else value.name
        idx = canon.setdefault(value, len(canon))
        return f"_{idx}"
    if isinstance(value, Category):
        if not value.args:
            return f"{value.functor}()"
        inner = ",".join(format_value(a, canon) for a in value.args)
        return f"{value.functor}({inner})"
    return value


def format_category(category: Category, canonical: bool = False) -> str:
    """Render a category; canonical mode numbers variables by first occurrence
    so alphabetic variants print identically."""
    return format_value(category, {} if canonical else None)
