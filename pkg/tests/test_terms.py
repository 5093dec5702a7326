import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parsebench.metrics import Counters
from parsebench.terms import (Category, Signature, SignatureError, Var,
                              VarSource, format_category, nesting_depth,
                              rename_value, resolve, subsumes, unify,
                              unify_values, variants)

from oracle import ground_instances, ground_values

SIG = Signature({"NP": 2, "VP": 1, "F": 2, "G": 1}, {"sg", "pl", "nom", "acc"})

X, Y, Z = Var("X"), Var("Y"), Var("Z")


def NP(*args):
    return Category("NP", args)


def F(*args):
    return Category("F", args)


def G1(*args):
    return Category("G", args)


class TestUnify:
    def test_forced_bindings(self):
        got = unify(NP(X, "acc"), NP("sg", Y))
        assert got is not None
        assert got[0] == NP("sg", "acc")

    def test_functor_mismatch(self):
        assert unify(NP("sg", "acc"), Category("VP", ("sg",))) is None

    def test_inconsistent_shared_variable(self):
        assert unify(F(X, X), F("sg", "pl")) is None

    def test_nested_binding_against_ground_enumeration(self):
        # common ground instances of the inputs == ground instances of the output
        a = F(X, G1(X))
        b = F("sg", Y)
        got = unify(a, b)
        assert got is not None
        assert got[0] == F("sg", G1("sg"))
        domain = ground_values(SIG, 1)
        common = ground_instances(a, domain) & ground_instances(b, domain)
        assert common == ground_instances(got[0], domain)

    def test_failure_matches_ground_enumeration(self):
        a = F(X, X)
        b = F("sg", "pl")
        domain = ground_values(SIG, 0)
        assert ground_instances(a, domain) & ground_instances(b, domain) == set()
        assert unify(a, b) is None

    def test_inputs_not_mutated(self):
        a = NP(X, "acc")
        b = NP("sg", Y)
        unify(a, b)
        assert a == NP(X, "acc") and b == NP("sg", Y)

    def test_counter_increments_per_call(self):
        c = Counters()
        unify(NP(X, "acc"), NP("sg", Y), counters=c)
        unify(NP("sg", "acc"), Category("VP", ("sg",)), counters=c)
        assert c.unify_attempts == 2
        assert c.unify_successes == 1

    def test_signature_mismatch_is_usage_error(self):
        other = Category("Unknown", ())
        with pytest.raises(SignatureError):
            unify(NP(X, "acc"), other, signature=SIG)

    def test_occurs_check(self):
        assert unify(F(X, X), F(G1(Y), Y)) is None


class TestSubsumes:
    def test_general_covers_specific(self):
        assert subsumes(NP(X, "nom"), NP("sg", "nom"))

    def test_specific_does_not_cover_general(self):
        assert not subsumes(NP("sg", "nom"), NP(X, "nom"))

    def test_shared_variable_direction(self):
        assert not subsumes(F(X, X), F(Y, Z))
        assert subsumes(F(Y, Z), F(X, X))

    def test_directions_match_ground_inclusion(self):
        # subsumption must coincide with ground-instance-set inclusion
        domain = ground_values(SIG, 0)
        cases = [F(X, X), F(Y, Z), F(X, "sg"), F("sg", "pl"), F("sg", X)]
        for a in cases:
            for b in cases:
                inclusion = ground_instances(b, domain) <= ground_instances(a, domain)
                assert subsumes(a, b) == inclusion, (a, b)


# ---------------------------------------------------------------------------
# Randomized properties

def random_value(rng, depth, vars_pool):
    roll = rng.random()
    if roll < 0.35:
        return rng.choice(vars_pool)
    if roll < 0.75 or depth == 0:
        return rng.choice(["sg", "pl", "nom", "acc"])
    return random_category(rng, depth - 1, vars_pool)


def random_category(rng, depth, vars_pool):
    functor = rng.choice(["NP", "VP", "F", "G"])
    arity = SIG.functors[functor]
    return Category(functor, tuple(random_value(rng, depth, vars_pool)
                                   for _ in range(arity)))


def random_pair(rng):
    pool_a = [Var("A"), Var("B")]
    pool_b = [Var("P"), Var("Q")]
    return (random_category(rng, 1, pool_a), random_category(rng, 1, pool_b))


def test_unifier_soundness_and_symmetry_randomized():
    rng = random.Random(20240811)
    successes = 0
    for _ in range(2000):
        a, b = random_pair(rng)
        got_ab = unify(a, b)
        got_ba = unify(b, a)
        assert (got_ab is None) == (got_ba is None)
        if got_ab is None:
            continue
        successes += 1
        c_ab, _ = got_ab
        c_ba, _ = got_ba
        assert subsumes(a, c_ab) and subsumes(b, c_ab)
        assert variants(c_ab, c_ba)
    assert successes > 100


def test_unifier_generality_randomized():
    rng = random.Random(7)
    domain = ground_values(SIG, 0)
    checked = 0
    for _ in range(400):
        a, b = random_pair(rng)
        got = unify(a, b)
        if got is None:
            continue
        c, _ = got
        common = ground_instances(a, domain) & ground_instances(b, domain)
        for d in common:
            assert subsumes(c, d)
            checked += 1
    assert checked > 50


def test_subsumes_reflexive_transitive_randomized():
    rng = random.Random(99)
    for _ in range(1500):
        pool = [Var("A"), Var("B")]
        a = random_category(rng, 1, pool)
        b = random_category(rng, 1, [Var("P"), Var("Q")])
        c = random_category(rng, 1, [Var("U"), Var("V")])
        assert subsumes(a, a)
        if subsumes(a, b) and subsumes(b, c):
            assert subsumes(a, c)


# ---------------------------------------------------------------------------
# hypothesis properties over small terms

values = st.deferred(lambda: st.one_of(
    st.sampled_from(["sg", "pl", "nom", "acc"]),
    st.sampled_from([Var("H1"), Var("H2"), Var("H3")]),
    categories))
categories = st.builds(
    lambda f, args: Category(f, tuple(args[:SIG.functors[f]])),
    st.sampled_from(["NP", "VP", "F", "G"]),
    st.lists(values, min_size=2, max_size=2))


@settings(max_examples=300, deadline=None)
@given(categories, categories)
def test_unify_result_subsumed_by_both(a, b):
    got = unify(a, b)
    if got is not None:
        assert subsumes(a, got[0])
        assert subsumes(b, got[0])


@settings(max_examples=300, deadline=None)
@given(categories)
def test_rename_produces_variant(cat):
    renamed = rename_value(cat, {}, VarSource())
    assert variants(cat, renamed)
    assert format_category(cat, canonical=True) == format_category(renamed, canonical=True)


def test_nesting_depth():
    assert nesting_depth(NP("sg", "acc")) == 0
    assert nesting_depth(F("sg", G1("pl"))) == 1
    assert nesting_depth(F(G1(G1("pl")), "sg")) == 2
    with pytest.raises(SignatureError):
        Signature({"F": 2, "G": 1}, {"sg", "pl"}, max_depth=1).validate(
            F(G1(G1("pl")), "sg"))


def test_resolve_follows_chains():
    s = {X: Y, Y: "sg"}
    assert resolve(NP(X, Y), s) == NP("sg", "sg")


def test_unify_values_does_not_mutate_input_subst():
    s = {X: "sg"}
    out = unify_values(Y, "pl", s)
    assert out == {X: "sg", Y: "pl"}
    assert s == {X: "sg"}
