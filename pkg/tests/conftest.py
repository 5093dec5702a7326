import pytest

from parsebench import grammar as G


AGREEMENT = """
atoms sg pl nom acc ;
cat S/0 NP/2 VP/1 Det/1 N/1 ;
start S ;
rule s1 : S() -> NP(X, nom) VP(X) ;
rule np1 : NP(X, C) -> Det(X) N(X) ;
word the : Det(X) ;
word a : Det(sg) ;
word dog : N(sg) ;
word dogs : NP(pl, C), N(pl) ;
word cat : N(sg) ;
word cats : NP(pl, C), N(pl) ;
word bark : VP(pl) ;
word barks : VP(sg) ;
word sleeps : VP(sg) ;
"""

COMPOUND = """
atoms x ;
cat S/0 N/0 ;
start S ;
rule top : S() -> N() ;
rule nn : N() -> N() N() ;
word n : N() ;
"""

KLEENE = """
atoms sg pl nom acc ;
cat S/0 NP/2 VP/1 Det/1 N/1 Adj/0 PP/0 P/0 ;
start S ;
rule s1 : S() -> NP(X, nom) VP(X) ;
rule np1 : NP(X, C) -> Det(X) Adj()* N(X) ;
rule np2 : NP(X, C) -> Det(X) N(X) ;
rule vp1 : VP(X) -> VP(X) PP()* ;
rule pp1 : PP() -> P() NP(X, acc) ;
word the : Det(X) ;
word big : Adj() ;
word red : Adj() ;
word dog : N(sg) ;
word dogs : N(pl) ;
word barks : VP(sg) ;
word bark : VP(pl) ;
word near : P() ;
"""


@pytest.fixture(scope="session")
def agreement_grammar():
    return G.loads(AGREEMENT)


@pytest.fixture(scope="session")
def compound_grammar():
    return G.loads(COMPOUND)


@pytest.fixture(scope="session")
def kleene_grammar():
    return G.loads(KLEENE)
