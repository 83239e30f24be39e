import pytest

from ccswb.oracle import EnumSpec, enumerate_terms
from ccswb.syntax import EMPTY_ENV, parse_term


def t(text, env=EMPTY_ENV):
    return parse_term(text, env)


@pytest.fixture(scope="session")
def small_corpus():
    """Every term over {a, b} (both polarities) of prefix depth <= 1, width <= 2."""
    return list(enumerate_terms(EnumSpec(("a", "b"), 1, max_width=2)))


@pytest.fixture(scope="session")
def chain_corpus():
    """Sum-free terms over {a, b} up to depth 3."""
    return list(enumerate_terms(EnumSpec(("a", "b"), 3, max_width=1)))
