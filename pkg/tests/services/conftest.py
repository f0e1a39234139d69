import pytest

from rs_chain import corpus
from rs_chain.services.rs_game import build_game


@pytest.fixture(scope="session")
def convex_pair():
    """Two retailers p = 7 - q and 8 - q; the game is convex."""
    return corpus.CONVEX_PAIR.situation


@pytest.fixture(scope="session")
def steep_pair():
    return corpus.STEEP_DISCOUNT_PAIR.situation


@pytest.fixture(scope="session")
def symmetric_pair():
    return corpus.SYMMETRIC_PAIR.situation


@pytest.fixture(scope="session")
def convex_game(convex_pair):
    return build_game(convex_pair)


@pytest.fixture(scope="session")
def steep_game(steep_pair):
    return build_game(steep_pair)


@pytest.fixture(scope="session")
def symmetric_game(symmetric_pair):
    return build_game(symmetric_pair)
