import pytest
from hypothesis import strategies as st

from growthrate.words import FreeGroup, free_reduce


def reduced_words(rank: int = 2, max_size: int = 12, min_size: int = 0):
    """Freely reduced words over F_rank, as letter tuples."""
    return st.lists(st.integers(0, 2 * rank - 1), min_size=min_size, max_size=max_size).map(free_reduce).filter(
        lambda w: len(w) >= min_size
    )


@pytest.fixture(scope="session")
def F2():
    return FreeGroup.of_rank(2)


@pytest.fixture(scope="session")
def F3():
    return FreeGroup.of_rank(3)
