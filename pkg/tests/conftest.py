import functools

import pytest

from hmtk.dyadic import build_tree
from hmtk.generators import GeneratorSpec, generate
from hmtk.wavelets import build_mra

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def cached_space(kind, n, spacing=None, exponent=None):
    return generate(GeneratorSpec(kind, n, spacing, exponent))


@functools.lru_cache(maxsize=None)
def cached_tree(kind, n, spacing=None, exponent=None):
    return build_tree(cached_space(kind, n, spacing, exponent))


@functools.lru_cache(maxsize=None)
def cached_basis(kind, n, spacing=None, exponent=None):
    tree = cached_tree(kind, n, spacing, exponent)
    return build_mra(tree.space, tree)


@pytest.fixture
def grid64():
    return cached_space("grid1d", 64)


@pytest.fixture
def grid256():
    return cached_space("grid1d", 256)


@pytest.fixture
def basis64():
    return cached_basis("grid1d", 64)


@pytest.fixture
def basis256():
    return cached_basis("grid1d", 256)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
