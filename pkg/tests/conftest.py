"""Shared fixtures and random generators for the freetorus test suite."""

from __future__ import annotations

import random

import pytest

from freetorus.core.lattice import IntMatrix
from freetorus.core.normal_form import NormalFormResult, relation_holds

KLEIN_TAGS = ("I", "N", "M", "NM")


def random_parameters(rng: random.Random, bound: int = 8) -> tuple[int, int, int, int]:
    """Random (a, b, c, d) with |.| <= bound and ad + 2(b + c) = 0."""
    while True:
        a, b, d = (rng.randint(-bound, bound) for _ in range(3))
        if (a * d) % 2:
            continue
        c = -(a * d) // 2 - b
        if abs(c) <= bound and relation_holds(a, b, c, d):
            return a, b, c, d


def random_normal_form(rng: random.Random, p: int = 2, bound: int = 8) -> NormalFormResult:
    a, b, c, d = random_parameters(rng, bound)
    return NormalFormResult(a, b, c, d, P=IntMatrix.identity(3), W=IntMatrix.identity(p))


def random_klein_tags(rng: random.Random, p: int) -> list[str]:
    """Random Klein elements containing at least two distinct non-identity ones."""
    while True:
        tags = [rng.choice(KLEIN_TAGS) for _ in range(p)]
        if len(set(tags) - {"I"}) >= 2:
            return tags


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240611)
