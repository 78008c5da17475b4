"""
Embedded example actions.

These ship with the package so the demo command and the test suite need no
external data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from freetorus.core.action import ActionSpec
from freetorus.core.errors import InputError
from freetorus.core.lattice import IntMatrix
from freetorus.core.normal_form import klein_normal_pair


def fundamental_action(a: int = 0, b: int = 0, c: int = 0, d: int = 0) -> ActionSpec:
    """The Z^2 action generated by the normal-form pair (N, M)."""
    return ActionSpec(klein_normal_pair(a, b, c, d))


def non_klein_z4_action(a: int = 0) -> ActionSpec:
    """
    Spectrally unitary Z^2 action on Z^4 with trivial fixed set and infinite image.

    The lower right block [[0, -1], [1, -2]] is a Jordan block for -1.
    """
    e1 = IntMatrix.from_rows(
        [[1, a, 0, 0], [0, -1, 0, 0], [0, 0, 0, -1], [0, 0, 1, -2]]
    )
    e2 = IntMatrix.diagonal([-1, -1, 1, 1])
    return ActionSpec((e1, e2))


def klein_action(tags: str, a: int = 0, b: int = 0, c: int = 0, d: int = 0) -> ActionSpec:
    """Action whose generators are Klein elements named in tags, e.g. "N,M,NM"."""
    N, M = klein_normal_pair(a, b, c, d)
    table = {"I": IntMatrix.identity(3), "N": N, "M": M, "NM": N @ M}
    try:
        return ActionSpec(tuple(table[tag.strip()] for tag in tags.split(",")))
    except KeyError as e:
        raise InputError(f"unknown Klein element {e.args[0]!r}, expected one of I, N, M, NM") from e


@dataclass(frozen=True)
class Fixture:
    name: str
    description: str
    build: Callable[[], ActionSpec]


EXAMPLES: dict[str, Fixture] = {
    "fundamental": Fixture(
        name="fundamental",
        description="Klein pair N, M with a = b = c = d = 0",
        build=fundamental_action,
    ),
    "fundamental-twisted": Fixture(
        name="fundamental-twisted",
        description="Klein pair N, M with (a, b, c, d) = (2, -1, 0, 1)",
        build=lambda: fundamental_action(2, -1, 0, 1),
    ),
    "non-klein-z4": Fixture(
        name="non-klein-z4",
        description="spectrally unitary Z^2 action on Z^4 whose image is infinite",
        build=non_klein_z4_action,
    ),
    "klein-p3": Fixture(
        name="klein-p3",
        description="Z^3 action with generators N, M, NM",
        build=lambda: klein_action("N,M,NM"),
    ),
    "klein-p4": Fixture(
        name="klein-p4",
        description="Z^4 action with generators M, N, I, NM for (a, b, c, d) = (2, -1, 0, 1)",
        build=lambda: klein_action("M,N,I,NM", 2, -1, 0, 1),
    ),
    "fixed-line": Fixture(
        name="fixed-line",
        description="Z^2 action (N, I) fixing the line spanned by e_1",
        build=lambda: klein_action("N,I"),
    ),
}


def get_example(name: str) -> ActionSpec:
    """Build an embedded example by name."""
    if name not in EXAMPLES:
        raise InputError(f"unknown example {name!r}, expected one of {', '.join(EXAMPLES)}")
    return EXAMPLES[name].build()


def list_examples() -> list[str]:
    return list(EXAMPLES.keys())
