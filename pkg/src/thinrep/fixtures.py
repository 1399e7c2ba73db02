"""Named problem instances used by the CLI and the tests."""
from __future__ import annotations

from .errors import ConfigError
from .matgroup import GroupSpec, Mat2

LUBOTZKY3 = (Mat2(1, 3, 0, 1), Mat2(1, 0, 3, 1))
GAMMA2 = (Mat2(1, 2, 0, 1), Mat2(1, 0, 2, 1))

# For these free groups a breadth-first search confined to norm < T already
# reaches every element of norm < T, so the search radius is T itself.
FIXTURES: dict[str, GroupSpec] = {
    "lubotzky3-01-01": GroupSpec(LUBOTZKY3, 3, (0, 1), (0, 1), prune_factor=1.0, name="lubotzky3-01-01"),
    "lubotzky3-01-75": GroupSpec(LUBOTZKY3, 3, (0, 1), (7, 5), prune_factor=1.0, name="lubotzky3-01-75"),
    "gamma2": GroupSpec(GAMMA2, 2, (1, 0), (0, 1), prune_factor=1.0, name="gamma2"),
}


def fixture(name: str) -> GroupSpec:
    try:
        return FIXTURES[name]
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}") from None
