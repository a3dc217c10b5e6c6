"""Square-lattice geometry: sites, unit directions, and named regions.

Sites are integer pairs (x, y).  The growth processes in this package emit
particles from the vertical axis {0} x Z, so "level" always refers to the
y-coordinate of a source site and horizontal "radius" to |x|.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Iterable, NamedTuple


class Site(NamedTuple):
    x: int
    y: int

    def translate(self, dx: int, dy: int) -> "Site":
        return Site(self.x + dx, self.y + dy)


def site_order_key(site: Site) -> tuple[int, int]:
    """Canonical ordering key: by row first, then by column."""
    return (site[1], site[0])


class Direction(IntEnum):
    """The four unit steps, encoded to match the 2-bit stack values."""

    PLUS_X = 0
    MINUS_X = 1
    PLUS_Y = 2
    MINUS_Y = 3

    @property
    def step(self) -> tuple[int, int]:
        return _STEPS[self]


_STEPS = {
    Direction.PLUS_X: (1, 0),
    Direction.MINUS_X: (-1, 0),
    Direction.PLUS_Y: (0, 1),
    Direction.MINUS_Y: (0, -1),
}

#: Steps indexed by direction code, for loops that avoid the enum.
STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def neighbors(site: Site) -> tuple[Site, Site, Site, Site]:
    x, y = site
    return (Site(x + 1, y), Site(x - 1, y), Site(x, y + 1), Site(x, y - 1))


def source_site(level: int) -> Site:
    """Source for a given level: the axis site (0, level)."""
    return Site(0, level)


def source_segment(half_height: int) -> list[Site]:
    """Axis sites (0, i) for |i| <= half_height, in level order 0, 1, -1, ..."""
    out = [Site(0, 0)]
    for i in range(1, half_height + 1):
        out.append(Site(0, i))
        out.append(Site(0, -i))
    return out


@dataclass(frozen=True)
class Region:
    """A named site predicate, used for walk monitors and forest restrictions."""

    name: str
    contains: Callable[[int, int], bool]

    def __call__(self, site: Site) -> bool:
        return self.contains(site[0], site[1])


def strip(half_height: int) -> Region:
    """Horizontal strip |y| <= half_height."""
    return Region(f"strip({half_height})", lambda x, y: abs(y) <= half_height)


def column_block(half_width: float) -> Region:
    """Vertical block |x| <= half_width (full height)."""
    return Region(f"columns({half_width})", lambda x, y: abs(x) <= half_width)


def rectangle(half_width: float, half_height: int) -> Region:
    """|x| <= half_width and |y| <= half_height."""
    return Region(
        f"rect({half_width},{half_height})",
        lambda x, y: abs(x) <= half_width and abs(y) <= half_height,
    )


def upper_half_plane(min_y: int) -> Region:
    """Sites with y >= min_y."""
    return Region(f"halfplane(y>={min_y})", lambda x, y: y >= min_y)


def ball(radius: float, center: Site = Site(0, 0)) -> list[Site]:
    """Lattice sites within Euclidean distance radius of center."""
    r = int(radius)
    out = []
    for y in range(center.y - r, center.y + r + 1):
        for x in range(center.x - r, center.x + r + 1):
            if (x - center.x) ** 2 + (y - center.y) ** 2 <= radius * radius:
                out.append(Site(x, y))
    return out


def translate_sites(sites: Iterable[Site], dx: int, dy: int) -> set[Site]:
    return {Site(x + dx, y + dy) for x, y in sites}


def reflect_sites_y(sites: Iterable[Site], axis_two_y: int) -> set[Site]:
    """Reflect across the horizontal line y = axis_two_y / 2."""
    return {Site(x, axis_two_y - y) for x, y in sites}


def connected_components(sites: Iterable[Site]) -> list[set[Site]]:
    """4-adjacency components: consecutive sites differ by one unit step."""
    todo = set(Site(x, y) for x, y in sites)
    comps: list[set[Site]] = []
    while todo:
        seed_site = todo.pop()
        comp = {seed_site}
        frontier = [seed_site]
        while frontier:
            cur = frontier.pop()
            for nb in neighbors(cur):
                if nb in todo:
                    todo.discard(nb)
                    comp.add(nb)
                    frontier.append(nb)
        comps.append(comp)
    return comps
