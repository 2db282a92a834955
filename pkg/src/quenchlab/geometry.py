"""Finite Z^d geometry: sites, regions, boundaries, connectivity, enumeration.

All distances are L-infinity unless a function takes an explicit adjacency
argument.  Regions are immutable and hashable; every operation here is pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

Site = tuple[int, ...]


class EnumerationBudgetError(RuntimeError):
    """Raised when a requested enumeration exceeds the configured budget."""


def linf_ball(center: Site, radius: int) -> list[Site]:
    """All sites within L-inf distance `radius` of `center` (inclusive)."""
    ranges = [range(c - radius, c + radius + 1) for c in center]
    return [tuple(p) for p in itertools.product(*ranges)]


def linf_neighbors(site: Site) -> list[Site]:
    """The 3^d - 1 sites at L-inf distance exactly 1 (Moore neighborhood)."""
    return [p for p in linf_ball(site, 1) if p != site]


def l1_neighbors(site: Site) -> list[Site]:
    """The 2d sites at L1 distance exactly 1 (von Neumann neighborhood)."""
    out = []
    for i in range(len(site)):
        for delta in (-1, 1):
            p = list(site)
            p[i] += delta
            out.append(tuple(p))
    return out


def linf_distance(a: Site, b: Site) -> int:
    return max(abs(x - y) for x, y in zip(a, b))


class Region:
    """A finite subset of Z^d with deterministic (lexicographic) iteration."""

    __slots__ = ("_sites", "_sorted", "dimension", "_hash")

    def __init__(self, sites: Iterable[Site], dimension: int | None = None):
        self._sites = frozenset(tuple(s) for s in sites)
        self._sorted = tuple(sorted(self._sites))
        if dimension is None:
            if not self._sites:
                raise ValueError("dimension required for an empty region")
            dimension = len(self._sorted[0])
        self.dimension = dimension
        if any(len(s) != dimension for s in self._sorted):
            raise ValueError("mixed-dimension sites in region")
        self._hash = hash((self._sites, dimension))

    def __contains__(self, site: Site) -> bool:
        return site in self._sites

    def __iter__(self) -> Iterator[Site]:
        return iter(self._sorted)

    def __len__(self) -> int:
        return len(self._sites)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Region)
            and self.dimension == other.dimension
            and self._sites == other._sites
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Region(d={self.dimension}, n={len(self)})"

    @property
    def sites(self) -> frozenset[Site]:
        return self._sites

    def union(self, other: "Region") -> "Region":
        return Region(self._sites | other._sites, self.dimension)

    def intersection(self, other: "Region") -> "Region":
        return Region(self._sites & other._sites, self.dimension)

    def difference(self, other: "Region") -> "Region":
        return Region(self._sites - other._sites, self.dimension)

    def symmetric_difference(self, other: "Region") -> "Region":
        return Region(self._sites ^ other._sites, self.dimension)

    def translate(self, vector: Site) -> "Region":
        return Region(
            (tuple(c + v for c, v in zip(s, vector)) for s in self._sites),
            self.dimension,
        )

    def anchor(self) -> Site | None:
        """Lexicographically smallest member, or None if empty."""
        return self._sorted[0] if self._sorted else None

    @property
    def bounding_box(self) -> tuple[Site, Site] | None:
        if not self._sites:
            return None
        lo = tuple(min(s[i] for s in self._sites) for i in range(self.dimension))
        hi = tuple(max(s[i] for s in self._sites) for i in range(self.dimension))
        return lo, hi


def box(lo: Site, hi: Site) -> Region:
    """The box of sites with lo[i] <= s[i] <= hi[i]."""
    ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
    return Region((tuple(p) for p in itertools.product(*ranges)), len(lo))


def cube(side: int, d: int, origin: Site | None = None) -> Region:
    lo = origin if origin is not None else (0,) * d
    hi = tuple(c + side - 1 for c in lo)
    return box(lo, hi)


def boundary(reg: Region, n: int, side: str) -> Region:
    """Exact boundary ring at L-inf distance n.

    side="external": sites outside reg at distance exactly n from reg.
    side="internal": sites inside reg at distance exactly n from the complement.
    """
    if n < 1:
        raise ValueError("boundary distance must be >= 1")
    if side == "external":
        if not reg.sites:
            return Region((), reg.dimension)
        shell = set()
        for s in reg:
            shell.update(linf_ball(s, n))
        out = set()
        for p in shell:
            if p in reg:
                continue
            if min(linf_distance(p, s) for s in _near(reg, p, n)) == n:
                out.add(p)
        return Region(out, reg.dimension)
    if side == "internal":
        return Region(
            (s for s in reg if _distance_to_complement(reg, s) == n),
            reg.dimension,
        )
    raise ValueError(f"unknown side {side!r}")


def _near(reg: Region, p: Site, n: int) -> list[Site]:
    # Candidate region sites within distance n of p (distance to reg <= n here).
    return [s for s in linf_ball(p, n) if s in reg]


def _distance_to_complement(reg: Region, s: Site) -> int:
    # Distance from an interior site to the nearest site outside reg.
    r = 1
    while True:
        for p in linf_ball(s, r):
            if p not in reg:
                return r
        r += 1


def external_margin(reg: Region, n: int) -> Region:
    """Sites outside reg within L-inf distance n (union of rings 1..n)."""
    out: set[Site] = set()
    for s in reg:
        out.update(linf_ball(s, n))
    out -= reg.sites
    return Region(out, reg.dimension)


def internal_margin(reg: Region, n: int) -> Region:
    """Sites of reg within L-inf distance n of the complement (rings 1..n)."""
    comp_halo = external_margin(reg, n)
    out = set()
    for p in comp_halo:
        for s in linf_ball(p, n):
            if s in reg:
                out.add(s)
    return Region(out, reg.dimension)


def thicken(reg: Region, n: int = 1) -> Region:
    """reg together with all sites within L-inf distance n of it."""
    out: set[Site] = set(reg.sites)
    for s in reg:
        out.update(linf_ball(s, n))
    return Region(out, reg.dimension)


def connected_components(reg: Region, adjacency: str = "linf") -> list[Region]:
    """Partition into maximal connected parts, ordered by smallest member.

    adjacency="linf" uses the Moore neighborhood, "l1" the von Neumann one.
    """
    if adjacency == "linf":
        nbrs = linf_neighbors
    elif adjacency == "l1":
        nbrs = l1_neighbors
    else:
        raise ValueError(f"unknown adjacency {adjacency!r}")
    unseen = set(reg.sites)
    parts = []
    # Iterating in sorted order makes component order deterministic.
    for start in reg:
        if start not in unseen:
            continue
        stack = [start]
        unseen.discard(start)
        comp = {start}
        while stack:
            s = stack.pop()
            for t in nbrs(s):
                if t in unseen:
                    unseen.discard(t)
                    comp.add(t)
                    stack.append(t)
        parts.append(Region(comp, reg.dimension))
    return parts


def is_connected(reg: Region, adjacency: str = "linf") -> bool:
    return len(reg) == 0 or len(connected_components(reg, adjacency)) == 1


def interior(reg: Region) -> list[Region]:
    """Finite (bounded) connected components of the complement of reg.

    Components are computed inside the bounding box padded by one; anything
    touching the pad belongs to the unique infinite component.
    """
    if not reg.sites:
        return []
    lo, hi = reg.bounding_box
    pad_lo = tuple(c - 1 for c in lo)
    pad_hi = tuple(c + 1 for c in hi)
    window = box(pad_lo, pad_hi)
    comp = Region(window.sites - reg.sites, reg.dimension)
    parts = connected_components(comp, "linf")
    finite = []
    for part in parts:
        plo, phi = part.bounding_box
        touches_pad = any(
            a == pa or b == pb for a, b, pa, pb in zip(plo, phi, pad_lo, pad_hi)
        )
        if not touches_pad:
            finite.append(part)
    return finite


def interior_union(reg: Region) -> Region:
    parts = interior(reg)
    out: set[Site] = set()
    for p in parts:
        out |= p.sites
    return Region(out, reg.dimension)


def region_count_bound(n: int, d: int) -> float:
    """Combinatorial ceiling e^n * (3^d - 1)^(2n) on anchored region counts."""
    return float(2.718281828459045**n * (3**d - 1) ** (2 * n))


def enumerate_regions(
    n: int,
    d: int,
    anchored: bool = True,
    budget: int = 5_000_000,
) -> list[Region]:
    """All connected (L-inf) regions of size n, optionally anchored at 0.

    Anchored means 0 lies in the region or in one of its finite complement
    components.  Enumeration grows connected sets site by site with a
    canonical-form rule, so each region is produced exactly once.
    """
    if n < 1:
        raise ValueError("region size must be >= 1")
    if anchored:
        # A region with 0 in its interior must contain (j, 0, ..., 0) for
        # some 1 <= j <= n, so enumerate regions through each such site.
        out = []
        origin = (0,) * d
        roots = [origin]
        # Enclosing the origin needs at least a full Moore ring around it.
        if n >= 3**d - 1:
            roots += [(j,) + (0,) * (d - 1) for j in range(1, n + 1)]
        for root in roots:
            if root == origin:
                forbidden: frozenset[Site] = frozenset()
                surround = False
            else:
                # Canonical choice: root is the first positive axis site in
                # the region, so each enclosing region is grown once.
                forbidden = frozenset(
                    (j,) + (0,) * (d - 1) for j in range(0, root[0])
                )
                surround = True
            for reg in _connected_regions_through(
                root, n, d, budget, forbidden, surround
            ):
                if root != origin:
                    lo, hi = reg.bounding_box
                    if not all(a < 0 < b for a, b in zip(lo, hi)):
                        continue
                    if origin not in interior_union(reg):
                        continue
                out.append(reg)
        out.sort(key=lambda r: tuple(sorted(r.sites)))
        return out
    return list(_connected_regions_through((0,) * d, n, d, budget))


def _connected_regions_through(
    root: Site,
    n: int,
    d: int,
    budget: int,
    forbidden: frozenset[Site] = frozenset(),
    surround_origin: bool = False,
) -> Iterator[Region]:
    """Connected L-inf regions of size n containing `root`.

    Standard fixed-animal enumeration: sites adjacent to the growing cluster
    are indexed in discovery order and only sites with a larger index than
    the last added one may extend the cluster, which makes every region
    reachable by exactly one growth sequence.  Sites in `forbidden` are
    excluded; with surround_origin, branches that can no longer straddle the
    origin on every axis within the remaining size are pruned.
    """
    produced = 0
    root = tuple(root)
    frontier = sorted(t for t in linf_neighbors(root) if t not in forbidden)
    known = set(frontier) | {root} | set(forbidden)
    cluster = [root]

    def can_surround():
        remaining = n - len(cluster)
        for axis in range(d):
            coords = [s[axis] for s in cluster]
            if min(coords) - remaining >= 0 or max(coords) + remaining <= 0:
                return False
        return True

    def grow(last_idx):
        nonlocal produced
        if surround_origin and not can_surround():
            return
        if len(cluster) == n:
            produced += 1
            if produced > budget:
                raise EnumerationBudgetError(
                    f"region enumeration exceeded budget of {budget}"
                )
            yield Region(cluster, d)
            return
        for i in range(last_idx + 1, len(frontier)):
            s = frontier[i]
            added = 0
            for t in linf_neighbors(s):
                if t not in known:
                    known.add(t)
                    frontier.append(t)
                    added += 1
            cluster.append(s)
            yield from grow(i)
            cluster.pop()
            for _ in range(added):
                known.discard(frontier.pop())

    yield from grow(-1)


# ---------------------------------------------------------------------------
# Period blocking (reduction to range R = 1)


@dataclass(frozen=True)
class BlockingSpec:
    """Re-encoding of configurations on hypercubic P_b-blocks as super-sites."""

    period: int
    dimension: int

    @property
    def block_size(self) -> int:
        return self.period**self.dimension

    def offsets(self) -> list[Site]:
        """In-block offsets in lexicographic order; fixes the tuple layout."""
        return [
            tuple(p)
            for p in itertools.product(range(self.period), repeat=self.dimension)
        ]

    def block_of(self, site: Site) -> Site:
        # Floor division keeps blocking consistent for negative coordinates.
        return tuple(c // self.period for c in site)

    def block(self, config: dict[Site, object]) -> dict[Site, tuple]:
        """Group per-site values into per-block tuples.

        Every block touched by `config` must be fully covered.
        """
        blocks: dict[Site, dict[Site, object]] = {}
        for site, value in config.items():
            blocks.setdefault(self.block_of(site), {})[site] = value
        out = {}
        offs = self.offsets()
        for b, members in blocks.items():
            base = tuple(c * self.period for c in b)
            try:
                out[b] = tuple(
                    members[tuple(bc + o for bc, o in zip(base, off))]
                    for off in offs
                )
            except KeyError as exc:
                raise ValueError(f"block {b} only partially covered") from exc
        return out

    def unblock(self, blocked: dict[Site, tuple]) -> dict[Site, object]:
        out = {}
        offs = self.offsets()
        for b, values in blocked.items():
            base = tuple(c * self.period for c in b)
            for off, value in zip(offs, values):
                out[tuple(bc + o for bc, o in zip(base, off))] = value
        return out

    def block_region(self, reg: Region) -> Region:
        return Region({self.block_of(s) for s in reg}, reg.dimension)

    def unblock_region(self, reg: Region) -> Region:
        offs = self.offsets()
        sites = set()
        for b in reg:
            base = tuple(c * self.period for c in b)
            sites.update(
                tuple(bc + o for bc, o in zip(base, off)) for off in offs
            )
        return Region(sites, reg.dimension)
