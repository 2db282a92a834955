"""Dyadic cube hierarchy, majority-occupied replicas, geometric audits,
covering nets over anchored regions, and the chaining (Dudley) integral.

The geometric constants b0..b5 are proved to exist, not pinned to values;
audits here report the observed maxima over a seeded region suite.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Region,
    Site,
    boundary,
    box,
    enumerate_regions,
    external_margin,
    interior_union,
    l1_neighbors,
)


@dataclass(frozen=True)
class CubeIndex:
    """One dyadic cube [2^l s, 2^l (s+1))^d."""

    level: int
    base: Site

    def sites(self) -> Region:
        w = 2**self.level
        lo = tuple(c * w for c in self.base)
        hi = tuple(c * w + w - 1 for c in self.base)
        return box(lo, hi)

    @property
    def size(self) -> int:
        return 2 ** (self.level * len(self.base))


@dataclass(frozen=True)
class CoarseReplica:
    level: int
    cubes: frozenset
    covered: Region


def coarse_replica(reg: Region, level: int) -> CoarseReplica:
    """Union of the level-l cubes at least half filled by reg."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    w = 2**level
    d = reg.dimension
    counts: Counter = Counter(tuple(c // w for c in s) for s in reg)
    half = w**d / 2
    cubes = frozenset(
        CubeIndex(level, base) for base, k in counts.items() if k >= half
    )
    covered: set = set()
    for cube in cubes:
        covered |= cube.sites().sites
    return CoarseReplica(level, cubes, Region(covered, d))


def _face_pairs(cubes_in, cubes_out, d):
    """Pairs of bases sharing a (d-1)-face, one admissible and one not."""
    out = []
    for b in cubes_in:
        for i in range(d):
            for delta in (-1, 1):
                nb = tuple(c + (delta if j == i else 0) for j, c in enumerate(b))
                if nb in cubes_out:
                    out.append((b, nb))
    return out


def random_region_suite(count: int, d: int, seed: int, grow_max: int = 40) -> list:
    """Seeded connected random blobs, grown site by site from the origin."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, count, d]))
    suite = []
    for _ in range(count):
        target = int(rng.integers(1, grow_max + 1))
        sites = {(0,) * d}
        frontier = set(l1_neighbors((0,) * d))
        while len(sites) < target:
            pick = sorted(frontier)[int(rng.integers(len(frontier)))]
            sites.add(pick)
            frontier.discard(pick)
            frontier.update(t for t in l1_neighbors(pick) if t not in sites)
        suite.append(Region(sites, d))
    return suite


def audit_geometry(suite: list, levels: int) -> list[dict]:
    """Per-instance audit rows for the three replica inequalities.

    b0: 2^{l(d-1)} <= b0 |ext-boundary(reg) cap (B cup B')| on face-sharing
    admissible/inadmissible cube pairs; b1: |ext-boundary of replica| <=
    b1 |ext-boundary(reg)|; b2: |replica_l symm-diff replica_{l+1}| <=
    b2 2^l |ext-boundary(reg)|.  ratio = lhs/rhs is the constant the
    instance demands.
    """
    rows = []
    for idx, reg in enumerate(suite):
        ext = boundary(reg, 1, "external")
        replicas = [coarse_replica(reg, level) for level in range(levels + 2)]
        for level in range(levels + 1):
            rep = replicas[level]
            admissible = {c.base for c in rep.cubes}
            w = 2**level
            all_bases = {
                tuple(c // w for c in s) for s in reg.union(rep.covered)
            }
            halo = set()
            for b in all_bases:
                halo.update(
                    tuple(c + o for c, o in zip(b, off))
                    for off in itertools.product((-1, 0, 1), repeat=reg.dimension)
                )
            inadmissible = halo - admissible
            for b, nb in _face_pairs(admissible, inadmissible, reg.dimension):
                u = CubeIndex(level, b).sites().union(CubeIndex(level, nb).sites())
                lhs = 2 ** (level * (reg.dimension - 1))
                rhs = len(ext.intersection(u))
                rows.append(
                    {
                        "instance_id": idx,
                        "l": level,
                        "lhs": lhs,
                        "rhs": rhs,
                        "ratio": lhs / rhs if rhs else math.inf,
                        "constant_name": "b0",
                    }
                )
            lhs = len(boundary(rep.covered, 1, "external")) if len(rep.covered) else 0
            rows.append(
                {
                    "instance_id": idx,
                    "l": level,
                    "lhs": lhs,
                    "rhs": len(ext),
                    "ratio": lhs / len(ext) if len(ext) else math.inf,
                    "constant_name": "b1",
                }
            )
            diff = len(rep.covered.symmetric_difference(replicas[level + 1].covered))
            rhs = 2**level * len(ext)
            rows.append(
                {
                    "instance_id": idx,
                    "l": level,
                    "lhs": diff,
                    "rhs": rhs,
                    "ratio": diff / rhs if rhs else math.inf,
                    "constant_name": "b2",
                }
            )
    return rows


def measured_constants(rows: list[dict]) -> dict[str, float]:
    """Max observed lhs/rhs ratio per constant name."""
    out: dict[str, float] = defaultdict(float)
    for r in rows:
        out[r["constant_name"]] = max(out[r["constant_name"]], r["ratio"])
    return dict(out)


def ell0(n: int, b1: float, d: int) -> int:
    """Level beyond which every size-n region has an empty replica."""
    if n < 1 or b1 <= 0:
        raise ValueError("n and b1 must be positive")
    return max(0, math.ceil(math.log(b1 * n) / ((d - 1) * math.log(2))))


def _interiors_of(c) -> dict:
    """Labeled hole regions of a contour, or the unlabeled holes of a bare
    region under a single pseudo-label."""
    if hasattr(c, "interiors"):
        return c.interiors
    return {0: interior_union(c)}


def _support_of(c) -> Region:
    return c.support if hasattr(c, "support") else c


def dbar(c1, c2, nu: float) -> float:
    """Increment pseudo-metric on supports-with-interiors: zero for equal
    supports, otherwise nu times the root of the summed interior symmetric
    differences plus the union of their depth-2 external margins."""
    s1, s2 = _support_of(c1), _support_of(c2)
    if s1 == s2:
        return 0.0
    i1, i2 = _interiors_of(c1), _interiors_of(c2)
    d = s1.dimension
    empty = Region((), d)
    total = 0
    for k in set(i1) | set(i2):
        a = i1.get(k, empty)
        b = i2.get(k, empty)
        total += len(a.symmetric_difference(b))
        total += len(
            external_margin(a, 2).union(external_margin(b, 2))
        )
    return nu * math.sqrt(total)


def region_metric(a: Region, b: Region, nu: float) -> float:
    """nu sqrt(|a symm-diff b|), the plain region metric used by the nets."""
    return nu * math.sqrt(len(a.symmetric_difference(b)))


def dudley_summand(level: int, d: int) -> float:
    """The level term sqrt(l) 2^{-l(d-2)/2} of the chaining series."""
    return math.sqrt(level) * 2.0 ** (-level * (d - 2) / 2.0)


def dudley_summands_decreasing(d: int, levels: int = 12) -> bool:
    vals = [dudley_summand(level, d) for level in range(1, levels + 1)]
    return all(y <= x for x, y in zip(vals, vals[1:]))


def covering_and_entropy(
    n: int,
    d: int,
    levels: int,
    nu: float = 1.0,
    b3: float = 1.0,
    b4: float = 1.0,
    budget: int = 5_000_000,
    family: list | None = None,
) -> list[dict]:
    """Net sizes over anchored size-n regions grouped by the replica of
    their interior, with the dyadic Dudley partial sums.

    Rows carry (l, radius, net_size, entropy_bound, summand,
    dudley_integral): radius = nu b3 2^{l/2} sqrt(n), the net groups regions
    whose interiors share a level-l replica, entropy_bound is
    exp(b4 l n / 2^{l(d-1)}), and dudley_integral accumulates
    (radius increment) sqrt(ln previous net size).
    """
    if family is None:
        family = enumerate_regions(n, d, anchored=True, budget=budget)
    interiors = [interior_union(reg) for reg in family]
    rows = []
    prev_radius = 0.0
    prev_net = max(1, len(family))
    dudley = 0.0
    for level in range(levels + 1):
        radius = nu * b3 * 2.0 ** (level / 2.0) * math.sqrt(n)
        net = len({coarse_replica(i, level).covered for i in interiors})
        dudley += (radius - prev_radius) * math.sqrt(math.log(prev_net))
        rows.append(
            {
                "l": level,
                "radius": radius,
                "net_size": net,
                "entropy_bound": math.exp(b4 * level * n / 2.0 ** (level * (d - 1))),
                "summand": dudley_summand(level, d) if level else 0.0,
                "dudley_integral": dudley,
            }
        )
        prev_radius = radius
        prev_net = net
    return rows


def b3_from_b2(b2: float, d: int, enlarged: bool = True) -> float:
    """The covering radius constant built from the replica-drift constant,
    optionally enlarged by the same-replica cross term."""
    base = 2.0 * (math.sqrt(2.0) + 1.0) * math.sqrt(2.0 * b2)
    if enlarged:
        base += math.sqrt(2.0) * 5.0 ** (d / 2.0)
    return base
