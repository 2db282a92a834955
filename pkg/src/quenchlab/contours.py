"""Contours: extraction from configurations, classification, enumeration.

A contour is a connected restricted configuration on the 1-thickening of a
component group of the unstable region, together with the labels of the
ground states seen from its exterior and from each hole it encloses.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from functools import lru_cache
from typing import Iterator, Mapping, Optional

from .geometry import (
    EnumerationBudgetError,
    Region,
    Site,
    boundary,
    connected_components,
    external_margin,
    interior,
    internal_margin,
    linf_ball,
    linf_distance,
    thicken,
)
from .disorder import RandomField, ZERO_FIELD
from .models import (
    BoundaryCondition,
    ModelInstance,
    hamiltonian,
    local_energy,
)


class ContourError(ValueError):
    """Raised when values do not form a valid contour."""


class Contour:
    """Support region, values on it, exterior label, labeled hole regions."""

    __slots__ = (
        "support", "_values", "label", "interiors", "_hash",
        "_thick_sites", "_int_sites",
    )

    def __init__(self, support: Region, values: Mapping, label: int, interiors: dict):
        self.support = support
        self._values = dict(values)
        self.label = label
        self.interiors = dict(interiors)
        self._hash = hash(
            (support, tuple(sorted(self._values.items())), label)
        )
        self._thick_sites = None
        self._int_sites = None

    @property
    def values(self) -> dict:
        return self._values

    def interior_union(self) -> Region:
        return Region(self.interior_sites(), self.support.dimension)

    def interior_sites(self) -> frozenset:
        if self._int_sites is None:
            sites: set = set()
            for reg in self.interiors.values():
                sites |= reg.sites
            self._int_sites = frozenset(sites)
        return self._int_sites

    def thickened_sites(self) -> frozenset:
        if self._thick_sites is None:
            self._thick_sites = thicken(self.support, 1).sites
        return self._thick_sites

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Contour)
            and self.support == other.support
            and self._values == other._values
            and self.label == other.label
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Contour(|sC|={len(self.support)}, label={self.label})"


def unstable_sites(model: ModelInstance, lookup, candidates) -> set:
    """Sites where every ground state is contradicted within distance 1."""
    grounds = model.ground_states
    out = set()
    for s in candidates:
        ball = linf_ball(s, 1)
        if all(any(lookup(t) != b for t in ball) for b in grounds):
            out.add(s)
    return out


def _classify(model: ModelInstance, support: Region, values: Mapping):
    """Exterior label and labeled holes of a candidate contour.

    Every hole (finite complement component) must see a single constant
    ground value on its rim, and so must the true exterior.
    """
    holes = interior(support)
    hole_sites = set()
    for h in holes:
        hole_sites |= h.sites
    interiors: dict[int, set] = defaultdict(set)
    ground_of = {model.ground_value(k): k for k in range(model.n_ground)}
    for h in holes:
        rim_values = {
            values[s]
            for c in h
            for s in linf_ball(c, 1)
            if s in support
        }
        if len(rim_values) != 1:
            raise ContourError(f"mixed values on the rim of hole {h!r}")
        v = rim_values.pop()
        if v not in ground_of:
            raise ContourError(f"hole rim value {v!r} is not a ground state")
        interiors[ground_of[v]] |= h.sites
    ext_values = set()
    for s in boundary(support, 1, "internal"):
        for c in linf_ball(s, 1):
            if c not in support and c not in hole_sites:
                ext_values.add(values[s])
                break
    if len(ext_values) != 1:
        raise ContourError("mixed values on the exterior rim")
    v = ext_values.pop()
    if v not in ground_of:
        raise ContourError(f"exterior rim value {v!r} is not a ground state")
    label = ground_of[v]
    return label, {
        k: Region(sites, support.dimension) for k, sites in interiors.items()
    }


def contour_from_values(
    model: ModelInstance, support: Region, values: Mapping, deep_check: bool = True
) -> Contour:
    """Build and validate a contour from its support and values.

    Checks: connected support; every site within distance 2 of a complement
    component held at that component's adjacent ground; every deeper site
    unstable under the canonical embedding; consistent hole/exterior labels.
    """
    if len(connected_components(support)) != 1:
        raise ContourError("contour support must be connected")
    if set(values) != support.sites:
        raise ContourError("values must be defined exactly on the support")
    label, interiors = _classify(model, support, values)
    hole_of = {}
    for k, regk in interiors.items():
        b = model.ground_value(k)
        for t in regk:
            hole_of[t] = b
    b_ext = model.ground_value(label)
    margin = internal_margin(support, 2)
    for s in margin:
        for t in linf_ball(s, 2):
            if t in support:
                continue
            if values[s] != hole_of.get(t, b_ext):
                raise ContourError(
                    "a site within distance 2 of the complement is not at "
                    "the adjacent ground"
                )
    c = Contour(support, values, label, interiors)
    if deep_check:
        lookup = embed_lookup(model, c)
        deep = support.difference(margin)
        unstable = unstable_sites(model, lookup, deep)
        if unstable != deep.sites:
            raise ContourError("a site below the depth-2 margin is stable")
    return c


def embed_lookup(model: ModelInstance, c: Contour):
    """Infinite-volume lookup for the canonical embedding of one contour:
    contour values on the support, each hole at its ground, the exterior at
    the contour's label."""
    values = c.values
    hole_of = {}
    for k, reg in c.interiors.items():
        for s in reg:
            hole_of[s] = model.ground_value(k)
    b_ext = model.ground_value(c.label)

    def lookup(t):
        if t in values:
            return values[t]
        return hole_of.get(t, b_ext)

    return lookup


def embed(model: ModelInstance, c: Contour, pad: int = 3) -> dict:
    """Canonical embedding of a contour as a configuration dictionary over
    its support thickened by `pad`."""
    lookup = embed_lookup(model, c)
    window = thicken(c.support.union(c.interior_union()), pad)
    return {s: lookup(s) for s in window}


class ContourSet:
    """Contours extracted from one configuration, with the nesting order."""

    def __init__(self, contours):
        self.contours = tuple(contours)

    def __len__(self):
        return len(self.contours)

    def __iter__(self):
        return iter(self.contours)

    def nested(self, inner: Contour, outer: Contour) -> bool:
        """inner lies inside one of outer's holes."""
        return inner.support.sites <= outer.interior_sites()

    def external(self) -> list:
        """Contours not nested inside any other contour of the set."""
        return [
            c
            for c in self.contours
            if not any(o is not c and self.nested(c, o) for o in self.contours)
        ]

    def order_pairs(self) -> list:
        return [
            (a, b)
            for a in self.contours
            for b in self.contours
            if a is not b and self.nested(a, b)
        ]


def support_distance(a: Region, b: Region) -> int:
    return min(linf_distance(s, t) for s in a for t in b)


def compatible(c1: Contour, c2: Contour) -> bool:
    """Two contours may coexist when far apart (distance > 1) or nested."""
    if not (c1.thickened_sites() & c2.support.sites):
        return True
    return (
        c1.support.sites <= c2.interior_sites()
        or c2.support.sites <= c1.interior_sites()
    )


def extract_contours(
    model: ModelInstance, x: Mapping, exterior: Optional[int] = None
) -> ContourSet:
    """All contours of a configuration that agrees with a ground state
    outside a bounded set.

    x maps sites to values on a domain large enough to contain the thickened
    unstable region; sites outside the domain are read as the exterior
    ground (inferred from the domain's boundary ring when not given).
    """
    domain = Region(x.keys(), model.dimension)
    if exterior is None:
        rim = {x[s] for s in boundary(domain, 1, "internal")}
        matches = [
            k for k in range(model.n_ground) if rim == {model.ground_value(k)}
        ]
        if not matches:
            raise ContourError(
                "configuration is not constant at a ground state on its rim"
            )
        exterior = matches[0]
    b_ext = model.ground_value(exterior)

    def lookup(t):
        return x.get(t, b_ext)

    diff = Region(
        {s for s in domain if x[s] != b_ext}, model.dimension
    )
    if not diff.sites:
        return ContourSet(())
    candidates = thicken(diff, 1)
    u = unstable_sites(model, lookup, candidates)
    tb = thicken(Region(u, model.dimension), 1)
    contours = []
    for comp in connected_components(tb):
        values = {s: lookup(s) for s in comp}
        contours.append(contour_from_values(model, comp, values, deep_check=False))
    return ContourSet(contours)


# ---------------------------------------------------------------------------
# Hamiltonian decomposition identity


def decomposition_check(
    model: ModelInstance, eta: RandomField, reg: Region, k0: int, x: Mapping
):
    """Both sides of the exterior-contour decomposition of H^{k0} over reg.

    Requires x to agree with the k0 ground on the depth-3 internal margin of
    reg, so every contour and every hole stays inside reg.
    """
    b0 = model.ground_value(k0)
    for s in internal_margin(reg, 3):
        if x[s] != b0:
            raise ContourError("x must be at the exterior ground on the margin")
    lhs = hamiltonian(model, eta, reg, BoundaryCondition.ground(k0), x)
    cs = extract_contours(model, dict(x), exterior=k0)
    ext = cs.external()
    covered = set()
    for c in ext:
        covered |= c.support.sites | c.interior_union().sites
    outside = Region(reg.sites - covered, model.dimension)
    ground_lookup = lambda t: b0
    rhs = local_energy(model, eta, outside, ground_lookup)
    for c in ext:
        rhs += local_energy(model, eta, c.support, embed_lookup(model, c))
        for k, hole in c.interiors.items():
            sub = {s: x[s] for s in hole}
            rhs += hamiltonian(model, eta, hole, BoundaryCondition.ground(k), sub)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Enumeration


@lru_cache(maxsize=8)
def _u_shapes(n_max: int, d: int, budget: int):
    """Distinct candidate unstable sets, grouped by thickened size.

    A contour support is the 1-thickening of a group of unstable sites that
    is connected under L-inf distance <= 3 (parts further apart thicken into
    separate components).  Shapes are normalized to a zero min-corner.
    Growth is monotone in the thickened size, so pruning at n_max is exact.
    """
    reach = [
        off
        for off in itertools.product(range(-3, 4), repeat=d)
        if any(off) and max(abs(c) for c in off) <= 3
    ]

    def normalize(sites):
        lo = [min(s[i] for s in sites) for i in range(d)]
        return frozenset(tuple(c - l for c, l in zip(s, lo)) for s in sites)

    root = frozenset({(0,) * d})
    seen = {root}
    stack = [root]
    by_size: dict[int, list] = defaultdict(list)
    visited = 0
    while stack:
        u = stack.pop()
        visited += 1
        if visited > budget:
            raise EnumerationBudgetError(
                f"unstable-set enumeration exceeded budget {budget}"
            )
        size = len(thicken(Region(u, d)))
        if size <= n_max:
            by_size[size].append(u)
        for s in u:
            for off in reach:
                t = tuple(c + o for c, o in zip(s, off))
                if t in u:
                    continue
                grown = normalize(u | {t})
                if grown in seen:
                    continue
                if len(thicken(Region(grown, d))) > n_max:
                    continue
                seen.add(grown)
                stack.append(grown)
    return {size: tuple(shapes) for size, shapes in by_size.items()}


def _candidate_supports(n: int, d: int, budget: int) -> list:
    shapes = _u_shapes(n, d, budget).get(n, ())
    supports = {thicken(Region(u, d)) for u in shapes}
    return sorted(supports, key=lambda r: tuple(sorted(r.sites)))


def _complement_collars(support: Region) -> list:
    """Support sites within distance 2 of each complement component, the
    true exterior first, then one entry per hole."""
    holes = interior(support)
    hole_of = {}
    for i, h in enumerate(holes):
        for t in h:
            hole_of[t] = i
    collars = [set() for _ in range(len(holes) + 1)]
    for s in support:
        for t in linf_ball(s, 2):
            if t in support:
                continue
            collars[hole_of.get(t, -1) + 1].add(s)
    return collars


def _assignments(model: ModelInstance, support: Region, budget: int) -> Iterator[dict]:
    """All value maps holding each complement-component collar at one ground
    and deeper sites free; validity is established afterwards by a
    round-trip extraction."""
    if model.spin_values is None:
        raise ContourError(f"{model.name} has no finite spin space to enumerate")
    collars = _complement_collars(support)
    margin = Region(frozenset().union(*collars), support.dimension)
    deep = sorted(support.difference(margin))
    total = model.n_ground ** len(collars) * len(model.spin_values) ** len(deep)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} candidate assignments on a size-{len(support)} support "
            f"exceed budget {budget}"
        )
    for labels in itertools.product(range(model.n_ground), repeat=len(collars)):
        base: dict = {}
        ok = True
        for collar, k in zip(collars, labels):
            b = model.ground_value(k)
            for s in collar:
                if base.setdefault(s, b) != b:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        for deep_vals in itertools.product(model.spin_values, repeat=len(deep)):
            values = dict(base)
            values.update(zip(deep, deep_vals))
            yield values


def _valid_contour(model: ModelInstance, support: Region, values: dict):
    """Round-trip validation: the candidate must extract back to itself."""
    try:
        c = contour_from_values(model, support, values)
    except ContourError:
        return None
    lookup = embed_lookup(model, c)
    if model.constraint is not None:
        window = thicken(support.union(c.interior_union()), 1)
        if any(not model.constraint(s, lookup) for s in window):
            return None
    cfg = embed(model, c, pad=3)
    try:
        extracted = extract_contours(model, cfg, exterior=c.label)
    except ContourError:
        return None
    if len(extracted) != 1:
        return None
    e = extracted.contours[0]
    if e != c:
        return None
    return c


def enumerate_contours(
    model: ModelInstance,
    n: int,
    anchored: bool = True,
    budget: int = 200_000,
) -> list:
    """All contours with support size exactly n.

    Anchored: the origin lies in the support or in a hole.  Unanchored
    enumeration returns one representative per translation class.
    """
    out = []
    for support0 in _candidate_supports(n, model.dimension, budget):
        if anchored:
            targets = set(support0.sites)
            hole_sites = set()
            for h in interior(support0):
                hole_sites |= h.sites
            targets |= hole_sites
            translations = sorted(
                {tuple(-c for c in s) for s in targets}
            )
        else:
            translations = [(0,) * model.dimension]
        per_support = []
        for values0 in _assignments(model, support0, budget):
            c = _valid_contour(model, support0, values0)
            if c is not None:
                per_support.append(c)
        for v in translations:
            for c in per_support:
                out.append(translate_contour(c, v))
    out.sort(
        key=lambda c: (tuple(sorted(c.support.sites)), c.label,
                       tuple(sorted(c.values.items())))
    )
    return out


def enumerate_contours_up_to(
    model: ModelInstance,
    n_max: int,
    anchored: bool = False,
    budget: int = 200_000,
) -> dict:
    """Contours grouped by support size for all sizes up to n_max, sharing a
    single shape-enumeration pass."""
    shapes = _u_shapes(n_max, model.dimension, budget)
    out: dict[int, list] = {}
    for n in sorted(shapes):
        supports = sorted(
            {thicken(Region(u, model.dimension), 1) for u in shapes[n]},
            key=lambda r: tuple(sorted(r.sites)),
        )
        found = []
        for support0 in supports:
            for values0 in _assignments(model, support0, budget):
                c = _valid_contour(model, support0, values0)
                if c is None:
                    continue
                if anchored:
                    targets = set(support0.sites)
                    for h in interior(support0):
                        targets |= h.sites
                    for s in sorted(targets):
                        found.append(
                            translate_contour(c, tuple(-x for x in s))
                        )
                else:
                    found.append(c)
        if found:
            out[n] = found
    return out


def translate_contour(c: Contour, v: Site) -> Contour:
    shift = lambda s: tuple(a + b for a, b in zip(s, v))
    return Contour(
        c.support.translate(v),
        {shift(s): val for s, val in c.values.items()},
        c.label,
        {k: reg.translate(v) for k, reg in c.interiors.items()},
    )


def contour_count_bound(n: int, d: int, n_spin: int) -> float:
    """Combinatorial ceiling e^n (3^d-1)^{2n} N_s^n on anchored contours."""
    from .geometry import region_count_bound

    return region_count_bound(n, d) * n_spin**n


# ---------------------------------------------------------------------------
# Serialization (golden-file format)


def serialize(c: Contour) -> str:
    parts = [f"d={c.support.dimension}", f"label={c.label}"]
    for s in sorted(c.support):
        coord = ",".join(map(str, s))
        parts.append(f"({coord})={c.values[s]!r}")
    return ";".join(parts)


def deserialize(model: ModelInstance, text: str) -> Contour:
    fields = text.split(";")
    if not fields[0].startswith("d=") or not fields[1].startswith("label="):
        raise ContourError("malformed contour record")
    d = int(fields[0][2:])
    label = int(fields[1][6:])
    values = {}
    for item in fields[2:]:
        coord, _, val = item.partition(")=")
        site = tuple(int(t) for t in coord.lstrip("(").split(","))
        if len(site) != d:
            raise ContourError("site dimension mismatch in contour record")
        values[site] = eval(val, {"__builtins__": {}})  # literals only
    support = Region(values.keys(), d)
    c = contour_from_values(model, support, values)
    if c.label != label:
        raise ContourError("stored label disagrees with the reconstructed one")
    return c
