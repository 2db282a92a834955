"""Model zoo: interaction terms, Hamiltonians, ground states, Peierls scans.

Every Hamiltonian is written in the per-site form

    H = sum_alpha sum_{s in reg} (h^alpha + eta^alpha_s) * g^alpha_s(x)

where each g^alpha_s looks only at spins within L-inf radius R_alpha of s.
With this convention a bond interior to the region is counted at full weight
(half from each endpoint) and a bond crossing the region boundary at half
weight; all oracles in the test suite use the same convention.

Models whose natural ground states are periodic rather than constant
(antiferromagnets, exclusion models on the chessboard) are re-encoded on a
super-site lattice so that the ground states become constant and every
interaction has range 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np

from .geometry import (
    BlockingSpec,
    EnumerationBudgetError,
    Region,
    Site,
    l1_neighbors,
)
from .disorder import QuenchedConfig, RandomField, ZERO_FIELD

Value = object
SpinConfig = dict
Lookup = Callable[[Site], Value]

INF = math.inf


class ModelError(ValueError):
    """Raised for invalid model parameters or incompatible arguments."""


@dataclass(frozen=True)
class Term:
    """One interaction: strength h, local evaluator g_s, optional eta slot."""

    key: str
    strength: float
    rng: int
    evaluate: Callable[[Site, Lookup], float]
    disordered: bool = False
    lower_bound: float = -1.0


@dataclass(frozen=True)
class BoundaryCondition:
    """Either a ground-state label or an explicit exterior configuration."""

    kind: str  # "ground" | "explicit"
    label: int = 0
    config: Optional[Mapping] = None

    @staticmethod
    def ground(k: int) -> "BoundaryCondition":
        return BoundaryCondition("ground", label=k)

    @staticmethod
    def explicit(cfg: Mapping) -> "BoundaryCondition":
        return BoundaryCondition("explicit", config=cfg)


@dataclass(frozen=True)
class BlockedInfo:
    """How a super-site model was derived from a per-site one."""

    period: int
    base_eta_rule: str
    base_keys: tuple
    offsets: tuple


@dataclass(frozen=True)
class ModelInstance:
    name: str
    dimension: int
    spin_values: Optional[tuple]  # None for continuous spins
    terms: tuple
    ground_states: tuple  # constant value per ground label
    ground_energy: float  # per-site energy of every ground state
    declared_rho: Optional[float] = None
    peierls_weight: str = "support"  # or "core": |sC \ boundary(sC,1,int)|
    constraint: Optional[Callable[[Site, Lookup], bool]] = None
    blocking: Optional[BlockingSpec] = None
    blocked: Optional[BlockedInfo] = None
    n_beta: int = 1
    eta_rule: str = "identity"
    symmetries: tuple = ()
    params: dict = field(default_factory=dict)
    # graph models: per-atom cartesian positions and neighbor table
    atom_positions: Optional[tuple] = None
    atom_neighbors: Optional[tuple] = None
    lattice_vectors: Optional[tuple] = None
    partition_delta: Optional[float] = None  # continuous models

    @property
    def n_ground(self) -> int:
        return len(self.ground_states)

    @property
    def max_range(self) -> int:
        return max(t.rng for t in self.terms)

    def ground_value(self, k: int):
        return self.ground_states[k]

    @property
    def n_spin(self) -> int:
        return len(self.spin_values) if self.spin_values is not None else 0


# ---------------------------------------------------------------------------
# Hamiltonian evaluation


def config_lookup(model: ModelInstance, bc: BoundaryCondition, x: Mapping) -> Lookup:
    """Spin lookup: x inside, the boundary condition everywhere else."""
    if bc.kind == "ground":
        b = model.ground_value(bc.label)

        def lookup(t):
            return x[t] if t in x else b

    else:
        cfg = bc.config

        def lookup(t):
            if t in x:
                return x[t]
            return cfg[t]

    return lookup


def local_energy(model, eta: RandomField, sites, lookup: Lookup) -> float:
    """Energy contribution of the given sites under the lookup."""
    total = 0.0
    for s in sites:
        if model.constraint is not None and not model.constraint(s, lookup):
            return INF
        for term in model.terms:
            coeff = term.strength
            if term.disordered:
                coeff += eta.get(term.key, s)
            if coeff != 0.0:
                total += coeff * term.evaluate(s, lookup)
    return total


def hamiltonian(model, eta, reg: Region, bc: BoundaryCondition, x: Mapping) -> float:
    """H over reg with the given boundary condition; +inf when a hard
    constraint is violated."""
    return local_energy(model, eta, reg, config_lookup(model, bc, x))


def ground_config(model, reg: Region, k: int) -> dict:
    b = model.ground_value(k)
    return {s: b for s in reg}


# ---------------------------------------------------------------------------
# Builders for the cubic-lattice models


def _rfim_terms(d: int, J: float) -> tuple:
    def bond(s, lk):
        xs = lk(s)
        return sum(xs * lk(t) for t in l1_neighbors(s)) / (2 * d)

    def fld(s, lk):
        return -lk(s)

    return (
        Term("bond", -d * J, 1, bond),
        Term("field", 0.0, 0, fld, disordered=True),
    )


def make_rfim(d: int, J: float = 1.0) -> ModelInstance:
    if J <= 0:
        raise ModelError("rfim requires J > 0")
    return ModelInstance(
        name="rfim",
        dimension=d,
        spin_values=(1, -1),
        terms=_rfim_terms(d, J),
        ground_states=(1, -1),
        ground_energy=-d * J,
        declared_rho=J / 3**d,
        n_beta=1,
        eta_rule="identity",
        symmetries=("flip",),
        params={"model": "rfim", "d": d, "J": J},
    )


def make_rfpm(d: int, J: float = 1.0, Q: int = 3) -> ModelInstance:
    if J <= 0 or Q < 2:
        raise ModelError("rfpm requires J > 0 and Q >= 2")

    def bond(s, lk):
        xs = lk(s)
        return sum(1.0 for t in l1_neighbors(s) if lk(t) == xs) / (2 * d)

    terms = [Term("bond", -d * J, 1, bond)]
    for q in range(1, Q + 1):
        def fld(s, lk, q=q):
            return -1.0 if lk(s) == q else 0.0

        terms.append(Term(f"field:{q}", 0.0, 0, fld, disordered=True))
    return ModelInstance(
        name="rfpm",
        dimension=d,
        spin_values=tuple(range(1, Q + 1)),
        terms=tuple(terms),
        ground_states=tuple(range(1, Q + 1)),
        ground_energy=-d * J,
        declared_rho=J / (2 * 3**d),
        n_beta=Q,
        eta_rule="potts",
        symmetries=("potts_cycle",),
        params={"model": "rfpm", "d": d, "J": J, "Q": Q},
    )


def _ea_terms(d: int, Jbar: float) -> tuple:
    def bond(s, lk):
        xs = lk(s)
        return -sum(xs * lk(t) for t in l1_neighbors(s))

    def fld(s, lk):
        return -lk(s)

    return (
        Term("bond", Jbar / 2, 1, bond, disordered=True, lower_bound=-2 * d),
        Term("field", 0.0, 0, fld, disordered=True),
    )


def make_ea(d: int, Jbar: float = 1.0) -> ModelInstance:
    """Random-bond Ising model with per-site bond fields and an external
    random field; Jbar > 0 ferromagnetic, Jbar < 0 antiferromagnetic
    (re-encoded on 2-blocks so the chessboard ground states become constant).
    """
    if Jbar == 0:
        raise ModelError("ea requires Jbar != 0")
    if Jbar > 0:
        return ModelInstance(
            name="ea",
            dimension=d,
            spin_values=(1, -1),
            terms=_ea_terms(d, Jbar),
            ground_states=(1, -1),
            ground_energy=-d * Jbar,
            declared_rho=Jbar / 3**d,
            n_beta=2,
            eta_rule="ea",
            symmetries=("flip",),
            params={"model": "ea", "d": d, "J": Jbar},
        )

    def chess(sign):
        def pattern(s):
            return sign if sum(s) % 2 == 0 else -sign

        return pattern

    base = ModelInstance(
        name="ea",
        dimension=d,
        spin_values=(1, -1),
        terms=_ea_terms(d, Jbar),
        ground_states=(),  # periodic; see blocked form
        ground_energy=d * Jbar,
        n_beta=2,
        eta_rule="ea",
        params={"model": "ea", "d": d, "J": Jbar},
    )
    return block_zd_model(
        base,
        period=2,
        ground_patterns=(chess(1), chess(-1)),
        name="ea_antiferro",
        symmetries=("translate",),
    )


def _hardcore_site_terms(d: int, mu: float, gamma: float) -> tuple:
    finite = math.isfinite(gamma)

    def occ(s, lk):
        xs = lk(s)
        g = -mu * xs
        if finite and xs:
            g += gamma * sum(xs * lk(t) for t in l1_neighbors(s))
        return g

    def frozen(s, lk):
        xs = lk(s)
        g = -0.5 * mu * xs
        if finite and xs:
            g -= gamma * sum(xs * lk(t) for t in l1_neighbors(s))
        return g

    return (
        Term("occ", 0.5, 1, occ, lower_bound=-mu),
        Term("frozen", 0.0, 1, frozen, disordered=True, lower_bound=-mu),
    )


def make_fa1b(d: int, mu: float = 1.0, gamma: float = INF) -> ModelInstance:
    """Occupation model with nearest-neighbor exclusion and frozen-site
    fields; gamma=inf runs as a hard constraint (violating states dropped),
    finite gamma as the soft penalty it is the limit of."""
    if mu <= 0 or gamma <= 0:
        raise ModelError("fa1b requires mu > 0 and gamma > 0 (or inf)")

    constraint = None
    if not math.isfinite(gamma):
        def constraint(s, lk):
            if lk(s) != 1:
                return True
            return all(lk(t) != 1 for t in l1_neighbors(s))

    def chess(parity):
        def pattern(s):
            return 1 if sum(s) % 2 == parity else 0

        return pattern

    base = ModelInstance(
        name="fa1b",
        dimension=d,
        spin_values=(0, 1),
        terms=_hardcore_site_terms(d, mu, gamma),
        ground_states=(),
        ground_energy=-mu / 4,
        constraint=constraint,
        n_beta=1,
        eta_rule="fa1b",
        params={"model": "fa1b", "d": d, "mu": mu, "gamma": gamma},
    )
    return block_zd_model(
        base,
        period=2,
        ground_patterns=(chess(0), chess(1)),
        name="fa1b",
        symmetries=("translate",),
        declared_rho=0.5 * mu / 3**d,
        peierls_weight="core",
    )


# ---------------------------------------------------------------------------
# Generic period blocking of a per-site model


def block_zd_model(
    base: ModelInstance,
    period: int,
    ground_patterns: tuple,
    name: str,
    symmetries: tuple = (),
    declared_rho: Optional[float] = None,
    peierls_weight: str = "support",
) -> ModelInstance:
    """Re-encode a per-site model on period-blocks as super-site tuples.

    Each (base term, in-block offset) pair becomes one super-site term, so
    the per-site Hamiltonian form and the eta slots are preserved exactly.
    Ground patterns must have the blocking period so the blocked ground
    states are constant tuples.
    """
    d = base.dimension
    spec = BlockingSpec(period, d)
    offsets = tuple(spec.offsets())
    index = {o: i for i, o in enumerate(offsets)}

    def orig_lookup(blocked_lk):
        def ol(t):
            blk = tuple(c // period for c in t)
            off = tuple(c - period * b for c, b in zip(t, blk))
            return blocked_lk(blk)[index[off]]

        return ol

    terms = []
    for bt in base.terms:
        for o in offsets:
            def ev(S, lk, bt=bt, o=o):
                s = tuple(period * c + oc for c, oc in zip(S, o))
                return bt.evaluate(s, orig_lookup(lk))

            terms.append(
                Term(
                    f"{bt.key}@{','.join(map(str, o))}",
                    bt.strength,
                    max(1, -(-bt.rng // period)),
                    ev,
                    disordered=bt.disordered,
                    lower_bound=bt.lower_bound,
                )
            )

    grounds = []
    for pattern in ground_patterns:
        tup = tuple(pattern(o) for o in offsets)
        for o in offsets:  # pattern must be period-periodic
            shifted = tuple(c + period for c in o)
            if pattern(shifted) != pattern(o):
                raise ModelError("ground pattern does not have the blocking period")
        grounds.append(tup)

    constraint = None
    if base.constraint is not None:
        def constraint(S, lk):
            cell = [tuple(period * c + oc for c, oc in zip(S, o)) for o in offsets]
            ol = orig_lookup(lk)
            return all(base.constraint(s, ol) for s in cell)

    spin_values = tuple(itertools.product(base.spin_values, repeat=len(offsets)))
    model = ModelInstance(
        name=name,
        dimension=d,
        spin_values=spin_values,
        terms=tuple(terms),
        ground_states=tuple(grounds),
        ground_energy=base.ground_energy * period**d,
        declared_rho=declared_rho,
        peierls_weight=peierls_weight,
        constraint=constraint,
        blocking=spec,
        blocked=BlockedInfo(
            period, base.eta_rule, tuple(t.key for t in base.terms if t.disordered), offsets
        ),
        n_beta=base.n_beta,
        eta_rule="blocked",
        symmetries=symmetries,
        params=dict(base.params),
    )
    _check_ground_states(model)
    return model


def _check_ground_states(model: ModelInstance, tol: float = 1e-12) -> None:
    """Per-site energy of every declared ground state must equal e_g."""
    for k in range(model.n_ground):
        b = model.ground_value(k)
        lk = lambda t, b=b: b
        e = local_energy(model, ZERO_FIELD, [(0,) * model.dimension], lk)
        if not abs(e - model.ground_energy) <= tol:
            raise ModelError(
                f"ground state {k} of {model.name} has per-site energy {e}, "
                f"expected {model.ground_energy}"
            )


# ---------------------------------------------------------------------------
# Exclusion models on explicit periodic graphs (bcc / fcc / hcp)


_SQ3 = math.sqrt(3.0)
_SQ6 = math.sqrt(6.0)

_GRAPH_PRESETS = {
    # lattice vectors (rows) and atom positions in cartesian coordinates
    "bcc": (
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
        ((0, 0, 0), (0.5, 0.5, 0.5)),
    ),
    "fcc": (
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
        ((0, 0, 0), (0.5, 0.5, 0), (0.5, 0, 0.5), (0, 0.5, 0.5)),
    ),
    "hcp": (
        ((_SQ3 / 2, 0.5, 0), (_SQ3 / 2, -0.5, 0), (0, 0, 2 * _SQ6 / 3)),
        ((0, 0, 0), (_SQ3 / 3, 0, _SQ6 / 3)),
    ),
}


def _graph_neighbors(vectors, atoms, tol=1e-9):
    """Nearest-neighbor table: per atom, list of (cell offset, atom index)."""
    vec = np.asarray(vectors, dtype=float)
    pos = np.asarray(atoms, dtype=float)
    offsets = list(itertools.product((-1, 0, 1), repeat=3))
    dmin = INF
    pairs = {a: [] for a in range(len(atoms))}
    for a, pa in enumerate(pos):
        for off in offsets:
            shift = np.asarray(off, dtype=float) @ vec
            for b, pb in enumerate(pos):
                if off == (0, 0, 0) and a == b:
                    continue
                dist = float(np.linalg.norm(pb + shift - pa))
                dmin = min(dmin, dist)
    for a, pa in enumerate(pos):
        for off in offsets:
            shift = np.asarray(off, dtype=float) @ vec
            for b, pb in enumerate(pos):
                if off == (0, 0, 0) and a == b:
                    continue
                if abs(float(np.linalg.norm(pb + shift - pa)) - dmin) < tol:
                    pairs[a].append((off, b))
    return tuple(tuple(pairs[a]) for a in range(len(atoms))), dmin


def _graph_ground_patterns(lattice: str, n_atoms: int):
    """Periodic maximum-density independent occupation patterns.

    Returned as functions of (cell, atom) -> 0/1 with period 2 per axis.
    bcc: one atom per cell (2 states); fcc: one atom per cell (4 states);
    hcp: a quarter-density two-of-eight pattern and its in-plane translates
    (4 states), constructed directly and verified independent at build time.
    """
    if lattice in ("bcc", "fcc"):
        def single(a):
            def pattern(cell, atom):
                return 1 if atom == a else 0

            return pattern

        return tuple(single(a) for a in range(n_atoms))
    # hcp: occupy atom 0 on the even-even in-plane cell sublattice and atom 1
    # on the odd-odd sublattice; the four states are in-plane cell translates.
    def hcp_pattern(di, dj):
        def pattern(cell, atom):
            i, j = cell[0] + di, cell[1] + dj
            if atom == 0:
                return 1 if (i % 2 == 0 and j % 2 == 0) else 0
            return 1 if (i % 2 == 1 and j % 2 == 1) else 0

        return pattern

    return tuple(hcp_pattern(di, dj) for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)))


def make_hardcore_graph(lattice: str = "bcc", mu: float = 1.0) -> ModelInstance:
    """Hard exclusion model on a periodic 3D graph, blocked to supercells of
    2x2x2 unit cells so every ground state is a constant tuple."""
    if lattice not in _GRAPH_PRESETS:
        raise ModelError(f"unknown lattice graph {lattice!r}")
    if mu <= 0:
        raise ModelError("hardcore_graph requires mu > 0")
    vectors, atoms = _GRAPH_PRESETS[lattice]
    neighbors, dmin = _graph_neighbors(vectors, atoms)
    n_atoms = len(atoms)
    period = 2
    spec = BlockingSpec(period, 3)
    offsets = tuple(spec.offsets())
    # a blocked value is a tuple over (cell offset, atom), cells lexicographic
    def flat(ci, a):
        return ci * n_atoms + a

    def cell_of(t):
        return tuple(c // period for c in t[:3])

    def occupied(lk, cell, atom):
        blk = tuple(c // period for c in cell)
        off = tuple(c - period * b for c, b in zip(cell, blk))
        ci = offsets.index(off)
        return lk(blk)[flat(ci, atom)]

    def g_occ(S, lk):
        total = 0.0
        for ci, off in enumerate(offsets):
            cell = tuple(period * c + oc for c, oc in zip(S, off))
            for a in range(n_atoms):
                total -= mu * occupied(lk, cell, a)
        return total

    def constraint(S, lk):
        for ci, off in enumerate(offsets):
            cell = tuple(period * c + oc for c, oc in zip(S, off))
            for a in range(n_atoms):
                if not occupied(lk, cell, a):
                    continue
                for doff, b in neighbors[a]:
                    other = tuple(c + dc for c, dc in zip(cell, doff))
                    if occupied(lk, other, b):
                        return False
        return True

    patterns = _graph_ground_patterns(lattice, n_atoms)
    grounds = []
    for pattern in patterns:
        tup = tuple(
            pattern(off, a) for off in offsets for a in range(n_atoms)
        )
        grounds.append(tup)
    per_block = [sum(g) for g in grounds]
    if len(set(per_block)) != 1:
        raise ModelError("ground occupation densities disagree")
    e_g = -0.5 * mu * per_block[0]

    model = ModelInstance(
        name=f"hardcore_{lattice}",
        dimension=3,
        spin_values=None,  # too many tuples to enumerate eagerly
        terms=(Term("occ", 0.5, 1, g_occ, lower_bound=-mu * len(offsets) * n_atoms),),
        ground_states=tuple(grounds),
        ground_energy=e_g,
        declared_rho=None,
        peierls_weight="core",
        constraint=constraint,
        blocking=spec,
        n_beta=0,
        eta_rule="zero",
        symmetries=(),
        params={"model": "hardcore_graph", "lattice_graph": lattice, "mu": mu},
        atom_positions=atoms,
        atom_neighbors=neighbors,
        lattice_vectors=vectors,
    )
    _verify_graph_grounds(model, patterns, neighbors, period, n_atoms)
    _check_ground_states(model)
    return model


def _verify_graph_grounds(model, patterns, neighbors, period, n_atoms):
    """Every declared ground pattern must be an independent set."""
    cells = list(itertools.product(range(-2, 4), repeat=3))
    for pattern in patterns:
        occ = {
            (cell, a)
            for cell in cells
            for a in range(n_atoms)
            if pattern(cell, a)
        }
        for (cell, a) in occ:
            for doff, b in neighbors[a]:
                other = tuple(c + dc for c, dc in zip(cell, doff))
                if (other, b) in occ:
                    raise ModelError(
                        f"{model.name}: ground pattern occupies adjacent atoms "
                        f"{(cell, a)} and {(other, b)}"
                    )


# ---------------------------------------------------------------------------
# Continuous-spin Ising model


def make_continuous_ising(d: int, J: float = 1.0, delta: float = 0.5) -> ModelInstance:
    """Spins in [-1, 1] under the uniform reference measure; the value space
    is split into plus (delta, 1], minus [-1, -delta) and a metastable band
    [-delta, delta] for coarse-grained contour bookkeeping."""
    if J <= 0 or not 0 < delta < 1:
        raise ModelError("continuous_ising requires J > 0 and 0 < delta < 1")

    def bond(s, lk):
        xs = lk(s)
        return -xs * sum(lk(t) for t in l1_neighbors(s))

    def fld(s, lk):
        return -lk(s)

    return ModelInstance(
        name="continuous_ising",
        dimension=d,
        spin_values=None,
        terms=(
            Term("bond", J / 2, 1, bond, lower_bound=-2 * d),
            Term("field", 0.0, 0, fld, disordered=True),
        ),
        ground_states=(1.0, -1.0),
        ground_energy=-d * J,
        n_beta=1,
        eta_rule="identity",
        symmetries=("flip",),
        params={"model": "continuous_ising", "d": d, "J": J, "delta": delta},
        partition_delta=delta,
    )


def continuous_cells(model: ModelInstance) -> dict:
    """Integration cells of the value-space partition, keyed by label."""
    delta = model.partition_delta
    return {"plus": (delta, 1.0), "minus": (-1.0, -delta), "meta": (-delta, delta)}


def effective_hamiltonian_cg(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    bc: BoundaryCondition,
    xtilde: Mapping,
    T: float,
    nodes: int = 32,
    budget: int = 2_000_000,
) -> float:
    """-T ln of the cell-restricted partition integral of exp(-H/T).

    xtilde assigns each site of reg a partition-cell label; the integral over
    each cell uses Gauss-Legendre quadrature under the uniform reference
    measure on [-1, 1] (density 1/2).
    """
    if model.partition_delta is None:
        raise ModelError("effective Hamiltonian needs a partitioned continuous model")
    if nodes < 4:
        raise ModelError("at least 4 quadrature nodes required")
    if T <= 0:
        raise ModelError("T must be positive")
    sites = list(reg)
    if nodes ** len(sites) > budget:
        raise EnumerationBudgetError(
            f"{nodes}^{len(sites)} quadrature points exceed budget {budget}"
        )
    cells = continuous_cells(model)
    base_nodes, base_weights = np.polynomial.legendre.leggauss(nodes)
    per_site = []
    for s in sites:
        lo, hi = cells[xtilde[s]]
        xs = 0.5 * (hi - lo) * base_nodes + 0.5 * (hi + lo)
        ws = 0.5 * (hi - lo) * base_weights * 0.5  # reference density 1/2
        per_site.append(list(zip(xs, ws)))

    logs = []
    for combo in itertools.product(*per_site):
        x = {s: float(xv) for s, (xv, _) in zip(sites, combo)}
        logw = sum(math.log(w) for _, w in combo)
        h = hamiltonian(model, eta, reg, bc, x)
        logs.append(-h / T + logw)
    m = max(logs)
    return -T * (m + math.log(sum(math.exp(v - m) for v in logs)))


def extended_excitation(
    model: ModelInstance,
    support: Region,
    cell_config: Mapping,
    eta: RandomField,
    T: float,
    nodes: int = 16,
) -> float:
    """Cell-integrated excitation of a coarse-grained pattern over its
    support relative to the all-plus pattern, both under the plus boundary
    condition (the flip symmetry pairs the boundary restrictions)."""
    bc_plus = BoundaryCondition.ground(0)
    first = effective_hamiltonian_cg(model, eta, support, bc_plus, cell_config, T, nodes)
    plus = {s: "plus" for s in support}
    second = effective_hamiltonian_cg(model, eta, support, bc_plus, plus, T, nodes)
    return first - second


# ---------------------------------------------------------------------------
# Random-field construction (model-specific eta rules)


def build_eta(model: ModelInstance, omega: QuenchedConfig) -> RandomField:
    """Random fields from quenched parameters, per the model's rule."""
    if model.eta_rule == "zero" or not any(t.disordered for t in model.terms):
        return ZERO_FIELD
    if model.eta_rule == "blocked":
        return _build_eta_blocked(model, omega)
    return _build_eta_site(model, omega, model.eta_rule)


def _build_eta_site(model, omega, rule: str) -> RandomField:
    values = {}
    radius = {}
    sites = sorted(omega.covered_sites())
    if rule == "identity":
        for s in sites:
            values[("field", s)] = omega.get(0, s)
        radius["field"] = 0
    elif rule == "ea":
        for s in sites:
            values[("field", s)] = omega.get(0, s)
            values[("bond", s)] = omega.get(1, s)
        radius["field"] = 0
        radius["bond"] = 0
    elif rule == "potts":
        Q = model.n_beta
        for s in sites:
            for q in range(1, Q + 1):
                values[(f"field:{q}", s)] = omega.get(q - 1, s)
            radius.update({f"field:{q}": 0 for q in range(1, Q + 1)})
    elif rule == "fa1b":
        occ = {s: 1 if omega.get(0, s) > 0 else 0 for s in sites}
        site_set = set(sites)
        for s in sites:
            if not _fa1b_domain_ok(s, site_set):
                continue
            values[("frozen", s)] = float(_fa1b_frozen(s, occ))
        radius["frozen"] = 2
    else:
        raise ModelError(f"unknown eta rule {rule!r}")
    return RandomField(values, radius)


def _fa1b_domain_ok(s, site_set) -> bool:
    """The frozen-site indicator needs omega out to L1 distance 2."""
    for t in l1_neighbors(s):
        if t not in site_set:
            return False
        for r in l1_neighbors(t):
            if r not in site_set:
                return False
    return True


def _fa1b_frozen(s, occ) -> int:
    """1 iff site s cannot flip under the one-vacant-neighbor constraint.

    Occupied: frozen iff some neighbor is occupied.  Vacant: frozen iff some
    occupied neighbor is itself frozen by one of its occupied neighbors.
    """
    def o(t):
        return occ.get(t, 0)

    if o(s):
        return 1 if any(o(t) for t in l1_neighbors(s)) else 0
    for t in l1_neighbors(s):
        if o(t) and any(o(r) for r in l1_neighbors(t)):
            return 1
    return 0


def _build_eta_blocked(model, omega) -> RandomField:
    info = model.blocked
    base_rule = info.base_eta_rule
    base_model = replace(model, eta_rule=base_rule, blocked=None)
    base_eta = _build_eta_site(base_model, omega, base_rule)
    period = info.period
    values = {}
    radius = {}
    covered = omega.covered_sites()
    blocks = {tuple(c // period for c in s) for s in covered}
    for key in info.base_keys:
        for o in info.offsets:
            bkey = f"{key}@{','.join(map(str, o))}"
            radius[bkey] = 1
            for S in blocks:
                s = tuple(period * c + oc for c, oc in zip(S, o))
                if (key, s) in base_eta.values:
                    values[(bkey, S)] = base_eta.values[(key, s)]
    return RandomField(values, radius)


# ---------------------------------------------------------------------------
# Peierls scan


def unperturbed_gap(model: ModelInstance, contour) -> float:
    """H0 over the support of a contour minus |sC| e_g, with the exterior at
    the contour's label and each interior component at its own label."""
    values = dict(contour.values)
    interiors = contour.interiors

    def lookup(t):
        if t in values:
            return values[t]
        for k, reg in interiors.items():
            if t in reg:
                return model.ground_value(k)
        return model.ground_value(contour.label)

    h0 = local_energy(model, ZERO_FIELD, contour.support, lookup)
    return h0 - len(contour.support) * model.ground_energy


def peierls_weight_size(model: ModelInstance, contour) -> int:
    from .geometry import boundary

    if model.peierls_weight == "core":
        core = contour.support.difference(
            boundary(contour.support, 1, "internal")
        )
        return max(1, len(core))
    return len(contour.support)


def peierls_scan(model: ModelInstance, n_max: int, budget: int = 200_000):
    """Minimal excitation-per-weight ratio over all contours with support
    size up to n_max; (inf, None) when no contour that small exists."""
    from .contours import enumerate_contours_up_to

    best = INF
    witness = None
    by_size = enumerate_contours_up_to(model, n_max, anchored=False, budget=budget)
    for contours in by_size.values():
        for c in contours:
            gap = unperturbed_gap(model, c)
            ratio = gap / peierls_weight_size(model, c)
            if ratio < best:
                best = ratio
                witness = c
    if witness is not None and model.declared_rho is not None:
        if best < model.declared_rho - 1e-12:
            raise ModelError(
                f"measured Peierls ratio {best} below declared "
                f"{model.declared_rho} for {model.name}"
            )
    return best, witness


# ---------------------------------------------------------------------------
# Declaration files


def make_model(name: str, **params) -> ModelInstance:
    builders = {
        "rfim": lambda: make_rfim(params.get("d", 2), params.get("J", 1.0)),
        "rfpm": lambda: make_rfpm(
            params.get("d", 2), params.get("J", 1.0), params.get("Q", 3)
        ),
        "ea": lambda: make_ea(params.get("d", 2), params.get("J", 1.0)),
        "fa1b": lambda: make_fa1b(
            params.get("d", 2), params.get("mu", 1.0), params.get("gamma", INF)
        ),
        "hardcore_graph": lambda: make_hardcore_graph(
            params.get("lattice_graph", "bcc"), params.get("mu", 1.0)
        ),
        "continuous_ising": lambda: make_continuous_ising(
            params.get("d", 2), params.get("J", 1.0), params.get("delta", 0.5)
        ),
    }
    if name not in builders:
        raise ModelError(f"unknown model {name!r}")
    return builders[name]()


def model_from_declaration(decl: Mapping) -> ModelInstance:
    """Build a model from a declaration mapping (e.g. a parsed config file)."""
    if "model" not in decl:
        raise ModelError("declaration missing key 'model'")
    known = {"model", "d", "J", "Q", "mu", "gamma", "delta", "lattice_graph"}
    unknown = set(decl) - known
    if unknown:
        raise ModelError(f"unknown declaration keys: {sorted(unknown)}")
    params = {k: v for k, v in decl.items() if k != "model"}
    if params.get("gamma") == "inf":
        params["gamma"] = INF
    return make_model(decl["model"], **params)
