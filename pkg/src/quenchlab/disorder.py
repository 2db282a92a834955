"""Quenched parameter sampling, random-field construction, and tail probes.

Single-coordinate draws are counter-based: each (beta, site) value is a pure
function of the root seed, so any coordinate can be regenerated without
replaying a sequential stream and parallel replicas never collide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.special import ndtri

from .geometry import Region, Site, external_margin

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


class ParameterError(ValueError):
    """Raised for out-of-range distribution or statistic parameters."""


class CoverageError(KeyError):
    """Raised when a quenched configuration lacks required padding."""


@dataclass(frozen=True)
class DistributionSpec:
    """Law of a single quenched coordinate omega_s^beta.

    kind="gaussian": mean 0, standard deviation epsilon.
    kind="bounded": symmetric two-point law on {-epsilon, +epsilon}, so
    |omega| <= 1, mean 0, variance epsilon^2.
    """

    kind: str
    epsilon: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "bounded"):
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        if self.epsilon < 0:
            raise ParameterError("epsilon must be nonnegative")
        if self.kind == "bounded" and self.epsilon > 1:
            raise ParameterError("bounded law requires epsilon <= 1")


@dataclass(frozen=True)
class QuenchedConfig:
    """Quenched parameters omega: one value per (beta index, site)."""

    values: Mapping[tuple[int, Site], float]
    seed: int
    spec: DistributionSpec

    def get(self, beta: int, site: Site) -> float:
        try:
            return self.values[(beta, site)]
        except KeyError:
            raise CoverageError(
                f"omega not sampled at beta={beta}, site={site}; "
                "increase the sampling padding"
            ) from None

    def covered_sites(self) -> set[Site]:
        return {s for (_, s) in self.values}

    def translate(self, vector: Site) -> "QuenchedConfig":
        """(tau_v omega)_s = omega_{s+v}; the domain shifts by -v."""
        shifted = {
            (b, tuple(c - v for c, v in zip(s, vector))): w
            for (b, s), w in self.values.items()
        }
        return QuenchedConfig(shifted, self.seed, self.spec)


@dataclass(frozen=True)
class RandomField:
    """Random fields eta: one value per (term key, site), with locality."""

    values: Mapping[tuple[str, Site], float]
    locality_radius: Mapping[str, int]

    def get(self, alpha: str, site: Site) -> float:
        return self.values.get((alpha, site), 0.0)

    def abs_sum_at(self, site: Site) -> float:
        return sum(
            abs(v) for (a, s), v in self.values.items() if s == site
        )


ZERO_FIELD = RandomField({}, {})


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer; a bijective 64-bit mix with good avalanche."""
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return x ^ (x >> np.uint64(31))


def coordinate_uniforms(seed: int, beta: int, sites: list[Site]) -> np.ndarray:
    """Deterministic uniforms in (0, 1), one per site, order-independent."""
    h = np.full(len(sites), np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    h = _splitmix64(h ^ _splitmix64(np.full(len(sites), np.uint64(beta + 1))))
    coords = np.asarray(sites, dtype=np.int64).reshape(len(sites), -1)
    for axis in range(coords.shape[1]):
        h = _splitmix64(h ^ coords[:, axis].astype(np.uint64))
    # 53-bit mantissa; shift keeps the result strictly inside (0, 1).
    return (np.right_shift(h, np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53


def sample_omega(
    spec: DistributionSpec,
    reg: Region,
    padding: int,
    seed: int,
    n_beta: int = 1,
) -> QuenchedConfig:
    """One omega draw per (beta, site) on reg plus an external margin."""
    sites = list(reg) + list(external_margin(reg, padding)) if padding else list(reg)
    values: dict[tuple[int, Site], float] = {}
    for beta in range(n_beta):
        u = coordinate_uniforms(seed, beta, sites)
        if spec.kind == "gaussian":
            draws = spec.epsilon * ndtri(u)
        else:
            draws = np.where(u < 0.5, -spec.epsilon, spec.epsilon)
        for site, w in zip(sites, draws):
            values[(beta, site)] = float(w)
    return QuenchedConfig(values, seed, spec)


def nu_of_epsilon(spec: DistributionSpec) -> float:
    """Subgaussian variance proxy of one coordinate.

    Gaussian: epsilon^2 exactly.  Bounded: 1/|2 ln epsilon|, clamped to
    [epsilon^2, 1] since the asymptotic form only holds for small epsilon.
    """
    eps = spec.epsilon
    if spec.kind == "gaussian":
        return eps**2
    if eps >= 1:
        raise ParameterError("bounded nu requires epsilon < 1")
    if eps == 0:
        return 0.0
    return max(eps**2, min(1.0, 1.0 / abs(2.0 * math.log(eps))))


def three_point_max(lam: float, sigma: float) -> tuple[float, dict]:
    """Maximal E[exp(lam X)] over laws with |X|<=1, E X = 0, E X^2 = sigma^2.

    The maximizer is the two-point law at (-sigma^2, 1) with weights
    (1, sigma^2)/(1 + sigma^2).
    """
    if lam < 0:
        raise ParameterError("lambda must be nonnegative")
    if not 0 <= sigma <= 1:
        raise ParameterError("sigma must lie in [0, 1]")
    if sigma == 0:
        return 1.0, {"x1": 0.0, "x2": 0.0, "p1": 1.0, "p2": 0.0}
    s2 = sigma**2
    value = (math.exp(-lam * s2) + s2 * math.exp(lam)) / (1.0 + s2)
    maximizer = {
        "x1": -s2,
        "x2": 1.0,
        "p1": 1.0 / (1.0 + s2),
        "p2": s2 / (1.0 + s2),
    }
    return value, maximizer


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ParameterError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z**2 / trials
    center = (p + z**2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class Statistic:
    """A scalar statistic of n iid coordinates with declared constants.

    bounded_diff is the McDiarmid bounded-difference constant per coordinate
    (for the two-point +-epsilon law); lipschitz is the per-coordinate
    Lipschitz constant used by the Gaussian and bounded-nu bounds.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    bounded_diff: Callable[[float], float]
    lipschitz: float


def statistic_library() -> dict[str, Statistic]:
    return {
        "sum": Statistic(
            "sum", lambda x: x.sum(axis=1), lambda eps: 2 * eps, 1.0
        ),
        "norm": Statistic(
            "norm",
            lambda x: np.sqrt((x**2).sum(axis=1)),
            lambda eps: 2 * eps,
            1.0,
        ),
        "max": Statistic(
            "max", lambda x: x.max(axis=1), lambda eps: 2 * eps, 1.0
        ),
    }


def tail_probe(
    statistic: Statistic,
    spec: DistributionSpec,
    n: int,
    lambda_grid: list[float],
    trials: int,
    seed: int,
) -> list[dict]:
    """Empirical tails of |f - E f| against the matching concentration bound.

    Bounds: McDiarmid 2 exp(-2 lam^2 / (n D^2)) for bounded laws, the
    Gaussian bound 2 exp(-lam^2 / (2 n L^2 eps^2)), and for bounded laws the
    small-epsilon form 2 exp(-lam^2 / (2 nu n L^2)); all clamped to <= 1.
    """
    if trials < 100:
        raise ParameterError("tail_probe needs at least 100 trials")
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, trials]))
    if spec.kind == "gaussian":
        draws = rng.normal(0.0, spec.epsilon, size=(trials, n))
    else:
        draws = np.where(
            rng.random(size=(trials, n)) < 0.5, -spec.epsilon, spec.epsilon
        )
    values = statistic.fn(draws)
    center = values.mean()
    deviations = np.abs(values - center)
    rows = []
    for lam in lambda_grid:
        hits = int((deviations >= lam).sum())
        empirical = hits / trials
        if spec.kind == "bounded":
            d = statistic.bounded_diff(spec.epsilon)
            bound = min(1.0, 2.0 * math.exp(-2.0 * lam**2 / (n * d**2))) if d > 0 else float(lam <= 0)
            nu = nu_of_epsilon(spec)
            small_eps = min(
                1.0,
                2.0 * math.exp(-(lam**2) / (2.0 * nu * n * statistic.lipschitz**2))
                if nu > 0
                else float(lam <= 0),
            )
        else:
            var = spec.epsilon**2
            bound = min(
                1.0,
                2.0 * math.exp(-(lam**2) / (2.0 * n * statistic.lipschitz**2 * var))
                if var > 0
                else float(lam <= 0),
            )
            small_eps = bound
        lo, hi = wilson_interval(hits, trials)
        rows.append(
            {
                "lambda": lam,
                "empirical": empirical,
                "bound": bound,
                "bound_small_eps": small_eps,
                "ci_lo": lo,
                "ci_hi": hi,
            }
        )
    return rows


def lipschitz_variance_check(
    spec: DistributionSpec,
    transform: Callable[[np.ndarray], np.ndarray],
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Sample Var[X] and Var[F(X)] for a declared 1-Lipschitz F."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, trials]))
    if spec.kind == "gaussian":
        x = rng.normal(0.0, spec.epsilon, size=trials)
    else:
        x = np.where(rng.random(size=trials) < 0.5, -spec.epsilon, spec.epsilon)
    fx = transform(x)
    return float(np.var(x)), float(np.var(fx))


def three_point_oracle(lam: float, sigma: float, grid: int = 4000) -> float:
    """Independent maximizer of E[exp(lam X)] under the moment constraints.

    Scans all two-point laws (a, b) with a in [-1, -sigma^2], b = sigma^2/(-a)
    (the only candidates once three-point supports are ruled out by a direct
    feasibility sweep), then refines around the best grid point.
    """
    if sigma == 0:
        return 1.0
    s2 = sigma**2

    def value(a: float) -> float:
        b = s2 / (-a)
        p = b / (b - a)
        return p * math.exp(lam * a) + (1 - p) * math.exp(lam * b)

    lo, hi = -1.0, -s2
    xs = np.linspace(lo, hi, grid)
    vals = [value(float(a)) for a in xs]
    i = int(np.argmax(vals))
    a_lo = xs[max(0, i - 1)]
    a_hi = xs[min(grid - 1, i + 1)]
    # Golden-section refinement on the bracketing interval.
    phi = (math.sqrt(5) - 1) / 2
    a, b = float(a_lo), float(a_hi)
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(200):
        if value(c) > value(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return value((a + b) / 2)
