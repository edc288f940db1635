"""Coalitional games with sabotage.

Agents are 0-based and coalitions are int bitmasks (bit i set means agent
i is a member).  Helpers convert to and from index collections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidInputError, SizeError

MAX_AGENTS = 20
EFFICIENCY_TOL = 1e-9


def mask_of(agents: Iterable[int]) -> int:
    m = 0
    for a in agents:
        if a < 0:
            raise InvalidInputError(f"negative agent index {a}")
        m |= 1 << a
    return m


def agents_of(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts += (masks >> i) & 1
    return counts


@dataclass(frozen=True)
class CharacteristicFunction:
    """Either an explicit subset table (missing subsets are worth 0) or a
    pairwise-synergy game where every cooperating pair adds ``weight``."""

    n_agents: int
    weight: float | None = None
    values: Mapping[int, float] | None = None

    def __post_init__(self):
        if not 1 <= self.n_agents <= MAX_AGENTS:
            raise SizeError(f"n_agents={self.n_agents} outside 1..{MAX_AGENTS} (exact enumeration only)")
        if (self.weight is None) == (self.values is None):
            raise InvalidInputError("give exactly one of weight (pairwise) or values (explicit)")
        if self.values is not None:
            full = (1 << self.n_agents) - 1
            clean = {}
            for m, v in self.values.items():
                if m & ~full:
                    raise InvalidInputError(f"subset mask {m} references an agent >= {self.n_agents}")
                clean[int(m)] = float(v)
            if clean.get(0, 0.0) != 0.0:
                raise InvalidInputError("the empty coalition must be worth 0")
            object.__setattr__(self, "values", clean)

    @classmethod
    def pairwise(cls, n_agents: int, weight: float) -> "CharacteristicFunction":
        return cls(n_agents, weight=float(weight))

    @classmethod
    def explicit(cls, n_agents: int, values: Mapping) -> "CharacteristicFunction":
        """``values`` keys may be masks or collections of agent indices."""
        return cls(n_agents, values={k if isinstance(k, int) else mask_of(k): v for k, v in values.items()})

    @property
    def grand(self) -> int:
        return (1 << self.n_agents) - 1

    def table(self) -> np.ndarray:
        """``v`` for every mask 0 .. 2**n - 1."""
        if self.weight is not None:
            k = _popcounts(self.n_agents)
            return self.weight * (k * (k - 1) // 2)
        out = np.zeros(1 << self.n_agents)
        for m, v in self.values.items():
            out[m] = v
        return out


@dataclass(frozen=True)
class SabotageModel:
    """Sabotage cost ``c(S)``.

    Fractional mode charges ``alpha * v(S)`` once whenever S contains any
    malicious agent; explicit mode reads costs from a table (default 0).
    """

    malicious: int
    alpha: float | None = None
    costs: Mapping[int, float] | None = None

    def __post_init__(self):
        if (self.alpha is None) == (self.costs is None):
            raise InvalidInputError("give exactly one of alpha (fractional) or costs (explicit)")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha={self.alpha} outside [0, 1]")
        if self.costs is not None:
            clean = {int(m): float(c) for m, c in self.costs.items()}
            if any(c < 0 for c in clean.values()):
                raise InvalidInputError("sabotage costs must be non-negative")
            object.__setattr__(self, "costs", clean)

    @classmethod
    def fractional(cls, malicious: Iterable[int], alpha: float) -> "SabotageModel":
        return cls(mask_of(malicious), alpha=float(alpha))

    def cost_table(self, v: np.ndarray) -> np.ndarray:
        masks = np.arange(len(v))
        if self.alpha is not None:
            return np.where(masks & self.malicious, self.alpha * v, 0.0)
        out = np.zeros(len(v))
        for m, c in self.costs.items():
            if m >= len(v):
                raise InvalidInputError(f"cost entry for mask {m} is outside the game")
            out[m] = c
        return out


@dataclass(frozen=True)
class TrustSchedule:
    """Sabotage fraction ``max(alpha_min, alpha0 * rho**k)`` after k verified rounds."""

    alpha0: float
    rho: float = 1.0
    alpha_min: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidInputError(f"rho={self.rho} outside [0, 1]")
        if self.alpha_min < 0:
            raise InvalidInputError("alpha_min must be non-negative")
        if not 0.0 <= self.alpha0 <= 1.0:
            raise InvalidInputError(f"alpha0={self.alpha0} outside [0, 1]")


def apply_trust(schedule: TrustSchedule, k: int) -> float:
    if k < 0:
        raise InvalidInputError("verified rounds k must be non-negative")
    return max(schedule.alpha_min, schedule.alpha0 * schedule.rho**k)


@dataclass(frozen=True)
class CoalitionTable:
    """Per-subset ``v``, ``c`` and ``v_tilde`` indexed by mask."""

    n_agents: int
    v: np.ndarray
    c: np.ndarray
    v_tilde: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "v_tilde", self.v - self.c)

    def records(self):
        sizes = _popcounts(self.n_agents)
        for m in range(len(self.v)):
            yield m, int(sizes[m]), float(self.v[m]), float(self.c[m]), float(self.v_tilde[m])


def coalition_table(cf: CharacteristicFunction, sab: SabotageModel | None = None) -> CoalitionTable:
    v = cf.table()
    if sab is None:
        c = np.zeros_like(v)
    else:
        if sab.malicious >> cf.n_agents:
            raise InvalidInputError("malicious set references an agent outside the game")
        c = sab.cost_table(v)
    return CoalitionTable(cf.n_agents, v, c)


def _as_mask(cf: CharacteristicFunction, S) -> int:
    m = S if isinstance(S, (int, np.integer)) else mask_of(S)
    if m < 0 or m >> cf.n_agents:
        raise InvalidInputError(f"subset {S!r} references an agent >= {cf.n_agents}")
    return int(m)


def value(cf: CharacteristicFunction, sab: SabotageModel | None, S) -> float:
    """Sabotage-adjusted worth of one coalition (mask or agent indices)."""
    m = _as_mask(cf, S)
    return float(coalition_table(cf, sab).v_tilde[m])


def shapley(cf: CharacteristicFunction, sab: SabotageModel | None = None) -> np.ndarray:
    """Exact Shapley values from the subset-weighted marginal formula."""
    n = cf.n_agents
    vt = coalition_table(cf, sab).v_tilde
    masks = np.arange(1 << n)
    sizes = _popcounts(n)
    # weight |S|!(n-|S|-1)!/n! for coalitions S not containing i
    weights = np.array([1.0 / (n * comb(n - 1, s)) for s in range(n)])
    phi = np.empty(n)
    for i in range(n):
        without = masks[(masks >> i & 1) == 0]
        phi[i] = np.sum(weights[sizes[without]] * (vt[without | (1 << i)] - vt[without]))
    return phi


def core_contains(
    cf: CharacteristicFunction, sab: SabotageModel | None, allocation, tol: float = EFFICIENCY_TOL
) -> tuple[bool, int | None]:
    """Check core membership of an allocation.

    Returns ``(True, None)`` if the allocation is efficient and no
    coalition can do better on its own.  Otherwise returns False with the
    blocking mask of largest deficit (ties: fewer members, then smaller
    mask), or None when the only failure is over-allocation.
    """
    x = np.asarray(allocation, dtype=float)
    if x.shape != (cf.n_agents,):
        raise InvalidInputError(f"allocation has {x.size} entries for {cf.n_agents} agents")
    n = cf.n_agents
    vt = coalition_table(cf, sab).v_tilde
    masks = np.arange(1 << n)
    alloc = np.zeros(1 << n)
    for i in range(n):
        alloc += np.where(masks >> i & 1, x[i], 0.0)
    deficit = vt - alloc
    deficit[0] = 0.0
    worst = deficit.max()
    if worst > tol:
        cands = masks[deficit >= worst - tol]
        sizes = _popcounts(n)[cands]
        return False, int(cands[np.lexsort((cands, sizes))[0]])
    if abs(x.sum() - vt[-1]) > tol:
        return False, None
    return True, None


def best_coalition(cf: CharacteristicFunction, sab: SabotageModel | None = None, tol: float = EFFICIENCY_TOL) -> tuple[int, float]:
    """Highest-worth coalition; near-ties go to fewer members, then the smaller mask."""
    vt = coalition_table(cf, sab).v_tilde
    masks = np.arange(len(vt))
    cands = masks[vt >= vt.max() - tol]
    sizes = _popcounts(cf.n_agents)[cands]
    m = int(cands[np.lexsort((cands, sizes))[0]])
    return m, float(vt[m])
