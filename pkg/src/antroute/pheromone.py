"""Pheromone tables and the ACO update/selection rules.

A node's table maps ``(destination, neighbor)`` to a concentration ``tau``.
Reinforcement adds a fixed amount, evaporation scales every entry by
``1 - lambda``, and the next hop is drawn with probability proportional
to ``tau ** k`` over the live neighbors that hold a positive value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from . import _kernels


class NoRoute(Exception):
    """No live neighbor holds positive pheromone toward the destination."""


@dataclass
class AcoParams:
    delta_tau: float = 0.1
    lam: float = 0.02
    k: float = 2.0
    tau_prune: float = 1e-6

    def __post_init__(self):
        if not (self.delta_tau > 0 and math.isfinite(self.delta_tau)):
            raise ValueError(f"delta_tau must be positive, got {self.delta_tau!r}")
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam!r}")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError(f"k must be positive, got {self.k!r}")
        if not self.tau_prune >= 0:
            raise ValueError(f"tau_prune must be non-negative, got {self.tau_prune!r}")


class PheromoneTable:
    """Per-node store of ``tau`` values, indexed by destination then neighbor."""

    __slots__ = ("owner", "tau_prune", "_by_dest")

    def __init__(self, owner: int, tau_prune: float = 1e-6):
        self.owner = owner
        self.tau_prune = tau_prune
        self._by_dest: dict[int, dict[int, float]] = {}

    def get(self, destination: int, neighbor: int) -> float:
        row = self._by_dest.get(destination)
        if row is None:
            return 0.0
        return row.get(neighbor, 0.0)

    def has(self, destination: int, neighbor: int) -> bool:
        row = self._by_dest.get(destination)
        return row is not None and neighbor in row

    def set(self, destination: int, neighbor: int, tau: float) -> None:
        if not (tau >= 0 and math.isfinite(tau)):
            raise ValueError(f"tau must be finite and non-negative, got {tau!r}")
        self._by_dest.setdefault(destination, {})[neighbor] = float(tau)

    def row(self, destination: int) -> dict[int, float]:
        """Live view of the ``neighbor -> tau`` map for one destination."""
        return self._by_dest.get(destination, {})

    def destinations(self) -> list[int]:
        return sorted(self._by_dest)

    def entries(self) -> list[tuple[int, int, float]]:
        out = []
        for dest in sorted(self._by_dest):
            row = self._by_dest[dest]
            for nb in sorted(row):
                out.append((dest, nb, row[nb]))
        return out

    def remove_neighbor(self, neighbor: int) -> int:
        """Drop every entry that routes over ``neighbor``; return how many."""
        removed = 0
        for dest in list(self._by_dest):
            row = self._by_dest[dest]
            if neighbor in row:
                del row[neighbor]
                removed += 1
                if not row:
                    del self._by_dest[dest]
        return removed

    def __len__(self):
        return sum(len(r) for r in self._by_dest.values())

    def dump(self) -> str:
        return "".join(f"{self.owner}\t{d}\t{n}\t{t!r}\n" for d, n, t in self.entries())


def reinforce(table: PheromoneTable, destination: int, neighbor: int, amount: float) -> None:
    if not (amount > 0 and math.isfinite(amount)):
        raise ValueError(f"reinforcement amount must be positive and finite, got {amount!r}")
    row = table._by_dest.get(destination)
    if row is None:
        row = table._by_dest[destination] = {}
    row[neighbor] = row.get(neighbor, 0.0) + amount


def evaporate(table: PheromoneTable, lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    keep = 1.0 - lam
    prune = table.tau_prune
    by_dest = table._by_dest
    for dest in list(by_dest):
        row = by_dest[dest]
        for nb in list(row):
            v = keep * row[nb]
            if v < prune:
                del row[nb]
            else:
                row[nb] = v
        if not row:
            del by_dest[dest]


def next_hop_distribution(table: PheromoneTable, destination: int,
                          live_neighbors: Iterable[int], k: float) -> list[tuple[int, float]]:
    """Transition probabilities ``tau_j**k / sum(tau**k)`` over live neighbors.

    Neighbors are listed in ascending id order, which fixes the
    inverse-CDF order used by :func:`sample_next_hop`.  Raises
    :class:`NoRoute` when none of them holds a positive value.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k!r}")
    row = table._by_dest.get(destination)
    if not row:
        raise NoRoute(destination)
    nbs = []
    taus = []
    for nb in sorted(row):
        if nb in live_neighbors:
            t = row[nb]
            if t > 0.0:
                nbs.append(nb)
                taus.append(t)
    if not nbs:
        raise NoRoute(destination)
    probs = _kernels.power_normalize(taus, k)
    if probs is None:
        # tau**k underflowed for every candidate; fall back to the largest tau
        best = max(range(len(taus)), key=taus.__getitem__)
        return [(nb, 1.0 if i == best else 0.0) for i, nb in enumerate(nbs)]
    return list(zip(nbs, probs))


def sample_next_hop(distribution: list[tuple[int, float]], rng) -> int:
    if not distribution:
        raise ValueError("cannot sample from an empty distribution")
    idx = _kernels.pick_index([p for _, p in distribution], rng.random())
    return distribution[idx][0]


def init_classic(hops: int) -> float:
    """Initial pheromone from hop count alone: ``1 / hops``."""
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops!r}")
    return 1.0 / hops


def init_gamma(hops: int, t: float) -> float:
    """Initial pheromone weighted by trip time: ``2 / (hops + t)``."""
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops!r}")
    if not (t > 0 and math.isfinite(t)):
        raise ValueError(f"trip time must be positive, got {t!r}")
    return 2.0 / (hops + t)


def best_neighbor(table: PheromoneTable, destination: int,
                  candidates: Iterable[int]) -> Optional[int]:
    """Neighbor with maximal positive tau among ``candidates`` (lowest id on ties)."""
    row = table._by_dest.get(destination)
    if not row:
        return None
    best = None
    best_tau = 0.0
    for nb in sorted(row):
        t = row[nb]
        if t > best_tau and nb in candidates:
            best, best_tau = nb, t
    return best
