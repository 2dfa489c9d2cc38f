"""Seeded random order generation.

Each run draws one selection weight per SKU from Gamma(shape=1, scale=2),
normalizes the weights into the catalog frequency vector, and then picks
order-line SKUs from that categorical distribution. Customer orders carry
1-3 single-unit lines; replenishment orders carry a fixed quantity of one
SKU.
"""

from __future__ import annotations

import numpy as np

from .world import SkuCatalog


class OrderStream:
    """Stateful SKU/order sampler bound to one run's generator."""

    def __init__(self, rng: np.random.Generator, sku_count: int = 1000,
                 min_lines: int = 1, max_lines: int = 3, line_quantity: int = 1,
                 replenish_quantity: int = 20, weights=None):
        if sku_count < 1:
            raise ValueError("need at least one sku")
        self.rng = rng
        if weights is None:
            weights = rng.gamma(shape=1.0, scale=2.0, size=sku_count)
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if total <= 0:
            weights = np.ones(sku_count)
            total = float(sku_count)
        freq = weights / total
        freq = freq / freq.sum()  # renormalize away rounding residue
        self.catalog = SkuCatalog(freq)
        self._cumulative = np.cumsum(freq)
        self._cumulative[-1] = 1.0
        self.min_lines = min_lines
        self.max_lines = max_lines
        self.line_quantity = line_quantity
        self.replenish_quantity = replenish_quantity

    @property
    def frequencies(self) -> np.ndarray:
        return self.catalog.frequencies

    def draw_sku(self) -> int:
        u = self.rng.random()
        idx = int(np.searchsorted(self._cumulative, u, side="right"))
        return min(idx, len(self._cumulative) - 1)

    def draw_skus(self, n: int) -> np.ndarray:
        u = self.rng.random(n)
        idx = np.searchsorted(self._cumulative, u, side="right")
        return np.minimum(idx, len(self._cumulative) - 1)

    def draw_customer_lines(self) -> list[list[int]]:
        n = int(self.rng.integers(self.min_lines, self.max_lines + 1))
        return [[self.draw_sku(), self.line_quantity] for _ in range(n)]

    def draw_initial_inventory(self, n_pods: int, units_per_pod: int) -> list[dict[int, int]]:
        """Per-pod sku->count dicts totalling ``units_per_pod`` each."""
        if n_pods == 0 or units_per_pod == 0:
            return [dict() for _ in range(n_pods)]
        draws = self.draw_skus(n_pods * units_per_pod)
        out = []
        for i in range(n_pods):
            counts: dict[int, int] = {}
            for sku in draws[i * units_per_pod:(i + 1) * units_per_pod]:
                sku = int(sku)
                counts[sku] = counts.get(sku, 0) + 1
            out.append(counts)
        return out
