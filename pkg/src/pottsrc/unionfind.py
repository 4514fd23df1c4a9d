"""Disjoint-set forest with path halving and union by size."""
import numpy as np


class UnionFind:
    __slots__ = ("parent", "size", "n_components")

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)
        self.n_components = n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return int(x)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_components -= 1
        return True

    def labels(self) -> np.ndarray:
        """Root label per element (fully compressed)."""
        return np.array([self.find(i) for i in range(len(self.parent))],
                        dtype=np.int64)
