from __future__ import annotations

from typing import Hashable, Iterable


class MaxUnionFind:
    """Disjoint sets whose representative is always the largest member.

    With rids as elements, ``find`` returns exactly the block number the
    chase assigns under the max matching function.

    >>> uf = MaxUnionFind([1, 2, 3])
    >>> uf.union(1, 2), uf.union(2, 1)
    (True, False)
    >>> uf.find(1), uf.find(3)
    (2, 3)
    """

    def __init__(self, elements: Iterable[Hashable] = ()):
        self.parent = {e: e for e in elements}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        parent = self.parent
        if x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra < rb:
            self.parent[ra] = rb
        else:
            self.parent[rb] = ra
        return True

    def groups(self) -> dict:
        out: dict = {}
        for x in sorted(self.parent):
            out.setdefault(self.find(x), []).append(x)
        return out
