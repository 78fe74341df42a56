"""Rooted-tree combinatorics: free-semigroup words, truncations, descendant counts.

Vertices of the q-homogeneous rooted tree are words over the digits 1..q,
the root being the empty word.  The breadth-first index assigned by
:func:`truncate` is the canonical matrix-row order used everywhere else in
the package.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Sequence

VERTEX_CAP = 10**6


@dataclass(frozen=True)
class Vertex:
    """A word over generator digits; the root is the empty word."""

    word: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if any((not isinstance(d, int)) or d < 1 for d in self.word):
            raise ValueError(f"vertex digits must be integers >= 1, got {self.word}")

    @property
    def depth(self) -> int:
        return len(self.word)

    def child(self, digit: int) -> "Vertex":
        return Vertex(self.word + (digit,))

    def is_prefix_of(self, other: "Vertex") -> bool:
        return other.word[: len(self.word)] == self.word

    def label(self) -> str:
        if not self.word:
            return "e"
        if max(self.word) <= 9:
            return "".join(str(d) for d in self.word)
        return ".".join(str(d) for d in self.word)

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.label()


ROOT = Vertex()


@dataclass(frozen=True)
class Relation:
    """Outcome of comparing two vertices in the rooted partial order."""

    comparable: bool
    distance: int | None = None
    ancestor: Vertex | None = None


def relation(a: Vertex, b: Vertex) -> Relation:
    """Compare two vertices: comparable iff one word is a prefix of the other.

    For comparable pairs the graph distance is the depth difference and the
    ancestor is the shorter word.  Digits are treated as abstract labels, so
    no common arity is required beyond the per-vertex digit validity.
    """
    if a.depth <= b.depth:
        lo, hi = a, b
    else:
        lo, hi = b, a
    if lo.is_prefix_of(hi):
        return Relation(True, hi.depth - lo.depth, lo)
    return Relation(False)


@dataclass(frozen=True, eq=False)
class TreeTruncation:
    """All vertices of the q-homogeneous tree down to a fixed depth.

    ``vertices`` is in breadth-first order (level k before level k+1,
    lexicographic within a level); ``index`` is the inverse bijection.
    """

    q: int
    depth: int
    vertices: tuple[Vertex, ...]
    index: dict[Vertex, int]
    parents: tuple[int, ...]  # parent index per vertex; root is its own parent

    @property
    def size(self) -> int:
        return len(self.vertices)

    def level_start(self, k: int) -> int:
        # (q^k - 1) / (q - 1) vertices strictly above level k
        return (self.q**k - 1) // (self.q - 1)

    def level_slice(self, k: int) -> slice:
        if not 0 <= k <= self.depth:
            raise ValueError(f"level {k} outside truncation depth {self.depth}")
        return slice(self.level_start(k), self.level_start(k + 1))

    def labels(self) -> tuple[str, ...]:
        return tuple(v.label() for v in self.vertices)


def truncate(q: int, depth: int, cap: int = VERTEX_CAP) -> TreeTruncation:
    """Finite window onto the q-homogeneous rooted tree."""
    if not (isinstance(q, int) and q >= 2):
        raise ValueError(f"arity must be an integer >= 2, got {q}")
    if not (isinstance(depth, int) and depth >= 0):
        raise ValueError(f"depth must be an integer >= 0, got {depth}")
    count = (q ** (depth + 1) - 1) // (q - 1)
    if count > cap:
        raise ValueError(f"truncation would hold {count} vertices, exceeding the cap {cap}")
    vertices: list[Vertex] = [ROOT]
    parents: list[int] = [0]
    level = [(ROOT, 0)]
    for _ in range(depth):
        nxt = []
        for vert, idx in level:
            for digit in range(1, q + 1):
                child = vert.child(digit)
                parents.append(idx)
                vertices.append(child)
                nxt.append((child, len(vertices) - 1))
        level = nxt
    index = {v: i for i, v in enumerate(vertices)}
    return TreeTruncation(q, depth, tuple(vertices), index, tuple(parents))


def tq1_truncation(q: int, n: int) -> tuple[Vertex, ...]:
    """Ordered vertices of the q-ray star tree down to ray length n.

    Order: root first, then each ray in full before the next
    (e, s1, s1^2, ..., s1^n, s2, ..., sq^n), giving 1 + q*n vertices.
    """
    if q < 2:
        raise ValueError(f"arity must be >= 2, got {q}")
    if n < 1:
        raise ValueError(f"ray length must be >= 1, got {n}")
    out = [ROOT]
    for digit in range(1, q + 1):
        out.extend(Vertex((digit,) * k) for k in range(1, n + 1))
    return tuple(out)


class GeneralRootedTree:
    """Finite rooted tree given by a parent array.

    The root is encoded as its own parent (or -1).  Descendant counting
    uses DFS intervals so each query is a pair of binary searches per
    vertex.
    """

    def __init__(self, parents: Sequence[int]):
        n = len(parents)
        if n == 0:
            raise ValueError("tree must have at least one vertex")
        roots = [i for i, p in enumerate(parents) if p == i or p == -1]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]
        self.parents = tuple(int(p) for p in parents)
        self.children: list[list[int]] = [[] for _ in range(n)]
        for i, p in enumerate(self.parents):
            if i == self.root:
                continue
            if not 0 <= p < n:
                raise ValueError(f"parent index {p} of vertex {i} out of range")
            self.children[p].append(i)
        self.depths = [-1] * n
        self.depths[self.root] = 0
        order = [self.root]
        head = 0
        while head < len(order):
            v = order[head]
            head += 1
            for c in self.children[v]:
                self.depths[c] = self.depths[v] + 1
                order.append(c)
        if len(order) != n:
            raise ValueError("tree is disconnected or contains a cycle")
        self._bfs_order = order
        self._build_intervals()

    def _build_intervals(self) -> None:
        n = len(self.parents)
        tin = [0] * n
        tout = [0] * n
        clock = 0
        stack: list[tuple[int, bool]] = [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                tout[v] = clock
                continue
            tin[v] = clock
            clock += 1
            stack.append((v, True))
            for c in reversed(self.children[v]):
                stack.append((c, False))
        self._tin = tin
        self._tout = tout
        by_depth: dict[int, list[int]] = {}
        for v in range(n):
            by_depth.setdefault(self.depths[v], []).append(tin[v])
        self._depth_positions = {d: sorted(ts) for d, ts in by_depth.items()}

    @property
    def size(self) -> int:
        return len(self.parents)

    def descendant_count(self, v: int, n: int) -> int:
        """Number of descendants of ``v`` at distance exactly ``n``."""
        target = self.depths[v] + n
        positions = self._depth_positions.get(target)
        if not positions:
            return 0
        lo = bisect_left(positions, self._tin[v])
        hi = bisect_left(positions, self._tout[v])
        return hi - lo

    @classmethod
    def from_truncation(cls, trunc: TreeTruncation) -> "GeneralRootedTree":
        return cls(trunc.parents)

    @classmethod
    def homogeneous(cls, q: int, depth: int, cap: int = VERTEX_CAP) -> "GeneralRootedTree":
        return cls.from_truncation(truncate(q, depth, cap=cap))

    @classmethod
    def single_path(cls, length: int) -> "GeneralRootedTree":
        return cls([max(i - 1, 0) for i in range(length + 1)])

    @classmethod
    def star_rays(cls, q: int, n: int) -> "GeneralRootedTree":
        """Root with q rays of length n each (the ordering of tq1_truncation)."""
        parents = [0]
        for b in range(q):
            start = 1 + b * n
            parents.append(0)
            parents.extend(range(start, start + n - 1))
        return cls(parents)


def delta_n(tree: GeneralRootedTree | TreeTruncation, n: int) -> int:
    """Maximal number of n-th descendants over all vertices of a finite tree."""
    if n < 1:
        raise ValueError(f"descendant distance must be >= 1, got {n}")
    if isinstance(tree, TreeTruncation):
        tree = GeneralRootedTree.from_truncation(tree)
    return max(tree.descendant_count(v, n) for v in range(tree.size))


def parse_tree(spec: dict) -> GeneralRootedTree:
    """Build a tree from its JSON description.

    Accepted forms: {"kind": "homogeneous", "q": int, "depth": int},
    {"kind": "parent_array", "parents": [...]}, {"kind": "tq1", "q": int, "n": int}.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("tree spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "homogeneous":
        return GeneralRootedTree.homogeneous(int(spec["q"]), int(spec["depth"]))
    if kind == "parent_array":
        return GeneralRootedTree(list(spec["parents"]))
    if kind == "tq1":
        return GeneralRootedTree.star_rays(int(spec["q"]), int(spec["n"]))
    raise ValueError(f"unknown tree kind {kind!r}")


def vertex_from_digits(digits: Iterable[int]) -> Vertex:
    return Vertex(tuple(int(d) for d in digits))
