"""Balanced separator tree over the vertices and the partial order it induces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence

import numpy as np

from . import _kernels as K
from .graph import CoordinateTable, Graph, GraphError
from .separator import _local_coords, claim_one, induced_csr, split_local

MAX_DEPTH = 64


class HierarchyError(GraphError):
    """Raised for invalid hierarchy parameters or structure."""


@dataclass
class QueryHierarchy:
    """Separator tree stored as flat arrays.

    Node ``k`` has bitstring ``node_bits[k]`` of length ``node_depth[k]``
    (root first, most significant bit first), members
    ``members[member_ptr[k]:member_ptr[k+1]]`` in ascending id order and
    ``node_base[k]`` strict-ancestor vertices above it. Each vertex knows its
    node, its position inside the node and its rank ``tau``.
    """

    n: int
    node_bits: np.ndarray
    node_depth: np.ndarray
    node_parent: np.ndarray
    node_base: np.ndarray
    member_ptr: np.ndarray
    members: np.ndarray
    vnode: np.ndarray
    vpos: np.ndarray
    tau: np.ndarray
    beta: float = 0.2
    anc_ptr: np.ndarray = None
    anc_end: np.ndarray = None

    def __post_init__(self):
        if self.anc_ptr is None:
            self._index_ancestors()

    # ------------------------------------------------------------------ #
    @classmethod
    def from_nodes(cls, n: int, nodes: Mapping[str, Sequence[int]], beta: float = 0.2) -> "QueryHierarchy":
        """Build from ``{bitstring: members}``, e.g. ``{"": [2], "0": [0], "1": [1]}``.

        Members of a node are ordered by ascending id regardless of input order.
        """
        keys = sorted(nodes, key=lambda b: (len(b), b))
        if not keys or keys[0] != "":
            raise HierarchyError("a root node with bitstring '' is required")
        index = {b: k for k, b in enumerate(keys)}
        parent = np.full(len(keys), -1, dtype=np.int32)
        for b, k in index.items():
            if b:
                if b[:-1] not in index:
                    raise HierarchyError(f"node {b!r} has no parent node")
                parent[k] = index[b[:-1]]
            if set(b) - {"0", "1"}:
                raise HierarchyError(f"bad bitstring {b!r}")
        bits = np.array([int(b, 2) if b else 0 for b in keys], dtype=np.uint64)
        depth = np.array([len(b) for b in keys], dtype=np.int32)
        mem = [sorted(int(v) for v in nodes[b]) for b in keys]
        return cls._assemble(n, bits, depth, parent, mem, beta)

    @classmethod
    def _assemble(cls, n, bits, depth, parent, mem: List[List[int]], beta) -> "QueryHierarchy":
        nn = len(mem)
        if any(len(m) == 0 for m in mem):
            raise HierarchyError("every tree node needs at least one member")
        if depth.max(initial=0) > MAX_DEPTH:
            raise HierarchyError(f"tree depth exceeds {MAX_DEPTH}")
        member_ptr = np.zeros(nn + 1, dtype=np.int64)
        member_ptr[1:] = np.cumsum([len(m) for m in mem])
        members = np.array([v for m in mem for v in m], dtype=np.int32)
        if len(members) != n or len(np.unique(members)) != n or (n and (members.min() < 0 or members.max() >= n)):
            raise HierarchyError("tree members must partition the vertex set")
        base = np.zeros(nn, dtype=np.int64)
        # parents always precede children (sorted by depth or created top-down)
        for k in range(nn):
            p = parent[k]
            if p >= k and p != -1:
                raise HierarchyError("parents must precede children")
            if p >= 0:
                base[k] = base[p] + len(mem[p])
        vnode = np.empty(n, dtype=np.int32)
        vpos = np.empty(n, dtype=np.int32)
        for k, m in enumerate(mem):
            vnode[m] = k
            vpos[m] = np.arange(len(m))
        tau = (base[vnode] + vpos).astype(np.int32)
        return cls(n, bits.astype(np.uint64), depth.astype(np.int32), parent.astype(np.int32),
                   base, member_ptr, members, vnode, vpos, tau, beta)

    def _index_ancestors(self):
        nn = len(self.node_depth)
        self.anc_ptr = np.zeros(nn + 1, dtype=np.int64)
        self.anc_ptr[1:] = np.cumsum(self.node_depth.astype(np.int64) + 1)
        self.anc_end = np.empty(self.anc_ptr[-1], dtype=np.int64)
        sizes = np.diff(self.member_ptr)
        for k in range(nn):
            a = k
            for d in range(self.node_depth[k], -1, -1):
                self.anc_end[self.anc_ptr[k] + d] = self.node_base[a] + sizes[a]
                a = self.node_parent[a]

    # ------------------------------------------------------------------ #
    @property
    def num_nodes(self) -> int:
        return len(self.node_depth)

    @property
    def height(self) -> int:
        return int(self.node_depth.max(initial=0)) + 1

    def node_members(self, k: int) -> np.ndarray:
        return self.members[self.member_ptr[k]:self.member_ptr[k + 1]]

    def bitstring(self, k: int) -> str:
        d = int(self.node_depth[k])
        return format(int(self.node_bits[k]), f"0{d}b") if d else ""

    def node_of(self, v: int) -> int:
        return int(self.vnode[v])

    def children(self, k: int) -> List[int]:
        return [int(c) for c in np.flatnonzero(self.node_parent == k)]

    def subtree_vertices(self, k: int) -> np.ndarray:
        prefix_len = int(self.node_depth[k])
        bits = int(self.node_bits[k])
        d = self.node_depth.astype(np.int64)
        keep = d >= prefix_len
        shifted = np.where(keep, self.node_bits >> np.maximum(d - prefix_len, 0).astype(np.uint64), 0)
        nodes = np.flatnonzero(keep & (shifted == bits))
        return np.sort(np.concatenate([self.node_members(int(j)) for j in nodes]))

    def _check_vertex(self, v: int):
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range [0, {self.n})")

    def rank(self, v: int) -> int:
        """Number of strict ancestors of ``v`` (0 for the first root member)."""
        self._check_vertex(v)
        return int(self.tau[v])

    def is_ancestor(self, u: int, v: int) -> bool:
        """True when ``u`` precedes or equals ``v`` in the hierarchy order."""
        self._check_vertex(u)
        self._check_vertex(v)
        nu, nv = int(self.vnode[u]), int(self.vnode[v])
        du, dv = int(self.node_depth[nu]), int(self.node_depth[nv])
        if du > dv:
            return False
        if (int(self.node_bits[nv]) >> (dv - du)) != int(self.node_bits[nu]):
            return False
        return nu != nv or self.vpos[u] <= self.vpos[v]

    def ancestors(self, v: int) -> np.ndarray:
        """Ancestors of ``v`` including itself, ordered by rank."""
        self._check_vertex(v)
        path = []
        k = int(self.vnode[v])
        while k >= 0:
            path.append(k)
            k = int(self.node_parent[k])
        out = [self.node_members(k) for k in reversed(path[1:])]
        out.append(self.node_members(path[0])[: self.vpos[v] + 1])
        return np.concatenate(out).astype(np.int32)

    def ancestor_at(self, v: int, i: int) -> int:
        """The ancestor of ``v`` whose rank is ``i``."""
        if not 0 <= i <= self.tau[v]:
            raise IndexError(f"position {i} outside [0, {self.tau[v]}]")
        return int(self.ancestors(v)[i])

    def common_ancestor_count(self, s: int, t: int) -> int:
        self._check_vertex(s)
        self._check_vertex(t)
        return int(K.common_count_many(np.array([s]), np.array([t]), self.tau, self.vnode, self.node_bits,
                                       self.node_depth, self.anc_ptr, self.anc_end)[0])

    def common_ancestor_counts(self, ss, tt) -> np.ndarray:
        ss = np.asarray(ss, dtype=np.int64)
        tt = np.asarray(tt, dtype=np.int64)
        return K.common_count_many(ss, tt, self.tau, self.vnode, self.node_bits, self.node_depth,
                                   self.anc_ptr, self.anc_end)

    def order_by_rank(self) -> np.ndarray:
        """Vertices sorted by ascending rank (ties by id)."""
        return np.lexsort((np.arange(self.n), self.tau)).astype(np.int32)

    # ------------------------------------------------------------------ #
    def validate(self, graph: Optional[Graph] = None, check_balance: bool = True) -> None:
        """Raise ``HierarchyError`` when a structural invariant fails."""
        sizes = np.diff(self.member_ptr)
        if (sizes <= 0).any():
            raise HierarchyError("empty tree node")
        for k in range(self.num_nodes):
            p = self.node_parent[k]
            if p >= 0:
                if self.node_base[k] != self.node_base[p] + sizes[p]:
                    raise HierarchyError(f"node {k}: base mismatch")
                if self.node_depth[k] != self.node_depth[p] + 1 or (int(self.node_bits[k]) >> 1) != int(self.node_bits[p]):
                    raise HierarchyError(f"node {k}: bitstring does not extend its parent")
        if not np.array_equal(self.tau, self.node_base[self.vnode] + self.vpos):
            raise HierarchyError("tau differs from base + position")
        if graph is None:
            return
        subtree = np.zeros(self.num_nodes, dtype=np.int64)
        for k in range(self.num_nodes - 1, -1, -1):
            subtree[k] += sizes[k]
            if self.node_parent[k] >= 0:
                subtree[self.node_parent[k]] += subtree[k]
        for k in range(self.num_nodes):
            kids = self.children(k)
            if check_balance and kids:
                bound = (1.0 - self.beta) * subtree[k]
                if any(subtree[c] > bound + 1e-9 for c in kids):
                    raise HierarchyError(f"node {k}: unbalanced children")
        # an edge must join comparable vertices, otherwise the separator leaks
        for u, v, _ in graph.edges():
            if not (self.is_ancestor(u, v) or self.is_ancestor(v, u)):
                raise HierarchyError(f"edge ({u}, {v}) joins different subtrees")


def build_query_hierarchy(graph: Graph, beta: float = 0.2, coords=None, leaf_size: int = 16,
                          seed: int = 0) -> QueryHierarchy:
    """Recursive bisection of ``graph`` into a balanced separator tree.

    Subgraphs with at most ``leaf_size`` vertices become leaves; larger ones
    are split by :func:`dhl.separator.split_local` with the separator assigned
    to the current node.
    """
    if not 0.0 < beta <= 0.5:
        raise HierarchyError(f"beta must lie in (0, 0.5], got {beta}")
    if graph.n == 0:
        raise HierarchyError("cannot build a hierarchy over an empty graph")
    if leaf_size < 1:
        raise HierarchyError("leaf_size must be positive")
    if coords is None and graph.has_coordinates():
        coords = CoordinateTable(graph.coords, graph.coord_missing if graph.coord_missing is not None
                                 else np.zeros(graph.n, dtype=bool))
    local = np.full(graph.n, -1, dtype=np.int64)
    bits: List[int] = []
    depth: List[int] = []
    parent: List[int] = []
    mem: List[List[int]] = []
    # depth-first, left before right, so parents precede children
    stack = [(np.arange(graph.n, dtype=np.int32), -1, 0, 0)]
    while stack:
        verts, par, b, d = stack.pop()
        if d > MAX_DEPTH:
            raise HierarchyError(f"tree depth exceeds {MAX_DEPTH}")
        k = len(mem)
        bits.append(b)
        depth.append(d)
        parent.append(par)
        m = len(verts)
        if m <= leaf_size:
            mem.append(sorted(verts.tolist()))
            continue
        ptr, nbr = induced_csr(verts, graph.indptr, graph.adj, local)
        xy = _local_coords(coords, verts)
        # a tree node must own at least one vertex
        cut, side = claim_one(*split_local(m, ptr, nbr, beta, xy, seed * 1_000_003 + k))
        mem.append(sorted(verts[cut].tolist()))
        right = verts[side == 1]
        left = verts[side == 0]
        if len(right):
            stack.append((right, k, (b << 1) | 1, d + 1))
        if len(left):
            stack.append((left, k, b << 1, d + 1))
    return QueryHierarchy._assemble(graph.n, np.array(bits, dtype=np.uint64), np.array(depth, dtype=np.int32),
                                    np.array(parent, dtype=np.int32), mem, beta)
