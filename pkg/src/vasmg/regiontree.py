"""Vertex-count-bounded quadtree/octree over scattered grid vertices.

The tree drives the auxiliary coarse grids of the multigrid hierarchy: points
are inserted one by one into a square (2D) or cube (3D) root cell, and any
cell holding more than ``threshold`` points splits into 2^d children at the
midpoints.  Children are ordered clockwise starting at the top-left quadrant
(top z-half first in 3D), and the same ordering is used for cell corners.

All cell geometry lives on a dyadic integer lattice: a cell at depth k (root
depth 1) with per-axis anchor m spans
``root_low + m * side_k`` .. ``root_low + (m + 1) * side_k`` with
``side_k = root_side / 2**(k-1)``.  Every bound and midpoint is evaluated
through that one formula, which keeps containment tests consistent across
depths and lets coarse vertices deduplicate on exact integer keys instead of
floating-point tolerances.
"""

from __future__ import annotations

import gc
import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .mesh import MeshStats

# int64 anchors double per level; meshes stay far below this, but reject
# pathological coordinate spreads instead of wrapping or looping forever
_MAX_DEPTH = 60

# Clockwise from top-left; each selector picks the low (0) or high (1) half
# per axis.  The 3D order walks the top z-half first, then the bottom, each
# in the 2D clockwise order.  Cell corners use the same selector sequence.
CHILD_ORDER_2D = ((0, 1), (1, 1), (1, 0), (0, 0))
CHILD_ORDER_3D = ((0, 1, 1), (1, 1, 1), (1, 0, 1), (0, 0, 1),
                  (0, 1, 0), (1, 1, 0), (1, 0, 0), (0, 0, 0))


def child_order(dim: int):
    return CHILD_ORDER_2D if dim == 2 else CHILD_ORDER_3D


@nb.njit(cache=True, nogil=True)
def _build_cells(px, py, pz, three_d, lo, side, threshold):
    """Flat-array tree build: the compiled core of the construction.

    Node k carries anchors ``ax/ay/az``, depth ``dp`` and ``fc`` (index of
    its first child, children contiguous in clockwise order, -1 on leaves).
    Leaf membership lives in FIFO linked lists (``head``/``tail`` per node,
    ``nxt`` per point), so redistribution on a split walks exactly the
    overfull cell's points in insertion order.  ``leaf_of`` maps every point
    to its final leaf.  The midpoint formula
    ``lo + (2*anchor + 1) * side * 2.0**(-depth)`` is bit-identical to the
    dyadic lattice helper on the Python side, so lookups and bounds stay
    consistent with the build.  Returns a status of 1 when a split would
    exceed the depth cap (points too close relative to the domain).
    """
    n = px.shape[0]
    need = 8 if three_d else 4
    cap = 64 + 4 * (n // max(threshold, 1) + 1)
    ax = np.zeros(cap, np.int64)
    ay = np.zeros(cap, np.int64)
    az = np.zeros(cap, np.int64)
    dp = np.zeros(cap, np.int32)
    fc = np.full(cap, -1, np.int64)
    cnt = np.zeros(cap, np.int64)
    head = np.full(cap, -1, np.int64)
    tail = np.full(cap, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    leaf_of = np.zeros(n, np.int64)
    cascade = np.empty(128, np.int64)
    dp[0] = 1
    n_nodes = 1
    height = 1

    for i in range(n):
        x = px[i]
        y = py[i]
        node = 0
        while fc[node] != -1:
            d = dp[node]
            cs = side * 2.0 ** (-np.float64(d))
            base = 0
            if three_d:
                if pz[i] < lo + np.float64(2 * az[node] + 1) * cs:
                    base = 4
            if y >= lo + np.float64(2 * ay[node] + 1) * cs:
                if x <= lo + np.float64(2 * ax[node] + 1) * cs:
                    node = fc[node] + base
                else:
                    node = fc[node] + base + 1
            else:
                if x >= lo + np.float64(2 * ax[node] + 1) * cs:
                    node = fc[node] + base + 2
                else:
                    node = fc[node] + base + 3
        leaf_of[i] = node
        if head[node] == -1:
            head[node] = i
        else:
            nxt[tail[node]] = i
        tail[node] = i
        cnt[node] += 1
        if cnt[node] <= threshold:
            continue

        stack_n = 1
        cascade[0] = node
        while stack_n > 0:
            stack_n -= 1
            s = cascade[stack_n]
            d = dp[s]
            if d >= _MAX_DEPTH:
                return ax, ay, az, dp, fc, leaf_of, n_nodes, height, 1
            if n_nodes + need > cap:
                new_cap = cap * 2 + need
                ax2 = np.zeros(new_cap, np.int64)
                ay2 = np.zeros(new_cap, np.int64)
                az2 = np.zeros(new_cap, np.int64)
                dp2 = np.zeros(new_cap, np.int32)
                fc2 = np.full(new_cap, -1, np.int64)
                cnt2 = np.zeros(new_cap, np.int64)
                head2 = np.full(new_cap, -1, np.int64)
                tail2 = np.full(new_cap, -1, np.int64)
                ax2[:cap] = ax
                ay2[:cap] = ay
                az2[:cap] = az
                dp2[:cap] = dp
                fc2[:cap] = fc
                cnt2[:cap] = cnt
                head2[:cap] = head
                tail2[:cap] = tail
                ax, ay, az, dp, fc = ax2, ay2, az2, dp2, fc2
                cnt, head, tail = cnt2, head2, tail2
                cap = new_cap
            f = n_nodes
            fc[s] = f
            for c in range(need):
                k = f + c
                two = c & 3
                # clockwise selectors: (0,1), (1,1), (1,0), (0,0)
                sx = 1 if two == 1 or two == 2 else 0
                sy = 1 if two <= 1 else 0
                ax[k] = 2 * ax[s] + sx
                ay[k] = 2 * ay[s] + sy
                if three_d:
                    az[k] = 2 * az[s] + (1 if c < 4 else 0)
                dp[k] = d + 1
                fc[k] = -1
                cnt[k] = 0
                head[k] = -1
                tail[k] = -1
            n_nodes += need
            if d + 1 > height:
                height = d + 1
            cs = side * 2.0 ** (-np.float64(d))
            mx = lo + np.float64(2 * ax[s] + 1) * cs
            my = lo + np.float64(2 * ay[s] + 1) * cs
            mz = lo + np.float64(2 * az[s] + 1) * cs if three_d else 0.0
            p = head[s]
            while p != -1:
                p_next = nxt[p]
                nxt[p] = -1
                base = 0
                if three_d and pz[p] < mz:
                    base = 4
                if py[p] >= my:
                    child = f + base + (0 if px[p] <= mx else 1)
                else:
                    child = f + base + (2 if px[p] >= mx else 3)
                leaf_of[p] = child
                if head[child] == -1:
                    head[child] = p
                else:
                    nxt[tail[child]] = p
                tail[child] = p
                cnt[child] += 1
                p = p_next
            head[s] = -1
            tail[s] = -1
            cnt[s] = 0
            for c in range(need):
                if cnt[f + c] > threshold:
                    if stack_n >= cascade.shape[0]:
                        cascade2 = np.empty(cascade.shape[0] * 2, np.int64)
                        cascade2[:cascade.shape[0]] = cascade
                        cascade = cascade2
                    cascade[stack_n] = f + c
                    stack_n += 1
    return ax, ay, az, dp, fc, leaf_of, n_nodes, height, 0


class RegionNode:
    """One axis-aligned cell of the region tree.

    ``anchor`` is the per-axis integer index of the low corner at this node's
    depth resolution; ``vertex_indices`` holds point ids on leaves only.
    ``subtree_count`` (total points at or below the node) is filled in by
    :func:`prune_and_index`; a leaf with ``subtree_count == 0`` is pruned,
    i.e. excluded from every level enumeration.
    """

    __slots__ = ("anchor", "depth", "children", "vertex_indices", "subtree_count")

    def __init__(self, anchor: tuple[int, ...], depth: int):
        self.anchor = anchor
        self.depth = depth
        self.children: list[RegionNode] | None = None
        self.vertex_indices: list[int] = []
        self.subtree_count = 0

    @property
    def is_leaf(self) -> bool:
        return self.children is None


class RegionTree:
    """Region tree over a fixed point set, plus point-to-leaf bookkeeping."""

    def __init__(self, points: np.ndarray, threshold: int):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] not in (2, 3):
            raise ValueError("points must have shape (N, 2) or (N, 3)")
        if len(points) == 0:
            raise ValueError("cannot build a region tree over zero points")
        if threshold < 1:
            raise ValueError("threshold must be >= 1")
        order = np.lexsort(points.T[::-1])
        dup = np.nonzero((np.diff(points[order], axis=0) == 0.0).all(axis=1))[0]
        if len(dup):
            i, j = int(order[dup[0]]), int(order[dup[0] + 1])
            raise ValueError(f"duplicate vertex coordinates at indices {i} and {j}; "
                             "the split rule cannot terminate on coincident points")
        self.points = points
        self.threshold = int(threshold)
        self.dim = points.shape[1]
        # Square/cube hull: extremes over the pooled coordinates of all axes.
        self.root_low = float(points.min())
        root_high = float(points.max())
        side = root_high - self.root_low
        self.root_side = side if side > 0.0 else 1.0
        self._order = child_order(self.dim)
        self.root = RegionNode((0,) * self.dim, 1)
        self.height = 1
        self.fine_vertex_region: list[RegionNode | None] = [None] * len(points)
        self._retained: list[RegionNode] | None = None
        # plain-float coordinate lists: the insertion loop is the build's hot path
        self._xs = points[:, 0].tolist()
        self._ys = points[:, 1].tolist()
        self._zs = points[:, 2].tolist() if self.dim == 3 else None
        self._build()

    # -- dyadic lattice geometry -------------------------------------------

    def _coord(self, depth: int, index: int) -> float:
        return self.root_low + index * (self.root_side / (1 << (depth - 1)))

    def node_bounds(self, node: RegionNode) -> np.ndarray:
        """Per-axis [low, high] of a node, shape (dim, 2)."""
        out = np.empty((self.dim, 2))
        for a, m in enumerate(node.anchor):
            out[a, 0] = self._coord(node.depth, m)
            out[a, 1] = self._coord(node.depth, m + 1)
        return out

    def _contains(self, node: RegionNode, p) -> bool:
        for a, m in enumerate(node.anchor):
            if not self._coord(node.depth, m) <= p[a] <= self._coord(node.depth, m + 1):
                return False
        return True

    def _child_index(self, node: RegionNode, p) -> int:
        """Lowest-numbered child whose closed region contains p.

        Ties on the internal split planes resolve to the earlier child in
        clockwise order, which the closed-form rule below reproduces.
        """
        d1 = node.depth + 1
        mx = self._coord(d1, 2 * node.anchor[0] + 1)
        my = self._coord(d1, 2 * node.anchor[1] + 1)
        if self.dim == 2:
            if p[1] >= my:
                return 0 if p[0] <= mx else 1
            return 2 if p[0] >= mx else 3
        mz = self._coord(d1, 2 * node.anchor[2] + 1)
        base = 0 if p[2] >= mz else 4
        if p[1] >= my:
            return base + (0 if p[0] <= mx else 1)
        return base + (2 if p[0] >= mx else 3)

    # -- construction --------------------------------------------------------
    # A cell ends up split exactly when it ever holds more than ``threshold``
    # points, so inserting points one at a time (split on overflow,
    # redistribute, continue) and partitioning the full point set recursively
    # produce the identical tree; leaf lists stay in insertion order either
    # way.  The build recurses with vectorized partitioning while index sets
    # are large and falls back to the plain insertion loop below a cutoff,
    # where the subtree fits in cache.  Both paths inline the child-pick rule
    # of _child_index and must stay consistent with it.

    _BULK_CUTOFF = 256

    def _build(self) -> None:
        # Nodes hold no reference cycles, so the cyclic collector only adds
        # full-graph rescans that grow with the tree; pause it for the build.
        gc_was_enabled = gc.isenabled()
        if gc_was_enabled:
            gc.disable()
        try:
            self._build_inner()
        finally:
            if gc_was_enabled:
                gc.enable()

    def _build_inner(self) -> None:
        n = len(self.points)
        cols = [np.ascontiguousarray(self.points[:, a]) for a in range(self.dim)]
        lo = self.root_low
        side = self.root_side
        threshold = self.threshold
        three_d = self.dim == 3
        order = self._order
        stack: list[tuple[RegionNode, np.ndarray]] = [
            (self.root, np.arange(n, dtype=np.intp))]
        while stack:
            node, idx = stack.pop()
            if len(idx) <= threshold:
                node.vertex_indices = idx.tolist()
                continue
            if len(idx) <= self._BULK_CUTOFF:
                self._insert_sequential(node, idx.tolist())
                continue
            d1 = node.depth + 1
            if d1 > self.height:
                self.height = d1
            cs = side / (1 << node.depth)
            children = [RegionNode(tuple(2 * m + s for m, s in zip(node.anchor, sel)), d1)
                        for sel in order]
            node.children = children
            x = cols[0][idx]
            y = cols[1][idx]
            x_le = x <= lo + (2 * node.anchor[0] + 1) * cs
            x_ge = x >= lo + (2 * node.anchor[0] + 1) * cs
            top = y >= lo + (2 * node.anchor[1] + 1) * cs
            quads = (top & x_le, top & ~x_le, ~top & x_ge, ~top & ~x_ge)
            if three_d:
                z_hi = cols[2][idx] >= lo + (2 * node.anchor[2] + 1) * cs
                masks = [q & z_hi for q in quads] + [q & ~z_hi for q in quads]
            else:
                masks = list(quads)
            for child, mask in zip(children, masks):
                stack.append((child, idx[mask]))

    def _insert_sequential(self, subroot: RegionNode, indices: list[int]) -> None:
        xs, ys, zs = self._xs, self._ys, self._zs
        lo = self.root_low
        side = self.root_side
        threshold = self.threshold
        three_d = self.dim == 3
        pending_split: list[RegionNode] = []
        for idx in indices:
            x = xs[idx]
            y = ys[idx]
            node = subroot
            children = node.children
            while children is not None:
                cs = side / (1 << node.depth)
                anchor = node.anchor
                base = 0
                if three_d and zs[idx] < lo + (2 * anchor[2] + 1) * cs:
                    base = 4
                if y >= lo + (2 * anchor[1] + 1) * cs:
                    node = children[base] if x <= lo + (2 * anchor[0] + 1) * cs \
                        else children[base + 1]
                else:
                    node = children[base + 2] if x >= lo + (2 * anchor[0] + 1) * cs \
                        else children[base + 3]
                children = node.children
            held = node.vertex_indices
            held.append(idx)
            if len(held) > threshold:
                pending_split.append(node)
                while pending_split:
                    overfull = pending_split.pop()
                    d1 = overfull.depth + 1
                    if d1 > self.height:
                        self.height = d1
                    kids = [RegionNode(tuple(2 * m + s
                                             for m, s in zip(overfull.anchor, sel)), d1)
                            for sel in self._order]
                    overfull.children = kids
                    cs = side / (1 << overfull.depth)
                    anchor = overfull.anchor
                    mx = lo + (2 * anchor[0] + 1) * cs
                    my = lo + (2 * anchor[1] + 1) * cs
                    mz = lo + (2 * anchor[2] + 1) * cs if three_d else 0.0
                    moved, overfull.vertex_indices = overfull.vertex_indices, []
                    for m in moved:
                        base = 4 if three_d and zs[m] < mz else 0
                        if ys[m] >= my:
                            child = kids[base] if xs[m] <= mx else kids[base + 1]
                        else:
                            child = kids[base + 2] if xs[m] >= mx else kids[base + 3]
                        child.vertex_indices.append(m)
                    for child in kids:
                        if len(child.vertex_indices) > threshold:
                            pending_split.append(child)

    # -- queries --------------------------------------------------------------

    def retained_leaves(self) -> list[RegionNode]:
        """Non-empty leaves in depth-first child order (requires indexing)."""
        if self._retained is None:
            raise RuntimeError("call prune_and_index first")
        return self._retained

    def locate_leaf(self, p) -> RegionNode:
        """Deterministic leaf lookup; may return a pruned (empty) leaf."""
        p = np.asarray(p, dtype=np.float64)
        if not self._contains(self.root, p):
            raise ValueError(f"point {p.tolist()} lies outside the root region")
        node = self.root
        while node.children is not None:
            node = node.children[self._child_index(node, p)]
        return node

    def locate_cell(self, p, level_depth: int) -> RegionNode:
        """First cell of the depth-``level_depth`` truncation containing p.

        Depth-first in child order, skipping pruned (empty) subtrees, with
        backtracking: a boundary point may sit on the closure of an
        earlier-ordered subtree none of whose retained cells reach it.  For
        points of the tree itself this agrees with the recorded leaf
        assignment, since insertion always took the first containing child.
        """
        p = np.asarray(p, dtype=np.float64)
        if self._retained is None:
            raise RuntimeError("call prune_and_index first")
        if not self._contains(self.root, p):
            raise ValueError(f"point {p.tolist()} lies outside the root region")
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.children is None or node.depth == level_depth:
                return node
            for child in reversed(node.children):
                if child.subtree_count > 0 and self._contains(child, p):
                    stack.append(child)
        raise ValueError(f"point {p.tolist()} is not covered at depth {level_depth}")

    def dump(self) -> str:
        """Text serialization, depth-first in child order (for golden files)."""
        lines: list[str] = []

        def visit(node: RegionNode):
            b = self.node_bounds(node)
            span = " x ".join(f"[{lo:.12g},{hi:.12g}]" for lo, hi in b)
            kind = "leaf" if node.is_leaf else "node"
            pts = ""
            if node.is_leaf:
                pts = " points=" + ",".join(str(i) for i in node.vertex_indices)
            lines.append(f"{'  ' * (node.depth - 1)}{kind} depth={node.depth} {span}{pts}")
            for child in node.children or ():
                visit(child)

        visit(self.root)
        return "\n".join(lines) + "\n"


def build_tree(points, threshold: int = 4) -> RegionTree:
    """Region tree over the points: a cell splits as soon as it overflows.

    Equivalent to inserting the points one at a time (split on overflow,
    redistribute the cell's points, continue); the final tree depends only on
    the point set and the threshold, not on insertion order.  Duplicate
    coordinates are rejected: the split rule could never separate them.
    """
    return RegionTree(points, threshold)


def prune_and_index(tree: RegionTree) -> RegionTree:
    """Count subtree occupancy, index point -> leaf, drop empty leaves.

    Empty leaves stay in the structure but are excluded from level
    enumerations and lookups.  Idempotent.
    """
    retained: list[RegionNode] = []

    def visit(node: RegionNode) -> int:
        if node.children is None:
            node.subtree_count = len(node.vertex_indices)
            if node.subtree_count:
                retained.append(node)
                for idx in node.vertex_indices:
                    tree.fine_vertex_region[idx] = node
            return node.subtree_count
        node.subtree_count = sum(visit(c) for c in node.children)
        return node.subtree_count

    visit(tree.root)
    tree._retained = retained
    return tree


def locate(tree: RegionTree, p) -> RegionNode:
    """Leaf containing p, with the clockwise closed-region tie-break."""
    return tree.locate_leaf(p)


@dataclass
class CoarseLevel:
    """One auxiliary grid: the tree truncated at ``level_depth``.

    Cells are the retained leaves above the cut plus every internal node at
    the cut depth (deeper subtrees merge into their ancestor).  Each cell
    contributes its 2^d corners; corners are deduplicated on exact integer
    lattice keys at the level's resolution, numbered in depth-first cell
    order with corners emitted clockwise, first occurrence winning.
    """

    tree: RegionTree
    level_depth: int
    cells: list[RegionNode]
    cell_corner_ids: list[tuple[int, ...]]
    coarse_vertices: np.ndarray
    vertex_keys: list[tuple[int, ...]]

    def __post_init__(self):
        self._cell_pos = {id(c): k for k, c in enumerate(self.cells)}

    @property
    def count(self) -> int:
        return len(self.coarse_vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_bounds(self, k: int) -> np.ndarray:
        return self.tree.node_bounds(self.cells[k])

    def cell_index(self, node: RegionNode) -> int:
        try:
            return self._cell_pos[id(node)]
        except KeyError:
            raise ValueError("node is not a cell of this level") from None


def coarse_level(tree: RegionTree, level_depth: int) -> CoarseLevel:
    """Extract the auxiliary grid at ``level_depth`` (1 = root cell only)."""
    if not 1 <= level_depth <= tree.height:
        raise ValueError(f"level depth {level_depth} outside 1..{tree.height}")
    if tree._retained is None:
        prune_and_index(tree)

    cells: list[RegionNode] = []

    def visit(node: RegionNode):
        if node.children is None:
            if node.subtree_count > 0:
                cells.append(node)
            return
        if node.depth == level_depth:
            cells.append(node)
            return
        for child in node.children:
            visit(child)

    visit(tree.root)

    order = child_order(tree.dim)
    key_to_id: dict[tuple[int, ...], int] = {}
    coords: list[tuple[float, ...]] = []
    corner_ids: list[tuple[int, ...]] = []
    for cell in cells:
        shift = level_depth - cell.depth
        ids = []
        for sel in order:
            key = tuple((m + s) << shift for m, s in zip(cell.anchor, sel))
            vid = key_to_id.get(key)
            if vid is None:
                vid = len(coords)
                key_to_id[key] = vid
                coords.append(tuple(tree._coord(level_depth, k) for k in key))
            ids.append(vid)
        corner_ids.append(tuple(ids))

    return CoarseLevel(tree=tree, level_depth=level_depth, cells=cells,
                       cell_corner_ids=corner_ids,
                       coarse_vertices=np.asarray(coords, dtype=np.float64),
                       vertex_keys=list(key_to_id))


@dataclass(frozen=True)
class TreeStats:
    """Depth diagnostics against the q log2 N + 3/2 bound."""

    height: int
    leaf_count: int
    max_leaf_occupancy: int
    depth_bound: float
    within_bound: bool


def tree_stats(tree: RegionTree, ms: MeshStats) -> TreeStats:
    if tree._retained is None:
        prune_and_index(tree)
    leaves = tree.retained_leaves()
    n = len(tree.points)
    bound = ms.q_exponent * math.log2(n) + 1.5 if n > 1 else 1.5
    return TreeStats(
        height=tree.height,
        leaf_count=len(leaves),
        max_leaf_occupancy=max(len(l.vertex_indices) for l in leaves),
        depth_bound=bound,
        within_bound=tree.height <= math.ceil(bound) + 1,
    )
