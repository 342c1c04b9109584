"""Path combinatorics on birth-time-marked graphs.

A marked path carries pairwise-distinct birth times.  Its skeleton is the
subsequence of running-minimum vertices scanned from both ends; equivalently,
what survives repeated deletion of the youngest local maximum.  Paths whose
skeleton consists of the two endpoints alone are in bijection with binary
trees on the interior vertices in which every child is younger than its
parent; stripping the labels leaves one of Catalan-many tree shapes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .sampling import MarkedGraph


@dataclass(frozen=True)
class MarkedPath:
    """Ordered (vertex_id, mark) pairs; self-avoiding, marks distinct."""

    entries: tuple

    def __init__(self, entries):
        ent = tuple((int(v), float(t)) for v, t in entries)
        if not ent:
            raise ValueError("path must contain at least one vertex")
        ids = [v for v, _ in ent]
        marks = [t for _, t in ent]
        if len(set(ids)) != len(ids):
            raise ValueError("path must be self-avoiding (distinct vertex ids)")
        if len(set(marks)) != len(marks):
            raise ValueError("marks must be pairwise distinct")
        if min(marks) <= 0.0 or max(marks) > 1.0:
            raise ValueError("marks must lie in (0, 1]")
        object.__setattr__(self, "entries", ent)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.entries)

    @property
    def marks(self) -> tuple[float, ...]:
        return tuple(t for _, t in self.entries)

    def reversed(self) -> "MarkedPath":
        return MarkedPath(tuple(reversed(self.entries)))


@dataclass(frozen=True)
class Skeleton:
    """Indices i_0 < ... < i_m into a path, with the marks at those indices.

    Marks strictly decrease up to position k (the path's oldest vertex) and
    strictly increase afterwards; m is the skeleton length.
    """

    indices: tuple[int, ...]
    marks: tuple[float, ...]

    def __post_init__(self):
        idx, mk = self.indices, self.marks
        if len(idx) != len(mk) or not idx:
            raise ValueError("indices and marks must be nonempty and aligned")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("skeleton indices must be strictly increasing")
        k = mk.index(min(mk))
        for a, b in zip(mk[:k], mk[1:k + 1]):
            if not a > b:
                raise ValueError("marks must strictly decrease before the minimum")
        for a, b in zip(mk[k:], mk[k + 1:]):
            if not a < b:
                raise ValueError("marks must strictly increase after the minimum")

    @property
    def m(self) -> int:
        return len(self.indices) - 1

    @property
    def k(self) -> int:
        return self.marks.index(min(self.marks))

    @property
    def oldest_mark(self) -> float:
        return min(self.marks)


def skeleton_scan(path: MarkedPath) -> Skeleton:
    """Two-sided running-minimum scan.

    Forward from the start: repeatedly jump to the first vertex younger than
    the current one, until the path's oldest vertex is reached; likewise
    backward from the end.  The skeleton is the union of the two scans.
    """
    marks = path.marks
    n = len(marks) - 1
    kmin = marks.index(min(marks))
    chosen = {0, n, kmin}
    cur = 0
    while cur != kmin:
        nxt = next(i for i in range(cur + 1, kmin + 1) if marks[i] < marks[cur])
        chosen.add(nxt)
        cur = nxt
    cur = n
    while cur != kmin:
        nxt = next(i for i in range(cur - 1, kmin - 1, -1) if marks[i] < marks[cur])
        chosen.add(nxt)
        cur = nxt
    idx = tuple(sorted(chosen))
    return Skeleton(indices=idx, marks=tuple(marks[i] for i in idx))


def skeleton_local_maxima(path: MarkedPath) -> Skeleton:
    """Alternative construction: repeatedly delete the currently youngest
    interior local maximum (reconnecting its neighbours) until none remain."""
    marks = list(path.marks)
    idx = list(range(len(marks)))
    while True:
        maxima = [p for p in range(1, len(idx) - 1)
                  if marks[p] > marks[p - 1] and marks[p] > marks[p + 1]]
        if not maxima:
            break
        victim = max(maxima, key=lambda p: marks[p])
        del marks[victim]
        del idx[victim]
    return Skeleton(indices=tuple(idx), marks=tuple(marks))


def classify_regularity(skeleton: Skeleton) -> str:
    """'regular' iff the skeleton's oldest mark exceeds 2^-m (strict).

    For m = 0 the threshold is 1, so a single-vertex path is always irregular
    under the strict reading.
    """
    return "regular" if skeleton.oldest_mark > 2.0 ** (-skeleton.m) else "irregular"


# ---------------------------------------------------------------------------
# Shortcuts
# ---------------------------------------------------------------------------


def _check_path_in_graph(path: MarkedPath, graph: MarkedGraph) -> set[tuple[int, int]]:
    edge_set = graph.edge_set()
    ids = path.ids
    for v in ids:
        if not 0 <= v < graph.n_vertices:
            raise ValueError(f"path vertex {v} not in graph")
    for a, b in zip(ids, ids[1:]):
        if (min(a, b), max(a, b)) not in edge_set:
            raise ValueError(f"path edge {{{a}, {b}}} missing from graph")
    return edge_set


def find_shortcut(path: MarkedPath, graph: MarkedGraph):
    """First pair (i, j) with j > i+1 and an edge between path[i] and path[j],
    scanning i then j in increasing order; None if the path is shortcut-free."""
    edge_set = _check_path_in_graph(path, graph)
    ids = path.ids
    for i in range(len(ids) - 2):
        for j in range(i + 2, len(ids)):
            a, b = ids[i], ids[j]
            if (min(a, b), max(a, b)) in edge_set:
                return (i, j)
    return None


def shortcut_free_reduction(path: MarkedPath, graph: MarkedGraph) -> MarkedPath:
    """Jump repeatedly to the furthest along-path neighbour of the current
    vertex.  The surviving subsequence is shortcut-free, keeps the original
    endpoints, and uses only edges of the graph."""
    edge_set = _check_path_in_graph(path, graph)
    ids = path.ids
    n = len(ids) - 1
    keep = [0]
    cur = 0
    while cur < n:
        nxt = max(i for i in range(cur + 1, n + 1)
                  if (min(ids[cur], ids[i]), max(ids[cur], ids[i])) in edge_set)
        keep.append(nxt)
        cur = nxt
    return MarkedPath(tuple(path.entries[i] for i in keep))


# ---------------------------------------------------------------------------
# Path <-> binary tree bijection
# ---------------------------------------------------------------------------


@dataclass
class TreeNode:
    """Binary tree node labelled by (vertex_id, mark); children are younger."""

    vertex_id: int
    mark: float
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def validate(self) -> None:
        for child in (self.left, self.right):
            if child is not None:
                if not child.mark > self.mark:
                    raise ValueError("every child must be younger than its parent")
                child.validate()

    def nodes(self) -> list["TreeNode"]:
        out = [self]
        if self.left is not None:
            out.extend(self.left.nodes())
        if self.right is not None:
            out.extend(self.right.nodes())
        return out

    def shape(self):
        """Unlabeled structure as nested tuples (None for absent children)."""
        return (
            self.left.shape() if self.left is not None else None,
            self.right.shape() if self.right is not None else None,
        )

    def equals(self, other: "TreeNode | None") -> bool:
        if other is None:
            return False
        if (self.vertex_id, self.mark) != (other.vertex_id, other.mark):
            return False
        for a, b in ((self.left, other.left), (self.right, other.right)):
            if (a is None) != (b is None):
                return False
            if a is not None and not a.equals(b):
                return False
        return True


def path_to_tree(path: MarkedPath) -> TreeNode | None:
    """Encode a two-vertex-skeleton path as a binary tree on its interior.

    The path must start at the younger of its two endpoints (which are its two
    oldest vertices).  The oldest interior vertex is the root; each later one
    descends from the root, branching left where the path visits it before the
    current node and right where it visits it after.  Empty interior gives
    None (the empty tree).
    """
    skel = skeleton_scan(path)
    if len(skel.indices) != 2:
        raise ValueError("path must reduce to a two-vertex skeleton")
    marks = path.marks
    if not marks[0] > marks[-1]:
        raise ValueError("path must start at the younger endpoint")
    interior = list(range(1, len(path) - 1))
    if not interior:
        return None
    by_age = sorted(interior, key=lambda i: marks[i])
    root = TreeNode(vertex_id=path.ids[by_age[0]], mark=marks[by_age[0]])
    pos_of = {path.ids[i]: i for i in range(len(path))}
    for i in by_age[1:]:
        node = root
        while True:
            goes_left = i < pos_of[node.vertex_id]
            child = node.left if goes_left else node.right
            if child is None:
                new = TreeNode(vertex_id=path.ids[i], mark=marks[i])
                if goes_left:
                    node.left = new
                else:
                    node.right = new
                break
            node = child
    return root


def tree_to_path(tree: TreeNode | None, endpoints) -> MarkedPath:
    """Rebuild the path from a tree by depth-first insertion of local maxima.

    ``endpoints`` is ((id_x, mark_x), (id_y, mark_y)); the path runs from x to
    y, both older than every tree node and x younger than y.
    """
    (xid, xmark), (yid, ymark) = endpoints
    if not xmark > ymark:
        raise ValueError("start endpoint must be younger than the end endpoint")
    path = [(int(xid), float(xmark)), (int(yid), float(ymark))]
    if tree is None:
        return MarkedPath(path)
    tree.validate()
    node_marks = [n.mark for n in tree.nodes()]
    if min(node_marks) <= max(xmark, ymark):
        raise ValueError("endpoints must be older than every tree node")
    parent: dict[int, TreeNode] = {}
    is_left: dict[int, bool] = {}
    for n in tree.nodes():
        for child, left in ((n.left, True), (n.right, False)):
            if child is not None:
                parent[child.vertex_id] = n
                is_left[child.vertex_id] = left
    # step one: the root becomes a local maximum between the endpoints
    path.insert(1, (tree.vertex_id, tree.mark))
    agenda = []
    for child in (tree.left, tree.right):
        if child is not None:
            agenda.append(child)
    # step two: depth-first exploration; a left child is inserted immediately
    # before its parent, a right child immediately after
    while agenda:
        v = agenda.pop(0)
        children = [c for c in (v.left, v.right) if c is not None]
        agenda = children + agenda
        w = parent[v.vertex_id]
        wpos = next(i for i, (vid, _) in enumerate(path) if vid == w.vertex_id)
        if is_left[v.vertex_id]:
            path.insert(wpos, (v.vertex_id, v.mark))
        else:
            path.insert(wpos + 1, (v.vertex_id, v.mark))
    return MarkedPath(path)


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def count_two_skeleton_paths(k_connectors: int) -> int:
    """Number of distinct unlabeled tree shapes over all orderings of a fixed
    age-ordered connector set between two older endpoints.

    Every ordering of the k connectors keeps the two endpoints as the full
    skeleton; encoding each ordering as a tree and stripping labels yields
    exactly the binary tree shapes on k nodes, of which there are
    (2k)! / (k! (k+1)!).
    """
    if k_connectors < 0:
        raise ValueError("connector count must be non-negative")
    if k_connectors == 0:
        return 1
    xmark, ymark = 0.10, 0.05
    connectors = [(2 + i, 0.5 + (i + 1) / (k_connectors + 1) * 0.4)
                  for i in range(k_connectors)]
    shapes = set()
    for perm in itertools.permutations(connectors):
        path = MarkedPath(((0, xmark),) + perm + ((1, ymark),))
        if len(skeleton_scan(path).indices) != 2:
            continue
        tree = path_to_tree(path)
        shapes.add(tree.shape() if tree is not None else None)
    return len(shapes)


# ---------------------------------------------------------------------------
# Step-by-step traces (line-oriented, for the CLI trace command)
# ---------------------------------------------------------------------------


def trace_local_maxima(path: MarkedPath) -> list[str]:
    """Lines describing each deletion of the youngest local maximum."""

    def fmt(idx, marks):
        return " ".join(f"{i}:{m:g}" for i, m in zip(idx, marks))

    marks = list(path.marks)
    idx = list(path.ids)
    lines = [f"path  {fmt(idx, marks)}"]
    step = 1
    while True:
        maxima = [p for p in range(1, len(idx) - 1)
                  if marks[p] > marks[p - 1] and marks[p] > marks[p + 1]]
        if not maxima:
            break
        victim = max(maxima, key=lambda p: marks[p])
        lines.append(
            f"step {step}: remove local maximum vertex {idx[victim]} "
            f"(mark {marks[victim]:g}); reconnect {idx[victim - 1]} -- {idx[victim + 1]}")
        del marks[victim]
        del idx[victim]
        step += 1
    lines.append(f"skeleton  {fmt(idx, marks)}")
    return lines


def trace_tree_construction(path: MarkedPath) -> list[str]:
    """Lines describing the branch taken for each interior vertex insertion."""
    skel = skeleton_scan(path)
    if len(skel.indices) != 2:
        return ["tree construction requires a two-vertex skeleton "
                f"(this path has {len(skel.indices)} skeleton vertices)"]
    work = path if path.marks[0] > path.marks[-1] else path.reversed()
    marks = work.marks
    interior = sorted(range(1, len(work) - 1), key=lambda i: marks[i])
    if not interior:
        return ["empty interior: the path is the edge between its endpoints"]
    lines = [f"root: vertex {work.ids[interior[0]]} (mark {marks[interior[0]]:g})"]
    root = TreeNode(vertex_id=work.ids[interior[0]], mark=marks[interior[0]])
    pos_of = {work.ids[i]: i for i in range(len(work))}
    for i in interior[1:]:
        node = root
        moves = []
        while True:
            goes_left = i < pos_of[node.vertex_id]
            moves.append(f"{'left' if goes_left else 'right'} at {node.vertex_id}")
            child = node.left if goes_left else node.right
            if child is None:
                new = TreeNode(vertex_id=work.ids[i], mark=marks[i])
                if goes_left:
                    node.left = new
                else:
                    node.right = new
                side = "left" if goes_left else "right"
                lines.append(
                    f"vertex {work.ids[i]} (mark {marks[i]:g}): "
                    + ", ".join(moves) + f" -> {side} child of {node.vertex_id}")
                break
            node = child
    return lines
