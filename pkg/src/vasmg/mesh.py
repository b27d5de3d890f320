"""Simplex meshes: ingestion, parametric generators and vertex statistics.

Two text formats are supported, a Triangle-style ``.node``/``.ele`` pair and a
small Gmsh v2 ASCII subset.  The built-in generators produce deterministic
unstructured-flavoured meshes for the benchmark geometries (plates with round
or square holes, a quarter ring, a dam cross-section, a tetrahedral box), with
named boundary tags so load and constraint specifications can refer to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree


class MeshFormatError(ValueError):
    """Unparsable mesh file; the message carries the file and line number."""


GENERATOR_KINDS = ("hole-plate", "ring-quadrant", "square-hole-plate",
                   "dam-trapezoid", "box-3d")

# Exact all-pairs distance extremes are used up to this vertex count; above it
# d_min comes from a k-d tree nearest-neighbour query and d_max from convex
# hull vertex pairs.  Both are still exact and deterministic.
_ALL_PAIRS_LIMIT = 4096


@dataclass
class Mesh:
    """Vertices, simplex connectivity and named boundary tags.

    Elements are triangles in 2D and tetrahedra in 3D.  Construction
    normalizes element orientation (signed measure strictly positive) and
    validates index ranges; a zero-measure element is rejected.
    """

    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    boundary_tags: dict[int, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        n = len(self.vertices)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != self.dim:
            raise ValueError(f"vertices must have shape (N, {self.dim})")
        if n < self.dim + 1:
            raise ValueError(f"a {self.dim}D mesh needs at least {self.dim + 1} vertices")
        if not np.isfinite(self.vertices).all():
            raise ValueError("vertex coordinates must be finite")
        if self.elements.ndim != 2 or self.elements.shape[1] != self.dim + 1:
            raise ValueError(f"elements must have shape (M, {self.dim + 1})")
        if len(self.elements):
            if self.elements.min() < 0 or self.elements.max() >= n:
                raise ValueError("element vertex index out of range")
            for k in range(self.dim + 1):
                for l in range(k + 1, self.dim + 1):
                    if np.any(self.elements[:, k] == self.elements[:, l]):
                        bad = int(np.nonzero(self.elements[:, k] == self.elements[:, l])[0][0])
                        raise ValueError(f"element {bad} repeats a vertex")
        measures = signed_measures(self.vertices, self.elements, self.dim)
        flipped = measures < 0.0
        if flipped.any():
            cols = self.elements[flipped][:, [self.dim, self.dim - 1]]
            self.elements[np.nonzero(flipped)[0][:, None],
                          [self.dim - 1, self.dim]] = cols
            measures = np.abs(measures)
        if len(measures) and measures.min() == 0.0:
            bad = int(np.argmin(measures))
            raise ValueError(f"element {bad} is degenerate (zero measure)")
        self.boundary_tags = {int(i): frozenset(t)
                              for i, t in self.boundary_tags.items() if t}
        for i in self.boundary_tags:
            if not 0 <= i < n:
                raise ValueError(f"boundary tag on unknown vertex {i}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def tagged(self, tag: str) -> np.ndarray:
        """Sorted indices of vertices carrying ``tag``."""
        return np.array(sorted(i for i, t in self.boundary_tags.items() if tag in t),
                        dtype=np.int64)

    def tags(self) -> set[str]:
        out: set[str] = set()
        for t in self.boundary_tags.values():
            out |= t
        return out

    def boundary_facets(self) -> np.ndarray:
        """Facets (edges in 2D, triangles in 3D) owned by exactly one element."""
        d = self.dim
        facets = []
        for drop in range(d + 1):
            keep = [k for k in range(d + 1) if k != drop]
            facets.append(self.elements[:, keep])
        all_facets = np.vstack(facets)
        key = np.sort(all_facets, axis=1)
        _, first, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
        return all_facets[np.sort(first[counts == 1])]


def signed_measures(vertices, elements, dim) -> np.ndarray:
    """Signed area (2D) or volume (3D) of every simplex."""
    p = vertices[elements]
    if dim == 2:
        a = p[:, 1] - p[:, 0]
        b = p[:, 2] - p[:, 0]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    a = p[:, 1] - p[:, 0]
    b = p[:, 2] - p[:, 0]
    c = p[:, 3] - p[:, 0]
    return np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0


# -- vertex statistics ---------------------------------------------------------

@dataclass(frozen=True)
class MeshStats:
    """Extreme pairwise vertex distances and the induced spread exponent.

    ``q_exponent`` solves d_max/d_min = N**q, i.e. q = log(d_max/d_min)/log(N);
    it feeds the depth diagnostic of the region tree.
    """

    d_min: float
    d_max: float
    q_exponent: float


def point_stats(points) -> MeshStats:
    """Exact d_min/d_max over a bare point cloud.

    All-pairs below ``_ALL_PAIRS_LIMIT`` points; above, d_min via nearest
    neighbours and d_max via convex hull vertex pairs (falling back to chunked
    all-pairs for degenerate hulls).  Deterministic either way.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n < 2:
        raise ValueError("need at least two points")
    if n <= _ALL_PAIRS_LIMIT:
        diffs = points[:, None, :] - points[None, :, :]
        dist = np.sqrt((diffs ** 2).sum(axis=2))
        iu = np.triu_indices(n, 1)
        pair = dist[iu]
        d_min, d_max = float(pair.min()), float(pair.max())
    else:
        nn, _ = cKDTree(points).query(points, k=2)
        d_min = float(nn[:, 1].min())
        try:
            hull_pts = points[ConvexHull(points).vertices]
            diffs = hull_pts[:, None, :] - hull_pts[None, :, :]
            d_max = float(np.sqrt((diffs ** 2).sum(axis=2)).max())
        except QhullError:
            d_max = 0.0
            for lo in range(0, n, 1024):
                chunk = points[lo:lo + 1024]
                diffs = chunk[:, None, :] - points[None, :, :]
                d_max = max(d_max, float(np.sqrt((diffs ** 2).sum(axis=2)).max()))
    if d_min == 0.0:
        raise ValueError("duplicate points: d_min is zero")
    q = math.log(d_max / d_min) / math.log(n) if n > 1 else 0.0
    return MeshStats(d_min=d_min, d_max=d_max, q_exponent=q)


def mesh_stats(m: Mesh) -> MeshStats:
    return point_stats(m.vertices)


# -- .node/.ele format ---------------------------------------------------------

def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _tagmap_comments(path) -> dict[int, frozenset[str]]:
    out: dict[int, frozenset[str]] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("# tag "):
                parts = line[6:].split(None, 1)
                if len(parts) == 2:
                    out[int(parts[0])] = frozenset(parts[1].split(","))
    return out


def _read_node_ele(node_path) -> Mesh:
    node_path = str(node_path)
    if node_path.endswith(".node"):
        base = node_path[:-5]
    else:
        base = node_path
        node_path = base + ".node"
    ele_path = base + ".ele"

    tagmap = _tagmap_comments(node_path)
    lines = _data_lines(node_path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshFormatError(f"{node_path}: empty file") from None
    try:
        n, dim, _nattr, nmark = (int(t) for t in header.split())
    except ValueError:
        raise MeshFormatError(f"{node_path}:{lineno}: bad node header {header!r}") from None
    verts = np.empty((n, dim))
    tags: dict[int, frozenset[str]] = {}
    for k in range(n):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise MeshFormatError(f"{node_path}: expected {n} vertex lines") from None
        tok = line.split()
        try:
            idx = int(tok[0]) - 1
            verts[idx] = [float(t) for t in tok[1:1 + dim]]
            if nmark and len(tok) > 1 + dim:
                marker = int(tok[1 + dim])
                if marker:
                    tags[idx] = tagmap.get(marker, frozenset({str(marker)}))
        except (ValueError, IndexError):
            raise MeshFormatError(f"{node_path}:{lineno}: bad vertex line {line!r}") from None
        if not 0 <= idx < n:
            raise MeshFormatError(f"{node_path}:{lineno}: vertex index out of range")

    lines = _data_lines(ele_path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshFormatError(f"{ele_path}: empty file") from None
    try:
        m, per_el, _nattr = (int(t) for t in header.split())
    except ValueError:
        raise MeshFormatError(f"{ele_path}:{lineno}: bad element header {header!r}") from None
    if per_el != dim + 1:
        raise MeshFormatError(f"{ele_path}:{lineno}: expected {dim + 1} vertices "
                              f"per element, got {per_el}")
    elems = np.empty((m, per_el), dtype=np.int64)
    for k in range(m):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise MeshFormatError(f"{ele_path}: expected {m} element lines") from None
        tok = line.split()
        try:
            elems[int(tok[0]) - 1] = [int(t) - 1 for t in tok[1:1 + per_el]]
        except (ValueError, IndexError):
            raise MeshFormatError(f"{ele_path}:{lineno}: bad element line {line!r}") from None
    try:
        return Mesh(dim=dim, vertices=verts, elements=elems, boundary_tags=tags)
    except ValueError as exc:
        raise MeshFormatError(f"{node_path}: {exc}") from exc


def _write_node_ele(node_path, mesh: Mesh) -> None:
    node_path = str(node_path)
    base = node_path[:-5] if node_path.endswith(".node") else node_path
    tag_sets = sorted({tuple(sorted(t)) for t in mesh.boundary_tags.values()})
    marker_of = {ts: k + 1 for k, ts in enumerate(tag_sets)}
    with open(base + ".node", "w") as fh:
        for ts, k in marker_of.items():
            fh.write(f"# tag {k} {','.join(ts)}\n")
        fh.write(f"{mesh.n_vertices} {mesh.dim} 0 1\n")
        for i, p in enumerate(mesh.vertices):
            coords = " ".join(f"{c:.17g}" for c in p)
            marker = marker_of.get(tuple(sorted(mesh.boundary_tags.get(i, ()))), 0)
            fh.write(f"{i + 1} {coords} {marker}\n")
    with open(base + ".ele", "w") as fh:
        fh.write(f"{len(mesh.elements)} {mesh.dim + 1} 0\n")
        for i, el in enumerate(mesh.elements):
            fh.write(f"{i + 1} " + " ".join(str(v + 1) for v in el) + "\n")


# -- Gmsh v2 ASCII subset --------------------------------------------------------

_GMSH_NODES_PER_TYPE = {1: 2, 2: 3, 4: 4, 15: 1}


def _read_gmsh(path) -> Mesh:
    path = str(path)
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("$End"):
                current = None
            elif line.startswith("$"):
                current = line[1:]
                sections[current] = []
            elif current is not None:
                sections[current].append((lineno, line))

    if "Nodes" not in sections or "Elements" not in sections:
        raise MeshFormatError(f"{path}: missing $Nodes or $Elements section")

    phys_names: dict[int, str] = {}
    for lineno, line in sections.get("PhysicalNames", [])[1:]:
        tok = line.split(None, 2)
        try:
            phys_names[int(tok[1])] = tok[2].strip('"')
        except (ValueError, IndexError):
            raise MeshFormatError(f"{path}:{lineno}: bad physical name {line!r}") from None

    node_lines = sections["Nodes"]
    try:
        n = int(node_lines[0][1])
    except ValueError:
        raise MeshFormatError(f"{path}:{node_lines[0][0]}: bad node count") from None
    coords = np.empty((n, 3))
    id_map: dict[int, int] = {}
    for k, (lineno, line) in enumerate(node_lines[1:1 + n]):
        tok = line.split()
        try:
            id_map[int(tok[0])] = k
            coords[k] = [float(t) for t in tok[1:4]]
        except (ValueError, IndexError):
            raise MeshFormatError(f"{path}:{lineno}: bad node line {line!r}") from None
    if len(id_map) != n:
        raise MeshFormatError(f"{path}: expected {n} node lines")

    elem_lines = sections["Elements"]
    parsed = []
    types_seen = set()
    for lineno, line in elem_lines[1:]:
        tok = line.split()
        try:
            etype = int(tok[1])
            ntags = int(tok[2])
            ids = [id_map[int(t)] for t in tok[3 + ntags:]]
            phys = int(tok[3]) if ntags >= 1 else 0
        except (ValueError, IndexError, KeyError):
            raise MeshFormatError(f"{path}:{lineno}: bad element line {line!r}") from None
        if etype not in _GMSH_NODES_PER_TYPE:
            raise MeshFormatError(f"{path}:{lineno}: unsupported element type {etype}")
        if len(ids) != _GMSH_NODES_PER_TYPE[etype]:
            raise MeshFormatError(f"{path}:{lineno}: wrong node count for type {etype}")
        types_seen.add(etype)
        parsed.append((etype, phys, ids))

    # Tetrahedra anywhere in the file make it a 3D mesh; triangles are then
    # boundary facets rather than simplices.
    dim = 3 if 4 in types_seen else 2
    simplex_type = 4 if dim == 3 else 2
    facet_type = 2 if dim == 3 else 1

    simplices: list[list[int]] = []
    tags: dict[int, set[str]] = {}
    for etype, phys, ids in parsed:
        if etype == simplex_type:
            simplices.append(ids)
        elif etype == facet_type and phys:
            name = phys_names.get(phys, str(phys))
            for i in ids:
                tags.setdefault(i, set()).add(name)
    if not simplices:
        raise MeshFormatError(f"{path}: no simplex elements found")
    try:
        return Mesh(dim=dim, vertices=coords[:, :dim],
                    elements=np.asarray(simplices, dtype=np.int64),
                    boundary_tags={i: frozenset(t) for i, t in tags.items()})
    except ValueError as exc:
        raise MeshFormatError(f"{path}: {exc}") from exc


def _write_gmsh(path, mesh: Mesh) -> None:
    names = sorted(mesh.tags())
    phys_of = {name: k + 1 for k, name in enumerate(names)}
    facet_dim = mesh.dim - 1
    facet_type = 1 if mesh.dim == 2 else 2
    elem_type = 2 if mesh.dim == 2 else 4

    tagged_facets = []
    for f in mesh.boundary_facets():
        common = None
        for v in f:
            t = mesh.boundary_tags.get(int(v), frozenset())
            common = t if common is None else (common & t)
        for name in sorted(common or ()):
            tagged_facets.append((f, name))

    with open(path, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        if names:
            fh.write(f"$PhysicalNames\n{len(names)}\n")
            for name in names:
                fh.write(f'{facet_dim} {phys_of[name]} "{name}"\n')
            fh.write("$EndPhysicalNames\n")
        fh.write(f"$Nodes\n{mesh.n_vertices}\n")
        for i, p in enumerate(mesh.vertices):
            xyz = list(p) + [0.0] * (3 - mesh.dim)
            fh.write(f"{i + 1} " + " ".join(f"{c:.17g}" for c in xyz) + "\n")
        fh.write("$EndNodes\n")
        fh.write(f"$Elements\n{len(tagged_facets) + len(mesh.elements)}\n")
        eid = 1
        for f, name in tagged_facets:
            nodes = " ".join(str(v + 1) for v in f)
            fh.write(f"{eid} {facet_type} 2 {phys_of[name]} {phys_of[name]} {nodes}\n")
            eid += 1
        for el in mesh.elements:
            nodes = " ".join(str(v + 1) for v in el)
            fh.write(f"{eid} {elem_type} 2 0 0 {nodes}\n")
            eid += 1
        fh.write("$EndElements\n")


def read_mesh(path, fmt: str | None = None) -> Mesh:
    """Read a mesh; ``fmt`` is ``node-ele`` or ``gmsh-v2-subset`` (inferred
    from the suffix when omitted)."""
    path = str(path)
    if fmt is None:
        if path.endswith((".node", ".ele")):
            fmt = "node-ele"
        elif path.endswith(".msh"):
            fmt = "gmsh-v2-subset"
        else:
            raise ValueError(f"cannot infer mesh format from {path!r}; pass fmt")
    if fmt == "node-ele":
        return _read_node_ele(path)
    if fmt == "gmsh-v2-subset":
        return _read_gmsh(path)
    raise ValueError(f"unknown mesh format {fmt!r}")


def write_mesh(path, mesh: Mesh, fmt: str | None = None) -> None:
    path = str(path)
    if fmt is None:
        fmt = "gmsh-v2-subset" if path.endswith(".msh") else "node-ele"
    if fmt == "node-ele":
        _write_node_ele(path, mesh)
    elif fmt == "gmsh-v2-subset":
        _write_gmsh(path, mesh)
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")


# -- parametric generators -------------------------------------------------------

def _structured_triangles(ns: int, nt: int) -> np.ndarray:
    """Triangulate an (ns+1) x (nt+1) logical grid with alternating diagonals."""
    def vid(i_s, i_t):
        return i_t * (ns + 1) + i_s

    tris = []
    for it in range(nt):
        for i in range(ns):
            a, b = vid(i, it), vid(i + 1, it)
            c, d = vid(i + 1, it + 1), vid(i, it + 1)
            if (i + it) % 2 == 0:
                tris.append((a, b, c))
                tris.append((a, c, d))
            else:
                tris.append((a, b, d))
                tris.append((b, c, d))
    return np.asarray(tris, dtype=np.int64)


def _blend_mesh(inner, outer, ns, nt, side_tags) -> Mesh:
    """Transfinite blend between two boundary curves sampled at nt+1 stations.

    ``inner``/``outer`` map t in [0,1] to a point; s in [0,1] interpolates
    between them.  ``side_tags`` is (s0, s1, t0, t1) where each entry is a tag
    name or a callable t -> tag used along the s=1 edge.
    """
    verts = np.empty(((ns + 1) * (nt + 1), 2))
    for it in range(nt + 1):
        t = it / nt
        p0 = np.asarray(inner(t))
        p1 = np.asarray(outer(t))
        for i in range(ns + 1):
            s = i / ns
            verts[it * (ns + 1) + i] = (1.0 - s) * p0 + s * p1
    tags: dict[int, set[str]] = {}

    def add(i, name):
        tags.setdefault(i, set()).add(name)

    s0, s1, t0, t1 = side_tags
    for it in range(nt + 1):
        t = it / nt
        add(it * (ns + 1), s0 if isinstance(s0, str) else s0(t))
        add(it * (ns + 1) + ns, s1 if isinstance(s1, str) else s1(t))
    for i in range(ns + 1):
        add(i, t0)
        add(nt * (ns + 1) + i, t1)
    return Mesh(dim=2, vertices=verts, elements=_structured_triangles(ns, nt),
                boundary_tags={i: frozenset(t) for i, t in tags.items()})


def _two_segment_path(p0, p1, p2):
    """Piecewise-linear path p0 -> p1 -> p2, parameterized on [0, 1]."""
    p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))

    def path(t):
        if t <= 0.5:
            return p0 + (2.0 * t) * (p1 - p0)
        return p1 + (2.0 * t - 1.0) * (p2 - p1)

    return path


def _gen_hole_plate(refinement: int) -> Mesh:
    ns = 24 * (1 << refinement)
    nt = 48 * (1 << refinement)

    def inner(t):
        a = 0.5 * math.pi * t
        return (math.cos(a), math.sin(a))

    outer = _two_segment_path((10.0, 0.0), (10.0, 10.0), (0.0, 10.0))
    return _blend_mesh(inner, outer, ns, nt,
                       ("inner", lambda t: "right" if t <= 0.5 else "top",
                        "bottom", "left"))


def _gen_square_hole_plate(refinement: int) -> Mesh:
    ns = 24 * (1 << refinement)
    nt = 48 * (1 << refinement)
    inner = _two_segment_path((1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    outer = _two_segment_path((10.0, 0.0), (10.0, 10.0), (0.0, 10.0))
    return _blend_mesh(inner, outer, ns, nt,
                       ("inner", lambda t: "right" if t <= 0.5 else "top",
                        "bottom", "left"))


def _gen_ring_quadrant(refinement: int) -> Mesh:
    ns = 24 * (1 << refinement)
    nt = 48 * (1 << refinement)

    def inner(t):
        a = 0.5 * math.pi * t
        return (math.cos(a), math.sin(a))

    def outer(t):
        a = 0.5 * math.pi * t
        return (10.0 * math.cos(a), 10.0 * math.sin(a))

    return _blend_mesh(inner, outer, ns, nt, ("inner", "outer", "bottom", "left"))


def _gen_dam_trapezoid(refinement: int) -> Mesh:
    # Right trapezoid: vertical water-side face, slanted downstream face.
    # Height 20, bottom width 10, top width 3.
    ns = 16 * (1 << refinement)
    nt = 48 * (1 << refinement)

    def left(t):
        return (0.0, 20.0 * t)

    def right(t):
        return (10.0 - 7.0 * t, 20.0 * t)

    return _blend_mesh(left, right, ns, nt, ("left", "right", "bottom", "top"))


def _gen_box_3d(refinement: int) -> Mesh:
    n = max(1, round(11 * 2.0 ** (2.0 * refinement / 3.0)))
    side = 10.0
    line = np.linspace(0.0, side, n + 1)
    x, y, z = np.meshgrid(line, line, line, indexing="ij")

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    verts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    # Kuhn subdivision: six tetrahedra per cube, one per axis permutation.
    paths = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
    tets = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                base = np.array([i, j, k])
                for perm in paths:
                    corner = base.copy()
                    ids = [vid(*corner)]
                    for axis in perm:
                        corner = corner.copy()
                        corner[axis] += 1
                        ids.append(vid(*corner))
                    tets.append(ids)
    tags: dict[int, set[str]] = {}
    face_names = (("left", "right"), ("front", "back"), ("bottom", "top"))
    for i in range(n + 1):
        for j in range(n + 1):
            for k in range(n + 1):
                idx = (i, j, k)
                for axis in range(3):
                    if idx[axis] == 0:
                        tags.setdefault(vid(i, j, k), set()).add(face_names[axis][0])
                    elif idx[axis] == n:
                        tags.setdefault(vid(i, j, k), set()).add(face_names[axis][1])
    return Mesh(dim=3, vertices=verts, elements=np.asarray(tets, dtype=np.int64),
                boundary_tags={i: frozenset(t) for i, t in tags.items()})


_GENERATORS = {
    "hole-plate": _gen_hole_plate,
    "square-hole-plate": _gen_square_hole_plate,
    "ring-quadrant": _gen_ring_quadrant,
    "dam-trapezoid": _gen_dam_trapezoid,
    "box-3d": _gen_box_3d,
}


def generate_mesh(kind: str, refinement: int = 0) -> Mesh:
    """Deterministic benchmark mesh; vertex count grows ~4x per refinement."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown mesh kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if refinement < 0:
        raise ValueError("refinement must be >= 0")
    return _GENERATORS[kind](refinement)
