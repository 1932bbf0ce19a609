"""Conforming 2D meshes for the benchmark domains.

Meshes mix straight triangles/quadrilaterals with elements carrying one
circular-arc edge. Construction is sequential; a Mesh is immutable by
convention after it is returned and safe to share across readers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, GeometryError

TRIANGLE = "triangle"
QUAD = "quadrilateral"

#: guard against geometric grading collapsing elements to zero size
MIN_ELEMENT_DIAMETER = 1e-12

#: default geometric grading factor toward singular points
DEFAULT_GRADING_FACTOR = 0.15

_ARC_TOL = 1e-12
_ANGLE_TOL = 1e-6


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite vertex coordinates ({self.x}, {self.y})")


@dataclass(frozen=True)
class ArcSpec:
    """Circular arc from angle theta0 to theta1 (theta0 < theta1)."""

    center: Point2
    radius: float
    theta0: float
    theta1: float

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("arc radius must be positive")
        if not self.theta0 < self.theta1:
            raise GeometryError("arc requires theta0 < theta1")

    def point_at(self, theta: float) -> tuple[float, float]:
        return (self.center.x + self.radius * math.cos(theta),
                self.center.y + self.radius * math.sin(theta))

    def tangent_at(self, theta: float) -> tuple[float, float]:
        return (-math.sin(theta), math.cos(theta))


@dataclass(frozen=True)
class Edge:
    v0: int
    v1: int
    boundary_tag: str | None = None
    arc: ArcSpec | None = None


@dataclass(frozen=True)
class Element:
    kind: str
    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    layer: int = 0

    def __post_init__(self):
        n = 3 if self.kind == TRIANGLE else 4
        if self.kind not in (TRIANGLE, QUAD):
            raise GeometryError(f"unknown element kind {self.kind!r}")
        if len(self.vertices) != n or len(self.edges) != n:
            raise GeometryError("vertex/edge count does not match element kind")


@dataclass
class Mesh:
    vertices: list[Point2]
    edges: list[Edge]
    elements: list[Element]
    singular_points: list[int] = field(default_factory=list)
    dirichlet_labels: frozenset[str] = frozenset()

    def __post_init__(self):
        self._coords = np.array([(p.x, p.y) for p in self.vertices], dtype=float)
        self._edge_index = {self._pair(e.v0, e.v1): i for i, e in enumerate(self.edges)}
        self._edge_elements: list[list[int]] = [[] for _ in self.edges]
        for t, el in enumerate(self.elements):
            for e in el.edges:
                self._edge_elements[e].append(t)
        self._vertex_elements: dict[int, list[int]] = {}
        for t, el in enumerate(self.elements):
            for v in el.vertices:
                self._vertex_elements.setdefault(v, []).append(t)

    @staticmethod
    def _pair(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def coords(self) -> np.ndarray:
        return self._coords

    def edge_id(self, a: int, b: int) -> int:
        return self._edge_index[self._pair(a, b)]

    def elements_of_edge(self, e: int) -> list[int]:
        return self._edge_elements[e]

    def elements_of_vertex(self, v: int) -> list[int]:
        return self._vertex_elements.get(v, [])

    def is_boundary_edge(self, e: int) -> bool:
        return len(self._edge_elements[e]) == 1

    def is_dirichlet_edge(self, e: int) -> bool:
        tag = self.edges[e].boundary_tag
        return tag is not None and tag in self.dirichlet_labels

    def element_diameter(self, t: int) -> float:
        pts = self._coords[list(self.elements[t].vertices)]
        d = 0.0
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                d = max(d, float(np.hypot(*(pts[i] - pts[j]))))
        return d


@dataclass(frozen=True)
class DomainSpec:
    domain: str
    bc_case: int | None = None
    bridge_bc: str | None = None
    grading_layers: int = 0
    grading_factor: float = DEFAULT_GRADING_FACTOR

    _DOMAINS = ("unit_square", "slit_disk", "half_disk_1", "half_disk_2", "bridge")

    def __post_init__(self):
        if self.domain not in self._DOMAINS:
            raise ConfigurationError(f"unknown domain {self.domain!r}")
        is_bridge = self.domain == "bridge"
        if is_bridge:
            if self.bc_case is None or self.bridge_bc is None:
                raise ConfigurationError("bridge domain requires bc_case and bridge_bc")
            if not 1 <= int(self.bc_case) <= 10:
                raise ConfigurationError(f"bc_case must be in 1..10, got {self.bc_case}")
            if self.bridge_bc.lower() not in ("dirichlet", "neumann"):
                raise ConfigurationError(f"bridge_bc must be dirichlet or neumann, got {self.bridge_bc!r}")
        elif self.bc_case is not None or self.bridge_bc is not None:
            raise ConfigurationError("bc_case/bridge_bc are only valid for the bridge domain")
        if self.grading_layers < 0:
            raise ConfigurationError("grading_layers must be nonnegative")
        if not 0.0 < self.grading_factor < 1.0:
            raise ConfigurationError("grading_factor must lie in (0, 1)")


class _MeshBuilder:
    """Accumulates vertices/elements, derives shared edges on finalize."""

    def __init__(self):
        self.points: list[tuple[float, float]] = []
        self.element_vertices: list[tuple[int, ...]] = []
        self.element_layers: list[int] = []
        self.tags: dict[tuple[int, int], str] = {}
        self.arcs: dict[tuple[int, int], ArcSpec] = {}

    @staticmethod
    def _pair(a, b):
        return (a, b) if a < b else (b, a)

    def add_vertex(self, x: float, y: float) -> int:
        self.points.append((float(x), float(y)))
        return len(self.points) - 1

    def add_element(self, verts, layer: int = 0) -> int:
        self.element_vertices.append(tuple(int(v) for v in verts))
        self.element_layers.append(layer)
        return len(self.element_vertices) - 1

    def set_tag(self, a: int, b: int, label: str):
        self.tags[self._pair(a, b)] = label

    def set_arc(self, a: int, b: int, arc: ArcSpec):
        self.arcs[self._pair(a, b)] = arc

    def finalize(self, dirichlet_labels=(), singular_points=None,
                 detect_singular: bool = True) -> Mesh:
        vertices = [Point2(x, y) for x, y in self.points]
        edge_ids: dict[tuple[int, int], int] = {}
        edges: list[Edge] = []
        elements: list[Element] = []
        for verts, layer in zip(self.element_vertices, self.element_layers):
            kind = TRIANGLE if len(verts) == 3 else QUAD
            eids = []
            for k in range(len(verts)):
                pair = self._pair(verts[k], verts[(k + 1) % len(verts)])
                if pair not in edge_ids:
                    edge_ids[pair] = len(edges)
                    edges.append(Edge(pair[0], pair[1],
                                      self.tags.get(pair), self.arcs.get(pair)))
                eids.append(edge_ids[pair])
            elements.append(Element(kind, verts, tuple(eids), layer))
        mesh = Mesh(vertices, edges, elements,
                    dirichlet_labels=frozenset(dirichlet_labels))
        if singular_points is not None:
            mesh.singular_points = list(singular_points)
        elif detect_singular:
            mesh.singular_points = detect_singular_points(mesh)
        return mesh


def _signed_area(coords: np.ndarray) -> float:
    x, y = coords[:, 0], coords[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _edge_tangent(mesh: Mesh, edge: Edge, at_vertex: int) -> np.ndarray:
    """Unit tangent of an edge at one endpoint, pointing toward the other."""
    p = mesh.coords()[at_vertex]
    other = edge.v1 if edge.v0 == at_vertex else edge.v0
    if edge.arc is not None:
        arc = edge.arc
        th = math.atan2(p[1] - arc.center.y, p[0] - arc.center.x)
        q = mesh.coords()[other]
        th_o = math.atan2(q[1] - arc.center.y, q[0] - arc.center.x)
        t = np.array(arc.tangent_at(th))
        # orient toward the other endpoint along the shorter angular sweep
        dth = (th_o - th + math.pi) % (2 * math.pi) - math.pi
        if dth < 0:
            t = -t
        return t
    q = mesh.coords()[other]
    t = q - p
    return t / np.linalg.norm(t)


def interior_angle(mesh: Mesh, v: int) -> float:
    """Total interior angle of the domain at vertex v (sum over elements)."""
    total = 0.0
    for t in mesh.elements_of_vertex(v):
        el = mesh.elements[t]
        n = len(el.vertices)
        k = el.vertices.index(v)
        e_next = mesh.edges[el.edges[k]]
        e_prev = mesh.edges[el.edges[(k - 1) % n]]
        t1 = _edge_tangent(mesh, e_next, v)
        t2 = _edge_tangent(mesh, e_prev, v)
        total += math.atan2(abs(t1[0] * t2[1] - t1[1] * t2[0]),
                            float(np.dot(t1, t2)))
    return total


def detect_singular_points(mesh: Mesh) -> list[int]:
    """Boundary vertices that are reentrant (angle > pi) or sit on a
    Dirichlet/Neumann switch."""
    incident: dict[int, list[int]] = {}
    for e, edge in enumerate(mesh.edges):
        if mesh.is_boundary_edge(e):
            incident.setdefault(edge.v0, []).append(e)
            incident.setdefault(edge.v1, []).append(e)
    singular = []
    for v, bedges in sorted(incident.items()):
        kinds = {mesh.is_dirichlet_edge(e) for e in bedges
                 if mesh.edges[e].boundary_tag is not None}
        if len(kinds) > 1:
            singular.append(v)
            continue
        if interior_angle(mesh, v) > math.pi + _ANGLE_TOL:
            singular.append(v)
    return singular


# ---------------------------------------------------------------------------
# domain builders
# ---------------------------------------------------------------------------

def unit_square_mesh(n: int = 2) -> Mesh:
    """n x n uniform quadrilateral mesh of [0,1]^2, all-Dirichlet."""
    if n < 1:
        raise ConfigurationError("unit square subdivision must be >= 1")
    b = _MeshBuilder()
    vid = {}
    for j in range(n + 1):
        for i in range(n + 1):
            vid[(i, j)] = b.add_vertex(i / n, j / n)
    for j in range(n):
        for i in range(n):
            b.add_element((vid[(i, j)], vid[(i + 1, j)],
                           vid[(i + 1, j + 1)], vid[(i, j + 1)]))
    for i in range(n):
        b.set_tag(vid[(i, 0)], vid[(i + 1, 0)], "boundary")
        b.set_tag(vid[(i, n)], vid[(i + 1, n)], "boundary")
        b.set_tag(vid[(0, i)], vid[(0, i + 1)], "boundary")
        b.set_tag(vid[(n, i)], vid[(n, i + 1)], "boundary")
    return b.finalize(dirichlet_labels={"boundary"})


def slit_disk_mesh(sectors: int = 16, rho: float = 0.5) -> Mesh:
    """Unit disk with the positive x-axis removed.

    Fan of triangles at the origin inside an annulus of curvilinear quads.
    Vertices along the slit are duplicated so the two sides carry
    independent Dirichlet tags; the tip vertex is shared (all slit degrees
    of freedom are constrained anyway).
    """
    if sectors < 8:
        raise ConfigurationError("slit disk mesh needs at least 8 sectors")
    b = _MeshBuilder()
    origin = b.add_vertex(0.0, 0.0)
    thetas = [2 * math.pi * j / sectors for j in range(sectors + 1)]
    P = [b.add_vertex(rho * math.cos(t), rho * math.sin(t)) for t in thetas]
    C = [b.add_vertex(math.cos(t), math.sin(t)) for t in thetas]
    for j in range(sectors):
        b.add_element((origin, P[j], P[j + 1]))
        b.add_element((P[j], P[j + 1], C[j + 1], C[j]))
        b.set_tag(C[j], C[j + 1], "circle")
        b.set_arc(C[j], C[j + 1],
                  ArcSpec(Point2(0.0, 0.0), 1.0, thetas[j], thetas[j + 1]))
    b.set_tag(origin, P[0], "slit_upper")
    b.set_tag(P[0], C[0], "slit_upper")
    b.set_tag(origin, P[sectors], "slit_lower")
    b.set_tag(P[sectors], C[sectors], "slit_lower")
    return b.finalize(dirichlet_labels={"slit_upper", "slit_lower", "circle"})


_HALF_DISK_DIRICHLET = {1: ("gamma1", "gamma3"), 2: ("gamma2", "gamma4")}


def half_disk_mesh(which: int, rho: float = 0.5) -> Mesh:
    """Upper half of the unit disk with the four-part boundary split.

    gamma1 = right half of the diameter plus the arc up to pi/4,
    gamma2 = arc pi/4..3pi/4, gamma3 = arc 3pi/4..pi, gamma4 = left half
    of the diameter. `which` selects which pair is Dirichlet.
    """
    if which not in (1, 2):
        raise ConfigurationError("half disk problem index must be 1 or 2")
    b = _MeshBuilder()
    origin = b.add_vertex(0.0, 0.0)
    thetas = [math.pi * j / 8 for j in range(9)]
    P = [b.add_vertex(rho * math.cos(t), rho * math.sin(t)) for t in thetas]
    C = [b.add_vertex(math.cos(t), math.sin(t)) for t in thetas]
    for j in range(8):
        b.add_element((origin, P[j], P[j + 1]))
        b.add_element((P[j], P[j + 1], C[j + 1], C[j]))
        b.set_arc(C[j], C[j + 1],
                  ArcSpec(Point2(0.0, 0.0), 1.0, thetas[j], thetas[j + 1]))
    arc_labels = ["gamma1", "gamma1", "gamma2", "gamma2",
                  "gamma2", "gamma2", "gamma3", "gamma3"]
    for j, lab in enumerate(arc_labels):
        b.set_tag(C[j], C[j + 1], lab)
    b.set_tag(origin, P[0], "gamma1")
    b.set_tag(P[0], C[0], "gamma1")
    b.set_tag(origin, P[8], "gamma4")
    b.set_tag(P[8], C[8], "gamma4")
    return b.finalize(dirichlet_labels=set(_HALF_DISK_DIRICHLET[which]))


#: bridge geometry constants: opening width along the flat sides and
#: separation between the two drums
BRIDGE_WIDTH = 0.1
BRIDGE_LENGTH = 0.25


def bridge_mesh(bc_case: int, bridge_bc: str, rho: float = 0.5) -> Mesh:
    """Two half-disk drums joined by a BRIDGE_WIDTH x BRIDGE_LENGTH strip.

    The opening is centered on each drum's flat side. Boundary segments
    carry labels A..L; B and H are the two bridge sides and receive the
    bridge boundary condition. Dirichlet/Neumann assignment per label
    comes from the stored configuration table.
    """
    from .benchmarks import bridge_boundary_config

    cfg = bridge_boundary_config(bc_case, bridge_bc)
    w2 = BRIDGE_WIDTH / 2
    lb = BRIDGE_LENGTH
    b = _MeshBuilder()

    def drum(cy: float, s: float, labels: dict[str, str]):
        """One drum; s=+1 opens downward into the bridge, s=-1 upward."""
        a_plus = b.add_vertex(w2, cy)
        a_minus = b.add_vertex(-w2, cy)
        m0 = b.add_vertex(0.0, cy)
        thetas = [math.pi * j / 8 for j in range(9)]
        P = [b.add_vertex(rho * math.cos(t), cy + s * rho * math.sin(t)) for t in thetas]
        C = [b.add_vertex(math.cos(t), cy + s * math.sin(t)) for t in thetas]
        tris = ([(a_plus, P[j], P[j + 1]) for j in range(4)]
                + [(a_plus, P[4], m0), (m0, P[4], a_minus)]
                + [(a_minus, P[j], P[j + 1]) for j in range(4, 8)])
        for verts in tris:
            b.add_element(verts if s > 0 else tuple(reversed(verts)))
        for j in range(8):
            verts = (P[j], P[j + 1], C[j + 1], C[j])
            b.add_element(verts if s > 0 else tuple(reversed(verts)))
            if s > 0:
                arc = ArcSpec(Point2(0.0, cy), 1.0, thetas[j], thetas[j + 1])
            else:
                arc = ArcSpec(Point2(0.0, cy), 1.0, -thetas[j + 1], -thetas[j])
            b.set_arc(C[j], C[j + 1], arc)
        b.set_tag(a_plus, P[0], labels["flat_right"])
        b.set_tag(P[0], C[0], labels["flat_right"])
        for j, key in enumerate(["arc1", "arc1", "arc2", "arc2",
                                 "arc2", "arc2", "arc3", "arc3"]):
            b.set_tag(C[j], C[j + 1], labels[key])
        b.set_tag(C[8], P[8], labels["flat_left"])
        b.set_tag(P[8], a_minus, labels["flat_left"])
        return a_plus, a_minus, m0

    a_plus, a_minus, m0 = drum(0.0, +1.0, {
        "flat_right": "A", "arc1": "I", "arc2": "J", "arc3": "K", "flat_left": "L"})
    c_plus, c_minus, cm = drum(-lb, -1.0, {
        "flat_right": "G", "arc1": "C", "arc2": "D", "arc3": "E", "flat_left": "F"})

    m_plus = b.add_vertex(w2, -lb / 2)
    m_minus = b.add_vertex(-w2, -lb / 2)
    mm = b.add_vertex(0.0, -lb / 2)
    b.add_element((m_minus, mm, m0, a_minus))
    b.add_element((mm, m_plus, a_plus, m0))
    b.add_element((c_minus, cm, mm, m_minus))
    b.add_element((cm, c_plus, m_plus, mm))
    b.set_tag(a_plus, m_plus, "B")
    b.set_tag(m_plus, c_plus, "B")
    b.set_tag(a_minus, m_minus, "H")
    b.set_tag(m_minus, c_minus, "H")

    dirichlet = {lab for lab, kind in cfg.items() if kind == "D"}
    return b.finalize(dirichlet_labels=dirichlet)


def build_domain_mesh(spec: DomainSpec) -> Mesh:
    """Coarse mesh of the requested domain, graded toward singular points."""
    if spec.domain == "unit_square":
        mesh = unit_square_mesh(2)
    elif spec.domain == "slit_disk":
        mesh = slit_disk_mesh()
    elif spec.domain == "half_disk_1":
        mesh = half_disk_mesh(1)
    elif spec.domain == "half_disk_2":
        mesh = half_disk_mesh(2)
    else:
        mesh = bridge_mesh(spec.bc_case, spec.bridge_bc)
    if spec.grading_layers > 0:
        mesh = refine_toward_singular_points(mesh, spec.grading_layers,
                                             spec.grading_factor)
    return mesh


# ---------------------------------------------------------------------------
# geometric grading
# ---------------------------------------------------------------------------

def _arc_angle_of(arc: ArcSpec, p: tuple[float, float]) -> float:
    th = math.atan2(p[1] - arc.center.y, p[0] - arc.center.x)
    # normalize into [theta0, theta1] up to 2*pi shifts
    while th < arc.theta0 - _ARC_TOL:
        th += 2 * math.pi
    while th > arc.theta1 + _ARC_TOL:
        th -= 2 * math.pi
    return th


def _split_point(points, arcs, tags, pair_key, va: int, vb: int, q: float,
                 new_vertex):
    """Vertex at relative distance q from va along edge (va, vb); updates
    arc/tag bookkeeping for the two sub-edges."""
    key = pair_key(va, vb)
    arc = arcs.pop(key, None)
    tag = tags.pop(key, None)
    if arc is not None:
        tha = _arc_angle_of(arc, points[va])
        thb = _arc_angle_of(arc, points[vb])
        th = tha + q * (thb - tha)
        z = new_vertex(*arc.point_at(th))
        lo, hi = (tha, th) if tha < th else (th, tha)
        arcs[pair_key(va, z)] = replace(arc, theta0=lo, theta1=hi)
        lo, hi = (th, thb) if th < thb else (thb, th)
        arcs[pair_key(z, vb)] = replace(arc, theta0=lo, theta1=hi)
    else:
        pa, pb = points[va], points[vb]
        z = new_vertex(pa[0] + q * (pb[0] - pa[0]), pa[1] + q * (pb[1] - pa[1]))
    if tag is not None:
        tags[pair_key(va, z)] = tag
        tags[pair_key(z, vb)] = tag
    return z


def refine_toward_singular_points(mesh: Mesh, levels: int, q: float) -> Mesh:
    """Geometric grading by element-level replacement rules.

    At each step only the elements touching a singular point are replaced:
    a corner element scaled by q at the singular vertex plus a conforming
    transition band. New vertices on arc edges land on the exact circle.
    """
    if levels == 0:
        return mesh
    if levels < 0:
        raise ConfigurationError("refinement levels must be nonnegative")
    if not 0.0 < q < 1.0:
        raise ConfigurationError("grading factor must lie in (0, 1)")
    if not mesh.singular_points:
        return mesh

    touching = [t for t in range(len(mesh.elements))
                if any(v in mesh.singular_points for v in mesh.elements[t].vertices)]
    min_diam = min(mesh.element_diameter(t) for t in touching)
    if min_diam * q ** levels < MIN_ELEMENT_DIAMETER:
        raise GeometryError(
            f"{levels} grading levels at q={q} would shrink elements below "
            f"{MIN_ELEMENT_DIAMETER} diameter")

    points = [(p.x, p.y) for p in mesh.vertices]
    elements = [(el.kind, list(el.vertices), el.layer) for el in mesh.elements]
    pair_key = _MeshBuilder._pair
    tags = {pair_key(e.v0, e.v1): e.boundary_tag
            for e in mesh.edges if e.boundary_tag is not None}
    arcs = {pair_key(e.v0, e.v1): e.arc for e in mesh.edges if e.arc is not None}
    singular = set(mesh.singular_points)
    start = max(el.layer for el in mesh.elements) + 1

    def new_vertex(x, y):
        points.append((float(x), float(y)))
        return len(points) - 1

    # blended evaluation of the parent element, for interior split points
    def map_point(kind, verts, ref):
        corners = np.array([points[v] for v in verts])
        if kind == TRIANGLE:
            lam = np.array([1 - ref[0] - ref[1], ref[0], ref[1]])
            pos = lam @ corners
        else:
            xi, eta = ref
            n = np.array([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                          (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]) / 4
            pos = n @ corners
        # transfinite correction from any single arc edge
        nv = len(verts)
        for k in range(nv):
            key = pair_key(verts[k], verts[(k + 1) % nv])
            arc = arcs.get(key)
            if arc is None:
                continue
            va, vb = verts[k], verts[(k + 1) % nv]
            tha = _arc_angle_of(arc, points[va])
            thb = _arc_angle_of(arc, points[vb])
            pa, pb = np.array(points[va]), np.array(points[vb])
            if kind == TRIANGLE:
                lam = np.array([1 - ref[0] - ref[1], ref[0], ref[1]])
                lam_a, lam_b = lam[k], lam[(k + 1) % 3]
                denom = lam_a + lam_b
                if denom < 1e-14:
                    continue
                s = lam_b / denom
                fac = denom
            else:
                xi, eta = ref
                tloc = {0: xi, 1: eta, 2: -xi, 3: -eta}[k]
                fac = {0: (1 - eta) / 2, 1: (1 + xi) / 2,
                       2: (1 + eta) / 2, 3: (1 - xi) / 2}[k]
                s = (tloc + 1) / 2
            th = tha + s * (thb - tha)
            chord = (1 - s) * pa + s * pb
            pos = pos + fac * (np.array(arc.point_at(th)) - chord)
        return pos

    for step in range(start, start + levels):
        to_refine = [t for t, (_, verts, _) in enumerate(elements)
                     if any(v in singular for v in verts)]
        split_cache: dict[tuple[int, int], int] = {}

        def split(va, vb):
            key = pair_key(va, vb)
            if key not in split_cache:
                split_cache[key] = _split_point(points, arcs, tags, pair_key,
                                                va, vb, q, new_vertex)
            return split_cache[key]

        replacement: dict[int, list[tuple[str, list[int], int]]] = {}
        for t in to_refine:
            kind, verts, _layer = elements[t]
            sing = [v for v in verts if v in singular]
            if len(sing) != 1:
                raise GeometryError(
                    f"element {t} touches {len(sing)} singular points; "
                    "replacement rule handles exactly one")
            k = verts.index(sing[0])
            n = len(verts)
            rot = [verts[(k + i) % n] for i in range(n)]
            s = rot[0]
            if kind == TRIANGLE:
                a = split(s, rot[1])
                bb = split(s, rot[2])
                replacement[t] = [(TRIANGLE, [s, a, bb], step),
                                  (QUAD, [a, rot[1], rot[2], bb], step)]
            else:
                a = split(s, rot[1])
                bb = split(s, rot[3])
                ref_corner = {0: (-1.0, -1.0), 1: (1.0, -1.0),
                              2: (1.0, 1.0), 3: (-1.0, 1.0)}[k]
                ref_m = (ref_corner[0] * (1 - 2 * q), ref_corner[1] * (1 - 2 * q))
                pm = map_point(kind, verts, ref_m)
                m = new_vertex(pm[0], pm[1])
                replacement[t] = [(QUAD, [s, a, m, bb], step),
                                  (QUAD, [a, rot[1], rot[2], m], step),
                                  (QUAD, [m, rot[2], rot[3], bb], step)]

        out = []
        for t, el in enumerate(elements):
            if t in replacement:
                out.extend(replacement[t])
            else:
                out.append(el)
        elements = out

    b = _MeshBuilder()
    b.points = points
    for kind, verts, layer in elements:
        b.add_element(verts, layer)
    for key, tag in tags.items():
        b.tags[key] = tag
    for key, arc in arcs.items():
        b.arcs[key] = arc
    return b.finalize(dirichlet_labels=mesh.dirichlet_labels,
                      singular_points=list(mesh.singular_points))


# ---------------------------------------------------------------------------
# validation and export
# ---------------------------------------------------------------------------

def _graph_distance(mesh: Mesh, a: int, b: int, cap: int = 3) -> int:
    if a == b:
        return 0
    adj: dict[int, set[int]] = {}
    for e in mesh.edges:
        adj.setdefault(e.v0, set()).add(e.v1)
        adj.setdefault(e.v1, set()).add(e.v0)
    frontier = {a}
    seen = {a}
    for d in range(1, cap + 1):
        frontier = {w for v in frontier for w in adj.get(v, ())} - seen
        if b in frontier:
            return d
        seen |= frontier
    return cap + 1


def validate_mesh(mesh: Mesh) -> list[str]:
    """Check Mesh invariants; returns a list of violations (empty if valid)."""
    out: list[str] = []
    coords = mesh.coords()
    if not np.all(np.isfinite(coords)):
        out.append("non-finite vertex coordinates")
    for i, e in enumerate(mesh.edges):
        if e.v0 == e.v1:
            out.append(f"edge {i} joins a vertex to itself")
        n_el = len(mesh.elements_of_edge(i))
        if n_el > 2:
            out.append(f"edge {i} referenced by {n_el} elements (conformity)")
        elif n_el == 1 and e.boundary_tag is None:
            out.append(f"boundary edge {i} has no boundary tag")
        if e.arc is not None:
            tol = _ARC_TOL * max(1.0, e.arc.radius)
            for v in (e.v0, e.v1):
                p = coords[v]
                r = math.hypot(p[0] - e.arc.center.x, p[1] - e.arc.center.y)
                if abs(r - e.arc.radius) > tol:
                    out.append(f"edge {i} arc endpoint {v} off the circle")
    for t, el in enumerate(mesh.elements):
        if len(set(el.vertices)) != len(el.vertices):
            out.append(f"element {t} repeats a vertex")
            continue
        if _signed_area(coords[list(el.vertices)]) <= 0:
            out.append(f"element {t} is not positively oriented")
    sp = mesh.singular_points
    for i in range(len(sp)):
        for j in range(i + 1, len(sp)):
            if _graph_distance(mesh, sp[i], sp[j], cap=2) < 2:
                out.append(f"singular points {sp[i]} and {sp[j]} are adjacent")
    return out


def export_mesh(mesh: Mesh, path) -> None:
    """Plain-text dump: one record per line (see README for the schema)."""
    with open(path, "w") as f:
        f.write("# hpeig mesh export v1\n")
        for i, p in enumerate(mesh.vertices):
            f.write(f"vertex {i} {p.x!r} {p.y!r}\n")
        for i, e in enumerate(mesh.edges):
            tag = e.boundary_tag if e.boundary_tag is not None else "-"
            if e.arc is not None:
                a = e.arc
                arc = f"{a.center.x!r} {a.center.y!r} {a.radius!r} {a.theta0!r} {a.theta1!r}"
            else:
                arc = "-"
            f.write(f"edge {i} {e.v0} {e.v1} {tag} {arc}\n")
        for i, el in enumerate(mesh.elements):
            verts = " ".join(str(v) for v in el.vertices)
            f.write(f"element {i} {el.kind} {el.layer} {verts}\n")
        f.write("singular " + " ".join(str(v) for v in mesh.singular_points) + "\n")
        f.write("dirichlet " + " ".join(sorted(mesh.dirichlet_labels)) + "\n")
