"""Degree assignment and degree-of-freedom management for V and W.

The primal space V uses vertex functions, edge functions of degrees
2..edge_degree(e), and interior functions up to the element degree. The
auxiliary error space W on the same mesh holds, per edge, the single
edge function of degree edge_degree(e)+1 and, per element, the interior
functions of exact degree element_degree(T)+2, so V and W intersect
trivially.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigurationError
from .geometry import QUAD, TRIANGLE, Mesh

P_FAMILY = "P"
HP_FAMILY = "HP"


@dataclass(frozen=True)
class DegreeDistribution:
    family: str
    base_degree: int
    element_degree: np.ndarray
    edge_degree: np.ndarray


@dataclass(frozen=True)
class AuxiliaryDegrees:
    """Exact degrees of the W blocks (one edge function per edge)."""
    edge_degree: np.ndarray
    interior_degree: np.ndarray


@dataclass(frozen=True)
class SpacePair:
    primal: DegreeDistribution
    auxiliary: AuxiliaryDegrees


def _edge_degrees_from_elements(mesh: Mesh, eldeg: np.ndarray) -> np.ndarray:
    out = np.zeros(len(mesh.edges), dtype=int)
    for t, el in enumerate(mesh.elements):
        for e in el.edges:
            out[e] = max(out[e], eldeg[t])
    return out


def hp_layers(mesh: Mesh) -> np.ndarray:
    """Element layers by breadth-first search from the singular points.

    Elements touching a singular point are layer 1, elements sharing a
    vertex with those are layer 2, and so on. 0 marks unreachable
    elements (no singular points at all).
    """
    layers = np.zeros(len(mesh.elements), dtype=int)
    if not mesh.singular_points:
        return layers
    frontier_vertices = set(mesh.singular_points)
    visited_elements: set[int] = set()
    level = 1
    while frontier_vertices:
        frontier = set()
        for v in frontier_vertices:
            for t in mesh.elements_of_vertex(v):
                if t not in visited_elements:
                    frontier.add(t)
        if not frontier:
            break
        for t in frontier:
            layers[t] = level
        visited_elements |= frontier
        frontier_vertices = {v for t in frontier
                             for v in mesh.elements[t].vertices}
        level += 1
    return layers


def assign_degrees(mesh: Mesh, family: str, p: int) -> DegreeDistribution:
    """Per-element and per-edge polynomial degrees for the chosen family."""
    fam = family.upper()
    if fam not in (P_FAMILY, HP_FAMILY):
        raise ConfigurationError(f"family must be P or HP, got {family!r}")
    if p < 1:
        raise ConfigurationError("base degree must be >= 1")
    if fam == P_FAMILY:
        eldeg = np.full(len(mesh.elements), p, dtype=int)
    else:
        layers = hp_layers(mesh)
        eldeg = np.where(layers == 0, p, np.minimum(layers, p))
    edeg = _edge_degrees_from_elements(mesh, eldeg)
    return DegreeDistribution(fam, p, eldeg, edeg)


def build_auxiliary_degrees(primal: DegreeDistribution) -> SpacePair:
    aux = AuxiliaryDegrees(edge_degree=primal.edge_degree + 1,
                           interior_degree=primal.element_degree + 2)
    return SpacePair(primal, aux)


def interior_indices(kind: str, max_degree: int) -> list[tuple[int, int]]:
    """Interior multi-indices of the primal space up to max_degree."""
    if kind == QUAD:
        return [(i, j) for i in range(2, max_degree + 1)
                for j in range(2, max_degree + 1)]
    out = []
    for k in range(3, max_degree + 1):
        for n1 in range(1, k - 1):
            out.append((n1, k - 1 - n1))
    return out


def interior_indices_exact(kind: str, degree: int) -> list[tuple[int, int]]:
    """Interior multi-indices of exact polynomial degree `degree`."""
    if kind == QUAD:
        return [(i, j) for i in range(2, degree + 1)
                for j in range(2, degree + 1) if max(i, j) == degree]
    return [(n1, degree - 1 - n1) for n1 in range(1, degree - 1)]


def local_dimension(kind: str, m: int) -> int:
    """Dimension of the full local polynomial space of degree m."""
    return (m + 1) * (m + 2) // 2 if kind == TRIANGLE else (m + 1) ** 2


@dataclass
class ElementDofs:
    gdofs: np.ndarray
    roles: tuple
    signs: np.ndarray


@dataclass
class DofMap:
    n_total: int
    n_free: int
    free_index: np.ndarray
    dirichlet: frozenset
    element_dofs: list[ElementDofs]
    keys: list[tuple]
    counts: dict

    def key_to_free(self) -> dict:
        """Entity key -> free index, for embedding into richer spaces."""
        return {key: int(self.free_index[g]) for g, key in enumerate(self.keys)
                if self.free_index[g] >= 0}


def _edge_sign(va: int, vb: int, degree: int) -> float:
    if va < vb or degree % 2 == 0:
        return 1.0
    return -1.0


def build_dof_map(mesh: Mesh, degrees, dirichlet_labels: Iterable[str] | None = None) -> DofMap:
    """Global numbering for V (DegreeDistribution) or W (AuxiliaryDegrees).

    Vertex and edge functions supported on Dirichlet-tagged boundary
    edges are constrained; free dofs are numbered contiguously from 0 in
    entity order (vertices, then edges, then element interiors).
    """
    if dirichlet_labels is None:
        dlabels = mesh.dirichlet_labels
    else:
        dlabels = frozenset(dirichlet_labels)

    def edge_is_dirichlet(e: int) -> bool:
        tag = mesh.edges[e].boundary_tag
        return (tag is not None and tag in dlabels
                and mesh.is_boundary_edge(e))

    dirichlet_vertices = set()
    for e in range(len(mesh.edges)):
        if edge_is_dirichlet(e):
            dirichlet_vertices.add(mesh.edges[e].v0)
            dirichlet_vertices.add(mesh.edges[e].v1)

    is_aux = isinstance(degrees, AuxiliaryDegrees)
    keys: list[tuple] = []
    constrained: list[bool] = []
    gid_of: dict[tuple, int] = {}

    def add(key, is_constrained):
        gid_of[key] = len(keys)
        keys.append(key)
        constrained.append(is_constrained)

    counts = {"vertex": 0, "edge": 0, "interior": 0}
    if not is_aux:
        for v in range(len(mesh.vertices)):
            add(("v", v), v in dirichlet_vertices)
            counts["vertex"] += 1
    for e in range(len(mesh.edges)):
        if is_aux:
            degs = [int(degrees.edge_degree[e])]
        else:
            degs = list(range(2, int(degrees.edge_degree[e]) + 1))
        for k in degs:
            add(("e", e, k), edge_is_dirichlet(e))
            counts["edge"] += 1
    for t, el in enumerate(mesh.elements):
        if is_aux:
            mis = interior_indices_exact(el.kind, int(degrees.interior_degree[t]))
        else:
            mis = interior_indices(el.kind, int(degrees.element_degree[t]))
        for mi in mis:
            add(("i", t, mi), False)
            counts["interior"] += 1

    n_total = len(keys)
    free_index = np.full(n_total, -1, dtype=int)
    nf = 0
    for g in range(n_total):
        if not constrained[g]:
            free_index[g] = nf
            nf += 1

    element_dofs: list[ElementDofs] = []
    for t, el in enumerate(mesh.elements):
        nv = len(el.vertices)
        gdofs: list[int] = []
        roles: list[tuple] = []
        signs: list[float] = []
        if not is_aux:
            for k, v in enumerate(el.vertices):
                gdofs.append(gid_of[("v", v)])
                roles.append(("v", k))
                signs.append(1.0)
        for k in range(nv):
            e = el.edges[k]
            va, vb = el.vertices[k], el.vertices[(k + 1) % nv]
            if is_aux:
                degs = [int(degrees.edge_degree[e])]
            else:
                degs = list(range(2, int(degrees.edge_degree[e]) + 1))
            for deg in degs:
                gdofs.append(gid_of[("e", e, deg)])
                roles.append(("e", k, deg))
                signs.append(_edge_sign(va, vb, deg))
        if is_aux:
            mis = interior_indices_exact(el.kind, int(degrees.interior_degree[t]))
        else:
            mis = interior_indices(el.kind, int(degrees.element_degree[t]))
        for mi in mis:
            gdofs.append(gid_of[("i", t, mi)])
            roles.append(("i", mi))
            signs.append(1.0)
        element_dofs.append(ElementDofs(np.array(gdofs, dtype=int),
                                        tuple(roles),
                                        np.array(signs)))

    dirichlet = frozenset(g for g in range(n_total) if constrained[g])
    return DofMap(n_total, nf, free_index, dirichlet, element_dofs, keys, counts)


def embedding_matrix(coarse: DofMap, rich: DofMap):
    """Sparse injection of coarse free dofs into a richer space on the
    same mesh (hierarchical zero-padding)."""
    from scipy.sparse import csr_matrix

    rich_map = rich.key_to_free()
    rows, cols = [], []
    for g, key in enumerate(coarse.keys):
        fc = coarse.free_index[g]
        if fc < 0:
            continue
        if key not in rich_map:
            raise ConfigurationError(
                f"coarse dof {key} has no counterpart in the rich space")
        rows.append(rich_map[key])
        cols.append(int(fc))
    data = np.ones(len(rows))
    return csr_matrix((data, (rows, cols)), shape=(rich.n_free, coarse.n_free))
