"""Assembly of stiffness and mass forms on V, W, and across W-V.

All matrices live on the free (unconstrained) degrees of freedom;
Dirichlet rows/columns are eliminated symmetrically during scatter.
Element loops are independent; accumulation order is fixed, so repeated
runs produce identical matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .errors import GeometryError
from .geometry import Mesh
from .mapping import BLENDED, element_map, jacobian_data
from .quadrature import quadrature_for
from .shapes import _max_degree, tabulate_basis
from .spaces import DofMap, SpacePair

#: extra quadrature exactness on arc-blended elements
BLEND_EXTRA = 2


@dataclass
class FormSet:
    """Discrete bilinear forms: stiffness K, L2 mass M, on V, W and W x V."""
    K_VV: csr_matrix
    M_VV: csr_matrix
    K_WW: csr_matrix
    M_WW: csr_matrix
    K_WV: csr_matrix
    M_WV: csr_matrix


_table_cache: dict = {}


def _tables(kind: str, roles: tuple, qdeg: int):
    key = (kind, roles, qdeg)
    if key not in _table_cache:
        rule = quadrature_for(kind, qdeg)
        _table_cache[key] = tabulate_basis(kind, list(roles), rule.points)
    return _table_cache[key]


class _Accumulator:
    def __init__(self, nrows: int, ncols: int):
        self.shape = (nrows, ncols)
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []

    def add(self, block: np.ndarray, rdofs: np.ndarray, cdofs: np.ndarray):
        rsel = np.where(rdofs >= 0)[0]
        csel = np.where(cdofs >= 0)[0]
        if len(rsel) == 0 or len(csel) == 0:
            return
        sub = block[np.ix_(rsel, csel)]
        self.rows.append(np.repeat(rdofs[rsel], len(csel)))
        self.cols.append(np.tile(cdofs[csel], len(rsel)))
        self.vals.append(sub.ravel())

    def tocsr(self) -> csr_matrix:
        if not self.rows:
            return csr_matrix(self.shape)
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        out = csr_matrix((vals, (rows, cols)), shape=self.shape)
        out.sum_duplicates()
        return out


def _symmetrize(block: np.ndarray) -> np.ndarray:
    return (block + block.T) / 2


def _element_blocks(mesh: Mesh, t: int, role_sets, qdeg: int):
    """Per-element (vals, phys grads, dV) for each requested role set."""
    emap = element_map(mesh, t)
    kind = mesh.elements[t].kind
    rule = quadrature_for(kind, qdeg)
    J = emap.jacobian(rule.points)
    det, invT = jacobian_data(J)
    if np.any(det <= 0):
        raise GeometryError(f"element {t}: nonpositive Jacobian at quadrature points")
    dV = rule.weights * det
    out = []
    for roles, signs in role_sets:
        vals, grads = _tables(kind, roles, qdeg)
        vals = vals * signs[:, None]
        grads = grads * signs[:, None, None]
        pgrads = np.einsum("qij,bqj->bqi", invT, grads)
        out.append((vals, pgrads))
    return out, dV, emap.map_kind == BLENDED


def _quad_degree(mesh, t, dofs_list, quad_increment):
    dmax = 1
    for dof in dofs_list:
        dmax = max(dmax, _max_degree(dof.element_dofs[t].roles))
    emap_blend = any(mesh.edges[e].arc is not None for e in mesh.elements[t].edges)
    return 2 * dmax + 2 + (BLEND_EXTRA if emap_blend else 0) + quad_increment


def assemble_primal(mesh: Mesh, dofV: DofMap, quad_increment: int = 0):
    """Stiffness and mass on V only (used for reference spaces)."""
    K = _Accumulator(dofV.n_free, dofV.n_free)
    M = _Accumulator(dofV.n_free, dofV.n_free)
    for t in range(len(mesh.elements)):
        ed = dofV.element_dofs[t]
        qdeg = _quad_degree(mesh, t, [dofV], quad_increment)
        (tabV,), dV, _ = _element_blocks(mesh, t, [(ed.roles, ed.signs)], qdeg)
        vals, pgrads = tabV
        ke = _symmetrize(np.einsum("bqi,cqi,q->bc", pgrads, pgrads, dV, optimize=True))
        me = _symmetrize(np.einsum("bq,cq,q->bc", vals, vals, dV, optimize=True))
        fdofs = dofV.free_index[ed.gdofs]
        K.add(ke, fdofs, fdofs)
        M.add(me, fdofs, fdofs)
    return K.tocsr(), M.tocsr()


def assemble_forms(mesh: Mesh, pair: SpacePair, dofV: DofMap, dofW: DofMap,
                   quad_increment: int = 0) -> FormSet:
    """All six form blocks in one sweep over the elements."""
    nV, nW = dofV.n_free, dofW.n_free
    acc = {name: _Accumulator(*shape) for name, shape in {
        "K_VV": (nV, nV), "M_VV": (nV, nV),
        "K_WW": (nW, nW), "M_WW": (nW, nW),
        "K_WV": (nW, nV), "M_WV": (nW, nV)}.items()}
    for t in range(len(mesh.elements)):
        edV = dofV.element_dofs[t]
        edW = dofW.element_dofs[t]
        qdeg = _quad_degree(mesh, t, [dofV, dofW], quad_increment)
        (tabV, tabW), dV, _ = _element_blocks(
            mesh, t, [(edV.roles, edV.signs), (edW.roles, edW.signs)], qdeg)
        valsV, gradsV = tabV
        valsW, gradsW = tabW
        fV = dofV.free_index[edV.gdofs]
        fW = dofW.free_index[edW.gdofs]
        acc["K_VV"].add(_symmetrize(np.einsum("bqi,cqi,q->bc", gradsV, gradsV, dV,
                                              optimize=True)), fV, fV)
        acc["M_VV"].add(_symmetrize(np.einsum("bq,cq,q->bc", valsV, valsV, dV,
                                              optimize=True)), fV, fV)
        acc["K_WW"].add(_symmetrize(np.einsum("bqi,cqi,q->bc", gradsW, gradsW, dV,
                                              optimize=True)), fW, fW)
        acc["M_WW"].add(_symmetrize(np.einsum("bq,cq,q->bc", valsW, valsW, dV,
                                              optimize=True)), fW, fW)
        acc["K_WV"].add(np.einsum("bqi,cqi,q->bc", gradsW, gradsV, dV,
                                  optimize=True), fW, fV)
        acc["M_WV"].add(np.einsum("bq,cq,q->bc", valsW, valsV, dV,
                                  optimize=True), fW, fV)
    return FormSet(**{name: a.tocsr() for name, a in acc.items()})


def dump_matrix(A, path) -> None:
    """Coordinate text dump: `row col value` per line."""
    coo = A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as f:
        for i in order:
            f.write(f"{coo.row[i]} {coo.col[i]} {coo.data[i]!r}\n")
