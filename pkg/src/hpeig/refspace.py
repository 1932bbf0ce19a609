"""Reference spectra in a rich space on the same mesh.

Hierarchical bases make the coarse space a literal subset of the rich
one, so embedding coarse coefficient vectors is zero-padding through a
sparse injection matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_primal
from .eigensolver import EigenResult, SolverOptions, solve_generalized_symmetric
from .errors import MatrixError
from .geometry import Mesh
from .spaces import DofMap, assign_degrees, build_dof_map, embedding_matrix

DEFAULT_P_REF = 16


@dataclass
class ReferenceSpectrum:
    mesh: Mesh
    family: str
    p_ref: int
    values: np.ndarray
    vectors: np.ndarray
    K: sp.csr_matrix
    M: sp.csr_matrix
    dofmap: DofMap
    _lu: object = field(default=None, repr=False)

    def embedding(self, coarse: DofMap) -> sp.csr_matrix:
        return embedding_matrix(coarse, self.dofmap)

    def solve_source(self, rhs: np.ndarray) -> np.ndarray:
        """Galerkin solution in the reference space for a load vector."""
        if self._lu is None:
            d = self.K.diagonal()
            if np.any(d <= 0):
                raise MatrixError("reference stiffness has a nonpositive diagonal")
            s = 1.0 / np.sqrt(d)
            S = sp.diags(s)
            try:
                self._lu = (s, spla.splu((S @ self.K @ S).tocsc()))
            except RuntimeError as exc:
                raise MatrixError(f"reference stiffness factorization failed: {exc}") from exc
        s, lu = self._lu
        return s * lu.solve(s * rhs)


def build_reference_spectrum(mesh: Mesh, family: str, p_ref: int, count: int,
                             opts: SolverOptions | None = None,
                             quad_increment: int = 0) -> ReferenceSpectrum:
    deg = assign_degrees(mesh, family, p_ref)
    dof = build_dof_map(mesh, deg)
    K, M = assemble_primal(mesh, dof, quad_increment)
    eig: EigenResult = solve_generalized_symmetric(K, M, count, opts)
    return ReferenceSpectrum(mesh, family.upper(), p_ref, eig.values,
                             eig.vectors, K, M, dof)
