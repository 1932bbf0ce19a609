"""Approximate error functions in the auxiliary space W.

For each approximate eigenpair the induced source problem is projected
onto W: B(eps_j, w) = mu_j (phi_j, w) - B(phi_j, w) for all w in W. One
factorization of K_WW serves all right-hand sides.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import FormSet
from .eigensolver import EigenResult
from .errors import MatrixError
from .fields import FieldEvaluator


@dataclass
class ErrorFunction:
    index: int
    coeffs: np.ndarray
    energy_norm: float
    l2_norm: float


def error_rhs(forms: FormSet, mu_hat: float, phi_hat: np.ndarray) -> np.ndarray:
    """Load vector of the W error equation for the source mu_hat*phi_hat."""
    if forms.K_WV.shape[1] != len(phi_hat):
        raise ValueError("eigenvector length does not match the V block")
    return mu_hat * (forms.M_WV @ phi_hat) - forms.K_WV @ phi_hat


class _ScaledCholesky:
    """SPD solve through diagonal scaling + sparse LU."""

    def __init__(self, A: sp.spmatrix):
        d = A.diagonal()
        if np.any(d <= 0):
            raise MatrixError("matrix has nonpositive diagonal entries")
        self.s = 1.0 / np.sqrt(d)
        S = sp.diags(self.s)
        try:
            self.lu = spla.splu((S @ A @ S).tocsc())
        except RuntimeError as exc:
            raise MatrixError(f"sparse factorization failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self.s * self.lu.solve(self.s * b)


def solve_error_functions(forms: FormSet, pairs: EigenResult, r: int) -> list[ErrorFunction]:
    """Error functions for the first r eigenpairs, sharing one K_WW
    factorization."""
    if r > len(pairs.values):
        raise ValueError(f"cluster size {r} exceeds computed pairs {len(pairs.values)}")
    if r == 0:
        return []
    chol = _ScaledCholesky(forms.K_WW)
    out = []
    for j in range(r):
        rhs = error_rhs(forms, float(pairs.values[j]), pairs.vectors[:, j])
        eps = chol.solve(rhs)
        energy = float(np.sqrt(max(0.0, eps @ (forms.K_WW @ eps))))
        l2 = float(np.sqrt(max(0.0, eps @ (forms.M_WW @ eps))))
        out.append(ErrorFunction(j, eps, energy, l2))
    return out


def reference_source_error(ref, f_coeffs: np.ndarray, u_hat: np.ndarray,
                           embed: sp.spmatrix) -> float:
    """Energy norm of u_ref(f) - u_hat, with f given by coarse V
    coefficients and u_hat a coarse Galerkin solution (or eigenvector).

    `ref` is a ReferenceSpectrum; `embed` the coarse-to-reference
    injection.
    """
    f_ref = embed @ f_coeffs
    rhs = ref.M @ f_ref
    u_ref = ref.solve_source(rhs)
    e = u_ref - embed @ u_hat
    return float(np.sqrt(max(0.0, e @ (ref.K @ e))))


def dump_error_samples(mesh, dofW, err: ErrorFunction, path, grid: int = 80) -> None:
    """CSV dump (x, y, value) of an error function on a uniform grid over
    the mesh bounding box; points outside the domain are omitted."""
    ev = FieldEvaluator(mesh, dofW, err.coeffs)
    coords = mesh.coords()
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    xs = np.linspace(lo[0], hi[0], grid)
    ys = np.linspace(lo[1], hi[1], grid)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    vals = ev.eval_batch(pts)
    with open(path, "w") as f:
        f.write("x,y,value\n")
        for (x, y), v in zip(pts, vals):
            if np.isfinite(v):
                f.write(f"{x!r},{y!r},{v!r}\n")
