"""Quadrature rules on the reference square and triangle."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .geometry import QUAD, TRIANGLE

_MAX_DEGREE = 200


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, 2) reference coordinates
    weights: np.ndarray  # (n,), positive, summing to the reference measure

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=None)
def quadrature_for(kind: str, degree: int) -> QuadratureRule:
    """Rule integrating polynomials exactly up to `degree`.

    Quadrilaterals: per-variable degree on [-1,1]^2. Triangles: total
    degree on the unit triangle, via a collapsed (Duffy) tensor rule.
    """
    if degree < 0:
        raise ConfigurationError("quadrature degree must be nonnegative")
    if degree > _MAX_DEGREE:
        raise ConfigurationError(
            f"quadrature degree {degree} beyond supported range {_MAX_DEGREE}")
    if kind == QUAD:
        n = (degree + 2) // 2
        x, w = _gauss(max(n, 1))
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]),
                              W.ravel().copy())
    if kind != TRIANGLE:
        raise ConfigurationError(f"unknown element kind {kind!r}")
    # Duffy collapse: x = u (1 - v), y = v maps [0,1]^2 onto the triangle
    # with Jacobian (1 - v); a total-degree-d polynomial becomes degree d
    # in u and d+1 in v.
    nu = max((degree + 2) // 2, 1)
    nv = max((degree + 3) // 2, 1)
    gu, wu = _gauss(nu)
    gv, wv = _gauss(nv)
    u = (gu + 1) / 2
    v = (gv + 1) / 2
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv) / 4 * (1 - V)
    pts = np.column_stack([(U * (1 - V)).ravel(), V.ravel()])
    return QuadratureRule(pts, W.ravel().copy())
