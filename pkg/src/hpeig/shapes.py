"""Hierarchical shape functions on the reference triangle and square.

Vertex functions are the usual hats/barycentrics. Edge and interior
functions are built from integrated Legendre (Lobatto) polynomials, so
the basis of degree p is contained verbatim in the basis of degree p+1.

Reference elements: square [-1,1]^2 with corners CCW from (-1,-1);
triangle with vertices (0,0), (1,0), (0,1). Edge slot k joins local
vertices k and k+1 (mod n); the local edge parameter runs from vertex k
to vertex k+1.

Roles are tuples: ("v", k), ("e", slot, degree) with degree >= 2, or
("i", multi_index). Quad interior multi-indices are (i, j) with
i, j >= 2 (tensor Lobatto degrees); triangle interior multi-indices are
(n1, n2) with n1, n2 >= 1 and total polynomial degree n1 + n2 + 1.
"""
from __future__ import annotations

import numpy as np

from .geometry import QUAD, TRIANGLE

QUAD_REF_CORNERS = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])
TRI_REF_CORNERS = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])


def legendre_table(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Legendre P_0..P_n with first and second derivatives at x."""
    x = np.asarray(x, dtype=float)
    P = np.zeros((n + 1,) + x.shape)
    dP = np.zeros_like(P)
    d2P = np.zeros_like(P)
    P[0] = 1.0
    if n >= 1:
        P[1] = x
        dP[1] = 1.0
    for k in range(1, n):
        P[k + 1] = ((2 * k + 1) * x * P[k] - k * P[k - 1]) / (k + 1)
        dP[k + 1] = dP[k - 1] + (2 * k + 1) * P[k]
        d2P[k + 1] = d2P[k - 1] + (2 * k + 1) * dP[k]
    return P, dP, d2P


def lobatto_table(kmax: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lobatto functions l_0..l_kmax and derivatives at x.

    l_0, l_1 are the endpoint hats; l_k for k >= 2 is the scaled
    integrated Legendre polynomial, vanishing at both endpoints.
    """
    x = np.asarray(x, dtype=float)
    P, dP, _ = legendre_table(kmax, x)
    L = np.zeros((kmax + 1,) + x.shape)
    dL = np.zeros_like(L)
    L[0] = (1.0 - x) / 2
    dL[0] = -0.5
    if kmax >= 1:
        L[1] = (1.0 + x) / 2
        dL[1] = 0.5
    for k in range(2, kmax + 1):
        c = 1.0 / np.sqrt(2.0 * (2 * k - 1))
        L[k] = c * (P[k] - P[k - 2])
        dL[k] = c * (dP[k] - dP[k - 2])
    return L, dL


def kernel_table(mmax: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kernel polynomials phi_0..phi_mmax with l_{m+2} = l_0 * l_1 * phi_m."""
    x = np.asarray(x, dtype=float)
    _, dP, d2P = legendre_table(mmax + 2, x)
    K = np.zeros((mmax + 1,) + x.shape)
    dK = np.zeros_like(K)
    for m in range(mmax + 1):
        c = -4.0 * np.sqrt((2 * m + 3) / 2.0) / ((m + 1) * (m + 2))
        K[m] = c * dP[m + 1]
        dK[m] = c * d2P[m + 1]
    return K, dK


def _max_degree(roles) -> int:
    d = 1
    for role in roles:
        if role[0] == "e":
            d = max(d, role[2])
        elif role[0] == "i":
            d = max(d, max(role[1]) + 2)
    return d


def tabulate_basis(kind: str, roles, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and reference gradients of the requested basis functions.

    Returns (vals, grads) with shapes (nb, npts) and (nb, npts, 2).
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    nb, npts = len(roles), pts.shape[0]
    vals = np.zeros((nb, npts))
    grads = np.zeros((nb, npts, 2))
    kmax = _max_degree(roles) + 2
    if kind == QUAD:
        xi, eta = pts[:, 0], pts[:, 1]
        tabs = {}

        def lob(arr_key, arr):
            if arr_key not in tabs:
                tabs[arr_key] = lobatto_table(kmax, arr)
            return tabs[arr_key]

        Lx, dLx = lob("x", xi)
        Ly, dLy = lob("y", eta)
        Lmx, dLmx = lob("-x", -xi)
        Lmy, dLmy = lob("-y", -eta)
        for idx, role in enumerate(roles):
            if role[0] == "v":
                k = role[1]
                ix, iy = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}[k]
                vals[idx] = Lx[ix] * Ly[iy]
                grads[idx, :, 0] = dLx[ix] * Ly[iy]
                grads[idx, :, 1] = Lx[ix] * dLy[iy]
            elif role[0] == "e":
                slot, deg = role[1], role[2]
                if slot == 0:
                    vals[idx] = Lx[deg] * Ly[0]
                    grads[idx, :, 0] = dLx[deg] * Ly[0]
                    grads[idx, :, 1] = Lx[deg] * dLy[0]
                elif slot == 1:
                    vals[idx] = Ly[deg] * Lx[1]
                    grads[idx, :, 0] = Ly[deg] * dLx[1]
                    grads[idx, :, 1] = dLy[deg] * Lx[1]
                elif slot == 2:
                    vals[idx] = Lmx[deg] * Ly[1]
                    grads[idx, :, 0] = -dLmx[deg] * Ly[1]
                    grads[idx, :, 1] = Lmx[deg] * dLy[1]
                else:
                    vals[idx] = Lmy[deg] * Lx[0]
                    grads[idx, :, 0] = Lmy[deg] * dLx[0]
                    grads[idx, :, 1] = -dLmy[deg] * Lx[0]
            else:
                i, j = role[1]
                vals[idx] = Lx[i] * Ly[j]
                grads[idx, :, 0] = dLx[i] * Ly[j]
                grads[idx, :, 1] = Lx[i] * dLy[j]
        return vals, grads

    if kind != TRIANGLE:
        raise ValueError(f"unknown element kind {kind!r}")
    x, y = pts[:, 0], pts[:, 1]
    lam = np.stack([1.0 - x - y, x, y])
    glam = np.array([(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)])
    edge_pairs = ((0, 1), (1, 2), (2, 0))
    mker = max(2, kmax)
    ker = {}

    def kernels(a, b):
        if (a, b) not in ker:
            ker[(a, b)] = kernel_table(mker, lam[b] - lam[a])
        return ker[(a, b)]

    for idx, role in enumerate(roles):
        if role[0] == "v":
            k = role[1]
            vals[idx] = lam[k]
            grads[idx, :, 0] = glam[k, 0]
            grads[idx, :, 1] = glam[k, 1]
        elif role[0] == "e":
            slot, deg = role[1], role[2]
            a, b = edge_pairs[slot]
            K, dK = kernels(a, b)
            m = deg - 2
            prod = lam[a] * lam[b]
            dprod = np.outer(glam[a], np.ones_like(x)) * lam[b] \
                + np.outer(glam[b], np.ones_like(x)) * lam[a]
            darg = glam[b] - glam[a]
            vals[idx] = prod * K[m]
            grads[idx, :, 0] = dprod[0] * K[m] + prod * dK[m] * darg[0]
            grads[idx, :, 1] = dprod[1] * K[m] + prod * dK[m] * darg[1]
        else:
            n1, n2 = role[1]
            K32, dK32 = kernels(1, 2)
            K21, dK21 = kernels(0, 1)
            f1, df1 = K32[n1 - 1], dK32[n1 - 1]
            f2, df2 = K21[n2 - 1], dK21[n2 - 1]
            bub = lam[0] * lam[1] * lam[2]
            dbub_x = glam[0, 0] * lam[1] * lam[2] + lam[0] * glam[1, 0] * lam[2] \
                + lam[0] * lam[1] * glam[2, 0]
            dbub_y = glam[0, 1] * lam[1] * lam[2] + lam[0] * glam[1, 1] * lam[2] \
                + lam[0] * lam[1] * glam[2, 1]
            d1 = glam[2] - glam[1]
            d2 = glam[1] - glam[0]
            vals[idx] = bub * f1 * f2
            grads[idx, :, 0] = dbub_x * f1 * f2 + bub * df1 * d1[0] * f2 \
                + bub * f1 * df2 * d2[0]
            grads[idx, :, 1] = dbub_y * f1 * f2 + bub * df1 * d1[1] * f2 \
                + bub * f1 * df2 * d2[1]
    return vals, grads


def shape_eval(kind: str, role, point) -> tuple[float, np.ndarray]:
    """Value and reference gradient of one basis function at one point."""
    _check_role(kind, role)
    pt = np.asarray(point, dtype=float)[None, :]
    if not _point_in_reference(kind, pt[0]):
        raise ValueError(f"point {point} outside the reference {kind}")
    vals, grads = tabulate_basis(kind, [role], pt)
    return float(vals[0, 0]), grads[0, 0].copy()


def _check_role(kind, role):
    nverts = 4 if kind == QUAD else 3
    if role[0] == "v":
        if not 0 <= role[1] < nverts:
            raise ValueError(f"vertex index {role[1]} out of range for {kind}")
    elif role[0] == "e":
        if not 0 <= role[1] < nverts:
            raise ValueError(f"edge slot {role[1]} out of range for {kind}")
        if role[2] < 2:
            raise ValueError("edge functions start at degree 2")
    elif role[0] == "i":
        mi = role[1]
        if kind == QUAD:
            if min(mi) < 2:
                raise ValueError("quad interior indices start at 2")
        else:
            if min(mi) < 1:
                raise ValueError("triangle interior indices start at 1")
    else:
        raise ValueError(f"unknown role {role!r}")


def _point_in_reference(kind, p, tol=1e-12) -> bool:
    if kind == QUAD:
        return bool(np.all(np.abs(p) <= 1 + tol))
    return p[0] >= -tol and p[1] >= -tol and p[0] + p[1] <= 1 + tol
