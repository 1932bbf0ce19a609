"""Reference-to-physical element maps: affine, bilinear, arc-blended.

Curved elements carry exactly one circular-arc edge; the arc is blended
into the straight map transfinite-style so the mapped edge lies on the
circle exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .geometry import QUAD, TRIANGLE, ArcSpec, Mesh

AFFINE = "affine"
BILINEAR = "bilinear"
BLENDED = "blended"


def _arc_angles(arc: ArcSpec, pa, pb) -> tuple[float, float]:
    """Arc parameter angles of the two endpoints (pa first)."""
    out = []
    for p in (pa, pb):
        th = math.atan2(p[1] - arc.center.y, p[0] - arc.center.x)
        while th < arc.theta0 - 1e-9:
            th += 2 * math.pi
        while th > arc.theta1 + 1e-9:
            th -= 2 * math.pi
        out.append(th)
    return out[0], out[1]


@dataclass
class ElementMap:
    element_id: int
    kind: str
    map_kind: str
    corners: np.ndarray        # (n, 2) physical corner coordinates
    arc_slot: int | None = None
    arc: ArcSpec | None = None
    _th: tuple[float, float] | None = None  # arc angles at slot start/end

    def points(self, ref: np.ndarray) -> np.ndarray:
        ref = np.atleast_2d(np.asarray(ref, dtype=float))
        if self.kind == TRIANGLE:
            lam = np.stack([1 - ref[:, 0] - ref[:, 1], ref[:, 0], ref[:, 1]])
            pos = lam.T @ self.corners
        else:
            xi, eta = ref[:, 0], ref[:, 1]
            N = np.stack([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                          (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]) / 4
            pos = N.T @ self.corners
        if self.arc_slot is not None:
            s, fac, _, _ = self._blend_params(ref)
            dev = self._deviation(s)
            pos = pos + fac[:, None] * dev
        return pos

    def jacobian(self, ref: np.ndarray) -> np.ndarray:
        """Jacobians dF/d(ref) at each point, shape (n, 2, 2)."""
        ref = np.atleast_2d(np.asarray(ref, dtype=float))
        n = ref.shape[0]
        J = np.zeros((n, 2, 2))
        if self.kind == TRIANGLE:
            v0, v1, v2 = self.corners
            J[:] = np.stack([v1 - v0, v2 - v0], axis=1)
        else:
            xi, eta = ref[:, 0], ref[:, 1]
            c = self.corners
            dN_dxi = np.stack([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)]) / 4
            dN_deta = np.stack([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)]) / 4
            J[:, :, 0] = dN_dxi.T @ c
            J[:, :, 1] = dN_deta.T @ c
        if self.arc_slot is not None:
            s, fac, ds, dfac = self._blend_params(ref)
            dev = self._deviation(s)
            ddev = self._deviation_prime(s)
            for axis in range(2):
                J[:, :, axis] += dfac[:, axis, None] * dev \
                    + (fac * ds[:, axis])[:, None] * ddev
        return J

    # -- blending helpers ---------------------------------------------------

    def _blend_params(self, ref):
        """Edge parameter s in [0,1], blend factor, and their ref-gradients."""
        k = self.arc_slot
        if self.kind == QUAD:
            xi, eta = ref[:, 0], ref[:, 1]
            one = np.ones_like(xi)
            if k == 0:
                t, dt = xi, np.stack([one, 0 * one], axis=1)
                fac, dfac = (1 - eta) / 2, np.stack([0 * one, -one / 2], axis=1)
            elif k == 1:
                t, dt = eta, np.stack([0 * one, one], axis=1)
                fac, dfac = (1 + xi) / 2, np.stack([one / 2, 0 * one], axis=1)
            elif k == 2:
                t, dt = -xi, np.stack([-one, 0 * one], axis=1)
                fac, dfac = (1 + eta) / 2, np.stack([0 * one, one / 2], axis=1)
            else:
                t, dt = -eta, np.stack([0 * one, -one], axis=1)
                fac, dfac = (1 - xi) / 2, np.stack([-one / 2, 0 * one], axis=1)
            s = (t + 1) / 2
            ds = dt / 2
            return s, fac, ds, dfac
        lam = np.stack([1 - ref[:, 0] - ref[:, 1], ref[:, 0], ref[:, 1]])
        glam = np.array([(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)])
        a, b = k, (k + 1) % 3
        denom = lam[a] + lam[b]
        safe = np.maximum(denom, 1e-14)
        s = np.where(denom > 1e-14, lam[b] / safe, 0.0)
        fac = denom
        # fac * grad(s) stays bounded; fold the 1/denom into ds via safe
        ds = (np.outer(np.ones_like(s), glam[b]) * denom[:, None]
              - lam[b][:, None] * np.outer(np.ones_like(s), glam[a] + glam[b]))
        ds = ds / (safe ** 2)[:, None]
        ds[denom <= 1e-14] = 0.0
        dfac = np.outer(np.ones_like(s), glam[a] + glam[b])
        return s, fac, ds, dfac

    def _deviation(self, s):
        th0, th1 = self._th
        th = th0 + s * (th1 - th0)
        arc_pts = np.column_stack([
            self.arc.center.x + self.arc.radius * np.cos(th),
            self.arc.center.y + self.arc.radius * np.sin(th)])
        k = self.arc_slot
        pa = self.corners[k]
        pb = self.corners[(k + 1) % len(self.corners)]
        chord = np.outer(1 - s, pa) + np.outer(s, pb)
        return arc_pts - chord

    def _deviation_prime(self, s):
        th0, th1 = self._th
        th = th0 + s * (th1 - th0)
        dth = th1 - th0
        darc = np.column_stack([-np.sin(th), np.cos(th)]) * self.arc.radius * dth
        k = self.arc_slot
        pa = self.corners[k]
        pb = self.corners[(k + 1) % len(self.corners)]
        return darc - (pb - pa)[None, :]


def element_map(mesh: Mesh, element_id: int) -> ElementMap:
    """Build the map for one element; raises GeometryError on degeneracy."""
    el = mesh.elements[element_id]
    corners = mesh.coords()[list(el.vertices)].copy()
    arc_slot = None
    arc = None
    n = len(el.vertices)
    for k in range(n):
        edge = mesh.edges[el.edges[k]]
        if edge.arc is not None:
            if arc_slot is not None:
                raise GeometryError(
                    f"element {element_id} has more than one arc edge")
            arc_slot, arc = k, edge.arc
    if arc_slot is None:
        map_kind = AFFINE if el.kind == TRIANGLE else BILINEAR
        emap = ElementMap(element_id, el.kind, map_kind, corners)
    else:
        pa = corners[arc_slot]
        pb = corners[(arc_slot + 1) % n]
        th = _arc_angles(arc, pa, pb)
        emap = ElementMap(element_id, el.kind, BLENDED, corners,
                          arc_slot, arc, th)
    _check_jacobian(emap)
    return emap


_CHECK_PTS = {
    TRIANGLE: np.array([(0.2, 0.2), (0.6, 0.2), (0.2, 0.6), (1 / 3, 1 / 3)]),
    QUAD: np.array([(-0.7, -0.7), (0.7, -0.7), (0.7, 0.7), (-0.7, 0.7),
                    (0.0, 0.0)]),
}


def _check_jacobian(emap: ElementMap):
    J = emap.jacobian(_CHECK_PTS[emap.kind])
    det = np.linalg.det(J)
    if np.any(det <= 0):
        raise GeometryError(
            f"element {emap.element_id}: nonpositive Jacobian determinant "
            f"(min {det.min():.3e})")


def jacobian_data(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Determinants and inverse-transposes for a batch of Jacobians."""
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invT = np.empty_like(J)
    invT[:, 0, 0] = J[:, 1, 1]
    invT[:, 1, 1] = J[:, 0, 0]
    invT[:, 0, 1] = -J[:, 1, 0]
    invT[:, 1, 0] = -J[:, 0, 1]
    invT /= det[:, None, None]
    return det, invT
