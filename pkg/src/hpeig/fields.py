"""Evaluation of finite element fields at arbitrary physical points.

Forward evaluation (per-element quadrature sampling) is exact and cheap;
point evaluation locates each query point by bounding-box candidates and
a vectorized Newton inversion of the element map.
"""
from __future__ import annotations

import numpy as np

from .assembly import _tables
from .geometry import QUAD, TRIANGLE, Mesh
from .mapping import element_map, jacobian_data
from .quadrature import quadrature_for
from .shapes import _max_degree, tabulate_basis
from .spaces import DofMap

_LOCATE_TOL = 1e-9
_NEWTON_TOL = 1e-11


class FieldEvaluator:
    """Callable view of a coefficient vector as a function on the mesh."""

    def __init__(self, mesh: Mesh, dofmap: DofMap, coeffs: np.ndarray):
        if len(coeffs) != dofmap.n_free:
            raise ValueError("coefficient vector does not match the dof map")
        self.mesh = mesh
        self.dofmap = dofmap
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.n_elements = len(mesh.elements)
        self._emaps = [element_map(mesh, t) for t in range(self.n_elements)]
        self._local: list[np.ndarray] = []
        for t in range(self.n_elements):
            ed = dofmap.element_dofs[t]
            free = dofmap.free_index[ed.gdofs]
            c = np.where(free >= 0, self.coeffs[np.maximum(free, 0)], 0.0)
            self._local.append(c * ed.signs)
        self._bboxes = self._build_bboxes()
        self.max_degree = max(
            (_max_degree(dofmap.element_dofs[t].roles) for t in range(self.n_elements)),
            default=1)

    def _build_bboxes(self) -> np.ndarray:
        boxes = np.empty((self.n_elements, 4))
        coords = self.mesh.coords()
        for t, el in enumerate(self.mesh.elements):
            pts = [coords[v] for v in el.vertices]
            for e in el.edges:
                edge = self.mesh.edges[e]
                if edge.arc is not None:
                    th = np.linspace(edge.arc.theta0, edge.arc.theta1, 7)
                    pts.extend(np.array(edge.arc.point_at(t_)) for t_ in th)
            pts = np.array(pts)
            lo = pts.min(axis=0)
            hi = pts.max(axis=0)
            pad = 1e-8 * max(1.0, float(np.max(hi - lo)))
            boxes[t] = (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
        return boxes

    # -- forward evaluation --------------------------------------------------

    def quadrature_sample(self, t: int, quad_degree: int):
        """Physical quadrature points, weights, field values and gradients
        on one element."""
        el = self.mesh.elements[t]
        rule = quadrature_for(el.kind, quad_degree)
        emap = self._emaps[t]
        phys = emap.points(rule.points)
        J = emap.jacobian(rule.points)
        det, invT = jacobian_data(J)
        dv = rule.weights * det
        ed = self.dofmap.element_dofs[t]
        vals_tab, grads_tab = _tables(el.kind, ed.roles, quad_degree)
        c = self._local[t]
        vals = c @ vals_tab
        ref_grads = np.einsum("b,bqi->qi", c, grads_tab)
        grads = np.einsum("qij,qj->qi", invT, ref_grads)
        return phys, dv, vals, grads

    def eval_element(self, t: int, ref_pts: np.ndarray) -> np.ndarray:
        ed = self.dofmap.element_dofs[t]
        vals_tab, _ = tabulate_basis(self.mesh.elements[t].kind, list(ed.roles),
                                     np.atleast_2d(ref_pts))
        return self._local[t] @ vals_tab

    # -- point evaluation ----------------------------------------------------

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.eval_batch(points)

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        """Field values at physical points; NaN where no element contains
        the point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(len(pts), np.nan)
        remaining = np.ones(len(pts), dtype=bool)
        for t in range(self.n_elements):
            if not remaining.any():
                break
            x0, x1, y0, y1 = self._bboxes[t]
            cand = remaining & (pts[:, 0] >= x0) & (pts[:, 0] <= x1) \
                & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
            idx = np.nonzero(cand)[0]
            if len(idx) == 0:
                continue
            ref, ok = self._invert(t, pts[idx])
            hit = idx[ok]
            if len(hit) == 0:
                continue
            out[hit] = self.eval_element(t, ref[ok])
            remaining[hit] = False
        return out

    def _invert(self, t: int, pts: np.ndarray):
        kind = self.mesh.elements[t].kind
        emap = self._emaps[t]
        n = len(pts)
        ref = np.tile((1 / 3, 1 / 3) if kind == TRIANGLE else (0.0, 0.0), (n, 1))
        scale = 1.0 + np.linalg.norm(pts, axis=1)
        for _ in range(40):
            resid = pts - emap.points(ref)
            if np.all(np.abs(resid) <= _NEWTON_TOL * scale[:, None]):
                break
            J = emap.jacobian(ref)
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            det = np.where(np.abs(det) < 1e-300, 1e-300, det)
            dx = (J[:, 1, 1] * resid[:, 0] - J[:, 0, 1] * resid[:, 1]) / det
            dy = (-J[:, 1, 0] * resid[:, 0] + J[:, 0, 0] * resid[:, 1]) / det
            ref[:, 0] += dx
            ref[:, 1] += dy
            if kind == QUAD:
                np.clip(ref, -1.5, 1.5, out=ref)
            else:
                np.clip(ref, -0.5, 1.5, out=ref)
        resid = pts - emap.points(ref)
        converged = np.all(np.abs(resid) <= 100 * _NEWTON_TOL * scale[:, None], axis=1)
        if kind == QUAD:
            inside = np.all(np.abs(ref) <= 1 + _LOCATE_TOL, axis=1)
        else:
            inside = (ref[:, 0] >= -_LOCATE_TOL) & (ref[:, 1] >= -_LOCATE_TOL) \
                & (ref.sum(axis=1) <= 1 + _LOCATE_TOL)
        return ref, converged & inside
