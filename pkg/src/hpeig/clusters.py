"""Cluster-level error quantities: Gram matrices, constants, trace
bounds, Hausdorff estimates, subspace gaps, Bauer-Fike bounds,
effectivities.

All operations are pure matrix computations on immutable inputs; the
within-cluster eigenvector basis is arbitrary on degenerate blocks and
every reported quantity is invariant under M-orthogonal recombination
inside such a block.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
import scipy.linalg as sla

from .errors import InvariantViolation, PoleError
from .estimator import ErrorFunction
from .refspace import ReferenceSpectrum

_PSD_SLACK = 1e-12


@dataclass(frozen=True)
class GramPair:
    """G = diag of approximate eigenvalues; H_tilde from error functions."""
    G: np.ndarray        # (r,) diagonal entries
    H_tilde: np.ndarray  # (r, r) symmetric PSD

    def __post_init__(self):
        if np.any(self.G <= 0):
            raise InvariantViolation("G must have positive diagonal")
        H = self.H_tilde
        if not np.allclose(H, H.T, rtol=0, atol=0):
            raise InvariantViolation("H_tilde must be exactly symmetric")
        scale = float(np.linalg.norm(H, 2)) if H.size else 0.0
        if scale > 0 and float(np.linalg.eigvalsh(H)[0]) < -_PSD_SLACK * scale:
            raise InvariantViolation("H_tilde is not positive semidefinite")


def gram_matrices(errors: list[ErrorFunction], values, K_WW) -> GramPair:
    """H~_ij = B(eps_j, eps_i) and the diagonal G of eigenvalues."""
    r = len(errors)
    if r < 1:
        raise ValueError("cluster must contain at least one pair")
    E = np.column_stack([e.coeffs for e in errors])
    H = E.T @ (K_WW @ E)
    H = (H + H.T) / 2
    G = np.asarray(values, dtype=float)[:r].copy()
    return GramPair(G, H)


def reference_H(embedded_vectors: np.ndarray, ref: ReferenceSpectrum,
                cluster_indices) -> np.ndarray:
    """Gram matrix H_ij = B((I-S)phi_j, (I-S)phi_i) against the reference
    invariant subspace spanned by the eigenpairs in `cluster_indices`
    (0-based indices into the reference spectrum)."""
    idx = list(cluster_indices)
    if any(i < 0 or i >= len(ref.values) for i in idx):
        raise ValueError("cluster index outside the reference spectrum")
    Phi = np.atleast_2d(embedded_vectors.T).T
    H = Phi.T @ (ref.K @ Phi)
    for i in idx:
        psi = ref.vectors[:, i]
        b = Phi.T @ (ref.K @ psi)
        H -= np.outer(b, b) / ref.values[i]
    return (H + H.T) / 2


def constant_C(mu_hats, spectrum) -> float:
    """The spectral distance constant for a cluster.

    `spectrum` is either a finite list of spectrum points outside the
    cluster, or an interval (a, b) containing the cluster and excluding
    the rest of the spectrum.
    """
    mus = np.atleast_1d(np.asarray(mu_hats, dtype=float))
    if isinstance(spectrum, tuple) and len(spectrum) == 2 \
            and np.isscalar(spectrum[0]):
        a, b = float(spectrum[0]), float(spectrum[1])
        if not 0 <= a < b:
            raise ValueError("interval must satisfy 0 <= a < b")
        mu1, mur = float(mus.min()), float(mus.max())
        if mu1 <= a or mur >= b:
            raise PoleError(
                f"cluster [{mu1}, {mur}] not contained in ({a}, {b})")
        left = a / (mu1 - a) if a > 0 else 0.0
        return max(left, b / (b - mur))
    xs = np.concatenate([[0.0], np.asarray(spectrum, dtype=float).ravel()])
    best = 0.0
    for mu in mus:
        gaps = np.abs(xs - mu)
        if np.any(gaps < 1e-12 * np.maximum(np.abs(xs), mu)):
            raise PoleError(f"shift {mu} collides with an excluded spectrum point")
        with np.errstate(divide="ignore"):
            best = max(best, float(np.max(np.where(xs > 0, xs / gaps, 0.0))))
    return best


@dataclass(frozen=True)
class ClusterBounds:
    eigenvalue_trace: float
    gap_sq_trace: float
    single_eigenvalue: np.ndarray
    single_vector: np.ndarray


def cluster_bounds(gp: GramPair, C: float) -> ClusterBounds:
    """Trace bounds (sum of eigenvalue errors; squared relative subspace
    error) and the per-pair bounds, with the equivalence constant set
    to 1."""
    h = np.diag(gp.H_tilde)
    return ClusterBounds(
        eigenvalue_trace=float(C ** 2 * np.sum(h)),
        gap_sq_trace=float(C ** 2 * np.sum(h / gp.G)),
        single_eigenvalue=C ** 2 * h,
        single_vector=C * np.sqrt(np.maximum(h, 0.0)),
    )


def general_trace_bound(G_full: np.ndarray, C: float, source_norms_sq) -> float:
    """Trace bound for a non-orthogonal basis: C^2 * sum of squared source
    errors / lambda_min(G)."""
    lam_min = float(np.linalg.eigvalsh((G_full + G_full.T) / 2)[0])
    if lam_min <= 0:
        raise ValueError("G must be positive definite")
    return C ** 2 * float(np.sum(source_norms_sq)) / lam_min


def hausdorff_distance(A, B) -> float:
    A = np.atleast_1d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    if A.size == 0 or B.size == 0:
        raise ValueError("hausdorff_distance requires non-empty sets")
    d = np.abs(A[:, None] - B[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class SpectralEstimates:
    hausdorff_estimate: float   # lambda_max(H~)
    gap_estimate: float         # sqrt(lambda_max(G^-1 H~))
    trace_gap_estimate: float   # sqrt(trace(G^-1 H~))
    spectrum: np.ndarray        # Spec(H~, G), ascending


def spectral_estimates(gp: GramPair) -> SpectralEstimates:
    kappa = sla.eigh(gp.H_tilde, np.diag(gp.G), eigvals_only=True)
    kappa = np.maximum(kappa, 0.0)
    lam_max = float(np.linalg.eigvalsh(gp.H_tilde)[-1]) if gp.H_tilde.size else 0.0
    return SpectralEstimates(
        hausdorff_estimate=max(lam_max, 0.0),
        gap_estimate=math.sqrt(float(kappa[-1])),
        trace_gap_estimate=math.sqrt(float(np.sum(kappa))),
        spectrum=kappa,
    )


def bauer_fike_bound(H: np.ndarray, H_tilde: np.ndarray, G: np.ndarray,
                     p: int | float = 2):
    """Hausdorff distance between Spec(H,G) and Spec(H~,G) and its matrix
    norm bound; the inequality itself is asserted.

    Returns (dist, bound, tightness)."""
    if p not in (1, 2, np.inf):
        raise ValueError("matrix norm selector must be 1, 2, or inf")
    G = np.atleast_1d(np.asarray(G, dtype=float))
    Gm = np.diag(G) if G.ndim == 1 else G
    K = sla.eigh(np.asarray(H, dtype=float), Gm, eigvals_only=True)
    K_t = sla.eigh(np.asarray(H_tilde, dtype=float), Gm, eigvals_only=True)
    dist = hausdorff_distance(K, K_t)
    mu1 = float(np.min(np.diag(Gm)))
    bound = float(np.linalg.norm(np.asarray(H) - np.asarray(H_tilde), p)) / mu1
    if dist > bound + _PSD_SLACK:
        raise InvariantViolation(
            f"Bauer-Fike inequality violated: dist {dist} > bound {bound}")
    tightness = dist / bound if bound > 0 else None
    return dist, bound, tightness


@dataclass(frozen=True)
class ModeEstimates:
    energy_sq: float
    l2: float
    energy: float


@dataclass(frozen=True)
class ModeReference:
    eigenvalue_gap: float  # lambda_hat - lambda
    l2_error: float
    energy_error: float


@dataclass(frozen=True)
class EffectivityRecord:
    eigenvalue: float | None
    l2: float | None
    energy: float | None


def effectivities(est: ModeEstimates, ref: ModeReference) -> EffectivityRecord:
    """Estimated over true error; None marks a converged (zero) denominator."""
    def ratio(num, den):
        return None if den <= 0 else num / den
    return EffectivityRecord(
        eigenvalue=ratio(est.energy_sq, ref.eigenvalue_gap),
        l2=ratio(est.l2, ref.l2_error),
        energy=ratio(est.energy, ref.energy_error),
    )


def identity_check(ref: ReferenceSpectrum, psi_hat: np.ndarray, i: int,
                   lam_hat: float) -> float:
    """Residual of the one-pair eigenvalue identity evaluated in the
    reference space: ||(I-S)psi_hat||_E^2 - lam_i ||(I-S)psi_hat||_0^2
    against lam_hat - lam_i, with S the projector onto the i-th
    reference eigenvector. psi_hat must be M-normalized with
    lam_hat = ||psi_hat||_E^2 for the identity to be exact."""
    psi = ref.vectors[:, i]
    lam_i = float(ref.values[i])
    alpha = float(psi_hat @ (ref.M @ psi))
    e = psi_hat - alpha * psi
    lhs = float(e @ (ref.K @ e)) - lam_i * float(e @ (ref.M @ e))
    return abs(lhs - (lam_hat - lam_i))


# ---------------------------------------------------------------------------
# cluster report
# ---------------------------------------------------------------------------

@dataclass
class ClusterReport:
    r: int
    values: list[float]
    trace_eigenvalue_bound: float | None
    trace_gap_bound: float | None
    hausdorff_estimate: float
    gap_estimate: float
    trace_gap_estimate: float
    c_constant: float | None = None
    bauer_fike_bound: float | None = None
    bauer_fike_dist: float | None = None
    ref_hausdorff: float | None = None
    ref_gap: float | None = None
    hausdorff_effectivity: float | None = None
    gap_effectivity: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["values"] = [float(v) for v in self.values]
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def build_cluster_report(gp: GramPair, ref: ReferenceSpectrum | None = None,
                         embedded_vectors: np.ndarray | None = None,
                         cluster_start: int = 0) -> ClusterReport:
    """Assemble every cluster quantity for one discretization level.

    With a reference spectrum the report adds the spectral-distance
    constant (interval form around the cluster), the Bauer-Fike pair,
    and the reference Hausdorff distance / subspace gap with their
    effectivities.
    """
    r = len(gp.G)
    est = spectral_estimates(gp)
    report = ClusterReport(
        r=r,
        values=[float(v) for v in gp.G],
        trace_eigenvalue_bound=None,
        trace_gap_bound=None,
        hausdorff_estimate=est.hausdorff_estimate,
        gap_estimate=est.gap_estimate,
        trace_gap_estimate=est.trace_gap_estimate,
    )
    if ref is None:
        return report
    lo = cluster_start
    hi = lo + r
    if hi >= len(ref.values):
        raise ValueError("reference spectrum too short for the cluster")
    a = float(ref.values[lo - 1]) if lo > 0 else 0.0
    b = float(ref.values[hi])
    try:
        C = constant_C(gp.G, (a, b))
        bounds = cluster_bounds(gp, C)
        report.c_constant = C
        report.trace_eigenvalue_bound = bounds.eigenvalue_trace
        report.trace_gap_bound = bounds.gap_sq_trace
    except PoleError:
        pass
    report.ref_hausdorff = hausdorff_distance(ref.values[lo:hi], gp.G)
    if report.ref_hausdorff > 0:
        report.hausdorff_effectivity = est.hausdorff_estimate / report.ref_hausdorff
    if embedded_vectors is not None:
        H = reference_H(embedded_vectors, ref, range(lo, hi))
        dist, bound, _ = bauer_fike_bound(H, gp.H_tilde, gp.G)
        report.bauer_fike_bound = bound
        report.bauer_fike_dist = dist
        kappa = sla.eigh(H, np.diag(gp.G), eigvals_only=True)
        report.ref_gap = math.sqrt(max(0.0, float(kappa[-1])))
        if report.ref_gap > 0:
            report.gap_effectivity = est.gap_estimate / report.ref_gap
    return report
